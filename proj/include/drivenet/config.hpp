#pragma once

#include <cstdint>
#include <string>

#include "drivenet/cascade.hpp"

namespace drivenet {

// Flat key=value run configuration. Defaults reproduce the reference training
// recipe (alpha 0.001, batch 128, 50 epochs, 100 trees, dropout 0.5); only
// `seed` has no default — runs must be reproducible, so wall-clock seeding is
// deliberately impossible.
struct RunConfig {
  std::string manifest;
  std::string out_dir = "out";

  uint64_t seed = 0;
  bool has_seed = false;

  int epochs = 50;
  int batch_size = 128;
  double alpha = 0.001;
  double beta1 = 0.9;
  double beta2 = 0.99;
  double epsilon = 1e-8;
  double dropout = 0.5;
  int dense_width = 128;

  int n_trees = 100;
  int max_depth = 16;
  int n_candidate_tests = 64;
  int n_features_per_test = 8;
  double min_gain = 1e-4;
  int min_samples_leaf = 2;
  std::string forest_input = "features";  // or "logits"

  int k = 5;
  int threads = 0;  // 0 = library default
  bool strict = true;
};

// `origin` names the source in error messages. Unknown keys, duplicate keys,
// and unparsable values all throw ConfigError.
RunConfig parse_config_text(const std::string& text, const std::string& origin);
RunConfig parse_config_file(const std::string& path);

// Range checks; `require_manifest` additionally demands a manifest path.
// Throws ConfigError.
void validate_config(const RunConfig& cfg, bool require_manifest);

CascadeConfig to_cascade_config(const RunConfig& cfg);

}  // namespace drivenet
