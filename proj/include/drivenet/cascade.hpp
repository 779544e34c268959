#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <string>
#include <vector>

#include "drivenet/cnn.hpp"
#include "drivenet/dataset.hpp"
#include "drivenet/forest.hpp"

namespace drivenet {

struct CascadeConfig {
  CnnArch arch;
  TrainConfig cnn;      // seed field ignored; stage seeds derive from `seed`
  ForestConfig forest;  // seed and n_classes fields likewise derived
  bool forest_on_logits = false;  // feed the forest logits instead of features
  uint64_t seed = 0;              // master seed for every stage
};

struct DriveNetModel {
  DriveNetCnn cnn;
  RandomForest forest;
  bool forest_on_logits = false;
  uint64_t master_seed = 0;
  std::map<std::string, std::string> meta;  // training snapshot, free-form text
};

// Stage 1: train the CNN as a softmax classifier. Stage 2: freeze it, run the
// dataset through in inference mode, train the forest on the resulting
// vectors. Stage errors re-throw tagged with the stage name. `log`, when
// given, receives the CNN's per-epoch curves.
DriveNetModel train_cascade(const std::vector<Sample>& dataset,
                            const CascadeConfig& config, std::ostream* progress = nullptr,
                            TrainLog* log = nullptr);

Prediction predict_cascade(const DriveNetModel& model, const Tensor& image);

// Versioned little-endian `DRVN` container; byte layout in docs/model_format.md.
// Round-trips are bit-exact. Distinct failures: FormatError (bad magic/layout),
// VersionError (unknown version), TruncatedError (data ends early).
std::vector<uint8_t> serialize_model(const DriveNetModel& model);
DriveNetModel deserialize_model(const std::vector<uint8_t>& bytes);

void save_model(const DriveNetModel& model, const std::string& path);
DriveNetModel load_model(const std::string& path);

}  // namespace drivenet
