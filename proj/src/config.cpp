#include "drivenet/config.hpp"

#include <cctype>
#include <fstream>
#include <set>
#include <sstream>
#include <string>

#include "drivenet/error.hpp"

namespace drivenet {

namespace {

std::string trim(const std::string& s) {
  size_t a = 0, b = s.size();
  while (a < b && std::isspace(static_cast<unsigned char>(s[a]))) ++a;
  while (b > a && std::isspace(static_cast<unsigned char>(s[b - 1]))) --b;
  return s.substr(a, b - a);
}

int parse_int(const std::string& v, const std::string& where) {
  try {
    size_t used = 0;
    const int x = std::stoi(v, &used);
    if (used != v.size()) throw std::invalid_argument(v);
    return x;
  } catch (const std::exception&) {
    throw ConfigError(where + ": `" + v + "` is not an integer");
  }
}

uint64_t parse_u64(const std::string& v, const std::string& where) {
  try {
    size_t used = 0;
    if (!v.empty() && v[0] == '-') throw std::invalid_argument(v);
    const unsigned long long x = std::stoull(v, &used);
    if (used != v.size()) throw std::invalid_argument(v);
    return static_cast<uint64_t>(x);
  } catch (const std::exception&) {
    throw ConfigError(where + ": `" + v + "` is not an unsigned integer");
  }
}

double parse_double(const std::string& v, const std::string& where) {
  try {
    size_t used = 0;
    const double x = std::stod(v, &used);
    if (used != v.size()) throw std::invalid_argument(v);
    return x;
  } catch (const std::exception&) {
    throw ConfigError(where + ": `" + v + "` is not a number");
  }
}

bool parse_bool(const std::string& v, const std::string& where) {
  if (v == "true" || v == "1" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "no") return false;
  throw ConfigError(where + ": `" + v + "` is not a boolean (true/false)");
}

}  // namespace

RunConfig parse_config_text(const std::string& text, const std::string& origin) {
  RunConfig cfg;
  std::istringstream in(text);
  std::string line;
  std::set<std::string> seen;
  size_t lineno = 0;

  while (std::getline(in, line)) {
    ++lineno;
    const std::string stripped = trim(line);
    if (stripped.empty() || stripped[0] == '#') continue;
    const std::string where = origin + ":" + std::to_string(lineno);

    const size_t eq = stripped.find('=');
    if (eq == std::string::npos)
      throw ConfigError(where + ": expected `key = value`, got `" + stripped + "`");
    const std::string key = trim(stripped.substr(0, eq));
    const std::string val = trim(stripped.substr(eq + 1));
    if (key.empty()) throw ConfigError(where + ": empty key");
    if (!seen.insert(key).second) throw ConfigError(where + ": duplicate key `" + key + "`");

    if (key == "manifest") {
      cfg.manifest = val;
    } else if (key == "out_dir") {
      cfg.out_dir = val;
    } else if (key == "seed") {
      cfg.seed = parse_u64(val, where);
      cfg.has_seed = true;
    } else if (key == "epochs") {
      cfg.epochs = parse_int(val, where);
    } else if (key == "batch_size") {
      cfg.batch_size = parse_int(val, where);
    } else if (key == "alpha") {
      cfg.alpha = parse_double(val, where);
    } else if (key == "beta1") {
      cfg.beta1 = parse_double(val, where);
    } else if (key == "beta2") {
      cfg.beta2 = parse_double(val, where);
    } else if (key == "epsilon") {
      cfg.epsilon = parse_double(val, where);
    } else if (key == "dropout") {
      cfg.dropout = parse_double(val, where);
    } else if (key == "dense_width") {
      cfg.dense_width = parse_int(val, where);
    } else if (key == "n_trees") {
      cfg.n_trees = parse_int(val, where);
    } else if (key == "max_depth") {
      cfg.max_depth = parse_int(val, where);
    } else if (key == "n_candidate_tests") {
      cfg.n_candidate_tests = parse_int(val, where);
    } else if (key == "n_features_per_test") {
      cfg.n_features_per_test = parse_int(val, where);
    } else if (key == "min_gain") {
      cfg.min_gain = parse_double(val, where);
    } else if (key == "min_samples_leaf") {
      cfg.min_samples_leaf = parse_int(val, where);
    } else if (key == "forest_input") {
      cfg.forest_input = val;
    } else if (key == "k") {
      cfg.k = parse_int(val, where);
    } else if (key == "threads") {
      cfg.threads = parse_int(val, where);
    } else if (key == "strict") {
      cfg.strict = parse_bool(val, where);
    } else {
      throw ConfigError(where + ": unknown key `" + key + "`");
    }
  }
  return cfg;
}

RunConfig parse_config_file(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw ConfigError("cannot open config file " + path);
  std::ostringstream buf;
  buf << f.rdbuf();
  return parse_config_text(buf.str(), path);
}

void validate_config(const RunConfig& cfg, bool require_manifest) {
  if (!cfg.has_seed) throw ConfigError("config: `seed` is required");
  if (require_manifest && cfg.manifest.empty())
    throw ConfigError("config: `manifest` is required");
  if (cfg.out_dir.empty()) throw ConfigError("config: `out_dir` must not be empty");
  if (cfg.epochs <= 0) throw ConfigError("config: epochs must be positive");
  if (cfg.batch_size <= 0) throw ConfigError("config: batch_size must be positive");
  if (!(cfg.alpha > 0)) throw ConfigError("config: alpha must be positive");
  if (!(cfg.beta1 >= 0 && cfg.beta1 < 1)) throw ConfigError("config: beta1 must be in [0,1)");
  if (!(cfg.beta2 >= 0 && cfg.beta2 < 1)) throw ConfigError("config: beta2 must be in [0,1)");
  if (!(cfg.epsilon > 0)) throw ConfigError("config: epsilon must be positive");
  if (!(cfg.dropout >= 0 && cfg.dropout < 1))
    throw ConfigError("config: dropout must be in [0,1)");
  if (cfg.dense_width <= 0) throw ConfigError("config: dense_width must be positive");
  if (cfg.n_trees <= 0) throw ConfigError("config: n_trees must be positive");
  if (cfg.max_depth <= 0) throw ConfigError("config: max_depth must be positive");
  if (cfg.n_candidate_tests <= 0)
    throw ConfigError("config: n_candidate_tests must be positive");
  if (cfg.n_features_per_test <= 0)
    throw ConfigError("config: n_features_per_test must be positive");
  if (cfg.min_gain < 0) throw ConfigError("config: min_gain must be >= 0");
  if (cfg.min_samples_leaf <= 0)
    throw ConfigError("config: min_samples_leaf must be positive");
  if (cfg.forest_input != "features" && cfg.forest_input != "logits")
    throw ConfigError("config: forest_input must be `features` or `logits`");
  if (cfg.k < 2) throw ConfigError("config: k must be at least 2");
  if (cfg.threads < 0) throw ConfigError("config: threads must be >= 0");
}

CascadeConfig to_cascade_config(const RunConfig& cfg) {
  CascadeConfig out;
  out.arch.feature_width = cfg.dense_width;
  out.cnn.epochs = cfg.epochs;
  out.cnn.batch_size = cfg.batch_size;
  out.cnn.adam.alpha = static_cast<float>(cfg.alpha);
  out.cnn.adam.beta1 = static_cast<float>(cfg.beta1);
  out.cnn.adam.beta2 = static_cast<float>(cfg.beta2);
  out.cnn.adam.epsilon = static_cast<float>(cfg.epsilon);
  out.cnn.dropout = static_cast<float>(cfg.dropout);
  out.forest.n_trees = cfg.n_trees;
  out.forest.max_depth = cfg.max_depth;
  out.forest.n_candidate_tests = cfg.n_candidate_tests;
  out.forest.n_features_per_test = cfg.n_features_per_test;
  out.forest.min_gain = static_cast<float>(cfg.min_gain);
  out.forest.min_samples_leaf = cfg.min_samples_leaf;
  out.forest_on_logits = cfg.forest_input == "logits";
  out.seed = cfg.seed;
  return out;
}

}  // namespace drivenet
