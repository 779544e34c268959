#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "doctest.h"
#include "drivenet/cascade.hpp"
#include "drivenet/error.hpp"
#include "drivenet/rng.hpp"

using namespace drivenet;

namespace {

// Compact settings so cascade training stays in the hundreds of milliseconds:
// production geometry, two epochs, a handful of shallow trees.
CascadeConfig quick_config(uint64_t seed) {
  CascadeConfig cfg;
  cfg.cnn.epochs = 2;
  cfg.cnn.batch_size = 16;
  cfg.forest.n_trees = 8;
  cfg.forest.max_depth = 8;
  cfg.forest.n_candidate_tests = 16;
  cfg.forest.n_features_per_test = 8;
  cfg.seed = seed;
  return cfg;
}

// Hand-assembled model on a small geometry; serialization tests don't need a
// trained network, just a structurally faithful one.
DriveNetModel tiny_model(uint64_t seed, bool on_logits = false) {
  CnnArch arch;
  arch.in_h = 12;
  arch.in_w = 16;
  arch.conv1_out = 4;
  arch.conv1_k = 5;
  arch.conv2_out = 6;
  arch.conv2_k = 3;
  arch.feature_width = 10;
  arch.n_classes = 10;

  DriveNetModel model;
  model.cnn = build_model(arch, seed);
  model.forest_on_logits = on_logits;
  model.master_seed = seed;
  model.meta = {{"note", "hand built"}, {"alpha", "0.001"}};

  Rng rng(seed + 1);
  FeatureMatrix fm(40, 10);
  std::vector<int> labels;
  for (int64_t i = 0; i < 40; ++i) {
    for (int j = 0; j < 10; ++j) fm.row(i)[j] = static_cast<float>(rng.uniform(-1.0, 1.0));
    labels.push_back(static_cast<int>(rng.next_below(10)));
  }
  ForestConfig fc;
  fc.n_trees = 4;
  fc.max_depth = 6;
  fc.n_candidate_tests = 8;
  fc.n_features_per_test = 4;
  fc.n_classes = 10;
  fc.seed = seed + 2;
  model.forest = train_forest(fm, labels, fc);
  return model;
}

bool is_truncation_or_format(const std::vector<uint8_t>& bytes) {
  try {
    deserialize_model(bytes);
  } catch (const TruncatedError&) {
    return true;
  } catch (const FormatError&) {
    return true;
  } catch (...) {
    return false;
  }
  return false;  // parsed — corrupt input must never succeed
}

}  // namespace

TEST_CASE("train_cascade: end-to-end on separable synthetic data") {
  const std::vector<Sample> data = synth_dataset(3, 0.03f, 5);
  CascadeConfig cfg = quick_config(51);
  TrainLog log;
  DriveNetModel model = train_cascade(data, cfg, nullptr, &log);

  CHECK(model.forest.feature_dim == 128);
  CHECK(model.forest.n_classes == 10);
  CHECK(model.forest.trees.size() == 8);
  CHECK(model.master_seed == 51);
  CHECK(model.meta.at("forest_input") == "features");
  CHECK(model.meta.at("epochs") == "2");
  CHECK(model.meta.at("n_trees") == "8");
  CHECK(model.meta.at("n_samples") == "30");
  REQUIRE(log.mean_loss.size() == 2);
  REQUIRE(log.train_accuracy.size() == 2);

  int correct = 0;
  for (const Sample& s : data) {
    Prediction p = predict_cascade(model, s.image);
    double sum = 0.0;
    for (float v : p.posterior) sum += v;
    CHECK(sum == doctest::Approx(1.0).epsilon(1e-5));
    if (p.label == s.label) ++correct;
  }
  // two epochs of CNN features + a forest memorize 30 clean rectangles
  CHECK(correct >= 27);
}

TEST_CASE("train_cascade: identical config and data give byte-identical models") {
  const std::vector<Sample> data = synth_dataset(2, 0.02f, 6);
  CascadeConfig cfg = quick_config(61);
  cfg.cnn.epochs = 1;
  DriveNetModel a = train_cascade(data, cfg);
  DriveNetModel b = train_cascade(data, cfg);
  CHECK(serialize_model(a) == serialize_model(b));
}

TEST_CASE("train_cascade: logits mode feeds the forest ten inputs") {
  const std::vector<Sample> data = synth_dataset(2, 0.02f, 7);
  CascadeConfig cfg = quick_config(71);
  cfg.cnn.epochs = 1;
  cfg.forest_on_logits = true;
  DriveNetModel model = train_cascade(data, cfg);
  CHECK(model.forest.feature_dim == 10);
  CHECK(model.meta.at("forest_input") == "logits");
  Prediction p = predict_cascade(model, data[0].image);
  CHECK(p.posterior.size() == 10);
}

TEST_CASE("train_cascade: a one-image dataset memorizes its class") {
  std::vector<Sample> data = synth_dataset(1, 0.0f, 8);
  data.erase(data.begin(), data.begin() + 3);  // keep class 3 first
  data.resize(1);
  REQUIRE(data[0].label == 3);

  CascadeConfig cfg = quick_config(81);
  cfg.cnn.epochs = 1;
  cfg.cnn.batch_size = 1;
  DriveNetModel model = train_cascade(data, cfg);
  Prediction p = predict_cascade(model, data[0].image);
  CHECK(p.label == 3);
  CHECK(p.posterior[3] == doctest::Approx(1.0f));
}

TEST_CASE("train_cascade: stage failures carry the stage tag") {
  const std::vector<Sample> data = synth_dataset(1, 0.0f, 9);

  CascadeConfig bad_cnn = quick_config(91);
  bad_cnn.cnn.epochs = 0;
  try {
    train_cascade(data, bad_cnn);
    FAIL("expected the cnn stage to reject epochs=0");
  } catch (const Error& e) {
    CHECK(std::string(e.what()).find("cnn stage:") != std::string::npos);
  }

  CascadeConfig bad_forest = quick_config(92);
  bad_forest.cnn.epochs = 1;
  bad_forest.forest.n_trees = 0;
  try {
    train_cascade(data, bad_forest);
    FAIL("expected the forest stage to reject n_trees=0");
  } catch (const Error& e) {
    CHECK(std::string(e.what()).find("forest stage:") != std::string::npos);
  }

  CHECK_THROWS_AS(train_cascade({}, quick_config(93)), ValueError);
}

TEST_CASE("predict_cascade: image geometry is validated") {
  DriveNetModel model = tiny_model(100);
  Tensor wrong({1, 12, 17});
  CHECK_THROWS_AS(predict_cascade(model, wrong), ShapeError);
}

TEST_CASE("serialize: round trip is bit-exact both ways") {
  for (const bool logits_mode : {false, true}) {
    DriveNetModel model = tiny_model(110, logits_mode);
    const std::vector<uint8_t> bytes = serialize_model(model);
    DriveNetModel back = deserialize_model(bytes);

    // value-level spot checks
    CHECK(back.master_seed == model.master_seed);
    CHECK(back.forest_on_logits == model.forest_on_logits);
    CHECK(back.meta == model.meta);
    CHECK(back.cnn.arch.in_h == 12);
    CHECK(back.cnn.conv2_w.data == model.cnn.conv2_w.data);
    CHECK(back.forest.trees.size() == model.forest.trees.size());

    // re-serializing the reloaded model reproduces the exact bytes
    CHECK(serialize_model(back) == bytes);

    // routing behaves identically
    Rng rng(111);
    Tensor img({1, 12, 16});
    for (int64_t i = 0; i < img.numel(); ++i) img[i] = rng.next_float();
    Prediction p = predict_cascade(model, img);
    Prediction q = predict_cascade(back, img);
    CHECK(p.label == q.label);
    CHECK(p.posterior == q.posterior);
  }
}

TEST_CASE("serialize: every strict prefix fails loudly") {
  DriveNetModel model = tiny_model(120);
  const std::vector<uint8_t> bytes = serialize_model(model);
  REQUIRE(bytes.size() > 256);

  for (size_t len = 0; len < 64; ++len) {
    std::vector<uint8_t> cut(bytes.begin(), bytes.begin() + static_cast<long>(len));
    CHECK(is_truncation_or_format(cut));
  }
  for (size_t len = 64; len < bytes.size(); len += 509) {
    std::vector<uint8_t> cut(bytes.begin(), bytes.begin() + static_cast<long>(len));
    CHECK(is_truncation_or_format(cut));
  }
  std::vector<uint8_t> nearly(bytes.begin(), bytes.end() - 1);
  CHECK(is_truncation_or_format(nearly));

  // a mid-payload cut specifically reports truncation
  std::vector<uint8_t> mid(bytes.begin(), bytes.begin() + static_cast<long>(bytes.size() / 2));
  CHECK_THROWS_AS(deserialize_model(mid), TruncatedError);
}

TEST_CASE("serialize: wrong magic, unknown version, foreign section tag") {
  DriveNetModel model = tiny_model(130);
  std::vector<uint8_t> bytes = serialize_model(model);

  std::vector<uint8_t> magic = bytes;
  magic[0] = 'X';
  CHECK_THROWS_AS(deserialize_model(magic), FormatError);

  std::vector<uint8_t> version = bytes;
  version[4] = 2;  // little-endian u32 version field
  CHECK_THROWS_AS(deserialize_model(version), VersionError);

  std::vector<uint8_t> tag = bytes;
  tag[8] = 'Z';  // first section tag byte
  CHECK_THROWS_AS(deserialize_model(tag), FormatError);

  CHECK_THROWS_AS(deserialize_model({}), TruncatedError);
}

TEST_CASE("save_model / load_model: file round trip and missing-file error") {
  namespace fs = std::filesystem;
  fs::create_directories("scratch/models");
  const std::string path = "scratch/models/tiny.drvn";

  DriveNetModel model = tiny_model(140);
  save_model(model, path);
  DriveNetModel back = load_model(path);
  CHECK(serialize_model(back) == serialize_model(model));

  CHECK_THROWS_AS(load_model("scratch/models/nope.drvn"), IoError);
}
