#include "drivenet/cascade.hpp"

#include <exception>
#include <ostream>
#include <string>
#include <utility>

#include "drivenet/error.hpp"

namespace drivenet {

namespace {

// inference-mode logits per image, same layout as extract_features
FeatureMatrix extract_logits(const DriveNetCnn& model, const std::vector<Tensor>& images) {
  const int64_t n = static_cast<int64_t>(images.size());
  FeatureMatrix out(n, model.arch.n_classes);
  std::exception_ptr failure;
#pragma omp parallel for schedule(static)
  for (int64_t i = 0; i < n; ++i) {
    try {
      CnnOutput o = forward(model, images[static_cast<size_t>(i)], false, nullptr);
      float* row = out.row(i);
      for (int c = 0; c < model.arch.n_classes; ++c) row[c] = o.logits[c];
    } catch (...) {
#pragma omp critical
      if (!failure) failure = std::current_exception();
    }
  }
  if (failure) std::rethrow_exception(failure);
  return out;
}

std::string fmt(double v) {
  std::string s = std::to_string(v);
  // strip trailing zeros that std::to_string's fixed format pads with
  while (s.size() > 1 && s.back() == '0') s.pop_back();
  if (!s.empty() && s.back() == '.') s.pop_back();
  return s;
}

}  // namespace

DriveNetModel train_cascade(const std::vector<Sample>& dataset, const CascadeConfig& config,
                            std::ostream* progress, TrainLog* log) {
  if (dataset.empty()) throw ValueError("cascade: empty dataset");

  std::vector<Tensor> images;
  std::vector<int> labels;
  images.reserve(dataset.size());
  labels.reserve(dataset.size());
  for (const Sample& s : dataset) {
    images.push_back(s.image);
    labels.push_back(s.label);
  }

  DriveNetModel model;
  model.master_seed = config.seed;
  model.forest_on_logits = config.forest_on_logits;
  model.cnn = build_model(config.arch, derive_seed(config.seed, 100));

  TrainConfig tc = config.cnn;
  tc.seed = derive_seed(config.seed, 101);
  try {
    TrainLog tl = train(model.cnn, images, labels, tc, progress);
    if (log) *log = std::move(tl);
  } catch (const Error& e) {
    throw Error(std::string("cnn stage: ") + e.what());
  }

  ForestConfig fc = config.forest;
  fc.seed = derive_seed(config.seed, 102);
  fc.n_classes = config.arch.n_classes;
  try {
    const FeatureMatrix inputs = config.forest_on_logits
                                     ? extract_logits(model.cnn, images)
                                     : extract_features(model.cnn, images);
    model.forest = train_forest(inputs, labels, fc);
  } catch (const Error& e) {
    throw Error(std::string("forest stage: ") + e.what());
  }

  model.meta = {
      {"epochs", std::to_string(tc.epochs)},
      {"batch_size", std::to_string(tc.batch_size)},
      {"alpha", fmt(tc.adam.alpha)},
      {"beta1", fmt(tc.adam.beta1)},
      {"beta2", fmt(tc.adam.beta2)},
      {"epsilon", fmt(tc.adam.epsilon)},
      {"dropout", fmt(tc.dropout)},
      {"n_trees", std::to_string(fc.n_trees)},
      {"max_depth", std::to_string(fc.max_depth)},
      {"n_candidate_tests", std::to_string(fc.n_candidate_tests)},
      {"n_features_per_test", std::to_string(fc.n_features_per_test)},
      {"min_gain", fmt(fc.min_gain)},
      {"min_samples_leaf", std::to_string(fc.min_samples_leaf)},
      {"forest_input", config.forest_on_logits ? "logits" : "features"},
      {"n_samples", std::to_string(dataset.size())},
      {"seed", std::to_string(config.seed)},
  };
  return model;
}

Prediction predict_cascade(const DriveNetModel& model, const Tensor& image) {
  CnnOutput o = forward(model.cnn, image, false, nullptr);
  const Tensor& vec = model.forest_on_logits ? o.logits : o.features;
  return predict(model.forest, vec.ptr(), static_cast<int>(vec.numel()));
}

}  // namespace drivenet
