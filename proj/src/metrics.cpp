#include "drivenet/metrics.hpp"

#include <cstdio>
#include <exception>
#include <ostream>
#include <sstream>
#include <string>

#include "drivenet/error.hpp"
#include "drivenet/rng.hpp"

namespace drivenet {

namespace {

void finish_report(EvalReport& r) {
  const size_t k = static_cast<size_t>(r.n_classes);
  r.per_class_errors_true.assign(k, 0);
  r.per_class_errors_pred.assign(k, 0);
  int64_t trace = 0;
  r.n_samples = 0;
  for (size_t t = 0; t < k; ++t)
    for (size_t p = 0; p < k; ++p) {
      const int64_t c = r.confusion[t * k + p];
      r.n_samples += c;
      if (t == p)
        trace += c;
      else {
        r.per_class_errors_true[t] += c;
        r.per_class_errors_pred[p] += c;
      }
    }
  r.accuracy = static_cast<double>(trace) / static_cast<double>(r.n_samples);
}

}  // namespace

EvalReport evaluate(const std::vector<int>& predictions, const std::vector<int>& truths,
                    int n_classes) {
  if (predictions.size() != truths.size())
    throw ValueError("evaluate: " + std::to_string(predictions.size()) +
                     " predictions vs " + std::to_string(truths.size()) + " truths");
  if (predictions.empty()) throw ValueError("evaluate: empty input");
  if (n_classes <= 0) throw ValueError("evaluate: n_classes must be positive");

  EvalReport r;
  r.n_classes = n_classes;
  r.confusion.assign(static_cast<size_t>(n_classes) * static_cast<size_t>(n_classes), 0);
  for (size_t i = 0; i < truths.size(); ++i) {
    const int t = truths[i], p = predictions[i];
    if (t < 0 || t >= n_classes || p < 0 || p >= n_classes)
      throw ValueError("evaluate: class outside 0.." + std::to_string(n_classes - 1) +
                       " at index " + std::to_string(i));
    ++r.confusion[static_cast<size_t>(t) * static_cast<size_t>(n_classes) +
                  static_cast<size_t>(p)];
  }
  finish_report(r);
  return r;
}

EvalReport merge(const std::vector<EvalReport>& folds) {
  if (folds.empty()) throw ValueError("merge: no reports");
  EvalReport out;
  out.n_classes = folds.front().n_classes;
  out.confusion.assign(folds.front().confusion.size(), 0);
  for (const EvalReport& f : folds) {
    if (f.n_classes != out.n_classes || f.confusion.size() != out.confusion.size())
      throw ValueError("merge: reports disagree on class count");
    for (size_t i = 0; i < out.confusion.size(); ++i) out.confusion[i] += f.confusion[i];
  }
  finish_report(out);
  return out;
}

CrossvalResult crossval(const std::vector<Sample>& dataset, int k,
                        const CascadeConfig& config, std::ostream* progress) {
  const int64_t n = static_cast<int64_t>(dataset.size());
  const FoldPlan plan = kfold_split(n, k, derive_seed(config.seed, 500));

  CrossvalResult result;
  result.folds.reserve(static_cast<size_t>(k));
  for (int f = 0; f < k; ++f) {
    const std::vector<int64_t> train_idx = plan.train_indices(f);
    const std::vector<int64_t> test_idx = plan.test_indices(f);

    std::vector<Sample> train_set;
    train_set.reserve(train_idx.size());
    for (int64_t i : train_idx) train_set.push_back(dataset[static_cast<size_t>(i)]);

    CascadeConfig fold_cfg = config;
    fold_cfg.seed = derive_seed(config.seed, 501 + static_cast<uint64_t>(f));

    DriveNetModel model;
    try {
      model = train_cascade(train_set, fold_cfg, progress);
    } catch (const Error& e) {
      throw Error("fold " + std::to_string(f) + ": " + e.what());
    }

    std::vector<int> preds(test_idx.size()), truths(test_idx.size());
    std::exception_ptr failure;
#pragma omp parallel for schedule(static)
    for (int64_t j = 0; j < static_cast<int64_t>(test_idx.size()); ++j) {
      try {
        const Sample& s = dataset[static_cast<size_t>(test_idx[static_cast<size_t>(j)])];
        preds[static_cast<size_t>(j)] = predict_cascade(model, s.image).label;
        truths[static_cast<size_t>(j)] = s.label;
      } catch (...) {
#pragma omp critical
        if (!failure) failure = std::current_exception();
      }
    }
    if (failure) std::rethrow_exception(failure);

    result.folds.push_back(evaluate(preds, truths, config.arch.n_classes));
    if (progress)
      (*progress) << "fold " << (f + 1) << "/" << k
                  << " accuracy=" << result.folds.back().accuracy << "\n";
  }
  result.pooled = merge(result.folds);
  return result;
}

void write_confusion_csv(std::ostream& out, const EvalReport& report) {
  out << "true\\pred";
  for (int p = 0; p < report.n_classes; ++p) out << ",c" << p;
  out << "\n";
  for (int t = 0; t < report.n_classes; ++t) {
    out << "c" << t;
    for (int p = 0; p < report.n_classes; ++p) out << "," << report.at(t, p);
    out << "\n";
  }
}

std::string summary_text(const std::vector<EvalReport>& folds, const EvalReport& pooled) {
  std::ostringstream os;
  char buf[96];

  os << "Accuracy (%)\n";
  std::snprintf(buf, sizeof(buf), "  pooled  %6.2f   (n=%lld)\n", 100.0 * pooled.accuracy,
                static_cast<long long>(pooled.n_samples));
  os << buf;
  for (size_t f = 0; f < folds.size(); ++f) {
    std::snprintf(buf, sizeof(buf), "  fold %-2zu %6.2f   (n=%lld)\n", f + 1,
                  100.0 * folds[f].accuracy, static_cast<long long>(folds[f].n_samples));
    os << buf;
  }

  os << "\nError count of each class (pooled)\n";
  os << "  class   by true class   false positives\n";
  for (int c = 0; c < pooled.n_classes; ++c) {
    std::snprintf(buf, sizeof(buf), "  c%-6d %13lld %17lld\n", c,
                  static_cast<long long>(pooled.per_class_errors_true[static_cast<size_t>(c)]),
                  static_cast<long long>(pooled.per_class_errors_pred[static_cast<size_t>(c)]));
    os << buf;
  }
  int64_t total = 0;
  for (int64_t e : pooled.per_class_errors_true) total += e;
  std::snprintf(buf, sizeof(buf), "  total  %13lld %17lld\n", static_cast<long long>(total),
                static_cast<long long>(total));
  os << buf;
  return os.str();
}

}  // namespace drivenet
