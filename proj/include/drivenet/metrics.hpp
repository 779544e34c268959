#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "drivenet/cascade.hpp"
#include "drivenet/dataset.hpp"

namespace drivenet {

struct EvalReport {
  int n_classes = 10;
  int64_t n_samples = 0;
  std::vector<int64_t> confusion;  // row-major; rows = true class, cols = predicted
  double accuracy = 0.0;
  std::vector<int64_t> per_class_errors_true;  // off-diagonal row sums
  std::vector<int64_t> per_class_errors_pred;  // off-diagonal column sums

  int64_t at(int true_class, int pred_class) const {
    return confusion[static_cast<size_t>(true_class) * static_cast<size_t>(n_classes) +
                     static_cast<size_t>(pred_class)];
  }
};

EvalReport evaluate(const std::vector<int>& predictions, const std::vector<int>& truths,
                    int n_classes = 10);

// Elementwise sum of fold confusions with derived fields recomputed.
EvalReport merge(const std::vector<EvalReport>& folds);

struct CrossvalResult {
  std::vector<EvalReport> folds;
  EvalReport pooled;  // every sample scored exactly once
};

// Leakage-free protocol: each fold trains a fresh cascade (seed derived from
// the master seed and fold index) on the other k−1 folds, then scores its own.
CrossvalResult crossval(const std::vector<Sample>& dataset, int k,
                        const CascadeConfig& config, std::ostream* progress = nullptr);

void write_confusion_csv(std::ostream& out, const EvalReport& report);

// Plain-text accuracy table plus per-class error counts under both readings
// (by true class, and false positives by predicted class).
std::string summary_text(const std::vector<EvalReport>& folds, const EvalReport& pooled);

}  // namespace drivenet
