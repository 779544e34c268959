#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "drivenet/feature_matrix.hpp"
#include "drivenet/rng.hpp"

namespace drivenet {

// Oblique node test: w·x over a small feature subset, compared to θ.
// Projection > θ routes left; exactly θ goes right.
struct SplitTest {
  std::vector<int> feature_indices;
  std::vector<float> weights;
  float threshold = 0.0f;
};

float project(const SplitTest& test, const float* feature);

inline bool goes_left(const SplitTest& test, const float* feature) {
  return project(test, feature) > test.threshold;
}

// Stored flat; children are indices into Tree::nodes, -1 marks a leaf.
struct TreeNode {
  SplitTest test;               // decision nodes only
  int32_t left = -1;
  int32_t right = -1;
  std::vector<float> posterior; // leaves only; length n_classes, sums to 1

  bool is_leaf() const { return left < 0; }
};

struct Tree {
  std::vector<TreeNode> nodes;  // root at index 0; never empty once grown
};

struct ForestConfig {
  int n_trees = 100;
  int max_depth = 16;
  int n_candidate_tests = 64;
  int n_features_per_test = 8;
  float min_gain = 1e-4f;       // minimum entropy improvement to keep a split
  int min_samples_leaf = 2;
  int n_classes = 10;
  uint64_t seed = 0;

  void validate() const;  // throws ValueError on non-positive fields
};

struct RandomForest {
  int feature_dim = 0;
  int n_classes = 10;
  uint64_t seed = 0;
  std::vector<Tree> trees;
};

// Shannon entropy in bits of the empirical distribution; 0·log0 := 0.
// Throws ValueError when all counts are zero (or any is negative).
double entropy(const std::vector<int64_t>& class_counts);

// Split objective: the negated size-weighted sum of child entropies,
// ΔE = −Σ (|Qᵢ|/|Q|)·E(Qᵢ). Always ≤ 0; 0 iff both children are pure. An
// empty side contributes nothing. Throws ValueError when both are empty.
double split_score(const std::vector<int64_t>& left_counts,
                   const std::vector<int64_t>& right_counts);

// One random candidate: n_features_per_test distinct indices, uniform[−1,1]
// weights, and a threshold picked as a random midpoint between adjacent
// distinct projections of the node's samples. Returns nullopt when every
// sample projects to the same value (no realizable threshold).
// Draw order is fixed: indices, weights, midpoint.
std::optional<SplitTest> sample_candidate_test(Rng& rng, const FeatureMatrix& features,
                                               const std::vector<int64_t>& rows,
                                               const ForestConfig& config);

// Top-down greedy growth on the given rows (duplicates allowed — bootstrap
// multisets pass through here). A node leafs out at max_depth, on purity, when
// the best candidate improves entropy by less than min_gain, or when a child
// would receive fewer than min_samples_leaf samples.
Tree grow_tree(const FeatureMatrix& features, const std::vector<int>& labels,
               const std::vector<int64_t>& rows, const ForestConfig& config, Rng& rng);
Tree grow_tree(const FeatureMatrix& features, const std::vector<int>& labels,
               const ForestConfig& config, Rng& rng);

// n_trees trees, each on its own bootstrap sample with an Rng derived from
// (seed, tree index) — results do not depend on tree-level scheduling.
RandomForest train_forest(const FeatureMatrix& features, const std::vector<int>& labels,
                          const ForestConfig& config);

const TreeNode& route_to_leaf(const Tree& tree, const float* feature);

struct Prediction {
  int label = 0;                 // argmax of posterior; ties break low
  std::vector<float> posterior;  // mean of per-tree leaf posteriors
};

Prediction predict(const RandomForest& forest, const float* feature, int feature_dim);
Prediction predict(const RandomForest& forest, const std::vector<float>& feature);

}  // namespace drivenet
