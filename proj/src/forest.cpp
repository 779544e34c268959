#include "drivenet/forest.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <string>

#include "drivenet/error.hpp"

namespace drivenet {

namespace {

std::vector<int64_t> count_classes(const std::vector<int>& labels,
                                   const std::vector<int64_t>& rows, int n_classes) {
  std::vector<int64_t> counts(static_cast<size_t>(n_classes), 0);
  for (int64_t r : rows) ++counts[static_cast<size_t>(labels[static_cast<size_t>(r)])];
  return counts;
}

bool is_pure(const std::vector<int64_t>& counts) {
  int nonzero = 0;
  for (int64_t c : counts)
    if (c > 0) ++nonzero;
  return nonzero <= 1;
}

}  // namespace

void ForestConfig::validate() const {
  if (n_trees <= 0 || max_depth <= 0 || n_candidate_tests <= 0 ||
      n_features_per_test <= 0 || min_samples_leaf <= 0 || n_classes <= 0)
    throw ValueError("forest config: counts and depths must be positive");
  if (min_gain < 0.0f) throw ValueError("forest config: min_gain must be >= 0");
}

float project(const SplitTest& test, const float* feature) {
  float s = 0.0f;
  for (size_t i = 0; i < test.feature_indices.size(); ++i)
    s += test.weights[i] * feature[test.feature_indices[i]];
  return s;
}

double entropy(const std::vector<int64_t>& class_counts) {
  int64_t total = 0;
  for (int64_t c : class_counts) {
    if (c < 0) throw ValueError("entropy: negative class count");
    total += c;
  }
  if (total == 0) throw ValueError("entropy: all class counts are zero");
  double e = 0.0;
  for (int64_t c : class_counts) {
    if (c == 0) continue;
    const double p = static_cast<double>(c) / static_cast<double>(total);
    e -= p * std::log2(p);
  }
  return e;
}

double split_score(const std::vector<int64_t>& left_counts,
                   const std::vector<int64_t>& right_counts) {
  int64_t nl = 0, nr = 0;
  for (int64_t c : left_counts) nl += c;
  for (int64_t c : right_counts) nr += c;
  const int64_t n = nl + nr;
  if (n == 0) throw ValueError("split_score: empty parent set");
  double s = 0.0;
  if (nl > 0) s -= static_cast<double>(nl) / static_cast<double>(n) * entropy(left_counts);
  if (nr > 0) s -= static_cast<double>(nr) / static_cast<double>(n) * entropy(right_counts);
  return s;
}

std::optional<SplitTest> sample_candidate_test(Rng& rng, const FeatureMatrix& features,
                                               const std::vector<int64_t>& rows,
                                               const ForestConfig& config) {
  const int dim = features.cols;
  const int k = config.n_features_per_test;
  if (dim < k)
    throw ValueError("sample_candidate_test: feature_dim " + std::to_string(dim) +
                     " < n_features_per_test " + std::to_string(k));

  SplitTest test;
  test.feature_indices.reserve(static_cast<size_t>(k));
  while (static_cast<int>(test.feature_indices.size()) < k) {
    const int idx = static_cast<int>(rng.next_below(static_cast<uint64_t>(dim)));
    if (std::find(test.feature_indices.begin(), test.feature_indices.end(), idx) ==
        test.feature_indices.end())
      test.feature_indices.push_back(idx);
  }
  test.weights.reserve(static_cast<size_t>(k));
  for (int i = 0; i < k; ++i)
    test.weights.push_back(static_cast<float>(rng.uniform(-1.0, 1.0)));

  std::vector<float> proj;
  proj.reserve(rows.size());
  for (int64_t r : rows) proj.push_back(project(test, features.row(r)));
  std::sort(proj.begin(), proj.end());
  proj.erase(std::unique(proj.begin(), proj.end()), proj.end());
  if (proj.size() < 2) return std::nullopt;

  const size_t j = static_cast<size_t>(rng.next_below(proj.size() - 1));
  test.threshold = 0.5f * (proj[j] + proj[j + 1]);
  return test;
}

namespace {

int32_t grow_node(const FeatureMatrix& features, const std::vector<int>& labels,
                  std::vector<int64_t> rows, int depth, const ForestConfig& cfg, Rng& rng,
                  Tree& tree) {
  const std::vector<int64_t> counts = count_classes(labels, rows, cfg.n_classes);
  const int64_t total = static_cast<int64_t>(rows.size());

  auto make_leaf = [&]() -> int32_t {
    TreeNode leaf;
    leaf.posterior.resize(static_cast<size_t>(cfg.n_classes));
    for (int c = 0; c < cfg.n_classes; ++c)
      leaf.posterior[static_cast<size_t>(c)] =
          static_cast<float>(static_cast<double>(counts[static_cast<size_t>(c)]) /
                             static_cast<double>(total));
    tree.nodes.push_back(std::move(leaf));
    return static_cast<int32_t>(tree.nodes.size() - 1);
  };

  if (depth >= cfg.max_depth || is_pure(counts)) return make_leaf();

  // pick the best of n_candidate_tests random tests; first best wins ties
  double best_score = 0.0;
  std::optional<SplitTest> best;
  for (int c = 0; c < cfg.n_candidate_tests; ++c) {
    std::optional<SplitTest> cand = sample_candidate_test(rng, features, rows, cfg);
    if (!cand) continue;
    std::vector<int64_t> lc(static_cast<size_t>(cfg.n_classes), 0);
    std::vector<int64_t> rc(static_cast<size_t>(cfg.n_classes), 0);
    for (int64_t r : rows) {
      auto& side = goes_left(*cand, features.row(r)) ? lc : rc;
      ++side[static_cast<size_t>(labels[static_cast<size_t>(r)])];
    }
    const double score = split_score(lc, rc);
    if (!best || score > best_score) {
      best_score = score;
      best = std::move(cand);
    }
  }
  if (!best) return make_leaf();

  const double gain = entropy(counts) + best_score;  // E(Q) − Σ|Qᵢ|/|Q|·E(Qᵢ)
  if (gain < static_cast<double>(cfg.min_gain)) return make_leaf();

  std::vector<int64_t> left_rows, right_rows;
  for (int64_t r : rows)
    (goes_left(*best, features.row(r)) ? left_rows : right_rows).push_back(r);
  if (static_cast<int64_t>(left_rows.size()) < cfg.min_samples_leaf ||
      static_cast<int64_t>(right_rows.size()) < cfg.min_samples_leaf)
    return make_leaf();

  rows.clear();
  rows.shrink_to_fit();

  TreeNode node;
  node.test = std::move(*best);
  tree.nodes.push_back(std::move(node));
  const int32_t me = static_cast<int32_t>(tree.nodes.size() - 1);
  const int32_t l = grow_node(features, labels, std::move(left_rows), depth + 1, cfg, rng, tree);
  const int32_t r = grow_node(features, labels, std::move(right_rows), depth + 1, cfg, rng, tree);
  tree.nodes[static_cast<size_t>(me)].left = l;
  tree.nodes[static_cast<size_t>(me)].right = r;
  return me;
}

void check_training_inputs(const FeatureMatrix& features, const std::vector<int>& labels,
                           const ForestConfig& cfg) {
  cfg.validate();
  if (features.rows == 0) throw ValueError("forest: empty sample set");
  if (features.rows != static_cast<int64_t>(labels.size()))
    throw ValueError("forest: " + std::to_string(features.rows) + " feature rows vs " +
                     std::to_string(labels.size()) + " labels");
  for (int lab : labels)
    if (lab < 0 || lab >= cfg.n_classes)
      throw ValueError("forest: label " + std::to_string(lab) + " outside 0.." +
                       std::to_string(cfg.n_classes - 1));
}

}  // namespace

Tree grow_tree(const FeatureMatrix& features, const std::vector<int>& labels,
               const std::vector<int64_t>& rows, const ForestConfig& config, Rng& rng) {
  check_training_inputs(features, labels, config);
  if (rows.empty()) throw ValueError("grow_tree: empty row set");
  for (int64_t r : rows)
    if (r < 0 || r >= features.rows)
      throw ValueError("grow_tree: row index " + std::to_string(r) + " out of range");
  Tree tree;
  // The root lands at index 0: grow_node pushes a node before its children.
  grow_node(features, labels, rows, 0, config, rng, tree);
  return tree;
}

Tree grow_tree(const FeatureMatrix& features, const std::vector<int>& labels,
               const ForestConfig& config, Rng& rng) {
  std::vector<int64_t> rows(static_cast<size_t>(features.rows));
  for (int64_t i = 0; i < features.rows; ++i) rows[static_cast<size_t>(i)] = i;
  return grow_tree(features, labels, rows, config, rng);
}

RandomForest train_forest(const FeatureMatrix& features, const std::vector<int>& labels,
                          const ForestConfig& config) {
  check_training_inputs(features, labels, config);
  const int64_t n = features.rows;

  RandomForest forest;
  forest.feature_dim = features.cols;
  forest.n_classes = config.n_classes;
  forest.seed = config.seed;
  forest.trees.resize(static_cast<size_t>(config.n_trees));

  std::exception_ptr failure;
#pragma omp parallel for schedule(dynamic)
  for (int t = 0; t < config.n_trees; ++t) {
    try {
      Rng rng(derive_seed(config.seed, static_cast<uint64_t>(t)));
      // bootstrap: n draws with replacement, then the usual growth
      std::vector<int64_t> rows(static_cast<size_t>(n));
      for (int64_t i = 0; i < n; ++i)
        rows[static_cast<size_t>(i)] =
            static_cast<int64_t>(rng.next_below(static_cast<uint64_t>(n)));
      forest.trees[static_cast<size_t>(t)] = grow_tree(features, labels, rows, config, rng);
    } catch (...) {
#pragma omp critical
      if (!failure) failure = std::current_exception();
    }
  }
  if (failure) std::rethrow_exception(failure);
  return forest;
}

const TreeNode& route_to_leaf(const Tree& tree, const float* feature) {
  if (tree.nodes.empty()) throw Error("route_to_leaf: empty tree");
  int32_t at = 0;
  while (!tree.nodes[static_cast<size_t>(at)].is_leaf()) {
    const TreeNode& node = tree.nodes[static_cast<size_t>(at)];
    at = goes_left(node.test, feature) ? node.left : node.right;
  }
  return tree.nodes[static_cast<size_t>(at)];
}

Prediction predict(const RandomForest& forest, const float* feature, int feature_dim) {
  if (feature_dim != forest.feature_dim)
    throw ShapeError("predict: feature dim " + std::to_string(feature_dim) +
                     " does not match forest dim " + std::to_string(forest.feature_dim));
  if (forest.trees.empty()) throw Error("predict: forest has no trees");

  std::vector<double> acc(static_cast<size_t>(forest.n_classes), 0.0);
  for (const Tree& tree : forest.trees) {
    const TreeNode& leaf = route_to_leaf(tree, feature);
    for (int c = 0; c < forest.n_classes; ++c)
      acc[static_cast<size_t>(c)] += leaf.posterior[static_cast<size_t>(c)];
  }

  Prediction p;
  p.posterior.resize(static_cast<size_t>(forest.n_classes));
  const double inv = 1.0 / static_cast<double>(forest.trees.size());
  for (int c = 0; c < forest.n_classes; ++c)
    p.posterior[static_cast<size_t>(c)] = static_cast<float>(acc[static_cast<size_t>(c)] * inv);
  p.label = 0;
  for (int c = 1; c < forest.n_classes; ++c)
    if (p.posterior[static_cast<size_t>(c)] > p.posterior[static_cast<size_t>(p.label)])
      p.label = c;
  return p;
}

Prediction predict(const RandomForest& forest, const std::vector<float>& feature) {
  return predict(forest, feature.data(), static_cast<int>(feature.size()));
}

}  // namespace drivenet
