#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "grfg/common.hpp"
#include "grfg/data.hpp"

namespace grfg {

struct ForestConfig {
  std::size_t n_trees = 10;
  std::size_t max_depth = 10;
  std::size_t min_samples_split = 2;
  /// 0 selects ceil(sqrt(m)).
  std::size_t features_per_split = 0;
  bool bootstrap = true;
  std::uint64_t seed = 0;
  /// Worker threads for fold evaluation; results do not depend on it.
  std::size_t threads = 1;

  void validate() const;
  std::size_t split_features(std::size_t m) const;
};

/// One CART tree stored as a flat node array; node 0 is the root.
struct TreeNode {
  int feature = -1;  // -1 marks a leaf
  double threshold = 0.0;
  int left = -1;
  int right = -1;
  double value = 0.0;  // class label or mean
};

class Forest {
 public:
  Forest(Task task, int n_classes) : task_(task), n_classes_(n_classes) {}

  /// Majority vote (ties to the lowest label) or mean over trees.
  double predict_row(std::span<const ColumnView> columns, std::size_t row) const;
  std::vector<double> predict(std::span<const ColumnView> columns) const;

  const std::vector<std::vector<TreeNode>>& trees() const { return trees_; }
  std::vector<std::vector<TreeNode>>& trees() { return trees_; }

 private:
  Task task_;
  int n_classes_;
  std::vector<std::vector<TreeNode>> trees_;
};

/// Trains on the rows listed in `rows` (all rows when empty). For
/// classification the target holds labels 0..n_classes-1.
Forest train_forest(std::span<const ColumnView> columns, ColumnView y, Task task,
                    const ForestConfig& cfg, std::span<const std::size_t> rows = {},
                    int n_classes = 0);

/// Binary (n_classes == 2): F1 of label 1. Otherwise macro F1 over the labels
/// present in either vector. Zero denominators give a per-class F1 of 0.
double f1_score(std::span<const double> y_true, std::span<const double> y_pred, int n_classes);

/// 1 - sum|y - yhat| / sum|y - mean(y)|. Throws for constant y_true.
double one_minus_rae(std::span<const double> y_true, std::span<const double> y_pred);

struct Metrics {
  double score = 0.0;
  std::vector<double> fold_scores;
};

/// Trains on each fold's train rows and scores its test rows; fold f uses
/// forest seed cfg.seed + f. The score is the mean fold score.
Metrics evaluate_cv(std::span<const ColumnView> features, ColumnView y, Task task,
                    const ForestConfig& cfg, const FoldSplit& folds, int n_classes = 0);

}  // namespace grfg
