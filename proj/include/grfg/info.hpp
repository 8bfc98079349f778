#pragma once

#include <span>
#include <vector>

#include "grfg/common.hpp"

namespace grfg {

struct InfoConfig {
  int n_bins = 20;
  /// Keeps the group distance finite when two features share no information.
  double epsilon = 1e-5;

  void validate() const;
};

using Labels = std::vector<int>;

/// Equal-width binning over [min, max]; constant input maps to all zeros.
Labels discretize(ColumnView v, int n_bins);

/// Plug-in mutual information in nats from joint counts. Labels must be >= 0.
double mutual_information(std::span<const int> a, std::span<const int> b);
/// Plug-in Shannon entropy in nats.
double entropy(std::span<const int> a);

/// Raw class labels for classification, binned target for regression.
Labels target_labels(ColumnView y, const InfoConfig& cfg, Task task);

double relevance(ColumnView f, ColumnView y, const InfoConfig& cfg, Task task);

/// Redundancy/relevance utility of a feature set:
///   U = -(1/|F|^2) sum_{i,j} MI(f_i, f_j) + (1/|F|) sum_f MI(f, y)
/// The double sum runs over all ordered pairs, diagonal included.
double utility(std::span<const ColumnView> features, ColumnView y, const InfoConfig& cfg,
               Task task);

/// Mean over cross pairs of |MI(fi,y) - MI(fj,y)| / (MI(fi,fj) + epsilon).
double group_distance(std::span<const ColumnView> ci, std::span<const ColumnView> cj,
                      ColumnView y, const InfoConfig& cfg, Task task);

/// Mean relevance of the group's features.
double group_relevance(std::span<const ColumnView> c, ColumnView y, const InfoConfig& cfg,
                       Task task);

/// Discretizes a feature set once and memoizes relevance and pairwise MI, so
/// clustering and utility over the same set share the work. Not thread-safe.
class InfoCache {
 public:
  InfoCache(std::span<const ColumnView> features, ColumnView y, const InfoConfig& cfg,
            Task task);

  std::size_t size() const { return labels_.size(); }
  double relevance(std::size_t i) const { return relevance_[i]; }
  double mi(std::size_t i, std::size_t j) const;
  double epsilon() const { return epsilon_; }

  /// Utility of the whole cached set.
  double utility() const;
  double utility(std::span<const std::size_t> subset) const;
  double group_distance(std::span<const std::size_t> ci, std::span<const std::size_t> cj) const;
  double group_relevance(std::span<const std::size_t> c) const;

 private:
  std::vector<Labels> labels_;
  std::vector<double> relevance_;
  mutable std::vector<double> pair_mi_;  // upper triangle incl. diagonal, NaN = not yet computed
  double epsilon_;
};

}  // namespace grfg
