#pragma once

#include <vector>

#include "grfg/info.hpp"

namespace grfg {

/// Disjoint, non-empty groups of feature indices covering 0..m-1. Each group
/// is sorted; groups are ordered by their smallest member.
struct GroupPartition {
  std::vector<std::vector<std::size_t>> groups;

  std::size_t size() const { return groups.size(); }
  /// Throws InvariantError unless this is a partition of 0..m-1.
  void check(std::size_t m) const;
};

/// Median of the pairwise singleton distances; the default stop threshold.
/// Returns +inf for a single feature.
double median_singleton_distance(const InfoCache& cache);

/// Agglomerative clustering under the group distance. Starts from singletons
/// and repeatedly merges the closest pair (ties: lowest (i, j)) until the
/// closest distance exceeds `stop_threshold` or one group remains.
/// When `group_counts` is given, the group count after every merge is appended.
GroupPartition m_clustering(const InfoCache& cache, double stop_threshold,
                            std::vector<std::size_t>* group_counts = nullptr);

GroupPartition m_clustering(std::span<const ColumnView> features, ColumnView y,
                            const InfoConfig& cfg, Task task, double stop_threshold);

}  // namespace grfg
