#include "grfg/cluster.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace grfg {

void GroupPartition::check(std::size_t m) const {
  std::vector<int> seen(m, 0);
  for (const auto& g : groups) {
    if (g.empty()) throw InvariantError("partition has an empty group");
    for (std::size_t i : g) {
      if (i >= m) throw InvariantError("partition index out of range");
      if (seen[i]++) throw InvariantError("partition groups overlap");
    }
  }
  for (int s : seen)
    if (!s) throw InvariantError("partition does not cover every feature");
}

double median_singleton_distance(const InfoCache& cache) {
  const std::size_t m = cache.size();
  if (m < 2) return std::numeric_limits<double>::infinity();
  std::vector<double> d;
  d.reserve(m * (m - 1) / 2);
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = i + 1; j < m; ++j) {
      std::size_t a[] = {i};
      std::size_t b[] = {j};
      d.push_back(cache.group_distance(a, b));
    }
  std::sort(d.begin(), d.end());
  const std::size_t k = d.size();
  return k % 2 ? d[k / 2] : 0.5 * (d[k / 2 - 1] + d[k / 2]);
}

GroupPartition m_clustering(const InfoCache& cache, double stop_threshold,
                            std::vector<std::size_t>* group_counts) {
  const std::size_t m = cache.size();
  if (m == 0) throw Error("m_clustering: empty feature list");
  if (!(stop_threshold > 0.0)) throw Error("m_clustering: stop_threshold must be > 0");

  GroupPartition part;
  for (std::size_t i = 0; i < m; ++i) part.groups.push_back({i});

  while (part.groups.size() > 1) {
    // Distances are recomputed from the definition each round; group sizes
    // stay small, so the quadratic scan is cheap next to the MI work that
    // the cache already memoizes.
    double best = std::numeric_limits<double>::infinity();
    std::size_t bi = 0, bj = 0;
    for (std::size_t i = 0; i < part.groups.size(); ++i)
      for (std::size_t j = i + 1; j < part.groups.size(); ++j) {
        double d = cache.group_distance(part.groups[i], part.groups[j]);
        if (d < best) {
          best = d;
          bi = i;
          bj = j;
        }
      }
    if (best > stop_threshold) break;
    auto& target = part.groups[bi];
    target.insert(target.end(), part.groups[bj].begin(), part.groups[bj].end());
    std::sort(target.begin(), target.end());
    part.groups.erase(part.groups.begin() + static_cast<std::ptrdiff_t>(bj));
    if (group_counts) group_counts->push_back(part.groups.size());
  }
  part.check(m);
  return part;
}

GroupPartition m_clustering(std::span<const ColumnView> features, ColumnView y,
                            const InfoConfig& cfg, Task task, double stop_threshold) {
  if (features.empty()) throw Error("m_clustering: empty feature list");
  InfoCache cache(features, y, cfg, task);
  return m_clustering(cache, stop_threshold);
}

}  // namespace grfg
