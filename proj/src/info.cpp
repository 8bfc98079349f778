#include "grfg/info.hpp"

#include <algorithm>
#include <array>
#include <cstdint>
#include <cmath>
#include <limits>
#include <numeric>

namespace grfg {

void InfoConfig::validate() const {
  if (n_bins < 2) throw Error("n_bins must be >= 2");
  if (!(epsilon > 0.0)) throw Error("epsilon must be > 0");
}

Labels discretize(ColumnView v, int n_bins) {
  if (v.empty()) throw Error("discretize: empty vector");
  if (n_bins < 1) throw Error("discretize: n_bins must be positive");
  auto [lo_it, hi_it] = std::minmax_element(v.begin(), v.end());
  const double lo = *lo_it;
  const double hi = *hi_it;
  Labels out(v.size(), 0);
  if (!(hi > lo)) return out;
  const double width = (hi - lo) / n_bins;
  for (std::size_t i = 0; i < v.size(); ++i) {
    int b = static_cast<int>((v[i] - lo) / width);
    out[i] = std::clamp(b, 0, n_bins - 1);
  }
  return out;
}

namespace {

int cardinality(std::span<const int> a) {
  int k = 0;
  for (int x : a) {
    if (x < 0) throw Error("labels must be non-negative");
    k = std::max(k, x + 1);
  }
  return k;
}

/// c * log(c) for c = 0..n, grown on demand and kept per thread.
const std::vector<double>& xlogx_table(std::size_t n) {
  thread_local std::vector<double> table = {0.0};
  for (std::size_t c = table.size(); c <= n; ++c) {
    const double x = static_cast<double>(c);
    table.push_back(x * std::log(x));
  }
  return table;
}

}  // namespace

double mutual_information(std::span<const int> a, std::span<const int> b) {
  if (a.size() != b.size())
    throw Error("mutual_information: length mismatch (" + std::to_string(a.size()) + " vs " +
                std::to_string(b.size()) + ")");
  if (a.empty()) throw Error("mutual_information: empty input");
  // Canonical argument order makes the result bitwise symmetric.
  if (std::lexicographical_compare(b.begin(), b.end(), a.begin(), a.end())) std::swap(a, b);
  const int ka = cardinality(a);
  const int kb = cardinality(b);
  const std::size_t n = a.size();
  const std::size_t cells = static_cast<std::size_t>(ka) * kb;

  // Small alphabets (the common case: 20 bins) count on the stack.
  constexpr std::size_t kStackCells = 1024;
  constexpr std::size_t kStackMarginal = 64;
  std::array<std::uint32_t, kStackCells> joint_buf;
  std::array<std::uint32_t, kStackMarginal> ca_buf, cb_buf;
  std::vector<std::uint32_t> joint_heap, ca_heap, cb_heap;
  std::uint32_t* joint = joint_buf.data();
  std::uint32_t* ca = ca_buf.data();
  std::uint32_t* cb = cb_buf.data();
  if (cells > kStackCells || static_cast<std::size_t>(std::max(ka, kb)) > kStackMarginal) {
    joint_heap.assign(cells, 0);
    ca_heap.assign(static_cast<std::size_t>(ka), 0);
    cb_heap.assign(static_cast<std::size_t>(kb), 0);
    joint = joint_heap.data();
    ca = ca_heap.data();
    cb = cb_heap.data();
  } else {
    std::fill_n(joint, cells, 0u);
    std::fill_n(ca, ka, 0u);
    std::fill_n(cb, kb, 0u);
  }
  for (std::size_t i = 0; i < n; ++i) {
    ++joint[static_cast<std::size_t>(a[i]) * kb + b[i]];
    ++ca[a[i]];
    ++cb[b[i]];
  }

  // MI = (sum c log c - sum ca log ca - sum cb log cb) / n + log n.
  const std::vector<double>& xlogx = xlogx_table(n);
  double joint_sum = 0.0, a_sum = 0.0, b_sum = 0.0;
  for (std::size_t c = 0; c < cells; ++c) joint_sum += xlogx[joint[c]];
  for (int x = 0; x < ka; ++x) a_sum += xlogx[ca[x]];
  for (int y = 0; y < kb; ++y) b_sum += xlogx[cb[y]];
  const double dn = static_cast<double>(n);
  const double mi = (joint_sum - a_sum - b_sum) / dn + std::log(dn);
  return std::max(mi, 0.0);
}

double entropy(std::span<const int> a) {
  if (a.empty()) throw Error("entropy: empty input");
  std::vector<std::size_t> counts(static_cast<std::size_t>(cardinality(a)), 0);
  for (int x : a) ++counts[static_cast<std::size_t>(x)];
  const double n = static_cast<double>(a.size());
  double h = 0.0;
  for (std::size_t c : counts)
    if (c) h -= (c / n) * std::log(c / n);
  return h;
}

Labels target_labels(ColumnView y, const InfoConfig& cfg, Task task) {
  if (task == Task::regression) return discretize(y, cfg.n_bins);
  Labels out(y.size());
  for (std::size_t i = 0; i < y.size(); ++i) out[i] = static_cast<int>(y[i]);
  return out;
}

double relevance(ColumnView f, ColumnView y, const InfoConfig& cfg, Task task) {
  if (f.size() != y.size()) throw Error("relevance: length mismatch");
  return mutual_information(discretize(f, cfg.n_bins), target_labels(y, cfg, task));
}

double utility(std::span<const ColumnView> features, ColumnView y, const InfoConfig& cfg,
               Task task) {
  if (features.empty()) throw Error("utility: empty feature list");
  return InfoCache(features, y, cfg, task).utility();
}

double group_distance(std::span<const ColumnView> ci, std::span<const ColumnView> cj,
                      ColumnView y, const InfoConfig& cfg, Task task) {
  if (ci.empty() || cj.empty()) throw Error("group_distance: empty group");
  std::vector<ColumnView> all(ci.begin(), ci.end());
  all.insert(all.end(), cj.begin(), cj.end());
  InfoCache cache(all, y, cfg, task);
  std::vector<std::size_t> a(ci.size()), b(cj.size());
  std::iota(a.begin(), a.end(), 0);
  std::iota(b.begin(), b.end(), ci.size());
  return cache.group_distance(a, b);
}

double group_relevance(std::span<const ColumnView> c, ColumnView y, const InfoConfig& cfg,
                       Task task) {
  if (c.empty()) throw Error("group_relevance: empty group");
  InfoCache cache(c, y, cfg, task);
  std::vector<std::size_t> idx(c.size());
  std::iota(idx.begin(), idx.end(), 0);
  return cache.group_relevance(idx);
}

// ---------------------------------------------------------------------------

InfoCache::InfoCache(std::span<const ColumnView> features, ColumnView y, const InfoConfig& cfg,
                     Task task)
    : epsilon_(cfg.epsilon) {
  cfg.validate();
  Labels target = target_labels(y, cfg, task);
  labels_.reserve(features.size());
  relevance_.reserve(features.size());
  for (ColumnView f : features) {
    if (f.size() != y.size()) throw Error("feature/target length mismatch");
    labels_.push_back(discretize(f, cfg.n_bins));
    relevance_.push_back(mutual_information(labels_.back(), target));
  }
  const std::size_t m = labels_.size();
  pair_mi_.assign(m * (m + 1) / 2, std::numeric_limits<double>::quiet_NaN());
}

double InfoCache::mi(std::size_t i, std::size_t j) const {
  if (i > j) std::swap(i, j);
  // Row-major upper triangle: row i starts after sum_{r<i} (m - r) entries.
  const std::size_t m = labels_.size();
  std::size_t slot = i * m - i * (i - 1) / 2 + (j - i);
  double& v = pair_mi_[slot];
  if (std::isnan(v)) v = mutual_information(labels_[i], labels_[j]);
  return v;
}

double InfoCache::utility() const {
  std::vector<std::size_t> all(size());
  std::iota(all.begin(), all.end(), 0);
  return utility(all);
}

double InfoCache::utility(std::span<const std::size_t> subset) const {
  if (subset.empty()) throw Error("utility: empty feature list");
  const double m = static_cast<double>(subset.size());
  double redundancy = 0.0;
  for (std::size_t i : subset)
    for (std::size_t j : subset) redundancy += mi(i, j);
  double rel = 0.0;
  for (std::size_t i : subset) rel += relevance_[i];
  return -redundancy / (m * m) + rel / m;
}

double InfoCache::group_distance(std::span<const std::size_t> ci,
                                 std::span<const std::size_t> cj) const {
  if (ci.empty() || cj.empty()) throw Error("group_distance: empty group");
  // Terms are summed in sorted order so dis(Ci,Cj) == dis(Cj,Ci) bitwise.
  std::vector<double> terms;
  terms.reserve(ci.size() * cj.size());
  for (std::size_t i : ci)
    for (std::size_t j : cj)
      terms.push_back(std::fabs(relevance_[i] - relevance_[j]) / (mi(i, j) + epsilon_));
  std::sort(terms.begin(), terms.end());
  double sum = 0.0;
  for (double t : terms) sum += t;
  return sum / (static_cast<double>(ci.size()) * static_cast<double>(cj.size()));
}

double InfoCache::group_relevance(std::span<const std::size_t> c) const {
  if (c.empty()) throw Error("group_relevance: empty group");
  double sum = 0.0;
  for (std::size_t i : c) sum += relevance_[i];
  return sum / static_cast<double>(c.size());
}

}  // namespace grfg
