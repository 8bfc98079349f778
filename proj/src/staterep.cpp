#include "grfg/staterep.hpp"

#include <algorithm>
#include <cmath>

namespace grfg {

namespace {

double quantile_sorted(const std::vector<double>& s, double p) {
  const double pos = p * static_cast<double>(s.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const std::size_t hi = std::min(lo + 1, s.size() - 1);
  const double frac = pos - static_cast<double>(lo);
  return s[lo] + (s[hi] - s[lo]) * frac;
}

}  // namespace

std::array<double, kNumStats> describe(std::span<const double> v) {
  if (v.empty()) throw Error("describe: empty vector");
  std::vector<double> s(v.begin(), v.end());
  std::sort(s.begin(), s.end());
  const double n = static_cast<double>(s.size());
  double mean = 0.0;
  for (double x : s) mean += x;
  mean /= n;
  double ss = 0.0;
  if (s.front() != s.back())  // constant input has exactly zero spread
    for (double x : s) ss += (x - mean) * (x - mean);
  std::array<double, kNumStats> out = {
      n,
      std::sqrt(ss / n),
      s.front(),
      s.back(),
      quantile_sorted(s, 0.25),
      quantile_sorted(s, 0.5),
      quantile_sorted(s, 0.75),
  };
  for (double& x : out) x = sanitize(x);
  return out;
}

StateVector rep_feature_set(std::span<const ColumnView> features) {
  if (features.empty()) throw Error("rep_feature_set: empty feature set");
  const std::size_t n = features[0].size();
  const std::size_t m = features.size();
  for (ColumnView f : features)
    if (f.size() != n) throw Error("rep_feature_set: ragged feature lengths");

  // stage1[stat][feature]
  std::vector<std::vector<double>> stage1(kNumStats, std::vector<double>(m));
  for (std::size_t j = 0; j < m; ++j) {
    auto st = describe(features[j]);
    for (std::size_t r = 0; r < kNumStats; ++r) stage1[r][j] = st[r];
  }

  StateVector out;
  out.reserve(kSetRepDim);
  for (std::size_t r = 0; r < kNumStats; ++r) {
    auto st = describe(stage1[r]);
    out.insert(out.end(), st.begin(), st.end());
  }
  return out;
}

StateVector rep_operation(Op op) {
  StateVector out(kOpRepDim, 0.0);
  out[op_index(op)] = 1.0;
  return out;
}

StateVector concat(std::initializer_list<std::span<const double>> parts) {
  StateVector out;
  for (auto p : parts) out.insert(out.end(), p.begin(), p.end());
  return out;
}

StateVector squash(std::span<const double> v) {
  StateVector out(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) out[i] = std::copysign(std::log1p(std::fabs(v[i])), v[i]);
  return out;
}

}  // namespace grfg
