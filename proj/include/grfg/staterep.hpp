#pragma once

#include <array>
#include <span>
#include <vector>

#include "grfg/common.hpp"
#include "grfg/expr.hpp"

namespace grfg {

inline constexpr std::size_t kNumStats = 7;
inline constexpr std::size_t kSetRepDim = kNumStats * kNumStats;  // 49
inline constexpr std::size_t kOpRepDim = kNumOps;                 // 14

using StateVector = std::vector<double>;

/// count, population std, min, max, Q1, median, Q3 of `v`. Quartiles use
/// linear interpolation between order statistics. Computed from a sorted copy,
/// so the result is bitwise independent of element order.
std::array<double, kNumStats> describe(std::span<const double> v);

/// Two-stage descriptive statistics: per-column stats (7 x m), then the same
/// stats across each row of that matrix (7 x 7), flattened row-major.
StateVector rep_feature_set(std::span<const ColumnView> features);

/// One-hot over the fixed operation order.
StateVector rep_operation(Op op);

/// Elementwise sign(x)·log(1+|x|), used to keep agent inputs in a narrow range.
StateVector squash(std::span<const double> v);

StateVector concat(std::initializer_list<std::span<const double>> parts);

}  // namespace grfg
