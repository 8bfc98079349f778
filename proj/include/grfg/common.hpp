#pragma once

#include <cstdint>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace grfg {

using Column = std::vector<double>;
using ColumnView = std::span<const double>;

enum class Task { classification, regression };

Task parse_task(const std::string& s);
std::string task_name(Task t);

/// Bad input: malformed files, violated preconditions, unknown names.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Internal invariant broken. The CLI maps this to exit code 2.
class InvariantError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

/// SplitMix64 finalizer; used to derive independent per-subsystem seeds
/// from a single master seed.
std::uint64_t mix_seed(std::uint64_t x);
std::uint64_t derive_seed(std::uint64_t master, std::uint64_t stream);

// Stream identifiers for derive_seed. Stable: changing them changes every
// reproduced result.
namespace seed_stream {
inline constexpr std::uint64_t folds = 1;
inline constexpr std::uint64_t forest = 2;
inline constexpr std::uint64_t agent_group1 = 3;
inline constexpr std::uint64_t agent_operation = 4;
inline constexpr std::uint64_t agent_group2 = 5;
inline constexpr std::uint64_t random_policy = 6;
}  // namespace seed_stream

/// 64-bit Mersenne Twister with distribution code kept in-house, so that
/// sequences do not depend on the standard library's distribution
/// implementations.
class Rng {
 public:
  explicit Rng(std::uint64_t seed = 0) : engine_(seed) {}

  std::uint64_t next() { return engine_(); }
  /// Uniform integer in [0, n). n must be > 0.
  std::size_t index(std::size_t n);
  /// Uniform real in [0, 1).
  double uniform();
  double normal();

  template <typename T>
  void shuffle(std::vector<T>& v) {
    for (std::size_t i = v.size(); i > 1; --i) {
      std::size_t j = index(i);
      std::swap(v[i - 1], v[j]);
    }
  }

  std::string serialize() const;
  void deserialize(const std::string& state);

  bool operator==(const Rng& other) const { return engine_ == other.engine_; }

 private:
  std::mt19937_64 engine_;
};

/// Replaces non-finite values with 0 and clamps into [-1e12, 1e12].
inline constexpr double kValueBound = 1e12;
double sanitize(double x);

}  // namespace grfg
