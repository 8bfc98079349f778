#include "grfg/common.hpp"

#include <cmath>
#include <numbers>
#include <sstream>

namespace grfg {

Task parse_task(const std::string& s) {
  if (s == "classification") return Task::classification;
  if (s == "regression") return Task::regression;
  throw Error("unknown task '" + s + "' (expected classification|regression)");
}

std::string task_name(Task t) {
  return t == Task::classification ? "classification" : "regression";
}

std::uint64_t mix_seed(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

std::uint64_t derive_seed(std::uint64_t master, std::uint64_t stream) {
  return mix_seed(mix_seed(master) ^ mix_seed(stream * 0x632be59bd9b4e019ULL));
}

std::size_t Rng::index(std::size_t n) {
  if (n == 0) throw InvariantError("Rng::index called with n = 0");
  // Lemire-style rejection to avoid modulo bias.
  const std::uint64_t bound = static_cast<std::uint64_t>(n);
  const std::uint64_t limit = -bound % bound;
  for (;;) {
    std::uint64_t r = engine_();
    if (r >= limit) return static_cast<std::size_t>(r % bound);
  }
}

double Rng::uniform() {
  return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
}

double Rng::normal() {
  // Box-Muller; one draw per call keeps the state trivially serializable.
  double u1 = uniform();
  double u2 = uniform();
  if (u1 < 1e-300) u1 = 1e-300;
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

std::string Rng::serialize() const {
  std::ostringstream os;
  os << engine_;
  return os.str();
}

void Rng::deserialize(const std::string& state) {
  std::istringstream is(state);
  is >> engine_;
  if (!is) throw Error("corrupt rng state");
}

double sanitize(double x) {
  if (!std::isfinite(x)) return 0.0;
  if (x > kValueBound) return kValueBound;
  if (x < -kValueBound) return -kValueBound;
  return x;
}

}  // namespace grfg
