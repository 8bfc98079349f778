#pragma once

#include <unistd.h>

#include <atomic>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "grfg/common.hpp"
#include "grfg/data.hpp"

namespace testutil {

/// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  TempDir() {
    static std::atomic<int> counter{0};
    path_ = std::filesystem::temp_directory_path() /
            ("grfg_test_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
    std::filesystem::remove_all(path_);
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path file(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

inline void write_file(const std::filesystem::path& p, const std::string& text) {
  std::ofstream out(p);
  out << text;
}

inline std::string read_file(const std::filesystem::path& p) {
  std::ifstream in(p);
  return std::string(std::istreambuf_iterator<char>(in), {});
}

inline std::vector<double> normal_column(grfg::Rng& rng, std::size_t n) {
  std::vector<double> v(n);
  for (auto& x : v) x = rng.normal();
  return v;
}

/// x1..xd standard normal, y = x1*x2 + 0.05*noise.
inline grfg::DataTable product_table(std::uint64_t seed, std::size_t n = 500, std::size_t d = 5) {
  grfg::Rng rng(seed);
  std::vector<grfg::NamedColumn> cols;
  for (std::size_t j = 0; j < d; ++j) cols.push_back({"x" + std::to_string(j + 1), normal_column(rng, n)});
  grfg::Column y(n);
  for (std::size_t i = 0; i < n; ++i) y[i] = cols[0].values[i] * cols[1].values[i] + 0.05 * rng.normal();
  return grfg::DataTable(std::move(cols), std::move(y), grfg::Task::regression);
}

}  // namespace testutil
