#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "grfg/common.hpp"

namespace grfg {

struct NamedColumn {
  std::string name;
  Column values;
};

/// Numeric feature matrix (column-major) plus target. Immutable once built.
class DataTable {
 public:
  DataTable(std::vector<NamedColumn> columns, Column target, Task task);

  const std::vector<NamedColumn>& columns() const { return columns_; }
  const Column& target() const { return target_; }
  Task task() const { return task_; }
  std::size_t n_rows() const { return target_.size(); }
  /// Feature count at load time (d0).
  std::size_t original_arity() const { return columns_.size(); }
  /// Number of classes k for classification (labels are 0..k-1); 0 for regression.
  int n_classes() const { return n_classes_; }

  /// Index of the column with this name, or -1.
  int find(const std::string& name) const;
  const Column& column(const std::string& name) const;
  std::vector<ColumnView> views() const;

 private:
  std::vector<NamedColumn> columns_;
  Column target_;
  Task task_;
  int n_classes_ = 0;
};

/// True when `c` may not appear in a column name.
bool is_reserved_name_char(char c);

/// Replaces reserved characters with '_' and disambiguates collisions with
/// `_2`, `_3`, ... suffixes.
std::vector<std::string> sanitize_names(const std::vector<std::string>& raw);

DataTable load_csv(const std::filesystem::path& path, const std::string& target_name,
                   Task task);

/// Writes features then the target (named `target_name`) with 17 significant
/// digits so that load_csv reproduces values bit-for-bit.
void write_csv(const std::filesystem::path& path, const std::vector<NamedColumn>& columns,
               const Column* target = nullptr, const std::string& target_name = "target");

struct Fold {
  std::vector<std::size_t> train;
  std::vector<std::size_t> test;
};

struct FoldSplit {
  std::vector<Fold> folds;
  int n_folds = 0;
  /// False when a class had fewer than n_folds members and the split fell back
  /// to an unstratified shuffle.
  bool stratified = true;
};

FoldSplit stratified_kfold(const DataTable& table, int n_folds, std::uint64_t seed);
/// Same, on a bare target vector.
FoldSplit stratified_kfold(const Column& target, Task task, int n_folds, std::uint64_t seed);

}  // namespace grfg
