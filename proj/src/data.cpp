#include "grfg/data.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <numeric>
#include <set>
#include <sstream>
#include <unordered_set>

namespace grfg {

namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r'))
    s.remove_suffix(1);
  return s;
}

std::vector<std::string_view> split_commas(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  for (;;) {
    std::size_t pos = line.find(',', start);
    if (pos == std::string_view::npos) {
      out.push_back(trim(line.substr(start)));
      return out;
    }
    out.push_back(trim(line.substr(start, pos - start)));
    start = pos + 1;
  }
}

bool parse_number(std::string_view cell, double& out) {
  if (!cell.empty() && cell.front() == '+') cell.remove_prefix(1);
  if (cell.empty()) return false;
  const char* end = cell.data() + cell.size();
  auto [ptr, ec] = std::from_chars(cell.data(), end, out);
  return ec == std::errc() && ptr == end && std::isfinite(out);
}

}  // namespace

DataTable::DataTable(std::vector<NamedColumn> columns, Column target, Task task)
    : columns_(std::move(columns)), target_(std::move(target)), task_(task) {
  if (columns_.empty()) throw Error("data table needs at least one feature column");
  if (target_.empty()) throw Error("data table has no rows");
  std::unordered_set<std::string> seen;
  for (const auto& c : columns_) {
    if (c.values.size() != target_.size())
      throw Error("column '" + c.name + "' has " + std::to_string(c.values.size()) +
                  " rows, target has " + std::to_string(target_.size()));
    if (c.name.empty()) throw Error("empty column name");
    for (char ch : c.name)
      if (is_reserved_name_char(ch))
        throw Error("column name '" + c.name + "' contains reserved character");
    if (!seen.insert(c.name).second) throw Error("duplicate column name '" + c.name + "'");
    for (double v : c.values)
      if (!std::isfinite(v)) throw Error("non-finite value in column '" + c.name + "'");
  }
  for (double v : target_)
    if (!std::isfinite(v)) throw Error("non-finite target value");
  if (task_ == Task::classification) {
    double max_label = 0.0;
    for (double v : target_) {
      if (v < 0.0 || v != std::floor(v))
        throw Error("classification target must hold integer labels 0..k-1, got " +
                    std::to_string(v));
      max_label = std::max(max_label, v);
    }
    n_classes_ = static_cast<int>(max_label) + 1;
    if (n_classes_ < 2) throw Error("classification target needs at least 2 classes");
  }
}

int DataTable::find(const std::string& name) const {
  for (std::size_t i = 0; i < columns_.size(); ++i)
    if (columns_[i].name == name) return static_cast<int>(i);
  return -1;
}

const Column& DataTable::column(const std::string& name) const {
  int i = find(name);
  if (i < 0) throw Error("unknown column '" + name + "'");
  return columns_[static_cast<std::size_t>(i)].values;
}

std::vector<ColumnView> DataTable::views() const {
  std::vector<ColumnView> out;
  out.reserve(columns_.size());
  for (const auto& c : columns_) out.emplace_back(c.values);
  return out;
}

bool is_reserved_name_char(char c) {
  switch (c) {
    case '(': case ')': case '+': case '-': case '*': case '/': case ',':
    case ' ': case '\t': case '\n': case '\r': case '\v': case '\f':
      return true;
    default:
      return false;
  }
}

std::vector<std::string> sanitize_names(const std::vector<std::string>& raw) {
  std::vector<std::string> out;
  out.reserve(raw.size());
  std::set<std::string> taken;
  for (const auto& r : raw) {
    std::string s = r;
    for (char& c : s)
      if (is_reserved_name_char(c)) c = '_';
    if (s.empty()) s = "_";
    std::string candidate = s;
    for (int k = 2; taken.count(candidate); ++k) candidate = s + "_" + std::to_string(k);
    taken.insert(candidate);
    out.push_back(candidate);
  }
  return out;
}

DataTable load_csv(const std::filesystem::path& path, const std::string& target_name,
                   Task task) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open data file '" + path.string() + "'");

  std::string line;
  if (!std::getline(in, line)) throw Error("data file '" + path.string() + "' is empty");
  auto header_cells = split_commas(line);
  std::vector<std::string> header(header_cells.begin(), header_cells.end());

  int target_col = -1;
  for (std::size_t i = 0; i < header.size(); ++i)
    if (header[i] == target_name) target_col = static_cast<int>(i);
  if (target_col < 0) throw Error("target column '" + target_name + "' not found");
  if (header.size() < 3)
    throw Error("need at least 2 feature columns besides the target, found " +
                std::to_string(header.size() - 1));

  // Literal duplicates are an error; collisions introduced by sanitization
  // are resolved with numeric suffixes.
  std::vector<std::string> raw_features;
  {
    std::set<std::string> seen;
    for (std::size_t i = 0; i < header.size(); ++i) {
      if (!seen.insert(header[i]).second)
        throw Error("duplicate column name '" + header[i] + "'");
      if (static_cast<int>(i) != target_col) raw_features.push_back(header[i]);
    }
  }
  auto names = sanitize_names(raw_features);

  std::vector<Column> values(raw_features.size());
  Column target;
  std::size_t row = 0;
  while (std::getline(in, line)) {
    if (trim(line).empty()) continue;
    ++row;
    auto cells = split_commas(line);
    if (cells.size() != header.size())
      throw Error("row " + std::to_string(row) + " has " + std::to_string(cells.size()) +
                  " cells, header has " + std::to_string(header.size()));
    std::size_t f = 0;
    for (std::size_t i = 0; i < cells.size(); ++i) {
      double v = 0.0;
      if (!parse_number(cells[i], v))
        throw Error("non-numeric cell '" + std::string(cells[i]) + "' at row " +
                    std::to_string(row) + ", column '" + header[i] + "'");
      if (static_cast<int>(i) == target_col)
        target.push_back(v);
      else
        values[f++].push_back(v);
    }
  }
  if (row == 0) throw Error("data file '" + path.string() + "' has no rows");

  std::vector<NamedColumn> columns;
  for (std::size_t i = 0; i < names.size(); ++i)
    columns.push_back({names[i], std::move(values[i])});
  return DataTable(std::move(columns), std::move(target), task);
}

void write_csv(const std::filesystem::path& path, const std::vector<NamedColumn>& columns,
               const Column* target, const std::string& target_name) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write '" + path.string() + "'");
  std::size_t n = target ? target->size() : (columns.empty() ? 0 : columns[0].values.size());
  for (std::size_t i = 0; i < columns.size(); ++i) {
    if (i) out << ',';
    out << columns[i].name;
  }
  if (target) out << (columns.empty() ? "" : ",") << target_name;
  out << '\n';
  out.precision(17);
  for (std::size_t r = 0; r < n; ++r) {
    for (std::size_t i = 0; i < columns.size(); ++i) {
      if (i) out << ',';
      out << columns[i].values.at(r);
    }
    if (target) out << (columns.empty() ? "" : ",") << (*target)[r];
    out << '\n';
  }
  if (!out) throw Error("write failed for '" + path.string() + "'");
}

FoldSplit stratified_kfold(const DataTable& table, int n_folds, std::uint64_t seed) {
  return stratified_kfold(table.target(), table.task(), n_folds, seed);
}

FoldSplit stratified_kfold(const Column& target, Task task, int n_folds, std::uint64_t seed) {
  const std::size_t n = target.size();
  if (n_folds < 2) throw Error("n_folds must be >= 2");
  if (static_cast<std::size_t>(n_folds) > n)
    throw Error("n_folds (" + std::to_string(n_folds) + ") exceeds row count (" +
                std::to_string(n) + ")");

  // Stratum label per row.
  std::vector<int> stratum(n, 0);
  if (task == Task::classification) {
    for (std::size_t i = 0; i < n; ++i) stratum[i] = static_cast<int>(target[i]);
  } else {
    std::size_t bins = std::min<std::size_t>(5, n / static_cast<std::size_t>(n_folds));
    bins = std::max<std::size_t>(bins, 1);
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return target[a] < target[b]; });
    for (std::size_t rank = 0; rank < n; ++rank)
      stratum[order[rank]] = static_cast<int>(rank * bins / n);
  }

  int n_strata = *std::max_element(stratum.begin(), stratum.end()) + 1;
  std::vector<std::vector<std::size_t>> members(static_cast<std::size_t>(n_strata));
  for (std::size_t i = 0; i < n; ++i) members[static_cast<std::size_t>(stratum[i])].push_back(i);

  FoldSplit split;
  split.n_folds = n_folds;
  if (task == Task::classification) {
    for (const auto& m : members)
      if (!m.empty() && m.size() < static_cast<std::size_t>(n_folds)) split.stratified = false;
  }
  if (!split.stratified) {
    members.assign(1, std::vector<std::size_t>(n));
    std::iota(members[0].begin(), members[0].end(), 0);
  }

  Rng rng(seed);
  std::vector<std::vector<std::size_t>> test(static_cast<std::size_t>(n_folds));
  // Round-robin dealing; the fold cursor carries across strata so fold sizes
  // stay within one of each other.
  std::size_t cursor = 0;
  for (auto& m : members) {
    rng.shuffle(m);
    for (std::size_t idx : m) {
      test[cursor].push_back(idx);
      cursor = (cursor + 1) % static_cast<std::size_t>(n_folds);
    }
  }

  std::vector<int> fold_of(n, -1);
  for (std::size_t f = 0; f < test.size(); ++f) {
    std::sort(test[f].begin(), test[f].end());
    for (std::size_t idx : test[f]) fold_of[idx] = static_cast<int>(f);
  }
  for (std::size_t f = 0; f < test.size(); ++f) {
    Fold fold;
    fold.test = test[f];
    for (std::size_t i = 0; i < n; ++i)
      if (fold_of[i] != static_cast<int>(f)) fold.train.push_back(i);
    split.folds.push_back(std::move(fold));
  }
  return split;
}

}  // namespace grfg
