#pragma once

#include <array>
#include <filesystem>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "grfg/common.hpp"
#include "grfg/data.hpp"

namespace grfg {

/// The fixed operation set. Declaration order is the one-hot order used by
/// the state representation and the operation agent's Q head.
enum class Op {
  square_root,
  square,
  cosine,
  sine,
  tangent,
  exp,
  cube,
  log,
  reciprocal,
  sigmoid,
  plus,
  subtract,
  multiply,
  divide,
};

inline constexpr std::size_t kNumOps = 14;
inline constexpr std::size_t kNumUnaryOps = 10;

inline constexpr std::array<Op, kNumOps> kAllOps = {
    Op::square_root, Op::square, Op::cosine,   Op::sine,     Op::tangent,
    Op::exp,         Op::cube,   Op::log,      Op::reciprocal, Op::sigmoid,
    Op::plus,        Op::subtract, Op::multiply, Op::divide,
};

constexpr std::size_t op_index(Op op) { return static_cast<std::size_t>(op); }
constexpr Op op_at(std::size_t i) { return kAllOps.at(i); }
constexpr bool is_unary(Op op) { return op_index(op) < kNumUnaryOps; }
constexpr int arity(Op op) { return is_unary(op) ? 1 : 2; }

/// Name keyword: `sqrt`, `square`, ... for unary ops; `+ - * /` for binary.
std::string_view op_keyword(Op op);
/// Long identifier used in reports and config (`square_root`, `multiply`, ...).
std::string_view op_name(Op op);
std::optional<Op> op_from_name(std::string_view name);

/// Element-wise op followed by sanitation (non-finite -> 0, clamp to
/// [-1e12, 1e12]). `b` must be given iff `op` is binary.
Column apply_op(Op op, ColumnView a, std::optional<ColumnView> b = std::nullopt);

/// Immutable expression tree. Copies share nodes.
class FeatureExpr {
 public:
  enum class Kind { leaf, unary, binary };

  static FeatureExpr leaf(std::string column);
  static FeatureExpr unary(Op op, FeatureExpr child);
  static FeatureExpr binary(Op op, FeatureExpr left, FeatureExpr right);

  Kind kind() const;
  /// Leaf only.
  const std::string& column() const;
  /// Unary/binary only.
  Op op() const;
  /// Unary: the operand. Binary: the left operand.
  const FeatureExpr& left() const;
  /// Binary only.
  const FeatureExpr& right() const;

  std::size_t depth() const;
  void collect_leaves(std::set<std::string>& out) const;

  /// Structural equality.
  bool operator==(const FeatureExpr& other) const;

 private:
  struct Node;
  explicit FeatureExpr(std::shared_ptr<const Node> node) : node_(std::move(node)) {}
  std::shared_ptr<const Node> node_;
};

std::string render_name(const FeatureExpr& expr);

/// Error raised by parse_name; `position` is the 0-based byte offset.
class ParseError : public Error {
 public:
  ParseError(const std::string& what, std::size_t position);
  std::size_t position() const { return position_; }

 private:
  std::size_t position_;
};

/// Inverse of render_name. Leaves must name one of `known_columns`.
FeatureExpr parse_name(std::string_view text, const std::set<std::string>& known_columns);

/// Recursive apply_op over the original table's columns.
Column evaluate(const FeatureExpr& expr, const DataTable& table);

struct ProvenanceEntry {
  std::string name;
  FeatureExpr expr;
};

/// One line per feature: `name<TAB>expression`.
void write_provenance(const std::filesystem::path& path,
                      const std::vector<ProvenanceEntry>& entries);
std::vector<ProvenanceEntry> read_provenance(const std::filesystem::path& path,
                                             const std::set<std::string>& known_columns);

std::set<std::string> column_names(const DataTable& table);

}  // namespace grfg
