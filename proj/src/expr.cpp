#include "grfg/expr.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <variant>

namespace grfg {

std::string_view op_keyword(Op op) {
  switch (op) {
    case Op::square_root: return "sqrt";
    case Op::square: return "square";
    case Op::cosine: return "cos";
    case Op::sine: return "sin";
    case Op::tangent: return "tan";
    case Op::exp: return "exp";
    case Op::cube: return "cube";
    case Op::log: return "log";
    case Op::reciprocal: return "recip";
    case Op::sigmoid: return "sigmoid";
    case Op::plus: return "+";
    case Op::subtract: return "-";
    case Op::multiply: return "*";
    case Op::divide: return "/";
  }
  throw InvariantError("bad op");
}

std::string_view op_name(Op op) {
  switch (op) {
    case Op::square_root: return "square_root";
    case Op::square: return "square";
    case Op::cosine: return "cosine";
    case Op::sine: return "sine";
    case Op::tangent: return "tangent";
    case Op::exp: return "exp";
    case Op::cube: return "cube";
    case Op::log: return "log";
    case Op::reciprocal: return "reciprocal";
    case Op::sigmoid: return "sigmoid";
    case Op::plus: return "plus";
    case Op::subtract: return "subtract";
    case Op::multiply: return "multiply";
    case Op::divide: return "divide";
  }
  throw InvariantError("bad op");
}

std::optional<Op> op_from_name(std::string_view name) {
  for (Op op : kAllOps)
    if (op_name(op) == name) return op;
  return std::nullopt;
}

namespace {

double raw_unary(Op op, double x) {
  switch (op) {
    case Op::square_root: return std::sqrt(std::fabs(x));
    case Op::square: return x * x;
    case Op::cosine: return std::cos(x);
    case Op::sine: return std::sin(x);
    case Op::tangent: return std::tan(x);
    case Op::exp: return std::exp(x);
    case Op::cube: return x * x * x;
    case Op::log: return std::log(std::fabs(x));
    case Op::reciprocal: return 1.0 / x;
    case Op::sigmoid: return 1.0 / (1.0 + std::exp(-x));
    default: break;
  }
  throw InvariantError("raw_unary called with binary op");
}

double raw_binary(Op op, double a, double b) {
  switch (op) {
    case Op::plus: return a + b;
    case Op::subtract: return a - b;
    case Op::multiply: return a * b;
    case Op::divide: return a / b;
    default: break;
  }
  throw InvariantError("raw_binary called with unary op");
}

}  // namespace

Column apply_op(Op op, ColumnView a, std::optional<ColumnView> b) {
  Column out(a.size());
  if (is_unary(op)) {
    if (b) throw Error(std::string("operation ") + std::string(op_name(op)) + " is unary");
    for (std::size_t i = 0; i < a.size(); ++i) out[i] = sanitize(raw_unary(op, a[i]));
  } else {
    if (!b) throw Error(std::string("operation ") + std::string(op_name(op)) + " needs two operands");
    if (b->size() != a.size())
      throw Error("operand length mismatch: " + std::to_string(a.size()) + " vs " +
                  std::to_string(b->size()));
    for (std::size_t i = 0; i < a.size(); ++i) out[i] = sanitize(raw_binary(op, a[i], (*b)[i]));
  }
  return out;
}

// ---------------------------------------------------------------------------

struct FeatureExpr::Node {
  Kind kind;
  std::string column;
  Op op = Op::plus;
  std::optional<FeatureExpr> left;
  std::optional<FeatureExpr> right;
  std::size_t depth = 1;
};

FeatureExpr FeatureExpr::leaf(std::string column) {
  auto n = std::make_shared<Node>();
  n->kind = Kind::leaf;
  n->column = std::move(column);
  return FeatureExpr(std::move(n));
}

FeatureExpr FeatureExpr::unary(Op op, FeatureExpr child) {
  if (!is_unary(op)) throw Error("unary node with binary op");
  auto n = std::make_shared<Node>();
  n->kind = Kind::unary;
  n->op = op;
  n->depth = child.depth() + 1;
  n->left = std::move(child);
  return FeatureExpr(std::move(n));
}

FeatureExpr FeatureExpr::binary(Op op, FeatureExpr left, FeatureExpr right) {
  if (is_unary(op)) throw Error("binary node with unary op");
  auto n = std::make_shared<Node>();
  n->kind = Kind::binary;
  n->op = op;
  n->depth = std::max(left.depth(), right.depth()) + 1;
  n->left = std::move(left);
  n->right = std::move(right);
  return FeatureExpr(std::move(n));
}

FeatureExpr::Kind FeatureExpr::kind() const { return node_->kind; }

const std::string& FeatureExpr::column() const {
  if (node_->kind != Kind::leaf) throw InvariantError("column() on non-leaf");
  return node_->column;
}

Op FeatureExpr::op() const {
  if (node_->kind == Kind::leaf) throw InvariantError("op() on leaf");
  return node_->op;
}

const FeatureExpr& FeatureExpr::left() const {
  if (!node_->left) throw InvariantError("left() on leaf");
  return *node_->left;
}

const FeatureExpr& FeatureExpr::right() const {
  if (!node_->right) throw InvariantError("right() on non-binary");
  return *node_->right;
}

std::size_t FeatureExpr::depth() const { return node_->depth; }

void FeatureExpr::collect_leaves(std::set<std::string>& out) const {
  switch (node_->kind) {
    case Kind::leaf: out.insert(node_->column); break;
    case Kind::unary: node_->left->collect_leaves(out); break;
    case Kind::binary:
      node_->left->collect_leaves(out);
      node_->right->collect_leaves(out);
      break;
  }
}

bool FeatureExpr::operator==(const FeatureExpr& other) const {
  if (node_ == other.node_) return true;
  if (node_->kind != other.node_->kind) return false;
  switch (node_->kind) {
    case Kind::leaf: return node_->column == other.node_->column;
    case Kind::unary: return node_->op == other.node_->op && left() == other.left();
    case Kind::binary:
      return node_->op == other.node_->op && left() == other.left() && right() == other.right();
  }
  return false;
}

std::string render_name(const FeatureExpr& expr) {
  switch (expr.kind()) {
    case FeatureExpr::Kind::leaf:
      return expr.column();
    case FeatureExpr::Kind::unary:
      return std::string(op_keyword(expr.op())) + "(" + render_name(expr.left()) + ")";
    case FeatureExpr::Kind::binary:
      return "(" + render_name(expr.left()) + std::string(op_keyword(expr.op())) +
             render_name(expr.right()) + ")";
  }
  throw InvariantError("bad expression kind");
}

// ---------------------------------------------------------------------------

ParseError::ParseError(const std::string& what, std::size_t position)
    : Error(what + " at position " + std::to_string(position)), position_(position) {}

namespace {

class Parser {
 public:
  Parser(std::string_view text, const std::set<std::string>& known)
      : text_(text), known_(known) {}

  FeatureExpr parse_all() {
    FeatureExpr e = parse_expr();
    if (pos_ != text_.size()) throw ParseError("unexpected trailing input", pos_);
    return e;
  }

 private:
  static bool is_ident_char(char c) { return !is_reserved_name_char(c); }

  FeatureExpr parse_expr() {
    if (pos_ >= text_.size()) throw ParseError("unexpected end of input", pos_);
    if (text_[pos_] == '(') {
      ++pos_;
      FeatureExpr lhs = parse_expr();
      if (pos_ >= text_.size()) throw ParseError("expected binary operator", pos_);
      std::optional<Op> op;
      switch (text_[pos_]) {
        case '+': op = Op::plus; break;
        case '-': op = Op::subtract; break;
        case '*': op = Op::multiply; break;
        case '/': op = Op::divide; break;
        default: throw ParseError("expected binary operator", pos_);
      }
      ++pos_;
      FeatureExpr rhs = parse_expr();
      expect(')');
      return FeatureExpr::binary(*op, std::move(lhs), std::move(rhs));
    }

    std::size_t start = pos_;
    while (pos_ < text_.size() && is_ident_char(text_[pos_])) ++pos_;
    if (pos_ == start) throw ParseError("expected column name or operation", pos_);
    std::string ident(text_.substr(start, pos_ - start));

    if (pos_ < text_.size() && text_[pos_] == '(') {
      std::optional<Op> op;
      for (std::size_t i = 0; i < kNumUnaryOps; ++i)
        if (op_keyword(op_at(i)) == ident) op = op_at(i);
      if (!op) throw ParseError("unknown operation '" + ident + "'", start);
      ++pos_;
      FeatureExpr inner = parse_expr();
      expect(')');
      return FeatureExpr::unary(*op, std::move(inner));
    }
    if (!known_.count(ident)) throw ParseError("unknown column '" + ident + "'", start);
    return FeatureExpr::leaf(std::move(ident));
  }

  void expect(char c) {
    if (pos_ >= text_.size() || text_[pos_] != c)
      throw ParseError(std::string("expected '") + c + "'", pos_);
    ++pos_;
  }

  std::string_view text_;
  const std::set<std::string>& known_;
  std::size_t pos_ = 0;
};

}  // namespace

FeatureExpr parse_name(std::string_view text, const std::set<std::string>& known_columns) {
  return Parser(text, known_columns).parse_all();
}

Column evaluate(const FeatureExpr& expr, const DataTable& table) {
  switch (expr.kind()) {
    case FeatureExpr::Kind::leaf:
      return table.column(expr.column());
    case FeatureExpr::Kind::unary:
      return apply_op(expr.op(), evaluate(expr.left(), table));
    case FeatureExpr::Kind::binary: {
      Column l = evaluate(expr.left(), table);
      Column r = evaluate(expr.right(), table);
      return apply_op(expr.op(), l, ColumnView(r));
    }
  }
  throw InvariantError("bad expression kind");
}

void write_provenance(const std::filesystem::path& path,
                      const std::vector<ProvenanceEntry>& entries) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write '" + path.string() + "'");
  for (const auto& e : entries) out << e.name << '\t' << render_name(e.expr) << '\n';
  if (!out) throw Error("write failed for '" + path.string() + "'");
}

std::vector<ProvenanceEntry> read_provenance(const std::filesystem::path& path,
                                             const std::set<std::string>& known_columns) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open provenance file '" + path.string() + "'");
  std::vector<ProvenanceEntry> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    auto tab = line.find('\t');
    if (tab == std::string::npos)
      throw Error("provenance line " + std::to_string(line_no) + ": missing tab separator");
    try {
      out.push_back({line.substr(0, tab), parse_name(line.substr(tab + 1), known_columns)});
    } catch (const ParseError& e) {
      throw Error("provenance line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  return out;
}

std::set<std::string> column_names(const DataTable& table) {
  std::set<std::string> names;
  for (const auto& c : table.columns()) names.insert(c.name);
  return names;
}

}  // namespace grfg
