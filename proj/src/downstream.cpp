#include "grfg/downstream.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>
#include <thread>

namespace grfg {

void ForestConfig::validate() const {
  if (n_trees == 0) throw Error("n_trees must be positive");
  if (max_depth == 0) throw Error("max_depth must be positive");
  if (min_samples_split < 2) throw Error("min_samples_split must be >= 2");
  if (threads == 0) throw Error("threads must be positive");
}

std::size_t ForestConfig::split_features(std::size_t m) const {
  std::size_t k = features_per_split;
  if (k == 0) k = static_cast<std::size_t>(std::ceil(std::sqrt(static_cast<double>(m))));
  return std::clamp<std::size_t>(k, 1, m);
}

namespace {

int infer_classes(ColumnView y) {
  double mx = 0.0;
  for (double v : y) mx = std::max(mx, v);
  return std::max(2, static_cast<int>(mx) + 1);
}

struct SplitChoice {
  int feature = -1;
  double threshold = 0.0;
  double impurity = 0.0;  // weighted child impurity (sum form)
};

class TreeBuilder {
 public:
  TreeBuilder(std::span<const ColumnView> cols, ColumnView y, Task task, int n_classes,
              const ForestConfig& cfg, Rng& rng)
      : cols_(cols), y_(y), task_(task), k_(n_classes), cfg_(cfg), rng_(rng),
        mtry_(cfg.split_features(cols.size())) {}

  std::vector<TreeNode> build(std::vector<std::size_t> rows) {
    nodes_.clear();
    grow(rows, 0);
    return std::move(nodes_);
  }

 private:
  // Node impurity in "sum" form: Gini * n for classification, SSE for
  // regression. Children compare on the same scale.
  double impurity(const std::vector<std::size_t>& rows, double& leaf_value) const {
    const double n = static_cast<double>(rows.size());
    if (task_ == Task::classification) {
      std::vector<std::size_t> counts(static_cast<std::size_t>(k_), 0);
      for (std::size_t r : rows) ++counts[static_cast<std::size_t>(y_[r])];
      std::size_t best = 0;
      double sq = 0.0;
      for (std::size_t c = 0; c < counts.size(); ++c) {
        if (counts[c] > counts[best]) best = c;
        sq += static_cast<double>(counts[c]) * static_cast<double>(counts[c]);
      }
      leaf_value = static_cast<double>(best);
      return n - sq / n;
    }
    double sum = 0.0;
    for (std::size_t r : rows) sum += y_[r];
    const double mean = sum / n;
    double sse = 0.0;
    for (std::size_t r : rows) sse += (y_[r] - mean) * (y_[r] - mean);
    leaf_value = mean;
    return sse;
  }

  SplitChoice best_split(const std::vector<std::size_t>& rows, double parent) {
    SplitChoice best;
    best.impurity = parent;
    // Partial Fisher-Yates over feature indices.
    std::vector<std::size_t> feats(cols_.size());
    std::iota(feats.begin(), feats.end(), 0);
    for (std::size_t k = 0; k < mtry_; ++k) std::swap(feats[k], feats[k + rng_.index(feats.size() - k)]);

    const std::size_t n = rows.size();
    std::vector<std::pair<double, double>> xy(n);
    std::vector<double> left_counts(static_cast<std::size_t>(std::max(k_, 1)));
    std::vector<double> right_counts(left_counts.size());
    for (std::size_t k = 0; k < mtry_; ++k) {
      const ColumnView x = cols_[feats[k]];
      for (std::size_t i = 0; i < n; ++i) xy[i] = {x[rows[i]], y_[rows[i]]};
      std::sort(xy.begin(), xy.end());
      if (xy.front().first == xy.back().first) continue;

      if (task_ == Task::classification) {
        std::fill(left_counts.begin(), left_counts.end(), 0.0);
        std::fill(right_counts.begin(), right_counts.end(), 0.0);
        for (const auto& p : xy) right_counts[static_cast<std::size_t>(p.second)] += 1.0;
        double left_sq = 0.0;
        double right_sq = 0.0;
        for (double c : right_counts) right_sq += c * c;
        for (std::size_t i = 1; i < n; ++i) {
          const auto c = static_cast<std::size_t>(xy[i - 1].second);
          left_sq += 2.0 * left_counts[c] + 1.0;
          right_sq -= 2.0 * right_counts[c] - 1.0;
          left_counts[c] += 1.0;
          right_counts[c] -= 1.0;
          if (xy[i].first == xy[i - 1].first) continue;
          const double nl = static_cast<double>(i);
          const double nr = static_cast<double>(n - i);
          const double imp = (nl - left_sq / nl) + (nr - right_sq / nr);
          consider(best, feats[k], xy[i - 1].first, xy[i].first, imp);
        }
      } else {
        double total = 0.0, total_sq = 0.0;
        for (const auto& p : xy) {
          total += p.second;
          total_sq += p.second * p.second;
        }
        double ls = 0.0, lsq = 0.0;
        for (std::size_t i = 1; i < n; ++i) {
          ls += xy[i - 1].second;
          lsq += xy[i - 1].second * xy[i - 1].second;
          if (xy[i].first == xy[i - 1].first) continue;
          const double nl = static_cast<double>(i);
          const double nr = static_cast<double>(n - i);
          const double rs = total - ls;
          const double rsq = total_sq - lsq;
          const double imp = std::max(0.0, lsq - ls * ls / nl) + std::max(0.0, rsq - rs * rs / nr);
          consider(best, feats[k], xy[i - 1].first, xy[i].first, imp);
        }
      }
    }
    return best;
  }

  static void consider(SplitChoice& best, std::size_t feature, double lo, double hi, double imp) {
    // Require a real improvement; ties keep the earlier candidate.
    if (imp < best.impurity - 1e-12 * std::max(1.0, std::fabs(best.impurity))) {
      double mid = lo + (hi - lo) / 2.0;
      if (!(mid < hi)) mid = lo;
      best.feature = static_cast<int>(feature);
      best.threshold = mid;
      best.impurity = imp;
    }
  }

  int grow(const std::vector<std::size_t>& rows, std::size_t depth) {
    const int id = static_cast<int>(nodes_.size());
    nodes_.emplace_back();
    double value = 0.0;
    const double imp = impurity(rows, value);
    nodes_[static_cast<std::size_t>(id)].value = value;
    if (depth >= cfg_.max_depth || rows.size() < cfg_.min_samples_split || imp <= 0.0) return id;

    SplitChoice split = best_split(rows, imp);
    if (split.feature < 0) return id;

    std::vector<std::size_t> left, right;
    const ColumnView x = cols_[static_cast<std::size_t>(split.feature)];
    for (std::size_t r : rows) (x[r] <= split.threshold ? left : right).push_back(r);
    if (left.empty() || right.empty()) return id;

    int l = grow(left, depth + 1);
    int r = grow(right, depth + 1);
    TreeNode& node = nodes_[static_cast<std::size_t>(id)];
    node.feature = split.feature;
    node.threshold = split.threshold;
    node.left = l;
    node.right = r;
    return id;
  }

  std::span<const ColumnView> cols_;
  ColumnView y_;
  Task task_;
  int k_;
  const ForestConfig& cfg_;
  Rng& rng_;
  std::size_t mtry_;
  std::vector<TreeNode> nodes_;
};

double tree_predict(const std::vector<TreeNode>& tree, std::span<const ColumnView> cols,
                    std::size_t row) {
  std::size_t i = 0;
  while (tree[i].feature >= 0)
    i = static_cast<std::size_t>(cols[static_cast<std::size_t>(tree[i].feature)][row] <= tree[i].threshold
                                     ? tree[i].left
                                     : tree[i].right);
  return tree[i].value;
}

}  // namespace

double Forest::predict_row(std::span<const ColumnView> columns, std::size_t row) const {
  if (trees_.empty()) throw InvariantError("forest has no trees");
  if (task_ == Task::regression) {
    double sum = 0.0;
    for (const auto& t : trees_) sum += tree_predict(t, columns, row);
    return sum / static_cast<double>(trees_.size());
  }
  std::vector<std::size_t> votes(static_cast<std::size_t>(n_classes_), 0);
  for (const auto& t : trees_) ++votes[static_cast<std::size_t>(tree_predict(t, columns, row))];
  return static_cast<double>(std::max_element(votes.begin(), votes.end()) - votes.begin());
}

std::vector<double> Forest::predict(std::span<const ColumnView> columns) const {
  if (columns.empty()) throw Error("predict: no feature columns");
  std::vector<double> out(columns[0].size());
  for (std::size_t r = 0; r < out.size(); ++r) out[r] = predict_row(columns, r);
  return out;
}

Forest train_forest(std::span<const ColumnView> columns, ColumnView y, Task task,
                    const ForestConfig& cfg, std::span<const std::size_t> rows, int n_classes) {
  cfg.validate();
  if (columns.empty()) throw Error("train_forest: no feature columns");
  for (ColumnView c : columns)
    if (c.size() != y.size()) throw Error("train_forest: feature/target length mismatch");
  std::vector<std::size_t> base(rows.begin(), rows.end());
  if (base.empty()) {
    base.resize(y.size());
    std::iota(base.begin(), base.end(), 0);
  }
  if (base.size() < 2) throw Error("train_forest: need at least 2 samples");
  if (task == Task::classification && n_classes <= 0) n_classes = infer_classes(y);

  Forest forest(task, n_classes);
  for (std::size_t t = 0; t < cfg.n_trees; ++t) {
    Rng rng(derive_seed(cfg.seed, t));
    std::vector<std::size_t> sample;
    if (cfg.bootstrap) {
      sample.resize(base.size());
      for (auto& s : sample) s = base[rng.index(base.size())];
    } else {
      sample = base;
    }
    TreeBuilder builder(columns, y, task, n_classes, cfg, rng);
    forest.trees().push_back(builder.build(std::move(sample)));
  }
  return forest;
}

double f1_score(std::span<const double> y_true, std::span<const double> y_pred, int n_classes) {
  if (y_true.size() != y_pred.size()) throw Error("f1_score: length mismatch");
  auto per_class = [&](double label) {
    double tp = 0, fp = 0, fn = 0;
    for (std::size_t i = 0; i < y_true.size(); ++i) {
      const bool t = y_true[i] == label;
      const bool p = y_pred[i] == label;
      tp += t && p;
      fp += !t && p;
      fn += t && !p;
    }
    const double denom = 2 * tp + fp + fn;
    return denom > 0 ? 2 * tp / denom : 0.0;
  };
  if (n_classes <= 0) {
    double mx = 0;
    for (double v : y_true) mx = std::max(mx, v);
    for (double v : y_pred) mx = std::max(mx, v);
    n_classes = std::max(2, static_cast<int>(mx) + 1);
  }
  if (n_classes == 2) return per_class(1.0);
  std::set<double> labels(y_true.begin(), y_true.end());
  labels.insert(y_pred.begin(), y_pred.end());
  if (labels.empty()) return 0.0;
  double sum = 0.0;
  for (double l : labels) sum += per_class(l);
  return sum / static_cast<double>(labels.size());
}

double one_minus_rae(std::span<const double> y_true, std::span<const double> y_pred) {
  if (y_true.size() != y_pred.size()) throw Error("one_minus_rae: length mismatch");
  if (y_true.empty()) throw Error("one_minus_rae: empty input");
  double mean = 0.0;
  for (double v : y_true) mean += v;
  mean /= static_cast<double>(y_true.size());
  double err = 0.0, base = 0.0;
  for (std::size_t i = 0; i < y_true.size(); ++i) {
    err += std::fabs(y_true[i] - y_pred[i]);
    base += std::fabs(y_true[i] - mean);
  }
  if (base == 0.0) throw Error("one_minus_rae: constant target (zero denominator)");
  return 1.0 - err / base;
}

Metrics evaluate_cv(std::span<const ColumnView> features, ColumnView y, Task task,
                    const ForestConfig& cfg, const FoldSplit& folds, int n_classes) {
  if (task == Task::classification && n_classes <= 0) n_classes = infer_classes(y);
  for (const auto& f : folds.folds)
    for (std::size_t i : f.test)
      if (i >= y.size()) throw Error("evaluate_cv: fold index out of range");

  auto run_fold = [&](std::size_t f) {
    ForestConfig fc = cfg;
    fc.seed = cfg.seed + f;
    const Fold& fold = folds.folds[f];
    Forest model = train_forest(features, y, task, fc, fold.train, n_classes);
    std::vector<double> truth, pred;
    truth.reserve(fold.test.size());
    pred.reserve(fold.test.size());
    for (std::size_t r : fold.test) {
      truth.push_back(y[r]);
      pred.push_back(model.predict_row(features, r));
    }
    return task == Task::classification ? f1_score(truth, pred, n_classes)
                                        : one_minus_rae(truth, pred);
  };

  Metrics m;
  const std::size_t nf = folds.folds.size();
  if (nf == 0) throw Error("evaluate_cv: no folds");
  m.fold_scores.assign(nf, 0.0);
  const std::size_t workers = std::min(cfg.threads, nf);
  if (workers <= 1) {
    for (std::size_t f = 0; f < nf; ++f) m.fold_scores[f] = run_fold(f);
  } else {
    std::vector<std::exception_ptr> errors(nf);
    std::vector<std::thread> pool;
    for (std::size_t w = 0; w < workers; ++w)
      pool.emplace_back([&, w] {
        for (std::size_t f = w; f < nf; f += workers) {
          try {
            m.fold_scores[f] = run_fold(f);
          } catch (...) {
            errors[f] = std::current_exception();
          }
        }
      });
    for (auto& t : pool) t.join();
    for (auto& e : errors)
      if (e) std::rethrow_exception(e);
  }
  double sum = 0.0;
  for (double s : m.fold_scores) sum += s;
  m.score = sum / static_cast<double>(nf);
  return m;
}

}  // namespace grfg
