#include "grfg/generate.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <unordered_set>

namespace grfg {

std::vector<ColumnView> views_of(const std::vector<Feature>& features) {
  std::vector<ColumnView> out;
  out.reserve(features.size());
  for (const auto& f : features) out.emplace_back(f.values);
  return out;
}

std::vector<ColumnView> views_of(const std::vector<Feature>& features,
                                 std::span<const std::size_t> subset) {
  std::vector<ColumnView> out;
  out.reserve(subset.size());
  for (std::size_t i : subset) out.emplace_back(features.at(i).values);
  return out;
}

double cosine_similarity(ColumnView a, ColumnView b) {
  if (a.size() != b.size()) throw Error("cosine_similarity: length mismatch");
  double dot = 0.0, na = 0.0, nb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    dot += a[i] * b[i];
    na += a[i] * a[i];
    nb += b[i] * b[i];
  }
  if (na == 0.0 || nb == 0.0) return 0.0;
  const double c = dot / (std::sqrt(na) * std::sqrt(nb));
  if (!std::isfinite(c)) return 0.0;
  return std::clamp(c, -1.0, 1.0);
}

std::size_t default_k(std::size_t c1_size, std::size_t c2_size) {
  return std::max<std::size_t>(1, (c1_size + c2_size + 1) / 2);
}

GenerationOutcome generate_binary(Op op, const std::vector<Feature>& c1,
                                  const std::vector<Feature>& c2, std::size_t k) {
  if (is_unary(op)) throw Error("generate_binary needs a binary operation");
  if (c1.empty() || c2.empty()) throw Error("generate_binary: empty group");
  if (k == 0) throw Error("generate_binary: K must be >= 1");

  struct Pair {
    double cosine;
    std::size_t i, j;
  };
  std::vector<Pair> pairs;
  pairs.reserve(c1.size() * c2.size());
  for (std::size_t i = 0; i < c1.size(); ++i)
    for (std::size_t j = 0; j < c2.size(); ++j)
      pairs.push_back({cosine_similarity(c1[i].values, c2[j].values), i, j});
  std::stable_sort(pairs.begin(), pairs.end(),
                   [](const Pair& a, const Pair& b) { return a.cosine < b.cosine; });

  GenerationOutcome out;
  out.scenario = Scenario::binary_cross;
  out.k_used = std::min(k, pairs.size());
  for (std::size_t p = 0; p < out.k_used; ++p) {
    const Feature& l = c1[pairs[p].i];
    const Feature& r = c2[pairs[p].j];
    out.new_columns.push_back(
        {FeatureExpr::binary(op, l.expr, r.expr), apply_op(op, l.values, ColumnView(r.values))});
  }
  return out;
}

GenerationOutcome generate_unary(Op op, const std::vector<Feature>& c1,
                                 const std::vector<Feature>& c2, ColumnView y,
                                 const InfoConfig& cfg, Task task) {
  if (!is_unary(op)) throw Error("generate_unary needs a unary operation");
  if (c1.empty() || c2.empty()) throw Error("generate_unary: empty group");
  const double rel1 = group_relevance(views_of(c1), y, cfg, task);
  const double rel2 = group_relevance(views_of(c2), y, cfg, task);

  GenerationOutcome out;
  out.scenario = Scenario::unary_relevant;
  out.used_second_group = rel2 > rel1;
  const auto& chosen = out.used_second_group ? c2 : c1;
  for (const auto& f : chosen)
    out.new_columns.push_back({FeatureExpr::unary(op, f.expr), apply_op(op, f.values)});
  out.k_used = chosen.size();
  return out;
}

std::vector<Feature> kbest_select(std::vector<Feature> features, ColumnView y,
                                  const InfoConfig& cfg, Task task, std::size_t k) {
  if (k == 0) throw Error("kbest_select: k must be >= 1");
  if (k >= features.size()) return features;
  InfoCache cache(views_of(features), y, cfg, task);
  std::vector<std::size_t> order(features.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return cache.relevance(a) > cache.relevance(b);
  });
  order.resize(k);
  std::sort(order.begin(), order.end());
  std::vector<Feature> kept;
  kept.reserve(k);
  for (std::size_t i : order) kept.push_back(std::move(features[i]));
  return kept;
}

std::vector<Feature> postprocess(const std::vector<Feature>& current,
                                 const GenerationOutcome& outcome, std::size_t d0, ColumnView y,
                                 const InfoConfig& cfg, Task task) {
  if (d0 == 0) throw Error("postprocess: d0 must be positive");
  std::vector<Feature> next = current;
  std::unordered_set<std::string> names;
  for (const auto& f : current) names.insert(f.name());
  for (const auto& f : outcome.new_columns) {
    if (f.values.empty()) continue;
    const bool constant = std::all_of(f.values.begin(), f.values.end(),
                                      [&](double v) { return v == f.values.front(); });
    if (constant) continue;
    if (!names.insert(f.name()).second) continue;
    next.push_back(f);
  }
  if (next.size() > 2 * d0) next = kbest_select(std::move(next), y, cfg, task, 2 * d0);
  return next;
}

}  // namespace grfg
