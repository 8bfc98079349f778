#pragma once

#include <vector>

#include "grfg/expr.hpp"
#include "grfg/info.hpp"

namespace grfg {

/// A column of the working feature set together with its derivation.
struct Feature {
  FeatureExpr expr;
  Column values;

  std::string name() const { return render_name(expr); }
};

std::vector<ColumnView> views_of(const std::vector<Feature>& features);
std::vector<ColumnView> views_of(const std::vector<Feature>& features,
                                 std::span<const std::size_t> subset);

enum class Scenario { binary_cross, unary_relevant };

struct GenerationOutcome {
  std::vector<Feature> new_columns;
  Scenario scenario = Scenario::binary_cross;
  std::size_t k_used = 0;
  /// Unary scenario only: true when the second group was the more relevant one.
  bool used_second_group = false;
};

/// dot(a,b) / (|a||b|), or 0 when either norm is 0.
double cosine_similarity(ColumnView a, ColumnView b);

/// Default crossing budget: max(1, ceil((|C1| + |C2|) / 2)).
std::size_t default_k(std::size_t c1_size, std::size_t c2_size);

/// Applies a binary op to the K most dissimilar (lowest cosine) cross pairs,
/// C1 feature on the left. Ties go to the lowest (i, j).
GenerationOutcome generate_binary(Op op, const std::vector<Feature>& c1,
                                  const std::vector<Feature>& c2, std::size_t k);

/// Applies a unary op to every feature of the more target-relevant group
/// (ties go to C1).
GenerationOutcome generate_unary(Op op, const std::vector<Feature>& c1,
                                 const std::vector<Feature>& c2, ColumnView y,
                                 const InfoConfig& cfg, Task task);

/// Keeps the k features with the highest relevance (ties: earlier position),
/// preserving their original order.
std::vector<Feature> kbest_select(std::vector<Feature> features, ColumnView y,
                                  const InfoConfig& cfg, Task task, std::size_t k);

/// Appends new columns (skipping duplicate names and constant columns), then
/// caps the set at 2 * d0 with kbest_select.
std::vector<Feature> postprocess(const std::vector<Feature>& current,
                                 const GenerationOutcome& outcome, std::size_t d0, ColumnView y,
                                 const InfoConfig& cfg, Task task);

}  // namespace grfg
