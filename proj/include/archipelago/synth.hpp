#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <json.hpp>

#include "archipelago/random.hpp"
#include "archipelago/space.hpp"

namespace archipelago {

// Conjunction indicator: +1 when v matches every required (index, value)
// entry exactly, -1 otherwise. An empty requirement list matches vacuously.
double wedge(const std::vector<double>& v,
             const std::vector<std::pair<int, double>>& required);

enum class SyntheticId { F1, F2, F3, F4 };

// The four benchmark functions on p = 40 with known interaction structure,
// evaluated over target +1 and baseline -1 per feature. F1 is two bilinear
// blocks plus a linear term; F2-F4 combine conjunction indicators (anchored
// at target values, baseline values, or a mix) with a linear term.
class SyntheticFunction {
 public:
  explicit SyntheticFunction(SyntheticId id) : id_(id) {}

  SyntheticId id() const { return id_; }
  std::string name() const;
  int p() const { return 40; }

  double operator()(const std::vector<double>& v) const;

  PerturbationSpace space(StepRule rule = StepRule::unit) const;

  // Expected disjoint islands after merging all ground-truth pairs.
  std::vector<FeatureSet> ground_truth_sets() const;
  // Positive pairs (i < j, 0-based) for ranking evaluation.
  std::vector<std::pair<int, int>> ground_truth_pairs() const;

 private:
  SyntheticId id_;
};

std::optional<SyntheticId> synthetic_id_from(std::string_view name);

struct GamTerm {
  std::vector<int> features;  // subset of the owning set
  double coef = 0.0;
};

// One additive component: a multilinear polynomial over `features` plus a
// constant chosen so the polynomial has a root at the baseline slice.
struct GamSubfunction {
  FeatureSet features;
  std::vector<GamTerm> terms;
  double constant = 0.0;

  double value(const std::vector<double>& v) const;
};

// Sum of subfunctions over disjoint feature sets plus a bias, with target
// and baseline vectors chosen so every subfunction vanishes at the baseline.
// Per-set attributions therefore have an exact closed form.
class GeneralizedAdditiveInstance {
 public:
  GeneralizedAdditiveInstance(int p, double bias,
                              std::vector<GamSubfunction> subfunctions,
                              std::vector<double> target,
                              std::vector<double> baseline);

  int p() const { return p_; }
  double bias() const { return bias_; }
  const std::vector<GamSubfunction>& subfunctions() const { return subfunctions_; }
  const std::vector<double>& target() const { return target_; }
  const std::vector<double>& baseline() const { return baseline_; }

  double operator()(const std::vector<double>& v) const;
  double subfunction_value(int set_index, const std::vector<double>& v) const;

  PerturbationSpace space(StepRule rule = StepRule::unit) const;

  std::vector<std::pair<int, int>> within_set_pairs() const;
  std::vector<int> unused_features() const;

  nlohmann::json to_json() const;
  static GeneralizedAdditiveInstance from_json(const nlohmann::json& j);

 private:
  int p_ = 0;
  double bias_ = 0.0;
  std::vector<GamSubfunction> subfunctions_;
  std::vector<double> target_;
  std::vector<double> baseline_;
};

// Random multilinear polynomial over `features`: every singleton and pair
// carries a coefficient with magnitude well above the higher-order terms,
// so each within-set pair stays detectable at any context; the constant
// zeroes the baseline slice.
GamSubfunction random_subfunction(const FeatureSet& features, rng::Engine& g,
                                  const std::vector<double>& baseline);

// Seeded instance with `num_sets` disjoint sets of 2-4 features each over a
// shuffled subset of {0..p-1}. Requires 2 * num_sets <= p; features not
// assigned to any set are unused by the function.
GeneralizedAdditiveInstance random_gam(std::uint64_t seed, int p, int num_sets);

}  // namespace archipelago
