#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "archipelago/blackbox.hpp"

namespace archipelago {

// Strengths at or below this absolute floor are treated as exact zeros when
// selecting pairs, absorbing floating-point noise.
inline constexpr double kStrengthFloor = 1e-12;

enum class ContextRegime {
  archdetect,      // mean of the all-target and all-baseline contexts
  target_only,     // all-target context alone
  baseline_only,   // all-baseline context alone
  random_contexts, // mean over seeded random contexts
  full_expectation // exact mean over every context of the remaining features
};

struct DetectorConfig {
  ContextRegime contexts = ContextRegime::archdetect;
  int num_random = 1;        // contexts drawn for random_contexts
  std::uint64_t seed = 0;
  int expectation_cap = 16;  // max p admitted by full_expectation
};

struct PairStrength {
  int i = 0;
  int j = 0;
  double strength = 0.0;
  // (context label, strength at that context); strength is their mean.
  std::vector<std::pair<std::string, double>> per_context;

  double context_value(const std::string& label, double fallback) const;
};

struct InteractionRanking {
  // Strength descending, ties by lexicographic (i, j). Contains every pair.
  std::vector<PairStrength> pairs;

  // Highest-ranked pairs with strength above `floor`, at most k of them.
  std::vector<std::pair<int, int>> top_pairs(int k, double floor = kStrengthFloor) const;
};

// Squared, step-scaled second difference of f across the four {i,j} corners
// at the given context. Bits of `context` at i and j are overridden, so the
// result is pure in the remaining coordinates. Symmetric in (i, j) bit for
// bit. Throws InertFeatureError when either feature is inert.
double omega_pair(BlackBox& bb, int i, int j, const Context& context);

// Strengths for all p(p-1)/2 pairs under the configured context set. Pairs
// touching inert features are reported with strength zero and no context
// provenance; strengths at or below kStrengthFloor collapse to exact zeros
// (per-context values stay raw). Deterministic for a fixed seed.
InteractionRanking detect_pairs(BlackBox& bb, const DetectorConfig& config = {});

// Exact mean of omega_pair over every assignment of the remaining p-2
// features: 2^(p-2) contexts. Throws CapacityError when p exceeds `cap`.
double detect_full_expectation(BlackBox& bb, int i, int j, int cap = 16);

enum class ContextSequence { fixed, random };

// Overlap ratios |top_k(n) ∩ top_k(n-1)| / k for n = 2..num_contexts, where
// strengths at n average omega over the first n contexts of the sequence.
// The fixed sequence starts with the all-target and all-baseline contexts;
// later entries (and the whole random sequence) are seeded uniform masks.
std::vector<double> redundancy_curve(BlackBox& bb, ContextSequence sequence,
                                     int num_contexts, int top_k,
                                     std::uint64_t seed);

// Seeded uniform masks, independent bits.
std::vector<Context> random_contexts(int p, int n, std::uint64_t seed);

// Rank-based ROC area of the ranking against the positive pair set, with
// tied strengths contributing 1/2.
double ranking_auc(const InteractionRanking& ranking,
                   const std::vector<std::pair<int, int>>& positive_pairs);

}  // namespace archipelago
