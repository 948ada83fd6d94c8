#pragma once

#include <string>
#include <vector>

#include "archipelago/blackbox.hpp"
#include "archipelago/detect.hpp"

namespace archipelago {

enum class AttributionMethod {
  archattribute,  // f(target on I, baseline elsewhere) - f(baseline)
  difference,     // f(target) - f(baseline on I, target elsewhere)
};

std::string method_name(AttributionMethod method);

double arch_attribute(BlackBox& bb, const FeatureSet& set);
double difference_attribute(BlackBox& bb, const FeatureSet& set);
double attribute(BlackBox& bb, const FeatureSet& set, AttributionMethod method);

// Disjoint feature islands with one attribution each. The residual is
// reported, never assumed zero: detected islands may not capture every
// interaction of an arbitrary function.
struct Explanation {
  std::vector<FeatureSet> sets;  // sorted by smallest index
  std::vector<double> phi;       // aligned with sets
  AttributionMethod method = AttributionMethod::archattribute;
  double completeness_residual = 0.0;  // f(target) - f(baseline) - sum(phi)
  double f_target = 0.0;
  double f_baseline = 0.0;
  int requested_top_k = 0;
  int used_pairs = 0;  // pairs actually merged (nonzero strength available)

  double phi_sum() const;
};

// Merges the top_k ranked pairs into islands, adds a singleton for every
// remaining non-inert feature, and attributes each set. When fewer than
// top_k pairs have nonzero strength the available ones are used and
// `used_pairs` records how many.
Explanation explain(BlackBox& bb, const InteractionRanking& ranking, int top_k,
                    AttributionMethod method = AttributionMethod::archattribute);

}  // namespace archipelago
