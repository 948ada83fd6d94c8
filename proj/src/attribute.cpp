#include "archipelago/attribute.hpp"

#include <algorithm>

namespace archipelago {

std::string method_name(AttributionMethod method) {
  return method == AttributionMethod::archattribute ? "archattribute"
                                                    : "difference";
}

double arch_attribute(BlackBox& bb, const FeatureSet& set) {
  const int p = bb.space().p();
  set.check_within(p);
  const Context on = Context::all_baseline(p).with_set(set, true);
  const auto f = bb.eval_batch({on, Context::all_baseline(p)});
  return f[0] - f[1];
}

double difference_attribute(BlackBox& bb, const FeatureSet& set) {
  const int p = bb.space().p();
  set.check_within(p);
  const Context off = Context::all_target(p).with_set(set, false);
  const auto f = bb.eval_batch({Context::all_target(p), off});
  return f[0] - f[1];
}

double attribute(BlackBox& bb, const FeatureSet& set, AttributionMethod method) {
  return method == AttributionMethod::archattribute ? arch_attribute(bb, set)
                                                    : difference_attribute(bb, set);
}

double Explanation::phi_sum() const {
  double sum = 0.0;
  for (double v : phi) sum += v;
  return sum;
}

Explanation explain(BlackBox& bb, const InteractionRanking& ranking, int top_k,
                    AttributionMethod method) {
  if (top_k < 0) {
    throw ParameterError("top_k must be non-negative");
  }
  const auto& space = bb.space();
  const int p = space.p();

  const auto selected = ranking.top_pairs(top_k);
  std::vector<FeatureSet> pair_sets;
  pair_sets.reserve(selected.size());
  for (auto [i, j] : selected) {
    pair_sets.push_back(FeatureSet::pair(i, j));
  }

  Explanation ex;
  ex.method = method;
  ex.requested_top_k = top_k;
  ex.used_pairs = static_cast<int>(selected.size());
  ex.sets = merge_overlapping(pair_sets);

  std::vector<bool> covered(static_cast<std::size_t>(p), false);
  for (const auto& island : ex.sets) {
    island.check_within(p);
    for (int i : island.indices()) covered[static_cast<std::size_t>(i)] = true;
  }
  // Inert features carry no attribution by construction and are left out.
  for (int i = 0; i < p; ++i) {
    if (!covered[static_cast<std::size_t>(i)] && !space.inert(i)) {
      ex.sets.push_back(FeatureSet::single(i));
    }
  }
  std::sort(ex.sets.begin(), ex.sets.end(),
            [](const FeatureSet& a, const FeatureSet& b) {
              return a.min_index() < b.min_index();
            });

  ex.phi.reserve(ex.sets.size());
  for (const auto& set : ex.sets) {
    ex.phi.push_back(attribute(bb, set, method));
  }
  ex.f_target = bb.at_target();
  ex.f_baseline = bb.at_baseline();
  ex.completeness_residual = (ex.f_target - ex.f_baseline) - ex.phi_sum();
  return ex;
}

}  // namespace archipelago
