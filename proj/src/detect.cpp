#include "archipelago/detect.hpp"

#include <algorithm>
#include <array>
#include <set>

#include "archipelago/random.hpp"

namespace archipelago {

namespace {

void check_pair(const PerturbationSpace& space, int i, int j) {
  if (i == j) {
    throw ParameterError("interaction pair needs two distinct features");
  }
  if (i < 0 || j < 0 || i >= space.p() || j >= space.p()) {
    throw DimensionError("pair index out of range");
  }
  if (space.inert(i) || space.inert(j)) {
    throw InertFeatureError("feature " + std::to_string(space.inert(i) ? i : j) +
                            " has equal target and baseline values");
  }
}

// Corner order: (target,target), (baseline,target), (target,baseline),
// (baseline,baseline) on (lo, hi).
std::array<Context, 4> corner_contexts(const Context& ctx, int lo, int hi) {
  return {ctx.with_pair(lo, true, hi, true), ctx.with_pair(lo, false, hi, true),
          ctx.with_pair(lo, true, hi, false),
          ctx.with_pair(lo, false, hi, false)};
}

double omega_from_corners(const std::vector<double>& f, double step_lo,
                          double step_hi) {
  const double second = (f[0] - f[1]) - (f[2] - f[3]);
  const double scaled = second / (step_lo * step_hi);
  return scaled * scaled;
}

// Ranked strengths at or below the floor collapse to exact zeros, so tied
// pairs order identically no matter which estimator produced the noise.
double snap_to_zero(double strength) {
  return strength <= kStrengthFloor ? 0.0 : strength;
}

std::vector<std::pair<std::string, Context>> regime_contexts(
    const PerturbationSpace& space, const DetectorConfig& cfg) {
  const int p = space.p();
  std::vector<std::pair<std::string, Context>> out;
  switch (cfg.contexts) {
    case ContextRegime::archdetect:
      out.emplace_back("target", Context::all_target(p));
      out.emplace_back("baseline", Context::all_baseline(p));
      break;
    case ContextRegime::target_only:
      out.emplace_back("target", Context::all_target(p));
      break;
    case ContextRegime::baseline_only:
      out.emplace_back("baseline", Context::all_baseline(p));
      break;
    case ContextRegime::random_contexts: {
      if (cfg.num_random < 1) {
        throw ParameterError("random context count must be at least 1");
      }
      auto ctxs = random_contexts(p, cfg.num_random, cfg.seed);
      for (int c = 0; c < cfg.num_random; ++c) {
        out.emplace_back("random" + std::to_string(c + 1),
                         std::move(ctxs[static_cast<std::size_t>(c)]));
      }
      break;
    }
    case ContextRegime::full_expectation:
      break;  // handled separately
  }
  return out;
}

bool rank_before(const PairStrength& a, const PairStrength& b) {
  if (a.strength != b.strength) return a.strength > b.strength;
  if (a.i != b.i) return a.i < b.i;
  return a.j < b.j;
}

}  // namespace

double PairStrength::context_value(const std::string& label, double fallback) const {
  for (const auto& [name, value] : per_context) {
    if (name == label) return value;
  }
  return fallback;
}

std::vector<std::pair<int, int>> InteractionRanking::top_pairs(int k,
                                                               double floor) const {
  if (k < 0) {
    throw ParameterError("top_k must be non-negative");
  }
  std::vector<std::pair<int, int>> out;
  for (const auto& ps : pairs) {
    if (static_cast<int>(out.size()) >= k) break;
    if (ps.strength <= floor) break;  // ranking is sorted descending
    out.emplace_back(ps.i, ps.j);
  }
  return out;
}

double omega_pair(BlackBox& bb, int i, int j, const Context& context) {
  const auto& space = bb.space();
  check_pair(space, i, j);
  if (context.size() != space.p()) {
    throw DimensionError("context length does not match space");
  }
  // Canonical (lo, hi) order keeps the arithmetic identical under argument
  // swap, so omega_pair(i, j) == omega_pair(j, i) exactly.
  const int lo = std::min(i, j);
  const int hi = std::max(i, j);
  const auto corners = corner_contexts(context, lo, hi);
  const auto f = bb.eval_batch({corners.begin(), corners.end()});
  return omega_from_corners(f, space.step()[static_cast<std::size_t>(lo)],
                            space.step()[static_cast<std::size_t>(hi)]);
}

InteractionRanking detect_pairs(BlackBox& bb, const DetectorConfig& cfg) {
  const auto& space = bb.space();
  const int p = space.p();
  if (p < 2) {
    throw ParameterError("pairwise detection needs at least two features");
  }

  InteractionRanking ranking;
  ranking.pairs.reserve(static_cast<std::size_t>(p) * (p - 1) / 2);

  if (cfg.contexts == ContextRegime::full_expectation) {
    for (int lo = 0; lo < p; ++lo) {
      for (int hi = lo + 1; hi < p; ++hi) {
        PairStrength ps{lo, hi, 0.0, {}};
        if (!space.inert(lo) && !space.inert(hi)) {
          const double mean = detect_full_expectation(bb, lo, hi, cfg.expectation_cap);
          ps.per_context.emplace_back("full_expectation", mean);
          ps.strength = snap_to_zero(mean);
        }
        ranking.pairs.push_back(std::move(ps));
      }
    }
    std::sort(ranking.pairs.begin(), ranking.pairs.end(), rank_before);
    return ranking;
  }

  const auto contexts = regime_contexts(space, cfg);

  // Warm the cache in one pass so corner reuse is maximal and the evaluator
  // sees large batches.
  std::vector<Context> wanted;
  wanted.reserve(contexts.size() * static_cast<std::size_t>(p) * (p - 1) * 2);
  for (const auto& [label, ctx] : contexts) {
    for (int lo = 0; lo < p; ++lo) {
      if (space.inert(lo)) continue;
      for (int hi = lo + 1; hi < p; ++hi) {
        if (space.inert(hi)) continue;
        const auto corners = corner_contexts(ctx, lo, hi);
        wanted.insert(wanted.end(), corners.begin(), corners.end());
      }
    }
  }
  bb.eval_batch(wanted);

  for (int lo = 0; lo < p; ++lo) {
    for (int hi = lo + 1; hi < p; ++hi) {
      PairStrength ps{lo, hi, 0.0, {}};
      if (!space.inert(lo) && !space.inert(hi)) {
        double sum = 0.0;
        for (const auto& [label, ctx] : contexts) {
          const double w = omega_pair(bb, lo, hi, ctx);
          ps.per_context.emplace_back(label, w);
          sum += w;
        }
        ps.strength = snap_to_zero(sum / static_cast<double>(contexts.size()));
      }
      ranking.pairs.push_back(std::move(ps));
    }
  }
  std::sort(ranking.pairs.begin(), ranking.pairs.end(), rank_before);
  return ranking;
}

double detect_full_expectation(BlackBox& bb, int i, int j, int cap) {
  const auto& space = bb.space();
  check_pair(space, i, j);
  const int p = space.p();
  if (cap < 2) {
    throw ParameterError("expectation cap must be at least 2");
  }
  if (p > cap) {
    throw CapacityError("exhaustive expectation over p=" + std::to_string(p) +
                        " exceeds the cap of " + std::to_string(cap));
  }
  const int lo = std::min(i, j);
  const int hi = std::max(i, j);

  std::vector<int> rest;
  rest.reserve(static_cast<std::size_t>(p - 2));
  for (int k = 0; k < p; ++k) {
    if (k != lo && k != hi) rest.push_back(k);
  }

  const std::uint64_t total = 1ull << rest.size();
  double sum = 0.0;
  constexpr std::uint64_t kChunk = 1024;
  std::vector<Context> corners;
  for (std::uint64_t begin = 0; begin < total; begin += kChunk) {
    const std::uint64_t end = std::min(total, begin + kChunk);
    corners.clear();
    for (std::uint64_t code = begin; code < end; ++code) {
      Context ctx(p);
      for (std::size_t b = 0; b < rest.size(); ++b) {
        if ((code >> b) & 1u) {
          ctx = ctx.with(rest[b], true);
        }
      }
      const auto c = corner_contexts(ctx, lo, hi);
      corners.insert(corners.end(), c.begin(), c.end());
    }
    const auto f = bb.eval_batch(corners);
    for (std::size_t k = 0; k + 3 < f.size(); k += 4) {
      sum += omega_from_corners({f[k], f[k + 1], f[k + 2], f[k + 3]},
                                space.step()[static_cast<std::size_t>(lo)],
                                space.step()[static_cast<std::size_t>(hi)]);
    }
  }
  return sum / static_cast<double>(total);
}

std::vector<Context> random_contexts(int p, int n, std::uint64_t seed) {
  if (p < 1 || n < 0) {
    throw ParameterError("invalid random context request");
  }
  auto g = rng::engine(seed);
  std::vector<Context> out;
  out.reserve(static_cast<std::size_t>(n));
  const int words = (p + 63) / 64;
  for (int c = 0; c < n; ++c) {
    std::vector<std::uint64_t> w(static_cast<std::size_t>(words));
    for (auto& word : w) word = g();
    out.push_back(Context::from_words(p, std::move(w)));
  }
  return out;
}

std::vector<double> redundancy_curve(BlackBox& bb, ContextSequence sequence,
                                     int num_contexts, int top_k,
                                     std::uint64_t seed) {
  const auto& space = bb.space();
  const int p = space.p();
  if (num_contexts < 2) {
    throw ParameterError("redundancy needs at least two contexts");
  }
  if (top_k < 1) {
    throw ParameterError("top_k must be at least 1");
  }

  std::vector<Context> contexts;
  if (sequence == ContextSequence::fixed) {
    contexts.push_back(Context::all_target(p));
    contexts.push_back(Context::all_baseline(p));
    auto rest = random_contexts(p, num_contexts - 2, seed);
    contexts.insert(contexts.end(), rest.begin(), rest.end());
  } else {
    contexts = random_contexts(p, num_contexts, seed);
  }

  std::vector<std::pair<int, int>> all_pairs;
  for (int lo = 0; lo < p; ++lo) {
    for (int hi = lo + 1; hi < p; ++hi) {
      all_pairs.emplace_back(lo, hi);
    }
  }

  // omegas[pair][context]; inert pairs stay identically zero.
  std::vector<std::vector<double>> omegas(
      all_pairs.size(), std::vector<double>(contexts.size(), 0.0));
  for (std::size_t ci = 0; ci < contexts.size(); ++ci) {
    std::vector<Context> wanted;
    for (const auto& [lo, hi] : all_pairs) {
      if (space.inert(lo) || space.inert(hi)) continue;
      const auto corners = corner_contexts(contexts[ci], lo, hi);
      wanted.insert(wanted.end(), corners.begin(), corners.end());
    }
    bb.eval_batch(wanted);
    for (std::size_t pi = 0; pi < all_pairs.size(); ++pi) {
      const auto& [lo, hi] = all_pairs[pi];
      if (space.inert(lo) || space.inert(hi)) continue;
      omegas[pi][ci] = omega_pair(bb, lo, hi, contexts[ci]);
    }
  }

  // Top-k is taken by rank regardless of zero strengths, with the usual
  // (strength desc, lexicographic) order.
  auto top_set = [&](int n_contexts) {
    std::vector<std::size_t> order(all_pairs.size());
    std::vector<double> strength(all_pairs.size());
    for (std::size_t pi = 0; pi < all_pairs.size(); ++pi) {
      double sum = 0.0;
      for (int c = 0; c < n_contexts; ++c) {
        sum += omegas[pi][static_cast<std::size_t>(c)];
      }
      strength[pi] = snap_to_zero(sum / static_cast<double>(n_contexts));
      order[pi] = pi;
    }
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
      if (strength[a] != strength[b]) return strength[a] > strength[b];
      return all_pairs[a] < all_pairs[b];
    });
    const std::size_t take =
        std::min<std::size_t>(static_cast<std::size_t>(top_k), order.size());
    std::set<std::pair<int, int>> out;
    for (std::size_t k = 0; k < take; ++k) {
      out.insert(all_pairs[order[k]]);
    }
    return out;
  };

  std::vector<double> ratios;
  ratios.reserve(static_cast<std::size_t>(num_contexts - 1));
  auto previous = top_set(1);
  for (int n = 2; n <= num_contexts; ++n) {
    auto current = top_set(n);
    std::size_t overlap = 0;
    for (const auto& pr : current) {
      overlap += previous.count(pr);
    }
    ratios.push_back(static_cast<double>(overlap) / static_cast<double>(top_k));
    previous = std::move(current);
  }
  return ratios;
}

double ranking_auc(const InteractionRanking& ranking,
                   const std::vector<std::pair<int, int>>& positive_pairs) {
  std::set<std::pair<int, int>> positives;
  for (auto [i, j] : positive_pairs) {
    positives.emplace(std::min(i, j), std::max(i, j));
  }
  const std::size_t n = ranking.pairs.size();
  if (n == 0) {
    throw ParameterError("ranking is empty");
  }

  std::vector<std::size_t> order(n);
  for (std::size_t k = 0; k < n; ++k) order[k] = k;
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return ranking.pairs[a].strength < ranking.pairs[b].strength;
  });

  // Mann-Whitney with average ranks over tie groups.
  double positive_rank_sum = 0.0;
  std::size_t n_pos = 0;
  std::size_t k = 0;
  while (k < n) {
    std::size_t end = k;
    while (end < n && ranking.pairs[order[end]].strength ==
                          ranking.pairs[order[k]].strength) {
      ++end;
    }
    const double avg_rank = (static_cast<double>(k + 1) + static_cast<double>(end)) / 2.0;
    for (std::size_t t = k; t < end; ++t) {
      const auto& ps = ranking.pairs[order[t]];
      if (positives.count({ps.i, ps.j})) {
        positive_rank_sum += avg_rank;
        ++n_pos;
      }
    }
    k = end;
  }
  const std::size_t n_neg = n - n_pos;
  if (n_pos == 0 || n_neg == 0) {
    throw ParameterError("AUC needs both positive and negative pairs");
  }
  const double u = positive_rank_sum -
                   static_cast<double>(n_pos) * (static_cast<double>(n_pos) + 1.0) / 2.0;
  return u / (static_cast<double>(n_pos) * static_cast<double>(n_neg));
}

}  // namespace archipelago
