#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <set>

#include "archipelago/detect.hpp"
#include "archipelago/random.hpp"
#include "archipelago/synth.hpp"
#include "oracle.hpp"

using namespace archipelago;

namespace {

PerturbationSpace cube(int p, StepRule rule = StepRule::unit) {
  return PerturbationSpace::make(std::vector<double>(p, 1.0),
                                 std::vector<double>(p, -1.0), rule);
}

BlackBox synth_bb(SyntheticId id, StepRule rule = StepRule::unit) {
  SyntheticFunction fn(id);
  return make_blackbox(fn.space(rule),
                       [fn](const std::vector<double>& v) { return fn(v); });
}

double vsum(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x;
  return s;
}

std::set<std::pair<int, int>> positive_pairs(const InteractionRanking& r,
                                             double floor = kStrengthFloor) {
  std::set<std::pair<int, int>> out;
  for (const auto& ps : r.pairs) {
    if (ps.strength > floor) out.emplace(ps.i, ps.j);
  }
  return out;
}

}  // namespace

TEST_CASE("linear functions have zero interaction at every corner") {
  auto bb = make_blackbox(cube(6), vsum);
  for (std::uint64_t bits : {0ull, 33ull, 63ull, 21ull}) {
    const auto ctx = Context::from_bits(6, bits);
    CHECK(omega_pair(bb, 0, 1, ctx) == 0.0);
    CHECK(omega_pair(bb, 2, 5, ctx) == 0.0);
  }
}

TEST_CASE("F1 pair strength matches the hand-derived corner value") {
  // The first bilinear block contributes coefficient 2 to the (0,1) product;
  // the second difference is 8 over steps of 2 each.
  auto eq4 = synth_bb(SyntheticId::F1, StepRule::span);
  CHECK(omega_pair(eq4, 0, 1, Context::all_target(40)) == 4.0);
  CHECK(omega_pair(eq4, 0, 1, Context::all_baseline(40)) == 4.0);

  auto unit = synth_bb(SyntheticId::F1, StepRule::unit);
  CHECK(omega_pair(unit, 0, 1, Context::all_target(40)) == 64.0);

  // Cross-block pair from the second bilinear block: coefficient 1.
  CHECK(omega_pair(eq4, 10, 20, Context::all_target(40)) == 1.0);
  CHECK(omega_pair(unit, 10, 20, Context::all_target(40)) == 16.0);
}

TEST_CASE("F3 pair (0,1) is context-dependent: target context misses it") {
  // Pinned from the corner oracle: the baseline-anchored conjunction fires
  // only at the all-baseline corner, so the target context sees a constant.
  SyntheticFunction f3(SyntheticId::F3);
  oracle::RawFunction raw = [f3](const std::vector<double>& v) { return f3(v); };
  const std::vector<double> t(40, 1.0), b(40, -1.0);

  const auto span_space = f3.space(StepRule::span);
  CHECK(oracle::omega(raw, t, b, span_space.step(), 0, 1, t) == 0.0);
  CHECK(oracle::omega(raw, t, b, span_space.step(), 0, 1, b) == 0.25);

  auto eq4 = synth_bb(SyntheticId::F3, StepRule::span);
  CHECK(omega_pair(eq4, 0, 1, Context::all_target(40)) == 0.0);
  CHECK(omega_pair(eq4, 0, 1, Context::all_baseline(40)) == 0.25);

  auto unit = synth_bb(SyntheticId::F3, StepRule::unit);
  CHECK(omega_pair(unit, 0, 1, Context::all_target(40)) == 0.0);
  CHECK(omega_pair(unit, 0, 1, Context::all_baseline(40)) == 4.0);
}

TEST_CASE("omega agrees with the corner oracle on random functions") {
  auto g = rng::engine(2024);
  for (int iter = 0; iter < 25; ++iter) {
    const int p = rng::uniform_int(g, 3, 8);
    std::vector<double> t(static_cast<std::size_t>(p)), b(static_cast<std::size_t>(p));
    for (int i = 0; i < p; ++i) {
      t[static_cast<std::size_t>(i)] = rng::uniform(g, 0.5, 1.5);
      b[static_cast<std::size_t>(i)] = rng::uniform(g, -1.5, -0.5);
    }
    const auto inst = random_gam(g(), p, 1);
    oracle::RawFunction raw = [inst, t, b](const std::vector<double>& v) {
      return inst(v);
    };
    auto space = PerturbationSpace::make(t, b);
    auto bb = make_blackbox(space, [inst](const std::vector<double>& v) { return inst(v); });

    const int i = rng::uniform_int(g, 0, p - 1);
    int j = rng::uniform_int(g, 0, p - 2);
    if (j >= i) ++j;
    const auto ctx = random_contexts(p, 1, g())[0];
    const double direct = oracle::omega(raw, t, b, space.step(), i, j, space.realize(ctx));
    CHECK(omega_pair(bb, i, j, ctx) == doctest::Approx(direct).epsilon(1e-12));
  }
}

TEST_CASE("omega is symmetric in its arguments, bit for bit, and non-negative") {
  auto g = rng::engine(7);
  auto bb = synth_bb(SyntheticId::F2);
  for (int iter = 0; iter < 50; ++iter) {
    const int i = rng::uniform_int(g, 0, 39);
    int j = rng::uniform_int(g, 0, 38);
    if (j >= i) ++j;
    const auto ctx = random_contexts(40, 1, g())[0];
    const double w = omega_pair(bb, i, j, ctx);
    CHECK(w == omega_pair(bb, j, i, ctx));
    CHECK(w >= 0.0);
  }
}

TEST_CASE("additive functions vanish; products do not") {
  auto g = rng::engine(99);
  for (int iter = 0; iter < 30; ++iter) {
    const int p = rng::uniform_int(g, 3, 10);
    // Random univariate pieces: cubic in each coordinate plus a bias.
    std::vector<std::array<double, 3>> coef(static_cast<std::size_t>(p));
    for (auto& c : coef) {
      c = {rng::uniform(g, -2.0, 2.0), rng::uniform(g, -2.0, 2.0),
           rng::uniform(g, -2.0, 2.0)};
    }
    const double bias = rng::uniform(g, -1.0, 1.0);
    auto additive = [coef, bias](const std::vector<double>& v) {
      double s = bias;
      for (std::size_t k = 0; k < v.size(); ++k) {
        s += coef[k][0] * v[k] + coef[k][1] * v[k] * v[k] +
             coef[k][2] * v[k] * v[k] * v[k];
      }
      return s;
    };
    std::vector<double> t(static_cast<std::size_t>(p)), b(static_cast<std::size_t>(p));
    for (int i = 0; i < p; ++i) {
      t[static_cast<std::size_t>(i)] = rng::uniform(g, 0.5, 1.5);
      b[static_cast<std::size_t>(i)] = rng::uniform(g, -1.5, -0.5);
    }
    auto bb = make_blackbox(PerturbationSpace::make(t, b), additive);
    const auto ranking = detect_pairs(bb);
    for (const auto& ps : ranking.pairs) {
      CHECK(ps.strength <= 1e-9);
    }

    // Converse: add one product term and that pair must light up.
    auto with_product = [additive](const std::vector<double>& v) {
      return additive(v) + v[0] * v[1];
    };
    auto bb2 = make_blackbox(PerturbationSpace::make(t, b), with_product);
    CHECK(omega_pair(bb2, 0, 1, Context::all_baseline(p)) > 1e-9);
  }
}

TEST_CASE("two-point slice: nonzero second difference means non-additivity") {
  // Small-instance equivalence on p=2: assign arbitrary values to the four
  // cube corners; the plane through three corners misses the fourth exactly
  // when the second difference is nonzero.
  auto g = rng::engine(5);
  for (int iter = 0; iter < 40; ++iter) {
    double fa = rng::uniform(g, -2.0, 2.0);
    double fb = rng::uniform(g, -2.0, 2.0);
    double fc = rng::uniform(g, -2.0, 2.0);
    double fd = rng::uniform(g, -2.0, 2.0);
    if (iter % 2 == 0) {
      fa = fb + fc - fd;  // force additivity
    }
    auto f = [&](const std::vector<double>& v) {
      const bool i = v[0] > 0, j = v[1] > 0;
      if (i && j) return fa;
      if (!i && j) return fb;
      if (i && !j) return fc;
      return fd;
    };
    auto bb = make_blackbox(cube(2), f);
    const double w = omega_pair(bb, 0, 1, Context::all_baseline(2));
    const double deviation = fa - fb - fc + fd;
    CHECK((w == 0.0) == (deviation == 0.0));
  }
}

TEST_CASE("detect_pairs on F1 separates exactly the ground-truth pairs") {
  auto bb = synth_bb(SyntheticId::F1);
  const auto ranking = detect_pairs(bb);
  REQUIRE(ranking.pairs.size() == 780);

  SyntheticFunction f1(SyntheticId::F1);
  const auto truth = f1.ground_truth_pairs();
  const std::set<std::pair<int, int>> expected(truth.begin(), truth.end());
  CHECK(positive_pairs(ranking) == expected);

  // Zeros are exact for the integer-valued synthetic functions.
  for (const auto& ps : ranking.pairs) {
    if (!expected.count({ps.i, ps.j})) {
      CHECK(ps.strength == 0.0);
    }
  }
  CHECK(ranking_auc(ranking, truth) == 1.0);
}

TEST_CASE("all four synthetic functions rank at AUC 1 under paired contexts") {
  for (auto id : {SyntheticId::F1, SyntheticId::F2, SyntheticId::F3, SyntheticId::F4}) {
    auto bb = synth_bb(id);
    const auto ranking = detect_pairs(bb);
    SyntheticFunction fn(id);
    CHECK(ranking_auc(ranking, fn.ground_truth_pairs()) == 1.0);

    // The mechanism behind the perfect AUC: every ground-truth pair carries
    // positive strength and every other pair is exactly zero.
    std::vector<double> scores;
    std::vector<bool> is_positive;
    const auto truth = fn.ground_truth_pairs();
    const std::set<std::pair<int, int>> expected(truth.begin(), truth.end());
    for (const auto& ps : ranking.pairs) {
      if (expected.count({ps.i, ps.j})) {
        CHECK(ps.strength > 0.0);
      } else {
        CHECK(ps.strength == 0.0);
      }
      scores.push_back(ps.strength);
      is_positive.push_back(expected.count({ps.i, ps.j}) > 0);
    }
    // Cross-check the AUC implementation against the quadratic oracle.
    CHECK(oracle::pair_auc(scores, is_positive) == 1.0);
  }
}

TEST_CASE("single-context regimes miss the blocks they cannot see") {
  // Target-only on F3: every pair of the baseline-anchored block outside the
  // {10..19} overlap scores exactly zero.
  auto f3 = synth_bb(SyntheticId::F3);
  DetectorConfig target_only;
  target_only.contexts = ContextRegime::target_only;
  const auto r3 = detect_pairs(f3, target_only);
  int missed = 0;
  for (const auto& ps : r3.pairs) {
    const bool in_first_block = ps.i < 20 && ps.j < 20;
    const bool in_overlap = ps.i >= 10 && ps.i < 20 && ps.j >= 10 && ps.j < 20;
    if (in_first_block && !in_overlap) {
      CHECK(ps.strength == 0.0);
      ++missed;
    }
  }
  CHECK(missed == 190 - 45);
  SyntheticFunction fn3(SyntheticId::F3);
  CHECK(ranking_auc(r3, fn3.ground_truth_pairs()) == doctest::Approx(262.5 / 335.0));

  // Baseline-only on F2: both blocks are target-anchored, everything is flat.
  auto f2 = synth_bb(SyntheticId::F2);
  DetectorConfig baseline_only;
  baseline_only.contexts = ContextRegime::baseline_only;
  const auto r2 = detect_pairs(f2, baseline_only);
  for (const auto& ps : r2.pairs) {
    CHECK(ps.strength == 0.0);
  }
  SyntheticFunction fn2(SyntheticId::F2);
  CHECK(ranking_auc(r2, fn2.ground_truth_pairs()) == 0.5);
}

TEST_CASE("tie-breaking is lexicographic after strength") {
  auto bb = make_blackbox(cube(5), [](const std::vector<double>& v) {
    return v[0] * v[1] + v[2] * v[3];
  });
  const auto ranking = detect_pairs(bb);
  CHECK(ranking.pairs[0].i == 0);
  CHECK(ranking.pairs[0].j == 1);
  CHECK(ranking.pairs[1].i == 2);
  CHECK(ranking.pairs[1].j == 3);
  CHECK(ranking.pairs[0].strength == ranking.pairs[1].strength);
}

TEST_CASE("per-context provenance is recorded") {
  auto bb = synth_bb(SyntheticId::F3);
  const auto ranking = detect_pairs(bb);
  const auto& top = ranking.pairs.front();
  REQUIRE(top.per_context.size() == 2);
  CHECK(top.per_context[0].first == "target");
  CHECK(top.per_context[1].first == "baseline");
  CHECK(top.strength ==
        (top.per_context[0].second + top.per_context[1].second) / 2.0);
}

TEST_CASE("inert features are skipped with zero strength") {
  auto space = PerturbationSpace::make({1.0, 2.0, 3.0}, {-1.0, 2.0, -3.0});
  auto bb = make_blackbox(space, [](const std::vector<double>& v) {
    return v[0] * v[1] + v[1] * v[2] + v[0] * v[2];
  });
  CHECK_THROWS_AS(omega_pair(bb, 0, 1, Context::all_target(3)), InertFeatureError);
  const auto ranking = detect_pairs(bb);
  for (const auto& ps : ranking.pairs) {
    if (ps.i == 1 || ps.j == 1) {
      CHECK(ps.strength == 0.0);
      CHECK(ps.per_context.empty());
    } else {
      CHECK(ps.strength > 0.0);
    }
  }
}

TEST_CASE("full expectation: exact enumeration properties") {
  // Linear: zero.
  auto linear = make_blackbox(cube(6), vsum);
  CHECK(detect_full_expectation(linear, 0, 5) == 0.0);

  // A lone product is context-independent: expectation equals omega at every
  // context.
  auto product = make_blackbox(cube(4), [](const std::vector<double>& v) {
    return v[0] * v[1];
  });
  const double expectation = detect_full_expectation(product, 0, 1);
  for (std::uint64_t bits = 0; bits < 16; ++bits) {
    CHECK(omega_pair(product, 0, 1, Context::from_bits(4, bits)) ==
          doctest::Approx(expectation).epsilon(1e-12));
  }

  // Truncated conjunction-style function on p=10: the context-dependent pair
  // has a strictly positive mean strictly below its all-baseline peak.
  auto truncated = make_blackbox(cube(10), [](const std::vector<double>& v) {
    std::vector<std::pair<int, double>> first, second;
    for (int i = 0; i < 5; ++i) first.emplace_back(i, -1.0);
    for (int i = 2; i < 8; ++i) second.emplace_back(i, 1.0);
    double lin = 0.0;
    for (double x : v) lin += x;
    return wedge(v, first) + wedge(v, second) + lin;
  });
  const double mean = detect_full_expectation(truncated, 0, 1);
  const double at_baseline = omega_pair(truncated, 0, 1, Context::all_baseline(10));
  CHECK(mean > 0.0);
  CHECK(mean < at_baseline);

  // Enumeration agrees with the independent oracle.
  oracle::RawFunction raw = [](const std::vector<double>& v) {
    std::vector<std::pair<int, double>> first, second;
    for (int i = 0; i < 5; ++i) first.emplace_back(i, -1.0);
    for (int i = 2; i < 8; ++i) second.emplace_back(i, 1.0);
    double lin = 0.0;
    for (double x : v) lin += x;
    return wedge(v, first) + wedge(v, second) + lin;
  };
  const std::vector<double> t(10, 1.0), b(10, -1.0);
  CHECK(mean == doctest::Approx(oracle::full_expectation_omega(
                    raw, t, b, std::vector<double>(10, 1.0), 0, 1))
                    .epsilon(1e-12));
}

TEST_CASE("full expectation refuses oversized spaces") {
  auto bb = make_blackbox(cube(18), vsum);
  CHECK_THROWS_AS(detect_full_expectation(bb, 0, 1), CapacityError);
  DetectorConfig cfg;
  cfg.contexts = ContextRegime::full_expectation;
  CHECK_THROWS_AS(detect_pairs(bb, cfg), CapacityError);
}

TEST_CASE("context-independent interactions: every estimator agrees") {
  auto g = rng::engine(404);
  for (int iter = 0; iter < 10; ++iter) {
    const int p = rng::uniform_int(g, 4, 10);
    // Multilinear degree <= 2, so omega is the same at every context.
    std::vector<double> w(static_cast<std::size_t>(p));
    for (auto& x : w) x = rng::signed_uniform(g, 0.5, 1.5);
    std::vector<std::tuple<int, int, double>> quads;
    for (int i = 0; i < p; ++i) {
      for (int j = i + 1; j < p; ++j) {
        if (rng::unit(g) < 0.4) {
          quads.emplace_back(i, j, rng::signed_uniform(g, 0.5, 2.0));
        }
      }
    }
    auto f = [w, quads](const std::vector<double>& v) {
      double s = 0.0;
      for (std::size_t k = 0; k < v.size(); ++k) s += w[k] * v[k];
      for (const auto& [i, j, c] : quads) {
        s += c * v[static_cast<std::size_t>(i)] * v[static_cast<std::size_t>(j)];
      }
      return s;
    };
    std::vector<double> t(static_cast<std::size_t>(p)), b(static_cast<std::size_t>(p));
    for (int i = 0; i < p; ++i) {
      t[static_cast<std::size_t>(i)] = rng::uniform(g, 0.5, 1.5);
      b[static_cast<std::size_t>(i)] = rng::uniform(g, -1.5, -0.5);
    }
    auto bb = make_blackbox(PerturbationSpace::make(t, b), f);

    DetectorConfig both, target_only, full;
    target_only.contexts = ContextRegime::target_only;
    full.contexts = ContextRegime::full_expectation;
    const auto ra = detect_pairs(bb, both);
    const auto rt = detect_pairs(bb, target_only);
    const auto rf = detect_pairs(bb, full);
    for (std::size_t k = 0; k < ra.pairs.size(); ++k) {
      CHECK(ra.pairs[k].i == rt.pairs[k].i);
      CHECK(ra.pairs[k].j == rt.pairs[k].j);
      CHECK(ra.pairs[k].i == rf.pairs[k].i);
      const double scale = std::max({1.0, ra.pairs[k].strength});
      CHECK(std::abs(ra.pairs[k].strength - rt.pairs[k].strength) / scale <= 1e-9);
      CHECK(std::abs(ra.pairs[k].strength - rf.pairs[k].strength) / scale <= 1e-9);
    }
  }
}

TEST_CASE("scaling the function scales strengths by c^2 and keeps the order") {
  SyntheticFunction f4(SyntheticId::F4);
  auto bb = synth_bb(SyntheticId::F4);
  const double c = -3.5;
  auto scaled = make_blackbox(f4.space(), [f4, c](const std::vector<double>& v) {
    return c * f4(v);
  });
  const auto ra = detect_pairs(bb);
  const auto rb = detect_pairs(scaled);
  for (std::size_t k = 0; k < ra.pairs.size(); ++k) {
    CHECK(ra.pairs[k].i == rb.pairs[k].i);
    CHECK(ra.pairs[k].j == rb.pairs[k].j);
    CHECK(rb.pairs[k].strength ==
          doctest::Approx(c * c * ra.pairs[k].strength).epsilon(1e-12));
  }
}

TEST_CASE("random contexts are deterministic per seed") {
  auto a = random_contexts(40, 5, 1234);
  auto b = random_contexts(40, 5, 1234);
  CHECK(a == b);
  auto c = random_contexts(40, 5, 1235);
  CHECK(a != c);

  auto bb1 = synth_bb(SyntheticId::F2);
  auto bb2 = synth_bb(SyntheticId::F2);
  DetectorConfig cfg;
  cfg.contexts = ContextRegime::random_contexts;
  cfg.num_random = 4;
  cfg.seed = 77;
  const auto r1 = detect_pairs(bb1, cfg);
  const auto r2 = detect_pairs(bb2, cfg);
  REQUIRE(r1.pairs.size() == r2.pairs.size());
  for (std::size_t k = 0; k < r1.pairs.size(); ++k) {
    CHECK(r1.pairs[k].i == r2.pairs[k].i);
    CHECK(r1.pairs[k].j == r2.pairs[k].j);
    CHECK(r1.pairs[k].strength == r2.pairs[k].strength);  // bit-identical
  }
}

TEST_CASE("detect_pairs rejects degenerate inputs") {
  auto bb = make_blackbox(PerturbationSpace::make({1.0}, {0.0}), vsum);
  CHECK_THROWS_AS(detect_pairs(bb), ParameterError);
  auto bb2 = make_blackbox(cube(3), vsum);
  CHECK_THROWS_AS(omega_pair(bb2, 1, 1, Context::all_target(3)), ParameterError);
  CHECK_THROWS_AS(omega_pair(bb2, 0, 9, Context::all_target(3)), DimensionError);
}

TEST_CASE("top_pairs honors the zero floor and the count") {
  auto bb = synth_bb(SyntheticId::F4);
  const auto ranking = detect_pairs(bb);
  CHECK(ranking.top_pairs(2).size() == 2);
  // F4 has 193 pairs with positive strength; asking for more stops there.
  CHECK(ranking.top_pairs(500).size() == 193);
  CHECK(ranking.top_pairs(0).empty());
  CHECK_THROWS_AS(ranking.top_pairs(-1), ParameterError);
}

TEST_CASE("redundancy: context-independent interactions never reshuffle") {
  auto bb = make_blackbox(cube(8), [](const std::vector<double>& v) {
    return v[0] * v[1] + v[2] * v[3] + v[4] * v[5];
  });
  for (auto seq : {ContextSequence::fixed, ContextSequence::random}) {
    const auto ratios = redundancy_curve(bb, seq, 6, 3, 9);
    REQUIRE(ratios.size() == 5);
    for (double r : ratios) {
      CHECK(r == 1.0);
    }
  }
}

TEST_CASE("redundancy: F2 fixed sequence is stable from n=3 on") {
  auto bb = synth_bb(SyntheticId::F2);
  SyntheticFunction f2(SyntheticId::F2);
  const int k = static_cast<int>(f2.ground_truth_pairs().size());
  const auto ratios = redundancy_curve(bb, ContextSequence::fixed, 8, k, 21);
  REQUIRE(ratios.size() == 7);
  for (std::size_t n = 1; n < ratios.size(); ++n) {  // entries for n >= 3
    CHECK(ratios[n] == 1.0);
  }
}

TEST_CASE("redundancy: minimal curve and validation") {
  auto bb = make_blackbox(cube(4), [](const std::vector<double>& v) {
    return v[0] * v[1];
  });
  const auto ratios = redundancy_curve(bb, ContextSequence::fixed, 2, 1, 0);
  REQUIRE(ratios.size() == 1);  // single entry comparing n=2 to n=1
  CHECK(ratios[0] == 1.0);
  CHECK_THROWS_AS(redundancy_curve(bb, ContextSequence::fixed, 1, 1, 0),
                  ParameterError);
  CHECK_THROWS_AS(redundancy_curve(bb, ContextSequence::fixed, 3, 0, 0),
                  ParameterError);
}
