#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <set>

#include "archipelago/random.hpp"
#include "archipelago/space.hpp"

using namespace archipelago;

namespace {

PerturbationSpace cube3() {
  return PerturbationSpace::make({1.0, 1.0, 1.0}, {-1.0, -1.0, -1.0});
}

}  // namespace

TEST_CASE("realize composes target and baseline by mask") {
  auto space = cube3();
  CHECK(space.realize(Context::all_target(3)) == std::vector<double>{1, 1, 1});
  CHECK(space.realize(Context::all_baseline(3)) == std::vector<double>{-1, -1, -1});
  const auto single = Context::all_baseline(3).with(0, true);
  CHECK(space.realize(single) == std::vector<double>{1, -1, -1});
}

TEST_CASE("realize rejects mismatched context length") {
  auto space = cube3();
  CHECK_THROWS_AS(space.realize(Context::all_target(4)), DimensionError);
}

TEST_CASE("space validation") {
  CHECK_THROWS_AS(PerturbationSpace::make({1.0}, {0.5, 0.5}), DimensionError);
  CHECK_THROWS_AS(PerturbationSpace::make({}, {}), ParameterError);
  const double nan = std::nan("");
  CHECK_THROWS_AS(PerturbationSpace::make({nan}, {0.0}), ParameterError);
  const double inf = std::numeric_limits<double>::infinity();
  CHECK_THROWS_AS(PerturbationSpace::make({1.0}, {inf}), ParameterError);
}

TEST_CASE("step conventions") {
  auto unit = PerturbationSpace::make({2.0, 5.0}, {-1.0, 5.0}, StepRule::unit);
  CHECK(unit.step() == std::vector<double>{1.0, 1.0});
  auto span = PerturbationSpace::make({2.0, 5.0}, {-1.0, 5.0}, StepRule::span);
  CHECK(span.step() == std::vector<double>{3.0, 0.0});
  CHECK_FALSE(span.inert(0));
  CHECK(span.inert(1));
  CHECK(span.inert_features() == std::vector<int>{1});
}

TEST_CASE("mask overrides force bits and leave the rest") {
  const auto zeros = Context::all_baseline(4);
  const auto ones = Context::all_target(4);

  auto pair_on = zeros.with_set(FeatureSet::pair(1, 2), true);
  CHECK(pair_on.bits() == "0110");

  auto minus_one = ones.with_set(FeatureSet::single(0), false);
  CHECK(minus_one.bits() == "0111");

  auto grown = Context::from_bits(4, 0b0110).with_set(FeatureSet::pair(2, 3), true);
  CHECK(grown.bits() == "0111");
  CHECK(grown.count() == 3);

  CHECK_THROWS_AS(zeros.with(7, true), DimensionError);
  CHECK_THROWS_AS(zeros.with_set(FeatureSet::single(4), true), DimensionError);
}

TEST_CASE("realize is a bijection when no feature is inert") {
  auto space = PerturbationSpace::make({1.0, 0.5, 2.0, -0.25},
                                       {-1.0, 0.25, 0.0, 0.75});
  std::set<std::vector<double>> seen;
  for (std::uint64_t bits = 0; bits < 16; ++bits) {
    seen.insert(space.realize(Context::from_bits(4, bits)));
  }
  CHECK(seen.size() == 16);
}

TEST_CASE("feature set validation") {
  CHECK_THROWS_AS(FeatureSet({}), ParameterError);
  CHECK_THROWS_AS(FeatureSet({1, 1}), ParameterError);
  CHECK_THROWS_AS(FeatureSet({-1}), ParameterError);
  CHECK(FeatureSet({3, 1, 2}).indices() == std::vector<int>{1, 2, 3});
  CHECK(FeatureSet::range(2, 5).indices() == std::vector<int>{2, 3, 4});
  CHECK_THROWS_AS(FeatureSet::range(3, 3), ParameterError);
}

TEST_CASE("merge_overlapping closes transitive overlaps") {
  auto out = merge_overlapping(
      {FeatureSet({1, 2}), FeatureSet({2, 3}), FeatureSet({4, 5})});
  REQUIRE(out.size() == 2);
  CHECK(out[0].indices() == std::vector<int>{1, 2, 3});
  CHECK(out[1].indices() == std::vector<int>{4, 5});

  auto single = merge_overlapping({FeatureSet({1, 2})});
  REQUIRE(single.size() == 1);
  CHECK(single[0].indices() == std::vector<int>{1, 2});

  auto chained = merge_overlapping(
      {FeatureSet({1, 2}), FeatureSet({3, 4}), FeatureSet({2, 4})});
  REQUIRE(chained.size() == 1);
  CHECK(chained[0].indices() == std::vector<int>{1, 2, 3, 4});

  CHECK(merge_overlapping({}).empty());
}

TEST_CASE("merge_overlapping is idempotent, order-insensitive, disjoint") {
  auto g = rng::engine(7);
  for (int iter = 0; iter < 200; ++iter) {
    const int n_sets = rng::uniform_int(g, 1, 8);
    std::vector<FeatureSet> sets;
    for (int s = 0; s < n_sets; ++s) {
      std::set<int> members;
      const int size = rng::uniform_int(g, 1, 5);
      while (static_cast<int>(members.size()) < size) {
        members.insert(rng::uniform_int(g, 0, 19));
      }
      sets.push_back(FeatureSet({members.begin(), members.end()}));
    }

    const auto merged = merge_overlapping(sets);

    // Idempotent.
    CHECK(merge_overlapping(merged) == merged);

    // Insensitive to input permutation.
    auto shuffled = sets;
    rng::shuffle(shuffled, g);
    CHECK(merge_overlapping(shuffled) == merged);

    // Pairwise disjoint, and the union covers every input index.
    std::set<int> seen;
    for (const auto& set : merged) {
      for (int i : set.indices()) {
        CHECK(seen.insert(i).second);
      }
    }
    for (const auto& set : sets) {
      for (int i : set.indices()) {
        CHECK(seen.count(i) == 1);
      }
    }
  }
}
