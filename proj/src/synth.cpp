#include "archipelago/synth.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>

namespace archipelago {

double wedge(const std::vector<double>& v,
             const std::vector<std::pair<int, double>>& required) {
  for (const auto& [index, value] : required) {
    if (index < 0 || index >= static_cast<int>(v.size())) {
      throw DimensionError("wedge key out of range");
    }
    if (v[static_cast<std::size_t>(index)] != value) {
      return -1.0;
    }
  }
  return 1.0;
}

namespace {

std::vector<std::pair<int, double>> anchored(int begin, int end, double value) {
  std::vector<std::pair<int, double>> keys;
  keys.reserve(static_cast<std::size_t>(end - begin));
  for (int i = begin; i < end; ++i) keys.emplace_back(i, value);
  return keys;
}

double linear_sum(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x;
  return s;
}

void add_pairs_within(std::set<std::pair<int, int>>& out, int begin, int end) {
  for (int i = begin; i < end; ++i) {
    for (int j = i + 1; j < end; ++j) {
      out.emplace(i, j);
    }
  }
}

}  // namespace

std::string SyntheticFunction::name() const {
  switch (id_) {
    case SyntheticId::F1: return "F1";
    case SyntheticId::F2: return "F2";
    case SyntheticId::F3: return "F3";
    case SyntheticId::F4: return "F4";
  }
  return "?";
}

double SyntheticFunction::operator()(const std::vector<double>& v) const {
  if (static_cast<int>(v.size()) != p()) {
    throw DimensionError("synthetic function expects p=40 inputs");
  }
  switch (id_) {
    case SyntheticId::F1: {
      // Written as the literal double sums, diagonal included.
      double s = 0.0;
      for (int i = 0; i < 10; ++i) {
        for (int j = 0; j < 10; ++j) {
          s += v[static_cast<std::size_t>(i)] * v[static_cast<std::size_t>(j)];
        }
      }
      for (int i = 10; i < 20; ++i) {
        for (int j = 20; j < 30; ++j) {
          s += v[static_cast<std::size_t>(i)] * v[static_cast<std::size_t>(j)];
        }
      }
      return s + linear_sum(v);
    }
    case SyntheticId::F2:
      return wedge(v, anchored(0, 20, 1.0)) + wedge(v, anchored(10, 30, 1.0)) +
             linear_sum(v);
    case SyntheticId::F3:
      return wedge(v, anchored(0, 20, -1.0)) + wedge(v, anchored(10, 30, 1.0)) +
             linear_sum(v);
    case SyntheticId::F4:
      return wedge(v, {{0, 1.0}, {1, 1.0}, {2, -1.0}}) +
             wedge(v, anchored(10, 30, 1.0)) + linear_sum(v);
  }
  return 0.0;
}

PerturbationSpace SyntheticFunction::space(StepRule rule) const {
  return PerturbationSpace::make(std::vector<double>(40, 1.0),
                                 std::vector<double>(40, -1.0), rule);
}

std::vector<FeatureSet> SyntheticFunction::ground_truth_sets() const {
  switch (id_) {
    case SyntheticId::F1:
      return {FeatureSet::range(0, 10), FeatureSet::range(10, 30)};
    case SyntheticId::F2:
    case SyntheticId::F3:
      return {FeatureSet::range(0, 30)};
    case SyntheticId::F4:
      return {FeatureSet({0, 1, 2}), FeatureSet::range(10, 30)};
  }
  return {};
}

std::vector<std::pair<int, int>> SyntheticFunction::ground_truth_pairs() const {
  std::set<std::pair<int, int>> pairs;
  switch (id_) {
    case SyntheticId::F1:
      add_pairs_within(pairs, 0, 10);
      for (int i = 10; i < 20; ++i) {
        for (int j = 20; j < 30; ++j) {
          pairs.emplace(i, j);
        }
      }
      break;
    case SyntheticId::F2:
    case SyntheticId::F3:
      add_pairs_within(pairs, 0, 20);
      add_pairs_within(pairs, 10, 30);
      break;
    case SyntheticId::F4:
      pairs.emplace(0, 1);
      pairs.emplace(0, 2);
      pairs.emplace(1, 2);
      add_pairs_within(pairs, 10, 30);
      break;
  }
  return {pairs.begin(), pairs.end()};
}

std::optional<SyntheticId> synthetic_id_from(std::string_view name) {
  if (name == "F1" || name == "f1") return SyntheticId::F1;
  if (name == "F2" || name == "f2") return SyntheticId::F2;
  if (name == "F3" || name == "f3") return SyntheticId::F3;
  if (name == "F4" || name == "f4") return SyntheticId::F4;
  return std::nullopt;
}

double GamSubfunction::value(const std::vector<double>& v) const {
  double sum = 0.0;
  for (const auto& term : terms) {
    double prod = term.coef;
    for (int f : term.features) {
      prod *= v[static_cast<std::size_t>(f)];
    }
    sum += prod;
  }
  return sum + constant;
}

GeneralizedAdditiveInstance::GeneralizedAdditiveInstance(
    int p, double bias, std::vector<GamSubfunction> subfunctions,
    std::vector<double> target, std::vector<double> baseline)
    : p_(p),
      bias_(bias),
      subfunctions_(std::move(subfunctions)),
      target_(std::move(target)),
      baseline_(std::move(baseline)) {
  if (static_cast<int>(target_.size()) != p_ ||
      static_cast<int>(baseline_.size()) != p_) {
    throw DimensionError("instance vectors do not match p");
  }
  std::vector<bool> used(static_cast<std::size_t>(p_), false);
  for (const auto& sub : subfunctions_) {
    sub.features.check_within(p_);
    for (int f : sub.features.indices()) {
      if (used[static_cast<std::size_t>(f)]) {
        throw ParameterError("instance sets must be disjoint");
      }
      used[static_cast<std::size_t>(f)] = true;
    }
    for (const auto& term : sub.terms) {
      for (int f : term.features) {
        if (!sub.features.contains(f)) {
          throw ParameterError("term references a feature outside its set");
        }
      }
    }
  }
}

double GeneralizedAdditiveInstance::operator()(const std::vector<double>& v) const {
  if (static_cast<int>(v.size()) != p_) {
    throw DimensionError("input length does not match instance");
  }
  double sum = 0.0;
  for (const auto& sub : subfunctions_) {
    sum += sub.value(v);
  }
  return sum + bias_;
}

double GeneralizedAdditiveInstance::subfunction_value(
    int set_index, const std::vector<double>& v) const {
  return subfunctions_.at(static_cast<std::size_t>(set_index)).value(v);
}

PerturbationSpace GeneralizedAdditiveInstance::space(StepRule rule) const {
  return PerturbationSpace::make(target_, baseline_, rule);
}

std::vector<std::pair<int, int>> GeneralizedAdditiveInstance::within_set_pairs()
    const {
  std::vector<std::pair<int, int>> out;
  for (const auto& sub : subfunctions_) {
    const auto& idx = sub.features.indices();
    for (std::size_t a = 0; a < idx.size(); ++a) {
      for (std::size_t b = a + 1; b < idx.size(); ++b) {
        out.emplace_back(idx[a], idx[b]);
      }
    }
  }
  return out;
}

std::vector<int> GeneralizedAdditiveInstance::unused_features() const {
  std::vector<bool> used(static_cast<std::size_t>(p_), false);
  for (const auto& sub : subfunctions_) {
    for (int f : sub.features.indices()) {
      used[static_cast<std::size_t>(f)] = true;
    }
  }
  std::vector<int> out;
  for (int i = 0; i < p_; ++i) {
    if (!used[static_cast<std::size_t>(i)]) out.push_back(i);
  }
  return out;
}

nlohmann::json GeneralizedAdditiveInstance::to_json() const {
  nlohmann::json sets = nlohmann::json::array();
  for (const auto& sub : subfunctions_) {
    nlohmann::json terms = nlohmann::json::array();
    for (const auto& term : sub.terms) {
      terms.push_back({{"features", term.features}, {"coef", term.coef}});
    }
    sets.push_back({{"features", sub.features.indices()},
                    {"terms", terms},
                    {"constant", sub.constant}});
  }
  return {{"p", p_},
          {"bias", bias_},
          {"sets", sets},
          {"target", target_},
          {"baseline", baseline_}};
}

GeneralizedAdditiveInstance GeneralizedAdditiveInstance::from_json(
    const nlohmann::json& j) {
  std::vector<GamSubfunction> subs;
  for (const auto& s : j.at("sets")) {
    GamSubfunction sub{FeatureSet(s.at("features").get<std::vector<int>>()),
                       {},
                       s.at("constant").get<double>()};
    for (const auto& t : s.at("terms")) {
      sub.terms.push_back(GamTerm{t.at("features").get<std::vector<int>>(),
                                  t.at("coef").get<double>()});
    }
    subs.push_back(std::move(sub));
  }
  return GeneralizedAdditiveInstance(
      j.at("p").get<int>(), j.at("bias").get<double>(), std::move(subs),
      j.at("target").get<std::vector<double>>(),
      j.at("baseline").get<std::vector<double>>());
}

GamSubfunction random_subfunction(const FeatureSet& features, rng::Engine& g,
                                  const std::vector<double>& baseline) {
  const auto& idx = features.indices();
  GamSubfunction sub{features, {}, 0.0};

  for (int f : idx) {
    sub.terms.push_back(GamTerm{{f}, rng::signed_uniform(g, 0.5, 1.5)});
  }
  // Pair coefficients dominate the higher-order ones, so the second
  // difference at any context stays bounded away from zero for every
  // within-set pair.
  for (std::size_t a = 0; a < idx.size(); ++a) {
    for (std::size_t b = a + 1; b < idx.size(); ++b) {
      sub.terms.push_back(GamTerm{{idx[a], idx[b]}, rng::signed_uniform(g, 1.0, 2.0)});
    }
  }
  if (idx.size() >= 3) {
    for (std::size_t a = 0; a < idx.size(); ++a) {
      for (std::size_t b = a + 1; b < idx.size(); ++b) {
        for (std::size_t c = b + 1; c < idx.size(); ++c) {
          if (rng::coin(g)) {
            sub.terms.push_back(
                GamTerm{{idx[a], idx[b], idx[c]}, rng::signed_uniform(g, 0.05, 0.15)});
          }
        }
      }
    }
  }
  if (idx.size() == 4 && rng::coin(g)) {
    sub.terms.push_back(GamTerm{idx, rng::signed_uniform(g, 0.05, 0.15)});
  }

  GamSubfunction probe = sub;
  probe.constant = 0.0;
  sub.constant = -probe.value(baseline);  // exact root at the baseline slice
  return sub;
}

GeneralizedAdditiveInstance random_gam(std::uint64_t seed, int p, int num_sets) {
  if (p < 1 || num_sets < 1) {
    throw ParameterError("instance needs positive p and set count");
  }
  if (2 * num_sets > p) {
    throw ParameterError("cannot place " + std::to_string(num_sets) +
                         " disjoint sets of size >= 2 in p=" + std::to_string(p));
  }
  auto g = rng::engine(seed);

  std::vector<double> target(static_cast<std::size_t>(p));
  std::vector<double> baseline(static_cast<std::size_t>(p));
  for (int i = 0; i < p; ++i) {
    target[static_cast<std::size_t>(i)] = rng::uniform(g, 0.5, 1.5);
    baseline[static_cast<std::size_t>(i)] = rng::uniform(g, -1.5, -0.5);
  }

  std::vector<int> perm(static_cast<std::size_t>(p));
  std::iota(perm.begin(), perm.end(), 0);
  rng::shuffle(perm, g);

  std::vector<int> sizes(static_cast<std::size_t>(num_sets), 2);
  int pool = p - 2 * num_sets;
  for (auto& size : sizes) {
    if (pool <= 0) break;
    const int extra = rng::uniform_int(g, 0, std::min(pool, 2));
    size += extra;
    pool -= extra;
  }

  std::vector<GamSubfunction> subs;
  subs.reserve(static_cast<std::size_t>(num_sets));
  int cursor = 0;
  for (int s = 0; s < num_sets; ++s) {
    std::vector<int> members(perm.begin() + cursor,
                             perm.begin() + cursor + sizes[static_cast<std::size_t>(s)]);
    cursor += sizes[static_cast<std::size_t>(s)];
    subs.push_back(random_subfunction(FeatureSet(std::move(members)), g, baseline));
  }

  const double bias = rng::uniform(g, -1.0, 1.0);
  return GeneralizedAdditiveInstance(p, bias, std::move(subs), std::move(target),
                                     std::move(baseline));
}

}  // namespace archipelago
