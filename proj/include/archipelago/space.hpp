#pragma once

#include <compare>
#include <cstdint>
#include <string>
#include <vector>

#include "archipelago/errors.hpp"

namespace archipelago {

// Non-empty, sorted, duplicate-free collection of feature indices (0-based).
class FeatureSet {
 public:
  explicit FeatureSet(std::vector<int> indices);

  static FeatureSet single(int i) { return FeatureSet({i}); }
  static FeatureSet pair(int i, int j) { return FeatureSet({i, j}); }
  // Half-open [begin, end).
  static FeatureSet range(int begin, int end);

  const std::vector<int>& indices() const { return indices_; }
  int size() const { return static_cast<int>(indices_.size()); }
  int min_index() const { return indices_.front(); }
  bool contains(int i) const;
  // Throws DimensionError if any index falls outside [0, p).
  void check_within(int p) const;

  friend bool operator==(const FeatureSet&, const FeatureSet&) = default;

 private:
  std::vector<int> indices_;
};

// Binary mask over p features: a set bit selects the target value, a clear
// bit the baseline value. Immutable; modifiers return copies.
class Context {
 public:
  Context() = default;
  explicit Context(int p);  // all baseline

  static Context all_target(int p);
  static Context all_baseline(int p) { return Context(p); }
  // Low `size` bits of `bits`, feature 0 = bit 0. Requires size <= 64.
  static Context from_bits(int size, std::uint64_t bits);
  static Context from_words(int size, std::vector<std::uint64_t> words);

  int size() const { return p_; }
  bool test(int i) const;
  int count() const;
  bool all() const { return count() == p_; }
  bool none() const { return count() == 0; }

  Context with(int i, bool to_target) const;
  Context with_pair(int i, bool i_to_target, int j, bool j_to_target) const;
  Context with_set(const FeatureSet& set, bool to_target) const;

  // Feature 0 first, '1' = target.
  std::string bits() const;

  friend bool operator==(const Context&, const Context&) = default;
  friend auto operator<=>(const Context&, const Context&) = default;

  struct Hash {
    std::size_t operator()(const Context& c) const noexcept;
  };

 private:
  void check_index(int i) const;
  void set(int i, bool v);

  int p_ = 0;
  std::vector<std::uint64_t> words_;
};

enum class StepRule {
  unit,  // every step is 1
  span,  // step_i = |target_i - baseline_i|
};

// The two anchor vectors spanning the binary perturbation cube, plus the
// per-feature step divisors used to scale second differences.
class PerturbationSpace {
 public:
  static PerturbationSpace make(std::vector<double> target,
                                std::vector<double> baseline,
                                StepRule rule = StepRule::unit);

  int p() const { return static_cast<int>(target_.size()); }
  const std::vector<double>& target() const { return target_; }
  const std::vector<double>& baseline() const { return baseline_; }
  const std::vector<double>& step() const { return step_; }
  StepRule rule() const { return rule_; }

  bool inert(int i) const;
  std::vector<int> inert_features() const;

  std::vector<double> realize(const Context& ctx) const;

 private:
  PerturbationSpace() = default;

  std::vector<double> target_;
  std::vector<double> baseline_;
  std::vector<double> step_;
  StepRule rule_ = StepRule::unit;
};

// Transitive closure of overlap: the minimal list of disjoint sets covering
// the inputs, where any two inputs sharing an index land in the same output.
// Outputs are sorted by smallest index.
std::vector<FeatureSet> merge_overlapping(const std::vector<FeatureSet>& sets);

}  // namespace archipelago
