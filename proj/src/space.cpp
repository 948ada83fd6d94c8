#include "archipelago/space.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <numeric>
#include <unordered_map>

namespace archipelago {

namespace {

constexpr int kWordBits = 64;

int word_count(int p) { return (p + kWordBits - 1) / kWordBits; }

}  // namespace

FeatureSet::FeatureSet(std::vector<int> indices) : indices_(std::move(indices)) {
  if (indices_.empty()) {
    throw ParameterError("feature set must be non-empty");
  }
  std::sort(indices_.begin(), indices_.end());
  if (indices_.front() < 0) {
    throw ParameterError("feature index must be non-negative");
  }
  if (std::adjacent_find(indices_.begin(), indices_.end()) != indices_.end()) {
    throw ParameterError("feature set contains duplicate indices");
  }
}

FeatureSet FeatureSet::range(int begin, int end) {
  if (end <= begin) {
    throw ParameterError("feature range is empty");
  }
  std::vector<int> idx(static_cast<std::size_t>(end - begin));
  std::iota(idx.begin(), idx.end(), begin);
  return FeatureSet(std::move(idx));
}

bool FeatureSet::contains(int i) const {
  return std::binary_search(indices_.begin(), indices_.end(), i);
}

void FeatureSet::check_within(int p) const {
  if (indices_.back() >= p) {
    throw DimensionError("feature index " + std::to_string(indices_.back()) +
                         " out of range for p=" + std::to_string(p));
  }
}

Context::Context(int p) : p_(p), words_(static_cast<std::size_t>(word_count(p)), 0) {
  if (p < 0) {
    throw ParameterError("context length must be non-negative");
  }
}

Context Context::all_target(int p) {
  Context c(p);
  for (int i = 0; i < p; ++i) c.set(i, true);
  return c;
}

Context Context::from_bits(int size, std::uint64_t bits) {
  if (size > kWordBits) {
    throw ParameterError("from_bits supports at most 64 features");
  }
  Context c(size);
  if (size > 0) {
    c.words_[0] = (size == kWordBits) ? bits : (bits & ((1ull << size) - 1));
  }
  return c;
}

Context Context::from_words(int size, std::vector<std::uint64_t> words) {
  if (static_cast<int>(words.size()) != word_count(size)) {
    throw DimensionError("word vector does not match context length");
  }
  Context c(size);
  c.words_ = std::move(words);
  const int tail = size % kWordBits;
  if (tail != 0) {
    c.words_.back() &= (1ull << tail) - 1;  // canonical: unused bits zero
  }
  return c;
}

void Context::check_index(int i) const {
  if (i < 0 || i >= p_) {
    throw DimensionError("feature index " + std::to_string(i) +
                         " out of range for p=" + std::to_string(p_));
  }
}

bool Context::test(int i) const {
  check_index(i);
  return (words_[static_cast<std::size_t>(i / kWordBits)] >> (i % kWordBits)) & 1u;
}

void Context::set(int i, bool v) {
  const std::uint64_t bit = 1ull << (i % kWordBits);
  auto& w = words_[static_cast<std::size_t>(i / kWordBits)];
  if (v) {
    w |= bit;
  } else {
    w &= ~bit;
  }
}

int Context::count() const {
  int n = 0;
  for (auto w : words_) n += std::popcount(w);
  return n;
}

Context Context::with(int i, bool to_target) const {
  check_index(i);
  Context c = *this;
  c.set(i, to_target);
  return c;
}

Context Context::with_pair(int i, bool i_to_target, int j, bool j_to_target) const {
  check_index(i);
  check_index(j);
  Context c = *this;
  c.set(i, i_to_target);
  c.set(j, j_to_target);
  return c;
}

Context Context::with_set(const FeatureSet& set, bool to_target) const {
  set.check_within(p_);
  Context c = *this;
  for (int i : set.indices()) c.set(i, to_target);
  return c;
}

std::string Context::bits() const {
  std::string s(static_cast<std::size_t>(p_), '0');
  for (int i = 0; i < p_; ++i) {
    if (test(i)) s[static_cast<std::size_t>(i)] = '1';
  }
  return s;
}

std::size_t Context::Hash::operator()(const Context& c) const noexcept {
  // FNV-1a over the word array.
  std::uint64_t h = 0xcbf29ce484222325ull;
  auto mix = [&h](std::uint64_t v) {
    h ^= v;
    h *= 0x100000001b3ull;
  };
  mix(static_cast<std::uint64_t>(c.p_));
  for (auto w : c.words_) mix(w);
  return static_cast<std::size_t>(h);
}

PerturbationSpace PerturbationSpace::make(std::vector<double> target,
                                          std::vector<double> baseline,
                                          StepRule rule) {
  if (target.empty()) {
    throw ParameterError("perturbation space needs at least one feature");
  }
  if (target.size() != baseline.size()) {
    throw DimensionError("target and baseline lengths differ");
  }
  for (std::size_t i = 0; i < target.size(); ++i) {
    if (!std::isfinite(target[i]) || !std::isfinite(baseline[i])) {
      throw ParameterError("target and baseline entries must be finite");
    }
  }
  PerturbationSpace s;
  s.target_ = std::move(target);
  s.baseline_ = std::move(baseline);
  s.rule_ = rule;
  s.step_.resize(s.target_.size());
  for (std::size_t i = 0; i < s.target_.size(); ++i) {
    s.step_[i] = (rule == StepRule::unit)
                     ? 1.0
                     : std::abs(s.target_[i] - s.baseline_[i]);
  }
  return s;
}

bool PerturbationSpace::inert(int i) const {
  if (i < 0 || i >= p()) {
    throw DimensionError("feature index out of range");
  }
  return target_[static_cast<std::size_t>(i)] == baseline_[static_cast<std::size_t>(i)];
}

std::vector<int> PerturbationSpace::inert_features() const {
  std::vector<int> out;
  for (int i = 0; i < p(); ++i) {
    if (inert(i)) out.push_back(i);
  }
  return out;
}

std::vector<double> PerturbationSpace::realize(const Context& ctx) const {
  if (ctx.size() != p()) {
    throw DimensionError("context length does not match space");
  }
  std::vector<double> v(target_.size());
  for (int i = 0; i < p(); ++i) {
    v[static_cast<std::size_t>(i)] =
        ctx.test(i) ? target_[static_cast<std::size_t>(i)]
                    : baseline_[static_cast<std::size_t>(i)];
  }
  return v;
}

namespace {

// Plain union-find over feature indices.
struct UnionFind {
  std::unordered_map<int, int> parent;

  int find(int x) {
    auto it = parent.find(x);
    if (it == parent.end()) {
      parent[x] = x;
      return x;
    }
    int root = x;
    while (parent[root] != root) root = parent[root];
    while (parent[x] != root) {
      int next = parent[x];
      parent[x] = root;
      x = next;
    }
    return root;
  }

  void unite(int a, int b) { parent[find(a)] = find(b); }
};

}  // namespace

std::vector<FeatureSet> merge_overlapping(const std::vector<FeatureSet>& sets) {
  UnionFind uf;
  for (const auto& s : sets) {
    const auto& idx = s.indices();
    for (std::size_t k = 0; k < idx.size(); ++k) {
      uf.find(idx[k]);
      if (k > 0) uf.unite(idx[k - 1], idx[k]);
    }
  }
  std::unordered_map<int, std::vector<int>> groups;
  for (const auto& [idx, _] : uf.parent) {
    groups[uf.find(idx)].push_back(idx);
  }
  std::vector<FeatureSet> out;
  out.reserve(groups.size());
  for (auto& [_, members] : groups) {
    out.emplace_back(std::move(members));
  }
  std::sort(out.begin(), out.end(), [](const FeatureSet& a, const FeatureSet& b) {
    return a.min_index() < b.min_index();
  });
  return out;
}

}  // namespace archipelago
