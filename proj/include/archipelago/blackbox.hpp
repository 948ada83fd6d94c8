#pragma once

#include <cstddef>
#include <functional>
#include <mutex>
#include <unordered_map>
#include <vector>

#include "archipelago/space.hpp"

namespace archipelago {

// Batched evaluation contract: one scalar per input context, aligned.
using BatchEvaluator = std::function<std::vector<double>(const std::vector<Context>&)>;
using ScalarFunction = std::function<double(const std::vector<double>&)>;

struct BlackBoxOptions {
  int batch_size = 256;  // misses per underlying evaluator call
  int workers = 1;       // threads used by make_blackbox evaluators
};

// Memoizing front-end for a scalar function on the perturbation cube. All
// results are cached by mask; call_count tracks distinct underlying
// evaluations only. eval_batch is serialized by an internal mutex, so
// concurrent submitters observe read-through semantics.
class BlackBox {
 public:
  BlackBox(PerturbationSpace space, BatchEvaluator evaluator,
           BlackBoxOptions options = {});

  BlackBox(const BlackBox&) = delete;
  BlackBox& operator=(const BlackBox&) = delete;
  // Move is construction-time only; the source must not be in use.
  BlackBox(BlackBox&& other) noexcept
      : space_(std::move(other.space_)),
        evaluator_(std::move(other.evaluator_)),
        options_(other.options_),
        cache_(std::move(other.cache_)),
        calls_(other.calls_) {}
  BlackBox& operator=(BlackBox&&) = delete;

  const PerturbationSpace& space() const { return space_; }
  const BlackBoxOptions& options() const { return options_; }

  // Outputs aligned with input order; duplicate masks within a batch are
  // evaluated once.
  std::vector<double> eval_batch(const std::vector<Context>& contexts);
  double eval(const Context& context);

  double at_target();
  double at_baseline();

  std::size_t call_count() const;
  std::size_t cache_size() const;

  // Re-evaluates one probe mask past the cache and compares; throws
  // EvaluationError if the function is not reproducible within `tolerance`.
  void self_check(const Context& probe, double tolerance = 1e-9);

 private:
  PerturbationSpace space_;
  BatchEvaluator evaluator_;
  BlackBoxOptions options_;

  mutable std::mutex mu_;
  std::unordered_map<Context, double, Context::Hash> cache_;
  std::size_t calls_ = 0;
};

// Wraps a plain f(v) as a BlackBox: contexts are realized against `space`
// and evaluated, in parallel when options.workers > 1.
BlackBox make_blackbox(PerturbationSpace space, ScalarFunction f,
                       BlackBoxOptions options = {});

}  // namespace archipelago
