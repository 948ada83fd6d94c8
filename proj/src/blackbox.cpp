#include "archipelago/blackbox.hpp"

#include <cmath>
#include <thread>
#include <unordered_set>
#include <utility>

namespace archipelago {

BlackBox::BlackBox(PerturbationSpace space, BatchEvaluator evaluator,
                   BlackBoxOptions options)
    : space_(std::move(space)),
      evaluator_(std::move(evaluator)),
      options_(options) {
  if (options_.batch_size < 1) {
    throw ParameterError("batch_size must be positive");
  }
  if (options_.workers < 1) {
    throw ParameterError("workers must be positive");
  }
  if (!evaluator_) {
    throw ParameterError("evaluator must be callable");
  }
}

std::vector<double> BlackBox::eval_batch(const std::vector<Context>& contexts) {
  std::lock_guard<std::mutex> lock(mu_);

  std::vector<Context> misses;
  std::unordered_set<Context, Context::Hash> pending;
  for (const auto& ctx : contexts) {
    if (ctx.size() != space_.p()) {
      throw DimensionError("context length does not match space");
    }
    if (!cache_.contains(ctx) && pending.insert(ctx).second) {
      misses.push_back(ctx);
    }
  }

  for (std::size_t begin = 0; begin < misses.size();
       begin += static_cast<std::size_t>(options_.batch_size)) {
    const std::size_t end =
        std::min(misses.size(), begin + static_cast<std::size_t>(options_.batch_size));
    std::vector<Context> chunk(misses.begin() + static_cast<std::ptrdiff_t>(begin),
                               misses.begin() + static_cast<std::ptrdiff_t>(end));
    std::vector<double> outputs = evaluator_(chunk);
    if (outputs.size() != chunk.size()) {
      throw EvaluationError("evaluator returned " + std::to_string(outputs.size()) +
                                " outputs for " + std::to_string(chunk.size()) +
                                " inputs",
                            chunk.empty() ? std::string{} : chunk.front().bits());
    }
    for (std::size_t k = 0; k < chunk.size(); ++k) {
      if (!std::isfinite(outputs[k])) {
        throw EvaluationError("evaluator produced a non-finite value",
                              chunk[k].bits());
      }
      cache_.emplace(chunk[k], outputs[k]);
    }
    calls_ += chunk.size();
  }

  std::vector<double> out;
  out.reserve(contexts.size());
  for (const auto& ctx : contexts) {
    out.push_back(cache_.at(ctx));
  }
  return out;
}

double BlackBox::eval(const Context& context) {
  return eval_batch({context}).front();
}

double BlackBox::at_target() { return eval(Context::all_target(space_.p())); }

double BlackBox::at_baseline() { return eval(Context::all_baseline(space_.p())); }

std::size_t BlackBox::call_count() const {
  std::lock_guard<std::mutex> lock(mu_);
  return calls_;
}

std::size_t BlackBox::cache_size() const {
  std::lock_guard<std::mutex> lock(mu_);
  return cache_.size();
}

void BlackBox::self_check(const Context& probe, double tolerance) {
  const double cached = eval(probe);
  double fresh;
  {
    // Deliberate duplicate of a cached point; call_count tracks distinct
    // evaluations only, so it stays put.
    std::lock_guard<std::mutex> lock(mu_);
    fresh = evaluator_({probe}).at(0);
  }
  if (!(std::abs(fresh - cached) <= tolerance)) {
    throw EvaluationError("evaluator is not deterministic: probe drifted by " +
                              std::to_string(std::abs(fresh - cached)),
                          probe.bits());
  }
}

BlackBox make_blackbox(PerturbationSpace space, ScalarFunction f,
                       BlackBoxOptions options) {
  if (!f) {
    throw ParameterError("function must be callable");
  }
  PerturbationSpace captured = space;
  const int workers = options.workers;
  BatchEvaluator evaluator = [captured, f = std::move(f),
                              workers](const std::vector<Context>& chunk) {
    std::vector<double> out(chunk.size());
    const std::size_t n = chunk.size();
    if (workers <= 1 || n < 2) {
      for (std::size_t k = 0; k < n; ++k) {
        out[k] = f(captured.realize(chunk[k]));
      }
      return out;
    }
    const std::size_t nthreads =
        std::min<std::size_t>(static_cast<std::size_t>(workers), n);
    std::vector<std::thread> threads;
    threads.reserve(nthreads);
    for (std::size_t t = 0; t < nthreads; ++t) {
      threads.emplace_back([&, t]() {
        for (std::size_t k = t; k < n; k += nthreads) {
          out[k] = f(captured.realize(chunk[k]));
        }
      });
    }
    for (auto& th : threads) th.join();
    return out;
  };
  return BlackBox(std::move(space), std::move(evaluator), options);
}

}  // namespace archipelago
