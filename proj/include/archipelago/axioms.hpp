#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

#include "archipelago/errors.hpp"

namespace archipelago {

// Fault injection for negative controls: each check must fail under a
// suitable fault, guarding against vacuous passes.
enum class Fault {
  none,
  offset_attributions,  // every attribution shifted by +0.5
  zero_attributions,    // every attribution forced to 0
  skew_bridge,          // bridged twin evaluates a perturbed function
};

struct AxiomSuiteConfig {
  std::uint64_t seed = 1;
  int trials = 200;
  // Relative tolerance; differences below 1e-12 absolute always pass.
  double tolerance = 1e-9;
  Fault fault = Fault::none;
  // Evaluation-server argv for the cross-process check. Empty: resolve
  // "archipelago-eval-server" next to the current executable, or from the
  // ARCHIPELAGO_EVAL_SERVER environment variable.
  std::vector<std::string> server_command;
};

struct AxiomReport {
  std::string axiom;
  int trials = 0;
  double max_violation = 0.0;
  bool passed = false;
};

// Runs every attribution-axiom check over seeded random instances:
// completeness, set-attribution, sensitivity-a, sensitivity-b,
// implementation-invariance (in-process vs. bridged), linearity,
// symmetry-preserving, and the fixed relu-set-attribution regression.
// Deterministic per seed; violations are data, not errors.
std::vector<AxiomReport> run_axiom_suite(const AxiomSuiteConfig& config = {});

nlohmann::json to_json(const std::vector<AxiomReport>& reports);

}  // namespace archipelago
