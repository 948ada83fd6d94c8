// archipelago: black-box pairwise interaction detection and island
// attribution, plus the synthetic benchmark, redundancy, and axiom suites.
//
// Exit codes: 0 success, 2 usage, 3 evaluation/bridge failure, 4 capacity.

#include <charconv>
#include <chrono>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "archipelago/attribute.hpp"
#include "archipelago/axioms.hpp"
#include "archipelago/bridge.hpp"
#include "archipelago/detect.hpp"
#include "archipelago/expr.hpp"
#include "archipelago/synth.hpp"

using nlohmann::json;
namespace arch = archipelago;

namespace {

constexpr int kSchemaVersion = 1;

std::string fmt(double v) {
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, ptr);
}

std::vector<double> parse_vector(const std::string& text) {
  std::string payload = text;
  if (!text.empty() && text.front() == '@') {
    std::ifstream in(text.substr(1));
    if (!in) {
      throw arch::ParameterError("cannot read vector file " + text.substr(1));
    }
    std::stringstream ss;
    ss << in.rdbuf();
    payload = ss.str();
  }
  for (char& c : payload) {
    if (c == ',' || c == '\n' || c == '\t' || c == '\r') c = ' ';
  }
  std::vector<double> out;
  std::stringstream ss(payload);
  double v = 0.0;
  while (ss >> v) out.push_back(v);
  if (out.empty()) {
    throw arch::ParameterError("vector '" + text + "' holds no numbers");
  }
  return out;
}

struct CommonOptions {
  std::string function;
  std::string expr;
  std::string bridge;
  std::string bridge_mode = "vector";
  std::string target_csv;
  std::string baseline_csv;
  std::string contexts = "archdetect";
  std::string h_rule = "unit";
  std::uint64_t seed = 0;
  int workers = 1;
  int batch_size = 256;
  std::string out;

  void add_source_flags(CLI::App* cmd) {
    cmd->add_option("--function", function, "synthetic function F1..F4");
    cmd->add_option("--expr", expr, "expression over x1..xp (+ - * /, relu, abs, min, max)");
    cmd->add_option("--bridge", bridge, "command spoken to over the line-JSON protocol");
    cmd->add_option("--bridge-mode", bridge_mode, "vector|mask (default vector)");
    cmd->add_option("--target", target_csv, "target vector: CSV numbers or @file");
    cmd->add_option("--baseline", baseline_csv, "baseline vector: CSV numbers or @file");
  }
  void add_eval_flags(CLI::App* cmd) {
    cmd->add_option("--h", h_rule, "step convention: unit|eq4 (default unit)");
    cmd->add_option("--seed", seed, "seed for random contexts");
    cmd->add_option("--workers", workers, "pair-loop parallelism");
    cmd->add_option("--batch-size", batch_size, "evaluations per underlying call");
    cmd->add_option("--out", out, "output file (default: stdout, no manifest)");
  }
};

arch::StepRule step_rule(const std::string& name) {
  if (name == "unit") return arch::StepRule::unit;
  if (name == "eq4") return arch::StepRule::span;
  throw arch::ParameterError("--h must be 'unit' or 'eq4'");
}

arch::DetectorConfig detector_config(const CommonOptions& opt) {
  arch::DetectorConfig cfg;
  cfg.seed = opt.seed;
  const std::string& c = opt.contexts;
  if (c == "archdetect") {
    cfg.contexts = arch::ContextRegime::archdetect;
  } else if (c == "target-only") {
    cfg.contexts = arch::ContextRegime::target_only;
  } else if (c == "baseline-only") {
    cfg.contexts = arch::ContextRegime::baseline_only;
  } else if (c == "full") {
    cfg.contexts = arch::ContextRegime::full_expectation;
  } else if (c.rfind("random:", 0) == 0) {
    cfg.contexts = arch::ContextRegime::random_contexts;
    try {
      cfg.num_random = std::stoi(c.substr(7));
    } catch (const std::exception&) {
      throw arch::ParameterError("random context count must be an integer");
    }
  } else {
    throw arch::ParameterError(
        "--contexts must be archdetect|target-only|baseline-only|random:N|full");
  }
  return cfg;
}

struct Source {
  std::unique_ptr<arch::BlackBox> bb;
  json description;
};

Source open_source(const CommonOptions& opt) {
  const int given =
      (opt.function.empty() ? 0 : 1) + (opt.expr.empty() ? 0 : 1) +
      (opt.bridge.empty() ? 0 : 1);
  if (given != 1) {
    throw arch::ParameterError(
        "exactly one of --function, --expr, --bridge is required");
  }
  const arch::StepRule rule = step_rule(opt.h_rule);
  arch::BlackBoxOptions bb_options;
  bb_options.workers = opt.workers;
  bb_options.batch_size = opt.batch_size;

  Source src;
  if (!opt.function.empty()) {
    const auto id = arch::synthetic_id_from(opt.function);
    if (!id) {
      throw arch::ParameterError("unknown synthetic function " + opt.function);
    }
    arch::SyntheticFunction fn(*id);
    std::vector<double> target(40, 1.0);
    std::vector<double> baseline(40, -1.0);
    if (!opt.target_csv.empty()) target = parse_vector(opt.target_csv);
    if (!opt.baseline_csv.empty()) baseline = parse_vector(opt.baseline_csv);
    auto space = arch::PerturbationSpace::make(target, baseline, rule);
    src.bb = std::make_unique<arch::BlackBox>(arch::make_blackbox(
        space, [fn](const std::vector<double>& v) { return fn(v); }, bb_options));
    src.description = {{"kind", "synthetic"}, {"name", fn.name()}};
    return src;
  }

  if (opt.target_csv.empty() || opt.baseline_csv.empty()) {
    throw arch::ParameterError("--expr and --bridge need --target and --baseline");
  }
  auto target = parse_vector(opt.target_csv);
  auto baseline = parse_vector(opt.baseline_csv);
  auto space = arch::PerturbationSpace::make(target, baseline, rule);

  if (!opt.expr.empty()) {
    auto expr = arch::Expression::parse(opt.expr);
    if (expr.max_feature() > space.p()) {
      throw arch::ParameterError("expression references x" +
                                 std::to_string(expr.max_feature()) +
                                 " but the space has p=" + std::to_string(space.p()));
    }
    src.bb = std::make_unique<arch::BlackBox>(arch::make_blackbox(
        space, [expr](const std::vector<double>& v) { return expr.eval(v); },
        bb_options));
    src.description = {{"kind", "expression"}, {"expr", opt.expr}};
    return src;
  }

  arch::BridgeOptions bridge_options;
  bridge_options.command = arch::shell_command(opt.bridge);
  bridge_options.batch_size = opt.batch_size;
  if (opt.bridge_mode == "mask") {
    bridge_options.mode = arch::BridgeMode::mask;
  } else if (opt.bridge_mode != "vector") {
    throw arch::ParameterError("--bridge-mode must be 'vector' or 'mask'");
  }
  src.bb = std::make_unique<arch::BlackBox>(arch::bridge_open(bridge_options, space));
  src.description = {{"kind", "bridge"},
                     {"command", opt.bridge},
                     {"mode", opt.bridge_mode}};
  return src;
}

json space_json(const arch::PerturbationSpace& space) {
  return {{"p", space.p()},
          {"target", space.target()},
          {"baseline", space.baseline()},
          {"step_rule", space.rule() == arch::StepRule::unit ? "unit" : "eq4"}};
}

json manifest_json(const std::string& command, const Source& src,
                   const arch::PerturbationSpace& space, const json& config,
                   std::size_t call_count) {
  return {{"schema_version", kSchemaVersion},
          {"command", command},
          {"source", src.description},
          {"space", space_json(space)},
          {"config", config},
          {"call_count", call_count}};
}

void emit(const CommonOptions& opt, const std::string& payload,
          const json& manifest, double wall_ms) {
  if (opt.out.empty()) {
    std::cout << payload;
    return;
  }
  {
    std::ofstream out(opt.out, std::ios::binary);
    if (!out) {
      throw arch::ParameterError("cannot write " + opt.out);
    }
    out << payload;
  }
  json sidecar = manifest;
  sidecar["wall_time_ms"] = wall_ms;
  std::ofstream mout(opt.out + ".manifest.json", std::ios::binary);
  mout << sidecar.dump(2) << "\n";
  std::cerr << "wrote " << opt.out << "\n";
}

class Stopwatch {
 public:
  double ms() const {
    return std::chrono::duration<double, std::milli>(
               std::chrono::steady_clock::now() - start_)
        .count();
  }

 private:
  std::chrono::steady_clock::time_point start_ = std::chrono::steady_clock::now();
};

int run_detect(const CommonOptions& opt) {
  Stopwatch clock;
  auto src = open_source(opt);
  const auto cfg = detector_config(opt);
  const auto ranking = arch::detect_pairs(*src.bb, cfg);

  std::ostringstream csv;
  csv << "# schema_version=" << kSchemaVersion << "\n";
  csv << "i,j,strength,omega_target,omega_baseline\n";
  for (const auto& ps : ranking.pairs) {
    csv << (ps.i + 1) << ',' << (ps.j + 1) << ',' << fmt(ps.strength) << ',';
    const double wt = ps.context_value("target", -1.0);
    const double wb = ps.context_value("baseline", -1.0);
    if (wt >= 0.0) csv << fmt(wt);
    csv << ',';
    if (wb >= 0.0) csv << fmt(wb);
    csv << '\n';
  }

  const json config = {{"contexts", opt.contexts},
                       {"h", opt.h_rule},
                       {"seed", opt.seed},
                       {"workers", opt.workers},
                       {"batch_size", opt.batch_size}};
  emit(opt, csv.str(),
       manifest_json("detect", src, src.bb->space(), config, src.bb->call_count()),
       clock.ms());
  return 0;
}

int run_explain(const CommonOptions& opt, int top_k, const std::string& method_name) {
  Stopwatch clock;
  arch::AttributionMethod method;
  if (method_name == "archattribute") {
    method = arch::AttributionMethod::archattribute;
  } else if (method_name == "difference") {
    method = arch::AttributionMethod::difference;
  } else {
    throw arch::ParameterError("--method must be 'archattribute' or 'difference'");
  }

  auto src = open_source(opt);
  const auto ranking = arch::detect_pairs(*src.bb, detector_config(opt));
  const auto ex = arch::explain(*src.bb, ranking, top_k, method);

  json sets = json::array();
  for (const auto& set : ex.sets) {
    std::vector<int> one_based;
    for (int i : set.indices()) one_based.push_back(i + 1);
    sets.push_back(one_based);
  }
  const json config = {{"contexts", opt.contexts}, {"h", opt.h_rule},
                       {"seed", opt.seed},         {"workers", opt.workers},
                       {"top_k", top_k},           {"method", method_name}};
  const json manifest =
      manifest_json("explain", src, src.bb->space(), config, src.bb->call_count());
  json payload = {{"schema_version", kSchemaVersion},
                  {"sets", sets},
                  {"phi", ex.phi},
                  {"method", method_name},
                  {"residual", ex.completeness_residual},
                  {"f_target", ex.f_target},
                  {"f_baseline", ex.f_baseline},
                  {"requested_top_k", ex.requested_top_k},
                  {"used_pairs", ex.used_pairs},
                  {"manifest", manifest}};
  emit(opt, payload.dump(2) + "\n", manifest, clock.ms());
  return 0;
}

int run_bench(const CommonOptions& opt) {
  Stopwatch clock;
  const arch::StepRule rule = step_rule(opt.h_rule);
  arch::BlackBoxOptions bb_options;
  bb_options.workers = opt.workers;
  bb_options.batch_size = opt.batch_size;

  std::ostringstream csv;
  csv << "# schema_version=" << kSchemaVersion << "\n";
  csv << "function,contexts,auc\n";
  std::size_t calls = 0;
  for (auto id : {arch::SyntheticId::F1, arch::SyntheticId::F2,
                  arch::SyntheticId::F3, arch::SyntheticId::F4}) {
    arch::SyntheticFunction fn(id);
    auto bb = arch::make_blackbox(
        fn.space(rule), [fn](const std::vector<double>& v) { return fn(v); },
        bb_options);
    const auto truth = fn.ground_truth_pairs();
    for (auto regime : {arch::ContextRegime::archdetect,
                        arch::ContextRegime::target_only,
                        arch::ContextRegime::baseline_only}) {
      arch::DetectorConfig cfg;
      cfg.contexts = regime;
      const auto ranking = arch::detect_pairs(bb, cfg);
      const double auc = arch::ranking_auc(ranking, truth);
      const char* label = regime == arch::ContextRegime::archdetect
                              ? "archdetect"
                              : regime == arch::ContextRegime::target_only
                                    ? "target-only"
                                    : "baseline-only";
      csv << fn.name() << ',' << label << ',' << fmt(auc) << '\n';
    }
    calls += bb.call_count();
  }

  const json config = {{"h", opt.h_rule}, {"workers", opt.workers}};
  const json manifest = {
      {"schema_version", kSchemaVersion},
      {"command", "bench"},
      {"source", {{"kind", "synthetic"}, {"name", "F1-F4"}}},
      {"space", space_json(arch::SyntheticFunction(arch::SyntheticId::F1).space(rule))},
      {"config", config},
      {"call_count", calls}};
  emit(opt, csv.str(), manifest, clock.ms());
  return 0;
}

int run_redundancy(const CommonOptions& opt, const std::string& sequence, int n,
                   int top_k) {
  Stopwatch clock;
  arch::ContextSequence seq;
  if (sequence == "fixed") {
    seq = arch::ContextSequence::fixed;
  } else if (sequence == "random") {
    seq = arch::ContextSequence::random;
  } else {
    throw arch::ParameterError("--sequence must be 'fixed' or 'random'");
  }
  auto src = open_source(opt);
  const auto ratios = arch::redundancy_curve(*src.bb, seq, n, top_k, opt.seed);

  std::ostringstream csv;
  csv << "# schema_version=" << kSchemaVersion << "\n";
  csv << "n,overlap_ratio\n";
  for (std::size_t k = 0; k < ratios.size(); ++k) {
    csv << (k + 2) << ',' << fmt(ratios[k]) << '\n';
  }
  const json config = {{"sequence", sequence}, {"n", n},
                       {"top_k", top_k},       {"seed", opt.seed},
                       {"h", opt.h_rule},      {"workers", opt.workers}};
  emit(opt, csv.str(),
       manifest_json("redundancy", src, src.bb->space(), config,
                     src.bb->call_count()),
       clock.ms());
  return 0;
}

int run_axioms(const CommonOptions& opt, int trials) {
  arch::AxiomSuiteConfig cfg;
  cfg.seed = opt.seed == 0 ? 1 : opt.seed;
  cfg.trials = trials;
  const auto reports = arch::run_axiom_suite(cfg);
  const std::string payload = arch::to_json(reports).dump(2) + "\n";
  if (opt.out.empty()) {
    std::cout << payload;
  } else {
    std::ofstream out(opt.out, std::ios::binary);
    if (!out) {
      throw arch::ParameterError("cannot write " + opt.out);
    }
    out << payload;
    std::cerr << "wrote " << opt.out << "\n";
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"black-box feature interaction detection and attribution"};
  app.require_subcommand(1);
  // --h is the step-convention flag, so help is --help alone.
  app.set_help_flag("--help", "print help and exit");

  CommonOptions opt;
  int top_k = 0;
  int redundancy_n = 8;
  int trials = 200;
  std::string method = "archattribute";
  std::string sequence = "fixed";

  auto* detect = app.add_subcommand("detect", "rank all feature pairs by interaction strength");
  detect->set_help_flag("--help", "print help and exit");
  opt.add_source_flags(detect);
  detect->add_option("--contexts", opt.contexts, "archdetect|target-only|baseline-only|random:N|full");
  opt.add_eval_flags(detect);

  auto* explain = app.add_subcommand("explain", "merge top pairs into islands and attribute them");
  explain->set_help_flag("--help", "print help and exit");
  opt.add_source_flags(explain);
  explain->add_option("--contexts", opt.contexts, "context regime for the underlying ranking");
  explain->add_option("--top-k", top_k, "ranked pairs to merge")->required();
  explain->add_option("--method", method, "archattribute|difference");
  opt.add_eval_flags(explain);

  auto* bench = app.add_subcommand("bench", "ranking AUC of F1..F4 under each context regime");
  bench->set_help_flag("--help", "print help and exit");
  opt.add_eval_flags(bench);

  auto* redundancy = app.add_subcommand("redundancy", "top-k overlap as contexts are added");
  redundancy->set_help_flag("--help", "print help and exit");
  opt.add_source_flags(redundancy);
  redundancy->add_option("--sequence", sequence, "fixed|random");
  redundancy->add_option("--n", redundancy_n, "number of contexts");
  redundancy->add_option("--top-k", top_k, "pairs compared between steps")->required();
  opt.add_eval_flags(redundancy);

  auto* axioms = app.add_subcommand("axioms", "run the attribution axiom suite");
  axioms->set_help_flag("--help", "print help and exit");
  axioms->add_option("--trials", trials, "trials per axiom");
  axioms->add_option("--seed", opt.seed, "suite seed");
  axioms->add_option("--out", opt.out, "output file (default stdout)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (detect->parsed()) return run_detect(opt);
    if (explain->parsed()) return run_explain(opt, top_k, method);
    if (bench->parsed()) return run_bench(opt);
    if (redundancy->parsed()) return run_redundancy(opt, sequence, redundancy_n, top_k);
    if (axioms->parsed()) return run_axioms(opt, trials);
  } catch (const arch::CapacityError& e) {
    std::cerr << "capacity error: " << e.what() << "\n";
    return 4;
  } catch (const arch::BridgeError& e) {
    std::cerr << "bridge error: " << e.what() << "\n";
    return 3;
  } catch (const arch::EvaluationError& e) {
    std::cerr << "evaluation error: " << e.what() << "\n";
    return 3;
  } catch (const arch::DimensionError& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return 2;
  } catch (const arch::ParameterError& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  }
  return 0;
}
