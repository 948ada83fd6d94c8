// Line-delimited JSON evaluation server. Hosts a named synthetic function,
// an arithmetic expression, or a serialized additive instance behind the
// bridge protocol, mapping masks to vectors on this side when asked to.
// The --announce-p / --garbage-* / --hang-evals / --die-after-evals /
// --fail-eval flags exist so the client's error paths can be exercised.

#include <unistd.h>

#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "archipelago/expr.hpp"
#include "archipelago/synth.hpp"

using nlohmann::json;

namespace {

std::vector<double> parse_csv_vector(const std::string& text) {
  std::vector<double> out;
  std::string token;
  std::stringstream ss(text);
  while (std::getline(ss, token, ',')) {
    out.push_back(std::stod(token));
  }
  return out;
}

struct ServerFunction {
  std::function<double(const std::vector<double>&)> f;
  int expected_p = 0;  // 0 = adopt the client's p
};

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"archipelago evaluation server"};

  std::string function_name;
  std::string expr_source;
  std::string gam_json;
  std::string target_csv;
  std::string baseline_csv;
  int p_flag = 0;
  int announce_p = 0;
  bool garbage_handshake = false;
  bool garbage_results = false;
  bool hang_evals = false;
  int die_after_evals = -1;
  std::string fail_eval_message;

  app.add_option("--function", function_name, "F1..F4 or 'sum'");
  app.add_option("--expr", expr_source, "arithmetic expression over x1..xp");
  app.add_option("--gam", gam_json, "serialized additive instance (JSON)");
  app.add_option("--p", p_flag, "feature count for --expr / --function sum");
  app.add_option("--target", target_csv, "target vector for mask mode");
  app.add_option("--baseline", baseline_csv, "baseline vector for mask mode");
  app.add_option("--announce-p", announce_p, "declare this p in the ready message");
  app.add_flag("--garbage-handshake", garbage_handshake, "reply to hello with junk");
  app.add_flag("--garbage-results", garbage_results, "reply to eval with junk");
  app.add_flag("--hang-evals", hang_evals, "never answer eval requests");
  app.add_option("--die-after-evals", die_after_evals, "exit after N eval replies");
  app.add_option("--fail-eval", fail_eval_message, "answer evals with this error");

  CLI11_PARSE(app, argc, argv);

  ServerFunction fn;
  std::vector<double> mask_target;
  std::vector<double> mask_baseline;
  try {
    if (!gam_json.empty()) {
      auto instance = archipelago::GeneralizedAdditiveInstance::from_json(
          json::parse(gam_json));
      fn.expected_p = instance.p();
      mask_target = instance.target();
      mask_baseline = instance.baseline();
      fn.f = [instance](const std::vector<double>& v) { return instance(v); };
    } else if (!expr_source.empty()) {
      auto expr = archipelago::Expression::parse(expr_source);
      fn.expected_p = p_flag > 0 ? p_flag : expr.max_feature();
      fn.f = [expr](const std::vector<double>& v) { return expr.eval(v); };
    } else if (function_name == "sum") {
      fn.expected_p = p_flag;  // any p unless pinned
      fn.f = [](const std::vector<double>& v) {
        double s = 0.0;
        for (double x : v) s += x;
        return s;
      };
    } else if (auto id = archipelago::synthetic_id_from(function_name)) {
      archipelago::SyntheticFunction synthetic(*id);
      fn.expected_p = synthetic.p();
      mask_target.assign(40, 1.0);
      mask_baseline.assign(40, -1.0);
      fn.f = [synthetic](const std::vector<double>& v) { return synthetic(v); };
    } else {
      std::cerr << "eval-server: need --function, --expr, or --gam\n";
      return 2;
    }
    if (!target_csv.empty()) mask_target = parse_csv_vector(target_csv);
    if (!baseline_csv.empty()) mask_baseline = parse_csv_vector(baseline_csv);
  } catch (const std::exception& e) {
    std::cerr << "eval-server: " << e.what() << "\n";
    return 2;
  }

  std::string line;
  if (!std::getline(std::cin, line)) return 1;

  if (garbage_handshake) {
    std::cout << "!!this is not a protocol message!!\n" << std::flush;
    return 0;
  }

  json hello = json::parse(line, nullptr, false);
  if (hello.is_discarded() || hello.value("type", "") != "hello") {
    std::cout << json{{"type", "error"}, {"id", 0},
                      {"message", "expected a hello message"}}
                     .dump()
              << "\n"
              << std::flush;
    return 1;
  }
  const int client_p = hello.value("p", 0);
  const bool mask_mode = hello.value("mode", "vector") == "mask";
  const int actual_p = fn.expected_p > 0 ? fn.expected_p : client_p;

  std::cout << json{{"type", "ready"},
                    {"p", announce_p > 0 ? announce_p : actual_p}}
                   .dump()
            << "\n"
            << std::flush;

  if (mask_mode) {
    if (static_cast<int>(mask_target.size()) != actual_p ||
        static_cast<int>(mask_baseline.size()) != actual_p) {
      std::cerr << "eval-server: mask mode needs --target/--baseline of length "
                << actual_p << "\n";
      return 2;
    }
  }

  std::uint64_t last_id = 0;
  int replies = 0;
  while (std::getline(std::cin, line)) {
    json request = json::parse(line, nullptr, false);
    auto reply_error = [&](std::uint64_t id, const std::string& message) {
      std::cout << json{{"type", "error"}, {"id", id}, {"message", message}}.dump()
                << "\n"
                << std::flush;
    };
    if (request.is_discarded() || request.value("type", "") != "eval") {
      reply_error(last_id, "expected an eval message");
      continue;
    }
    const std::uint64_t id = request.value("id", 0ull);
    if (id <= last_id) {
      reply_error(id, "ids must increase strictly");
      continue;
    }
    last_id = id;

    if (hang_evals) {
      while (true) ::pause();
    }
    if (die_after_evals >= 0 && replies >= die_after_evals) {
      return 1;
    }
    if (!fail_eval_message.empty()) {
      reply_error(id, fail_eval_message);
      ++replies;
      continue;
    }
    if (garbage_results) {
      std::cout << "<<garbage>>\n" << std::flush;
      ++replies;
      continue;
    }

    if (!request.contains("inputs") || !request.at("inputs").is_array()) {
      reply_error(id, "eval message lacks an inputs array");
      continue;
    }
    std::vector<double> outputs;
    bool failed = false;
    for (const auto& input : request.at("inputs")) {
      try {
        std::vector<double> v;
        if (mask_mode) {
          v.resize(static_cast<std::size_t>(actual_p));
          const auto bits = input.get<std::vector<int>>();
          if (static_cast<int>(bits.size()) != actual_p) {
            throw std::runtime_error("input length mismatch");
          }
          for (int i = 0; i < actual_p; ++i) {
            v[static_cast<std::size_t>(i)] =
                bits[static_cast<std::size_t>(i)] != 0
                    ? mask_target[static_cast<std::size_t>(i)]
                    : mask_baseline[static_cast<std::size_t>(i)];
          }
        } else {
          v = input.get<std::vector<double>>();
          if (static_cast<int>(v.size()) != actual_p) {
            throw std::runtime_error("input length mismatch");
          }
        }
        outputs.push_back(fn.f(v));
      } catch (const std::exception& e) {
        reply_error(id, e.what());
        failed = true;
        break;
      }
    }
    if (!failed) {
      std::cout << json{{"type", "result"}, {"id", id}, {"outputs", outputs}}.dump()
                << "\n"
                << std::flush;
    }
    ++replies;
  }
  return 0;
}
