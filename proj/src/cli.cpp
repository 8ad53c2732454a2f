// Copyright 2026 The steerq Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.


#include "steerq/cli.hpp"

#include <chrono>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <iomanip>
#include <optional>
#include <ostream>
#include <sstream>

#include <CLI11.hpp>

#include "steerq/digest.hpp"
#include "steerq/lhs.hpp"

#ifndef STEERQ_VERSION
#define STEERQ_VERSION "0.0.0"
#endif

namespace steerq {

const char *version() { return STEERQ_VERSION; }

int exit_code_for(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::kArgument:
    case ErrorKind::kCapacity:
    case ErrorKind::kNotPsd:
    case ErrorKind::kInconsistency:
      return kExitInput;
    case ErrorKind::kNumeric:
    case ErrorKind::kIndeterminate:
      return kExitNumeric;
  }
  return kExitNumeric;
}

Json to_json(const VerifyCheck &c) {
  return {{"name", c.name},           {"value", c.value},         {"expected", c.expected},
          {"deviation", c.deviation}, {"tolerance", c.tolerance}, {"pass", c.pass},
          {"tolerance_bound", c.tolerance_bound}};
}

namespace {

double binary_entropy_bits(const std::vector<double> &p) {
  double h = 0.0;
  for (double v : p)
    if (v > 0.0) h -= v * std::log2(v);
  return h;
}

VerifyCheck closeness(std::string name, double value, double expected, double tol, double default_tol) {
  VerifyCheck c{std::move(name), value, expected, std::abs(value - expected), tol, false, false};
  c.pass = c.deviation <= tol;
  c.tolerance_bound = !c.pass && c.deviation <= default_tol;
  return c;
}

VerifyCheck at_most(std::string name, double value, double tol, double default_tol) {
  VerifyCheck c{std::move(name), value, 0.0, std::max(value, 0.0), tol, false, false};
  c.pass = value <= tol;
  c.tolerance_bound = !c.pass && value <= default_tol;
  return c;
}

VerifyCheck holds(std::string name, bool ok) {
  return {std::move(name), ok ? 1.0 : 0.0, 1.0, ok ? 0.0 : 1.0, 0.0, ok, false};
}

}  // namespace

std::vector<VerifyCheck> verify_paper(const RunConfig &cfg, int lhs_items) {
  const SteerConfig &sc = cfg.steer;
  const VerifyTolerances defaults;
  std::vector<VerifyCheck> out;

  const Assemblage b = bb84();
  out.push_back(closeness("bb84 ris", ris(b, sc).value, 1.0, cfg.verify.bb84, defaults.bb84));
  for (int de = 1; de <= 4; ++de) {
    const auto space = pure_extension_space(b, de);
    const auto *fp = std::get_if<ForcedProduct>(&space);
    out.push_back(holds("bb84 forced common product at dim_E " + std::to_string(de), fp != nullptr && fp->all_equal));
  }

  for (double q : {0.5, 0.8, 0.95}) {
    const std::vector<double> alpha{std::sqrt(q), std::sqrt(1.0 - q)};
    const Assemblage a = schmidt_fourier_real(alpha);
    const double expected = binary_entropy_bits({q, 1.0 - q});
    std::ostringstream label;
    label << "schmidt " << q << "/" << std::setprecision(3) << 1.0 - q;
    out.push_back(closeness(label.str() + " ris", ris(a, sc).value, expected, cfg.verify.schmidt, defaults.schmidt));
    double lo = std::numeric_limits<double>::infinity(), hi = -lo;
    for (double p : {0.1, 0.5, 0.9}) {
      const std::vector<double> p_X{p, 1.0 - p};
      const double v = ris_inner(a, p_X, default_dim_E(a, sc), sc).value;
      lo = std::min(lo, v);
      hi = std::max(hi, v);
    }
    out.push_back(at_most(label.str() + " flatness in p", hi - lo, cfg.verify.schmidt, defaults.schmidt));
  }

  const std::vector<double> uniform3(3, 1.0 / std::sqrt(3.0));
  out.push_back(closeness("maximally entangled d=3 ris", ris(schmidt_fourier_real(uniform3), sc).value,
                          std::log2(3.0), cfg.verify.maximally_entangled, defaults.maximally_entangled));

  double worst_ris = 0.0, worst_classical = 0.0;
  bool all_feasible = true;
  for (const auto &[a, model] : sample_lhs_corpus(lhs_items, sc.seed)) {
    worst_ris = std::max(worst_ris, ris(a, sc).value);
    const std::vector<double> uniform(a.num_inputs(), 1.0 / a.num_inputs());
    worst_classical = std::max(worst_classical, cmi_of_extension(a, uniform, classical_extension(a, model)));
    all_feasible = all_feasible && lhs_test(a).status == LhsStatus::kFeasible;
  }
  out.push_back(at_most("lhs corpus max ris", worst_ris, cfg.verify.lhs, defaults.lhs));
  out.push_back(at_most("lhs corpus max classical-extension cmi", worst_classical, 1e-9, 1e-9));
  out.push_back(holds("lhs corpus detected as unsteerable", all_feasible));
  return out;
}

namespace {

struct Globals {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::optional<int> dim_E;
  std::optional<int> threads;
  std::string out;
  bool json = false;
};

RunConfig load_config(const Globals &g) {
  RunConfig rc;
  std::string path = g.config_path;
  if (path.empty()) {
    if (const char *env = std::getenv(kConfigEnv); env != nullptr) path = env;
  }
  if (!path.empty()) rc = config_from_json(read_json_file(path));
  if (g.seed) rc.steer.seed = *g.seed;
  if (g.dim_E) {
    if (*g.dim_E < 0) fail(ErrorKind::kArgument, "--dim-e must be nonnegative");
    rc.steer.dim_E = *g.dim_E;
  }
  if (g.threads) {
    if (*g.threads < 1) fail(ErrorKind::kArgument, "--threads must be positive");
    rc.steer.threads = *g.threads;
  }
  if (!g.out.empty()) rc.out = g.out;
  return rc;
}

std::string read_text(const std::string &path) {
  std::ifstream in(path);
  if (!in) fail(ErrorKind::kArgument, "cannot open '" + path + "'");
  std::stringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

std::vector<double> parse_list(const std::string &text, const std::string &what) {
  std::vector<double> v;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    char *end = nullptr;
    const double d = std::strtod(item.c_str(), &end);
    if (item.empty() || end == nullptr || *end != '\0') fail(ErrorKind::kArgument, what + ": bad number '" + item + "'");
    v.push_back(d);
  }
  if (v.empty()) fail(ErrorKind::kArgument, what + ": empty list");
  return v;
}

std::vector<int> parse_ints(const std::string &text, const std::string &what) {
  std::vector<int> out;
  for (double d : parse_list(text, what)) {
    if (d != std::floor(d) || d < 1) fail(ErrorKind::kArgument, what + ": expected positive integers");
    out.push_back(static_cast<int>(d));
  }
  return out;
}

// The report envelope: everything except wall_clock is a function of the
// inputs, the config and the seed.
struct Reporter {
  const Globals &g;
  std::ostream &out;
  std::chrono::steady_clock::time_point start = std::chrono::steady_clock::now();

  int emit(const std::string &command, const RunConfig &rc, const std::string &input_digest, Json results,
           const std::string &summary, int code) const {
    const double wall =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    Json report = {{"schema_version", 1},
                   {"command", command},
                   {"version", version()},
                   {"config", to_json(rc)},
                   {"input_digest", input_digest},
                   {"results", std::move(results)},
                   {"exit_code", code},
                   {"wall_clock_seconds", wall}};
    if (!rc.out.empty()) write_json_file(rc.out, report);
    if (g.json) {
      out << report.dump(2) << "\n";
    } else {
      out << summary;
    }
    return code;
  }
};

std::string fixed(double v, int digits = 6) {
  std::ostringstream s;
  s << std::fixed << std::setprecision(digits) << v;
  return s.str();
}

std::string describe(const SteeringEstimate &e) {
  std::ostringstream s;
  s << e.quantity << " = " << fixed(e.value) << " (dim_E " << e.dim_E << (e.exact ? ", exact" : "")
    << (e.strategy.empty() ? "" : ", strategy " + e.strategy) << ", inner spread " << fixed(e.inner.spread, 3)
    << ")\n";
  return s.str();
}

}  // namespace

int run_cli(int argc, const char *const *argv, std::ostream &out, std::ostream &err) {
  CLI::App app{"Steering quantifiers for assemblages"};
  app.require_subcommand(1);
  app.fallthrough();
  Globals g;
  app.add_option("--config", g.config_path, std::string("JSON config; default from $") + kConfigEnv);
  app.add_option("--seed", g.seed, "PRNG seed");
  app.add_option("--dim-e", g.dim_E, "E dimension of the extensions (0: automatic)");
  app.add_option("--threads", g.threads, "worker threads");
  app.add_option("--out", g.out, "write the JSON report (generate: the assemblage) here");
  app.add_flag("--json", g.json, "print the JSON report instead of a summary");
  app.set_version_flag("--version", std::string(version()));

  std::string path, kind, p_text, sweep_text, alpha_text, dims_text = "2,2,2", only_text, model_out;
  std::vector<std::string> seed_files;
  int rotation_grid = 3, lhs_items = 50, monotone_ops = 100, convex_pairs = 50, monogamy = 20;
  bool full_effort = false, skip_squared = false, example = false;

  auto *validate_cmd = app.add_subcommand("validate", "check the assemblage invariants");
  validate_cmd->add_option("path", path, "assemblage JSON")->required();
  auto *embed_cmd = app.add_subcommand("embed", "cq embedding and its I(X;B)");
  embed_cmd->add_option("path", path, "assemblage JSON")->required();
  embed_cmd->add_option("--p", p_text, "input distribution, comma separated (default uniform)");
  auto *lhs_cmd = app.add_subcommand("lhs-test", "decide LHS-model membership");
  lhs_cmd->add_option("path", path, "assemblage JSON")->required();
  auto *ris_cmd = app.add_subcommand("ris", "restricted intrinsic steerability estimate");
  ris_cmd->add_option("path", path, "assemblage JSON")->required();
  ris_cmd->add_option("--sweep-dim-e", sweep_text, "comma separated E dimensions to report separately");
  ris_cmd->add_option("--seed-extension", seed_files, "extension JSON used as an extra starting point");
  auto *is_cmd = app.add_subcommand("is", "lower estimate of intrinsic steerability over a strategy library");
  is_cmd->add_option("path", path, "assemblage JSON")->required();
  is_cmd->add_option("--rotation-grid", rotation_grid, "rotations per axis in the instrument library");
  auto *rate_cmd = app.add_subcommand("rate", "simulation rate I(XA;B|E) of a pure state");
  rate_cmd->add_option("path", path, "JSON with state, layout, povms, p_X");
  rate_cmd->add_flag("--example", example, "Phi+ (x) |0>_E with the BB84 measurements and uniform inputs");
  auto *verify_cmd = app.add_subcommand("verify-paper", "regression checks on the worked examples");
  verify_cmd->add_option("--lhs-items", lhs_items, "size of the LHS corpus");
  auto *suite_cmd = app.add_subcommand("property-suite", "monotonicity, convexity, additivity and monogamy checks");
  suite_cmd->add_option("--only", only_text, "comma separated subset of monotonicity,convexity,additivity,monogamy");
  suite_cmd->add_option("--monotone-ops", monotone_ops, "sampled restricted operations");
  suite_cmd->add_option("--convex-pairs", convex_pairs, "sampled mixture pairs");
  suite_cmd->add_option("--monogamy-scenarios", monogamy, "sampled tripartite scenarios");
  suite_cmd->add_flag("--skip-bb84-squared", skip_squared, "leave out additivity on bb84 x bb84");
  suite_cmd->add_flag("--full-effort", full_effort, "use the configured search effort instead of the suite's reduced one");
  auto *gen_cmd = app.add_subcommand("generate", "write an example assemblage");
  gen_cmd->add_option("kind", kind, "bb84 | schmidt | lhs-sample | random")
      ->required()
      ->check(CLI::IsMember({"bb84", "schmidt", "lhs-sample", "random"}));
  gen_cmd->add_option("--alpha", alpha_text, "schmidt: squared coefficients, comma separated (default 0.8,0.2)");
  gen_cmd->add_option("--dims", dims_text, "lhs-sample, random: dim_B,|X|,|A|");
  gen_cmd->add_option("--model-out", model_out, "lhs-sample: also write the LHS model here");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError &e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitPass : kExitInput;
  }

  const Reporter rep{g, out};
  try {
    const RunConfig rc = load_config(g);
    const SteerConfig &sc = rc.steer;

    if (*validate_cmd) {
      const std::string text = read_text(path);
      const RawAssemblage raw = raw_assemblage_from_json(parse_json(text, path));
      const ValidationReport r = validate_matrices(raw.dim_B, raw.num_inputs, raw.num_outputs, raw.ops);
      std::string summary = std::string(r.pass ? "pass" : "fail") + "\n";
      for (const auto &v : r.violations) summary += "  " + v + "\n";
      return rep.emit("validate", rc, git_blob_digest(text), to_json(r), summary,
                      r.pass ? kExitPass : kExitCheckFailed);
    }
    if (*gen_cmd) {
      Json result;
      if (kind == "bb84") {
        result = to_json(bb84());
      } else if (kind == "schmidt") {
        const auto q = parse_list(alpha_text.empty() ? "0.8,0.2" : alpha_text, "--alpha");
        std::vector<double> alpha;
        for (double v : q) {
          if (v < 0.0) fail(ErrorKind::kArgument, "--alpha: squared coefficients must be nonnegative");
          alpha.push_back(std::sqrt(v));
        }
        result = to_json(schmidt_fourier_real(alpha));
      } else {
        const auto d = parse_ints(dims_text, "--dims");
        if (d.size() != 3) fail(ErrorKind::kArgument, "--dims expects dim_B,|X|,|A|");
        if (kind == "lhs-sample") {
          const auto [a, model] = sample_lhs(d[0], d[1], d[2], sc.seed);
          result = to_json(a);
          if (!model_out.empty()) write_json_file(model_out, to_json(model));
        } else {
          result = to_json(random_assemblage(d[0], d[1], d[2], sc.seed));
        }
      }
      if (!rc.out.empty()) {
        write_json_file(rc.out, result);
      } else {
        out << result.dump(2) << "\n";
      }
      return kExitPass;
    }
    if (*rate_cmd) {
      double value = 0.0;
      std::string digest;
      if (example || path.empty()) {
        Vector phi = Vector::Zero(8);
        phi(0) = phi(6) = 1.0 / std::sqrt(2.0);  // (|00> + |11>)_AB (x) |0>_E
        const HermitianOp psi = HermitianOp::projector(phi);
        const Matrix h = (Matrix(2, 2) << 1, 1, 1, -1).finished() / std::sqrt(2.0);
        std::vector<std::vector<HermitianOp>> povms{
            {HermitianOp::diagonal({1.0, 0.0}), HermitianOp::diagonal({0.0, 1.0})},
            {HermitianOp::projector(h.col(0)), HermitianOp::projector(h.col(1))}};
        const std::vector<double> p{0.5, 0.5};
        value = simulation_rate(psi, RegisterLayout{{"A", 2}, {"B", 2}, {"E", 2}}, povms, p);
        digest = git_blob_digest("example bb84 simulation rate");
      } else {
        const std::string text = read_text(path);
        const Json j = parse_json(text, path);
        const Matrix state = matrix_from_json(j.at("state"), "state");
        std::vector<Register> regs;
        for (const auto &r : j.at("layout")) regs.push_back({r.at("label").get<std::string>(), r.at("dim").get<int>()});
        std::vector<std::vector<HermitianOp>> povms;
        for (const auto &povm : j.at("povms")) {
          std::vector<HermitianOp> effects;
          for (const auto &e : povm) effects.push_back(HermitianOp::hermitized(matrix_from_json(e, "POVM effect")));
          povms.push_back(std::move(effects));
        }
        const auto p = j.at("p_X").get<std::vector<double>>();
        value = simulation_rate(HermitianOp::hermitized(state), RegisterLayout(regs), povms, p);
        digest = git_blob_digest(text);
      }
      return rep.emit("rate", rc, digest, {{"rate", value}}, "simulation rate = " + fixed(value, 9) + " bits\n",
                      kExitPass);
    }
    if (*verify_cmd) {
      const auto checks = verify_paper(rc, lhs_items);
      Json results = Json::array();
      std::string summary;
      bool all = true;
      for (const auto &c : checks) {
        results.push_back(to_json(c));
        all = all && c.pass;
        summary += std::string(c.pass ? "PASS " : "FAIL ") + c.name + ": " + fixed(c.value) +
                   (c.tolerance_bound ? " (tolerance-bound)" : "") + "\n";
      }
      return rep.emit("verify-paper", rc, git_blob_digest("verify-paper"), {{"checks", results}, {"pass", all}},
                      summary, all ? kExitPass : kExitCheckFailed);
    }
    if (*suite_cmd) {
      SuiteOptions opt;
      if (!only_text.empty()) {
        opt.monotonicity = opt.convexity = opt.additivity = opt.monogamy = false;
        std::stringstream ss(only_text);
        std::string item;
        while (std::getline(ss, item, ',')) {
          if (item == "monotonicity") {
            opt.monotonicity = true;
          } else if (item == "convexity") {
            opt.convexity = true;
          } else if (item == "additivity") {
            opt.additivity = true;
          } else if (item == "monogamy") {
            opt.monogamy = true;
          } else {
            fail(ErrorKind::kArgument, "--only: unknown check '" + item + "'");
          }
        }
      }
      opt.monotone_ops = monotone_ops;
      opt.convex_pairs = convex_pairs;
      opt.monogamy_scenarios = monogamy;
      opt.bb84_squared = !skip_squared;
      const auto reports = run_property_suite(opt, full_effort ? sc : property_suite_config(sc));
      Json results = Json::array();
      int failures = 0;
      for (const auto &r : reports) {
        results.push_back(to_json(r));
        failures += r.pass ? 0 : 1;
      }
      std::string summary;
      for (const auto &r : reports)
        if (!r.pass) summary += "FAIL " + r.name + ": slack " + fixed(r.slack) + "\n";
      summary += std::to_string(reports.size()) + " checks, " + std::to_string(failures) + " failures\n";
      return rep.emit("property-suite", rc, git_blob_digest("property-suite"),
                      {{"reports", results}, {"failures", failures}}, summary,
                      failures == 0 ? kExitPass : kExitCheckFailed);
    }

    // The remaining commands read one assemblage.
    const std::string text = read_text(path);
    const Assemblage a = assemblage_from_json(parse_json(text, path));
    require_valid(a, path);
    const std::string digest = git_blob_digest(text);
    if (*embed_cmd) {
      const std::vector<double> p =
          p_text.empty() ? std::vector<double>(a.num_inputs(), 1.0 / a.num_inputs()) : parse_list(p_text, "--p");
      const CqState s = embed_cq(a, p);
      const HermitianOp xb = partial_trace(s.state, s.layout, {"X", "B"});
      const RegisterLayout xb_layout{{"X", s.layout.dim_of("X")}, {"B", s.layout.dim_of("B")}};
      const double mi = cmi(xb, xb_layout, {"X"}, {"B"}, {});
      Json results = to_json(s);
      results["mutual_information_XB"] = mi;
      return rep.emit("embed", rc, digest, results, "I(X;B) = " + fixed(mi, 12) + "\n", kExitPass);
    }
    if (*lhs_cmd) {
      const LhsResult r = lhs_test(a);
      return rep.emit("lhs-test", rc, digest, to_json(r),
                      std::string(lhs_status_name(r.status)) + " (residual " + fixed(r.residual, 12) + ")\n",
                      r.status == LhsStatus::kIndeterminate ? kExitNumeric : kExitPass);
    }
    if (*ris_cmd) {
      std::vector<NSExtension> seeds;
      for (const auto &f : seed_files) seeds.push_back(extension_from_json(read_json_file(f)));
      if (!sweep_text.empty()) {
        Json results = Json::array();
        std::string summary;
        for (int de : parse_ints(sweep_text, "--sweep-dim-e")) {
          SteerConfig c = sc;
          c.dim_E = de;
          const SteeringEstimate e = ris(a, c, seeds);
          results.push_back(to_json(e));
          summary += describe(e);
        }
        return rep.emit("ris", rc, digest, {{"sweep", results}}, summary, kExitPass);
      }
      const SteeringEstimate e = ris(a, sc, seeds);
      return rep.emit("ris", rc, digest, to_json(e), describe(e), kExitPass);
    }
    if (*is_cmd) {
      const SteeringEstimate e = is_lower(a, default_strategy_library(a, rotation_grid), sc);
      return rep.emit("is", rc, digest, to_json(e), describe(e), kExitPass);
    }
    return kExitInput;
  } catch (const Error &e) {
    err << e.what() << "\n";
    return exit_code_for(e.kind());
  } catch (const nlohmann::json::exception &e) {
    err << "argument error: " << e.what() << "\n";
    return kExitInput;
  }
}

}  // namespace steerq
