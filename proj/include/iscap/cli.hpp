#ifndef ISCAP_CLI_HPP
#define ISCAP_CLI_HPP

#include <cstdio>
#include <exception>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "iscap/experiment.hpp"
#include "iscap/pareto.hpp"

namespace iscap {

// Front-tracing request carried by the optional "pareto" config block.
struct ParetoSpec {
  ParetoMethod method = ParetoMethod::EpsilonConstraint;
  double budget_w = default_pareto_budget_w();
  ParetoGrid grid;
  ParetoOptions options;
};

// Reads the "pareto" block of a config file (strictly, like the sweep
// schema) and fills method-appropriate single-node defaults.  A file
// without the block yields the default epsilon request.
inline ParetoSpec load_pareto_spec(const std::string& path,
                                   const SolveOptions& solver) {
  using exp_detail::json;
  ParetoSpec spec;
  spec.options.solver = solver;

  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open config: " + path);
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    throw std::runtime_error(path + ": " + e.what());
  }
  if (j.is_object() && j.contains("pareto")) {
    const json& p = j.at("pareto");
    exp_detail::expect_object(p, "pareto");
    exp_detail::reject_unknown(
        p, "pareto",
        {"method", "objective", "budget_dbm", "thresholds", "weights",
         "priority", "slack_fractions", "level_tol", "bisect_iters",
         "promote_rounds"});
    if (p.contains("method")) {
      std::string name;
      exp_detail::read_field(p, "method", name, "pareto");
      spec.method = pareto_method_from_string(name);
    }
    if (p.contains("objective")) {
      std::string name;
      exp_detail::read_field(p, "objective", name, "pareto");
      spec.grid.objective = pareto_metric_from_string(name);
    }
    double budget_dbm = watt_to_dbm(spec.budget_w);
    exp_detail::read_field(p, "budget_dbm", budget_dbm, "pareto");
    spec.budget_w = dbm_to_watt(budget_dbm);
    exp_detail::read_field(p, "thresholds", spec.grid.thresholds, "pareto");
    exp_detail::read_field(p, "weights", spec.grid.weights, "pareto");
    if (p.contains("priority")) {
      std::vector<std::string> names;
      exp_detail::read_field(p, "priority", names, "pareto");
      if (names.size() != 3)
        throw std::invalid_argument("pareto.priority needs three metrics");
      for (int i = 0; i < 3; ++i)
        spec.grid.priority[static_cast<std::size_t>(i)] =
            pareto_metric_from_string(names[static_cast<std::size_t>(i)]);
    }
    exp_detail::read_field(p, "slack_fractions", spec.grid.slack_fractions,
                           "pareto");
    exp_detail::read_field(p, "level_tol", spec.options.level_tol, "pareto");
    exp_detail::read_field(p, "bisect_iters", spec.options.bisect_iters,
                           "pareto");
    exp_detail::read_field(p, "promote_rounds", spec.options.promote_rounds,
                           "pareto");
  }

  // One permissive node per method keeps a blockless config usable.
  if (spec.grid.thresholds.empty()) spec.grid.thresholds = {{0.0, 0.0}};
  if (spec.grid.weights.empty()) spec.grid.weights = {{1.0, 1.0, 1.0}};
  if (spec.grid.slack_fractions.empty())
    spec.grid.slack_fractions = {{0.0, 0.0}};
  spec.options.validate();
  check_positive(spec.budget_w, "pareto budget");
  return spec;
}

namespace cli_detail {

using exp_detail::json;

inline std::string joined(const std::string& dir, const std::string& name) {
  return (std::filesystem::path(dir) / name).string();
}

inline std::vector<ProtocolVariant> parse_protocols(
    const std::vector<std::string>& names) {
  std::vector<ProtocolVariant> out;
  out.reserve(names.size());
  for (const std::string& n : names) out.push_back(protocol_from_string(n));
  return out;
}

inline ProtocolConfig protocol_for(const SweepConfig& cfg,
                                   ProtocolVariant v) {
  ProtocolConfig p;
  p.variant = v;
  p.rho = cfg.fixed_rho;
  p.n_ris = cfg.scenario.n_ris;
  p.p_circuit = cfg.p_circuit;
  p.p_element = cfg.p_element;
  p.eta = cfg.eta;
  return p;
}

inline int run_solve(const SweepConfig& cfg,
                     const std::vector<ProtocolVariant>& protocols,
                     const std::string& out_dir, int verbosity) {
  const ChannelSet ch = build_scenario_channels(cfg.scenario);
  const TargetModel target = make_target_model(cfg.scenario);

  json report;
  report["seed"] = cfg.scenario.seed;
  report["qos"] = {{"r_com_min", cfg.qos.r_com_min},
                   {"r_sense_min", cfg.qos.r_sense_min},
                   {"e_min_total", cfg.qos.e_min_total}};
  report["scenario"] = {{"n_tx", cfg.scenario.n_tx},
                        {"n_ris", cfg.scenario.n_ris},
                        {"n_sensors", cfg.scenario.n_sensors},
                        {"n_irs", cfg.scenario.n_irs},
                        {"n_ers", cfg.scenario.n_ers}};
  report["results"] = json::array();

  bool all_ok = true;
  for (ProtocolVariant v : protocols) {
    const ProtocolConfig proto = protocol_for(cfg, v);
    const SolveReport rep = ao_solve(ch, proto, cfg.qos, target, cfg.solver);
    json entry;
    entry["protocol"] = to_string(v);
    entry["rho"] = proto.rho;
    entry["status"] = to_string(rep.status);
    entry["ao_iters"] = rep.ao_iters;
    if (rep.status == SolveStatus::Converged) {
      const double p_w = transmit_power(rep.solution);
      entry["power_w"] = p_w;
      entry["power_dbm"] = watt_to_dbm(p_w);
      const ConstraintSlacks s =
          check_feasibility(rep.solution, ch, proto, cfg.qos, target);
      entry["slacks"] = {{"comm_min",
                          s.comm.size() > 0 ? s.comm.minCoeff() : 0.0},
                         {"sense", s.sense},
                         {"er", s.er},
                         {"ris", s.ris}};
      if (verbosity >= 0)
        std::printf("%s: %.2f dBm (%s, %d iters)\n", to_string(v).c_str(),
                    watt_to_dbm(p_w), to_string(rep.status), rep.ao_iters);
    } else {
      all_ok = false;
      if (verbosity >= 0)
        std::printf("%s: %s after %d iters\n", to_string(v).c_str(),
                    to_string(rep.status), rep.ao_iters);
    }
    report["results"].push_back(entry);
  }

  const std::string path = joined(out_dir, "solve.json");
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open " + path);
  out << report.dump(2) << '\n';
  if (!out) throw std::runtime_error("failed writing " + path);
  if (verbosity >= 0) std::printf("report: %s\n", path.c_str());
  return all_ok ? 0 : 1;
}

inline int run_sweep_cmd(const SweepConfig& cfg, int jobs,
                         const std::string& out_dir, bool trial_dump,
                         int verbosity) {
  const std::string dump_path =
      trial_dump ? joined(out_dir, "trials.jsonl") : std::string();
  const SweepResult res = run_sweep(cfg, jobs, dump_path);
  const std::string csv = joined(out_dir, "sweep.csv");
  write_results(res, csv);
  const auto series = emit_plot_data(res, joined(out_dir, "series"));

  bool any_converged = false;
  for (const SweepRow& r : res.rows) {
    if (r.infeasible_rate < 1.0) any_converged = true;
    if (verbosity > 0)
      std::printf("%s %s=%g: mean %.2f dBm, infeasible %.0f%%\n",
                  to_string(r.protocol).c_str(), to_string(r.axis),
                  r.axis_value, r.mean_power_dbm, 100.0 * r.infeasible_rate);
  }
  if (verbosity >= 0) {
    std::printf("wrote %s and %zu series files\n", csv.c_str(),
                series.size());
    if (trial_dump) std::printf("trials: %s\n", dump_path.c_str());
  }
  return any_converged ? 0 : 1;
}

inline int run_pareto_cmd(const SweepConfig& cfg, const ParetoSpec& spec,
                          const std::vector<ProtocolVariant>& protocols,
                          const std::string& out_dir, int verbosity) {
  const ChannelSet ch = build_scenario_channels(cfg.scenario);
  const TargetModel target = make_target_model(cfg.scenario);
  bool any_point = false;
  for (ProtocolVariant v : protocols) {
    const ProtocolConfig proto = protocol_for(cfg, v);
    const auto front = trace_front(spec.method, spec.grid, spec.budget_w, ch,
                                   proto, target, spec.options);
    const std::string path =
        joined(out_dir, "front_" + to_string(v) + ".csv");
    write_front_csv(front, path);
    if (!front.empty()) any_point = true;
    if (verbosity >= 0)
      std::printf("%s: %zu front points -> %s\n", to_string(v).c_str(),
                  front.size(), path.c_str());
  }
  return any_point ? 0 : 1;
}

}  // namespace cli_detail

// Command-line driver; returns the process exit code (0 success,
// 1 infeasible or failed solve, 2 usage or config errors).
inline int run_cli(int argc, const char* const* argv) {
  CLI::App app{"RIS-assisted ISCAP beamforming toolbox"};
  app.fallthrough(true);
  app.require_subcommand(1);

  std::string config_path;
  std::string out_dir = ".";
  std::uint64_t seed = 0;
  std::vector<std::string> protocol_names;
  bool quiet = false, verbose = false;
  int jobs = 0;
  bool trial_dump = false;

  app.add_option("--config", config_path, "JSON config file");
  app.add_option("--out", out_dir, "output directory (created if absent)");
  auto* seed_opt =
      app.add_option("--seed", seed, "override the scenario seed");
  app.add_option("--protocol", protocol_names,
                 "protocol variant (repeatable): ES, TS or PS");
  app.add_flag("--quiet", quiet, "suppress the human summary");
  app.add_flag("--verbose", verbose, "print per-row details");

  CLI::App* solve = app.add_subcommand("solve", "single-instance solve");
  CLI::App* sweep = app.add_subcommand("sweep", "Monte-Carlo sweep");
  sweep->add_option("--jobs", jobs, "worker count (0 = all cores)");
  sweep->add_flag("--trial-dump", trial_dump,
                  "persist per-trial JSON lines");
  CLI::App* pareto = app.add_subcommand("pareto", "trace a tradeoff front");
  CLI::App* validate =
      app.add_subcommand("validate-config", "check a config file");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : 2;
  }

  const int verbosity = quiet ? -1 : verbose ? 1 : 0;
  try {
    const bool needs_config =
        sweep->parsed() || pareto->parsed() || validate->parsed();
    if (needs_config && config_path.empty()) {
      std::fprintf(stderr, "a --config file is required for %s\n",
                   app.get_subcommands().front()->get_name().c_str());
      return 2;
    }

    SweepConfig cfg;
    if (!config_path.empty()) cfg = load_config(config_path);
    if (validate->parsed()) {
      load_pareto_spec(config_path, cfg.solver);  // schema check only
      if (verbosity >= 0) std::printf("OK: %s\n", config_path.c_str());
      return 0;
    }

    if (seed_opt->count() > 0) cfg.scenario.seed = seed;
    std::vector<ProtocolVariant> protocols =
        protocol_names.empty() ? cfg.protocol_variants
                               : cli_detail::parse_protocols(protocol_names);
    if (!protocol_names.empty()) cfg.protocol_variants = protocols;

    std::error_code ec;
    std::filesystem::create_directories(out_dir, ec);
    if (ec)
      throw std::runtime_error("cannot create output directory: " + out_dir);

    if (solve->parsed())
      return cli_detail::run_solve(cfg, protocols, out_dir, verbosity);
    if (sweep->parsed()) {
      cfg.validate();
      return cli_detail::run_sweep_cmd(cfg, jobs, out_dir, trial_dump,
                                       verbosity);
    }
    const ParetoSpec spec = load_pareto_spec(config_path, cfg.solver);
    return cli_detail::run_pareto_cmd(cfg, spec, protocols, out_dir,
                                      verbosity);
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  }
}

inline int run_cli(const std::vector<std::string>& args) {
  std::vector<const char*> argv;
  argv.reserve(args.size() + 1);
  argv.push_back("iscap");
  for (const std::string& a : args) argv.push_back(a.c_str());
  return run_cli(static_cast<int>(argv.size()), argv.data());
}

}  // namespace iscap

#endif  // ISCAP_CLI_HPP
