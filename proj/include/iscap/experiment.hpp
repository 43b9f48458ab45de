#ifndef ISCAP_EXPERIMENT_HPP
#define ISCAP_EXPERIMENT_HPP

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <initializer_list>
#include <limits>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include <json.hpp>

#include "iscap/channel.hpp"
#include "iscap/optimizer.hpp"
#include "iscap/protocol.hpp"

namespace iscap {

// Which scenario parameter the Monte-Carlo sweep walks over.
enum class SweepAxis { Rho, NRis, NTx };

inline const char* to_string(SweepAxis a) {
  switch (a) {
    case SweepAxis::Rho: return "rho";
    case SweepAxis::NRis: return "n_ris";
    case SweepAxis::NTx: return "n_tx";
  }
  throw std::invalid_argument("unknown sweep axis");
}

inline SweepAxis sweep_axis_from_string(const std::string& s) {
  if (s == "rho") return SweepAxis::Rho;
  if (s == "n_ris") return SweepAxis::NRis;
  if (s == "n_tx") return SweepAxis::NTx;
  throw std::invalid_argument("unknown sweep axis '" + s + "'");
}

// Full description of one sweep: base scenario, the protocols to
// compare, the swept axis with its grid, values held fixed on the
// other axes, and the per-trial solver setup.
struct SweepConfig {
  ScenarioConfig scenario;
  std::vector<ProtocolVariant> protocol_variants{
      ProtocolVariant::ES, ProtocolVariant::TS, ProtocolVariant::PS};
  SweepAxis sweep_axis = SweepAxis::Rho;
  std::vector<double> grid;
  double fixed_rho = 0.5;      // used whenever rho is not the axis
  double p_circuit = 50e-3;    // surface power model, shared by nodes
  double p_element = 2e-6;
  double eta = 0.8;
  int n_trials = 20;
  QosRequirements qos;
  SolveOptions solver;

  void validate() const {
    scenario.validate();
    qos.validate();
    solver.validate();
    if (protocol_variants.empty())
      throw std::invalid_argument("protocol_variants must be nonempty");
    for (std::size_t i = 0; i < protocol_variants.size(); ++i)
      for (std::size_t j = i + 1; j < protocol_variants.size(); ++j)
        if (protocol_variants[i] == protocol_variants[j])
          throw std::invalid_argument("protocol_variants repeats " +
                                      to_string(protocol_variants[i]));
    if (grid.empty()) throw std::invalid_argument("grid must be nonempty");
    for (std::size_t i = 0; i + 1 < grid.size(); ++i)
      if (!(grid[i] < grid[i + 1]))
        throw std::invalid_argument("grid not increasing");
    for (double v : grid) {
      if (!std::isfinite(v))
        throw std::invalid_argument("grid values must be finite");
      if (sweep_axis == SweepAxis::Rho) {
        if (!(v > 0.0 && v < 1.0))
          throw std::invalid_argument("rho grid must lie in (0, 1)");
      } else {
        if (!(v >= 1.0) || v != std::floor(v))
          throw std::invalid_argument(
              std::string(to_string(sweep_axis)) +
              " grid values must be positive integers");
      }
    }
    if (n_trials < 1) throw std::invalid_argument("n_trials must be >= 1");
    if (!(fixed_rho > 0.0 && fixed_rho < 1.0))
      throw std::invalid_argument("fixed rho must lie in (0, 1)");
    check_non_negative(p_circuit, "p_circuit");
    check_non_negative(p_element, "p_element");
    if (!(eta > 0.0 && eta <= 1.0))
      throw std::invalid_argument("eta must lie in (0, 1]");
  }
};

// Aggregated statistics for one (protocol, axis value) cell.  Power
// statistics are taken over the dBm values of converged trials; cells
// with no converged trial carry NaN means.
struct SweepRow {
  ProtocolVariant protocol = ProtocolVariant::PS;
  SweepAxis axis = SweepAxis::Rho;
  double axis_value = 0.0;
  double mean_power_dbm = 0.0;
  double std_power_db = 0.0;
  double infeasible_rate = 0.0;
  int n_trials = 0;
  double mean_ao_iters = 0.0;
};

struct SweepResult {
  std::vector<SweepRow> rows;
};

namespace exp_detail {

using json = nlohmann::json;

inline std::string qualify(const std::string& ctx, const std::string& key) {
  return ctx.empty() ? key : ctx + "." + key;
}

inline void expect_object(const json& j, const std::string& ctx) {
  if (!j.is_object())
    throw std::invalid_argument("field '" + ctx + "' must be an object");
}

inline void reject_unknown(const json& j, const std::string& ctx,
                           std::initializer_list<const char*> allowed) {
  for (const auto& item : j.items()) {
    bool known = false;
    for (const char* a : allowed)
      if (item.key() == a) {
        known = true;
        break;
      }
    if (!known)
      throw std::invalid_argument("unknown field '" +
                                  qualify(ctx, item.key()) + "'");
  }
}

template <typename T>
void read_field(const json& j, const char* key, T& out,
                const std::string& ctx) {
  if (!j.contains(key)) return;
  try {
    j.at(key).get_to(out);
  } catch (const json::exception&) {
    throw std::invalid_argument("field '" + qualify(ctx, key) +
                                "' has the wrong type");
  }
}

inline void read_position(const json& j, const char* key, Position& out,
                          const std::string& ctx) {
  if (!j.contains(key)) return;
  const json& p = j.at(key);
  const std::string pctx = qualify(ctx, key);
  expect_object(p, pctx);
  reject_unknown(p, pctx, {"x", "y", "z"});
  read_field(p, "x", out.x, pctx);
  read_field(p, "y", out.y, pctx);
  read_field(p, "z", out.z, pctx);
}

inline void read_scenario(const json& j, ScenarioConfig& cfg,
                          const std::string& ctx) {
  expect_object(j, ctx);
  reject_unknown(j, ctx,
                 {"n_tx", "n_ris", "n_sensors", "n_irs", "n_ers", "bs_pos",
                  "ris_pos", "ir_center", "er_center", "cluster_radius_m",
                  "target", "rician_k_db", "exponents", "ref_gain_db",
                  "noise_power_dbm", "seed"});
  read_field(j, "n_tx", cfg.n_tx, ctx);
  read_field(j, "n_ris", cfg.n_ris, ctx);
  read_field(j, "n_sensors", cfg.n_sensors, ctx);
  read_field(j, "n_irs", cfg.n_irs, ctx);
  read_field(j, "n_ers", cfg.n_ers, ctx);
  read_position(j, "bs_pos", cfg.bs_pos, ctx);
  read_position(j, "ris_pos", cfg.ris_pos, ctx);
  read_position(j, "ir_center", cfg.ir_center, ctx);
  read_position(j, "er_center", cfg.er_center, ctx);
  read_field(j, "cluster_radius_m", cfg.cluster_radius_m, ctx);
  if (j.contains("target")) {
    const json& t = j.at("target");
    const std::string tctx = qualify(ctx, "target");
    expect_object(t, tctx);
    reject_unknown(t, tctx, {"azimuth_deg", "elevation_deg", "range_m"});
    double az_deg = cfg.target.azimuth_rad * 180.0 / pi;
    double el_deg = cfg.target.elevation_rad * 180.0 / pi;
    read_field(t, "azimuth_deg", az_deg, tctx);
    read_field(t, "elevation_deg", el_deg, tctx);
    read_field(t, "range_m", cfg.target.range_m, tctx);
    cfg.target.azimuth_rad = az_deg * pi / 180.0;
    cfg.target.elevation_rad = el_deg * pi / 180.0;
  }
  read_field(j, "rician_k_db", cfg.rician_k_db, ctx);
  if (j.contains("exponents")) {
    const json& e = j.at("exponents");
    const std::string ectx = qualify(ctx, "exponents");
    expect_object(e, ectx);
    reject_unknown(e, ectx, {"bs_ris", "ris_user", "bs_user", "sensing"});
    read_field(e, "bs_ris", cfg.exponents.bs_ris, ectx);
    read_field(e, "ris_user", cfg.exponents.ris_user, ectx);
    read_field(e, "bs_user", cfg.exponents.bs_user, ectx);
    read_field(e, "sensing", cfg.exponents.sensing, ectx);
  }
  read_field(j, "ref_gain_db", cfg.ref_gain_db, ctx);
  read_field(j, "noise_power_dbm", cfg.noise_power_dbm, ctx);
  read_field(j, "seed", cfg.seed, ctx);
}

// Scenario actually simulated at one grid node.
inline ScenarioConfig node_scenario(const SweepConfig& cfg, double value) {
  ScenarioConfig s = cfg.scenario;
  if (cfg.sweep_axis == SweepAxis::NRis)
    s.n_ris = static_cast<int>(std::llround(value));
  else if (cfg.sweep_axis == SweepAxis::NTx)
    s.n_tx = static_cast<int>(std::llround(value));
  return s;
}

inline ProtocolConfig node_protocol(const SweepConfig& cfg,
                                    ProtocolVariant v, double value,
                                    int n_ris) {
  ProtocolConfig p;
  p.variant = v;
  p.rho = cfg.sweep_axis == SweepAxis::Rho ? value : cfg.fixed_rho;
  p.n_ris = n_ris;
  p.p_circuit = cfg.p_circuit;
  p.p_element = cfg.p_element;
  p.eta = cfg.eta;
  return p;
}

struct TrialRecord {
  ProtocolVariant protocol = ProtocolVariant::PS;
  double axis_value = 0.0;
  int trial = 0;
  std::uint64_t seed = 0;
  SolveStatus status = SolveStatus::Infeasible;
  double power_w = std::numeric_limits<double>::quiet_NaN();
  int ao_iters = 0;
};

inline void write_cell(char* buf, std::size_t n, double v) {
  if (std::isnan(v))
    std::snprintf(buf, n, "nan");
  else
    std::snprintf(buf, n, "%.6f", v);
}

}  // namespace exp_detail

// Parses and validates a sweep description.  Unknown fields are
// rejected by name at every nesting level; absent fields keep their
// defaults, so {"sweep_axis":"rho","grid":[0.3,0.6]} is already a
// complete configuration.
inline SweepConfig load_config(const std::string& path) {
  using exp_detail::json;
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open config: " + path);
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    throw std::runtime_error(path + ": " + e.what());
  }
  exp_detail::expect_object(j, "config");

  SweepConfig cfg;
  // "pareto" is owned by the cli layer but allowed here so one file can
  // describe both workflows.
  exp_detail::reject_unknown(j, "",
                             {"scenario", "protocol_variants", "sweep_axis",
                              "grid", "fixed", "n_trials", "qos", "solver",
                              "pareto"});
  if (j.contains("scenario"))
    exp_detail::read_scenario(j.at("scenario"), cfg.scenario, "scenario");
  if (j.contains("protocol_variants")) {
    std::vector<std::string> names;
    exp_detail::read_field(j, "protocol_variants", names, "");
    cfg.protocol_variants.clear();
    for (const std::string& n : names)
      cfg.protocol_variants.push_back(protocol_from_string(n));
  }
  if (j.contains("sweep_axis")) {
    std::string axis;
    exp_detail::read_field(j, "sweep_axis", axis, "");
    cfg.sweep_axis = sweep_axis_from_string(axis);
  }
  exp_detail::read_field(j, "grid", cfg.grid, "");
  if (j.contains("fixed")) {
    const exp_detail::json& f = j.at("fixed");
    exp_detail::expect_object(f, "fixed");
    exp_detail::reject_unknown(f, "fixed",
                               {"rho", "p_circuit", "p_element", "eta"});
    exp_detail::read_field(f, "rho", cfg.fixed_rho, "fixed");
    exp_detail::read_field(f, "p_circuit", cfg.p_circuit, "fixed");
    exp_detail::read_field(f, "p_element", cfg.p_element, "fixed");
    exp_detail::read_field(f, "eta", cfg.eta, "fixed");
  }
  exp_detail::read_field(j, "n_trials", cfg.n_trials, "");
  if (j.contains("qos")) {
    const exp_detail::json& q = j.at("qos");
    exp_detail::expect_object(q, "qos");
    exp_detail::reject_unknown(q, "qos",
                               {"r_com_min", "r_sense_min", "e_min_total"});
    exp_detail::read_field(q, "r_com_min", cfg.qos.r_com_min, "qos");
    exp_detail::read_field(q, "r_sense_min", cfg.qos.r_sense_min, "qos");
    exp_detail::read_field(q, "e_min_total", cfg.qos.e_min_total, "qos");
  }
  if (j.contains("solver")) {
    const exp_detail::json& s = j.at("solver");
    exp_detail::expect_object(s, "solver");
    exp_detail::reject_unknown(
        s, "solver",
        {"max_ao_iters", "max_sca_iters", "convergence_tol", "socp_tol",
         "socp_max_iters", "power_cap_w", "trust_shrink", "trust_min",
         "trust_w_scale", "trust_theta_scale"});
    exp_detail::read_field(s, "max_ao_iters", cfg.solver.max_ao_iters,
                           "solver");
    exp_detail::read_field(s, "max_sca_iters", cfg.solver.max_sca_iters,
                           "solver");
    exp_detail::read_field(s, "convergence_tol", cfg.solver.convergence_tol,
                           "solver");
    exp_detail::read_field(s, "socp_tol", cfg.solver.socp_tol, "solver");
    exp_detail::read_field(s, "socp_max_iters", cfg.solver.socp_max_iters,
                           "solver");
    exp_detail::read_field(s, "power_cap_w", cfg.solver.power_cap_w,
                           "solver");
    exp_detail::read_field(s, "trust_shrink", cfg.solver.trust_shrink,
                           "solver");
    exp_detail::read_field(s, "trust_min", cfg.solver.trust_min, "solver");
    exp_detail::read_field(s, "trust_w_scale", cfg.solver.trust_w_scale,
                           "solver");
    exp_detail::read_field(s, "trust_theta_scale",
                           cfg.solver.trust_theta_scale, "solver");
  }
  cfg.validate();
  return cfg;
}

// Runs the Monte-Carlo sweep.  Trial t of every grid node redraws user
// positions and fading jointly from seed base+t, so protocols and axis
// values are compared on identical channel realizations.  Tasks are
// independent and write to preassigned slots, making the result
// identical for any worker count or execution order.  When
// trial_dump_path is nonempty, one JSON line per (node, trial,
// protocol) is persisted for external re-aggregation.
inline SweepResult run_sweep(const SweepConfig& cfg, int jobs = 1,
                             const std::string& trial_dump_path = "") {
  using exp_detail::TrialRecord;
  cfg.validate();

  const std::size_t n_nodes = cfg.grid.size();
  const std::size_t n_protocols = cfg.protocol_variants.size();
  const std::size_t n_tasks = n_nodes * static_cast<std::size_t>(cfg.n_trials);
  std::vector<std::vector<TrialRecord>> slots(n_tasks);

  auto run_task = [&](std::size_t task) {
    const std::size_t node = task / static_cast<std::size_t>(cfg.n_trials);
    const int trial = static_cast<int>(task %
                                       static_cast<std::size_t>(cfg.n_trials));
    ScenarioConfig sc = exp_detail::node_scenario(cfg, cfg.grid[node]);
    sc.seed = cfg.scenario.seed + static_cast<std::uint64_t>(trial);
    const ChannelSet ch = build_scenario_channels(sc);
    const TargetModel target = make_target_model(sc);
    std::vector<TrialRecord>& out = slots[task];
    out.resize(n_protocols);
    for (std::size_t p = 0; p < n_protocols; ++p) {
      const ProtocolConfig proto = exp_detail::node_protocol(
          cfg, cfg.protocol_variants[p], cfg.grid[node], sc.n_ris);
      TrialRecord& rec = out[p];
      rec.protocol = proto.variant;
      rec.axis_value = cfg.grid[node];
      rec.trial = trial;
      rec.seed = sc.seed;
      try {
        const SolveReport rep = ao_solve(ch, proto, cfg.qos, target,
                                         cfg.solver);
        rec.status = rep.status;
        rec.ao_iters = rep.ao_iters;
        if (rep.status == SolveStatus::Converged)
          rec.power_w = transmit_power(rep.solution);
      } catch (const std::exception&) {
        rec.status = SolveStatus::Infeasible;  // counted as a failure
      }
    }
  };

  if (jobs <= 0) {
    const unsigned hw = std::thread::hardware_concurrency();
    jobs = hw == 0 ? 1 : static_cast<int>(hw);
  }
  const std::size_t workers =
      std::min<std::size_t>(static_cast<std::size_t>(jobs), n_tasks);
  if (workers <= 1) {
    for (std::size_t t = 0; t < n_tasks; ++t) run_task(t);
  } else {
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (std::size_t w = 0; w < workers; ++w)
      pool.emplace_back([&] {
        for (std::size_t t = next.fetch_add(1); t < n_tasks;
             t = next.fetch_add(1))
          run_task(t);
      });
    for (std::thread& th : pool) th.join();
  }

  // Deterministic reduction keyed by (protocol, node); power statistics
  // are computed on the dBm scale over converged trials only.
  SweepResult res;
  res.rows.reserve(n_protocols * n_nodes);
  for (std::size_t p = 0; p < n_protocols; ++p)
    for (std::size_t node = 0; node < n_nodes; ++node) {
      SweepRow row;
      row.protocol = cfg.protocol_variants[p];
      row.axis = cfg.sweep_axis;
      row.axis_value = cfg.grid[node];
      row.n_trials = cfg.n_trials;
      std::vector<double> dbm;
      double iter_sum = 0.0;
      for (int t = 0; t < cfg.n_trials; ++t) {
        const TrialRecord& rec =
            slots[node * static_cast<std::size_t>(cfg.n_trials) +
                  static_cast<std::size_t>(t)][p];
        if (rec.status != SolveStatus::Converged) continue;
        dbm.push_back(watt_to_dbm(rec.power_w));
        iter_sum += static_cast<double>(rec.ao_iters);
      }
      const std::size_t n_conv = dbm.size();
      row.infeasible_rate =
          1.0 - static_cast<double>(n_conv) / cfg.n_trials;
      if (n_conv == 0) {
        const double nan = std::numeric_limits<double>::quiet_NaN();
        row.mean_power_dbm = nan;
        row.std_power_db = nan;
        row.mean_ao_iters = nan;
      } else {
        double mean = 0.0;
        for (double v : dbm) mean += v;
        mean /= static_cast<double>(n_conv);
        double var = 0.0;
        for (double v : dbm) var += (v - mean) * (v - mean);
        row.mean_power_dbm = mean;
        row.std_power_db =
            n_conv < 2 ? 0.0 : std::sqrt(var / static_cast<double>(n_conv - 1));
        row.mean_ao_iters = iter_sum / static_cast<double>(n_conv);
      }
      res.rows.push_back(row);
    }

  if (!trial_dump_path.empty()) {
    std::ofstream dump(trial_dump_path, std::ios::binary);
    if (!dump)
      throw std::runtime_error("cannot open " + trial_dump_path);
    for (std::size_t task = 0; task < n_tasks; ++task)
      for (const TrialRecord& rec : slots[task]) {
        exp_detail::json line;
        line["protocol"] = to_string(rec.protocol);
        line["axis"] = to_string(cfg.sweep_axis);
        line["axis_value"] = rec.axis_value;
        line["trial"] = rec.trial;
        line["seed"] = rec.seed;
        line["status"] = to_string(rec.status);
        line["ao_iters"] = rec.ao_iters;
        if (rec.status == SolveStatus::Converged) {
          line["power_w"] = rec.power_w;
          line["power_dbm"] = watt_to_dbm(rec.power_w);
        }
        dump << line.dump() << '\n';
      }
    if (!dump) throw std::runtime_error("failed writing " + trial_dump_path);
  }
  return res;
}

// Persists the aggregate table; one row per (protocol, axis value).
// Cells without converged trials are written as literal "nan".
inline void write_results(const SweepResult& res, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open " + path);
  out << "protocol,axis,axis_value,mean_power_dbm,std_power_db,"
         "infeasible_rate,n_trials,mean_ao_iters\n";
  char mean[32], std_[32], iters[32];
  char buf[256];
  for (const SweepRow& r : res.rows) {
    exp_detail::write_cell(mean, sizeof mean, r.mean_power_dbm);
    exp_detail::write_cell(std_, sizeof std_, r.std_power_db);
    exp_detail::write_cell(iters, sizeof iters, r.mean_ao_iters);
    std::snprintf(buf, sizeof buf, "%s,%s,%.6f,%s,%s,%.6f,%d,%s\n",
                  to_string(r.protocol).c_str(), to_string(r.axis),
                  r.axis_value, mean, std_, r.infeasible_rate, r.n_trials,
                  iters);
    out << buf;
  }
  if (!out) throw std::runtime_error("failed writing " + path);
}

// Writes one whitespace-delimited (axis_value, mean_power_dbm) series
// per protocol next to `stem`, e.g. stem_PS.dat, for plotting tools.
inline std::vector<std::string> emit_plot_data(const SweepResult& res,
                                               const std::string& stem) {
  std::vector<std::string> paths;
  std::vector<ProtocolVariant> seen;
  for (const SweepRow& r : res.rows) {
    if (std::find(seen.begin(), seen.end(), r.protocol) != seen.end())
      continue;
    seen.push_back(r.protocol);
    const std::string path = stem + "_" + to_string(r.protocol) + ".dat";
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot open " + path);
    char mean[32], buf[96];
    for (const SweepRow& q : res.rows) {
      if (q.protocol != r.protocol) continue;
      exp_detail::write_cell(mean, sizeof mean, q.mean_power_dbm);
      std::snprintf(buf, sizeof buf, "%.6f %s\n", q.axis_value, mean);
      out << buf;
    }
    if (!out) throw std::runtime_error("failed writing " + path);
    paths.push_back(path);
  }
  return paths;
}

}  // namespace iscap

#endif  // ISCAP_EXPERIMENT_HPP
