#include <catch_amalgamated.hpp>

#include <array>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <vector>

#include "iscap/channel.hpp"
#include "iscap/pareto.hpp"

using namespace iscap;

namespace {

// Compact instance shared by every front test.
ScenarioConfig small_scenario() {
  ScenarioConfig cfg;
  cfg.n_tx = 4;
  cfg.n_ris = 12;
  cfg.n_sensors = 6;
  cfg.n_irs = 2;
  cfg.n_ers = 1;
  cfg.ref_gain_db = -15.0;  // strong links keep the QoS easy to hit
  cfg.seed = 7;
  return cfg;
}

ProtocolConfig light_protocol(ProtocolVariant v = ProtocolVariant::PS) {
  ProtocolConfig p;
  p.variant = v;
  p.rho = 0.5;
  p.n_ris = 12;
  p.p_circuit = 2e-4;
  p.p_element = 1e-6;
  return p;
}

double test_budget() { return dbm_to_watt(36.0); }

// Independent pairwise audit used to cross-check the dominated flags.
bool dominated_in(const ParetoPoint& p, const std::vector<ParetoPoint>& set) {
  for (const ParetoPoint& q : set) {
    if (&q == &p) continue;
    if (q.comm >= p.comm && q.sense >= p.sense && q.wpt >= p.wpt &&
        (q.comm > p.comm || q.sense > p.sense || q.wpt > p.wpt))
      return true;
  }
  return false;
}

}  // namespace

TEST_CASE("metric names and method names round-trip") {
  for (ParetoMetric m : {ParetoMetric::Comm, ParetoMetric::Sense,
                         ParetoMetric::Wpt})
    REQUIRE(pareto_metric_from_string(to_string(m)) == m);
  for (ParetoMethod m :
       {ParetoMethod::EpsilonConstraint, ParetoMethod::WeightedSum,
        ParetoMethod::Lexicographic})
    REQUIRE(pareto_method_from_string(to_string(m)) == m);
  REQUIRE_THROWS_AS(pareto_metric_from_string("power"), std::invalid_argument);
  REQUIRE_THROWS_AS(pareto_method_from_string("grid"), std::invalid_argument);

  ParetoPoint p;
  p.comm = 1.0;
  p.sense = 2.0;
  p.wpt = 3.0;
  REQUIRE(p.metric(ParetoMetric::Comm) == 1.0);
  REQUIRE(p.metric(ParetoMetric::Sense) == 2.0);
  REQUIRE(p.metric(ParetoMetric::Wpt) == 3.0);
}

TEST_CASE("raising the transmit scale improves every metric and margin") {
  const ChannelSet ch = build_scenario_channels(small_scenario());
  const ProtocolConfig proto = light_protocol();
  const TargetModel target = make_target_model(small_scenario());

  SolveOptions so;
  so.power_cap_w = pareto_detail::guarded_cap(test_budget());
  QosRequirements zero;
  zero.r_com_min = 0.0;
  zero.r_sense_min = 0.0;
  zero.e_min_total = 0.0;
  const SolveReport rep = init_solution(ch, proto, zero, target, so);
  REQUIRE(rep.status == SolveStatus::Converged);

  auto slack = [&](const BeamformingSolution& s) {
    return check_feasibility(s, ch, proto, zero, target).min_slack();
  };
  std::array<double, 3> prev = pareto_metrics(rep.solution, ch, proto, target);
  double prev_slack = slack(rep.solution);
  const double p0 = transmit_power(rep.solution);
  for (double factor : {1.5, 2.5, 4.0}) {
    const BeamformingSolution s =
        pareto_detail::scale_to_power(rep.solution, factor * p0);
    REQUIRE(transmit_power(s) == Catch::Approx(factor * p0).epsilon(1e-12));
    const std::array<double, 3> m = pareto_metrics(s, ch, proto, target);
    for (int i = 0; i < 3; ++i) REQUIRE(m[i] >= prev[i] - 1e-12);
    REQUIRE(slack(s) >= prev_slack - 1e-12);
    prev = m;
    prev_slack = slack(s);
  }
}

TEST_CASE("level bisection matches a grid scan of the same probe") {
  const ChannelSet ch = build_scenario_channels(small_scenario());
  const ProtocolConfig proto = light_protocol();
  const TargetModel target = make_target_model(small_scenario());
  ParetoOptions opts;
  const double budget = test_budget();
  const std::array<double, 2> thresholds{0.5, 1e-6};

  const auto ls = pareto_detail::search_level(
      ParetoMetric::Comm, thresholds, budget, ch, proto, target, opts);
  REQUIRE(ls.feasible);
  REQUIRE(ls.level > 0.0);

  SolveOptions so = opts.solver;
  so.power_cap_w = pareto_detail::guarded_cap(budget);
  const pareto_detail::LevelProbe probe{ch, proto, target, so};
  auto feasible_at = [&](double level) {
    return probe(pareto_detail::floor_triple(ParetoMetric::Comm, thresholds,
                                             level))
               .status == SolveStatus::Converged;
  };

  // Largest feasible level on a 1e-3 grid around the bisection output.
  const double step = 1e-3;
  double grid_max = -1.0;
  for (double l = std::max(0.0, ls.level - 0.05); l <= ls.level + 0.05;
       l += step)
    if (feasible_at(l)) grid_max = l;
  REQUIRE(grid_max >= 0.0);
  REQUIRE(feasible_at(grid_max));
  REQUIRE_FALSE(feasible_at(grid_max + step));
  REQUIRE(std::abs(ls.level - grid_max) <= step + 1e-9);

  // The witness really attains the certified level within the budget.
  const auto m = pareto_metrics(ls.witness, ch, proto, target);
  REQUIRE(m[0] >= ls.level - 1e-12);
  REQUIRE(transmit_power(ls.witness) <= budget + 1e-8);
}

TEST_CASE("zero thresholds reduce to single-objective maximization") {
  const ChannelSet ch = build_scenario_channels(small_scenario());
  const ProtocolConfig proto = light_protocol();
  const TargetModel target = make_target_model(small_scenario());
  ParetoOptions opts;
  const double budget = test_budget();

  for (ParetoMetric obj : {ParetoMetric::Comm, ParetoMetric::Sense,
                           ParetoMetric::Wpt}) {
    const ParetoPoint p =
        solve_constrained(obj, {0.0, 0.0}, budget, ch, proto, target, opts);
    REQUIRE(p.status == SolveStatus::Converged);
    REQUIRE(std::isfinite(p.comm));
    REQUIRE(p.comm >= 0.0);
    REQUIRE(p.sense >= 0.0);
    REQUIRE(p.wpt >= 0.0);
    // All budget is spent and stays within it.
    REQUIRE(transmit_power(p.solution) <= budget + 1e-8);
    REQUIRE(transmit_power(p.solution) ==
            Catch::Approx(pareto_detail::guarded_cap(budget)).epsilon(1e-5));
    // Never worse than the bisection certificate it started from.
    const auto ls = pareto_detail::search_level(obj, {0.0, 0.0}, budget, ch,
                                                proto, target, opts);
    REQUIRE(p.metric(obj) >= ls.level - 1e-12);

    // Deterministic: an identical call reproduces the same point.
    const ParetoPoint q =
        solve_constrained(obj, {0.0, 0.0}, budget, ch, proto, target, opts);
    REQUIRE(p.comm == q.comm);
    REQUIRE(p.sense == q.sense);
    REQUIRE(p.wpt == q.wpt);
  }
}

TEST_CASE("thresholds beyond the single-objective optima are infeasible") {
  const ChannelSet ch = build_scenario_channels(small_scenario());
  const ProtocolConfig proto = light_protocol();
  const TargetModel target = make_target_model(small_scenario());
  ParetoOptions opts;
  const double budget = test_budget();

  const double opt_sense =
      solve_constrained(ParetoMetric::Sense, {0.0, 0.0}, budget, ch, proto,
                        target, opts)
          .sense;
  const double opt_wpt =
      solve_constrained(ParetoMetric::Wpt, {0.0, 0.0}, budget, ch, proto,
                        target, opts)
          .wpt;
  const ParetoPoint p = solve_constrained(
      ParetoMetric::Comm, {2.0 * opt_sense + 1.0, 2.0 * opt_wpt + 1e-3},
      budget, ch, proto, target, opts);
  REQUIRE(p.status == SolveStatus::Infeasible);

  // A budget below the self-powering floor leaves nothing feasible.
  const ParetoPoint q =
      solve_constrained(ParetoMetric::Comm, {0.0, 0.0}, dbm_to_watt(20.0), ch,
                        proto, target, opts);
  REQUIRE(q.status == SolveStatus::Infeasible);
}

TEST_CASE("feasible thresholds are honored by the returned point") {
  const ChannelSet ch = build_scenario_channels(small_scenario());
  const TargetModel target = make_target_model(small_scenario());
  ParetoOptions opts;
  const double budget = test_budget();

  for (ProtocolVariant v :
       {ProtocolVariant::PS, ProtocolVariant::TS, ProtocolVariant::ES}) {
    const ProtocolConfig proto = light_protocol(v);
    const ParetoPoint p = solve_constrained(
        ParetoMetric::Sense, {0.2, 1e-6}, budget, ch, proto, target, opts);
    REQUIRE(p.status == SolveStatus::Converged);
    REQUIRE(p.comm >= 0.2 - 1e-6);
    REQUIRE(p.wpt >= 1e-6 - 1e-6);
    REQUIRE(p.sense > 0.0);
    REQUIRE(transmit_power(p.solution) <= budget + 1e-8);
  }
}

TEST_CASE("lexicographic stages keep earlier optima within their slack") {
  const ChannelSet ch = build_scenario_channels(small_scenario());
  const ProtocolConfig proto = light_protocol();
  const TargetModel target = make_target_model(small_scenario());
  ParetoOptions opts;
  const double budget = test_budget();
  const std::array<ParetoMetric, 3> priority{
      ParetoMetric::Comm, ParetoMetric::Sense, ParetoMetric::Wpt};

  const ParetoPoint opt_comm = solve_constrained(
      ParetoMetric::Comm, {0.0, 0.0}, budget, ch, proto, target, opts);

  // Zero slack pins the top metric to its optimum.
  const ParetoPoint zero = solve_lexicographic(priority, {0.0, 0.0}, budget,
                                               ch, proto, target, opts);
  REQUIRE(zero.status == SolveStatus::Converged);
  REQUIRE(zero.method == ParetoMethod::Lexicographic);
  REQUIRE(zero.comm >= opt_comm.comm - 1e-6);

  // Partial slack keeps the documented fraction.
  const ParetoPoint part = solve_lexicographic(priority, {0.25, 0.25}, budget,
                                               ch, proto, target, opts);
  REQUIRE(part.status == SolveStatus::Converged);
  REQUIRE(part.comm >= 0.75 * opt_comm.comm - 1e-6);

  // Full slack makes the early bounds vacuous: the last stage is then
  // exactly the single-objective solve on the last metric.
  const ParetoPoint vac = solve_lexicographic(priority, {1.0, 1.0}, budget,
                                              ch, proto, target, opts);
  const ParetoPoint wpt_only = solve_constrained(
      ParetoMetric::Wpt, {0.0, 0.0}, budget, ch, proto, target, opts);
  REQUIRE(vac.comm == wpt_only.comm);
  REQUIRE(vac.sense == wpt_only.sense);
  REQUIRE(vac.wpt == wpt_only.wpt);

  REQUIRE_THROWS_AS(
      solve_lexicographic({ParetoMetric::Comm, ParetoMetric::Comm,
                           ParetoMetric::Wpt},
                          {0.0, 0.0}, budget, ch, proto, target, opts),
      std::invalid_argument);
  REQUIRE_THROWS_AS(
      solve_lexicographic(priority, {-0.1, 0.0}, budget, ch, proto, target,
                          opts),
      std::invalid_argument);
  REQUIRE_THROWS_AS(
      solve_lexicographic(priority, {0.0, 1.5}, budget, ch, proto, target,
                          opts),
      std::invalid_argument);
}

TEST_CASE("a single positive weight delegates to the constrained solve") {
  const ChannelSet ch = build_scenario_channels(small_scenario());
  const ProtocolConfig proto = light_protocol();
  const TargetModel target = make_target_model(small_scenario());
  ParetoOptions opts;
  const double budget = test_budget();

  const std::array<double, 3> ones{1.0, 1.0, 1.0};
  for (int i = 0; i < 3; ++i) {
    std::array<double, 3> w{0.0, 0.0, 0.0};
    w[i] = 2.5;
    const ParetoPoint a =
        solve_weighted_sum(w, ones, budget, ch, proto, target, opts);
    const ParetoPoint b =
        solve_constrained(static_cast<ParetoMetric>(i), {0.0, 0.0}, budget,
                          ch, proto, target, opts);
    REQUIRE(a.method == ParetoMethod::WeightedSum);
    REQUIRE(a.comm == b.comm);
    REQUIRE(a.sense == b.sense);
    REQUIRE(a.wpt == b.wpt);
  }

  REQUIRE_THROWS_AS(
      solve_weighted_sum({0.0, 0.0, 0.0}, ones, budget, ch, proto, target,
                         opts),
      std::invalid_argument);
  REQUIRE_THROWS_AS(
      solve_weighted_sum({-1.0, 1.0, 0.0}, ones, budget, ch, proto, target,
                         opts),
      std::invalid_argument);
  REQUIRE_THROWS_AS(
      solve_weighted_sum(ones, {1.0, 0.0, 1.0}, budget, ch, proto, target,
                         opts),
      std::invalid_argument);
}

TEST_CASE("scaling every weight leaves the weighted point unchanged") {
  const ChannelSet ch = build_scenario_channels(small_scenario());
  const ProtocolConfig proto = light_protocol();
  const TargetModel target = make_target_model(small_scenario());
  ParetoOptions opts;
  const double budget = test_budget();
  const std::array<double, 3> ones{1.0, 1.0, 1.0};

  const ParetoPoint a = solve_weighted_sum({1.0, 2.0, 3.0}, ones, budget, ch,
                                           proto, target, opts);
  const ParetoPoint b = solve_weighted_sum({10.0, 20.0, 30.0}, ones, budget,
                                           ch, proto, target, opts);
  REQUIRE(a.status == SolveStatus::Converged);
  REQUIRE(a.comm == b.comm);
  REQUIRE(a.sense == b.sense);
  REQUIRE(a.wpt == b.wpt);

  // The ascent never leaves the feasible region.
  REQUIRE(transmit_power(a.solution) <= budget + 1e-8);
  QosRequirements zero;
  zero.r_com_min = 0.0;
  zero.r_sense_min = 0.0;
  zero.e_min_total = 0.0;
  REQUIRE(check_feasibility(a.solution, ch, proto, zero, target).min_slack() >=
          -1e-6);
}

TEST_CASE("dominance flags match a brute-force audit") {
  std::vector<ParetoPoint> pts(4);
  auto set = [&](int i, double c, double s, double w) {
    pts[i].comm = c;
    pts[i].sense = s;
    pts[i].wpt = w;
  };
  set(0, 1.0, 1.0, 1.0);
  set(1, 2.0, 1.0, 1.0);  // dominates 0
  set(2, 0.5, 3.0, 0.1);  // trade-off, untouched
  set(3, 2.0, 1.0, 1.0);  // equal to 1: neither dominates the other
  mark_dominated(pts);
  REQUIRE(pts[0].dominated);
  REQUIRE_FALSE(pts[1].dominated);
  REQUIRE_FALSE(pts[2].dominated);
  REQUIRE_FALSE(pts[3].dominated);
  for (const ParetoPoint& p : pts)
    REQUIRE(p.dominated == dominated_in(p, pts));
}

TEST_CASE("epsilon front drops infeasible nodes and sorts by comm") {
  const ChannelSet ch = build_scenario_channels(small_scenario());
  const ProtocolConfig proto = light_protocol();
  const TargetModel target = make_target_model(small_scenario());
  ParetoOptions opts;
  const double budget = test_budget();

  ParetoGrid grid;
  grid.objective = ParetoMetric::Comm;
  grid.thresholds = {{0.0, 0.0},
                     {0.5, 0.0},
                     {1.5, 0.0},
                     {0.0, 3e-6},
                     {99.0, 9e-4}};  // unreachable node
  const auto front = trace_front(ParetoMethod::EpsilonConstraint, grid,
                                 budget, ch, proto, target, opts);
  REQUIRE(front.size() == 4);
  for (std::size_t i = 0; i + 1 < front.size(); ++i)
    REQUIRE(front[i].comm <= front[i + 1].comm);
  for (const ParetoPoint& p : front) {
    REQUIRE(p.method == ParetoMethod::EpsilonConstraint);
    REQUIRE(p.grid_id >= 0);
    REQUIRE(p.grid_id < 4);  // the unreachable node is absent
    REQUIRE(p.status == SolveStatus::Converged);
    REQUIRE(transmit_power(p.solution) <= budget + 1e-8);
    // Each point honors the thresholds of its own grid node.
    const auto thr = grid.thresholds[static_cast<std::size_t>(p.grid_id)];
    REQUIRE(p.sense >= thr[0] - 1e-6);
    REQUIRE(p.wpt >= thr[1] - 1e-6);
    REQUIRE(p.dominated == dominated_in(p, front));
  }
  // Survivors of the dominance filter never dominate each other.
  std::vector<ParetoPoint> kept;
  for (const ParetoPoint& p : front)
    if (!p.dominated) kept.push_back(p);
  REQUIRE_FALSE(kept.empty());
  for (const ParetoPoint& p : kept) REQUIRE_FALSE(dominated_in(p, kept));

  ParetoGrid single;
  single.thresholds = {{0.0, 0.0}};
  REQUIRE(trace_front(ParetoMethod::EpsilonConstraint, single, budget, ch,
                      proto, target, opts)
              .size() == 1);

  ParetoGrid empty;
  REQUIRE_THROWS_AS(trace_front(ParetoMethod::EpsilonConstraint, empty,
                                budget, ch, proto, target, opts),
                    std::invalid_argument);
}

TEST_CASE("weighted front joins the non-dominated set of the union") {
  const ChannelSet ch = build_scenario_channels(small_scenario());
  const ProtocolConfig proto = light_protocol();
  const TargetModel target = make_target_model(small_scenario());
  ParetoOptions opts;
  const double budget = test_budget();

  ParetoGrid eg;
  eg.objective = ParetoMetric::Comm;
  eg.thresholds = {{0.0, 0.0}, {0.5, 0.0}, {1.5, 0.0}, {0.0, 3e-6}};
  const auto ef = trace_front(ParetoMethod::EpsilonConstraint, eg, budget, ch,
                              proto, target, opts);

  ParetoGrid wg;
  wg.weights = {{1, 1, 1}, {4, 1, 1}, {1, 4, 1}, {1, 1, 4},
                {8, 1, 1}, {1, 8, 1}, {1, 1, 8}};
  const auto wf = trace_front(ParetoMethod::WeightedSum, wg, budget, ch,
                              proto, target, opts);
  REQUIRE_FALSE(ef.empty());
  REQUIRE_FALSE(wf.empty());

  std::vector<ParetoPoint> uni = ef;
  uni.insert(uni.end(), wf.begin(), wf.end());
  for (const ParetoPoint& p : wf) {
    if (p.dominated) continue;  // filtered out of the weighted front
    REQUIRE_FALSE(dominated_in(p, uni));
  }
  for (const ParetoPoint& p : wf) {
    REQUIRE(p.status == SolveStatus::Converged);
    REQUIRE(transmit_power(p.solution) <= budget + 1e-8);
  }
}

TEST_CASE("front csv uses the pinned header and milliwatt column") {
  std::vector<ParetoPoint> pts(2);
  pts[0].method = ParetoMethod::EpsilonConstraint;
  pts[0].grid_id = 3;
  pts[0].comm = 1.25;
  pts[0].sense = 0.5;
  pts[0].wpt = 2.5e-6;
  pts[0].dominated = false;
  pts[0].status = SolveStatus::Converged;
  pts[1].method = ParetoMethod::WeightedSum;
  pts[1].grid_id = 0;
  pts[1].comm = 0.125;
  pts[1].sense = 1.0;
  pts[1].wpt = 1.5e-3;
  pts[1].dominated = true;
  pts[1].status = SolveStatus::IterationCap;

  const std::string path = "pareto_front_test.csv";
  write_front_csv(pts, path);
  std::ifstream in(path, std::ios::binary);
  std::stringstream buf;
  buf << in.rdbuf();
  REQUIRE(buf.str() ==
          "method,grid_id,comm_bpshz,sense_bpshz,wpt_mw,dominated,status\n"
          "epsilon,3,1.250000,0.500000,0.002500,0,converged\n"
          "weighted,0,0.125000,1.000000,1.500000,1,iteration_cap\n");

  write_front_csv({}, path);
  std::ifstream in2(path, std::ios::binary);
  std::stringstream buf2;
  buf2 << in2.rdbuf();
  REQUIRE(buf2.str() ==
          "method,grid_id,comm_bpshz,sense_bpshz,wpt_mw,dominated,status\n");
  std::remove(path.c_str());

  REQUIRE_THROWS_AS(write_front_csv(pts, "no/such/dir/front.csv"),
                    std::runtime_error);
}

TEST_CASE("pareto option validation rejects nonsense") {
  const ChannelSet ch = build_scenario_channels(small_scenario());
  const ProtocolConfig proto = light_protocol();
  const TargetModel target = make_target_model(small_scenario());
  ParetoOptions opts;

  REQUIRE_THROWS_AS(solve_constrained(ParetoMetric::Comm, {-0.1, 0.0},
                                      test_budget(), ch, proto, target, opts),
                    std::invalid_argument);
  REQUIRE_THROWS_AS(solve_constrained(ParetoMetric::Comm, {0.0, 0.0}, 0.0, ch,
                                      proto, target, opts),
                    std::invalid_argument);
  ParetoOptions bad = opts;
  bad.level_tol = 0.0;
  REQUIRE_THROWS_AS(solve_constrained(ParetoMetric::Comm, {0.0, 0.0},
                                      test_budget(), ch, proto, target, bad),
                    std::invalid_argument);
  bad = opts;
  bad.promote_rounds = -1;
  REQUIRE_THROWS_AS(solve_constrained(ParetoMetric::Comm, {0.0, 0.0},
                                      test_budget(), ch, proto, target, bad),
                    std::invalid_argument);
}
