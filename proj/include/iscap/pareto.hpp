#ifndef ISCAP_PARETO_HPP
#define ISCAP_PARETO_HPP

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "iscap/channel.hpp"
#include "iscap/common.hpp"
#include "iscap/metrics.hpp"
#include "iscap/optimizer.hpp"
#include "iscap/protocol.hpp"
#include "iscap/socp.hpp"

namespace iscap {

// Metric triple traded against each other, in canonical order.
enum class ParetoMetric { Comm = 0, Sense = 1, Wpt = 2 };

inline const char* to_string(ParetoMetric m) {
  switch (m) {
    case ParetoMetric::Comm: return "comm";
    case ParetoMetric::Sense: return "sense";
    case ParetoMetric::Wpt: return "wpt";
  }
  return "?";
}

inline ParetoMetric pareto_metric_from_string(const std::string& s) {
  if (s == "comm") return ParetoMetric::Comm;
  if (s == "sense") return ParetoMetric::Sense;
  if (s == "wpt") return ParetoMetric::Wpt;
  throw std::invalid_argument("unknown metric: " + s);
}

enum class ParetoMethod { EpsilonConstraint, WeightedSum, Lexicographic };

inline const char* to_string(ParetoMethod m) {
  switch (m) {
    case ParetoMethod::EpsilonConstraint: return "epsilon";
    case ParetoMethod::WeightedSum: return "weighted";
    case ParetoMethod::Lexicographic: return "lexicographic";
  }
  return "?";
}

inline ParetoMethod pareto_method_from_string(const std::string& s) {
  if (s == "epsilon") return ParetoMethod::EpsilonConstraint;
  if (s == "weighted") return ParetoMethod::WeightedSum;
  if (s == "lexicographic") return ParetoMethod::Lexicographic;
  throw std::invalid_argument("unknown pareto method: " + s);
}

// One traced design and its metric coordinates.
struct ParetoPoint {
  double comm = 0.0;   // worst per-IR rate, bps/Hz
  double sense = 0.0;  // bps/Hz
  double wpt = 0.0;    // total ER harvest, watts
  BeamformingSolution solution;
  bool dominated = false;
  SolveStatus status = SolveStatus::Infeasible;
  ParetoMethod method = ParetoMethod::EpsilonConstraint;
  int grid_id = -1;

  double metric(ParetoMetric m) const {
    switch (m) {
      case ParetoMetric::Comm: return comm;
      case ParetoMetric::Sense: return sense;
      case ParetoMetric::Wpt: return wpt;
    }
    return 0.0;
  }
};

struct ParetoOptions {
  double level_tol = 1e-3;  // bisection tolerance for rate metrics, bps/Hz
  int bisect_iters = 30;
  int promote_rounds = 3;  // polish-and-rescale passes after bisection
  SolveOptions solver;

  void validate() const {
    check_positive(level_tol, "level_tol");
    check_positive(bisect_iters, "bisect_iters");
    if (promote_rounds < 0)
      throw std::invalid_argument("promote_rounds must be non-negative");
    solver.validate();
  }
};

inline double default_pareto_budget_w() { return dbm_to_watt(50.0); }

// Metric triple of a design in canonical order (comm, sense, wpt).
inline std::array<double, 3> pareto_metrics(const BeamformingSolution& sol,
                                            const ChannelSet& ch,
                                            const ProtocolConfig& proto,
                                            const TargetModel& target) {
  const ReflectionProfile prof = reflection_profile(proto, sol.ris_phases);
  const int n_irs = static_cast<int>(ch.direct_ir.size());
  double comm = n_irs > 0 ? std::numeric_limits<double>::infinity() : 0.0;
  for (int k = 0; k < n_irs; ++k)
    comm = std::min(comm, comm_rate(k, sol, ch, prof));
  const double sense = sensing_rate(sol, ch, prof, target);
  const double wpt = harvested_power_ers(sol, ch, prof, proto.eta);
  return {comm, sense, wpt};
}

namespace pareto_detail {

// The two non-objective metrics, in canonical order.
inline std::array<ParetoMetric, 2> others_of(ParetoMetric objective) {
  switch (objective) {
    case ParetoMetric::Comm:
      return {ParetoMetric::Sense, ParetoMetric::Wpt};
    case ParetoMetric::Sense:
      return {ParetoMetric::Comm, ParetoMetric::Wpt};
    case ParetoMetric::Wpt:
      return {ParetoMetric::Comm, ParetoMetric::Sense};
  }
  throw std::invalid_argument("unknown metric");
}

// Canonical floor triple: thresholds fill the non-objective slots.
inline std::array<double, 3> floor_triple(ParetoMetric objective,
                                          const std::array<double, 2>& thr,
                                          double level) {
  std::array<double, 3> f{0.0, 0.0, 0.0};
  const auto oth = others_of(objective);
  f[static_cast<int>(oth[0])] = thr[0];
  f[static_cast<int>(oth[1])] = thr[1];
  f[static_cast<int>(objective)] = level;
  return f;
}

inline QosRequirements floors_to_qos(const std::array<double, 3>& f) {
  QosRequirements q;
  q.r_com_min = f[0];
  q.r_sense_min = f[1];
  q.e_min_total = f[2];
  return q;
}

// The initializer overshoots its scale bisection by one part in 1e-6,
// so designs are searched slightly inside the budget and every emitted
// point obeys the budget with margin.
inline double guarded_cap(double budget) { return budget * (1.0 - 3e-6); }

// Raises the transmit scale to the power target.  Every metric and
// every feasibility margin is nondecreasing in a common scale-up, so
// this converts unused budget into performance for free.
inline BeamformingSolution scale_to_power(const BeamformingSolution& sol,
                                          double target_w) {
  BeamformingSolution s = sol;
  const double p = transmit_power(sol);
  if (p > 0.0 && target_w > p) s.tx_beams *= std::sqrt(target_w / p);
  s.tx_power_w = transmit_power(s);
  return s;
}

// Bisection tolerance in the objective's natural unit: rates use the
// configured tolerance, harvested watts a proportionally finer one.
inline double objective_tol(ParetoMetric objective, const ParetoOptions& o) {
  return objective == ParetoMetric::Wpt ? o.level_tol * 1e-3 : o.level_tol;
}

// Feasibility probe for a floor triple inside the budget: the aligned
// initializer either exhibits a design or the level is treated as out
// of reach.  Fixing the candidate pool (same seed) makes the predicate
// monotone in every floor, so bisection applies.
struct LevelProbe {
  const ChannelSet& ch;
  const ProtocolConfig& proto;
  const TargetModel& target;
  SolveOptions solver;  // power_cap_w preset to the guarded budget

  SolveReport operator()(const std::array<double, 3>& floors) const {
    return init_solution(ch, proto, floors_to_qos(floors), target, solver);
  }
};

struct LevelSearch {
  bool feasible = false;
  double level = 0.0;            // largest probe-certified objective level
  BeamformingSolution witness;   // probe design at that level
};

// Doubling bracket plus bisection on the probe predicate.
inline LevelSearch search_level(ParetoMetric objective,
                                const std::array<double, 2>& thresholds,
                                double budget, const ChannelSet& ch,
                                const ProtocolConfig& proto,
                                const TargetModel& target,
                                const ParetoOptions& opts) {
  LevelSearch out;
  const double tol = objective_tol(objective, opts);
  SolveOptions solver = opts.solver;
  solver.power_cap_w = guarded_cap(budget);
  const LevelProbe probe{ch, proto, target, solver};

  SolveReport rep = probe(floor_triple(objective, thresholds, 0.0));
  if (rep.status != SolveStatus::Converged) return out;
  out.feasible = true;
  out.level = 0.0;
  out.witness = rep.solution;

  double lo = 0.0, hi = tol;
  for (int d = 0; d < 60; ++d) {
    rep = probe(floor_triple(objective, thresholds, hi));
    if (rep.status != SolveStatus::Converged) break;
    lo = hi;
    out.level = lo;
    out.witness = rep.solution;
    hi *= 2.0;
  }
  for (int it = 0; it < opts.bisect_iters && hi - lo > tol; ++it) {
    const double mid = 0.5 * (lo + hi);
    rep = probe(floor_triple(objective, thresholds, mid));
    if (rep.status == SolveStatus::Converged) {
      lo = mid;
      out.level = lo;
      out.witness = rep.solution;
    } else {
      hi = mid;
    }
  }
  return out;
}

}  // namespace pareto_detail

// Maximizes one metric subject to floors on the other two (canonical
// order), a transmit-power budget and surface self-powering.  Bisection
// on the objective level locates the initializer's reach; a power-min
// polish followed by rescaling to the budget then promotes the level.
// A caller-supplied witness (known feasible for the thresholds at the
// budget) guarantees feasibility even when the floors are beyond the
// initializer, which the lexicographic stages rely on.
inline ParetoPoint solve_constrained(ParetoMetric objective,
                                     const std::array<double, 2>& thresholds,
                                     double power_budget, const ChannelSet& ch,
                                     const ProtocolConfig& proto,
                                     const TargetModel& target,
                                     const ParetoOptions& opts,
                                     const BeamformingSolution* witness =
                                         nullptr) {
  using namespace pareto_detail;
  proto.validate();
  opts.validate();
  check_positive(power_budget, "power_budget");
  check_non_negative(thresholds[0], "threshold");
  check_non_negative(thresholds[1], "threshold");

  ParetoPoint pt;
  const double cap = guarded_cap(power_budget);
  const LevelSearch ls =
      search_level(objective, thresholds, power_budget, ch, proto, target,
                   opts);

  const QosRequirements floors_qos =
      floors_to_qos(floor_triple(objective, thresholds, 0.0));
  double best_obj = -std::numeric_limits<double>::infinity();
  BeamformingSolution best;
  bool have = false;
  auto consider = [&](const BeamformingSolution& cand) {
    const BeamformingSolution s = scale_to_power(cand, cap);
    if (transmit_power(s) > power_budget + 1e-8) return;
    if (check_feasibility(s, ch, proto, floors_qos, target).min_slack() <
        -1e-6)
      return;
    const double obj =
        pareto_metrics(s, ch, proto, target)[static_cast<int>(objective)];
    if (obj > best_obj) {
      best_obj = obj;
      best = s;
      have = true;
    }
  };
  if (ls.feasible) consider(ls.witness);
  if (witness != nullptr) consider(*witness);
  if (!have) return pt;  // thresholds out of reach at this budget

  // Promotion: minimize power at the current level, rescale to the
  // budget, and raise the floor to whatever the rescale achieved.  The
  // loop stops as soon as the inner solve cannot seed at the floor.
  double level = ls.feasible ? ls.level : best_obj;
  for (int r = 0; r < opts.promote_rounds; ++r) {
    SolveOptions solver = opts.solver;
    solver.power_cap_w = cap;
    const SolveReport rep =
        ao_solve(ch, proto,
                 floors_to_qos(floor_triple(objective, thresholds, level)),
                 target, solver);
    if (rep.status == SolveStatus::Infeasible) break;
    const double before = best_obj;
    consider(rep.solution);
    if (!(best_obj > before + 1e-12)) break;
    level = best_obj;
  }

  pt.status = SolveStatus::Converged;
  pt.solution = best;
  const auto m = pareto_metrics(best, ch, proto, target);
  pt.comm = m[0];
  pt.sense = m[1];
  pt.wpt = m[2];
  return pt;
}

// Sequential maximization in priority order; each later stage keeps the
// earlier optima within the given slack fractions.  Prior stages hand
// their solutions down as feasibility witnesses, so later stages never
// propagate infeasibility.
inline ParetoPoint solve_lexicographic(
    const std::array<ParetoMetric, 3>& priority,
    const std::array<double, 2>& slack_fractions, double power_budget,
    const ChannelSet& ch, const ProtocolConfig& proto,
    const TargetModel& target, const ParetoOptions& opts) {
  using namespace pareto_detail;
  {
    std::array<int, 3> seen{0, 0, 0};
    for (ParetoMetric m : priority) ++seen[static_cast<int>(m)];
    if (seen != std::array<int, 3>{1, 1, 1})
      throw std::invalid_argument(
          "priority must be a permutation of the three metrics");
  }
  for (double s : slack_fractions)
    if (!(s >= 0.0 && s <= 1.0))
      throw std::invalid_argument("slack fractions must lie in [0, 1]");

  auto thr_pair = [](ParetoMetric obj, const std::array<double, 3>& floors) {
    const auto oth = others_of(obj);
    return std::array<double, 2>{floors[static_cast<int>(oth[0])],
                                 floors[static_cast<int>(oth[1])]};
  };
  std::array<double, 3> floors{0.0, 0.0, 0.0};
  auto witness_or_null = [&](const ParetoPoint& prior) {
    const bool bound = floors[0] > 0.0 || floors[1] > 0.0 || floors[2] > 0.0;
    return bound ? &prior.solution : nullptr;
  };

  ParetoPoint p1 = solve_constrained(priority[0], thr_pair(priority[0], floors),
                                     power_budget, ch, proto, target, opts);
  p1.method = ParetoMethod::Lexicographic;
  if (p1.status == SolveStatus::Infeasible) return p1;
  floors[static_cast<int>(priority[0])] =
      (1.0 - slack_fractions[0]) * p1.metric(priority[0]);

  const ParetoPoint p2 = solve_constrained(
      priority[1], thr_pair(priority[1], floors), power_budget, ch, proto,
      target, opts, witness_or_null(p1));
  if (p2.status == SolveStatus::Infeasible)
    throw std::logic_error("lexicographic stage 2 lost its witness");
  floors[static_cast<int>(priority[1])] =
      (1.0 - slack_fractions[1]) * p2.metric(priority[1]);

  ParetoPoint p3 = solve_constrained(priority[2], thr_pair(priority[2], floors),
                                     power_budget, ch, proto, target, opts,
                                     witness_or_null(p2));
  if (p3.status == SolveStatus::Infeasible)
    throw std::logic_error("lexicographic stage 3 lost its witness");
  p3.method = ParetoMethod::Lexicographic;
  return p3;
}

// Maximizes a weighted sum of normalized metrics under the budget and
// self-powering constraints.  A single positive weight delegates to the
// constrained solve (the problems coincide); otherwise an ascent over
// convexified steps runs from the best of the supplied starts, with a
// true-objective acceptance gate mirroring the power-min solver.
inline ParetoPoint solve_weighted_sum(
    const std::array<double, 3>& weights,
    const std::array<double, 3>& normalizers, double power_budget,
    const ChannelSet& ch, const ProtocolConfig& proto,
    const TargetModel& target, const ParetoOptions& opts,
    const std::vector<BeamformingSolution>& starts = {}) {
  using namespace pareto_detail;
  proto.validate();
  opts.validate();
  check_positive(power_budget, "power_budget");
  double wsum = 0.0;
  int positive = 0;
  for (double w : weights) {
    check_non_negative(w, "weight");
    wsum += w;
    if (w > 0.0) ++positive;
  }
  if (positive == 0)
    throw std::invalid_argument("weights must not all be zero");
  for (double n : normalizers) check_positive(n, "normalizer");

  if (positive == 1) {
    const int which =
        weights[0] > 0.0 ? 0 : (weights[1] > 0.0 ? 1 : 2);
    ParetoPoint pt =
        solve_constrained(static_cast<ParetoMetric>(which), {0.0, 0.0},
                          power_budget, ch, proto, target, opts);
    pt.method = ParetoMethod::WeightedSum;
    return pt;
  }

  // Weight normalization keeps the ascent invariant to a common scale.
  std::array<double, 3> wn{};
  for (int i = 0; i < 3; ++i) wn[i] = weights[i] / (wsum * normalizers[i]);

  ParetoPoint pt;
  pt.method = ParetoMethod::WeightedSum;
  const SolveOptions& so = opts.solver;
  const double cap = guarded_cap(power_budget);
  const QosRequirements zero_qos = floors_to_qos({0.0, 0.0, 0.0});
  const int n_irs = static_cast<int>(ch.direct_ir.size());
  const double ln2 = std::log(2.0);

  auto score = [&](const BeamformingSolution& s) {
    const auto m = pareto_metrics(s, ch, proto, target);
    return wn[0] * m[0] + wn[1] * m[1] + wn[2] * m[2];
  };
  auto feasible = [&](const BeamformingSolution& s) {
    return transmit_power(s) <= power_budget + 1e-8 &&
           check_feasibility(s, ch, proto, zero_qos, target).min_slack() >=
               -1e-6;
  };

  // Start from the best feasible budget-scaled candidate.
  BeamformingSolution cur;
  double f_cur = -std::numeric_limits<double>::infinity();
  auto consider_start = [&](const BeamformingSolution& s) {
    const BeamformingSolution z = scale_to_power(s, cap);
    if (!feasible(z)) return;
    const double f = score(z);
    if (f > f_cur) {
      f_cur = f;
      cur = z;
    }
  };
  for (const auto& s : starts) consider_start(s);
  {
    SolveOptions init_opts = so;
    init_opts.power_cap_w = cap;
    const SolveReport rep =
        init_solution(ch, proto, zero_qos, target, init_opts);
    if (rep.status == SolveStatus::Converged) consider_start(rep.solution);
  }
  if (!std::isfinite(f_cur)) return pt;  // budget cannot self-power

  const double req = power_requirement(proto);
  const double denom = proto.variant == ProtocolVariant::ES
                           ? proto.eta
                           : proto.eta * (1.0 - proto.rho);
  if (req > 0.0 && denom <= 1e-15) return pt;

  double trust_w = std::max(1.0, so.trust_w_scale * std::sqrt(cap));
  double trust_theta = std::max(
      0.5, so.trust_theta_scale * std::sqrt((double)ch.bs_ris.rows()));
  const double tw0 = trust_w, tt0 = trust_theta;

  int flat_rounds = 0;
  bool capped = false;
  for (int ao = 0; ao < so.max_ao_iters; ++ao) {
    cur.rx_beam = update_receive_beamformer(ch);
    const ReflectionProfile prof = reflection_profile(proto, cur.ris_phases);
    const BeamformingSolution ref = opt_detail::rotate_reference(cur, ch, prof);
    const opt_detail::Layout lay = opt_detail::make_layout(ch, proto, false);
    const double ts = prof.time_share;

    // Ascent direction: first-order gains of the weighted objective in
    // the signal, echo and harvest quadratics, each replaced by its
    // affine lower bound around the reference.
    Eigen::VectorXd gain = Eigen::VectorXd::Zero(lay.total);
    if (wn[0] > 0.0 && n_irs > 0) {
      // Subgradient of the worst-IR rate: boost the weakest receiver.
      int weakest = 0;
      double worst = std::numeric_limits<double>::infinity();
      std::vector<Eigen::VectorXcd> heff(n_irs);
      for (int k = 0; k < n_irs; ++k) {
        heff[k] = effective_channel(ch.direct_ir[k], ch.ris_ir[k], prof,
                                    ch.bs_ris);
        const double r = comm_rate(k, ref, ch, prof);
        if (r < worst) {
          worst = r;
          weakest = k;
        }
      }
      double sig = 0.0, interf = 0.0;
      for (int j = 0; j < n_irs; ++j) {
        const double p = std::norm(heff[weakest].dot(ref.tx_beams.col(j)));
        if (j == weakest) sig = p;
        else interf += p;
      }
      const double alpha =
          wn[0] * ts / (ln2 * (sig + interf + ch.noise_power));
      opt_detail::ScaRow row(lay.total);
      row.add_term(opt_detail::receive_affine(lay, ch, prof, ref,
                                              ch.direct_ir[weakest],
                                              ch.ris_ir[weakest], weakest),
                   heff[weakest].dot(ref.tx_beams.col(weakest)));
      gain += alpha * row.acc;
    }
    if (wn[1] > 0.0) {
      const double un = ref.rx_beam.norm();
      const double combine =
          un > 0.0 ? std::norm(ref.rx_beam.dot(ch.target_sensor)) / (un * un)
                   : 0.0;
      const double beta = target.two_way_gain * combine / ch.noise_power;
      double echo_ref = 0.0;
      opt_detail::ScaRow row(lay.total);
      for (int j = 0; j < n_irs; ++j) {
        const cxd amp = sensing_amplitude(ch, prof, ref.tx_beams.col(j));
        echo_ref += std::norm(amp);
        row.add_term(opt_detail::echo_affine(lay, ch, prof, ref, j), amp);
      }
      const double alpha = wn[1] * ts * beta / (ln2 * (1.0 + beta * echo_ref));
      gain += alpha * row.acc;
    }
    if (wn[2] > 0.0) {
      opt_detail::ScaRow row(lay.total);
      for (std::size_t m = 0; m < ch.direct_er.size(); ++m) {
        const Eigen::VectorXcd geff = effective_channel(
            ch.direct_er[m], ch.ris_er[m], prof, ch.bs_ris);
        for (int j = 0; j < n_irs; ++j)
          row.add_term(
              opt_detail::receive_affine(lay, ch, prof, ref, ch.direct_er[m],
                                         ch.ris_er[m], j),
              geff.dot(ref.tx_beams.col(j)));
      }
      gain += wn[2] * ts * proto.eta * row.acc;
    }

    bool accepted = false;
    for (int sca = 0; sca < so.max_sca_iters; ++sca) {
      SocpProblem p;
      p.set_num_vars(lay.total);
      p.objective = -gain;
      {
        ConeConstraint budget_cone;  // ||vec(W)|| <= sqrt(cap)
        for (int v = 0; v < lay.w_vars; ++v) {
          SparseRow r;
          r.add(v, 1.0);
          budget_cone.rows.push_back(std::move(r));
        }
        budget_cone.b = Eigen::VectorXd::Zero(lay.w_vars);
        budget_cone.d = std::sqrt(cap);
        p.cones.push_back(std::move(budget_cone));
      }
      if (req > 0.0) {
        const opt_detail::ScaRow row =
            opt_detail::self_power_row(lay, ch, proto, ref);
        ConeConstraint lin;
        lin.c = row.row();
        lin.d = row.c - req / denom;
        lin.b.resize(0);
        p.cones.push_back(std::move(lin));
      }
      opt_detail::add_modulus_cones(p, lay, opt_detail::modulus_cap(proto));
      opt_detail::add_trust_cones(p, lay, ref, prof, trust_w, trust_theta);

      const SocpSolution sol = solve_socp(p, so.socp_tol, so.socp_max_iters);
      BeamformingSolution next;
      bool found = false, full_step = false;
      if (sol.status == SocpStatus::Optimal) {
        const BeamformingSolution cand = extract_candidate(sol.x, lay, ref);
        auto admissible = [&](const BeamformingSolution& c) {
          const BeamformingSolution z = scale_to_power(c, cap);
          if (!feasible(z)) return false;
          if (!(score(z) > f_cur + 1e-12)) return false;
          next = z;
          return true;
        };
        if (admissible(cand)) {
          found = full_step = true;
        } else {
          for (double frac : {0.5, 0.25, 0.1}) {
            BeamformingSolution b = ref;
            b.tx_beams = ref.tx_beams + frac * (cand.tx_beams - ref.tx_beams);
            for (int i : lay.active) {
              const double d = std::remainder(
                  cand.ris_phases[i] - ref.ris_phases[i], 2.0 * pi);
              b.ris_phases[i] = ref.ris_phases[i] + frac * d;
            }
            b.tx_power_w = transmit_power(b);
            if (admissible(b)) {
              found = true;
              break;
            }
          }
        }
      }
      if (found) {
        accepted = true;
        const double f_prev = f_cur;
        f_cur = score(next);
        cur = next;
        if (full_step) {
          trust_w = std::min(trust_w * 1.6, 4.0 * tw0);
          trust_theta = std::min(trust_theta * 1.6, 4.0 * tt0);
        }
        if (f_cur - f_prev <
            so.convergence_tol * std::max(1.0, std::abs(f_prev)))
          ++flat_rounds;
        else
          flat_rounds = 0;
        break;
      }
      trust_w *= so.trust_shrink;
      trust_theta *= so.trust_shrink;
      if (trust_w < so.trust_min * tw0 || trust_theta < so.trust_min * tt0) {
        capped = true;
        break;
      }
    }
    if (!accepted || flat_rounds >= 3 || capped) break;
  }

  pt.status = SolveStatus::Converged;
  pt.solution = cur;
  const auto m = pareto_metrics(cur, ch, proto, target);
  pt.comm = m[0];
  pt.sense = m[1];
  pt.wpt = m[2];
  return pt;
}

// Weak Pareto dominance flags over the set: a point is dominated when
// some other point is at least as good in every coordinate and strictly
// better in one.
inline void mark_dominated(std::vector<ParetoPoint>& pts) {
  for (auto& p : pts) p.dominated = false;
  for (std::size_t i = 0; i < pts.size(); ++i)
    for (std::size_t j = 0; j < pts.size(); ++j) {
      if (i == j) continue;
      const ParetoPoint& p = pts[i];
      const ParetoPoint& q = pts[j];
      const bool geq =
          q.comm >= p.comm && q.sense >= p.sense && q.wpt >= p.wpt;
      const bool strict =
          q.comm > p.comm || q.sense > p.sense || q.wpt > p.wpt;
      if (geq && strict) {
        pts[i].dominated = true;
        break;
      }
    }
}

// Grid of trade-off parameters; the method picks which field is read.
struct ParetoGrid {
  ParetoMetric objective = ParetoMetric::Comm;          // epsilon-constraint
  std::vector<std::array<double, 2>> thresholds;        // epsilon nodes
  std::vector<std::array<double, 3>> weights;           // weighted nodes
  std::array<ParetoMetric, 3> priority = {
      ParetoMetric::Comm, ParetoMetric::Sense, ParetoMetric::Wpt};
  std::vector<std::array<double, 2>> slack_fractions;   // lexicographic nodes

  std::size_t size(ParetoMethod m) const {
    switch (m) {
      case ParetoMethod::EpsilonConstraint: return thresholds.size();
      case ParetoMethod::WeightedSum: return weights.size();
      case ParetoMethod::Lexicographic: return slack_fractions.size();
    }
    return 0;
  }
};

// One solve per grid node; infeasible nodes are dropped, dominance is
// flagged over the returned set and the front is sorted by the comm
// coordinate.  The weighted method first computes per-metric optima to
// normalize the weights and to warm-start the ascent.
inline std::vector<ParetoPoint> trace_front(
    ParetoMethod method, const ParetoGrid& grid, double power_budget,
    const ChannelSet& ch, const ProtocolConfig& proto,
    const TargetModel& target, const ParetoOptions& opts) {
  if (grid.size(method) == 0)
    throw std::invalid_argument("pareto grid must be nonempty");

  std::array<double, 3> normalizers{1.0, 1.0, 1.0};
  std::vector<BeamformingSolution> starts;
  if (method == ParetoMethod::WeightedSum) {
    for (int i = 0; i < 3; ++i) {
      const ParetoPoint p =
          solve_constrained(static_cast<ParetoMetric>(i), {0.0, 0.0},
                            power_budget, ch, proto, target, opts);
      if (p.status == SolveStatus::Infeasible) continue;
      const double opt = p.metric(static_cast<ParetoMetric>(i));
      if (opt > 1e-12) normalizers[i] = opt;
      starts.push_back(p.solution);
    }
  }

  std::vector<ParetoPoint> front;
  for (std::size_t g = 0; g < grid.size(method); ++g) {
    ParetoPoint p;
    switch (method) {
      case ParetoMethod::EpsilonConstraint:
        p = solve_constrained(grid.objective, grid.thresholds[g],
                              power_budget, ch, proto, target, opts);
        break;
      case ParetoMethod::WeightedSum:
        p = solve_weighted_sum(grid.weights[g], normalizers, power_budget,
                               ch, proto, target, opts, starts);
        break;
      case ParetoMethod::Lexicographic:
        p = solve_lexicographic(grid.priority, grid.slack_fractions[g],
                                power_budget, ch, proto, target, opts);
        break;
    }
    p.method = method;
    p.grid_id = static_cast<int>(g);
    if (p.status != SolveStatus::Infeasible) front.push_back(std::move(p));
  }
  mark_dominated(front);
  std::sort(front.begin(), front.end(),
            [](const ParetoPoint& a, const ParetoPoint& b) {
              if (a.comm != b.comm) return a.comm < b.comm;
              return a.grid_id < b.grid_id;
            });
  return front;
}

inline void write_front_csv(const std::vector<ParetoPoint>& front,
                            const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open " + path);
  out << "method,grid_id,comm_bpshz,sense_bpshz,wpt_mw,dominated,status\n";
  char line[192];
  for (const ParetoPoint& p : front) {
    std::snprintf(line, sizeof line, "%s,%d,%.6f,%.6f,%.6f,%d,%s\n",
                  to_string(p.method), p.grid_id, p.comm, p.sense,
                  p.wpt * 1e3, p.dominated ? 1 : 0, to_string(p.status));
    out << line;
  }
  if (!out) throw std::runtime_error("failed writing " + path);
}

}  // namespace iscap

#endif  // ISCAP_PARETO_HPP
