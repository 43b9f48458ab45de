#ifndef ISCAP_OPTIMIZER_HPP
#define ISCAP_OPTIMIZER_HPP

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "iscap/channel.hpp"
#include "iscap/common.hpp"
#include "iscap/metrics.hpp"
#include "iscap/protocol.hpp"
#include "iscap/rayleigh.hpp"
#include "iscap/socp.hpp"

namespace iscap {

struct SolveOptions {
  int max_ao_iters = 50;        // accepted joint steps
  int max_sca_iters = 10;       // consecutive rejected steps per round
  double convergence_tol = 1e-4;
  enum class InitStrategy { Aligned, Random };
  InitStrategy init_strategy = InitStrategy::Aligned;
  double penalty_weight = 0.0;  // reserved, unused by the baseline
  std::uint64_t seed = 0;

  // Solver plumbing with conservative defaults.
  double socp_tol = 1e-6;
  int socp_max_iters = 100;
  double power_cap_w = 1000.0;  // 60 dBm initialization/search cap
  double trust_shrink = 0.5;
  double trust_min = 1e-3;
  double trust_w_scale = 0.5;      // initial beam radius vs sqrt(power)
  double trust_theta_scale = 1.0;  // initial surface radius vs sqrt(n)

  void validate() const {
    check_positive(max_ao_iters, "max_ao_iters");
    check_positive(max_sca_iters, "max_sca_iters");
    check_positive(convergence_tol, "convergence_tol");
    check_non_negative(penalty_weight, "penalty_weight");
    check_positive(socp_tol, "socp_tol");
    check_positive(power_cap_w, "power_cap_w");
    if (!(trust_shrink > 0.0 && trust_shrink < 1.0))
      throw std::invalid_argument("trust_shrink must lie in (0, 1)");
    check_positive(trust_min, "trust_min");
    check_positive(trust_w_scale, "trust_w_scale");
    check_positive(trust_theta_scale, "trust_theta_scale");
  }
};

struct ConstraintSlacks {
  Eigen::VectorXd comm;  // rate_k - r_com_min, bps/Hz
  double sense = 0.0;    // sensing rate - r_sense_min, bps/Hz
  double er = 0.0;       // harvested - e_min_total, watts
  double ris = 0.0;      // surface harvest - requirement, watts

  double min_slack() const {
    double m = std::min({sense, er, ris});
    for (Eigen::Index i = 0; i < comm.size(); ++i) m = std::min(m, comm[i]);
    return m;
  }
};

enum class SolveStatus { Converged, IterationCap, Infeasible };

inline const char* to_string(SolveStatus s) {
  switch (s) {
    case SolveStatus::Converged: return "converged";
    case SolveStatus::IterationCap: return "iteration_cap";
    case SolveStatus::Infeasible: return "infeasible";
  }
  return "?";
}

struct SolveReport {
  BeamformingSolution solution;
  std::vector<double> objective_trace;  // accepted transmit powers, watts
  SolveStatus status = SolveStatus::Infeasible;
  ConstraintSlacks slacks;
  int ao_iters = 0;
  int socp_solves = 0;
  std::string note;
};

// True-metric slack evaluation used by the acceptance gate and by
// post-convergence verification.
inline ConstraintSlacks check_feasibility(const BeamformingSolution& sol,
                                          const ChannelSet& ch,
                                          const ProtocolConfig& proto,
                                          const QosRequirements& qos,
                                          const TargetModel& target) {
  qos.validate();
  const ReflectionProfile profile = reflection_profile(proto, sol.ris_phases);
  ConstraintSlacks s;
  const int k = static_cast<int>(ch.direct_ir.size());
  s.comm.resize(k);
  for (int i = 0; i < k; ++i)
    s.comm[i] = comm_rate(i, sol, ch, profile) - qos.r_com_min;
  s.sense = sensing_rate(sol, ch, profile, target) - qos.r_sense_min;
  s.er = harvested_power_ers(sol, ch, profile, proto.eta) - qos.e_min_total;
  const Eigen::VectorXd inc = ris_incident_powers(sol, ch);
  s.ris = ris_harvested_power(proto, profile, inc) - power_requirement(proto);
  return s;
}

// Closed-form receive beam: maximize |u^H a|^2 / u^H B u.  With white
// noise this is the matched filter a/||a||.
inline Eigen::VectorXcd update_receive_beamformer(const ChannelSet& ch) {
  return ch.target_sensor / ch.target_sensor.norm();
}

inline Eigen::VectorXcd update_receive_beamformer(
    const ChannelSet& ch, const Eigen::MatrixXcd& noise_cov) {
  const Eigen::MatrixXcd a =
      ch.target_sensor * ch.target_sensor.adjoint();
  return generalized_rayleigh_max(a, noise_cov).vector;
}

// First-order lower bound of x -> |a^H x|^2 around x_ref:
//   |a^H x|^2 >= 2 Re{x_ref^H a a^H x} - |a^H x_ref|^2  for all x,
// with equality at x = x_ref.
struct AffineLowerBound {
  Eigen::VectorXcd coeff;  // a (a^H x_ref)
  double offset = 0.0;     // -|a^H x_ref|^2

  double eval(const Eigen::VectorXcd& x) const {
    return 2.0 * std::real(coeff.dot(x)) + offset;
  }
};

inline AffineLowerBound sca_linearize_quadratic(const Eigen::VectorXcd& a,
                                                const Eigen::VectorXcd& x_ref) {
  if (a.size() != x_ref.size())
    throw std::invalid_argument("a and x_ref must have matching length");
  AffineLowerBound lb;
  const cxd inner = a.dot(x_ref);  // a^H x_ref
  lb.coeff = a * inner;
  lb.offset = -std::norm(inner);
  return lb;
}

namespace opt_detail {

// Complex-valued affine functional of the lifted real variables.
struct CAffine {
  SparseRow re, im;
  cxd c0;
};

// f += v * x where x is the complex variable at (re_idx, im_idx).
inline void add_cvar(CAffine& f, int re_idx, int im_idx, cxd v) {
  if (v == cxd(0.0, 0.0)) return;
  f.re.add(re_idx, v.real());
  f.re.add(im_idx, -v.imag());
  f.im.add(re_idx, v.imag());
  f.im.add(im_idx, v.real());
}

// f += v * conj(x).
inline void add_cvar_conj(CAffine& f, int re_idx, int im_idx, cxd v) {
  if (v == cxd(0.0, 0.0)) return;
  f.re.add(re_idx, v.real());
  f.re.add(im_idx, v.imag());
  f.im.add(re_idx, v.imag());
  f.im.add(im_idx, -v.real());
}

struct Layout {
  int n_tx = 0, n_irs = 0, n_active = 0;
  std::vector<int> active;  // surface elements carried as variables
  int w_vars = 0;           // 2 * n_tx * n_irs
  int t_index = 0;
  int total = 0;

  int wre(int t, int j) const { return 2 * (j * n_tx + t); }
  int wim(int t, int j) const { return wre(t, j) + 1; }
  int thre(int i) const { return w_vars + 2 * i; }
  int thim(int i) const { return thre(i) + 1; }
};

// Accumulates sum_terms [2 Re{conj(ref) f(x)} - |ref|^2] into a single
// inequality row L x + c >= rhs, merging duplicate indices.
struct ScaRow {
  Eigen::VectorXd acc;
  double c = 0.0;

  explicit ScaRow(int n) : acc(Eigen::VectorXd::Zero(n)) {}

  void add_term(const CAffine& f, cxd ref) {
    const double gr = ref.real(), gi = ref.imag();
    // 2 Re{conj(ref) f} = 2 gr Re f + 2 gi Im f
    for (std::size_t k = 0; k < f.re.idx.size(); ++k)
      acc[f.re.idx[k]] += 2.0 * gr * f.re.val[k];
    for (std::size_t k = 0; k < f.im.idx.size(); ++k)
      acc[f.im.idx[k]] += 2.0 * gi * f.im.val[k];
    c += 2.0 * (gr * f.c0.real() + gi * f.c0.imag()) - std::norm(ref);
  }

  SparseRow row() const { return SparseRow::from_dense(acc); }
};

// Variable layout over the active surface elements, with or without the
// trailing power-epigraph variable.
inline Layout make_layout(const ChannelSet& ch, const ProtocolConfig& proto,
                          bool with_epigraph) {
  Layout lay;
  lay.n_tx = static_cast<int>(ch.bs_ris.cols());
  lay.n_irs = static_cast<int>(ch.direct_ir.size());
  const int n_ris = static_cast<int>(ch.bs_ris.rows());
  double amp_cap = 1.0;
  if (proto.variant == ProtocolVariant::PS) amp_cap = std::sqrt(proto.rho);
  const int n_reflect = proto.n_reflect();
  for (int i = 0; i < n_ris; ++i) {
    const bool off = (proto.variant == ProtocolVariant::ES && i >= n_reflect) ||
                     amp_cap < 1e-12;
    if (!off) lay.active.push_back(i);
  }
  lay.n_active = static_cast<int>(lay.active.size());
  lay.w_vars = 2 * lay.n_tx * lay.n_irs;
  lay.t_index = lay.w_vars + 2 * lay.n_active;
  lay.total = with_epigraph ? lay.t_index + 1 : lay.t_index;
  return lay;
}

inline double modulus_cap(const ProtocolConfig& proto) {
  return proto.variant == ProtocolVariant::PS ? std::sqrt(proto.rho) : 1.0;
}

// Received amplitude of beam j at the receiver with the given direct and
// cascade channels, conjugate-affine in the surface coefficients:
//   amp = d^H w + sum_n conj(theta_n c_n) (conj(G) w)_n.
inline CAffine receive_affine(const Layout& lay, const ChannelSet& ch,
                              const ReflectionProfile& prof_ref,
                              const BeamformingSolution& ref,
                              const Eigen::VectorXcd& direct,
                              const Eigen::VectorXcd& cascade, int j) {
  CAffine f;
  const Eigen::VectorXcd heff =
      effective_channel(direct, cascade, prof_ref, ch.bs_ris);
  for (int t = 0; t < lay.n_tx; ++t)
    add_cvar(f, lay.wre(t, j), lay.wim(t, j), std::conj(heff[t]));
  const Eigen::VectorXcd gcw = ch.bs_ris.conjugate() * ref.tx_beams.col(j);
  cxd cascade_ref = 0.0;
  for (int i = 0; i < lay.n_active; ++i) {
    const int n = lay.active[i];
    const cxd q = std::conj(cascade[n]) * gcw[n];
    add_cvar_conj(f, lay.thre(i), lay.thim(i), q);
    cascade_ref += std::conj(prof_ref.coefficients[n]) * q;
  }
  f.c0 = -cascade_ref;
  return f;
}

// Sensing echo of beam j, linear in the surface coefficients.
inline CAffine echo_affine(const Layout& lay, const ChannelSet& ch,
                           const ReflectionProfile& prof_ref,
                           const BeamformingSolution& ref, int j) {
  CAffine f;
  const int n_ris = static_cast<int>(ch.bs_ris.rows());
  const Eigen::VectorXcd mod =
      ch.ris_target.conjugate().cwiseProduct(prof_ref.coefficients);
  for (int t = 0; t < lay.n_tx; ++t) {
    cxd v = 0.0;
    for (int n = 0; n < n_ris; ++n) v += mod[n] * ch.bs_ris(n, t);
    add_cvar(f, lay.wre(t, j), lay.wim(t, j), v);
  }
  const Eigen::VectorXcd gw = ch.bs_ris * ref.tx_beams.col(j);
  cxd at_ref = 0.0;
  for (int i = 0; i < lay.n_active; ++i) {
    const int n = lay.active[i];
    const cxd pn = std::conj(ch.ris_target[n]) * gw[n];
    add_cvar(f, lay.thre(i), lay.thim(i), pn);
    at_ref += prof_ref.coefficients[n] * pn;
  }
  f.c0 = -at_ref;
  return f;
}

// First-order lower bound of the surface's own harvestable power, over
// the harvesting elements (ES) or the whole aperture (TS/PS).
inline ScaRow self_power_row(const Layout& lay, const ChannelSet& ch,
                             const ProtocolConfig& proto,
                             const BeamformingSolution& ref) {
  const int n_ris = static_cast<int>(ch.bs_ris.rows());
  const bool es = proto.variant == ProtocolVariant::ES;
  const int n_reflect = proto.n_reflect();
  ScaRow row(lay.total);
  for (int n = 0; n < n_ris; ++n) {
    if (es && n < n_reflect) continue;  // only harvesting elements
    for (int j = 0; j < lay.n_irs; ++j) {
      CAffine f;
      for (int t = 0; t < lay.n_tx; ++t)
        add_cvar(f, lay.wre(t, j), lay.wim(t, j), ch.bs_ris(n, t));
      const cxd ref_amp = (ch.bs_ris.row(n) * ref.tx_beams.col(j))(0);
      row.add_term(f, ref_amp);
    }
  }
  return row;
}

inline void add_modulus_cones(SocpProblem& p, const Layout& lay,
                              double amp_cap) {
  for (int i = 0; i < lay.n_active; ++i) {
    ConeConstraint cone;
    SparseRow re, im;
    re.add(lay.thre(i), 1.0);
    im.add(lay.thim(i), 1.0);
    cone.rows.push_back(std::move(re));
    cone.rows.push_back(std::move(im));
    cone.b = Eigen::VectorXd::Zero(2);
    cone.d = amp_cap;
    p.cones.push_back(std::move(cone));
  }
}

inline void add_trust_cones(SocpProblem& p, const Layout& lay,
                            const BeamformingSolution& ref,
                            const ReflectionProfile& prof_ref, double trust_w,
                            double trust_theta) {
  {
    ConeConstraint tw;
    for (int j = 0; j < lay.n_irs; ++j)
      for (int t = 0; t < lay.n_tx; ++t) {
        SparseRow r1, r2;
        r1.add(lay.wre(t, j), 1.0);
        r2.add(lay.wim(t, j), 1.0);
        tw.rows.push_back(std::move(r1));
        tw.rows.push_back(std::move(r2));
      }
    Eigen::VectorXd c(lay.w_vars);
    for (int j = 0; j < lay.n_irs; ++j)
      for (int t = 0; t < lay.n_tx; ++t) {
        c[lay.wre(t, j)] = -ref.tx_beams(t, j).real();
        c[lay.wim(t, j)] = -ref.tx_beams(t, j).imag();
      }
    tw.b = c;
    tw.d = trust_w;
    p.cones.push_back(std::move(tw));
  }
  if (lay.n_active > 0) {
    check_positive(trust_theta, "trust_theta");
    ConeConstraint tt;
    Eigen::VectorXd c(2 * lay.n_active);
    for (int i = 0; i < lay.n_active; ++i) {
      SparseRow r1, r2;
      r1.add(lay.thre(i), 1.0);
      r2.add(lay.thim(i), 1.0);
      tt.rows.push_back(std::move(r1));
      tt.rows.push_back(std::move(r2));
      const cxd t0 = prof_ref.coefficients[lay.active[i]];
      c[2 * i] = -t0.real();
      c[2 * i + 1] = -t0.imag();
    }
    tt.b = c;
    tt.d = trust_theta;
    p.cones.push_back(std::move(tt));
  }
}

}  // namespace opt_detail

struct JointSocp {
  SocpProblem problem;
  opt_detail::Layout layout;
  bool structurally_infeasible = false;
  std::string note;
};

// Extracts a candidate design from the SOCP decision vector.  Phases of
// elements outside the active set (and of vanishing coefficients) are
// kept from the reference.
inline BeamformingSolution extract_candidate(const Eigen::VectorXd& x,
                                             const opt_detail::Layout& lay,
                                             const BeamformingSolution& ref) {
  BeamformingSolution s = ref;
  s.tx_beams.resize(lay.n_tx, lay.n_irs);
  for (int j = 0; j < lay.n_irs; ++j)
    for (int t = 0; t < lay.n_tx; ++t)
      s.tx_beams(t, j) = cxd(x[lay.wre(t, j)], x[lay.wim(t, j)]);
  for (int i = 0; i < lay.n_active; ++i) {
    const cxd th(x[lay.thre(i)], x[lay.thim(i)]);
    if (std::abs(th) > 1e-12) s.ris_phases[lay.active[i]] = std::arg(th);
  }
  s.tx_power_w = transmit_power(s);
  return s;
}

// Builds the convexified joint (transmit, surface) subproblem around a
// reference design: SINR constraints in rotated second-order-cone form,
// first-order lower bounds on the sensing, ER-harvest and self-power
// quadratics, per-element modulus caps, trust regions and the power
// epigraph.  The reference beams must be pre-rotated so each served
// amplitude is real and nonnegative.
inline JointSocp build_joint_socp(const BeamformingSolution& ref,
                                  const ChannelSet& ch,
                                  const ProtocolConfig& proto,
                                  const QosRequirements& qos,
                                  const TargetModel& target,
                                  double trust_w, double trust_theta,
                                  double power_cap_w) {
  using namespace opt_detail;
  proto.validate();
  qos.validate();
  check_positive(trust_w, "trust_w");
  check_positive(power_cap_w, "power_cap_w");

  const ReflectionProfile prof_ref = reflection_profile(proto, ref.ris_phases);
  const int n_tx = static_cast<int>(ch.bs_ris.cols());
  const int n_ris = static_cast<int>(ch.bs_ris.rows());
  const int n_irs = static_cast<int>(ch.direct_ir.size());
  if (ref.tx_beams.rows() != n_tx || ref.tx_beams.cols() != n_irs)
    throw std::invalid_argument("reference beams have mismatched shape");

  JointSocp js;
  // Elements whose modulus cap is positive become variables.
  js.layout = make_layout(ch, proto, true);
  const Layout& lay = js.layout;
  const double amp_cap = modulus_cap(proto);

  SocpProblem& p = js.problem;
  p.set_num_vars(lay.total);
  p.objective[lay.t_index] = 1.0;

  const double ts = prof_ref.time_share;
  auto threshold = [&](double rate) {
    if (rate <= 0.0) return 0.0;
    if (ts <= 0.0) return std::numeric_limits<double>::infinity();
    return std::exp2(rate / ts) - 1.0;
  };
  const double gamma_c = threshold(qos.r_com_min);
  const double gamma_s = threshold(qos.r_sense_min);
  if (std::isinf(gamma_c) || std::isinf(gamma_s)) {
    js.structurally_infeasible = true;
    js.note = "zero reflecting time share with a positive rate floor";
    return js;
  }

  // Adds L x + c >= 0 unless it is vacuous or impossible.
  auto add_linear = [&](SparseRow l, double c) {
    double big = 0.0;
    for (double v : l.val) big = std::max(big, std::abs(v));
    if (big < 1e-15) {
      if (c < -1e-12) {
        js.structurally_infeasible = true;
        js.note = "constant constraint violated";
      }
      return;
    }
    ConeConstraint lin;
    lin.c = std::move(l);
    lin.d = c;
    lin.b.resize(0);
    p.cones.push_back(lin);
  };

  // --- communication SINR cones ------------------------------------
  const double sigma = std::sqrt(ch.noise_power);
  const double root_gamma = std::sqrt(gamma_c);
  for (int k = 0; k < n_irs; ++k) {
    // Affine surrogates of every amplitude seen by IR k.
    std::vector<CAffine> amps(n_irs);
    std::vector<cxd> ref_amp(n_irs);
    const Eigen::VectorXcd heff = effective_channel(
        ch.direct_ir[k], ch.ris_ir[k], prof_ref, ch.bs_ris);
    for (int j = 0; j < n_irs; ++j) {
      amps[j] = receive_affine(lay, ch, prof_ref, ref, ch.direct_ir[k],
                               ch.ris_ir[k], j);
      ref_amp[j] = heff.dot(ref.tx_beams.col(j));
    }
    // Served amplitude pinned to the real axis.
    {
      SparseRow im = amps[k].im;
      const double rhs = -amps[k].c0.imag();
      double big = 0.0;
      for (double v : im.val) big = std::max(big, std::abs(v));
      if (big >= 1e-15) {
        LinearEquality eq;
        eq.a = std::move(im);
        eq.rhs = rhs;
        p.equalities.push_back(eq);
      } else if (std::abs(rhs) > 1e-12) {
        js.structurally_infeasible = true;
        js.note = "served amplitude cannot be rotated";
      }
    }
    if (gamma_c <= 0.0) continue;  // no cone needed for a zero floor
    ConeConstraint cone;
    cone.c = amps[k].re;
    cone.d = amps[k].c0.real();
    std::vector<double> consts;
    for (int j = 0; j < n_irs; ++j) {
      if (j == k) continue;
      SparseRow re = amps[j].re, im = amps[j].im;
      re.scale(root_gamma);
      im.scale(root_gamma);
      cone.rows.push_back(std::move(re));
      consts.push_back(root_gamma * amps[j].c0.real());
      cone.rows.push_back(std::move(im));
      consts.push_back(root_gamma * amps[j].c0.imag());
    }
    cone.rows.push_back(SparseRow{});  // noise floor entry
    consts.push_back(root_gamma * sigma);
    cone.b = Eigen::Map<Eigen::VectorXd>(consts.data(),
                                         static_cast<Eigen::Index>(consts.size()));
    p.cones.push_back(std::move(cone));
  }

  // --- sensing floor ------------------------------------------------
  if (qos.r_sense_min > 0.0) {
    const double un = ref.rx_beam.norm();
    if (!(un > 0.0)) throw std::invalid_argument("rx_beam must be nonzero");
    const double combine =
        std::norm(ref.rx_beam.dot(ch.target_sensor)) / (un * un);
    const double beta = target.two_way_gain * combine / ch.noise_power;
    if (beta <= 0.0) {
      js.structurally_infeasible = true;
      js.note = "sensing floor with zero round-trip gain";
    } else {
      opt_detail::ScaRow row(lay.total);
      for (int j = 0; j < n_irs; ++j) {
        const CAffine f = echo_affine(lay, ch, prof_ref, ref, j);
        const cxd ref_amp = sensing_amplitude(ch, prof_ref, ref.tx_beams.col(j));
        row.add_term(f, ref_amp);
      }
      add_linear(row.row(), row.c - gamma_s / beta);
    }
  }

  // --- total ER harvest ---------------------------------------------
  if (qos.e_min_total > 0.0) {
    opt_detail::ScaRow row(lay.total);
    for (std::size_t m = 0; m < ch.direct_er.size(); ++m) {
      const Eigen::VectorXcd geff = effective_channel(
          ch.direct_er[m], ch.ris_er[m], prof_ref, ch.bs_ris);
      for (int j = 0; j < n_irs; ++j) {
        const CAffine f = receive_affine(lay, ch, prof_ref, ref,
                                         ch.direct_er[m], ch.ris_er[m], j);
        row.add_term(f, geff.dot(ref.tx_beams.col(j)));
      }
    }
    add_linear(row.row(), row.c - qos.e_min_total / (ts * proto.eta));
  }

  // --- surface self-power (depends on beams only) --------------------
  {
    const double req = power_requirement(proto);
    const double denom = proto.variant == ProtocolVariant::ES
                             ? proto.eta
                             : proto.eta * (1.0 - proto.rho);
    if (req > 0.0 && denom <= 1e-15) {
      js.structurally_infeasible = true;
      js.note = "surface cannot harvest under a full reflecting share";
    } else if (req > 0.0) {
      const opt_detail::ScaRow row = self_power_row(lay, ch, proto, ref);
      add_linear(row.row(), row.c - req / denom);
    }
  }

  add_modulus_cones(p, lay, amp_cap);
  add_trust_cones(p, lay, ref, prof_ref, trust_w, trust_theta);

  // --- power epigraph and cap -----------------------------------------
  {
    ConeConstraint ep;  // ||(2 w, t - 1)|| <= t + 1  <=>  ||w||^2 <= t
    for (int v = 0; v < lay.w_vars; ++v) {
      SparseRow r;
      r.add(v, 2.0);
      ep.rows.push_back(std::move(r));
    }
    SparseRow rt;
    rt.add(lay.t_index, 1.0);
    ep.rows.push_back(std::move(rt));
    ep.b = Eigen::VectorXd::Zero(lay.w_vars + 1);
    ep.b[lay.w_vars] = -1.0;
    ep.c.add(lay.t_index, 1.0);
    ep.d = 1.0;
    p.cones.push_back(std::move(ep));
    SparseRow cap;
    cap.add(lay.t_index, -1.0);
    add_linear(std::move(cap), power_cap_w);
  }
  return js;
}

namespace opt_detail {

// Rotates each reference beam so its served amplitude is real and
// nonnegative; true metrics are invariant to these per-beam phases.
inline BeamformingSolution rotate_reference(const BeamformingSolution& ref,
                                            const ChannelSet& ch,
                                            const ReflectionProfile& prof) {
  BeamformingSolution r = ref;
  const int n_irs = static_cast<int>(ch.direct_ir.size());
  for (int k = 0; k < n_irs; ++k) {
    const Eigen::VectorXcd heff =
        effective_channel(ch.direct_ir[k], ch.ris_ir[k], prof, ch.bs_ris);
    const cxd amp = heff.dot(r.tx_beams.col(k));
    if (std::abs(amp) > 1e-15)
      r.tx_beams.col(k) *= std::polar(1.0, -std::arg(amp));
  }
  return r;
}

}  // namespace opt_detail

// Deterministic feasible starting point: aligned (or random) surface
// phases, matched-filter / regularized zero-forcing beams, then a
// bisection on the common transmit scale until every requirement holds
// with a small margin.  Throws nothing; an empty report flags failure.
inline SolveReport init_solution(const ChannelSet& ch,
                                 const ProtocolConfig& proto,
                                 const QosRequirements& qos,
                                 const TargetModel& target,
                                 const SolveOptions& opts) {
  proto.validate();
  qos.validate();
  opts.validate();
  const int n_tx = static_cast<int>(ch.bs_ris.cols());
  const int n_ris = static_cast<int>(ch.bs_ris.rows());
  const int n_irs = static_cast<int>(ch.direct_ir.size());

  SolveReport rep;
  rep.status = SolveStatus::Infeasible;

  Rng rng(opts.seed * 0x9e3779b97f4a7c15ULL + 12345ULL);
  const Eigen::VectorXcd u = update_receive_beamformer(ch);

  // Candidate phase profiles.
  std::vector<Eigen::VectorXd> phase_cands;
  const Eigen::VectorXcd w0 =
      ch.direct_ir.empty() ? Eigen::VectorXcd::Ones(n_tx).eval()
                           : (ch.direct_ir[0] / ch.direct_ir[0].norm()).eval();
  const Eigen::VectorXcd g0 = ch.bs_ris * w0;
  auto aligned = [&](const Eigen::VectorXcd& cascade, bool conjugate) {
    Eigen::VectorXd ph(n_ris);
    for (int n = 0; n < n_ris; ++n)
      ph[n] = conjugate ? -std::arg(cascade[n] * g0[n])
                        : std::arg(cascade[n]) - std::arg(g0[n]);
    return ph;
  };
  if (opts.init_strategy == SolveOptions::InitStrategy::Aligned) {
    for (const auto& c : ch.ris_ir) phase_cands.push_back(aligned(c, true));
    for (const auto& c : ch.ris_er) phase_cands.push_back(aligned(c, true));
    phase_cands.push_back(aligned(ch.ris_target, false));
    if (n_irs > 1) {
      Eigen::VectorXcd sum = ch.ris_ir[0];
      for (int k = 1; k < n_irs; ++k) sum += ch.ris_ir[k];
      phase_cands.push_back(aligned(sum, true));
    }
  }
  for (int extra = 0; extra < 5; ++extra) {
    Eigen::VectorXd ph(n_ris);
    for (int n = 0; n < n_ris; ++n) ph[n] = 2.0 * pi * rng.uniform() - pi;
    phase_cands.push_back(ph);
  }

  double best_power = std::numeric_limits<double>::infinity();
  BeamformingSolution best;

  for (const auto& phases : phase_cands) {
    const ReflectionProfile prof = reflection_profile(proto, phases);
    std::vector<Eigen::VectorXcd> heff(n_irs);
    for (int k = 0; k < n_irs; ++k)
      heff[k] = effective_channel(ch.direct_ir[k], ch.ris_ir[k], prof,
                                  ch.bs_ris);
    // Harvest-optimal direction under this profile: the dominant
    // eigenvector of the summed outer products of the effective
    // energy-receiver channels.
    Eigen::MatrixXcd er_gram = Eigen::MatrixXcd::Zero(n_tx, n_tx);
    for (std::size_t m = 0; m < ch.direct_er.size(); ++m) {
      const Eigen::VectorXcd geff =
          effective_channel(ch.direct_er[m], ch.ris_er[m], prof, ch.bs_ris);
      er_gram += geff * geff.adjoint();
    }
    const bool has_er = er_gram.cwiseAbs().maxCoeff() > 0.0;
    Eigen::VectorXcd er_dir;
    if (has_er)
      er_dir = generalized_rayleigh_max(
                   er_gram, Eigen::MatrixXcd::Identity(n_tx, n_tx))
                   .vector;
    // Per-beam tilt directions: harvest component orthogonal to the
    // other receivers' channels, so a tilt never adds interference.
    std::vector<Eigen::VectorXcd> tilt_dir(n_irs);
    if (has_er) {
      for (int k = 0; k < n_irs; ++k) {
        Eigen::VectorXcd v = er_dir;
        if (n_irs > 1) {
          Eigen::MatrixXcd others(n_tx, n_irs - 1);
          int c = 0;
          for (int j = 0; j < n_irs; ++j)
            if (j != k) others.col(c++) = heff[j];
          v -= others * others.colPivHouseholderQr().solve(er_dir);
        }
        if (v.norm() > 1e-9) v.normalize();
        else v.setZero();
        tilt_dir[k] = v;
      }
    }
    // Beam candidates: matched filter and regularized zero forcing,
    // each optionally tilted toward the harvest direction with the
    // tilt phase aligned to the base beam.
    std::vector<Eigen::MatrixXcd> beam_cands;
    {
      Eigen::MatrixXcd mf(n_tx, n_irs);
      for (int k = 0; k < n_irs; ++k) mf.col(k) = heff[k] / heff[k].norm();
      Eigen::MatrixXcd rzf;
      if (n_irs > 1) {
        Eigen::MatrixXcd h(n_tx, n_irs);
        for (int k = 0; k < n_irs; ++k) h.col(k) = heff[k];
        const Eigen::MatrixXcd gram =
            h.adjoint() * h +
            1e-3 * h.squaredNorm() / n_irs *
                Eigen::MatrixXcd::Identity(n_irs, n_irs);
        rzf = h * gram.inverse();
        for (int k = 0; k < n_irs; ++k)
          if (rzf.col(k).norm() > 0.0) rzf.col(k) /= rzf.col(k).norm();
      }
      for (double kappa : {0.0, 0.5, 1.0, 2.0, 4.0}) {
        if (kappa > 0.0 && !has_er) break;
        auto tilt = [&](const Eigen::MatrixXcd& base) {
          Eigen::MatrixXcd b = base;
          for (int k = 0; k < n_irs; ++k) {
            const Eigen::VectorXcd& v = tilt_dir[k];
            if (v.isZero()) continue;
            const cxd inner = base.col(k).dot(v);
            const cxd phase = std::abs(inner) > 1e-15
                                  ? std::conj(inner) / std::abs(inner)
                                  : cxd(1.0, 0.0);
            b.col(k) = (base.col(k) + kappa * phase * v).normalized();
          }
          return b;
        };
        beam_cands.push_back(tilt(mf));
        if (rzf.size() > 0) beam_cands.push_back(tilt(rzf));
      }
    }
    for (const auto& beams : beam_cands) {
      BeamformingSolution cand;
      cand.tx_beams = beams;
      cand.ris_phases = phases;
      cand.rx_beam = u;
      // Scale feasibility is monotone: every requirement improves with
      // more power (SINR saturates, which bisection handles via the cap).
      auto feasible_at = [&](double scale) {
        BeamformingSolution s = cand;
        s.tx_beams *= scale;
        s.tx_power_w = transmit_power(s);
        return check_feasibility(s, ch, proto, qos, target).min_slack() >= 0.0;
      };
      const double base = transmit_power(cand);
      const double s_max = std::sqrt(opts.power_cap_w / base);
      if (!feasible_at(s_max)) continue;
      double lo = 0.0, hi = s_max;
      for (int it = 0; it < 60; ++it) {
        const double mid = 0.5 * (lo + hi);
        (feasible_at(mid) ? hi : lo) = mid;
      }
      const double scale = hi * (1.0 + 1e-6);
      BeamformingSolution s = cand;
      s.tx_beams *= scale;
      s.tx_power_w = transmit_power(s);
      if (s.tx_power_w < best_power &&
          check_feasibility(s, ch, proto, qos, target).min_slack() >= 0.0) {
        best_power = s.tx_power_w;
        best = s;
      }
    }
  }

  if (!std::isfinite(best_power)) {
    rep.note = "no feasible initialization under the power cap";
    return rep;
  }
  rep.solution = best;
  rep.status = SolveStatus::Converged;  // init itself is feasible
  rep.objective_trace = {best_power};
  rep.slacks = check_feasibility(best, ch, proto, qos, target);
  return rep;
}

// Full pipeline: feasible initialization, closed-form receive beam,
// then successive convexification of the joint beam/surface step with
// a trust region and a true-metric acceptance gate.  The objective
// trace is nonincreasing by construction.
inline SolveReport ao_solve(const ChannelSet& ch, const ProtocolConfig& proto,
                            const QosRequirements& qos,
                            const TargetModel& target,
                            const SolveOptions& opts) {
  opts.validate();
  SolveReport rep = init_solution(ch, proto, qos, target, opts);
  rep.ao_iters = 0;
  rep.socp_solves = 0;
  if (rep.status == SolveStatus::Infeasible) return rep;

  BeamformingSolution cur = rep.solution;
  const double gate_tol = 1e-6;

  double trust_w =
      std::max(1.0, opts.trust_w_scale * std::sqrt(cur.tx_power_w));
  double trust_theta = std::max(
      0.5, opts.trust_theta_scale * std::sqrt((double)ch.bs_ris.rows()));
  const double tw0 = trust_w, tt0 = trust_theta;

  int flat_rounds = 0;
  bool capped = false;
  for (int ao = 0; ao < opts.max_ao_iters; ++ao) {
    cur.rx_beam = update_receive_beamformer(ch);
    const ReflectionProfile prof = reflection_profile(proto, cur.ris_phases);
    const BeamformingSolution ref = opt_detail::rotate_reference(cur, ch, prof);

    bool accepted = false;
    for (int sca = 0; sca < opts.max_sca_iters; ++sca) {
      const JointSocp js = build_joint_socp(ref, ch, proto, qos, target,
                                            trust_w, trust_theta,
                                            opts.power_cap_w);
      if (js.structurally_infeasible) {
        rep.status = SolveStatus::Infeasible;
        rep.note = js.note;
        rep.solution = cur;
        rep.slacks = check_feasibility(cur, ch, proto, qos, target);
        rep.ao_iters = ao;
        return rep;
      }
      const SocpSolution sol =
          solve_socp(js.problem, opts.socp_tol, opts.socp_max_iters);
      ++rep.socp_solves;
      // A stalled solve still carries its best iterate; the true-metric
      // admissibility gate below decides whether that step is usable,
      // so only a proper infeasibility certificate discards it.
      const bool solved = sol.status != SocpStatus::Infeasible;
      BeamformingSolution next;
      bool full_step = false;
      bool found = false;
      if (solved) {
        const BeamformingSolution cand =
            extract_candidate(sol.x, js.layout, ref);
        auto admissible = [&](const BeamformingSolution& c) {
          return check_feasibility(c, ch, proto, qos, target).min_slack() >=
                     -gate_tol &&
                 c.tx_power_w <= cur.tx_power_w + 1e-12;
        };
        if (admissible(cand)) {
          next = cand;
          full_step = found = true;
        } else {
          // Convexification error at this radius: retreat along the
          // segment toward the reference, where the surrogate is exact.
          for (double frac : {0.5, 0.25, 0.1}) {
            BeamformingSolution b = ref;
            b.tx_beams = ref.tx_beams + frac * (cand.tx_beams - ref.tx_beams);
            for (int i : js.layout.active) {
              const double d = std::remainder(
                  cand.ris_phases[i] - ref.ris_phases[i], 2.0 * pi);
              b.ris_phases[i] = ref.ris_phases[i] + frac * d;
            }
            b.tx_power_w = transmit_power(b);
            if (admissible(b)) {
              next = b;
              found = true;
              break;
            }
          }
        }
      }
      if (found) {
        accepted = true;
        const double prev = cur.tx_power_w;
        cur = next;
        rep.objective_trace.push_back(cur.tx_power_w);
        if (full_step) {
          trust_w = std::min(trust_w * 1.6, 4.0 * tw0);
          trust_theta = std::min(trust_theta * 1.6, 4.0 * tt0);
        }
        if (prev - cur.tx_power_w <
            opts.convergence_tol * std::max(1e-9, prev))
          ++flat_rounds;
        else
          flat_rounds = 0;
        break;
      }
      trust_w *= opts.trust_shrink;
      trust_theta *= opts.trust_shrink;
      if (trust_w < opts.trust_min * tw0 ||
          trust_theta < opts.trust_min * tt0) {
        capped = true;
        break;
      }
    }
    rep.ao_iters = ao + 1;
    if (!accepted || flat_rounds >= 3 || capped) break;
  }

  rep.solution = cur;
  rep.slacks = check_feasibility(cur, ch, proto, qos, target);
  const bool done = flat_rounds >= 3 || capped ||
                    rep.ao_iters < opts.max_ao_iters;
  rep.status = done ? SolveStatus::Converged : SolveStatus::IterationCap;
  return rep;
}

}  // namespace iscap

#endif  // ISCAP_OPTIMIZER_HPP
