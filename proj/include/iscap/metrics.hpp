#ifndef ISCAP_METRICS_HPP
#define ISCAP_METRICS_HPP

#include <cmath>
#include <stdexcept>

#include <Eigen/Dense>

#include "iscap/channel.hpp"
#include "iscap/common.hpp"
#include "iscap/protocol.hpp"

namespace iscap {

struct QosRequirements {
  double r_com_min = 1.0;     // per-IR rate floor, bps/Hz
  double r_sense_min = 0.2;   // sensing mutual-information floor, bps/Hz
  double e_min_total = 0.5e-3;  // total ER harvest floor, watts

  void validate() const {
    check_non_negative(r_com_min, "r_com_min");
    check_non_negative(r_sense_min, "r_sense_min");
    check_non_negative(e_min_total, "e_min_total");
  }
};

// One candidate design: per-IR transmit beams (columns of tx_beams),
// the RIS phase vector, and the sensing receive beam.
struct BeamformingSolution {
  Eigen::MatrixXcd tx_beams;   // n_tx x n_irs
  Eigen::VectorXd ris_phases;  // n_ris
  Eigen::VectorXcd rx_beam;    // n_sensors, unit norm
  double tx_power_w = 0.0;     // squared Frobenius norm of tx_beams
};

inline double transmit_power(const BeamformingSolution& s) {
  return s.tx_beams.squaredNorm();
}

// Round-trip target description.  two_way_gain collects RCS and both
// hops of distance loss, so steering vectors stay unit modulus.
struct TargetModel {
  double rcs_mean = 0.5;      // square meters
  double two_way_gain = 0.0;  // rcs * g(ris->target) * g(target->ris)
};

inline TargetModel make_target_model(const ScenarioConfig& cfg,
                                     double rcs_mean = 0.5) {
  check_positive(rcs_mean, "rcs_mean");
  const double g = path_gain(cfg.target.range_m, cfg.exponents.sensing,
                             cfg.ref_gain_db);
  return TargetModel{rcs_mean, rcs_mean * g * g};
}

// h_eff = h_direct + G^T diag(coefficients) h_ris.
inline Eigen::VectorXcd effective_channel(const Eigen::VectorXcd& direct,
                                          const Eigen::VectorXcd& cascade,
                                          const ReflectionProfile& profile,
                                          const Eigen::MatrixXcd& bs_ris) {
  if (cascade.size() != bs_ris.rows())
    throw std::invalid_argument("cascade length must equal bs_ris rows");
  if (profile.coefficients.size() != bs_ris.rows())
    throw std::invalid_argument("profile length must equal bs_ris rows");
  if (direct.size() != bs_ris.cols())
    throw std::invalid_argument("direct length must equal bs_ris cols");
  return direct +
         bs_ris.transpose() * profile.coefficients.cwiseProduct(cascade);
}

// Echo amplitude of beam w bounced off the target back to the surface
// reference element: a_rt^H diag(coefficients) G w (unit round-trip
// gain; the true gain is applied by the caller via TargetModel).
inline cxd sensing_amplitude(const ChannelSet& ch,
                             const ReflectionProfile& profile,
                             const Eigen::VectorXcd& w) {
  const Eigen::VectorXcd mod =
      ch.ris_target.conjugate().cwiseProduct(profile.coefficients);
  return mod.cwiseProduct(ch.bs_ris * w).sum();
}

// Achievable rate of IR k treating other beams as noise, scaled by the
// protocol's reflecting time share.
inline double comm_rate(int k, const BeamformingSolution& sol,
                        const ChannelSet& ch,
                        const ReflectionProfile& profile) {
  const int n_irs = static_cast<int>(ch.direct_ir.size());
  if (k < 0 || k >= n_irs) throw std::invalid_argument("IR index out of range");
  if (sol.tx_beams.cols() != n_irs)
    throw std::invalid_argument("tx_beams must have one column per IR");
  const Eigen::VectorXcd h =
      effective_channel(ch.direct_ir[k], ch.ris_ir[k], profile, ch.bs_ris);
  double sig = 0.0, interf = 0.0;
  for (int j = 0; j < n_irs; ++j) {
    const double p = std::norm(h.dot(sol.tx_beams.col(j)));
    if (j == k) sig = p; else interf += p;
  }
  return profile.time_share * std::log2(1.0 + sig / (interf + ch.noise_power));
}

// Sensing mutual information proxy: log of one plus the sensor-combined
// echo SNR, accumulated over all transmit beams and scaled by the
// reflecting time share.  rx_beam is normalized internally, so the
// value is invariant to its scale and global phase.
inline double sensing_rate(const BeamformingSolution& sol,
                           const ChannelSet& ch,
                           const ReflectionProfile& profile,
                           const TargetModel& target) {
  const double un = sol.rx_beam.norm();
  if (!(un > 0.0)) throw std::invalid_argument("rx_beam must be nonzero");
  if (sol.rx_beam.size() != ch.target_sensor.size())
    throw std::invalid_argument("rx_beam length must equal n_sensors");
  const double combine = std::norm(sol.rx_beam.dot(ch.target_sensor)) / (un * un);
  double echo = 0.0;
  for (Eigen::Index j = 0; j < sol.tx_beams.cols(); ++j)
    echo += std::norm(sensing_amplitude(ch, profile, sol.tx_beams.col(j)));
  const double snr = target.two_way_gain * combine * echo / ch.noise_power;
  return profile.time_share * std::log2(1.0 + snr);
}

// Total RF power rectified by the ERs (watts).  Under TS energy only
// arrives while the surface reflects.
inline double harvested_power_ers(const BeamformingSolution& sol,
                                  const ChannelSet& ch,
                                  const ReflectionProfile& profile,
                                  double eta) {
  if (!(eta > 0.0 && eta <= 1.0))
    throw std::invalid_argument("eta must lie in (0, 1]");
  double total = 0.0;
  for (std::size_t m = 0; m < ch.direct_er.size(); ++m) {
    const Eigen::VectorXcd g =
        effective_channel(ch.direct_er[m], ch.ris_er[m], profile, ch.bs_ris);
    for (Eigen::Index j = 0; j < sol.tx_beams.cols(); ++j)
      total += std::norm(g.dot(sol.tx_beams.col(j)));
  }
  return profile.time_share * eta * total;
}

// Per-element RF power arriving at the surface: sum_k |(G w_k)_n|^2.
// Independent of the reflection profile by construction.
inline Eigen::VectorXd ris_incident_powers(const BeamformingSolution& sol,
                                           const ChannelSet& ch) {
  Eigen::VectorXd p = Eigen::VectorXd::Zero(ch.bs_ris.rows());
  for (Eigen::Index j = 0; j < sol.tx_beams.cols(); ++j)
    p += (ch.bs_ris * sol.tx_beams.col(j)).cwiseAbs2();
  return p;
}

}  // namespace iscap

#endif  // ISCAP_METRICS_HPP
