#ifndef ISCAP_CHANNEL_HPP
#define ISCAP_CHANNEL_HPP

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <vector>

#include <Eigen/Dense>

#include "iscap/common.hpp"

namespace iscap {

struct Position {
  double x = 0.0;
  double y = 0.0;
  double z = 0.0;
};

inline double distance(const Position& a, const Position& b) {
  const double dx = a.x - b.x, dy = a.y - b.y, dz = a.z - b.z;
  return std::sqrt(dx * dx + dy * dy + dz * dz);
}

struct TargetDirection {
  double azimuth_rad = -30.0 * pi / 180.0;  // seen from the RIS array
  double elevation_rad = 40.0 * pi / 180.0;
  double range_m = 50.0;
};

// Per-link large-scale fading exponents.
struct PathlossExponents {
  double bs_ris = 2.2;
  double ris_user = 2.2;
  double bs_user = 3.6;
  double sensing = 2.0;
};

// Deployment geometry and statistics for one synthesized drop.
// Arrays are half-wavelength ULAs laid along the x-axis; azimuths are
// measured from array broadside (the +y direction) in the xy-plane.
struct ScenarioConfig {
  int n_tx = 8;        // transmit antennas at the BS
  int n_ris = 100;     // reflecting surface elements
  int n_sensors = 10;  // receive sensors collocated with the RIS
  int n_irs = 2;       // information receivers
  int n_ers = 2;       // energy receivers

  Position bs_pos{0.0, 0.0, 2.5};
  Position ris_pos{30.0, 0.0, 2.5};
  Position ir_center{30.0, 50.0, 0.0};
  Position er_center{30.0, 5.0, 0.0};
  double cluster_radius_m = 2.0;  // users drawn uniformly on a disc

  TargetDirection target{};

  double rician_k_db = 3.0;       // BS-RIS and RIS-user links
  PathlossExponents exponents{};
  double ref_gain_db = -30.0;     // path gain at 1 m
  double noise_power_dbm = -90.0;
  std::uint64_t seed = 1;

  void validate() const {
    check_positive(n_tx, "n_tx");
    check_positive(n_ris, "n_ris");
    check_positive(n_sensors, "n_sensors");
    if (n_irs < 0) throw std::invalid_argument("n_irs must be non-negative");
    if (n_ers < 0) throw std::invalid_argument("n_ers must be non-negative");
    check_non_negative(cluster_radius_m, "cluster_radius_m");
    check_positive(target.range_m, "target range_m");
    check_positive(exponents.bs_ris, "pathloss exponent bs_ris");
    check_positive(exponents.ris_user, "pathloss exponent ris_user");
    check_positive(exponents.bs_user, "pathloss exponent bs_user");
    check_positive(exponents.sensing, "pathloss exponent sensing");
  }
};

// One drop of small-scale channels.  Steering vectors are stored with
// unit-modulus entries; all large-scale gain of the sensing round trip
// lives in the target model so nothing is counted twice.
struct ChannelSet {
  Eigen::MatrixXcd bs_ris;                    // n_ris x n_tx
  std::vector<Eigen::VectorXcd> direct_ir;    // n_irs entries of length n_tx
  std::vector<Eigen::VectorXcd> ris_ir;       // n_irs entries of length n_ris
  std::vector<Eigen::VectorXcd> direct_er;    // n_ers entries of length n_tx
  std::vector<Eigen::VectorXcd> ris_er;       // n_ers entries of length n_ris
  Eigen::VectorXcd ris_target;                // n_ris, unit modulus
  Eigen::VectorXcd target_sensor;             // n_sensors, unit modulus
  double noise_power = 0.0;                   // watts
};

// a(f)_i = exp(j*i*f), i = 0..n-1.  For a half-wavelength ULA the
// spatial frequency toward azimuth phi is f = pi*sin(phi).
inline Eigen::VectorXcd steering_vector(int n, double spatial_freq) {
  check_positive(n, "steering vector length");
  Eigen::VectorXcd a(n);
  for (int i = 0; i < n; ++i)
    a[i] = std::polar(1.0, spatial_freq * static_cast<double>(i));
  return a;
}

inline double spatial_frequency(double azimuth_rad) {
  return pi * std::sin(azimuth_rad);
}

// Azimuth of `to` as seen from an array at `from` (broadside = +y).
inline double azimuth_from(const Position& from, const Position& to) {
  return std::atan2(to.x - from.x, to.y - from.y);
}

// Distance-law power gain: g = 10^(ref_gain_db/10) * d^(-exponent).
inline double path_gain(double distance_m, double exponent,
                        double ref_gain_db) {
  check_positive(distance_m, "distance_m");
  check_positive(exponent, "exponent");
  return db_to_linear(ref_gain_db) * std::pow(distance_m, -exponent);
}

// Rician draw: sqrt(gain) * (sqrt(K/(K+1))*los + sqrt(1/(K+1))*scatter)
// with i.i.d. unit-variance circularly-symmetric scatter entries.
// K = 0 degenerates to Rayleigh fading.  Entries are drawn in
// column-major order so a fixed rng state yields a fixed matrix.
inline Eigen::MatrixXcd sample_rician(int rows, int cols,
                                      double k_factor_linear,
                                      const Eigen::MatrixXcd& los,
                                      double gain, Rng& rng) {
  check_positive(rows, "rows");
  check_positive(cols, "cols");
  check_non_negative(k_factor_linear, "k_factor_linear");
  check_positive(gain, "gain");
  if (los.rows() != rows || los.cols() != cols)
    throw std::invalid_argument("los component has mismatched shape");
  const double w_los = std::sqrt(k_factor_linear / (k_factor_linear + 1.0));
  const double w_sc = std::sqrt(1.0 / (k_factor_linear + 1.0));
  Eigen::MatrixXcd h(rows, cols);
  for (int j = 0; j < cols; ++j)
    for (int i = 0; i < rows; ++i)
      h(i, j) = w_los * los(i, j) + w_sc * rng.cgauss();
  return std::sqrt(gain) * h;
}

namespace detail {

// Uniform position on a disc of given radius around `center` (z kept).
inline Position draw_disc(const Position& center, double radius, Rng& rng) {
  const double r = radius * std::sqrt(rng.uniform());
  const double phi = 2.0 * pi * rng.uniform();
  return {center.x + r * std::cos(phi), center.y + r * std::sin(phi),
          center.z};
}

}  // namespace detail

// Synthesizes one deterministic drop.  Draw order is fixed: IR
// positions, ER positions, the BS-RIS matrix, the direct BS-IR links,
// the RIS-IR links, then the same two groups for the ERs.
inline ChannelSet build_scenario_channels(const ScenarioConfig& cfg) {
  cfg.validate();
  Rng rng(cfg.seed);
  const double k_lin = db_to_linear(cfg.rician_k_db);

  std::vector<Position> irs(cfg.n_irs), ers(cfg.n_ers);
  for (auto& p : irs) p = detail::draw_disc(cfg.ir_center, cfg.cluster_radius_m, rng);
  for (auto& p : ers) p = detail::draw_disc(cfg.er_center, cfg.cluster_radius_m, rng);

  ChannelSet ch;
  ch.noise_power = dbm_to_watt(cfg.noise_power_dbm);

  // BS-RIS: Rician with a rank-one LoS outer product.
  {
    const double d = distance(cfg.bs_pos, cfg.ris_pos);
    const double g = path_gain(d, cfg.exponents.bs_ris, cfg.ref_gain_db);
    const Eigen::VectorXcd a_r = steering_vector(
        cfg.n_ris, spatial_frequency(azimuth_from(cfg.ris_pos, cfg.bs_pos)));
    const Eigen::VectorXcd a_b = steering_vector(
        cfg.n_tx, spatial_frequency(azimuth_from(cfg.bs_pos, cfg.ris_pos)));
    const Eigen::MatrixXcd los = a_r * a_b.transpose();
    ch.bs_ris = sample_rician(cfg.n_ris, cfg.n_tx, k_lin, los, g, rng);
  }

  const Eigen::MatrixXcd ones_tx = Eigen::MatrixXcd::Ones(cfg.n_tx, 1);
  ch.direct_ir.reserve(irs.size());
  for (const auto& p : irs) {
    const double g = path_gain(distance(cfg.bs_pos, p), cfg.exponents.bs_user,
                               cfg.ref_gain_db);
    ch.direct_ir.push_back(sample_rician(cfg.n_tx, 1, 0.0, ones_tx, g, rng));
  }
  ch.ris_ir.reserve(irs.size());
  for (const auto& p : irs) {
    const double g = path_gain(distance(cfg.ris_pos, p), cfg.exponents.ris_user,
                               cfg.ref_gain_db);
    const Eigen::MatrixXcd los = steering_vector(
        cfg.n_ris, spatial_frequency(azimuth_from(cfg.ris_pos, p)));
    ch.ris_ir.push_back(sample_rician(cfg.n_ris, 1, k_lin, los, g, rng));
  }
  ch.direct_er.reserve(ers.size());
  for (const auto& p : ers) {
    const double g = path_gain(distance(cfg.bs_pos, p), cfg.exponents.bs_user,
                               cfg.ref_gain_db);
    ch.direct_er.push_back(sample_rician(cfg.n_tx, 1, 0.0, ones_tx, g, rng));
  }
  ch.ris_er.reserve(ers.size());
  for (const auto& p : ers) {
    const double g = path_gain(distance(cfg.ris_pos, p), cfg.exponents.ris_user,
                               cfg.ref_gain_db);
    const Eigen::MatrixXcd los = steering_vector(
        cfg.n_ris, spatial_frequency(azimuth_from(cfg.ris_pos, p)));
    ch.ris_er.push_back(sample_rician(cfg.n_ris, 1, k_lin, los, g, rng));
  }

  const double f_t = spatial_frequency(cfg.target.azimuth_rad);
  ch.ris_target = steering_vector(cfg.n_ris, f_t);
  ch.target_sensor = steering_vector(cfg.n_sensors, f_t);
  return ch;
}

}  // namespace iscap

#endif  // ISCAP_CHANNEL_HPP
