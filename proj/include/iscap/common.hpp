#ifndef ISCAP_COMMON_HPP
#define ISCAP_COMMON_HPP

#include <cmath>
#include <complex>
#include <cstdint>
#include <random>
#include <stdexcept>
#include <string>

#include <Eigen/Dense>

namespace iscap {

using cxd = std::complex<double>;
constexpr double pi = 3.14159265358979323846;

inline void check_positive(double v, const std::string& name) {
  if (!(v > 0.0)) throw std::invalid_argument(name + " must be positive");
}

inline void check_non_negative(double v, const std::string& name) {
  if (!(v >= 0.0)) throw std::invalid_argument(name + " must be non-negative");
}

inline void check_positive(int v, const std::string& name) {
  if (v <= 0) throw std::invalid_argument(name + " must be positive");
}

// Decibel helpers.  dBm values are referenced to 1 mW.
inline double db_to_linear(double db) { return std::pow(10.0, db / 10.0); }
inline double linear_to_db(double lin) {
  check_positive(lin, "linear value");
  return 10.0 * std::log10(lin);
}
inline double dbm_to_watt(double dbm) { return db_to_linear(dbm) * 1e-3; }
inline double watt_to_dbm(double w) {
  check_positive(w, "power");
  return 10.0 * std::log10(w * 1e3);
}

// Deterministic random stream.  std::mt19937_64 has a fully specified
// bit stream; the uniform/normal mappings below are hand-rolled so the
// produced doubles are identical across standard libraries (the std::
// distributions leave their algorithm implementation-defined).
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next_u64() { return engine_(); }

  // Uniform on [0, 1) with 53 random bits.
  double uniform() {
    return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
  }

  // Standard normal via the Box-Muller transform (pair cached).
  double normal() {
    if (has_cached_) {
      has_cached_ = false;
      return cached_;
    }
    const double u1 = 1.0 - uniform();  // (0, 1], keeps the log finite
    const double u2 = uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    cached_ = r * std::sin(2.0 * pi * u2);
    has_cached_ = true;
    return r * std::cos(2.0 * pi * u2);
  }

  // Circularly-symmetric complex Gaussian with unit variance,
  // i.e. E|x|^2 = 1 (each part has variance 1/2).
  cxd cgauss() {
    const double re = normal();
    const double im = normal();
    return cxd(re * M_SQRT1_2, im * M_SQRT1_2);
  }

 private:
  std::mt19937_64 engine_;
  bool has_cached_ = false;
  double cached_ = 0.0;
};

// Complex<->real lifting used by the conic layer: a length-n complex
// vector maps to 2n reals as interleaved (Re x_0, Im x_0, Re x_1, ...).
inline Eigen::VectorXd lift_complex(const Eigen::VectorXcd& x) {
  Eigen::VectorXd r(2 * x.size());
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    r[2 * i] = x[i].real();
    r[2 * i + 1] = x[i].imag();
  }
  return r;
}

inline Eigen::VectorXcd unlift_complex(const Eigen::VectorXd& r) {
  if (r.size() % 2 != 0)
    throw std::invalid_argument("lifted vector must have even length");
  Eigen::VectorXcd x(r.size() / 2);
  for (Eigen::Index i = 0; i < x.size(); ++i) x[i] = cxd(r[2 * i], r[2 * i + 1]);
  return x;
}

}  // namespace iscap

#endif  // ISCAP_COMMON_HPP
