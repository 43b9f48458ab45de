#ifndef ISCAP_PROTOCOL_HPP
#define ISCAP_PROTOCOL_HPP

#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "iscap/common.hpp"

namespace iscap {

// How the self-powered surface splits between reflection and
// energy harvesting:
//   ES - element splitting: a subset of elements only harvests;
//   TS - time splitting: the whole surface reflects for a fraction
//        rho of the frame and harvests for the rest;
//   PS - power splitting: every element reflects a fraction rho of its
//        incident power and rectifies the remainder.
enum class ProtocolVariant { ES, TS, PS };

inline std::string to_string(ProtocolVariant v) {
  switch (v) {
    case ProtocolVariant::ES: return "ES";
    case ProtocolVariant::TS: return "TS";
    case ProtocolVariant::PS: return "PS";
  }
  throw std::invalid_argument("unknown protocol variant");
}

inline ProtocolVariant protocol_from_string(const std::string& s) {
  if (s == "ES") return ProtocolVariant::ES;
  if (s == "TS") return ProtocolVariant::TS;
  if (s == "PS") return ProtocolVariant::PS;
  throw std::invalid_argument("unknown protocol variant '" + s + "'");
}

struct ProtocolConfig {
  ProtocolVariant variant = ProtocolVariant::PS;
  double rho = 0.5;          // splitting factor in [0, 1]
  int n_ris = 100;
  double p_circuit = 50e-3;  // static controller draw, watts
  double p_element = 2e-6;   // per active reflecting element, watts
  double eta = 0.8;          // rectifier efficiency

  void validate() const {
    if (!(rho >= 0.0 && rho <= 1.0))
      throw std::invalid_argument("rho must lie in [0, 1]");
    check_positive(n_ris, "n_ris");
    check_non_negative(p_circuit, "p_circuit");
    check_non_negative(p_element, "p_element");
    if (!(eta > 0.0 && eta <= 1.0))
      throw std::invalid_argument("eta must lie in (0, 1]");
  }

  // ES dedicates the trailing elements to harvesting; rho*n_ris is
  // rounded to the nearest integer count of reflecting elements.
  int n_reflect() const {
    if (variant != ProtocolVariant::ES) return n_ris;
    const int n = static_cast<int>(std::llround(rho * n_ris));
    return std::min(std::max(n, 0), n_ris);
  }
  int n_harvest() const { return n_ris - n_reflect(); }

  // The splitting factor actually realized after ES rounding.
  double realized_rho() const {
    if (variant != ProtocolVariant::ES) return rho;
    return static_cast<double>(n_reflect()) / static_cast<double>(n_ris);
  }
};

// Static power the surface must self-sustain.  Under TS and PS the
// whole aperture stays active with duty/average weight rho; under ES
// only the reflecting subset draws per-element power.
inline double power_requirement(const ProtocolConfig& cfg) {
  cfg.validate();
  switch (cfg.variant) {
    case ProtocolVariant::ES:
      return cfg.p_circuit + cfg.n_reflect() * cfg.p_element;
    case ProtocolVariant::TS:
    case ProtocolVariant::PS:
      return cfg.p_circuit + cfg.rho * cfg.n_ris * cfg.p_element;
  }
  throw std::invalid_argument("unknown protocol variant");
}

// Reflection state of the surface for a given phase configuration.
// coefficients[i] multiplies the incident wave at element i on the
// reflect path; harvest_mask marks elements that only rectify.
// time_share is the fraction of the frame spent reflecting (TS).
struct ReflectionProfile {
  Eigen::VectorXcd coefficients;
  std::vector<bool> harvest_mask;
  double time_share = 1.0;
};

inline ReflectionProfile reflection_profile(const ProtocolConfig& cfg,
                                            const Eigen::VectorXd& phases) {
  cfg.validate();
  if (phases.size() != cfg.n_ris)
    throw std::invalid_argument("phase vector length must equal n_ris");
  ReflectionProfile p;
  p.coefficients.resize(cfg.n_ris);
  p.harvest_mask.assign(cfg.n_ris, false);
  switch (cfg.variant) {
    case ProtocolVariant::ES: {
      const int nr = cfg.n_reflect();
      for (int i = 0; i < cfg.n_ris; ++i) {
        if (i < nr) {
          p.coefficients[i] = std::polar(1.0, phases[i]);
        } else {
          p.coefficients[i] = 0.0;
          p.harvest_mask[i] = true;
        }
      }
      p.time_share = 1.0;
      break;
    }
    case ProtocolVariant::TS: {
      for (int i = 0; i < cfg.n_ris; ++i)
        p.coefficients[i] = std::polar(1.0, phases[i]);
      p.time_share = cfg.rho;
      break;
    }
    case ProtocolVariant::PS: {
      const double amp = std::sqrt(cfg.rho);
      for (int i = 0; i < cfg.n_ris; ++i)
        p.coefficients[i] = std::polar(amp, phases[i]);
      p.time_share = 1.0;
      break;
    }
  }
  return p;
}

// Power rectified by the surface itself from the element-wise incident
// powers (watts).  ES: harvesting elements keep everything; TS: the
// whole aperture harvests for the idle 1-rho of the frame; PS: every
// element rectifies the unreflected 1-rho share continuously.
inline double ris_harvested_power(const ProtocolConfig& cfg,
                                  const ReflectionProfile& profile,
                                  const Eigen::VectorXd& incident_powers) {
  cfg.validate();
  if (incident_powers.size() != cfg.n_ris)
    throw std::invalid_argument("incident power length must equal n_ris");
  if (profile.coefficients.size() != cfg.n_ris ||
      static_cast<int>(profile.harvest_mask.size()) != cfg.n_ris)
    throw std::invalid_argument("profile does not match n_ris");
  for (int i = 0; i < cfg.n_ris; ++i)
    if (incident_powers[i] < 0.0)
      throw std::invalid_argument("incident powers must be non-negative");
  double sum = 0.0;
  switch (cfg.variant) {
    case ProtocolVariant::ES:
      for (int i = 0; i < cfg.n_ris; ++i)
        if (profile.harvest_mask[i]) sum += incident_powers[i];
      return cfg.eta * sum;
    case ProtocolVariant::TS:
      return cfg.eta * (1.0 - cfg.rho) * incident_powers.sum();
    case ProtocolVariant::PS:
      return cfg.eta * (1.0 - cfg.rho) * incident_powers.sum();
  }
  throw std::invalid_argument("unknown protocol variant");
}

struct SelfPowerCheck {
  bool feasible = false;
  double slack = 0.0;  // harvested minus required, watts
};

inline SelfPowerCheck self_power_feasible(const ProtocolConfig& cfg,
                                          const ReflectionProfile& profile,
                                          const Eigen::VectorXd& incident_powers) {
  SelfPowerCheck r;
  r.slack = ris_harvested_power(cfg, profile, incident_powers) -
            power_requirement(cfg);
  r.feasible = r.slack >= 0.0;
  return r;
}

}  // namespace iscap

#endif  // ISCAP_PROTOCOL_HPP
