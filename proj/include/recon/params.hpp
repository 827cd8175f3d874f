#pragma once

#include <cmath>
#include <map>
#include <string>

#include "recon/geometry.hpp"

namespace recon {

// Every tunable the reconstruction reads. The named constants stand in for the
// uniform constants the source bounds assert to exist; defaults were calibrated
// on the flat torus at eps1 = 1e-3 and are recorded in constants/ledger.json.
struct ReconstructionParams {
  GeometryBounds bounds;
  double eps0 = 0.01;
  double eps1 = 0.01;
  double sigma = 0.0; // heat-kernel mode noise level

  double s_exponent = 3.0 / 8.0;
  double rho_exponent = 3.0 / 8.0;
  double neighborhood_exponent = 1.0 / 4.0;

  double rho0 = 0.0;          // localization radius; 0 = derive default on validate
  double c1_threshold = 0.02; // frame determinant scale
  double C17 = 5.0;           // tuple separation multiplier (units of eps1)

  std::map<std::string, double> constants;

  double s() const { return std::pow(eps1, s_exponent); }
  double rho() const { return std::pow(eps1, rho_exponent); }
  double step_ball_radius() const { return std::pow(eps1, neighborhood_exponent); }

  double constant(const std::string& name) const;
  bool has_constant(const std::string& name) const { return constants.count(name) > 0; }

  void validate() const;

  static ReconstructionParams defaults(const GeometryBounds& bounds, double eps0, double eps1);
};

} // namespace recon
