#include "recon/params.hpp"

#include <algorithm>

namespace recon {

double ReconstructionParams::constant(const std::string& name) const {
  auto it = constants.find(name);
  if (it == constants.end()) throw InputError("unknown tunable constant: " + name);
  return it->second;
}

void ReconstructionParams::validate() const {
  bounds.validate();
  if (!(eps0 > 0.0) || !(eps0 <= eps1)) throw InputError("need 0 < eps0 <= eps1");
  if (sigma < 0.0) throw InputError("sigma must be nonnegative");
  const double rho0_cap = std::min(0.25, bounds.R / 16.0);
  if (!(rho0 > 0.0) || !(rho0 < rho0_cap)) throw InputError("rho0 must lie in (0, min{1/4, R/16})");
  if (!(c1_threshold > 0.0)) throw InputError("c1_threshold must be positive");
  if (!(C17 > 0.0)) throw InputError("C17 must be positive");
  const double c18 = constant("C18");
  if (!(s() > 2.0 * c18 * std::sqrt(eps1)))
    throw InputError("step size eps1^{3/8} must exceed 2*C18*eps1^{1/2}");
}

ReconstructionParams ReconstructionParams::defaults(const GeometryBounds& b, double eps0, double eps1) {
  ReconstructionParams p;
  p.bounds = b;
  p.eps0 = eps0;
  p.eps1 = eps1;
  p.rho0 = 0.8 * std::min(0.25, b.R / 16.0);
  p.constants = {
      {"C0", 1.0},   // eps2 = C0 * eps1^{1/2} net scale
      {"C5", 3.0},   // local distance envelope
      {"C13", 0.14}, // first-variation ratio (fitted, sphere r=1)
      {"C15", 1.0},  // localization envelope scale
      {"C18", 0.5},  // step-length slack multiplier
      {"C21", 2.0},  // gram entry envelope scale
      {"c1", p.c1_threshold},
      {"c2", 0.25},
      {"c3", 0.35},         // tuple candidate ball around p0
      {"c4", 0.05},
      {"tuple_budget", 500.0},
  };
  return p;
}

} // namespace recon
