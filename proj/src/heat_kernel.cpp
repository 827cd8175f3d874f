#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <vector>

#include "recon/geometry.hpp"

namespace recon {

namespace {

constexpr double kPi = std::numbers::pi;

double log_sum_exp(const std::vector<double>& logs) {
  double m = -std::numeric_limits<double>::infinity();
  for (double v : logs) m = std::max(m, v);
  if (!std::isfinite(m)) return m;
  double s = 0.0;
  for (double v : logs) s += std::exp(v - m);
  return m + std::log(s);
}

// Method of images on the torus, log domain. Expands the lattice window until
// the certified shell majorant drops below 1e-16 of the accumulated sum.
HeatKernelEval torus_kernel(const ManifoldSpec& spec, const PointRep& p, const PointRep& q, double t) {
  const int n = spec.n;
  Eigen::VectorXd dfrac = q.coords - p.coords;
  for (int i = 0; i < n; ++i) dfrac[i] = dfrac[i] - std::round(dfrac[i]);

  const Eigen::MatrixXd& B = spec.basis;
  bool diag = true;
  for (int i = 0; i < n && diag; ++i)
    for (int j = 0; j < n; ++j)
      if (i != j && B(i, j) != 0.0) { diag = false; break; }
  const double smin = diag ? B.diagonal().cwiseAbs().minCoeff() : B.jacobiSvd().singularValues().minCoeff();
  const double dnear = (B * dfrac).norm();

  std::vector<double> logs;
  const double lognorm = -0.5 * n * std::log(4.0 * kPi * t);

  int w = 1;
  double lse = -std::numeric_limits<double>::infinity();
  while (true) {
    logs.clear();
    Eigen::VectorXi k = Eigen::VectorXi::Constant(n, -w);
    Eigen::VectorXd shifted(n);
    while (true) {
      for (int d = 0; d < n; ++d) shifted[d] = dfrac[d] + k[d];
      const double r2 = (B * shifted).squaredNorm();
      logs.push_back(lognorm - r2 / (4.0 * t));
      int d = 0;
      while (d < n && k[d] == w) k[d++] = -w;
      if (d == n) break;
      ++k[d];
    }
    lse = log_sum_exp(logs);
    // All images with |k|_inf = m >= w+1 have |B(dfrac+k)| >= smin*m - dnear.
    // Majorize the tail by sum_m count(m) * exp(-(smin*m-dnear)^2/4t).
    double tail = -std::numeric_limits<double>::infinity();
    for (int m = w + 1; m < w + 60; ++m) {
      const double rmin = std::max(smin * m - dnear, 0.0);
      const double count = std::pow(2.0 * m + 1.0, n) - std::pow(2.0 * m - 1.0, n);
      const double lg = lognorm + std::log(count) - rmin * rmin / (4.0 * t);
      tail = std::max(tail, lg + std::log(60.0)); // crude but certified: 60 dominating shells
      if (lg < lse - 60.0) break;
    }
    if (tail < lse + std::log(1e-16) || w > 80) {
      HeatKernelEval ev;
      ev.log_value = lse;
      ev.method = "images";
      ev.terms = static_cast<int>(logs.size());
      ev.tail_bound = std::exp(std::min(tail - lse, 0.0));
      ev.error_estimate = ev.tail_bound + 1e-15 * logs.size();
      return ev;
    }
    ++w;
  }
}

// Legendre series on S^2 with a certified truncation majorant and a running
// floating-point cancellation bound.
struct SpectralResult {
  double value = 0.0;
  double abs_sum = 0.0;
  int terms = 0;
  double tail_rel = 0.0;
};

SpectralResult sphere_spectral(double r, double ct, double t) {
  const double tau = t / (r * r);
  double p_prev = 1.0, p_curr = ct;
  double sum = 1.0 / (4.0 * kPi * r * r);
  double abs_sum = sum;
  int l = 1;
  for (; l <= 100000; ++l) {
    const double coef = (2.0 * l + 1.0) / (4.0 * kPi * r * r) * std::exp(-l * (l + 1.0) * tau);
    const double term = coef * p_curr;
    sum += term;
    abs_sum += std::abs(term);
    // Tail majorant: sum_{m>l} (2m+1) e^{-m(m+1) tau} <= e^{-(l+1)(l+2) tau} * sum geometric
    const double q = std::exp(-2.0 * (l + 2.0) * tau);
    if (q < 1.0) {
      const double tail = (2.0 * (l + 1.0) + 1.0) / (4.0 * kPi * r * r) * std::exp(-(l + 1.0) * (l + 2.0) * tau) / (1.0 - q);
      if (tail < 1e-18 * std::max(std::abs(sum), 1e-300) || tail < 1e-320) {
        SpectralResult res;
        res.value = sum;
        res.abs_sum = abs_sum;
        res.terms = l + 1;
        res.tail_rel = tail / std::max(std::abs(sum), 1e-300);
        return res;
      }
    }
    // Legendre recurrence (l+1) P_{l+1} = (2l+1) x P_l - l P_{l-1}
    const double p_next = ((2.0 * l + 1.0) * ct * p_curr - l * p_prev) / (l + 1.0);
    p_prev = p_curr;
    p_curr = p_next;
  }
  SpectralResult res;
  res.value = sum;
  res.abs_sum = abs_sum;
  res.terms = l;
  res.tail_rel = 1.0;
  return res;
}

// Leading-order geodesic expansion with antipodal images; multiplicative error
// is O(t/r^2). Used where the spectral series cancels below double precision.
HeatKernelEval sphere_surrogate(double r, double theta, double t) {
  const double tau = t / (r * r);
  const double st = std::sin(theta);
  std::vector<double> logs;
  for (int k = -2; k <= 2; ++k) {
    const double th = theta + 2.0 * kPi * k;
    const double jac = std::abs(st) > 1e-12 ? std::abs(th / st) : 1.0;
    logs.push_back(0.5 * std::log(jac) - th * th / (4.0 * tau));
  }
  HeatKernelEval ev;
  ev.log_value = log_sum_exp(logs) + tau / 8.0 - std::log(4.0 * kPi * tau) - 2.0 * std::log(r);
  ev.method = "small_t_surrogate";
  ev.terms = static_cast<int>(logs.size());
  ev.tail_bound = 0.0;
  ev.error_estimate = tau; // documented heuristic, not a proof
  return ev;
}

HeatKernelEval sphere_kernel(const ManifoldSpec& spec, const PointRep& p, const PointRep& q, double t) {
  if (spec.n != 2) throw CapabilityError("spectral heat kernel is implemented for S^2 only");
  const double r = spec.radius;
  const double ct = std::clamp(p.coords.dot(q.coords) / (r * r), -1.0, 1.0);
  const double theta = std::acos(ct);

  const SpectralResult sp = sphere_spectral(r, ct, t);
  const double cancel_rel = sp.value > 0 ? 4.0 * sp.abs_sum * 2.2e-16 * std::sqrt(double(sp.terms)) / sp.value
                                         : std::numeric_limits<double>::infinity();
  const double spectral_err = cancel_rel + sp.tail_rel;

  HeatKernelEval sur = sphere_surrogate(r, theta, t);
  if (sp.value > 0 && spectral_err < sur.error_estimate) {
    HeatKernelEval ev;
    ev.log_value = std::log(sp.value);
    ev.method = "spectral";
    ev.terms = sp.terms;
    ev.tail_bound = sp.tail_rel;
    ev.error_estimate = spectral_err;
    return ev;
  }
  return sur;
}

} // namespace

HeatKernelEval heat_kernel_log_eval(const ManifoldSpec& spec, const PointRep& p, const PointRep& q, double t) {
  if (!(t > 0.0) || !(t < 1.0)) throw InputError("heat kernel time must lie in (0,1)");
  switch (spec.kind) {
    case ManifoldKind::FlatTorus:
      return torus_kernel(spec, p, q, t);
    case ManifoldKind::Sphere:
      return sphere_kernel(spec, p, q, t);
    case ManifoldKind::MeshGraph:
      throw CapabilityError("heat kernels are not available on mesh oracles");
  }
  throw CapabilityError("unknown manifold kind");
}

double heat_kernel_log(const ManifoldSpec& spec, const PointRep& p, const PointRep& q, double t) {
  return heat_kernel_log_eval(spec, p, q, t).log_value;
}

} // namespace recon
