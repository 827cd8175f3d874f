#include <algorithm>
#include <cmath>
#include <random>
#include <vector>

#include "recon/geometry.hpp"

namespace recon {

namespace {

Eigen::VectorXd random_unit_tangent(const ManifoldSpec& spec, const PointRep& x, std::mt19937_64& rng) {
  std::normal_distribution<double> g(0.0, 1.0);
  if (spec.kind == ManifoldKind::FlatTorus) {
    Eigen::VectorXd v(spec.n);
    double nrm = 0.0;
    do {
      for (int i = 0; i < spec.n; ++i) v[i] = g(rng);
      nrm = v.norm();
    } while (nrm < 1e-12);
    return v / nrm;
  }
  // Sphere: Gaussian in the ambient space projected to the tangent plane at x.
  Eigen::VectorXd v(spec.n + 1);
  double nrm = 0.0;
  do {
    for (int i = 0; i <= spec.n; ++i) v[i] = g(rng);
    v -= (v.dot(x.coords) / x.coords.squaredNorm()) * x.coords;
    nrm = v.norm();
  } while (nrm < 1e-12);
  return v / nrm;
}

} // namespace

// Samples configurations p,q,x,y with |pq| > 1/(2 lambda), |qx| > 1/lambda and
// |pq| + |qx| <= |px| + delta, then checks
//   | <xi, v> - (|xq| - |yq|) | <= C (|xy| delta^{1/4} + |xy|^{4/3})
// with xi = log_x(y) and v the unit initial vector of [x,q]. Returns the max
// fitted C over the accepted samples.
FirstVariationReport check_first_variation_bound(const ManifoldSpec& spec, std::size_t samples,
                                                 std::uint64_t seed, const GeometryBounds& params) {
  if (spec.kind == ManifoldKind::MeshGraph)
    throw CapabilityError("first variation check needs exact tangent directions");
  params.validate();
  const double lambda = params.lambda;
  const double inj = spec.injectivity_radius();
  if (inj <= 1.0 / lambda) throw InputError("manifold violates the injectivity bound");

  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u01(0.0, 1.0);

  FirstVariationReport rep;
  rep.samples_requested = samples;

  struct Obs {
    double xy;
    double ratio;
  };
  std::vector<Obs> obs;
  obs.reserve(samples);

  const double delta_cap = 1e-2;
  std::size_t attempts = 0;
  const std::size_t max_attempts = samples * 40 + 1000;
  while (obs.size() < samples && attempts < max_attempts) {
    ++attempts;
    PointRep x = sample_uniform_point(spec, rng);
    const Eigen::VectorXd dir = random_unit_tangent(spec, x, rng);

    // q at distance just above 1/lambda from x, still within safe geodesic range.
    const double lmax = std::min(2.0 / lambda, 0.9 * inj);
    if (lmax <= 1.0 / lambda) continue;
    const double L = 1.0 / lambda + (lmax - 1.0 / lambda) * u01(rng);
    PointRep q = exp_map(spec, x, L * dir);

    // p behind q on the continuation of [x,q], with a small lateral nudge so
    // delta spans (0, delta_cap) instead of sitting at machine zero.
    const double tau = (0.5 + 0.4 * u01(rng)) / lambda * 1.2;
    Eigen::VectorXd back = log_map(spec, q, x);
    const double bn = back.norm();
    if (bn < 1e-12) continue;
    Eigen::VectorXd pvec = -(tau / bn) * back;
    Eigen::VectorXd nudge = random_unit_tangent(spec, q, rng);
    pvec += (0.2 * tau * u01(rng) * u01(rng)) * nudge;
    PointRep p = exp_map(spec, q, pvec);

    const double dpq = geodesic_distance(spec, p, q);
    const double dqx = geodesic_distance(spec, q, x);
    const double dpx = geodesic_distance(spec, p, x);
    const double delta = dpq + dqx - dpx;
    if (!(dpq > 0.5 / lambda) || !(dqx > 1.0 / lambda)) continue;
    if (delta < 0 || delta > delta_cap) continue;

    const double xy_max = std::min(0.25 / (lambda * lambda), 0.5 * inj);
    const double xy = xy_max * std::pow(u01(rng), 0.5);
    if (xy < 1e-8) continue;
    PointRep y = exp_map(spec, x, xy * random_unit_tangent(spec, x, rng));

    Eigen::VectorXd xi = log_map(spec, x, y);
    Eigen::VectorXd vq = log_map(spec, x, q);
    const double vqn = vq.norm();
    if (vqn < 1e-12) continue;
    const double inner = xi.dot(vq) / vqn;

    const double dyq = geodesic_distance(spec, y, q);
    const double lhs = std::abs(inner - (dqx - dyq));
    const double rhs_core = xy * std::pow(delta, 0.25) + std::pow(xy, 4.0 / 3.0);
    if (rhs_core < 1e-300) continue;
    const double ratio = lhs / rhs_core;

    obs.push_back({xy, ratio});
    rep.max_lhs = std::max(rep.max_lhs, lhs);
    rep.max_ratio = std::max(rep.max_ratio, ratio);
  }

  rep.samples_used = obs.size();
  if (obs.size() < std::max<std::size_t>(samples / 10, 8))
    throw SamplingError("too few admissible first-variation configurations");

  // Growth flag: max ratio per |xy|-quartile; strictly increasing with a big
  // last/first gap suggests the fitted constant is not stabilizing.
  std::sort(obs.begin(), obs.end(), [](const Obs& a, const Obs& b) { return a.xy < b.xy; });
  double qmax[4] = {0, 0, 0, 0};
  for (std::size_t i = 0; i < obs.size(); ++i) {
    const std::size_t qi = std::min<std::size_t>(3, i * 4 / obs.size());
    qmax[qi] = std::max(qmax[qi], obs[i].ratio);
  }
  rep.unbounded_growth = qmax[0] < qmax[1] && qmax[1] < qmax[2] && qmax[2] < qmax[3] &&
                         qmax[3] > 4.0 * std::max(qmax[0], 1e-12);
  return rep;
}

} // namespace recon
