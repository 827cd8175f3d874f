#include "recon/synthesis.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

namespace recon {

namespace {

PointRep base_point(const ManifoldSpec& spec) {
  PointRep p;
  if (spec.kind == ManifoldKind::FlatTorus) {
    p.coords = Eigen::VectorXd::Zero(spec.n);
  } else {
    p.coords = Eigen::VectorXd::Zero(spec.n + 1);
    p.coords[spec.n] = spec.radius;
  }
  return p;
}

// Orthonormal ambient tangent vectors at p.
std::vector<Eigen::VectorXd> tangent_frame(const ManifoldSpec& spec, const PointRep& p) {
  std::vector<Eigen::VectorXd> out;
  if (spec.kind == ManifoldKind::FlatTorus) {
    for (int k = 0; k < spec.n; ++k) out.push_back(Eigen::VectorXd::Unit(spec.n, k));
    return out;
  }
  const Eigen::VectorXd normal = p.coords / p.coords.norm();
  const int dim = spec.n + 1;
  for (int k = 0; k < dim && static_cast<int>(out.size()) < spec.n; ++k) {
    Eigen::VectorXd v = Eigen::VectorXd::Unit(dim, k);
    v -= normal.dot(v) * normal;
    for (const auto& u : out) v -= u.dot(v) * u;
    const double nrm = v.norm();
    if (nrm > 1e-8) out.push_back(v / nrm);
  }
  return out;
}

PointRep midpoint(const ManifoldSpec& spec, const PointRep& a, const PointRep& b) {
  return exp_map(spec, a, 0.5 * log_map(spec, a, b));
}

// Point on the ray exp_c(t * u) whose distance to x0 equals `shell`, bracketed
// by [lo, hi] with a sign change of d(x0, .) - shell. Bisection to full
// precision; the callers choose brackets where the root is simple.
PointRep shell_crossing(const ManifoldSpec& spec, const PointRep& x0, const PointRep& c,
                        const Eigen::VectorXd& u, double shell, double lo, double hi) {
  auto g = [&](double t) { return geodesic_distance(spec, x0, exp_map(spec, c, t * u)) - shell; };
  double glo = g(lo);
  if (glo * g(hi) > 0.0) throw SamplingError("shell crossing bracket has no sign change");
  for (int it = 0; it < 90; ++it) {
    const double mid = 0.5 * (lo + hi);
    if ((g(mid) > 0.0) == (glo > 0.0)) {
      lo = mid;
      glo = g(mid);
    } else {
      hi = mid;
    }
  }
  return exp_map(spec, c, (0.5 * (lo + hi)) * u);
}

} // namespace

DataBundle synthesize_chart_bundle(const ManifoldSpec& spec, const ReconstructionParams& params,
                                   const ChartSupportOptions& opts, std::uint64_t seed) {
  spec.validate();
  params.validate();
  if (spec.kind == ManifoldKind::MeshGraph)
    throw CapabilityError("chart-support synthesis needs a smooth model manifold");
  if (params.bounds.n != 2 || spec.n != 2)
    throw CapabilityError("chart-support synthesis is implemented for dimension 2");
  if (opts.centers.empty()) throw InputError("chart-support synthesis needs at least one center");
  if (opts.frame_ring_points < 3) throw InputError("frame rings need at least 3 points");

  const double R = params.bounds.R;
  const double eps1 = params.eps1;
  const double s = params.s();
  const PointRep x0 = base_point(spec);
  const auto frame0 = tangent_frame(spec, x0);

  auto ring_points = [&](double rr, int count) {
    std::vector<PointRep> out;
    out.reserve(count);
    for (int k = 0; k < count; ++k) {
      const double phi = 2.0 * std::numbers::pi * double(k) / double(count);
      out.push_back(exp_map(spec, x0, rr * (std::cos(phi) * frame0[0] + std::sin(phi) * frame0[1])));
    }
    return out;
  };
  auto partner_count = [&](double rr) {
    const double circ = spec.kind == ManifoldKind::Sphere
                            ? 2.0 * std::numbers::pi * spec.radius * std::sin(rr / spec.radius)
                            : 2.0 * std::numbers::pi * rr;
    const double spacing = opts.partner_spacing_factor * std::sqrt(eps1);
    return std::max(opts.frame_ring_points, static_cast<int>(std::ceil(circ / spacing)));
  };

  bool need_outer = false, need_inner = false;
  for (const auto& c : opts.centers)
    (geodesic_distance(spec, x0, c) > R / 2.0 ? need_outer : need_inner) = true;

  DataBundle b;
  b.params = params;
  b.net_y.ball_center = x0;
  b.net_y.ball_radius = R;
  b.net_y.anchor_index = 0;
  auto& Y = b.net_y.points;
  Y.push_back(x0);

  struct Span {
    int begin = 0, end = 0;
  };
  auto add_ring = [&](std::vector<PointRep> pts) {
    Span sp;
    sp.begin = static_cast<int>(Y.size());
    for (auto& p : pts) Y.push_back(std::move(p));
    sp.end = static_cast<int>(Y.size());
    return sp;
  };

  // Outer charts read the frame tuple off N(R/8) with partners on N(R/4);
  // inner charts read the tuple off N(3R/4) with partners on N(R). Rings are
  // exact shells, so every member lands inside the annulus selectors.
  Span out_frame, out_partner, in_frame, in_partner;
  if (need_outer) {
    out_frame = add_ring(ring_points(R / 8.0, opts.frame_ring_points));
    out_partner = add_ring(ring_points(R / 4.0, partner_count(R / 4.0)));
  }
  if (need_inner) {
    in_frame = add_ring(ring_points(3.0 * R / 4.0, opts.frame_ring_points));
    in_partner = add_ring(ring_points(R, partner_count(R)));
  }

  // Background landmarks support surrogate distances but must stay out of the
  // shell annuli: without exact midpoint witnesses their surrogate distances
  // overestimate, which would let them displace exact shell points in the
  // tuple selection.
  const double shells[4] = {R / 8.0, R / 4.0, 3.0 * R / 4.0, R};
  for (auto& p : sample_net(spec, Region::ball(x0, R), opts.coarse_y_eps, seed ^ 0x9e3779b97f4a7c15ULL)) {
    const double d0 = geodesic_distance(spec, x0, p);
    bool near_shell = false;
    for (double sh : shells) near_shell = near_shell || std::abs(d0 - sh) < 6.0 * eps1;
    if (!near_shell) Y.push_back(std::move(p));
  }

  std::vector<PointRep> X;
  const int K = static_cast<int>(opts.centers.size());
  for (const auto& c : opts.centers) X.push_back(c);

  // Step supports: for each chosen frame direction, walk arc length s from the
  // center toward the q the alignment search will pick, so the step element the
  // search finds has a near-zero residual and an exact radial offset. With
  // exact_partners the aligned shell partner itself is planted on the exact
  // geodesic through (center, frame point), making the residuals exactly zero.
  std::vector<PointRep> partner_mids;
  for (const auto& c : opts.centers) {
    const bool outer = geodesic_distance(spec, x0, c) > R / 2.0;
    const Span frame = outer ? out_frame : in_frame;
    const Span partners = outer ? out_partner : in_partner;
    const double partner_shell = outer ? R / 4.0 : R;
    const int m = frame.end - frame.begin;
    const int kdirs = (opts.step_directions <= 0 || opts.step_directions >= m) ? m : opts.step_directions;
    for (int t = 0; t < kdirs; ++t) {
      const int f = frame.begin + static_cast<int>(static_cast<long long>(t) * m / kdirs);
      const PointRep fp = Y[f];
      const double dcf = geodesic_distance(spec, c, fp);
      PointRep q_point = fp; // inner case: the tuple members are themselves the q's
      if (opts.exact_partners) {
        Eigen::VectorXd u = log_map(spec, c, fp);
        u /= u.norm();
        PointRep partner;
        if (outer) {
          // q between the center and the frame point, on the inner shell
          partner = shell_crossing(spec, x0, c, u, partner_shell, 0.0, dcf);
          q_point = partner;
        } else {
          // p beyond the frame point, on the outer shell
          double hi = dcf + R;
          while (geodesic_distance(spec, x0, exp_map(spec, c, hi * u)) < partner_shell && hi < dcf + 6.0 * R)
            hi += R;
          partner = shell_crossing(spec, x0, c, u, partner_shell, dcf, hi);
        }
        partner_mids.push_back(midpoint(spec, fp, partner));
        Y.push_back(std::move(partner));
      } else if (outer) {
        double best = std::numeric_limits<double>::infinity();
        for (int j = partners.begin; j < partners.end; ++j) {
          const double res =
              std::abs(dcf - geodesic_distance(spec, c, Y[j]) - geodesic_distance(spec, fp, Y[j]));
          if (res < best) {
            best = res;
            q_point = Y[j];
          }
        }
      }
      Eigen::VectorXd dir = log_map(spec, c, q_point);
      const double len = dir.norm();
      if (!(len > s)) continue; // center too close to its q; skip this direction
      X.push_back(exp_map(spec, c, (s / len) * dir));
    }
  }
  for (auto& p : partner_mids) X.push_back(std::move(p));

  // Midpoint witnesses pin the surrogate Y-distance of every consulted pair to
  // the exact geodesic distance: anchor pairs (annulus membership), frame
  // pairs (tuple separation / candidate balls), frame-partner pairs
  // (alignment and step tests).
  for (int j = 1; j < static_cast<int>(Y.size()); ++j) X.push_back(midpoint(spec, x0, Y[j]));
  auto cross_mids = [&](Span A, Span B) {
    for (int a = A.begin; a < A.end; ++a)
      for (int bj = B.begin; bj < B.end; ++bj) X.push_back(midpoint(spec, Y[a], Y[bj]));
  };
  auto self_mids = [&](Span A) {
    for (int a = A.begin; a < A.end; ++a)
      for (int bj = a + 1; bj < A.end; ++bj) X.push_back(midpoint(spec, Y[a], Y[bj]));
  };
  if (need_outer) {
    self_mids(out_frame);
    cross_mids(out_frame, out_partner);
  }
  if (need_inner) {
    self_mids(in_frame);
    cross_mids(in_frame, in_partner);
  }

  if (opts.cluster_per_center > 0) {
    std::mt19937_64 rng(seed ^ 0xc0ffee1234567890ULL);
    std::uniform_real_distribution<double> uang(0.0, 2.0 * std::numbers::pi);
    std::uniform_real_distribution<double> urad(0.0, 1.0);
    const double rad_cap = opts.cluster_radius_factor * params.rho0;
    for (const auto& c : opts.centers) {
      const auto fr = tangent_frame(spec, c);
      for (int k = 0; k < opts.cluster_per_center; ++k) {
        const double phi = uang(rng);
        const double rad = rad_cap * std::sqrt(urad(rng));
        X.push_back(exp_map(spec, c, rad * (std::cos(phi) * fr[0] + std::sin(phi) * fr[1])));
      }
    }
  }

  b.vectors.reserve(X.size());
  for (const auto& x : X) {
    DistanceVector v;
    v.values.reserve(Y.size());
    for (const auto& y : Y) v.values.push_back(geodesic_distance(spec, x, y));
    b.vectors.push_back(std::move(v));
  }

  Provenance prov;
  prov.spec = spec;
  prov.x_points = std::move(X);
  const int reports = (opts.report_count <= 0 || opts.report_count >= K) ? K : opts.report_count;
  for (int t = 0; t < reports; ++t)
    prov.report_indices.push_back(static_cast<int>(static_cast<long long>(t) * K / reports));
  b.provenance = std::move(prov);
  b.validate();
  return b;
}

} // namespace recon
