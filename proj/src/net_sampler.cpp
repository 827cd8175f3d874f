#include <cmath>
#include <random>

#include "recon/geometry.hpp"

namespace recon {

bool region_contains(const ManifoldSpec& spec, const Region& region, const PointRep& p) {
  switch (region.kind) {
    case RegionKind::Whole:
      return true;
    case RegionKind::Ball:
      return geodesic_distance(spec, region.center, p) <= region.radius;
    case RegionKind::BallComplement:
      return geodesic_distance(spec, region.center, p) > region.radius;
  }
  return false;
}

PointRep sample_uniform_point(const ManifoldSpec& spec, std::mt19937_64& rng) {
  switch (spec.kind) {
    case ManifoldKind::FlatTorus: {
      std::uniform_real_distribution<double> u(0.0, 1.0);
      Eigen::VectorXd f(spec.n);
      for (int i = 0; i < spec.n; ++i) f[i] = u(rng);
      return {f};
    }
    case ManifoldKind::Sphere: {
      std::normal_distribution<double> g(0.0, 1.0);
      Eigen::VectorXd v(spec.n + 1);
      double nrm = 0.0;
      do {
        for (int i = 0; i <= spec.n; ++i) v[i] = g(rng);
        nrm = v.norm();
      } while (nrm < 1e-12);
      return {Eigen::VectorXd(spec.radius * v / nrm)};
    }
    case ManifoldKind::MeshGraph: {
      std::uniform_int_distribution<int> u(0, static_cast<int>(spec.mesh.vertices.size()) - 1);
      Eigen::VectorXd idx(1);
      idx[0] = u(rng);
      return {idx};
    }
  }
  throw CapabilityError("unknown manifold kind");
}

std::vector<PointRep> sample_net(const ManifoldSpec& spec, const Region& region, double epsilon,
                                 std::uint64_t seed, const NetOptions& opts) {
  if (epsilon <= 0) throw InputError("net epsilon must be positive");
  if (region.kind == RegionKind::Ball && region.radius >= spec.injectivity_radius() &&
      spec.kind != ManifoldKind::MeshGraph && spec.kind != ManifoldKind::Sphere)
    throw InputError("ball radius must stay below the injectivity radius");

  std::mt19937_64 rng(seed);
  std::vector<PointRep> kept;
  const double spacing = opts.spacing_factor * epsilon;

  auto covered = [&](const PointRep& x) {
    for (const auto& k : kept)
      if (geodesic_distance(spec, k, x) <= epsilon) return true;
    return false;
  };

  // Rough volume-based lower bound on the net size; trips the cap early for
  // absurd epsilon instead of looping.
  {
    const double diam = spec.diameter();
    double vol_ratio = std::pow(diam / epsilon, spec.n);
    if (vol_ratio > 16.0 * static_cast<double>(opts.cardinality_cap))
      throw ResourceError("net cardinality would exceed the configured cap");
  }

  int rounds_without_progress = 0;
  while (true) {
    bool accepted_any = false;
    const std::size_t batch = 64 + kept.size() / 2;
    for (std::size_t b = 0; b < batch; ++b) {
      PointRep cand = sample_uniform_point(spec, rng);
      if (!region_contains(spec, region, cand)) continue;
      bool ok = true;
      for (const auto& k : kept)
        if (geodesic_distance(spec, k, cand) < spacing) {
          ok = false;
          break;
        }
      if (ok) {
        kept.push_back(std::move(cand));
        accepted_any = true;
        if (kept.size() > opts.cardinality_cap)
          throw ResourceError("net cardinality exceeded the configured cap");
      }
    }
    if (!accepted_any) {
      if (++rounds_without_progress < 3) continue;
      // Saturated at the current spacing; verify coverage by probing.
      bool all_covered = true;
      for (std::size_t i = 0; i < opts.probe_count; ++i) {
        PointRep probe = sample_uniform_point(spec, rng);
        if (!region_contains(spec, region, probe)) continue;
        if (!covered(probe)) {
          kept.push_back(std::move(probe));
          all_covered = false;
          if (kept.size() > opts.cardinality_cap)
            throw ResourceError("net cardinality exceeded the configured cap");
        }
      }
      if (all_covered) return kept;
      rounds_without_progress = 0;
    } else {
      rounds_without_progress = 0;
    }
  }
}

} // namespace recon
