#include "recon/bundle.hpp"

#include <algorithm>
#include <cmath>
#include <random>

namespace recon {

void DataBundle::validate() const {
  params.validate();
  if (vectors.empty()) throw InputError("bundle has no distance vectors");
  if (net_y.points.empty()) throw InputError("bundle has no landmarks");
  if (net_y.anchor_index < 0 || net_y.anchor_index >= net_y.J())
    throw InputError("anchor index out of range");
  const double cap = params.bounds.lambda + params.eps1;
  for (const auto& v : vectors) {
    if (static_cast<int>(v.values.size()) != net_y.J())
      throw InputError("distance vector length does not match |Y|");
    for (double x : v.values)
      if (!(x >= 0.0) || !(x <= cap)) throw InputError("distance entry outside [0, lambda + eps1]");
  }
}

double sup_distance(const DistanceVector& a, const DistanceVector& b) {
  if (a.values.size() != b.values.size()) throw InputError("sup_distance length mismatch");
  double m = 0.0;
  for (std::size_t j = 0; j < a.values.size(); ++j)
    m = std::max(m, std::abs(a.values[j] - b.values[j]));
  return m;
}

double sup_distance_above(const DistanceVector& a, const DistanceVector& b, double cap) {
  if (a.values.size() != b.values.size()) throw InputError("sup_distance length mismatch");
  double m = 0.0;
  for (std::size_t j = 0; j < a.values.size(); ++j) {
    m = std::max(m, std::abs(a.values[j] - b.values[j]));
    if (m > cap) return m;
  }
  return m;
}

DataBundle synthesize_bundle(const ManifoldSpec& spec, const ReconstructionParams& params,
                             NoiseSpec noise, std::uint64_t seed, const NetOptions& opts) {
  params.validate();
  spec.validate();
  if (noise.model != NoiseModel::None && (!(noise.bound > 0.0) || noise.bound >= params.eps1))
    throw InputError("noise bound must lie in (0, eps1)");

  std::mt19937_64 rng(seed);
  PointRep x0 = sample_uniform_point(spec, rng);

  DataBundle b;
  b.params = params;
  b.net_y.ball_center = x0;
  b.net_y.ball_radius = params.bounds.R;

  auto ynet = sample_net(spec, Region::ball(x0, params.bounds.R), params.eps0, seed ^ 0x9e3779b97f4a7c15ULL, opts);
  // Anchor: place x0 itself as y0 (d(x0, y0) = 0 < eps0), then the sampled net.
  b.net_y.points.push_back(x0);
  b.net_y.anchor_index = 0;
  for (auto& y : ynet) b.net_y.points.push_back(std::move(y));

  auto xnet = sample_net(spec, Region::whole(), params.eps0, seed ^ 0xdeadbeefcafef00dULL, opts);

  std::uniform_real_distribution<double> u(-1.0, 1.0);
  std::bernoulli_distribution coin(0.5);
  const double extreme = noise.bound * (1.0 - std::pow(2.0, -52));

  b.vectors.reserve(xnet.size());
  for (const auto& x : xnet) {
    DistanceVector v;
    v.values.reserve(b.net_y.points.size());
    for (const auto& y : b.net_y.points) {
      double d = geodesic_distance(spec, x, y);
      switch (noise.model) {
        case NoiseModel::None:
          break;
        case NoiseModel::Uniform:
          d += noise.bound * u(rng);
          break;
        case NoiseModel::AdversarialExtremes:
          d += coin(rng) ? extreme : -extreme;
          break;
      }
      v.values.push_back(std::max(d, 0.0));
    }
    b.vectors.push_back(std::move(v));
  }

  Provenance prov;
  prov.spec = spec;
  prov.x_points = std::move(xnet);
  b.provenance = std::move(prov);
  b.validate();
  return b;
}

double SurrogateYDistances::compute(int j, int k) const {
  double best = std::numeric_limits<double>::infinity();
  const int I = view_.I();
  for (int i = 0; i < I; ++i) best = std::min(best, view_.r(i, j) + view_.r(i, k));
  return best;
}

SurrogateYDistances SurrogateYDistances::full(BundleView view) {
  SurrogateYDistances s;
  s.view_ = view;
  s.J_ = view.J();
  const std::size_t J = static_cast<std::size_t>(s.J_);
  s.full_.assign(J * J, std::numeric_limits<double>::infinity());
  // min-plus accumulation with contiguous inner loops: one pass per vector.
  for (int i = 0; i < view.I(); ++i) {
    const double* r = view.vec(i).values.data();
    for (std::size_t j = 0; j < J; ++j) {
      double* row = s.full_.data() + j * J;
      const double rj = r[j];
      for (std::size_t k = j; k < J; ++k) row[k] = std::min(row[k], rj + r[k]);
    }
  }
  for (std::size_t j = 0; j < J; ++j)
    for (std::size_t k = 0; k < j; ++k) s.full_[j * J + k] = s.full_[k * J + j];
  return s;
}

SurrogateYDistances SurrogateYDistances::lazy(BundleView view) {
  SurrogateYDistances s;
  s.view_ = view;
  s.J_ = view.J();
  return s;
}

double SurrogateYDistances::operator()(int j, int k) const {
  if (j < 0 || k < 0 || j >= J_ || k >= J_) throw InputError("surrogate distance index out of range");
  if (!full_.empty()) return full_[static_cast<std::size_t>(j) * J_ + k];
  const std::uint64_t key = (static_cast<std::uint64_t>(std::min(j, k)) << 32) | static_cast<std::uint32_t>(std::max(j, k));
  auto it = cache_.find(key);
  if (it != cache_.end()) return it->second;
  const double v = compute(j, k);
  cache_.emplace(key, v);
  return v;
}

SurrogateYDistances compute_DaY(const DataBundle& bundle) {
  if (bundle.vectors.empty()) throw InputError("bundle has no distance vectors");
  return SurrogateYDistances::full(bundle.view());
}

A1A2Report check_a1_a2(const DataBundle& bundle, std::size_t probe_count, std::uint64_t seed) {
  if (!bundle.provenance) throw CapabilityError("check_a1_a2 needs synthetic provenance");
  const auto& prov = *bundle.provenance;
  const double eps1 = bundle.params.eps1;

  A1A2Report rep;
  // (a1): each vector stays within eps1 of its provenance point's distances.
  for (std::size_t i = 0; i < bundle.vectors.size(); ++i) {
    double worst = 0.0;
    int worst_j = -1;
    for (int j = 0; j < bundle.net_y.J(); ++j) {
      const double d = geodesic_distance(prov.spec, prov.x_points[i], bundle.net_y.points[j]);
      const double e = std::abs(bundle.vectors[i].values[j] - d);
      if (e > worst) {
        worst = e;
        worst_j = j;
      }
    }
    rep.a1_worst = std::max(rep.a1_worst, worst);
    if (worst >= eps1)
      rep.violations.push_back("(a1) vector " + std::to_string(i) + " off by " + std::to_string(worst) +
                               " at landmark " + std::to_string(worst_j));
  }

  // (a2): every probe point has a vector eps1-close in sup norm to its own
  // restricted distance function.
  std::mt19937_64 rng(seed);
  DistanceVector probe_vec;
  probe_vec.values.resize(bundle.net_y.J());
  for (std::size_t p = 0; p < probe_count; ++p) {
    PointRep probe = sample_uniform_point(prov.spec, rng);
    for (int j = 0; j < bundle.net_y.J(); ++j)
      probe_vec.values[j] = geodesic_distance(prov.spec, probe, bundle.net_y.points[j]);
    double best = std::numeric_limits<double>::infinity();
    for (const auto& v : bundle.vectors) {
      best = std::min(best, sup_distance_above(probe_vec, v, best));
      if (best < eps1 * 0.5) break;
    }
    rep.a2_worst = std::max(rep.a2_worst, best);
    if (best >= eps1) rep.violations.push_back("(a2) probe " + std::to_string(p) + " uncovered: " + std::to_string(best));
  }
  rep.probes = probe_count;
  rep.passed = rep.violations.empty();
  return rep;
}

} // namespace recon
