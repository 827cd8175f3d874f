#include "recon/heat.hpp"

#include <algorithm>
#include <cmath>
#include <random>

namespace recon {

void KernelSampleSet::validate() const {
  if (times.empty() || z_points.empty() || y_indices.empty())
    throw InputError("kernel sample set needs sources, landmarks and times");
  for (double t : times)
    if (!(t > 0.0) || !(t < 1.0)) throw InputError("kernel times must lie in (0, 1)");
  if (sigma < 0.0) throw InputError("sigma must be nonnegative");
  if (static_cast<int>(log_values.size()) != Z()) throw InputError("log_values z extent mismatch");
  for (const auto& per_y : log_values) {
    if (static_cast<int>(per_y.size()) != Jy()) throw InputError("log_values y extent mismatch");
    for (const auto& per_t : per_y)
      if (static_cast<int>(per_t.size()) != T()) throw InputError("log_values t extent mismatch");
  }
}

KernelSampleSet corrupt_kernel(const ManifoldSpec& spec, const NetY& y_net,
                               const std::vector<PointRep>& z_net, const std::vector<double>& times,
                               double sigma, NoiseProfile profile, std::uint64_t seed,
                               KernelCaseTag tag) {
  spec.validate();
  if (sigma < 0.0) throw InputError("sigma must be nonnegative");
  for (double t : times)
    if (!(t > 0.0) || !(t < 1.0)) throw InputError("kernel times must lie in (0, 1)");

  KernelSampleSet s;
  s.sigma = sigma;
  s.case_tag = tag;
  s.times = times;
  s.z_points = z_net;
  s.y_indices.resize(y_net.J());
  for (int j = 0; j < y_net.J(); ++j) s.y_indices[j] = j;

  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  std::bernoulli_distribution coin(0.5);
  const double tight = 1.0 - std::pow(2.0, -52);

  s.log_values.assign(s.Z(), std::vector<std::vector<double>>(s.Jy(), std::vector<double>(s.T())));
  for (int i = 0; i < s.Z(); ++i)
    for (int j = 0; j < s.Jy(); ++j)
      for (int k = 0; k < s.T(); ++k) {
        const double t = times[k];
        double lg = heat_kernel_log(spec, z_net[i], y_net.points[s.y_indices[j]], t);
        if (sigma > 0.0) {
          const double amp = sigma / t;
          lg += profile == NoiseProfile::WorstCaseSign ? (coin(rng) ? amp : -amp) * tight
                                                       : amp * u(rng);
        }
        if (!std::isfinite(lg)) throw DomainError("kernel log sample is not finite");
        s.log_values[i][j][k] = lg;
      }
  return s;
}

namespace {

double estimate(double log_value, double t) {
  return std::sqrt(std::max(0.0, -4.0 * t * log_value));
}

} // namespace

TSelection select_t(const KernelSampleSet& samples, const ManifoldSpec*) {
  samples.validate();

  std::vector<int> order(samples.T());
  for (int k = 0; k < samples.T(); ++k) order[k] = k;
  std::sort(order.begin(), order.end(),
            [&](int a, int b) { return samples.times[a] < samples.times[b]; });

  const bool capped = samples.sigma > 0.0;
  if (capped && samples.times[order.front()] > samples.sigma)
    throw SelectionError("no candidate time at or below sigma; refine the time grid");
  if (samples.T() < 3) throw InputError("time selection needs at least 3 candidate times");

  // spread between consecutive grid points: the estimates of a stable t regime
  // barely move when t changes
  auto spread_between = [&](int ka, int kb) {
    double m = 0.0;
    for (int i = 0; i < samples.Z(); ++i)
      for (int j = 0; j < samples.Jy(); ++j)
        m = std::max(m, std::abs(estimate(samples.log_values[i][j][ka], samples.times[ka]) -
                                 estimate(samples.log_values[i][j][kb], samples.times[kb])));
    return m;
  };

  TSelection sel;
  for (std::size_t r = 0; r < order.size(); ++r) {
    TSelection::Candidate c;
    c.t = samples.times[order[r]];
    const std::size_t partner = r + 1 < order.size() ? r + 1 : r - 1;
    c.spread = spread_between(order[r], order[partner]);
    c.eligible = capped ? c.t <= samples.sigma : r == 0;
    sel.diagnostics.push_back(c);
  }

  const TSelection::Candidate* best = nullptr;
  for (const auto& c : sel.diagnostics)
    if (c.eligible && (!best || c.spread < best->spread)) best = &c;
  sel.t_star = best->t;
  return sel;
}

KernelDistanceEstimates distances_from_kernel(const KernelSampleSet& samples, const TSelection& t_sel) {
  samples.validate();
  if (!(t_sel.t_star > 0.0) || !(t_sel.t_star < 1.0)) throw InputError("t_star must lie in (0, 1)");
  int k_star = -1;
  for (int k = 0; k < samples.T(); ++k)
    if (samples.times[k] == t_sel.t_star) k_star = k;
  if (k_star < 0) throw InputError("t_star is not on the sample grid");

  KernelDistanceEstimates est;
  est.t_star = t_sel.t_star;
  est.values.assign(samples.Z(), std::vector<double>(samples.Jy(), 0.0));
  for (int i = 0; i < samples.Z(); ++i)
    for (int j = 0; j < samples.Jy(); ++j) {
      const double lg = samples.log_values[i][j][k_star];
      if (lg >= 0.0) {
        est.clamped.push_back({i, j});
        continue;
      }
      est.values[i][j] = estimate(lg, t_sel.t_star);
    }
  return est;
}

DataBundle assemble_bundle_from_kernel(const KernelSampleSet& samples,
                                       const KernelDistanceEstimates& estimates, DYSource source,
                                       const ReconstructionParams& params, const NetY& y_net,
                                       const std::vector<std::vector<double>>* dY,
                                       const ManifoldSpec* provenance_spec) {
  samples.validate();
  if (static_cast<int>(estimates.values.size()) != samples.Z())
    throw InputError("estimate table does not match the sample set");

  DataBundle b;
  b.params = params;
  if (samples.sigma > 0.0) {
    b.params.eps1 = 7.0 * std::sqrt(samples.sigma);
    b.params.eps0 = std::min(b.params.eps0, b.params.eps1);
  }
  b.params.sigma = samples.sigma;
  b.params.validate();

  // landmark subset in sample order, anchor remapped
  b.net_y.ball_center = y_net.ball_center;
  b.net_y.ball_radius = y_net.ball_radius;
  b.net_y.anchor_index = -1;
  for (int j = 0; j < samples.Jy(); ++j) {
    const int src = samples.y_indices[j];
    if (src < 0 || src >= y_net.J()) throw InputError("landmark index out of range");
    if (src == y_net.anchor_index) b.net_y.anchor_index = j;
    b.net_y.points.push_back(y_net.points[src]);
  }
  if (b.net_y.anchor_index < 0) throw InputError("the anchor landmark is missing from the samples");

  const double cap = b.params.bounds.lambda + b.params.eps1;
  auto clamp = [&](double d) { return std::min(std::max(d, 0.0), cap); };

  std::vector<PointRep> x_points;
  for (int i = 0; i < samples.Z(); ++i) {
    DistanceVector v;
    v.values.reserve(samples.Jy());
    for (int j = 0; j < samples.Jy(); ++j) v.values.push_back(clamp(estimates.values[i][j]));
    b.vectors.push_back(std::move(v));
    x_points.push_back(samples.z_points[i]);
  }

  if (source == DYSource::Given) {
    // case (i): the landmarks double as hidden points with supplied distances
    if (!dY) throw InputError("case (i) assembly needs the landmark distance table");
    if (static_cast<int>(dY->size()) != samples.Jy())
      throw InputError("landmark distance table has the wrong extent");
    for (int j = 0; j < samples.Jy(); ++j) {
      if (static_cast<int>((*dY)[j].size()) != samples.Jy())
        throw InputError("landmark distance table has the wrong extent");
      DistanceVector v;
      v.values.reserve(samples.Jy());
      for (int k = 0; k < samples.Jy(); ++k) v.values.push_back(clamp((*dY)[j][k]));
      b.vectors.push_back(std::move(v));
      x_points.push_back(b.net_y.points[j]);
    }
  }

  if (provenance_spec) {
    Provenance prov;
    prov.spec = *provenance_spec;
    prov.x_points = std::move(x_points);
    b.provenance = std::move(prov);
  }
  b.validate();
  return b;
}

} // namespace recon
