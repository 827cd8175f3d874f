#include "recon/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <queue>

namespace recon {

namespace {

double frac01(double x) {
  double f = x - std::floor(x);
  if (f >= 1.0) f = 0.0;
  return f;
}

// Enumerate integer offsets k with |k|_inf <= w and return min |B*(dfrac + k)|.
double torus_min_norm(const Eigen::MatrixXd& B, const Eigen::VectorXd& dfrac, int w) {
  const int n = static_cast<int>(dfrac.size());
  Eigen::VectorXi k = Eigen::VectorXi::Constant(n, -w);
  double best = std::numeric_limits<double>::infinity();
  Eigen::VectorXd shifted(n);
  while (true) {
    for (int d = 0; d < n; ++d) shifted[d] = dfrac[d] + k[d];
    best = std::min(best, (B * shifted).norm());
    int d = 0;
    while (d < n && k[d] == w) k[d++] = -w;
    if (d == n) break;
    ++k[d];
  }
  return best;
}

bool basis_is_diagonal(const Eigen::MatrixXd& B) {
  for (int i = 0; i < B.rows(); ++i)
    for (int j = 0; j < B.cols(); ++j)
      if (i != j && B(i, j) != 0.0) return false;
  return true;
}

int torus_window(const ManifoldSpec& spec) {
  // |k|_inf <= ceil(diam * ||B^-1||) + 1 guarantees the minimizer is inside.
  const Eigen::MatrixXd Binv = spec.basis.inverse();
  const double opnorm = Binv.jacobiSvd().singularValues()(0);
  return static_cast<int>(std::ceil(spec.diameter() * opnorm)) + 1;
}

double mesh_dijkstra(const MeshData& mesh, int s, int t) {
  const std::size_t V = mesh.vertices.empty() ? [&] {
    int vmax = -1;
    for (const auto& e : mesh.edges) vmax = std::max({vmax, e.a, e.b});
    return static_cast<std::size_t>(vmax + 1);
  }() : mesh.vertices.size();
  if (s < 0 || t < 0 || static_cast<std::size_t>(s) >= V || static_cast<std::size_t>(t) >= V)
    throw InputError("mesh vertex index out of range");
  std::vector<std::vector<std::pair<int, double>>> adj(V);
  for (const auto& e : mesh.edges) {
    adj[e.a].push_back({e.b, e.weight});
    adj[e.b].push_back({e.a, e.weight});
  }
  std::vector<double> dist(V, std::numeric_limits<double>::infinity());
  using QE = std::pair<double, int>;
  std::priority_queue<QE, std::vector<QE>, std::greater<QE>> pq;
  dist[s] = 0.0;
  pq.push({0.0, s});
  while (!pq.empty()) {
    auto [d, u] = pq.top();
    pq.pop();
    if (d > dist[u]) continue;
    if (u == t) return d;
    for (auto [v, w] : adj[u])
      if (dist[u] + w < dist[v]) {
        dist[v] = dist[u] + w;
        pq.push({dist[v], v});
      }
  }
  throw InputError("mesh graph is disconnected between the query vertices");
}

} // namespace

void GeometryBounds::validate() const {
  if (lambda < 1.0) throw InputError("lambda must be >= 1");
  if (!(R > 1.0 / lambda)) throw InputError("R must exceed 1/lambda");
  if (n < 2) throw InputError("dimension must be >= 2");
}

ManifoldSpec ManifoldSpec::flat_torus(const Eigen::MatrixXd& basis) {
  ManifoldSpec s;
  s.kind = ManifoldKind::FlatTorus;
  s.n = static_cast<int>(basis.rows());
  s.basis = basis;
  s.validate();
  return s;
}

ManifoldSpec ManifoldSpec::sphere(double radius, int n) {
  ManifoldSpec s;
  s.kind = ManifoldKind::Sphere;
  s.n = n;
  s.radius = radius;
  s.validate();
  return s;
}

ManifoldSpec ManifoldSpec::mesh_graph(MeshData mesh) {
  ManifoldSpec s;
  s.kind = ManifoldKind::MeshGraph;
  s.mesh = std::move(mesh);
  s.n = 2;
  s.validate();
  return s;
}

void ManifoldSpec::validate() const {
  switch (kind) {
    case ManifoldKind::FlatTorus: {
      if (basis.rows() != basis.cols() || basis.rows() < 2) throw InputError("torus basis must be square, n >= 2");
      if (std::abs(basis.determinant()) < 1e-12) throw InputError("torus lattice basis must be invertible");
      break;
    }
    case ManifoldKind::Sphere:
      if (radius <= 0) throw InputError("sphere radius must be positive");
      if (n < 2) throw InputError("sphere dimension must be >= 2");
      break;
    case ManifoldKind::MeshGraph:
      for (const auto& e : mesh.edges)
        if (e.weight <= 0) throw InputError("mesh edge weights must be strictly positive");
      break;
  }
}

double ManifoldSpec::diameter() const {
  switch (kind) {
    case ManifoldKind::FlatTorus: {
      // Half the longest diagonal of the fundamental cell bounds the diameter.
      const int nn = static_cast<int>(basis.rows());
      double best = 0.0;
      Eigen::VectorXd c(nn);
      for (long m = 0; m < (1L << nn); ++m) {
        for (int d = 0; d < nn; ++d) c[d] = (m >> d) & 1 ? 0.5 : -0.5;
        best = std::max(best, (basis * c).norm());
      }
      return best;
    }
    case ManifoldKind::Sphere:
      return std::numbers::pi * radius;
    case ManifoldKind::MeshGraph: {
      double total = 0.0;
      for (const auto& e : mesh.edges) total += e.weight;
      return total;
    }
  }
  return 0.0;
}

double ManifoldSpec::injectivity_radius() const {
  switch (kind) {
    case ManifoldKind::FlatTorus: {
      // Half the shortest nonzero lattice vector.
      const int w = 2;
      double best = std::numeric_limits<double>::infinity();
      const int nn = static_cast<int>(basis.rows());
      Eigen::VectorXi k = Eigen::VectorXi::Constant(nn, -w);
      Eigen::VectorXd kk(nn);
      while (true) {
        bool zero = true;
        for (int d = 0; d < nn; ++d) {
          kk[d] = k[d];
          zero = zero && k[d] == 0;
        }
        if (!zero) best = std::min(best, (basis * kk).norm());
        int d = 0;
        while (d < nn && k[d] == w) k[d++] = -w;
        if (d == nn) break;
        ++k[d];
      }
      return best / 2.0;
    }
    case ManifoldKind::Sphere:
      return std::numbers::pi * radius;
    case ManifoldKind::MeshGraph:
      return 0.0;
  }
  return 0.0;
}

bool ManifoldSpec::satisfies_bounds(const GeometryBounds& gb) const {
  const double sec = kind == ManifoldKind::Sphere ? 1.0 / (radius * radius) : 0.0;
  return diameter() <= gb.lambda && injectivity_radius() >= 1.0 / gb.lambda && sec <= gb.lambda * gb.lambda;
}

double geodesic_distance(const ManifoldSpec& spec, const PointRep& p, const PointRep& q) {
  switch (spec.kind) {
    case ManifoldKind::FlatTorus: {
      if (p.coords.size() != spec.n || q.coords.size() != spec.n) throw InputError("torus point dimension mismatch");
      Eigen::VectorXd d = q.coords - p.coords;
      for (int i = 0; i < d.size(); ++i) d[i] = d[i] - std::round(d[i]);
      // Diagonal lattice: coordinates decouple and the rounded offset is the
      // exact minimizer, no window search needed.
      if (basis_is_diagonal(spec.basis)) {
        double s2 = 0.0;
        for (int i = 0; i < d.size(); ++i) {
          const double v = spec.basis(i, i) * d[i];
          s2 += v * v;
        }
        return std::sqrt(s2);
      }
      return torus_min_norm(spec.basis, d, torus_window(spec));
    }
    case ManifoldKind::Sphere: {
      if (p.coords.size() != spec.n + 1 || q.coords.size() != spec.n + 1) throw InputError("sphere point dimension mismatch");
      // Chord-based formula: full precision near coincident and antipodal
      // points, where acos of the normalized dot product loses half the digits.
      const double r = spec.radius;
      const double c = p.coords.dot(q.coords);
      if (c >= 0.0) {
        const double chord = (p.coords - q.coords).norm();
        return 2.0 * r * std::asin(std::min(1.0, chord / (2.0 * r)));
      }
      const double antichord = (p.coords + q.coords).norm();
      return r * (std::numbers::pi - 2.0 * std::asin(std::min(1.0, antichord / (2.0 * r))));
    }
    case ManifoldKind::MeshGraph:
      return mesh_dijkstra(spec.mesh, p.mesh_index(), q.mesh_index());
  }
  throw CapabilityError("unknown manifold kind");
}

Eigen::VectorXd log_map(const ManifoldSpec& spec, const PointRep& p, const PointRep& q) {
  switch (spec.kind) {
    case ManifoldKind::FlatTorus: {
      Eigen::VectorXd d = q.coords - p.coords;
      for (int i = 0; i < d.size(); ++i) d[i] = d[i] - std::round(d[i]);
      if (basis_is_diagonal(spec.basis)) return spec.basis * d;
      const int w = torus_window(spec);
      const int n = static_cast<int>(d.size());
      Eigen::VectorXi k = Eigen::VectorXi::Constant(n, -w);
      double best = std::numeric_limits<double>::infinity();
      Eigen::VectorXd best_v = spec.basis * d;
      Eigen::VectorXd shifted(n);
      while (true) {
        for (int dd = 0; dd < n; ++dd) shifted[dd] = d[dd] + k[dd];
        Eigen::VectorXd v = spec.basis * shifted;
        if (v.norm() < best) {
          best = v.norm();
          best_v = v;
        }
        int dd = 0;
        while (dd < n && k[dd] == w) k[dd++] = -w;
        if (dd == n) break;
        ++k[dd];
      }
      return best_v;
    }
    case ManifoldKind::Sphere: {
      const double r = spec.radius;
      const double theta = geodesic_distance(spec, p, q) / r;
      Eigen::VectorXd perp = q.coords - (p.coords.dot(q.coords) / (r * r)) * p.coords;
      const double pn = perp.norm();
      if (pn < 1e-300) return Eigen::VectorXd::Zero(p.coords.size());
      return (r * theta / pn) * perp;
    }
    case ManifoldKind::MeshGraph:
      throw CapabilityError("log_map is not available on mesh oracles");
  }
  throw CapabilityError("unknown manifold kind");
}

PointRep exp_map(const ManifoldSpec& spec, const PointRep& p, const Eigen::VectorXd& v) {
  switch (spec.kind) {
    case ManifoldKind::FlatTorus: {
      Eigen::VectorXd f = p.coords + spec.basis.inverse() * v;
      for (int i = 0; i < f.size(); ++i) f[i] = frac01(f[i]);
      return {f};
    }
    case ManifoldKind::Sphere: {
      const double r = spec.radius;
      const double vn = v.norm();
      if (vn < 1e-300) return p;
      Eigen::VectorXd out = std::cos(vn / r) * p.coords + (r * std::sin(vn / r) / vn) * v;
      out *= r / out.norm();
      return {out};
    }
    case ManifoldKind::MeshGraph:
      throw CapabilityError("exp_map is not available on mesh oracles");
  }
  throw CapabilityError("unknown manifold kind");
}

double hyperbolic_law_of_cosines(double a_side, double b_side, double angle, double lambda) {
  if (a_side < 0 || b_side < 0) throw InputError("triangle sides must be nonnegative");
  if (angle < 0 || angle > std::numbers::pi) throw InputError("angle must lie in [0, pi]");
  if (lambda <= 0) throw InputError("lambda must be positive");
  // cosh(Lc) - 1 assembled from cancellation-free pieces.
  const double sh_half = std::sinh(lambda * (a_side - b_side) / 2.0);
  const double s_half = std::sin(angle / 2.0);
  double u = 2.0 * sh_half * sh_half + 2.0 * std::sinh(lambda * a_side) * std::sinh(lambda * b_side) * s_half * s_half;
  u = std::max(u, 0.0);
  return std::log1p(u + std::sqrt(u * (u + 2.0))) / lambda;
}

} // namespace recon
