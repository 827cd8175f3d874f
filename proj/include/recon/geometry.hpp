#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "recon/errors.hpp"

namespace recon {

struct GeometryBounds {
  double lambda = 1.0; // diameter / curvature / injectivity bound, >= 1
  double R = 1.0;      // radius of the observation ball U, > 1/lambda
  int n = 2;           // dimension, >= 2

  void validate() const;
};

enum class ManifoldKind { FlatTorus, Sphere, MeshGraph };

// Torus points: fundamental-domain fractional coordinates in [0,1)^n.
// Sphere points: embedding vectors of norm `radius` in R^{n+1}.
// Mesh points: 1-vector holding the vertex index.
struct PointRep {
  Eigen::VectorXd coords;

  int mesh_index() const { return static_cast<int>(coords[0]); }
};

struct MeshEdge {
  int a;
  int b;
  double weight;
};

struct MeshData {
  std::vector<Eigen::VectorXd> vertices;
  std::vector<MeshEdge> edges;
};

struct ManifoldSpec {
  ManifoldKind kind = ManifoldKind::FlatTorus;
  int n = 2;
  Eigen::MatrixXd basis; // FlatTorus lattice basis, n x n, invertible
  double radius = 1.0;   // Sphere
  MeshData mesh;

  static ManifoldSpec flat_torus(const Eigen::MatrixXd& basis);
  static ManifoldSpec sphere(double radius, int n);
  static ManifoldSpec mesh_graph(MeshData mesh);

  void validate() const;
  double diameter() const;
  double injectivity_radius() const;
  // Checks the class bounds diam <= lambda, inj >= 1/lambda, |Sec| <= lambda^2.
  bool satisfies_bounds(const GeometryBounds& gb) const;
};

double geodesic_distance(const ManifoldSpec& spec, const PointRep& p, const PointRep& q);

// Tangent vector at p pointing to q with length d(p,q). Torus: ambient minimal
// translate B*(q-p+k). Sphere: tangent in the embedding. Mesh: unsupported.
Eigen::VectorXd log_map(const ManifoldSpec& spec, const PointRep& p, const PointRep& q);
PointRep exp_map(const ManifoldSpec& spec, const PointRep& p, const Eigen::VectorXd& v);

enum class RegionKind { Whole, Ball, BallComplement };

struct Region {
  RegionKind kind = RegionKind::Whole;
  PointRep center;
  double radius = 0.0;

  static Region whole() { return {}; }
  static Region ball(PointRep c, double r) { return {RegionKind::Ball, std::move(c), r}; }
  static Region complement(PointRep c, double r) { return {RegionKind::BallComplement, std::move(c), r}; }
};

struct NetOptions {
  std::size_t cardinality_cap = 200000;
  std::size_t probe_count = 4000;
  double spacing_factor = 1.0; // minimum pairwise spacing, as a fraction of epsilon
};

bool region_contains(const ManifoldSpec& spec, const Region& region, const PointRep& p);
PointRep sample_uniform_point(const ManifoldSpec& spec, std::mt19937_64& rng);

std::vector<PointRep> sample_net(const ManifoldSpec& spec, const Region& region, double epsilon,
                                 std::uint64_t seed, const NetOptions& opts = {});

struct HeatKernelEval {
  double log_value = 0.0;
  std::string method;       // "images", "spectral", "small_t_surrogate"
  int terms = 0;            // terms / lattice window actually used
  double tail_bound = 0.0;  // certified relative truncation bound (images/spectral)
  double error_estimate = 0.0; // total relative error estimate incl. rounding
};

HeatKernelEval heat_kernel_log_eval(const ManifoldSpec& spec, const PointRep& p, const PointRep& q, double t);
double heat_kernel_log(const ManifoldSpec& spec, const PointRep& p, const PointRep& q, double t);

double hyperbolic_law_of_cosines(double a_side, double b_side, double angle, double lambda);

struct FirstVariationReport {
  double max_ratio = 0.0;       // max LHS / (|xy| delta^{1/4} + |xy|^{4/3})
  double max_lhs = 0.0;
  std::size_t samples_used = 0;
  std::size_t samples_requested = 0;
  bool unbounded_growth = false; // ratio kept growing across sample quartiles
};

FirstVariationReport check_first_variation_bound(const ManifoldSpec& spec, std::size_t samples,
                                                 std::uint64_t seed, const GeometryBounds& params);

} // namespace recon
