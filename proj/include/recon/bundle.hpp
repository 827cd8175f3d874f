#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "recon/params.hpp"

namespace recon {

// Landmark net Y inside the observation ball U = B(x0, R), with the anchor y0.
struct NetY {
  std::vector<PointRep> points;
  int anchor_index = 0;
  PointRep ball_center;
  double ball_radius = 0.0;

  int J() const { return static_cast<int>(points.size()); }
};

// One hidden point's noisy distances to every landmark.
struct DistanceVector {
  std::vector<double> values;
};

// Hidden ground truth, synthetic mode only. Reconstruction code never sees it.
struct Provenance {
  ManifoldSpec spec;
  std::vector<PointRep> x_points;
  std::vector<int> report_indices; // designated centers for evaluation subsets
};

// The data reconstruction operations are allowed to read: everything except
// provenance.
struct BundleView {
  const NetY* net = nullptr;
  const std::vector<DistanceVector>* vectors = nullptr;
  const ReconstructionParams* params = nullptr;

  int I() const { return static_cast<int>(vectors->size()); }
  int J() const { return net->J(); }
  int anchor() const { return net->anchor_index; }
  double r(int i, int j) const { return (*vectors)[i].values[j]; }
  const DistanceVector& vec(int i) const { return (*vectors)[i]; }
};

struct DataBundle {
  NetY net_y;
  std::vector<DistanceVector> vectors;
  ReconstructionParams params;
  std::optional<Provenance> provenance;

  BundleView view() const { return {&net_y, &vectors, &params}; }
  void validate() const;
};

enum class NoiseModel { None, Uniform, AdversarialExtremes };

struct NoiseSpec {
  NoiseModel model = NoiseModel::None;
  double bound = 0.0; // entrywise amplitude, must stay below eps1

  static NoiseSpec none() { return {}; }
  static NoiseSpec uniform(double b) { return {NoiseModel::Uniform, b}; }
  static NoiseSpec adversarial_extremes(double b) { return {NoiseModel::AdversarialExtremes, b}; }
};

// Literal synthesis: X an eps0-net of M, Y an eps0-net of U, entries
// d(x_i, y_j) + noise with |noise| < eps1. Conditions (a1)/(a2) at level eps1
// need eps0 + noise bound <= eps1; the caller owns that budget split.
DataBundle synthesize_bundle(const ManifoldSpec& spec, const ReconstructionParams& params,
                             NoiseSpec noise, std::uint64_t seed, const NetOptions& opts = {});

double sup_distance(const DistanceVector& a, const DistanceVector& b);
// Early-abort variant: exact when the result is <= cap, otherwise returns the
// first partial max found above cap (still a lower bound on the true sup).
double sup_distance_above(const DistanceVector& a, const DistanceVector& b, double cap);

// D^a_Y(y_j, y_k) = min_i r_i(y_j) + r_i(y_k). Either fully materialized
// (J^2 * I work) or lazily entry-cached; entries agree exactly.
class SurrogateYDistances {
 public:
  static SurrogateYDistances full(BundleView view);
  static SurrogateYDistances lazy(BundleView view);

  double operator()(int j, int k) const;
  int size() const { return J_; }
  bool materialized() const { return !full_.empty(); }

 private:
  double compute(int j, int k) const;

  BundleView view_;
  int J_ = 0;
  std::vector<double> full_;
  mutable std::unordered_map<std::uint64_t, double> cache_;
};

SurrogateYDistances compute_DaY(const DataBundle& bundle);

struct A1A2Report {
  bool passed = true;
  double a1_worst = 0.0;              // max_i max_j |r_ij - d(x_i, y_j)|
  double a2_worst = 0.0;              // max over probes of min_i sup_j |...|
  std::size_t probes = 0;
  std::vector<std::string> violations;
};

A1A2Report check_a1_a2(const DataBundle& bundle, std::size_t probe_count, std::uint64_t seed);

} // namespace recon
