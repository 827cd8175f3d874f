#pragma once

#include "recon/bundle.hpp"

namespace recon {

// Case (i): sources form a net of M minus the observation ball; landmark
// distances must be supplied separately. Case (ii): sources form a net of all
// of M and everything is kernel-derived.
enum class KernelCaseTag { SeparatedSources, FullSources };

enum class NoiseProfile { WorstCaseSign, Uniform };

// Noisy heat-kernel log samples: log G~(y_j, z_i, t) with |log G~ - log G|
// bounded by sigma / t.
struct KernelSampleSet {
  std::vector<int> y_indices;
  std::vector<PointRep> z_points;
  std::vector<double> times;
  std::vector<std::vector<std::vector<double>>> log_values; // [z][y][time]
  double sigma = 0.0;
  KernelCaseTag case_tag = KernelCaseTag::FullSources;

  int Z() const { return static_cast<int>(z_points.size()); }
  int Jy() const { return static_cast<int>(y_indices.size()); }
  int T() const { return static_cast<int>(times.size()); }
  void validate() const;
};

struct TSelection {
  double t_star = 0.0;

  struct Candidate {
    double t = 0.0;
    double spread = 0.0; // max pairwise |d_est(t) - d_est(next t)|
    bool eligible = false;
  };
  std::vector<Candidate> diagnostics;
};

struct KernelDistanceEstimates {
  double t_star = 0.0;
  std::vector<std::vector<double>> values;       // [z][y]
  std::vector<std::pair<int, int>> clamped;      // pairs with log G~ >= 0
};

// Evaluates exact kernel logs and corrupts them multiplicatively:
// log G~ = log G + e(t), |e(t)| <= sigma / t. worst_case_sign uses
// e = +/- (sigma/t)(1 - ulp) with a per-sample random sign.
KernelSampleSet corrupt_kernel(const ManifoldSpec& spec, const NetY& y_net,
                               const std::vector<PointRep>& z_net, const std::vector<double>& times,
                               double sigma, NoiseProfile profile, std::uint64_t seed,
                               KernelCaseTag tag = KernelCaseTag::FullSources);

// Data-driven choice of t from the sample grid: minimal consecutive-grid
// estimate spread among candidates with t <= sigma. sigma = 0 degenerates to
// the smallest grid point. The optional spec is recorded for diagnostics only.
TSelection select_t(const KernelSampleSet& samples, const ManifoldSpec* spec_hint = nullptr);

// d_est(y_j, z_i) = sqrt(max(0, -4 t* log G~)); nonnegative logs clamp to 0
// and are flagged (near-diagonal kernel blow-up).
KernelDistanceEstimates distances_from_kernel(const KernelSampleSet& samples, const TSelection& t_sel);

enum class DYSource { Given, KernelDerived };

// Bundle assembly per Theorem 8.1. eps1 is overridden to 7 sqrt(sigma) for
// sigma > 0. Case (i) (DYSource::Given) appends the landmarks themselves as
// hidden points with vectors from dY (J x J, |dY - d| < h); case (ii) uses
// kernel-derived vectors only. provenance_spec, when supplied, attaches
// synthetic ground truth.
DataBundle assemble_bundle_from_kernel(const KernelSampleSet& samples,
                                       const KernelDistanceEstimates& estimates, DYSource source,
                                       const ReconstructionParams& params, const NetY& y_net,
                                       const std::vector<std::vector<double>>* dY = nullptr,
                                       const ManifoldSpec* provenance_spec = nullptr);

} // namespace recon
