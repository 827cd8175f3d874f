#pragma once

#include "recon/bundle.hpp"

namespace recon {

// Targeted synthesis for chart-scale experiments. A literal eps0-net at small
// eps1 is computationally impossible (|X| ~ eps1^{-n}), so this synthesizer
// places exactly the measurement points the reconstruction searches consult:
// exact annulus shells, aligned-partner shells on the crossing geodesics,
// geodesic step points at arc length s, midpoint witnesses that pin the
// surrogate Y-distances of every consulted pair, plus a coarse background net.
// Noise-free by design; the hidden mains in `centers` are the chart centers.
struct ChartSupportOptions {
  std::vector<PointRep> centers;
  int report_count = 0;                // provenance report subset; 0 = all centers
  double coarse_y_eps = 0.1;           // background landmark net spacing
  int frame_ring_points = 24;          // points per frame shell
  double partner_spacing_factor = 1.0; // partner shell spacing = factor * sqrt(eps1)
  int step_directions = 0;             // gamma(s) supports per center; 0 = every frame point
  int cluster_per_center = 0;          // random hidden points near each center
  double cluster_radius_factor = 0.8;  // cluster radius = factor * rho0
  // Add one exactly collinear shell partner per (center, direction), so the
  // planted step supports have zero search residual and win every tie-break.
  // Costs one landmark per center-direction; keep off for many-center bundles.
  bool exact_partners = false;
};

DataBundle synthesize_chart_bundle(const ManifoldSpec& spec, const ReconstructionParams& params,
                                   const ChartSupportOptions& opts, std::uint64_t seed);

} // namespace recon
