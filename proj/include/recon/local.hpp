#pragma once

#include "recon/bundle.hpp"

namespace recon {

// N_w(r) = B(x0, r+w) \ B(x0, r-w), decided from surrogate distances to y0.
struct AnnulusSelector {
  double radius = 0.0;
  double width = 0.0;

  void validate() const {
    if (!(width > 0.0) || !(width < radius)) throw InputError("annulus needs 0 < width < radius");
  }
};

enum class CaseTag { Outer, Inner };

// Measurement constellation: tuple points carry the separation requirement
// (frame tuple = p's in the outer case, q's in the inner case); p/q roles in
// the stored lists follow the alignment-test formula r(p) - r(q) = d(p,q).
struct Constellation {
  int p0_index = -1;
  std::vector<int> p_indices;
  std::vector<int> q_indices;
  CaseTag case_tag = CaseTag::Outer;
};

struct LocalChart {
  int center_index = -1;
  Constellation constellation;
  std::vector<int> step_indices;
  Eigen::MatrixXd gram;
  Eigen::MatrixXd gram_inverse;
  double s_value = 0.0;
};

CaseTag classify_case(const BundleView& view, int i0);

std::vector<int> annulus_points(const BundleView& view, const SurrogateYDistances& da,
                                const AnnulusSelector& sel);

// q in the annulus minimizing |r_i0(p) - r_i0(q) - D^a(p,q)|, required < 6 eps1.
int find_aligned_q(const BundleView& view, const SurrogateYDistances& da, int i0, int p,
                   const AnnulusSelector& q_annulus);

// Vector index l with sup(r_l, r_i0) <= eps1^{1/4}, |r_l(p)-r_l(q)-D^a(p,q)| <= 9 eps1
// and |r_i0(q) - (r_l(q)+s)| <= 9 eps1.
int find_step_element(const BundleView& view, const SurrogateYDistances& da, int i0, int p, int q);

LocalChart build_chart(const BundleView& view, const SurrogateYDistances& da, int i0);

// X_k(x_l) = r_i0(q_k) - r_l(q_k); requires sup(r_l, r_i0) < rho0.
Eigen::VectorXd compute_coordinates(const LocalChart& chart, const BundleView& view, int ell);

// sqrt(coords^T g^{-1} coords), clamped to 0 (flagged) when noise drives the
// quadratic form negative.
double local_distance(const LocalChart& chart, const Eigen::VectorXd& coords, bool* clamped = nullptr);

} // namespace recon
