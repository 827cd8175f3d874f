#include "recon/local.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>

namespace recon {

namespace {

struct PartnerResult {
  int index = -1;
  double residual = 0.0;
};

// Alignment search shared by both cases: `fixed` is a chosen Y point; the
// search runs over `annulus` for the best partner. The test formula is
// |r(far) - r(near) - D^a| with far/near decided by `fixed_is_far`.
PartnerResult find_aligned_partner(const BundleView& view, const SurrogateYDistances& da, int i0,
                                   int fixed, const std::vector<int>& annulus, bool fixed_is_far) {
  const double eps1 = view.params->eps1;
  PartnerResult best;
  for (int cand : annulus) {
    if (cand == fixed) continue;
    const int far = fixed_is_far ? fixed : cand;
    const int near = fixed_is_far ? cand : fixed;
    const double res = std::abs(view.r(i0, far) - view.r(i0, near) - da(far, near));
    if (res >= 6.0 * eps1) continue;
    if (best.index < 0 || res < best.residual) {
      best.index = cand;
      best.residual = res;
    }
  }
  return best;
}

struct StepResult {
  int index = -1;
  double residual = 0.0;
};

StepResult step_search(const BundleView& view, const SurrogateYDistances& da, int i0, int p, int q) {
  const auto& prm = *view.params;
  const double eps1 = prm.eps1;
  const double s = prm.s();
  const double ball = prm.step_ball_radius();
  const double dapq = da(p, q);

  StepResult best;
  double best_res = std::numeric_limits<double>::infinity();
  const int I = view.I();
  for (int l = 0; l < I; ++l) {
    if (l == i0) continue;
    // Cheap radial shell test first, then alignment, then the O(J) sup test.
    if (std::abs(view.r(i0, q) - (view.r(l, q) + s)) > 9.0 * eps1) continue;
    const double align = std::abs(view.r(l, p) - view.r(l, q) - dapq);
    if (align > 9.0 * eps1) continue;
    if (align >= best_res) continue;
    if (sup_distance_above(view.vec(l), view.vec(i0), ball) > ball) continue;
    best_res = align;
    best.index = l;
    best.residual = align;
  }
  return best;
}

} // namespace

CaseTag classify_case(const BundleView& view, int i0) {
  if (i0 < 0 || i0 >= view.I()) throw InputError("center index out of range");
  return view.r(i0, view.anchor()) > view.net->ball_radius / 2.0 ? CaseTag::Outer : CaseTag::Inner;
}

std::vector<int> annulus_points(const BundleView& view, const SurrogateYDistances& da,
                                const AnnulusSelector& sel) {
  sel.validate();
  const double slack = 2.0 * view.params->eps1;
  const int y0 = view.anchor();
  std::vector<int> out;
  for (int j = 0; j < view.J(); ++j) {
    const double d = da(j, y0);
    if (d >= sel.radius - sel.width - slack && d <= sel.radius + sel.width + slack) out.push_back(j);
  }
  if (out.empty())
    throw SelectionError("empty annulus at radius " + std::to_string(sel.radius) + " width " +
                         std::to_string(sel.width));
  return out;
}

int find_aligned_q(const BundleView& view, const SurrogateYDistances& da, int i0, int p,
                   const AnnulusSelector& q_annulus) {
  auto ann = annulus_points(view, da, q_annulus);
  auto res = find_aligned_partner(view, da, i0, p, ann, /*fixed_is_far=*/true);
  if (res.index < 0) throw AlignmentError("no aligned q for the given (center, p)");
  return res.index;
}

int find_step_element(const BundleView& view, const SurrogateYDistances& da, int i0, int p, int q) {
  auto res = step_search(view, da, i0, p, q);
  if (res.index < 0) throw StepSearchError("no step element for the given (center, p, q)");
  return res.index;
}

LocalChart build_chart(const BundleView& view, const SurrogateYDistances& da, int i0) {
  const auto& prm = *view.params;
  prm.validate();
  const int n = prm.bounds.n;
  const double R = view.net->ball_radius;
  const double eps1 = prm.eps1;
  const CaseTag tag = classify_case(view, i0);

  // Outer case: separated tuple on N(R/8), aligned partners on N(R/4) are the
  // q's. Inner case: separated tuple on N(3R/4) are themselves the q's, with
  // aligned partners p on N(R) beyond them.
  const AnnulusSelector tuple_sel{tag == CaseTag::Outer ? R / 8.0 : 3.0 * R / 4.0, eps1};
  const AnnulusSelector partner_sel{tag == CaseTag::Outer ? R / 4.0 : R, eps1};
  const bool tuple_is_far = tag == CaseTag::Outer;

  auto tuple_ann = annulus_points(view, da, tuple_sel);
  auto partner_ann = annulus_points(view, da, partner_sel);

  // p0: minimal center distance over the tuple annulus.
  int p0 = tuple_ann.front();
  for (int j : tuple_ann)
    if (view.r(i0, j) < view.r(i0, p0)) p0 = j;

  // Candidates: tuple-annulus points inside the c3 surrogate ball of p0,
  // sorted by surrogate distance from p0 (tie: lowest index).
  const double c3 = prm.constant("c3");
  std::vector<int> cand;
  for (int j : tuple_ann)
    if (da(j, p0) < c3) cand.push_back(j);
  std::sort(cand.begin(), cand.end(), [&](int a, int b) {
    const double da_a = da(a, p0), da_b = da(b, p0);
    if (da_a != da_b) return da_a < da_b;
    return a < b;
  });

  // Keep the combination count tractable for high n or huge annuli.
  const std::size_t combo_cap = 20000;
  auto n_choose = [&](std::size_t k) {
    double c = 1.0;
    for (int t = 0; t < n; ++t) c = c * double(k - t) / double(t + 1);
    return c;
  };
  while (cand.size() > static_cast<std::size_t>(n) && n_choose(cand.size()) > double(combo_cap))
    cand.pop_back();
  if (static_cast<int>(cand.size()) < n)
    throw FrameError("too few tuple candidates near p0", 0.0);

  // All n-subsets, greedy maximal-separation order: sort by descending minimal
  // pairwise surrogate separation, then lexicographically by candidate rank.
  struct Combo {
    std::vector<int> members; // candidate ranks
    double min_sep;
  };
  std::vector<Combo> combos;
  std::vector<int> idx(n);
  std::iota(idx.begin(), idx.end(), 0);
  const int k = static_cast<int>(cand.size());
  while (true) {
    double min_sep = std::numeric_limits<double>::infinity();
    for (int a = 0; a < n; ++a)
      for (int b = a + 1; b < n; ++b) min_sep = std::min(min_sep, da(cand[idx[a]], cand[idx[b]]));
    if (min_sep >= prm.C17 * eps1) combos.push_back({idx, min_sep});
    int pos = n - 1;
    while (pos >= 0 && idx[pos] == k - n + pos) --pos;
    if (pos < 0) break;
    ++idx[pos];
    for (int t = pos + 1; t < n; ++t) idx[t] = idx[t - 1] + 1;
  }
  if (combos.empty()) throw FrameError("no separated tuple available", 0.0);
  std::stable_sort(combos.begin(), combos.end(), [](const Combo& a, const Combo& b) {
    if (a.min_sep != b.min_sep) return a.min_sep > b.min_sep;
    return a.members < b.members;
  });

  const std::size_t budget = static_cast<std::size_t>(prm.constant("tuple_budget"));
  const double s = prm.s();

  // Per-tuple-point caches: aligned partner and step element survive across
  // combos sharing a member.
  std::map<int, PartnerResult> partner_cache;
  std::map<int, StepResult> step_cache;
  auto partner_for = [&](int a) -> PartnerResult& {
    auto it = partner_cache.find(a);
    if (it != partner_cache.end()) return it->second;
    return partner_cache[a] = find_aligned_partner(view, da, i0, a, partner_ann, tuple_is_far);
  };
  auto step_for = [&](int a, int p, int q) -> StepResult& {
    auto it = step_cache.find(a);
    if (it != step_cache.end()) return it->second;
    return step_cache[a] = step_search(view, da, i0, p, q);
  };

  // Scan combos in separation order and keep the best-conditioned frame; a
  // clearly well-conditioned one short-circuits the scan.
  const double det_gate = 0.75 * prm.c1_threshold;
  const double det_accept = std::max(10.0 * det_gate, 0.5);
  double best_det = -std::numeric_limits<double>::infinity();
  LocalChart best_chart;
  bool have_chart = false;
  std::size_t tried = 0;
  for (const auto& combo : combos) {
    if (tried >= budget) break;
    ++tried;

    std::vector<int> p_idx(n), q_idx(n), steps(n);
    bool ok = true;
    for (int t = 0; t < n && ok; ++t) {
      const int a = cand[combo.members[t]];
      auto& pr = partner_for(a);
      if (pr.index < 0) {
        ok = false;
        break;
      }
      const int p = tuple_is_far ? a : pr.index;
      const int q = tuple_is_far ? pr.index : a;
      auto& st = step_for(a, p, q);
      if (st.index < 0) {
        ok = false;
        break;
      }
      p_idx[t] = p;
      q_idx[t] = q;
      steps[t] = st.index;
    }
    if (!ok) continue;

    Eigen::MatrixXd G(n, n);
    for (int kk = 0; kk < n; ++kk)
      for (int m = 0; m < n; ++m) G(kk, m) = (view.r(i0, q_idx[kk]) - view.r(steps[m], q_idx[kk])) / s;
    Eigen::MatrixXd Gs = 0.5 * (G + G.transpose());
    if (Gs.cwiseAbs().maxCoeff() > 2.0) continue;
    const double det = Gs.determinant();
    if (det <= best_det) continue;
    best_det = det;
    if (det <= det_gate) continue;

    best_chart.center_index = i0;
    best_chart.constellation.p0_index = p0;
    best_chart.constellation.p_indices = p_idx;
    best_chart.constellation.q_indices = q_idx;
    best_chart.constellation.case_tag = tag;
    best_chart.step_indices = steps;
    best_chart.gram = Gs;
    best_chart.gram_inverse = Gs.inverse();
    best_chart.s_value = s;
    have_chart = true;
    if (det >= det_accept) break;
  }
  if (have_chart) return best_chart;
  throw FrameError("no tuple passed the determinant test", std::isfinite(best_det) ? best_det : 0.0);
}

Eigen::VectorXd compute_coordinates(const LocalChart& chart, const BundleView& view, int ell) {
  if (ell < 0 || ell >= view.I()) throw InputError("vector index out of range");
  const double rho0 = view.params->rho0;
  if (sup_distance_above(view.vec(ell), view.vec(chart.center_index), rho0) >= rho0)
    throw DomainError("point outside the rho0 coordinate neighborhood");
  const int n = static_cast<int>(chart.constellation.q_indices.size());
  Eigen::VectorXd x(n);
  for (int kk = 0; kk < n; ++kk) {
    const int q = chart.constellation.q_indices[kk];
    x[kk] = view.r(chart.center_index, q) - view.r(ell, q);
  }
  return x;
}

double local_distance(const LocalChart& chart, const Eigen::VectorXd& coords, bool* clamped) {
  const double q = coords.dot(chart.gram_inverse * coords);
  if (clamped) *clamped = q < 0.0;
  return std::sqrt(std::max(q, 0.0));
}

} // namespace recon
