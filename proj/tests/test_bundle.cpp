#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "recon/synthesis.hpp"

using namespace recon;

namespace {

ManifoldSpec unit_torus() { return ManifoldSpec::flat_torus(Eigen::MatrixXd::Identity(2, 2)); }

PointRep tp(double a, double b) {
  Eigen::VectorXd v(2);
  v << a, b;
  return {v};
}

// Small literal bundle: eps0-nets with uniform noise, budget eps0 + bound < eps1.
DataBundle literal_bundle(NoiseSpec noise, std::uint64_t seed = 7) {
  GeometryBounds gb{6.0, 0.3, 2};
  auto prm = ReconstructionParams::defaults(gb, 0.05, 0.06);
  return synthesize_bundle(unit_torus(), prm, noise, seed);
}

double true_d(const DataBundle& b, const PointRep& p, const PointRep& q) {
  return geodesic_distance(b.provenance->spec, p, q);
}

} // namespace

TEST_CASE("literal synthesis produces a valid, sized bundle") {
  auto b = literal_bundle(NoiseSpec::uniform(0.009));
  b.validate();
  CHECK(b.net_y.J() > 30);
  CHECK(b.vectors.size() > 100);
  CHECK(b.net_y.anchor_index == 0);
  // anchor is the ball center itself
  CHECK(true_d(b, b.net_y.points[0], b.net_y.ball_center) == 0.0);
  // landmarks inside U, hidden points recorded one-to-one
  for (const auto& y : b.net_y.points)
    CHECK(true_d(b, y, b.net_y.ball_center) <= b.net_y.ball_radius + 1e-12);
  CHECK(b.provenance->x_points.size() == b.vectors.size());
}

TEST_CASE("vector sup-distance brackets the true distance within 2 eps1") {
  auto b = literal_bundle(NoiseSpec::uniform(0.009));
  const auto& xs = b.provenance->x_points;
  const double slack = 2.0 * b.params.eps1;
  for (std::size_t i = 0; i < xs.size(); i += 3)
    for (std::size_t j = i + 1; j < xs.size(); j += 5) {
      const double d = true_d(b, xs[i], xs[j]);
      const double sup = sup_distance(b.vectors[i], b.vectors[j]);
      CHECK(sup <= d + slack);
      // reverse inequality needs a landmark near one endpoint; both endpoints
      // inside the ball guarantee one within eps0
      if (true_d(b, xs[i], b.net_y.ball_center) < 0.2 && true_d(b, xs[j], b.net_y.ball_center) < 0.2)
        CHECK(sup >= d - slack);
    }
}

TEST_CASE("surrogate landmark distances stay within 2 eps1 of truth") {
  auto b = literal_bundle(NoiseSpec::uniform(0.009));
  auto da = compute_DaY(b);
  const double slack = 2.0 * b.params.eps1;
  for (int j = 0; j < b.net_y.J(); ++j)
    for (int k = j + 1; k < b.net_y.J(); ++k) {
      const double d = true_d(b, b.net_y.points[j], b.net_y.points[k]);
      CHECK(da(j, k) >= d - slack);
      CHECK(da(j, k) <= d + slack);
    }
}

TEST_CASE("lazy surrogate distances agree exactly with the materialized table") {
  auto b = literal_bundle(NoiseSpec::uniform(0.009));
  auto full = SurrogateYDistances::full(b.view());
  auto lazy = SurrogateYDistances::lazy(b.view());
  CHECK(full.materialized());
  CHECK_FALSE(lazy.materialized());
  for (int j = 0; j < b.net_y.J(); ++j)
    for (int k = 0; k < b.net_y.J(); ++k) CHECK(full(j, k) == lazy(j, k));
  CHECK_THROWS_AS(lazy(-1, 0), InputError);
  CHECK_THROWS_AS(full(0, b.net_y.J()), InputError);
}

TEST_CASE("nearby vectors certify short distances") {
  // localization envelope: sup < rho0 implies d <= 3 * C15 * (sup + 3 eps1)^{1/2};
  // cluster points supply pairs actually below rho0
  GeometryBounds gb{6.0, 0.2, 2};
  auto prm = ReconstructionParams::defaults(gb, 0.01, 0.01);
  ChartSupportOptions opts;
  opts.centers = {tp(0.3, 0.0), tp(0.32, 0.25)};
  opts.step_directions = 4;
  opts.cluster_per_center = 40;
  auto b = synthesize_chart_bundle(unit_torus(), prm, opts, 17);
  const auto& xs = b.provenance->x_points;
  const double c15 = b.params.constant("C15");
  std::size_t checked = 0;
  for (std::size_t i = 0; i < xs.size(); ++i)
    for (std::size_t j = i + 1; j < xs.size(); ++j) {
      const double sup = sup_distance(b.vectors[i], b.vectors[j]);
      if (sup >= b.params.rho0) continue;
      const double d = true_d(b, xs[i], xs[j]);
      CHECK(d <= 3.0 * c15 * std::sqrt(sup + 3.0 * b.params.eps1));
      ++checked;
    }
  CHECK(checked > 10);
}

TEST_CASE("synthesis is deterministic per seed and varies across seeds") {
  auto a = literal_bundle(NoiseSpec::uniform(0.009), 42);
  auto b = literal_bundle(NoiseSpec::uniform(0.009), 42);
  auto c = literal_bundle(NoiseSpec::uniform(0.009), 43);
  REQUIRE(a.vectors.size() == b.vectors.size());
  for (std::size_t i = 0; i < a.vectors.size(); ++i)
    for (std::size_t j = 0; j < a.vectors[i].values.size(); ++j)
      CHECK(a.vectors[i].values[j] == b.vectors[i].values[j]);
  for (int j = 0; j < a.net_y.J(); ++j)
    CHECK(a.net_y.points[j].coords == b.net_y.points[j].coords);
  CHECK(a.vectors.size() != c.vectors.size()); // Poisson nets differ across seeds
}

TEST_CASE("noise models honor their bounds") {
  SUBCASE("none is exact") {
    auto b = literal_bundle(NoiseSpec::none());
    for (std::size_t i = 0; i < b.vectors.size(); ++i)
      for (int j = 0; j < b.net_y.J(); ++j)
        CHECK(b.vectors[i].values[j] ==
              doctest::Approx(true_d(b, b.provenance->x_points[i], b.net_y.points[j])).epsilon(1e-14));
  }
  SUBCASE("uniform stays strictly inside the bound") {
    auto b = literal_bundle(NoiseSpec::uniform(0.009));
    double worst = 0.0;
    for (std::size_t i = 0; i < b.vectors.size(); ++i)
      for (int j = 0; j < b.net_y.J(); ++j)
        worst = std::max(worst,
                         std::abs(b.vectors[i].values[j] -
                                  true_d(b, b.provenance->x_points[i], b.net_y.points[j])));
    CHECK(worst < 0.009);
    CHECK(worst > 0.005); // the extremes are actually explored
  }
  SUBCASE("adversarial extremes sit one ulp inside the open bound") {
    auto b = literal_bundle(NoiseSpec::adversarial_extremes(0.009));
    const double extreme = 0.009 * (1.0 - std::pow(2.0, -52));
    for (std::size_t i = 0; i < b.vectors.size(); i += 7)
      for (int j = 0; j < b.net_y.J(); ++j) {
        const double d = true_d(b, b.provenance->x_points[i], b.net_y.points[j]);
        const double e = std::abs(b.vectors[i].values[j] - d);
        if (b.vectors[i].values[j] > 0.0) CHECK(e == doctest::Approx(extreme).epsilon(1e-12));
        CHECK(e <= 0.009 + 1e-15); // addition may round up by half an ulp of d
      }
  }
  SUBCASE("invalid bounds are rejected") {
    CHECK_THROWS_AS(literal_bundle(NoiseSpec::uniform(0.06)), InputError);  // == eps1
    CHECK_THROWS_AS(literal_bundle(NoiseSpec::uniform(0.0)), InputError);
    CHECK_THROWS_AS(literal_bundle(NoiseSpec::adversarial_extremes(-0.1)), InputError);
  }
}

TEST_CASE("admissibility checks pass on honest bundles and flag corruption") {
  auto b = literal_bundle(NoiseSpec::uniform(0.009));
  auto rep = check_a1_a2(b, 150, 99);
  CHECK(rep.passed);
  CHECK(rep.a1_worst < b.params.eps1);
  CHECK(rep.a2_worst < b.params.eps1);
  CHECK(rep.probes == 150);

  // corrupt one entry beyond eps1: (a1) must flag that vector
  b.vectors[3].values[5] += 2.5 * b.params.eps1;
  auto bad = check_a1_a2(b, 50, 99);
  CHECK_FALSE(bad.passed);
  CHECK(bad.a1_worst > b.params.eps1);
  REQUIRE(!bad.violations.empty());
  CHECK(bad.violations.front().find("vector 3") != std::string::npos);
}

TEST_CASE("bundle validation rejects malformed data") {
  auto b = literal_bundle(NoiseSpec::none());
  SUBCASE("negative entry") {
    b.vectors[0].values[0] = -0.1;
    CHECK_THROWS_AS(b.validate(), InputError);
  }
  SUBCASE("entry above lambda + eps1") {
    b.vectors[0].values[0] = b.params.bounds.lambda + 2.0 * b.params.eps1;
    CHECK_THROWS_AS(b.validate(), InputError);
  }
  SUBCASE("ragged vector") {
    b.vectors[1].values.pop_back();
    CHECK_THROWS_AS(b.validate(), InputError);
  }
  SUBCASE("anchor out of range") {
    b.net_y.anchor_index = b.net_y.J();
    CHECK_THROWS_AS(b.validate(), InputError);
  }
}

TEST_CASE("chart-support synthesis pins consulted surrogate distances exactly") {
  GeometryBounds gb{6.0, 0.2, 2};
  auto prm = ReconstructionParams::defaults(gb, 0.01, 0.01);
  ChartSupportOptions opts;
  opts.centers = {tp(0.3, 0.0), tp(0.05, 0.02)}; // one outer, one inner
  opts.coarse_y_eps = 0.1;
  auto b = synthesize_chart_bundle(unit_torus(), prm, opts, 11);
  b.validate();

  // anchor witnesses make D^a(y0, .) exact everywhere
  auto da = compute_DaY(b);
  for (int j = 1; j < b.net_y.J(); ++j) {
    const double d = true_d(b, b.net_y.points[0], b.net_y.points[j]);
    CHECK(da(0, j) == doctest::Approx(d).epsilon(1e-12));
  }

  // both case shells are present as exact annuli
  const double R = gb.R;
  int on_shell[4] = {0, 0, 0, 0};
  const double shells[4] = {R / 8.0, R / 4.0, 3.0 * R / 4.0, R};
  for (int j = 1; j < b.net_y.J(); ++j) {
    const double d = true_d(b, b.net_y.points[j], b.net_y.ball_center);
    for (int sidx = 0; sidx < 4; ++sidx)
      if (std::abs(d - shells[sidx]) < 1e-12) ++on_shell[sidx];
  }
  for (int sidx = 0; sidx < 4; ++sidx) CHECK(on_shell[sidx] >= opts.frame_ring_points);

  // step supports sit at arc length exactly s; the outer center gets one per
  // frame direction, the inner center only for directions with d(c, q) > s
  const auto& xs = b.provenance->x_points;
  int outer_supports = 0, inner_supports = 0;
  for (std::size_t i = opts.centers.size(); i < xs.size(); ++i) {
    if (std::abs(true_d(b, xs[i], opts.centers[0]) - prm.s()) < 1e-12) ++outer_supports;
    if (std::abs(true_d(b, xs[i], opts.centers[1]) - prm.s()) < 1e-12) ++inner_supports;
  }
  CHECK(outer_supports >= opts.frame_ring_points);
  CHECK(inner_supports >= 1);

  CHECK(b.provenance->report_indices == std::vector<int>{0, 1});
}

TEST_CASE("chart-support synthesis is deterministic and guards its inputs") {
  GeometryBounds gb{6.0, 0.2, 2};
  auto prm = ReconstructionParams::defaults(gb, 0.01, 0.01);
  ChartSupportOptions opts;
  opts.centers = {tp(0.3, 0.0)};
  opts.cluster_per_center = 5;
  auto a = synthesize_chart_bundle(unit_torus(), prm, opts, 5);
  auto b = synthesize_chart_bundle(unit_torus(), prm, opts, 5);
  REQUIRE(a.vectors.size() == b.vectors.size());
  for (std::size_t i = 0; i < a.vectors.size(); ++i)
    CHECK(a.vectors[i].values == b.vectors[i].values);

  ChartSupportOptions empty;
  CHECK_THROWS_AS(synthesize_chart_bundle(unit_torus(), prm, empty, 5), InputError);
  ChartSupportOptions mesh_opts = opts;
  MeshData mesh;
  mesh.vertices = {Eigen::VectorXd::Zero(2), Eigen::VectorXd::Ones(2)};
  mesh.edges = {{0, 1, 1.0}};
  CHECK_THROWS_AS(synthesize_chart_bundle(ManifoldSpec::mesh_graph(mesh), prm, mesh_opts, 5),
                  CapabilityError);
}
