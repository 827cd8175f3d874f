#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdlib>
#include <fstream>

#include "recon/pipeline.hpp"

using namespace recon;

namespace {

std::filesystem::path scratch() {
  static const auto dir = [] {
    auto d = std::filesystem::temp_directory_path() / "recon_cli_test";
    std::filesystem::remove_all(d);
    std::filesystem::create_directories(d);
    return d;
  }();
  return dir;
}

std::string read_file(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  REQUIRE(in.good());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

// two charted centers plus clusters on the unit torus; runs in well under a second
std::string base_config(const std::string& out, const std::string& extra = "") {
  return R"({
  "mode": "distance_data",
  "manifold": {"kind": "flat_torus", "basis": [[1,0],[0,1]]},
  "bounds": {"lambda": 6.0, "R": 0.2, "n": 2},
  "eps0": 0.001, "eps1": 0.001,
  "seed": 23,
  "out": ")" + out + R"(",
  "synthesis": {"mode": "chart_support", "centers": [[0.3,0],[0.305,0]],
                "step_directions": 6, "exact_partners": true, "cluster_per_center": 4},
  "sources": [0,1],
  "eval_probes": 50)" + extra + "\n}\n";
}

std::filesystem::path write_config(const std::string& name, const std::string& text) {
  const auto path = scratch() / name;
  atomic_write_text(path, text);
  return path;
}

DataBundle small_bundle() {
  GeometryBounds gb{6.0, 0.2, 2};
  auto prm = ReconstructionParams::defaults(gb, 1e-3, 1e-3);
  ChartSupportOptions opts;
  Eigen::VectorXd c(2);
  c << 0.3, 0.0;
  opts.centers.push_back({c});
  opts.step_directions = 4;
  opts.cluster_per_center = 3;
  return synthesize_chart_bundle(ManifoldSpec::flat_torus(Eigen::MatrixXd::Identity(2, 2)), prm,
                                 opts, 7);
}

} // namespace

TEST_CASE("manifold specs and params survive a JSON round trip") {
  auto torus = ManifoldSpec::flat_torus((Eigen::MatrixXd(2, 2) << 0.36, 0.01, 0.0, 0.36).finished());
  auto t2 = spec_from_json(spec_to_json(torus));
  CHECK(t2.kind == ManifoldKind::FlatTorus);
  CHECK(t2.basis == torus.basis);

  auto sphere = ManifoldSpec::sphere(0.5, 2);
  auto s2 = spec_from_json(spec_to_json(sphere));
  CHECK(s2.kind == ManifoldKind::Sphere);
  CHECK(s2.radius == 0.5);
  CHECK(s2.n == 2);

  MeshData mesh;
  mesh.vertices = {Eigen::VectorXd::Zero(3), Eigen::VectorXd::Ones(3)};
  mesh.edges = {{0, 1, 0.125}};
  auto m2 = spec_from_json(spec_to_json(ManifoldSpec::mesh_graph(mesh)));
  CHECK(m2.kind == ManifoldKind::MeshGraph);
  REQUIRE(m2.mesh.edges.size() == 1);
  CHECK(m2.mesh.edges[0].weight == 0.125);

  auto prm = ReconstructionParams::defaults({6.0, 0.3, 2}, 0.01, 0.03);
  prm.constants["C_custom"] = 1.0 / 3.0;
  auto p2 = params_from_json(params_to_json(prm));
  CHECK(p2.eps0 == prm.eps0);
  CHECK(p2.eps1 == prm.eps1);
  CHECK(p2.rho0 == prm.rho0);
  CHECK(p2.constants == prm.constants);
  CHECK(params_hash(p2) == params_hash(prm));
  p2.constants["C_custom"] = 0.25;
  CHECK(params_hash(p2) != params_hash(prm));

  CHECK_THROWS_AS(spec_from_json("{\"kind\":\"klein_bottle\"}"), InputError);
  CHECK_THROWS_AS(spec_from_json("not json"), InputError);
}

TEST_CASE("data bundles reload bit-identically, with and without provenance") {
  auto bundle = small_bundle();
  const auto path = scratch() / "bundle_rt.json";
  save_bundle(bundle, path);
  auto back = load_bundle(path);
  REQUIRE(back.vectors.size() == bundle.vectors.size());
  for (std::size_t i = 0; i < bundle.vectors.size(); ++i)
    CHECK(back.vectors[i].values == bundle.vectors[i].values);
  CHECK(back.net_y.anchor_index == bundle.net_y.anchor_index);
  CHECK(back.net_y.ball_radius == bundle.net_y.ball_radius);
  for (int j = 0; j < bundle.net_y.J(); ++j)
    CHECK(back.net_y.points[j].coords == bundle.net_y.points[j].coords);
  CHECK(back.params.eps1 == bundle.params.eps1);
  REQUIRE(back.provenance.has_value());
  CHECK(back.provenance->report_indices == bundle.provenance->report_indices);
  for (std::size_t i = 0; i < bundle.provenance->x_points.size(); ++i)
    CHECK(back.provenance->x_points[i].coords == bundle.provenance->x_points[i].coords);

  bundle.provenance.reset();
  save_bundle(bundle, path);
  CHECK_FALSE(load_bundle(path).provenance.has_value());
}

TEST_CASE("charts and distance matrices reload to equal values") {
  auto bundle = small_bundle();
  auto view = bundle.view();
  auto da = SurrogateYDistances::lazy(view);
  ChartCache cache(view, da);
  const LocalChart* chart = cache.get(0);
  REQUIRE(chart != nullptr);

  auto c2 = chart_from_json(chart_to_json(*chart));
  CHECK(c2.center_index == chart->center_index);
  CHECK(c2.constellation.p0_index == chart->constellation.p0_index);
  CHECK(c2.constellation.p_indices == chart->constellation.p_indices);
  CHECK(c2.constellation.q_indices == chart->constellation.q_indices);
  CHECK(c2.constellation.case_tag == chart->constellation.case_tag);
  CHECK(c2.step_indices == chart->step_indices);
  CHECK(c2.gram == chart->gram);
  CHECK(c2.gram_inverse == chart->gram_inverse);
  CHECK(c2.s_value == chart->s_value);

  std::map<int, LocalChart> charts{{0, *chart}};
  save_charts(charts, scratch() / "charts_rt.json");
  auto charts2 = load_charts(scratch() / "charts_rt.json");
  REQUIRE(charts2.count(0) == 1);
  CHECK(charts2.at(0).gram == chart->gram);

  auto graph = build_graph(view, da, cache);
  auto matrix = chain_distances(graph, {0});
  const auto csv = scratch() / "matrix_rt.csv";
  save_matrix(matrix, bundle.params, csv);
  auto m2 = load_matrix(csv);
  CHECK(m2.node_count == matrix.node_count);
  CHECK(m2.node_ids == matrix.node_ids);
  CHECK(m2.sources == matrix.sources);
  CHECK(m2.hops == matrix.hops);
  CHECK(m2.parents == matrix.parents);
  CHECK(m2.unreachable == matrix.unreachable);
  for (std::size_t s = 0; s < matrix.values.size(); ++s)
    for (int v = 0; v < matrix.node_count; ++v) {
      if (std::isfinite(matrix.values[s][v]))
        CHECK(m2.values[s][v] == matrix.values[s][v]);
      else
        CHECK_FALSE(std::isfinite(m2.values[s][v]));
    }
  const std::string sidecar = read_file(csv.string() + ".json");
  CHECK(sidecar.find(params_hash(bundle.params)) != std::string::npos);
  CHECK(sidecar.find("hop_histogram") != std::string::npos);
}

TEST_CASE("kernel sample sets reload bit-identically through the binary sidecar") {
  auto spec = ManifoldSpec::flat_torus(Eigen::MatrixXd::Identity(2, 2));
  NetY y;
  y.ball_center = {Eigen::VectorXd::Zero(2)};
  y.ball_radius = 0.3;
  y.anchor_index = 0;
  y.points.push_back(y.ball_center);
  Eigen::VectorXd p(2);
  p << 0.1, 0.05;
  y.points.push_back({p});
  std::vector<PointRep> z{{(Eigen::VectorXd(2) << 0.2, 0.3).finished()}};
  auto samples = corrupt_kernel(spec, y, z, {1e-4, 1e-3, 1e-2}, 1e-3,
                                NoiseProfile::WorstCaseSign, 11);

  const auto path = scratch() / "kernel_rt.json";
  save_kernel_samples(samples, path);
  auto back = load_kernel_samples(path);
  CHECK(back.y_indices == samples.y_indices);
  CHECK(back.times == samples.times);
  CHECK(back.sigma == samples.sigma);
  CHECK(back.case_tag == samples.case_tag);
  CHECK(back.log_values == samples.log_values);
  for (std::size_t i = 0; i < z.size(); ++i) CHECK(back.z_points[i].coords == z[i].coords);

  // a truncated sidecar is rejected rather than silently zero-padded
  atomic_write_text(path.parent_path() / "kernel_rt.bin", "short");
  CHECK_THROWS_AS(load_kernel_samples(path), InputError);
}

TEST_CASE("repeat runs with the same config and seed are byte-identical") {
  auto cfg_path = write_config("det.json", base_config("det_a"));
  auto cfg = load_config(cfg_path);
  auto r1 = run(cfg);
  REQUIRE(r1.success);
  const std::string first = read_file(scratch() / "det_a" / "distance_matrix.csv");

  cfg.out_dir = scratch() / "det_b";
  auto r2 = run(cfg);
  REQUIRE(r2.success);
  CHECK(first == read_file(scratch() / "det_b" / "distance_matrix.csv"));
  CHECK(read_file(scratch() / "det_a" / "bundle.json") ==
        read_file(scratch() / "det_b" / "bundle.json"));
  CHECK(first.substr(0, 10) == "i,j,value\n");
}

TEST_CASE("stage prefixes persist exactly their artifacts") {
  auto cfg = load_config(write_config("stages.json", base_config("stages_out")));
  cfg.stop_after = "synth";
  REQUIRE(run(cfg).success);
  CHECK(std::filesystem::exists(cfg.out_dir / "bundle.json"));
  CHECK(std::filesystem::exists(cfg.out_dir / "run.json"));
  CHECK_FALSE(std::filesystem::exists(cfg.out_dir / "distance_matrix.csv"));

  cfg.stop_after = "recon-global";
  REQUIRE(run(cfg).success);
  CHECK(std::filesystem::exists(cfg.out_dir / "charts.json"));
  CHECK(std::filesystem::exists(cfg.out_dir / "distance_matrix.csv"));
  CHECK_FALSE(std::filesystem::exists(cfg.out_dir / "evaluation.csv"));

  cfg.stop_after = "heat2dist"; // not part of the distance_data sequence
  CHECK_THROWS_AS(run(cfg), InputError);
}

TEST_CASE("stripping provenance leaves the reconstruction outputs identical") {
  auto cfg = load_config(write_config("parity.json", base_config("parity_a")));
  auto r1 = run(cfg);
  REQUIRE(r1.success);
  CHECK_FALSE(r1.evaluation_skipped);
  CHECK(r1.error_stats.count("max_error") == 1);

  auto bundle = load_bundle(scratch() / "parity_a" / "bundle.json");
  bundle.provenance.reset();
  save_bundle(bundle, scratch() / "stripped.json");

  cfg.bundle_path = scratch() / "stripped.json";
  cfg.out_dir = scratch() / "parity_b";
  auto r2 = run(cfg);
  REQUIRE(r2.success);
  CHECK(r2.evaluation_skipped);
  CHECK(r2.error_stats.count("max_error") == 0);
  CHECK(read_file(scratch() / "parity_a" / "distance_matrix.csv") ==
        read_file(scratch() / "parity_b" / "distance_matrix.csv"));
  CHECK(read_file(scratch() / "parity_a" / "charts.json") ==
        read_file(scratch() / "parity_b" / "charts.json"));
  CHECK(read_file(scratch() / "parity_b" / "run.json").find("\"skipped\"") != std::string::npos);
}

TEST_CASE("every flagged event carries its stage and shows up exactly once") {
  auto cfg = load_config(write_config("flags.json", base_config("flags_out")));
  auto report = run(cfg);
  REQUIRE(report.success);

  std::size_t dropped = 0, unreachable = 0, chart_failures = 0;
  for (const auto& f : report.flags) {
    REQUIRE_FALSE(f.stage.empty());
    if (f.message.find("without a usable chart") != std::string::npos) {
      ++dropped;
      CHECK(f.stage == "recon-global");
      CHECK(f.indices.size() == 2);
    } else if (f.message.find("unreachable") != std::string::npos) {
      ++unreachable;
      CHECK(f.stage == "recon-global");
    } else if (f.message.find("chart construction failed") != std::string::npos) {
      ++chart_failures;
      CHECK(f.stage == "recon-local");
    }
  }
  CHECK(dropped == std::size_t(report.error_stats.at("dropped_pairs")));
  CHECK(unreachable == std::size_t(report.error_stats.at("unreachable_pairs")));
  CHECK(chart_failures == std::size_t(report.error_stats.at("charts_failed")));
  CHECK(dropped + unreachable + chart_failures == report.flags.size());
}

TEST_CASE("heat case (ii) runs end to end and clamps are flagged") {
  const std::string text = R"({
  "mode": "heat_kernel_case_ii",
  "manifold": {"kind": "flat_torus", "basis": [[1,0],[0,1]]},
  "bounds": {"lambda": 6.0, "R": 0.3, "n": 2},
  "eps0": 0.05, "eps1": 0.07,
  "seed": 9,
  "out": "heat_out",
  "heat": {"times": [1e-5, 1e-4, 1e-3], "sigma": 1e-4, "profile": "worst_case_sign",
           "source_eps": 0.08},
  "eval_probes": 30
}
)";
  auto cfg = load_config(write_config("heat.json", text));
  auto report = run(cfg);
  REQUIRE(report.success);
  CHECK(report.error_stats.at("t_star") == 1e-5);
  CHECK(std::filesystem::exists(cfg.out_dir / "kernel_samples.bin"));
  CHECK(std::filesystem::exists(cfg.out_dir / "t_selection.json"));

  auto bundle = load_bundle(cfg.out_dir / "bundle.json");
  CHECK(bundle.params.eps1 == 7.0 * std::sqrt(1e-4)); // sigma overrides eps1
  std::size_t clamp_flags = 0;
  for (const auto& f : report.flags)
    if (f.stage == "heat2dist") ++clamp_flags;
  CHECK(clamp_flags == std::size_t(report.error_stats.at("clamped_estimates")));

  // the z net covers the ball, so some source sits on a landmark
  CHECK(report.error_stats.at("kernel_sources") > 0);

  // rerunning from the persisted samples (real-data path) reproduces the bundle
  PipelineConfig replay = cfg;
  replay.heat.samples_path = cfg.out_dir / "kernel_samples.json";
  replay.out_dir = scratch() / "heat_replay";
  REQUIRE(run(replay).success);
  CHECK(read_file(cfg.out_dir / "bundle.json") == read_file(replay.out_dir / "bundle.json"));
}

TEST_CASE("case (i) requires the landmark distance table by name") {
  const std::string text = R"({
  "mode": "heat_kernel_case_i",
  "manifold": {"kind": "flat_torus", "basis": [[1,0],[0,1]]},
  "bounds": {"lambda": 6.0, "R": 0.3, "n": 2},
  "eps0": 0.05, "eps1": 0.07,
  "seed": 9,
  "out": "case_i_out",
  "heat": {"times": [1e-5, 1e-4, 1e-3], "sigma": 1e-4, "source_eps": 0.08}
}
)";
  try {
    load_config(write_config("case_i_missing.json", text));
    FAIL("expected an input error");
  } catch (const InputError& e) {
    CHECK(std::string(e.what()).find("landmark_distances") != std::string::npos);
  }

  // supplying the table makes the same config runnable
  const std::string fixed = text.substr(0, text.rfind("\"source_eps\": 0.08")) +
                            "\"source_eps\": 0.08, \"landmark_distances\": {\"jitter\": 0.0}}\n}\n";
  auto cfg = load_config(write_config("case_i_ok.json", fixed));
  auto report = run(cfg);
  REQUIRE(report.success);
  auto bundle = load_bundle(cfg.out_dir / "bundle.json");
  // case (i) appends the landmarks themselves as hidden points
  CHECK(static_cast<int>(bundle.vectors.size()) ==
        int(report.error_stats.at("kernel_sources")) + bundle.net_y.J());
}

TEST_CASE("sweeps continue past failures and keep a nonincreasing error column") {
  auto cfg = load_config(write_config(
      "sweep.json", base_config("sweep_out", R"(,
  "sweep": {"axis": "eps1", "values": [1e-2, 1e-3]})")));
  auto sw = sweep(cfg);
  CHECK(sw.axis == "eps1");
  CHECK(sw.reference_exponent == doctest::Approx(0.125));
  CHECK(sw.failures.empty());
  CHECK(sw.slope_defined);
  CHECK(sw.slope > 0.0); // error shrinks with eps1

  std::vector<double> max_errors;
  for (const auto& row : sw.rows)
    if (row.metric == "max_error") max_errors.push_back(row.value);
  REQUIRE(max_errors.size() == 2);
  CHECK(max_errors[1] <= max_errors[0]);

  const std::string csv = read_file(scratch() / "sweep_out" / "sweep.csv");
  CHECK(csv.substr(0, 34) == "axis,axis_value,stage,metric,value");
  CHECK(std::filesystem::exists(scratch() / "sweep_out" / "sweep.json"));

  // guards: empty axis and unsorted axis
  auto bad = cfg;
  bad.sweep_values = {};
  CHECK_THROWS_AS(sweep(bad), InputError);
  bad.sweep_values = {1e-3, 1e-2};
  CHECK_THROWS_AS(sweep(bad), InputError);

  // a failing value is recorded while the sweep continues: eps1 = 2 breaks
  // the step-size precondition
  auto mixed = cfg;
  mixed.out_dir = scratch() / "sweep_mixed";
  mixed.sweep_values = {2.0, 1e-3};
  auto sw2 = sweep(mixed);
  REQUIRE(sw2.failures.size() == 1);
  CHECK(sw2.failures[0].first == 2.0);
  CHECK(sw2.failures[0].second == "input");
  bool saw_good = false;
  for (const auto& row : sw2.rows) saw_good = saw_good || (row.axis_value == 1e-3 && row.metric == "max_error");
  CHECK(saw_good);
}

TEST_CASE("the command line maps error categories to exit codes") {
  if (!std::filesystem::exists("reconcli")) return; // only meaningful from the build tree

  auto cfg_path = write_config("cli_ok.json", base_config("cli_out"));
  auto shell = [&](const std::string& args) {
    return WEXITSTATUS(std::system(("./reconcli " + args + " > /dev/null 2>&1").c_str()));
  };
  CHECK(shell("evaluate --config " + cfg_path.string()) == 0);
  CHECK(shell("report --config " + cfg_path.string()) == 0);
  CHECK(shell("evaluate --config " + (scratch() / "missing.json").string()) == 2);
  CHECK(shell("heat2dist --config " + cfg_path.string()) == 2); // wrong mode for the stage

  // an overridden eps1 that breaks the step-size precondition surfaces as an
  // input error
  CHECK(shell("evaluate --config " + cfg_path.string() + " --eps1 2.0 --out " +
              (scratch() / "cli_bad").string()) == 2);
}
