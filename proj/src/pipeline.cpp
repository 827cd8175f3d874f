#include "recon/pipeline.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <json.hpp>
#include <random>

namespace recon {

using nlohmann::json;

namespace {

std::string fmt17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

PointRep canonical_base_point(const ManifoldSpec& spec) {
  if (spec.kind == ManifoldKind::MeshGraph) {
    Eigen::VectorXd v(1);
    v << 0.0;
    return {v};
  }
  if (spec.kind == ManifoldKind::Sphere) {
    Eigen::VectorXd v = Eigen::VectorXd::Zero(spec.n + 1);
    v[spec.n] = spec.radius;
    return {v};
  }
  return {Eigen::VectorXd::Zero(spec.n)};
}

const char* category_name(ErrorCategory cat) {
  switch (cat) {
    case ErrorCategory::Input: return "input";
    case ErrorCategory::Selection: return "selection";
    case ErrorCategory::Resource: return "resource";
  }
  return "unknown";
}

std::vector<std::string> stage_sequence(PipelineMode mode) {
  if (mode == PipelineMode::DistanceData)
    return {"synth", "recon-local", "recon-global", "evaluate"};
  return {"synth", "heat2dist", "recon-local", "recon-global", "evaluate"};
}

NoiseSpec noise_from_json(const json& j) {
  NoiseSpec spec;
  const std::string model = j.value("model", "none");
  spec.bound = j.value("bound", 0.0);
  if (model == "none")
    spec.model = NoiseModel::None;
  else if (model == "uniform")
    spec.model = NoiseModel::Uniform;
  else if (model == "adversarial")
    spec.model = NoiseModel::AdversarialExtremes;
  else
    throw InputError("unknown noise model: " + model);
  return spec;
}

// 2-D classical multidimensional scaling over the source rows; visual sanity
// only, never consumed by acceptance.
void write_embedding(const DistanceMatrix& matrix, const ReconstructionParams& params,
                     const std::filesystem::path& path) {
  const int m = static_cast<int>(matrix.sources.size());
  if (m < 3) return;
  Eigen::MatrixXd d2(m, m);
  for (int a = 0; a < m; ++a)
    for (int b = 0; b < m; ++b) {
      double v = matrix.values[a][matrix.sources[b]];
      if (!std::isfinite(v)) v = params.bounds.lambda;
      d2(a, b) = v * v;
    }
  d2 = 0.5 * (d2 + d2.transpose()).eval();
  const Eigen::MatrixXd center =
      Eigen::MatrixXd::Identity(m, m) - Eigen::MatrixXd::Constant(m, m, 1.0 / m);
  const Eigen::MatrixXd b = -0.5 * center * d2 * center;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(b);
  std::string csv = "node,x,y\n";
  for (int a = 0; a < m; ++a) {
    csv += std::to_string(matrix.sources[a]);
    for (int axis = 0; axis < 2; ++axis) {
      const int k = m - 1 - axis; // eigenvalues ascend
      const double scale = std::sqrt(std::max(0.0, eig.eigenvalues()[k]));
      csv += ',';
      csv += fmt17(scale * eig.eigenvectors()(a, k));
    }
    csv += '\n';
  }
  atomic_write_text(path, csv);
}

struct StageClock {
  std::chrono::steady_clock::time_point start = std::chrono::steady_clock::now();
  double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  }
};

} // namespace

void PipelineConfig::validate() const {
  spec.validate();
  params.validate();
  if (out_dir.empty()) throw InputError("config needs an output directory");
  if (threads < 1) throw InputError("threads must be at least 1");
  if (mode != PipelineMode::DistanceData && bundle_path.empty()) {
    if (heat.samples_path.empty() && heat.times.empty())
      throw InputError("heat modes need heat.times");
    if (mode == PipelineMode::HeatKernelCaseI && !heat.landmark_distances.supplied)
      throw InputError("heat_kernel_case_i needs heat.landmark_distances");
  }
  if (!stop_after.empty()) {
    const auto seq = stage_sequence(mode);
    if (std::find(seq.begin(), seq.end(), stop_after) == seq.end())
      throw InputError("stage '" + stop_after + "' is not part of this mode's sequence");
  }
}

PipelineConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot open config " + path.string());
  const std::string text{std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
  json j = json::parse(text, nullptr, false);
  if (j.is_discarded()) throw InputError("malformed JSON config " + path.string());
  const auto base = path.has_parent_path() ? path.parent_path() : std::filesystem::path(".");
  auto resolve = [&](const std::string& p) {
    std::filesystem::path fp(p);
    return fp.is_absolute() ? fp : base / fp;
  };

  PipelineConfig cfg;
  const std::string mode = j.value("mode", "distance_data");
  if (mode == "distance_data")
    cfg.mode = PipelineMode::DistanceData;
  else if (mode == "heat_kernel_case_i")
    cfg.mode = PipelineMode::HeatKernelCaseI;
  else if (mode == "heat_kernel_case_ii")
    cfg.mode = PipelineMode::HeatKernelCaseII;
  else
    throw InputError("unknown mode: " + mode);

  if (!j.contains("manifold")) throw InputError("config needs a manifold");
  cfg.spec = spec_from_json(j.at("manifold").dump());

  if (!j.contains("bounds")) throw InputError("config needs geometry bounds");
  const auto& bj = j.at("bounds");
  GeometryBounds gb{bj.at("lambda").get<double>(), bj.at("R").get<double>(), bj.at("n").get<int>()};
  const double eps1 = j.value("eps1", 0.01);
  const double eps0 = std::min(j.value("eps0", eps1), eps1);
  cfg.params = ReconstructionParams::defaults(gb, eps0, eps1);
  if (j.contains("overrides")) {
    const auto& ov = j.at("overrides");
    cfg.params.rho0 = ov.value("rho0", cfg.params.rho0);
    cfg.params.c1_threshold = ov.value("c1_threshold", cfg.params.c1_threshold);
    cfg.params.C17 = ov.value("C17", cfg.params.C17);
    if (ov.contains("constants"))
      for (const auto& [name, value] : ov.at("constants").items())
        cfg.params.constants[name] = value.get<double>();
  }

  cfg.seed = j.value("seed", std::uint64_t{0});
  if (!j.contains("out")) throw InputError("config needs an output directory");
  cfg.out_dir = resolve(j.at("out").get<std::string>());
  if (j.contains("bundle")) cfg.bundle_path = resolve(j.at("bundle").get<std::string>());

  if (j.contains("synthesis")) {
    const auto& sj = j.at("synthesis");
    cfg.synthesis.chart_support = sj.value("mode", "literal") == "chart_support";
    if (sj.contains("noise")) cfg.synthesis.noise = noise_from_json(sj.at("noise"));
    auto& co = cfg.synthesis.chart_options;
    if (sj.contains("centers"))
      for (const auto& row : sj.at("centers")) {
        Eigen::VectorXd v(row.size());
        for (std::size_t k = 0; k < row.size(); ++k) v[static_cast<Eigen::Index>(k)] = row[k].get<double>();
        co.centers.push_back({v});
      }
    co.report_count = sj.value("report_count", co.report_count);
    co.coarse_y_eps = sj.value("coarse_y_eps", co.coarse_y_eps);
    co.frame_ring_points = sj.value("frame_ring_points", co.frame_ring_points);
    co.partner_spacing_factor = sj.value("partner_spacing_factor", co.partner_spacing_factor);
    co.step_directions = sj.value("step_directions", co.step_directions);
    co.cluster_per_center = sj.value("cluster_per_center", co.cluster_per_center);
    co.cluster_radius_factor = sj.value("cluster_radius_factor", co.cluster_radius_factor);
    co.exact_partners = sj.value("exact_partners", co.exact_partners);
  }

  if (j.contains("heat")) {
    const auto& hj = j.at("heat");
    cfg.heat.times = hj.value("times", std::vector<double>{});
    cfg.heat.sigma = hj.value("sigma", 0.0);
    cfg.params.sigma = cfg.heat.sigma;
    const std::string profile = hj.value("profile", "worst_case_sign");
    if (profile == "worst_case_sign")
      cfg.heat.profile = NoiseProfile::WorstCaseSign;
    else if (profile == "uniform")
      cfg.heat.profile = NoiseProfile::Uniform;
    else
      throw InputError("unknown noise profile: " + profile);
    cfg.heat.source_eps = hj.value("source_eps", cfg.heat.source_eps);
    if (hj.contains("landmark_distances")) {
      cfg.heat.landmark_distances.supplied = true;
      cfg.heat.landmark_distances.jitter = hj.at("landmark_distances").value("jitter", 0.0);
    }
    if (hj.contains("samples")) cfg.heat.samples_path = resolve(hj.at("samples").get<std::string>());
  }

  if (j.contains("ball_center")) {
    const auto& cj = j.at("ball_center");
    Eigen::VectorXd v(cj.size());
    for (std::size_t k = 0; k < cj.size(); ++k) v[static_cast<Eigen::Index>(k)] = cj[k].get<double>();
    cfg.ball_center = {v};
  }
  cfg.sources = j.value("sources", std::vector<int>{});
  cfg.eval_probes = j.value("eval_probes", cfg.eval_probes);
  cfg.threads = j.value("threads", 1);
  cfg.with_provenance = j.value("provenance", true);
  if (j.contains("sweep")) {
    const auto& wj = j.at("sweep");
    cfg.sweep_axis = wj.value("axis", "eps1");
    cfg.sweep_values = wj.value("values", std::vector<double>{});
    if (cfg.sweep_axis != "eps1" && cfg.sweep_axis != "sigma")
      throw InputError("sweep axis must be eps1 or sigma");
  }
  cfg.validate();
  return cfg;
}

std::string report_to_json(const RunReport& r) {
  json j;
  j["success"] = r.success;
  j["exit_code"] = r.exit_code;
  if (!r.success) {
    j["failure"] = {{"stage", r.failure_stage},
                    {"category", r.failure_category},
                    {"message", r.failure_message}};
  }
  json stages = json::array();
  for (const auto& [name, seconds] : r.stage_seconds)
    stages.push_back({{"name", name}, {"seconds", seconds}});
  j["stages"] = std::move(stages);
  j["error_stats"] = r.error_stats;
  j["constants"] = r.constants_snapshot;
  json flags = json::array();
  for (const auto& f : r.flags)
    flags.push_back({{"stage", f.stage}, {"message", f.message}, {"indices", f.indices}});
  j["flags"] = std::move(flags);
  j["evaluation"] = r.evaluation_skipped ? "skipped" : "done";
  return j.dump(2);
}

RunReport run(const PipelineConfig& config) {
  config.validate();
  std::filesystem::create_directories(config.out_dir);

  RunReport report;
  report.constants_snapshot = config.params.constants;
  report.constants_snapshot["eps0"] = config.params.eps0;
  report.constants_snapshot["eps1"] = config.params.eps1;
  report.constants_snapshot["sigma"] = config.params.sigma;
  report.constants_snapshot["rho0"] = config.params.rho0;

  const PointRep x0 = config.ball_center.coords.size()
                          ? config.ball_center
                          : canonical_base_point(config.spec);
  const auto stages = stage_sequence(config.mode);

  DataBundle bundle;
  std::optional<SurrogateYDistances> da;
  std::optional<ChartCache> cache;
  std::optional<DistanceMatrix> matrix;
  std::vector<int> chart_centers;

  auto finish_stage = [&](const std::string& name, const StageClock& clock) {
    report.stage_seconds.push_back({name, clock.seconds()});
  };

  try {
    for (const auto& stage : stages) {
      StageClock clock;
      if (stage == "synth") {
        if (!config.bundle_path.empty()) {
          bundle = load_bundle(config.bundle_path);
        } else if (config.mode == PipelineMode::DistanceData) {
          bundle = config.synthesis.chart_support
                       ? synthesize_chart_bundle(config.spec, config.params,
                                                 config.synthesis.chart_options, config.seed)
                       : synthesize_bundle(config.spec, config.params, config.synthesis.noise,
                                           config.seed);
          if (!config.with_provenance) bundle.provenance.reset();
          save_bundle(bundle, config.out_dir / "bundle.json");
        } else {
          // heat modes: the synthetic measurement is the kernel sample set
          KernelSampleSet samples;
          if (!config.heat.samples_path.empty()) {
            samples = load_kernel_samples(config.heat.samples_path);
          } else {
            NetY y_net;
            y_net.ball_center = x0;
            y_net.ball_radius = config.params.bounds.R;
            y_net.anchor_index = 0;
            y_net.points.push_back(x0);
            for (auto& p : sample_net(config.spec, Region::ball(x0, config.params.bounds.R),
                                      config.params.eps0, config.seed))
              y_net.points.push_back(std::move(p));
            const bool full = config.mode == PipelineMode::HeatKernelCaseII;
            const auto region = full ? Region::whole()
                                     : Region::complement(x0, config.params.bounds.R);
            const auto z_net =
                sample_net(config.spec, region, config.heat.source_eps, config.seed + 1);
            samples = corrupt_kernel(config.spec, y_net, z_net, config.heat.times,
                                     config.heat.sigma, config.heat.profile, config.seed,
                                     full ? KernelCaseTag::FullSources
                                          : KernelCaseTag::SeparatedSources);
          }
          save_kernel_samples(samples, config.out_dir / "kernel_samples.json");
          report.error_stats["kernel_sources"] = samples.Z();
          report.error_stats["kernel_landmarks"] = samples.Jy();
        }
        if (config.mode == PipelineMode::DistanceData || !config.bundle_path.empty()) {
          report.error_stats["hidden_points"] = bundle.vectors.size();
          report.error_stats["landmarks"] = bundle.net_y.J();
        }
        finish_stage(stage, clock);
      } else if (stage == "heat2dist") {
        if (!config.bundle_path.empty()) {
          finish_stage(stage, clock);
          if (config.stop_after == stage) break;
          continue;
        }
        auto samples = load_kernel_samples(config.out_dir / "kernel_samples.json");
        // the landmark net travels with the samples: rebuild it the same way
        NetY y_net;
        y_net.ball_center = x0;
        y_net.ball_radius = config.params.bounds.R;
        y_net.anchor_index = 0;
        y_net.points.push_back(x0);
        for (auto& p : sample_net(config.spec, Region::ball(x0, config.params.bounds.R),
                                  config.params.eps0, config.seed))
          y_net.points.push_back(std::move(p));
        if (static_cast<int>(y_net.points.size()) != samples.Jy())
          throw InputError("kernel samples do not match the configured landmark net");

        const auto t_sel = select_t(samples);
        json tj;
        tj["t_star"] = t_sel.t_star;
        json cands = json::array();
        for (const auto& c : t_sel.diagnostics)
          cands.push_back({{"t", c.t}, {"spread", c.spread}, {"eligible", c.eligible}});
        tj["candidates"] = std::move(cands);
        atomic_write_text(config.out_dir / "t_selection.json", tj.dump(2));

        const auto estimates = distances_from_kernel(samples, t_sel);
        for (auto [i, j] : estimates.clamped)
          report.flags.push_back({"heat2dist", "nonnegative log kernel clamped to distance 0", {i, j}});
        report.error_stats["t_star"] = t_sel.t_star;
        report.error_stats["clamped_estimates"] = estimates.clamped.size();

        std::vector<std::vector<double>> dY;
        const std::vector<std::vector<double>>* dY_ptr = nullptr;
        if (config.mode == PipelineMode::HeatKernelCaseI) {
          std::mt19937_64 rng(config.seed ^ 0x5bd1e995u);
          std::uniform_real_distribution<double> u(-1.0, 1.0);
          dY.assign(samples.Jy(), std::vector<double>(samples.Jy(), 0.0));
          for (int a = 0; a < samples.Jy(); ++a)
            for (int b = 0; b < samples.Jy(); ++b) {
              const double noise = config.heat.landmark_distances.jitter * u(rng);
              dY[a][b] = a == b ? 0.0
                                : geodesic_distance(config.spec, y_net.points[a], y_net.points[b]) +
                                      noise;
            }
          dY_ptr = &dY;
        }
        bundle = assemble_bundle_from_kernel(
            samples, estimates,
            config.mode == PipelineMode::HeatKernelCaseI ? DYSource::Given : DYSource::KernelDerived,
            config.params, y_net, dY_ptr, config.with_provenance ? &config.spec : nullptr);
        save_bundle(bundle, config.out_dir / "bundle.json");
        report.error_stats["hidden_points"] = bundle.vectors.size();
        report.error_stats["landmarks"] = bundle.net_y.J();
        finish_stage(stage, clock);
      } else if (stage == "recon-local") {
        da.emplace(SurrogateYDistances::lazy(bundle.view()));
        cache.emplace(bundle.view(), *da);
        chart_centers = config.sources;
        if (chart_centers.empty()) {
          chart_centers.resize(bundle.vectors.size());
          for (std::size_t i = 0; i < bundle.vectors.size(); ++i) chart_centers[i] = static_cast<int>(i);
        }
        std::map<int, LocalChart> charts;
        for (int i : chart_centers) {
          if (const LocalChart* chart = cache->get(i))
            charts.emplace(i, *chart);
          else
            report.flags.push_back({"recon-local", "chart construction failed", {i}});
        }
        save_charts(charts, config.out_dir / "charts.json");
        report.error_stats["charts_built"] = charts.size();
        report.error_stats["charts_failed"] = chart_centers.size() - charts.size();
        finish_stage(stage, clock);
      } else if (stage == "recon-global") {
        auto graph = build_graph(bundle.view(), *da, *cache);
        for (auto [i, j] : graph.dropped_pairs)
          report.flags.push_back({"recon-global", "admissible pair without a usable chart", {i, j}});
        matrix = chain_distances(graph, config.sources);
        for (auto [src, v] : matrix->unreachable)
          report.flags.push_back({"recon-global", "unreachable within the hop cap", {src, v}});
        save_matrix(*matrix, bundle.params, config.out_dir / "distance_matrix.csv");
        report.error_stats["graph_edges"] = graph.edges.size();
        report.error_stats["hop_cap"] = graph.hop_cap;
        report.error_stats["dropped_pairs"] = graph.dropped_pairs.size();
        report.error_stats["unreachable_pairs"] = matrix->unreachable.size();
        finish_stage(stage, clock);
      } else if (stage == "evaluate") {
        write_embedding(*matrix, bundle.params, config.out_dir / "embedding.csv");
        if (!bundle.provenance) {
          report.evaluation_skipped = true;
        } else {
          auto rep = evaluate_matrix(*matrix, bundle, config.eval_probes, config.seed);
          report.error_stats["max_error"] = rep.max_error;
          report.error_stats["mean_error"] = rep.mean_error;
          report.error_stats["evaluated_pairs"] = rep.pairs;
          report.error_stats["eps2_worst"] = rep.eps2_worst;
          report.error_stats["eps2_bound"] = rep.eps2_bound;
          std::string csv = "metric,value\n";
          csv += "max_error," + fmt17(rep.max_error) + "\n";
          csv += "mean_error," + fmt17(rep.mean_error) + "\n";
          csv += "pairs," + std::to_string(rep.pairs) + "\n";
          csv += "unreachable_pairs," + std::to_string(rep.unreachable_pairs) + "\n";
          csv += "eps2_worst," + fmt17(rep.eps2_worst) + "\n";
          csv += "eps2_bound," + fmt17(rep.eps2_bound) + "\n";
          atomic_write_text(config.out_dir / "evaluation.csv", csv);
        }
        finish_stage(stage, clock);
      }
      if (config.stop_after == stage) break;
    }
  } catch (const Error& e) {
    report.success = false;
    report.exit_code = static_cast<int>(e.category());
    report.failure_category = category_name(e.category());
    report.failure_message = e.what();
    report.failure_stage = report.stage_seconds.size() < stages.size()
                               ? stages[report.stage_seconds.size()]
                               : stages.back();
  }

  atomic_write_text(config.out_dir / "run.json", report_to_json(report));
  return report;
}

SweepReport sweep(const PipelineConfig& config) {
  if (config.sweep_values.empty()) throw InputError("sweep needs a nonempty axis");
  for (std::size_t k = 1; k < config.sweep_values.size(); ++k)
    if (config.sweep_values[k] >= config.sweep_values[k - 1])
      throw InputError("sweep axis values must be sorted descending");

  SweepReport sw;
  sw.axis = config.sweep_axis.empty() ? "eps1" : config.sweep_axis;
  sw.reference_exponent = sw.axis == "sigma" ? 1.0 / 16.0 : 1.0 / 8.0;

  std::vector<std::pair<double, double>> loglog; // (log axis, log max error)
  for (std::size_t k = 0; k < config.sweep_values.size(); ++k) {
    const double value = config.sweep_values[k];
    PipelineConfig sub = config;
    sub.sweep_values.clear();
    sub.out_dir = config.out_dir / (sw.axis + "_" + std::to_string(k));
    if (sw.axis == "eps1") {
      sub.params.eps1 = value;
      sub.params.eps0 = std::min(config.params.eps0, value);
    } else {
      sub.heat.sigma = value;
      sub.params.sigma = value;
    }
    RunReport report;
    try {
      report = run(sub);
    } catch (const Error& e) {
      // the axis value invalidated the config before any stage could start
      sw.failures.push_back({value, category_name(e.category())});
      sw.rows.push_back({value, "config", "failure", double(static_cast<int>(e.category()))});
      continue;
    }
    if (!report.success) {
      sw.failures.push_back({value, report.failure_category});
      sw.rows.push_back({value, report.failure_stage, "failure", static_cast<double>(report.exit_code)});
      continue;
    }
    for (const auto& [metric, metric_value] : report.error_stats)
      sw.rows.push_back({value, metric == "max_error" || metric == "mean_error" ? "evaluate" : "run",
                         metric, metric_value});
    auto it = report.error_stats.find("max_error");
    if (it != report.error_stats.end() && it->second > 0.0)
      loglog.push_back({std::log(value), std::log(it->second)});
  }

  if (loglog.size() >= 2) {
    double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
    for (auto [x, y] : loglog) {
      sx += x;
      sy += y;
      sxx += x * x;
      sxy += x * y;
    }
    const double n = static_cast<double>(loglog.size());
    sw.slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
    sw.slope_defined = true;
  }

  std::string csv = "axis,axis_value,stage,metric,value\n";
  for (const auto& row : sw.rows) {
    csv += sw.axis + "," + fmt17(row.axis_value) + "," + row.stage + "," + row.metric + "," +
           fmt17(row.value) + "\n";
  }
  atomic_write_text(config.out_dir / "sweep.csv", csv);

  json j;
  j["axis"] = sw.axis;
  j["values"] = config.sweep_values;
  j["slope_defined"] = sw.slope_defined;
  j["slope"] = sw.slope;
  j["reference_exponent"] = sw.reference_exponent;
  json fails = json::array();
  for (const auto& [value, category] : sw.failures)
    fails.push_back({{"value", value}, {"category", category}});
  j["failures"] = std::move(fails);
  atomic_write_text(config.out_dir / "sweep.json", j.dump(2));
  return sw;
}

} // namespace recon
