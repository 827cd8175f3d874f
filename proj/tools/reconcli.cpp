#include <CLI11.hpp>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <json.hpp>

#include "recon/pipeline.hpp"

using namespace recon;

namespace {

struct CommonOpts {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out;
  std::optional<int> threads;
  std::optional<double> eps1;
  std::optional<double> sigma;
};

void add_common(CLI::App* cmd, CommonOpts& opts) {
  cmd->add_option("--config", opts.config_path, "JSON config document")->required();
  cmd->add_option("--seed", opts.seed, "override the config seed");
  cmd->add_option("--out", opts.out, "override the output directory");
  cmd->add_option("--threads", opts.threads, "worker count cap");
  cmd->add_option("--eps1", opts.eps1, "override the distance noise level");
  cmd->add_option("--sigma", opts.sigma, "override the kernel noise level");
}

PipelineConfig configure(const CommonOpts& opts) {
  PipelineConfig cfg = load_config(opts.config_path);
  if (opts.seed) cfg.seed = *opts.seed;
  if (opts.out) cfg.out_dir = *opts.out;
  if (opts.threads) cfg.threads = *opts.threads;
  if (opts.eps1) {
    cfg.params.eps1 = *opts.eps1;
    cfg.params.eps0 = std::min(cfg.params.eps0, *opts.eps1);
  }
  if (opts.sigma) {
    cfg.heat.sigma = *opts.sigma;
    cfg.params.sigma = *opts.sigma;
  }
  cfg.validate();
  return cfg;
}

int run_to(const CommonOpts& opts, const std::string& stop_after) {
  PipelineConfig cfg = configure(opts);
  cfg.stop_after = stop_after;
  const RunReport report = run(cfg);
  if (!report.success)
    std::cerr << "error: " << report.failure_category << " (stage " << report.failure_stage
              << "): " << report.failure_message << "\n";
  return report.exit_code;
}

int run_sweep(const CommonOpts& opts) {
  PipelineConfig cfg = configure(opts);
  const SweepReport sw = sweep(cfg);
  if (sw.slope_defined)
    std::printf("log-log slope of max error vs %s: %.6f (reference exponent %.6f)\n",
                sw.axis.c_str(), sw.slope, sw.reference_exponent);
  else
    std::printf("log-log slope undefined (fewer than 2 successful runs with positive error)\n");
  for (const auto& [value, category] : sw.failures)
    std::printf("failed at %s = %g: %s\n", sw.axis.c_str(), value, category.c_str());
  return 0;
}

int print_report(const CommonOpts& opts) {
  const PipelineConfig cfg = configure(opts);
  std::ifstream in(cfg.out_dir / "run.json", std::ios::binary);
  if (!in) throw InputError("no run.json under " + cfg.out_dir.string() + "; run the pipeline first");
  const std::string text{std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
  const auto j = nlohmann::json::parse(text);
  std::printf("status: %s\n", j.at("success").get<bool>() ? "success" : "failed");
  for (const auto& stage : j.at("stages"))
    std::printf("stage %-12s %8.3fs\n", stage.at("name").get<std::string>().c_str(),
                stage.at("seconds").get<double>());
  for (const auto& [metric, value] : j.at("error_stats").items())
    std::printf("%-20s %s\n", metric.c_str(), value.dump().c_str());
  std::printf("flags: %zu\nevaluation: %s\n", j.at("flags").size(),
              j.at("evaluation").get<std::string>().c_str());
  return 0;
}

} // namespace

int main(int argc, char** argv) {
  CLI::App app{"distance-structure reconstruction pipeline"};
  app.require_subcommand(1);

  CommonOpts opts;
  struct Sub {
    const char* name;
    const char* help;
    std::string stop_after;
  };
  const Sub subs[] = {
      {"synth", "generate the synthetic measurement data", "synth"},
      {"heat2dist", "convert kernel samples to a distance bundle", "heat2dist"},
      {"recon-local", "build local charts", "recon-local"},
      {"recon-global", "assemble the global distance matrix", "recon-global"},
      {"evaluate", "run the full pipeline including evaluation", ""},
  };
  for (const auto& sub : subs) add_common(app.add_subcommand(sub.name, sub.help), opts);
  add_common(app.add_subcommand("sweep", "run the pipeline across an axis of noise levels"), opts);
  add_common(app.add_subcommand("report", "summarize a finished run"), opts);

  CLI11_PARSE(app, argc, argv);

  try {
    const std::string name = app.get_subcommands().front()->get_name();
    if (name == "sweep") return run_sweep(opts);
    if (name == "report") return print_report(opts);
    for (const auto& sub : subs)
      if (name == sub.name) return run_to(opts, sub.stop_after);
    return 1;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return static_cast<int>(e.category());
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
