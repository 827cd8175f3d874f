#pragma once

#include "recon/io.hpp"
#include "recon/synthesis.hpp"

namespace recon {

enum class PipelineMode { DistanceData, HeatKernelCaseI, HeatKernelCaseII };

// Synthetic landmark-distance table for heat case (i), where landmark
// distances are supplied out of band rather than kernel-derived.
struct LandmarkTableConfig {
  bool supplied = false;
  double jitter = 0.0; // uniform corruption half-width; 0 = exact distances
};

struct HeatStageConfig {
  std::vector<double> times;
  double sigma = 0.0;
  NoiseProfile profile = NoiseProfile::WorstCaseSign;
  double source_eps = 0.05; // kernel source net spacing
  LandmarkTableConfig landmark_distances;
  std::filesystem::path samples_path; // preexisting kernel samples; skips corruption
};

struct SynthStageConfig {
  bool chart_support = false;
  ChartSupportOptions chart_options;
  NoiseSpec noise;
};

struct PipelineConfig {
  ManifoldSpec spec;
  ReconstructionParams params;
  PipelineMode mode = PipelineMode::DistanceData;
  std::uint64_t seed = 0;
  std::filesystem::path out_dir;
  std::filesystem::path bundle_path; // preexisting bundle; skips synthesis
  SynthStageConfig synthesis;
  HeatStageConfig heat;
  PointRep ball_center;          // observation ball center; empty = canonical base point
  std::vector<int> sources;      // chart centers / matrix rows; empty = all hidden points
  std::size_t eval_probes = 200;
  int threads = 1;
  bool with_provenance = true;
  std::string stop_after;        // run a stage prefix; empty = the full sequence
  std::string sweep_axis;        // "eps1" | "sigma"
  std::vector<double> sweep_values;

  void validate() const;
};

// Parses the JSON config document; relative paths resolve against the config's
// own directory.
PipelineConfig load_config(const std::filesystem::path& path);

struct RunFlag {
  std::string stage;
  std::string message;
  std::vector<int> indices;
};

struct RunReport {
  bool success = true;
  int exit_code = 0;
  std::string failure_stage;
  std::string failure_category;
  std::string failure_message;
  std::vector<std::pair<std::string, double>> stage_seconds;
  std::map<std::string, double> error_stats;
  std::map<std::string, double> constants_snapshot;
  std::vector<RunFlag> flags;
  bool evaluation_skipped = false;
};

std::string report_to_json(const RunReport& report);

// Executes the mode's stage sequence, persisting every intermediate artifact
// under config.out_dir; a stage failure is recorded in the report (and
// run.json) with partial artifacts retained rather than thrown.
RunReport run(const PipelineConfig& config);

struct SweepRow {
  double axis_value = 0.0;
  std::string stage;
  std::string metric;
  double value = 0.0;
};

struct SweepReport {
  std::string axis;
  std::vector<SweepRow> rows;
  std::vector<std::pair<double, std::string>> failures; // axis value -> category
  double slope = 0.0;           // least-squares log(max error) vs log(axis)
  double reference_exponent = 0.0;
  bool slope_defined = false;
};

// Runs the pipeline per axis value (descending) into per-value subdirectories
// and writes sweep.csv / sweep.json; individual failures are recorded and the
// sweep continues.
SweepReport sweep(const PipelineConfig& config);

} // namespace recon
