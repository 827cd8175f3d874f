#pragma once

#include <filesystem>
#include <map>

#include "recon/global.hpp"
#include "recon/heat.hpp"

namespace recon {

// All writers go through a temp-file + rename so readers never observe a
// partial artifact. Doubles are emitted in shortest exact decimal form (JSON)
// or %.17g (CSV); both reload bit-identically.
void atomic_write_text(const std::filesystem::path& path, const std::string& text);

std::string spec_to_json(const ManifoldSpec& spec);
ManifoldSpec spec_from_json(const std::string& text);

std::string params_to_json(const ReconstructionParams& params);
ReconstructionParams params_from_json(const std::string& text);

// FNV-1a over the canonical JSON form, hex-encoded.
std::string params_hash(const ReconstructionParams& params);

void save_bundle(const DataBundle& bundle, const std::filesystem::path& path);
DataBundle load_bundle(const std::filesystem::path& path);

std::string chart_to_json(const LocalChart& chart);
LocalChart chart_from_json(const std::string& text);

void save_charts(const std::map<int, LocalChart>& charts, const std::filesystem::path& path);
std::map<int, LocalChart> load_charts(const std::filesystem::path& path);

// CSV of (row node, col node, value) for finite entries; hops, parents and
// unreachable pairs live in a JSON sidecar at <csv path>.json together with the
// hop histogram and the hash of the params that produced the matrix.
void save_matrix(const DistanceMatrix& matrix, const ReconstructionParams& params,
                 const std::filesystem::path& csv_path);
DistanceMatrix load_matrix(const std::filesystem::path& csv_path);

// JSON metadata plus a raw little-endian float64 sidecar at <json stem>.bin
// holding log_values in [z][y][t] row-major order. Externally measured kernel
// logs enter the pipeline through this format.
void save_kernel_samples(const KernelSampleSet& samples, const std::filesystem::path& json_path);
KernelSampleSet load_kernel_samples(const std::filesystem::path& json_path);

} // namespace recon
