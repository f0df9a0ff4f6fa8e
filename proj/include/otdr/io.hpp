#pragma once

// File formats: scenario/route/weights/report JSON, trace CSV, dataset
// manifest JSONL. All writers are atomic (temp file + rename) and all
// formats round-trip bit-exactly for finite doubles.

#include <filesystem>
#include <string>
#include <vector>

#include "otdr/classifier.hpp"
#include "otdr/eval.hpp"
#include "otdr/geo.hpp"
#include "otdr/plant.hpp"

namespace otdr::io {

// Raised for malformed or contract-violating input files; message carries
// file name and, for JSON, line/column of the parse failure.
struct FileFormatError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

void atomic_write(const std::filesystem::path& path, const std::string& content);

// Scenario JSON: {config:{...}, events:[...], label:{class, position_m?}}.
FiberScenario read_scenario(const std::filesystem::path& path);
std::string scenario_to_json(const FiberScenario& s);
void write_scenario(const std::filesystem::path& path, const FiberScenario& s);

// Trace CSV: '# key=value' comment lines, a 'distance_m,power_db' header,
// one row per sample with distance ascending from 0.
std::string trace_to_csv(const Trace& t);
void write_trace(const std::filesystem::path& path, const Trace& t);
Trace read_trace(const std::filesystem::path& path);

// Route JSON: {slack_factor, waypoints:[{lat, lon}...]} or pre-chainaged
// {vertices:[{lat, lon, chainage_m}...]}.
RoutePolyline read_route(const std::filesystem::path& path);
void write_route(const std::filesystem::path& path, const RoutePolyline& r);

// Model weights JSON: {format_version:1, input_len, layers:[...]}, flat
// row-major arrays; reload reproduces forward outputs bitwise.
std::string weights_to_json(const CnnModel& m);
void write_weights(const std::filesystem::path& path, const CnnModel& m);
CnnModel read_weights(const std::filesystem::path& path);

// Dataset manifest: one JSON object per line
// {trace, class, position_m?, seed}; paths are relative to the manifest.
struct ManifestEntry {
    std::string trace_path;
    FaultLabel label;
    std::uint64_t seed = 0;
};
std::string manifest_to_jsonl(const std::vector<ManifestEntry>& entries);
std::vector<ManifestEntry> read_manifest(const std::filesystem::path& path);

// Loads every trace referenced by a manifest (paths resolved against the
// manifest's directory).
std::vector<std::pair<Trace, FaultLabel>> load_manifest_dataset(
    const std::filesystem::path& manifest_path);

// Sampler / threshold / cnn configs as JSON objects (missing keys keep
// defaults; unknown keys are rejected).
SamplerConfig read_sampler_config(const std::filesystem::path& path);
std::string sampler_config_to_json(const SamplerConfig& cfg);
ThresholdConfig read_threshold_config(const std::filesystem::path& path);

// Benchmark report as JSON with lexicographically sorted keys.
std::string report_to_json(const BenchmarkReport& r);
void write_report(const std::filesystem::path& path, const BenchmarkReport& r);

// CSV training log: epoch,train_loss,val_loss,val_acc.
std::string training_log_to_csv(const std::vector<EpochLog>& log);

}  // namespace otdr::io
