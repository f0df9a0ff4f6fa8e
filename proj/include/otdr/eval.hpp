#pragma once

// Metric definitions and the benchmark harness comparing the threshold
// detector against the trained classifier on a held-out synthetic test set.

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "otdr/baseline.hpp"
#include "otdr/classifier.hpp"
#include "otdr/plant.hpp"

namespace otdr {

struct MethodMetrics {
    double detection_accuracy = 0.0;    // predicted class == true class
    double false_positive_rate = 0.0;   // non-Normal predictions on true-Normal traces
    std::optional<double> mean_localization_error_m;  // matched-class faulty traces only
    double mean_latency_s = 0.0;        // filled by the harness, not by score()
    std::array<std::array<std::uint64_t, 4>, 4> confusion{};  // [true][pred]
};

struct BenchmarkReport {
    MethodMetrics baseline;
    MethodMetrics cnn;
    std::string dataset_descriptor;
    std::size_t n_traces = 0;
    std::uint64_t test_master_seed = 0;
    std::uint64_t train_master_seed = 0;
    double position_tolerance_m = 0.0;  // reported alongside, does not gate accuracy
    std::string environment_note;
};

// Classification accuracy, false-positive rate over true-Normal traces and
// localization error over traces where prediction and truth agree on a
// non-Normal class. Throws std::invalid_argument on length mismatch.
MethodMetrics score(const std::vector<Detection>& detections,
                    const std::vector<FaultLabel>& labels, double position_tolerance_m);

// Synthesizes the held-out test set, runs both detectors on byte-identical
// traces, times pure inference per trace and assembles the report. Refuses a
// test master seed equal to the training master seed.
BenchmarkReport run_benchmark(const SamplerConfig& test_cfg, const AcquisitionConfig& acq,
                              const CnnModel& model, const ThresholdConfig& threshold_cfg,
                              std::uint64_t train_master_seed,
                              double position_tolerance_m = 5.0);

// Aligned four-row table mirroring the headline comparison.
std::string format_report_table(const BenchmarkReport& report);

}  // namespace otdr
