#pragma once

// The learned detector: dataset sampling, augmentation, the convolutional
// classifier with classification + localization heads, training loop,
// inference and activation-map export.

#include <array>
#include <cstdint>
#include <utility>
#include <vector>

#include "otdr/baseline.hpp"
#include "otdr/nn.hpp"
#include "otdr/plant.hpp"

namespace otdr {

// Generative ranges for the labeled synthetic dataset.
struct SamplerConfig {
    std::size_t n_traces = 7500;
    std::array<double, 4> class_mix = {0.25, 0.25, 0.25, 0.25};  // Normal/Splice/Bend/Connector
    double position_min_m = 500.0;
    double position_max_m = 9500.0;
    double splice_loss_min_db = 0.1, splice_loss_max_db = 1.0;
    double bend_loss_min_db = 0.5, bend_loss_max_db = 3.0;
    double bend_extent_min_m = 1.0, bend_extent_max_m = 20.0;
    double connector_loss_min_db = 0.2, connector_loss_max_db = 1.5;
    double connector_spike_min_db = 2.0, connector_spike_max_db = 10.0;
    double noise_mult_min = 0.5, noise_mult_max = 2.0;  // multiplies the base sigma
    std::uint64_t master_seed = 0x07D72A11C0FFEEULL;
};

// Throws std::invalid_argument when ranges are empty or the mix does not sum
// to 1 within 1e-9.
void validate_sampler_config(const SamplerConfig& cfg);

// Scenario for item i, derived from mix_seed(master_seed, i); pure in
// (cfg, acq, i) so items can be generated in any order or in parallel.
FiberScenario sample_scenario(const SamplerConfig& cfg, const AcquisitionConfig& acq,
                              std::size_t i);

// The full labeled dataset: n_traces noisy traces with ground truth.
std::vector<std::pair<Trace, FaultLabel>> sample_dataset(const SamplerConfig& cfg,
                                                         const AcquisitionConfig& acq);

// Seeded augmentation: vertical offset (+-2 dB), extra linear-domain noise
// (sigma multiplier in (1, 1.5) of the trace's recorded sigma) and a
// horizontal shift (+-50 m) with edge padding; the position label follows
// the shift and is clipped to the span.
std::pair<Trace, FaultLabel> augment(const Trace& t, const FaultLabel& label,
                                     std::uint64_t seed);

// Augmentation core with explicit magnitudes; augment() draws the three
// magnitudes from the seed and delegates here. extra_sigma_mult m >= 1 adds
// independent linear noise of sigma_base * sqrt(m^2 - 1), so m = 1 adds none.
std::pair<Trace, FaultLabel> augment_with(const Trace& t, const FaultLabel& label,
                                          double offset_db, double extra_sigma_mult,
                                          double shift_m, std::uint64_t noise_seed);

// Linear interpolation of the trace onto input_len uniform points over its
// span, then per-trace standardization (std floored at 1e-6).
nn::TensorBuf preprocess(const Trace& t, std::size_t input_len);

// Architecture and training hyperparameters. The convolutional stack is
// fixed; input_len must survive it (see docs/architecture trace).
struct CnnConfig {
    std::size_t input_len = 1024;
    double lambda = 1.0;    // localization loss weight
    double lr = 1e-3;
    std::size_t batch_size = 32;
    std::size_t epochs = 30;
    std::uint64_t init_seed = 0xC41B5EEDULL;
    bool augment = true;     // augment training items each epoch
    std::size_t threads = 0; // gradient workers per batch; 0 = hardware default
};

// Shared trunk plus the two heads reading the 64-d embedding. Heads are
// single-layer models so the engine's forward/backward/Adam apply uniformly.
struct CnnModel {
    nn::Model trunk;       // conv stack through Dense(->64) + ReLU
    nn::Model head_class;  // Dense(64 -> 4) logits
    nn::Model head_pos;    // Dense(64 -> 1), clamped to [0,1]
    std::size_t input_len = 1024;
};

// Fresh model with seeded He-initialized weights.
CnnModel build_cnn(const CnnConfig& cfg);

struct EpochLog {
    std::size_t epoch = 0;
    double train_loss = 0.0;
    double val_loss = 0.0;
    double val_accuracy = 0.0;
};

struct TrainResult {
    CnnModel model;           // weights of the best-validation-accuracy epoch
    std::vector<EpochLog> log;
    std::size_t best_epoch = 0;
    double best_val_accuracy = 0.0;
};

// 80/20 train/validation split by item-index hash, seeded minibatch
// shuffles, Adam updates. Deterministic given the config seeds, regardless
// of thread count. Throws std::invalid_argument on an empty dataset.
TrainResult train(const std::vector<std::pair<Trace, FaultLabel>>& dataset,
                  const CnnConfig& cfg);

// Raw network outputs for one trace.
struct CnnOutput {
    std::array<double, 4> probs = {0, 0, 0, 0};
    double pos_norm = 0.0;  // clamped to [0,1]
};

CnnOutput run_cnn(const CnnModel& model, const Trace& t);

// Full detection: argmax class (ties to the lowest index), confidence from
// the softmax, position from the clamped head, loss estimate post-hoc from
// the two-segment fit at the predicted position (0 when out of fit range).
Detection infer(const CnnModel& model, const Trace& t,
                const ThresholdConfig& step_cfg = ThresholdConfig{});

// Post-activation tensor of trunk layer layer_index (0 = the preprocessed
// input itself). Throws std::out_of_range outside [0, trunk size].
nn::TensorBuf activation_map(const CnnModel& model, const Trace& t, std::size_t layer_index);

}  // namespace otdr
