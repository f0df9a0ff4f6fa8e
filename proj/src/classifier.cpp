#include "otdr/classifier.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>
#include <thread>

#include "otdr/rng.hpp"
#include "otdr/synth.hpp"

namespace otdr {

namespace {

// Salts separating the independent seed streams derived from one master seed.
constexpr std::uint64_t kValSplitSalt = 0x56414C53504C4954ULL;
constexpr std::uint64_t kShuffleSalt = 0x53485546464C4531ULL;
constexpr std::uint64_t kAugmentSalt = 0x4155474D454E5431ULL;

bool is_validation_item(std::size_t index) {
    return mix_seed(kValSplitSalt, index) % 5 == 0;  // 20 percent held out
}

double parse_meta_double(const Trace& t, const std::string& key, double fallback) {
    auto it = t.meta.find(key);
    if (it == t.meta.end()) return fallback;
    try {
        return std::stod(it->second);
    } catch (const std::exception&) {
        return fallback;
    }
}

}  // namespace

void validate_sampler_config(const SamplerConfig& cfg) {
    auto bad_range = [](double lo, double hi) { return !(lo <= hi); };
    if (cfg.n_traces == 0) throw std::invalid_argument("sampler: n_traces must be positive");
    double mix_sum = 0.0;
    for (double m : cfg.class_mix) {
        if (m < 0.0) throw std::invalid_argument("sampler: class_mix entries must be >= 0");
        mix_sum += m;
    }
    if (std::abs(mix_sum - 1.0) > 1e-9)
        throw std::invalid_argument("sampler: class_mix must sum to 1");
    if (bad_range(cfg.position_min_m, cfg.position_max_m) ||
        bad_range(cfg.splice_loss_min_db, cfg.splice_loss_max_db) ||
        bad_range(cfg.bend_loss_min_db, cfg.bend_loss_max_db) ||
        bad_range(cfg.bend_extent_min_m, cfg.bend_extent_max_m) ||
        bad_range(cfg.connector_loss_min_db, cfg.connector_loss_max_db) ||
        bad_range(cfg.connector_spike_min_db, cfg.connector_spike_max_db) ||
        bad_range(cfg.noise_mult_min, cfg.noise_mult_max))
        throw std::invalid_argument("sampler: range with min > max");
}

FiberScenario sample_scenario(const SamplerConfig& cfg, const AcquisitionConfig& acq,
                              std::size_t i) {
    validate_sampler_config(cfg);
    SplitMix rng(mix_seed(cfg.master_seed, i));

    // Fixed draw order: class, position, per-class magnitudes, noise
    // multiplier, trace seed. Unused draws are still consumed so adding a
    // class never perturbs the others.
    const double u_class = rng.next_uniform(0.0, 1.0);
    // Positions snap to the sampling grid: the service pulse width is about
    // one sample, so a triangular reflection at a fractional position would
    // mostly fall between samples and its captured height would be a
    // sampling artifact rather than a property of the fault.
    const double u_pos_raw = rng.next_uniform(cfg.position_min_m, cfg.position_max_m);
    const double u_pos = std::round(u_pos_raw / acq.sample_spacing_m) * acq.sample_spacing_m;
    const double u_a = rng.next_uniform(0.0, 1.0);
    const double u_b = rng.next_uniform(0.0, 1.0);
    const double u_noise = rng.next_uniform(cfg.noise_mult_min, cfg.noise_mult_max);
    const std::uint64_t trace_seed = rng.next_u64();

    FaultClass cls = FaultClass::Connector;
    double acc = 0.0;
    for (int c = 0; c < kNumClasses; ++c) {
        acc += cfg.class_mix[static_cast<std::size_t>(c)];
        if (u_class < acc) {
            cls = static_cast<FaultClass>(c);
            break;
        }
    }

    FiberScenario s;
    s.config = acq;
    s.config.noise_sigma_linear = acq.noise_sigma_linear * u_noise;
    s.config.rng_seed = trace_seed;

    auto lerp = [](double lo, double hi, double u) { return lo + u * (hi - lo); };
    switch (cls) {
        case FaultClass::Normal:
            break;
        case FaultClass::Splice:
            s.events.push_back({EventKind::Splice, u_pos,
                                lerp(cfg.splice_loss_min_db, cfg.splice_loss_max_db, u_a), 0.0,
                                0.0});
            break;
        case FaultClass::Bend:
            s.events.push_back({EventKind::Bend, u_pos,
                                lerp(cfg.bend_loss_min_db, cfg.bend_loss_max_db, u_a), 0.0,
                                lerp(cfg.bend_extent_min_m, cfg.bend_extent_max_m, u_b)});
            break;
        case FaultClass::Connector:
            s.events.push_back({EventKind::Connector, u_pos,
                                lerp(cfg.connector_loss_min_db, cfg.connector_loss_max_db, u_a),
                                lerp(cfg.connector_spike_min_db, cfg.connector_spike_max_db, u_b),
                                0.0});
            break;
    }
    if (cls != FaultClass::Normal) s.label = {cls, u_pos};
    return s;
}

std::vector<std::pair<Trace, FaultLabel>> sample_dataset(const SamplerConfig& cfg,
                                                         const AcquisitionConfig& acq) {
    validate_sampler_config(cfg);
    std::vector<std::pair<Trace, FaultLabel>> out;
    out.reserve(cfg.n_traces);
    for (std::size_t i = 0; i < cfg.n_traces; ++i) {
        FiberScenario s = sample_scenario(cfg, acq, i);
        Trace t = noisy_trace(s);
        t.meta["dataset_index"] = std::to_string(i);
        out.emplace_back(std::move(t), s.label);
    }
    return out;
}

std::pair<Trace, FaultLabel> augment_with(const Trace& t, const FaultLabel& label,
                                          double offset_db, double extra_sigma_mult,
                                          double shift_m, std::uint64_t noise_seed) {
    if (t.samples.size() < 2) throw std::invalid_argument("augment: degenerate trace");
    Trace out = t;
    const std::size_t n = t.samples.size();
    const double range = t.range_m();

    // Horizontal shift by resampling with edge padding.
    if (shift_m != 0.0) {
        for (std::size_t i = 0; i < n; ++i) {
            const double src = static_cast<double>(i) * t.spacing_m - shift_m;
            if (src <= 0.0) {
                out.samples[i] = t.samples.front();
            } else if (src >= range) {
                out.samples[i] = t.samples.back();
            } else {
                const double fi = src / t.spacing_m;
                const auto lo = static_cast<std::size_t>(fi);
                const double frac = fi - static_cast<double>(lo);
                out.samples[i] = t.samples[lo] * (1.0 - frac) + t.samples[lo + 1] * frac;
            }
        }
    }

    for (double& v : out.samples) v += offset_db;

    // Extra noise so the total sigma becomes mult * original sigma.
    const double sigma_base = parse_meta_double(t, "noise_sigma_linear", 0.0);
    const double m = std::max(1.0, extra_sigma_mult);
    const double sigma_extra = sigma_base * std::sqrt(m * m - 1.0);
    if (sigma_extra > 0.0) {
        GaussianStream g(noise_seed);
        for (std::size_t i = 0; i < n; ++i) {
            double p = db_to_linear(out.samples[i]) + sigma_extra * g.at(i);
            // Preserve finiteness on deeply shifted-down traces.
            out.samples[i] = linear_to_db(std::max(p, 1e-12));
        }
    }

    FaultLabel out_label = label;
    if (out_label.position_m) {
        double p = *out_label.position_m + shift_m;
        out_label.position_m = std::clamp(p, t.spacing_m, range - t.spacing_m);
    }
    return {std::move(out), out_label};
}

std::pair<Trace, FaultLabel> augment(const Trace& t, const FaultLabel& label,
                                     std::uint64_t seed) {
    SplitMix rng(seed);
    const double offset_db = rng.next_uniform(-2.0, 2.0);
    const double mult = rng.next_uniform(1.0, 1.5);
    const double shift_m = rng.next_uniform(-50.0, 50.0);
    const std::uint64_t noise_seed = rng.next_u64();
    return augment_with(t, label, offset_db, mult, shift_m, noise_seed);
}

nn::TensorBuf preprocess(const Trace& t, std::size_t input_len) {
    if (t.samples.size() < 2 || input_len < 2)
        throw std::invalid_argument("preprocess: degenerate trace or input length");
    nn::TensorBuf out(1, input_len);
    const double range = t.range_m();
    const std::size_t n = t.samples.size();
    for (std::size_t j = 0; j < input_len; ++j) {
        const double z = range * static_cast<double>(j) / static_cast<double>(input_len - 1);
        const double fi = z / t.spacing_m;
        auto lo = static_cast<std::size_t>(fi);
        if (lo >= n - 1) lo = n - 2;
        const double frac = fi - static_cast<double>(lo);
        out.data[j] = t.samples[lo] * (1.0 - frac) + t.samples[lo + 1] * frac;
    }

    double mean = 0.0;
    for (double v : out.data) mean += v;
    mean /= static_cast<double>(input_len);
    double var = 0.0;
    for (double v : out.data) var += (v - mean) * (v - mean);
    var /= static_cast<double>(input_len);
    const double stdev = std::max(std::sqrt(var), 1e-6);
    for (double& v : out.data) v = (v - mean) / stdev;
    return out;
}

CnnModel build_cnn(const CnnConfig& cfg) {
    CnnModel m;
    m.input_len = cfg.input_len;
    m.trunk.push_back(nn::Layer::conv1d(1, 16, 9));
    m.trunk.push_back(nn::Layer::relu());
    m.trunk.push_back(nn::Layer::maxpool1d(4));
    m.trunk.push_back(nn::Layer::conv1d(16, 32, 9));
    m.trunk.push_back(nn::Layer::relu());
    m.trunk.push_back(nn::Layer::maxpool1d(4));
    m.trunk.push_back(nn::Layer::conv1d(32, 64, 5));
    m.trunk.push_back(nn::Layer::relu());
    m.trunk.push_back(nn::Layer::maxpool1d(4));

    // Trace the spatial length through the conv stack to size the embedding.
    std::size_t rows = 1, cols = cfg.input_len;
    for (const auto& l : m.trunk) {
        auto [r, c] = nn::output_shape(l, rows, cols);
        rows = r;
        cols = c;
    }
    if (cols == 0) throw std::invalid_argument("cnn: input_len does not survive the stack");
    m.trunk.push_back(nn::Layer::dense(rows * cols, 64));
    m.trunk.push_back(nn::Layer::relu());
    m.head_class.push_back(nn::Layer::dense(64, 4));
    m.head_pos.push_back(nn::Layer::dense(64, 1));

    // Seeded He initialization; biases zero except the position head, which
    // starts mid-span so the clamp never pins it at init.
    SplitMix rng(cfg.init_seed);
    auto init_layer = [&rng](nn::Layer& l) {
        std::size_t fan_in = 0;
        if (l.kind == nn::LayerKind::Conv1d) fan_in = l.in_ch * l.kernel;
        if (l.kind == nn::LayerKind::Dense) fan_in = l.in_dim;
        if (fan_in == 0) return;
        const double scale = std::sqrt(2.0 / static_cast<double>(fan_in));
        for (double& w : l.weights) w = scale * rng.next_normal();
    };
    for (auto& l : m.trunk) init_layer(l);
    for (auto& l : m.head_class) init_layer(l);
    // Position head starts at the span midpoint with zero weights; He-scale
    // weights would land many inputs outside the clamp range at step 0.
    m.head_pos[0].bias[0] = 0.5;
    return m;
}

namespace {

struct ItemTensors {
    nn::TensorBuf x;
    int target = 0;
    std::optional<double> pos_norm;
};

struct ItemGrads {
    nn::Gradients trunk;
    nn::Gradients head_class;
    nn::Gradients head_pos;
    double loss = 0.0;

    void init(const CnnModel& m) {
        trunk.init_like(m.trunk);
        head_class.init_like(m.head_class);
        head_pos.init_like(m.head_pos);
    }
};

// Forward + backward for one item; returns the joint loss.
double item_pass(const CnnModel& model, const ItemTensors& item, double lambda,
                 ItemGrads* grads) {
    nn::ForwardCache trunk_cache, hc_cache, hp_cache;
    nn::TensorBuf embed = nn::forward(model.trunk, item.x, grads ? &trunk_cache : nullptr);
    nn::TensorBuf logits = nn::forward(model.head_class, embed, grads ? &hc_cache : nullptr);
    nn::TensorBuf pos_raw = nn::forward(model.head_pos, embed, grads ? &hp_cache : nullptr);

    const double raw = pos_raw.data[0];
    const double pos_pred = std::clamp(raw, 0.0, 1.0);
    nn::JointLoss jl =
        nn::loss_ce_smoothl1(logits, item.target, pos_pred, item.pos_norm, lambda);
    if (!grads) return jl.loss;

    nn::TensorBuf g_logits(1, 4);
    g_logits.data = jl.dlogits;
    nn::TensorBuf g_embed_c = nn::backward(model.head_class, hc_cache, g_logits, grads->head_class);

    // Clamp backward: exact subgradient inside the range; outside, the
    // gradient passes only when it points back into [0,1], so a pinned head
    // can always recover.
    double g_raw = jl.dpos;
    if (raw < 0.0 && jl.dpos >= 0.0) g_raw = 0.0;
    if (raw > 1.0 && jl.dpos <= 0.0) g_raw = 0.0;
    nn::TensorBuf g_pos(1, 1);
    g_pos.data[0] = g_raw;
    nn::TensorBuf g_embed_p = nn::backward(model.head_pos, hp_cache, g_pos, grads->head_pos);

    nn::TensorBuf g_embed(1, g_embed_c.cols);
    for (std::size_t i = 0; i < g_embed.size(); ++i)
        g_embed.data[i] = g_embed_c.data[i] + g_embed_p.data[i];
    nn::backward(model.trunk, trunk_cache, g_embed, grads->trunk);
    grads->loss = jl.loss;
    return jl.loss;
}

std::size_t resolve_threads(std::size_t requested) {
    if (requested > 0) return requested;
    unsigned hw = std::thread::hardware_concurrency();
    return std::clamp<std::size_t>(hw == 0 ? 1 : hw, 1, 8);
}

}  // namespace

TrainResult train(const std::vector<std::pair<Trace, FaultLabel>>& dataset,
                  const CnnConfig& cfg) {
    if (dataset.empty()) throw std::invalid_argument("train: empty dataset");
    if (cfg.batch_size == 0 || cfg.epochs == 0)
        throw std::invalid_argument("train: batch_size and epochs must be positive");

    std::vector<std::size_t> train_idx, val_idx;
    for (std::size_t i = 0; i < dataset.size(); ++i)
        (is_validation_item(i) ? val_idx : train_idx).push_back(i);
    if (train_idx.empty()) throw std::invalid_argument("train: training split is empty");

    auto to_item = [&cfg](const Trace& t, const FaultLabel& label) {
        ItemTensors item;
        item.x = preprocess(t, cfg.input_len);
        item.target = static_cast<int>(label.cls);
        if (label.position_m) item.pos_norm = *label.position_m / t.range_m();
        return item;
    };

    // Validation tensors are fixed; training tensors are rebuilt per epoch
    // when augmentation is on.
    std::vector<ItemTensors> val_items;
    val_items.reserve(val_idx.size());
    for (std::size_t i : val_idx)
        val_items.push_back(to_item(dataset[i].first, dataset[i].second));

    std::vector<ItemTensors> base_train_items;
    if (!cfg.augment) {
        base_train_items.reserve(train_idx.size());
        for (std::size_t i : train_idx)
            base_train_items.push_back(to_item(dataset[i].first, dataset[i].second));
    }

    CnnModel model = build_cnn(cfg);
    nn::OptimizerState opt_trunk, opt_hc, opt_hp;
    opt_trunk.lr = opt_hc.lr = opt_hp.lr = cfg.lr;
    opt_trunk.init_like(model.trunk);
    opt_hc.init_like(model.head_class);
    opt_hp.init_like(model.head_pos);

    const std::size_t n_threads = resolve_threads(cfg.threads);

    TrainResult result;
    result.best_val_accuracy = -1.0;

    for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
        // Assemble this epoch's training tensors.
        std::vector<ItemTensors> items(train_idx.size());
        if (cfg.augment) {
            const std::uint64_t epoch_aug = mix_seed(kAugmentSalt ^ cfg.init_seed, epoch);
            auto build_range = [&](std::size_t lo, std::size_t hi) {
                for (std::size_t j = lo; j < hi; ++j) {
                    const auto& [trace, label] = dataset[train_idx[j]];
                    auto [at, al] = augment(trace, label, mix_seed(epoch_aug, train_idx[j]));
                    items[j] = to_item(at, al);
                }
            };
            if (n_threads == 1) {
                build_range(0, items.size());
            } else {
                std::vector<std::thread> pool;
                const std::size_t chunk = (items.size() + n_threads - 1) / n_threads;
                for (std::size_t w = 0; w < n_threads; ++w) {
                    const std::size_t lo = w * chunk;
                    const std::size_t hi = std::min(items.size(), lo + chunk);
                    if (lo < hi) pool.emplace_back(build_range, lo, hi);
                }
                for (auto& th : pool) th.join();
            }
        } else {
            items = base_train_items;
        }

        std::vector<std::size_t> order(items.size());
        for (std::size_t j = 0; j < order.size(); ++j) order[j] = j;
        deterministic_shuffle(order, mix_seed(kShuffleSalt ^ cfg.init_seed, epoch));

        double epoch_loss = 0.0;
        for (std::size_t start = 0; start < order.size(); start += cfg.batch_size) {
            const std::size_t end = std::min(order.size(), start + cfg.batch_size);
            const std::size_t bsz = end - start;

            std::vector<ItemGrads> per_item(bsz);
            auto run_range = [&](std::size_t lo, std::size_t hi) {
                for (std::size_t j = lo; j < hi; ++j) {
                    per_item[j].init(model);
                    item_pass(model, items[order[start + j]], cfg.lambda, &per_item[j]);
                }
            };
            if (n_threads == 1 || bsz == 1) {
                run_range(0, bsz);
            } else {
                std::vector<std::thread> pool;
                const std::size_t chunk = (bsz + n_threads - 1) / n_threads;
                for (std::size_t w = 0; w < n_threads; ++w) {
                    const std::size_t lo = w * chunk;
                    const std::size_t hi = std::min(bsz, lo + chunk);
                    if (lo < hi) pool.emplace_back(run_range, lo, hi);
                }
                for (auto& th : pool) th.join();
            }

            // Deterministic reduction: items accumulate in batch order
            // regardless of which thread produced them.
            nn::Gradients g_trunk, g_hc, g_hp;
            g_trunk.init_like(model.trunk);
            g_hc.init_like(model.head_class);
            g_hp.init_like(model.head_pos);
            const double inv = 1.0 / static_cast<double>(bsz);
            for (std::size_t j = 0; j < bsz; ++j) {
                g_trunk.accumulate(per_item[j].trunk, inv);
                g_hc.accumulate(per_item[j].head_class, inv);
                g_hp.accumulate(per_item[j].head_pos, inv);
                epoch_loss += per_item[j].loss;
            }
            nn::adam_step(model.trunk, g_trunk, opt_trunk);
            nn::adam_step(model.head_class, g_hc, opt_hc);
            nn::adam_step(model.head_pos, g_hp, opt_hp);
        }
        epoch_loss /= static_cast<double>(items.size());

        // Validation pass (falls back to the training items when the split
        // left no validation data).
        const std::vector<ItemTensors>& vitems = val_items.empty() ? items : val_items;
        std::vector<double> vloss(vitems.size(), 0.0);
        std::vector<int> vok(vitems.size(), 0);
        auto val_range = [&](std::size_t lo, std::size_t hi) {
            for (std::size_t j = lo; j < hi; ++j) {
                nn::TensorBuf embed = nn::forward(model.trunk, vitems[j].x);
                nn::TensorBuf logits = nn::forward(model.head_class, embed);
                nn::TensorBuf pos_raw = nn::forward(model.head_pos, embed);
                const double pos_pred = std::clamp(pos_raw.data[0], 0.0, 1.0);
                vloss[j] = nn::loss_ce_smoothl1(logits, vitems[j].target, pos_pred,
                                                vitems[j].pos_norm, cfg.lambda)
                               .loss;
                int arg = 0;
                for (int c = 1; c < kNumClasses; ++c)
                    if (logits.data[static_cast<std::size_t>(c)] >
                        logits.data[static_cast<std::size_t>(arg)])
                        arg = c;
                vok[j] = arg == vitems[j].target ? 1 : 0;
            }
        };
        if (n_threads == 1) {
            val_range(0, vitems.size());
        } else {
            std::vector<std::thread> pool;
            const std::size_t chunk = (vitems.size() + n_threads - 1) / n_threads;
            for (std::size_t w = 0; w < n_threads; ++w) {
                const std::size_t lo = w * chunk;
                const std::size_t hi = std::min(vitems.size(), lo + chunk);
                if (lo < hi) pool.emplace_back(val_range, lo, hi);
            }
            for (auto& th : pool) th.join();
        }
        double val_loss = 0.0;
        std::size_t correct = 0;
        for (std::size_t j = 0; j < vitems.size(); ++j) {
            val_loss += vloss[j];
            correct += static_cast<std::size_t>(vok[j]);
        }
        val_loss /= static_cast<double>(vitems.size());
        const double val_acc = static_cast<double>(correct) / static_cast<double>(vitems.size());

        result.log.push_back({epoch, epoch_loss, val_loss, val_acc});
        if (val_acc > result.best_val_accuracy) {
            result.best_val_accuracy = val_acc;
            result.best_epoch = epoch;
            result.model = model;
        }
    }
    return result;
}

CnnOutput run_cnn(const CnnModel& model, const Trace& t) {
    nn::TensorBuf x = preprocess(t, model.input_len);
    nn::TensorBuf embed = nn::forward(model.trunk, x);
    nn::TensorBuf logits = nn::forward(model.head_class, embed);
    nn::TensorBuf pos_raw = nn::forward(model.head_pos, embed);
    auto probs = nn::softmax(logits.data);

    CnnOutput out;
    std::copy(probs.begin(), probs.end(), out.probs.begin());
    out.pos_norm = std::clamp(pos_raw.data[0], 0.0, 1.0);
    return out;
}

Detection infer(const CnnModel& model, const Trace& t, const ThresholdConfig& step_cfg) {
    CnnOutput out = run_cnn(model, t);
    int arg = 0;
    for (int c = 1; c < kNumClasses; ++c)
        if (out.probs[static_cast<std::size_t>(c)] > out.probs[static_cast<std::size_t>(arg)])
            arg = c;

    Detection det;
    det.cls = static_cast<FaultClass>(arg);
    det.confidence = out.probs[static_cast<std::size_t>(arg)];
    if (det.cls == FaultClass::Normal) return det;

    det.position_m = out.pos_norm * t.range_m();
    auto idx = static_cast<std::size_t>(std::llround(*det.position_m / t.spacing_m));
    auto [first, last] = admissible_index_range(t, step_cfg);
    if (idx >= first && idx < last) {
        det.loss_db_est = std::max(0.0, local_step_estimate(t, idx, step_cfg).loss_db);
    }
    return det;
}

nn::TensorBuf activation_map(const CnnModel& model, const Trace& t, std::size_t layer_index) {
    if (layer_index > model.trunk.size())
        throw std::out_of_range("activation_map: layer index out of range");
    nn::TensorBuf x = preprocess(t, model.input_len);
    if (layer_index == 0) return x;

    nn::Model prefix(model.trunk.begin(),
                     model.trunk.begin() + static_cast<std::ptrdiff_t>(layer_index));
    return nn::forward(prefix, x);
}

}  // namespace otdr
