// otdrbench - command-line surface for the fiber-diagnostics workbench:
// synthesize traces, build labeled datasets, train the classifier, benchmark
// it against the threshold detector, diagnose single traces and map fault
// distances to route coordinates.
//
// Exit codes: 0 success, 1 usage error, 2 validation error, 3 runtime failure.

#include <cstdio>
#include <exception>
#include <filesystem>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>

#include <CLI11.hpp>

#include "otdr/baseline.hpp"
#include "otdr/classifier.hpp"
#include "otdr/eval.hpp"
#include "otdr/geo.hpp"
#include "otdr/io.hpp"
#include "otdr/plant.hpp"
#include "otdr/synth.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitValidation = 2;
constexpr int kExitRuntime = 3;

constexpr std::uint64_t kDefaultTrainSeed = otdr::SamplerConfig{}.master_seed;
constexpr std::uint64_t kDefaultTestSeed = 0x7E57B17E5ULL;

struct ValidationFailure : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct CommonThresholdFlags {
    std::optional<std::string> config_path;
    std::optional<double> window_m, loss_cutoff, spike_cutoff, bend_cutoff, guard_m;

    void attach(CLI::App* cmd) {
        cmd->add_option("--threshold-config", config_path, "threshold detector config JSON");
        cmd->add_option("--window-m", window_m, "fit half-window in meters");
        cmd->add_option("--loss-cutoff-db", loss_cutoff, "candidate step-loss cutoff");
        cmd->add_option("--spike-cutoff-db", spike_cutoff, "candidate spike cutoff");
        cmd->add_option("--bend-cutoff-db", bend_cutoff, "splice/bend class boundary");
        cmd->add_option("--guard-m", guard_m, "non-maximum suppression radius");
    }

    otdr::ThresholdConfig resolve(const otdr::AcquisitionConfig& acq) const {
        otdr::ThresholdConfig cfg = otdr::ThresholdConfig::for_acquisition(acq);
        if (config_path) cfg = otdr::io::read_threshold_config(*config_path);
        if (window_m) cfg.window_m = *window_m;
        if (loss_cutoff) cfg.loss_cutoff_db = *loss_cutoff;
        if (spike_cutoff) cfg.spike_cutoff_db = *spike_cutoff;
        if (bend_cutoff) cfg.bend_loss_cutoff_db = *bend_cutoff;
        if (guard_m) cfg.guard_m = *guard_m;
        return cfg;
    }
};

void print_detection(const char* method, const otdr::Detection& d) {
    std::printf("%-10s %-9s", method, otdr::to_string(d.cls));
    if (d.position_m)
        std::printf("  position=%.1f m  loss_est=%.3f dB  confidence=%.3f", *d.position_m,
                    d.loss_db_est, d.confidence);
    else
        std::printf("  no fault  confidence=%.3f", d.confidence);
    std::printf("\n");
}

// ---------------------------------------------------------------------------

int cmd_synth(const std::optional<std::string>& scenario_path, std::optional<int> reference,
              const std::string& out_path, bool clean, std::optional<std::uint64_t> seed) {
    otdr::FiberScenario scenario;
    if (reference) {
        if (*reference < 0 || *reference > 3)
            throw ValidationFailure("--reference index must be in 0..3");
        scenario = otdr::reference_scenarios()[static_cast<std::size_t>(*reference)];
    } else if (scenario_path) {
        scenario = otdr::io::read_scenario(*scenario_path);
    } else {
        throw ValidationFailure("synth needs --scenario or --reference");
    }
    if (seed) scenario.config.rng_seed = *seed;

    auto violations = otdr::validate_scenario(scenario);
    if (!violations.empty()) {
        std::ostringstream os;
        os << "invalid scenario:";
        for (const auto& v : violations) os << "\n  - " << v;
        throw ValidationFailure(os.str());
    }

    otdr::Trace t = clean ? otdr::clean_trace(scenario) : otdr::noisy_trace(scenario);
    otdr::io::write_trace(out_path, t);
    std::printf("wrote %s (%zu samples, %s, rng_seed=%llu)\n", out_path.c_str(),
                t.samples.size(), clean ? "clean" : "noisy",
                static_cast<unsigned long long>(scenario.config.rng_seed));
    return kExitOk;
}

int cmd_dataset(const std::optional<std::string>& config_path, const std::string& out_dir,
                std::optional<std::size_t> n_override,
                std::optional<std::uint64_t> seed_override) {
    otdr::SamplerConfig cfg;
    if (config_path) cfg = otdr::io::read_sampler_config(*config_path);
    if (n_override) cfg.n_traces = *n_override;
    if (seed_override) cfg.master_seed = *seed_override;
    try {
        otdr::validate_sampler_config(cfg);
    } catch (const std::invalid_argument& e) {
        throw ValidationFailure(e.what());
    }

    otdr::AcquisitionConfig acq;
    namespace fs = std::filesystem;
    fs::create_directories(fs::path(out_dir) / "traces");

    std::vector<otdr::io::ManifestEntry> manifest;
    manifest.reserve(cfg.n_traces);
    for (std::size_t i = 0; i < cfg.n_traces; ++i) {
        otdr::FiberScenario s = otdr::sample_scenario(cfg, acq, i);
        otdr::Trace t = otdr::noisy_trace(s);
        t.meta["dataset_index"] = std::to_string(i);

        char name[64];
        std::snprintf(name, sizeof(name), "traces/trace_%05zu.csv", i);
        otdr::io::write_trace(fs::path(out_dir) / name, t);
        manifest.push_back({name, s.label, s.config.rng_seed});
    }
    otdr::io::atomic_write(fs::path(out_dir) / "manifest.jsonl",
                           otdr::io::manifest_to_jsonl(manifest));
    otdr::io::atomic_write(fs::path(out_dir) / "sampler_config.json",
                           otdr::io::sampler_config_to_json(cfg));
    std::printf("wrote %zu traces + manifest to %s (master_seed=%llu)\n", cfg.n_traces,
                out_dir.c_str(), static_cast<unsigned long long>(cfg.master_seed));
    return kExitOk;
}

int cmd_train(const std::string& manifest_path, const std::string& weights_out,
              const std::optional<std::string>& log_out, const otdr::CnnConfig& cnn_cfg) {
    auto dataset = otdr::io::load_manifest_dataset(manifest_path);
    if (dataset.empty()) throw ValidationFailure("manifest is empty");

    otdr::TrainResult result = otdr::train(dataset, cnn_cfg);
    otdr::io::write_weights(weights_out, result.model);
    if (log_out)
        otdr::io::atomic_write(*log_out, otdr::io::training_log_to_csv(result.log));

    std::printf("trained on %zu items (init_seed=%llu): best val accuracy %.4f at epoch %zu\n",
                dataset.size(), static_cast<unsigned long long>(cnn_cfg.init_seed),
                result.best_val_accuracy, result.best_epoch);
    std::printf("wrote %s\n", weights_out.c_str());
    return kExitOk;
}

int cmd_eval(const std::optional<std::string>& test_config_path, const std::string& weights_path,
             const CommonThresholdFlags& thr_flags, std::uint64_t train_seed,
             std::optional<std::uint64_t> test_seed_override, std::optional<std::size_t> n_override,
             const std::optional<std::string>& out_json,
             const std::optional<std::string>& out_table) {
    otdr::SamplerConfig test_cfg;
    test_cfg.master_seed = kDefaultTestSeed;
    test_cfg.n_traces = 1500;
    if (test_config_path) test_cfg = otdr::io::read_sampler_config(*test_config_path);
    if (test_seed_override) test_cfg.master_seed = *test_seed_override;
    if (n_override) test_cfg.n_traces = *n_override;

    if (test_cfg.master_seed == train_seed)
        throw ValidationFailure("test master seed equals the training master seed; "
                                "pick a disjoint --test-seed");

    if (!std::filesystem::exists(weights_path))
        throw ValidationFailure("weights file not found: " + weights_path);
    otdr::CnnModel model = otdr::io::read_weights(weights_path);

    otdr::AcquisitionConfig acq;
    otdr::ThresholdConfig thr = thr_flags.resolve(acq);

    std::printf("benchmarking %zu test traces (test_seed=%llu, train_seed=%llu)\n",
                test_cfg.n_traces, static_cast<unsigned long long>(test_cfg.master_seed),
                static_cast<unsigned long long>(train_seed));
    otdr::BenchmarkReport report;
    try {
        report = otdr::run_benchmark(test_cfg, acq, model, thr, train_seed);
    } catch (const std::invalid_argument& e) {
        throw ValidationFailure(e.what());
    }

    std::string table = otdr::format_report_table(report);
    std::fputs(table.c_str(), stdout);
    if (out_json) otdr::io::write_report(*out_json, report);
    if (out_table) otdr::io::atomic_write(*out_table, table);
    return kExitOk;
}

int cmd_diagnose(const std::string& trace_path, const std::string& weights_path,
                 const CommonThresholdFlags& thr_flags,
                 const std::optional<std::string>& route_path) {
    otdr::Trace t = otdr::io::read_trace(trace_path);
    if (!std::filesystem::exists(weights_path))
        throw ValidationFailure("weights file not found: " + weights_path);
    otdr::CnnModel model = otdr::io::read_weights(weights_path);

    otdr::AcquisitionConfig acq;  // geometry defaults for the fit windows
    otdr::ThresholdConfig thr = thr_flags.resolve(acq);

    otdr::Detection base = otdr::detect_threshold(t, thr);
    otdr::Detection cnn = otdr::infer(model, t, thr);
    print_detection("threshold", base);
    print_detection("cnn", cnn);

    if (route_path) {
        otdr::RoutePolyline route = otdr::io::read_route(*route_path);
        for (const auto& [name, det] : {std::pair{"threshold", base}, std::pair{"cnn", cnn}}) {
            if (!det.position_m) continue;
            try {
                otdr::LatLon p = otdr::locate_fault(route, *det.position_m);
                std::printf("%-10s fault location: lat=%.6f lon=%.6f\n", name, p.lat_deg,
                            p.lon_deg);
            } catch (const std::out_of_range&) {
                throw ValidationFailure("fault beyond route end");
            }
        }
    }
    return kExitOk;
}

int cmd_locate(const std::string& route_path, double distance_m) {
    otdr::RoutePolyline route = otdr::io::read_route(route_path);
    try {
        otdr::LatLon p = otdr::locate_fault(route, distance_m);
        std::printf("lat=%.8f lon=%.8f\n", p.lat_deg, p.lon_deg);
    } catch (const std::out_of_range& e) {
        throw ValidationFailure(e.what());
    } catch (const std::invalid_argument& e) {
        throw ValidationFailure(e.what());
    }
    return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"fiber-diagnostics workbench: synthesize OTDR traces, train and "
                 "benchmark fault detectors, map faults to route coordinates"};
    app.require_subcommand(1);

    // --- synth ---
    auto* synth = app.add_subcommand("synth", "synthesize one trace from a scenario");
    std::optional<std::string> synth_scenario;
    std::optional<int> synth_reference;
    std::string synth_out;
    bool synth_clean = false, synth_noisy = false;
    std::optional<std::uint64_t> synth_seed;
    synth->add_option("--scenario", synth_scenario, "scenario JSON file");
    synth->add_option("--reference", synth_reference,
                      "archetype index: 0 normal, 1 splice, 2 bend, 3 connector");
    synth->add_option("--out", synth_out, "output trace CSV")->required();
    synth->add_flag("--clean", synth_clean, "noiseless trace");
    synth->add_flag("--noisy", synth_noisy, "noisy trace (default)");
    synth->add_option("--seed", synth_seed, "override the scenario rng seed");

    // --- dataset ---
    auto* dataset = app.add_subcommand("dataset", "generate a labeled trace dataset");
    std::optional<std::string> ds_config;
    std::string ds_out;
    std::optional<std::size_t> ds_n;
    std::optional<std::uint64_t> ds_seed;
    dataset->add_option("--config", ds_config, "sampler config JSON");
    dataset->add_option("--out", ds_out, "output directory")->required();
    dataset->add_option("--n", ds_n, "override number of traces");
    dataset->add_option("--master-seed", ds_seed, "override the master seed");

    // --- train ---
    auto* train = app.add_subcommand("train", "train the classifier on a dataset manifest");
    std::string tr_manifest, tr_weights;
    std::optional<std::string> tr_log;
    otdr::CnnConfig cnn_cfg;
    bool tr_no_augment = false;
    train->add_option("--manifest", tr_manifest, "dataset manifest JSONL")->required();
    train->add_option("--out", tr_weights, "output weights JSON")->required();
    train->add_option("--log", tr_log, "training log CSV");
    train->add_option("--epochs", cnn_cfg.epochs, "training epochs");
    train->add_option("--lr", cnn_cfg.lr, "Adam learning rate");
    train->add_option("--batch-size", cnn_cfg.batch_size, "minibatch size");
    train->add_option("--lambda", cnn_cfg.lambda, "localization loss weight");
    train->add_option("--input-len", cnn_cfg.input_len, "network input length");
    train->add_option("--init-seed", cnn_cfg.init_seed, "weight init / shuffle seed");
    train->add_option("--threads", cnn_cfg.threads, "gradient worker threads (0 = auto)");
    train->add_flag("--no-augment", tr_no_augment, "disable training-time augmentation");

    // --- eval / bench ---
    auto add_eval_like = [&app](const char* name, const char* desc) {
        return app.add_subcommand(name, desc);
    };
    auto* eval = add_eval_like("eval", "benchmark both detectors on a held-out test set");
    auto* bench = add_eval_like("bench", "alias of eval");
    std::optional<std::string> ev_config;
    std::string ev_weights;
    std::uint64_t ev_train_seed = kDefaultTrainSeed;
    std::optional<std::uint64_t> ev_test_seed;
    std::optional<std::size_t> ev_n;
    std::optional<std::string> ev_out_json, ev_out_table;
    CommonThresholdFlags ev_thr;
    for (auto* cmd : {eval, bench}) {
        cmd->add_option("--test-config", ev_config, "test sampler config JSON");
        cmd->add_option("--weights", ev_weights, "trained weights JSON")->required();
        cmd->add_option("--train-seed", ev_train_seed,
                        "master seed the weights were trained with");
        cmd->add_option("--test-seed", ev_test_seed, "override test master seed");
        cmd->add_option("--n", ev_n, "override number of test traces");
        cmd->add_option("--out-json", ev_out_json, "write the report JSON here");
        cmd->add_option("--out-table", ev_out_table, "write the text table here");
        ev_thr.attach(cmd);
    }

    // --- diagnose ---
    auto* diagnose = app.add_subcommand("diagnose", "run both detectors on one trace file");
    std::string dg_trace, dg_weights;
    std::optional<std::string> dg_route;
    CommonThresholdFlags dg_thr;
    diagnose->add_option("--trace", dg_trace, "trace CSV file")->required();
    diagnose->add_option("--weights", dg_weights, "trained weights JSON")->required();
    diagnose->add_option("--route", dg_route, "route JSON for geolocation");
    dg_thr.attach(diagnose);

    // --- locate ---
    auto* locate = app.add_subcommand("locate", "map a fiber distance to route coordinates");
    std::string lc_route;
    double lc_distance = 0.0;
    locate->add_option("--route", lc_route, "route JSON")->required();
    locate->add_option("--distance", lc_distance, "fiber distance in meters")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int rc = app.exit(e);
        return rc == 0 ? kExitOk : kExitUsage;
    }

    try {
        if (synth->parsed()) {
            if (synth_clean && synth_noisy)
                throw ValidationFailure("--clean and --noisy are mutually exclusive");
            return cmd_synth(synth_scenario, synth_reference, synth_out, synth_clean, synth_seed);
        }
        if (dataset->parsed()) return cmd_dataset(ds_config, ds_out, ds_n, ds_seed);
        if (train->parsed()) {
            cnn_cfg.augment = !tr_no_augment;
            return cmd_train(tr_manifest, tr_weights, tr_log, cnn_cfg);
        }
        if (eval->parsed() || bench->parsed())
            return cmd_eval(ev_config, ev_weights, ev_thr, ev_train_seed, ev_test_seed, ev_n,
                            ev_out_json, ev_out_table);
        if (diagnose->parsed()) return cmd_diagnose(dg_trace, dg_weights, dg_thr, dg_route);
        if (locate->parsed()) return cmd_locate(lc_route, lc_distance);
    } catch (const ValidationFailure& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return kExitValidation;
    } catch (const otdr::io::FileFormatError& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return kExitValidation;
    } catch (const std::invalid_argument& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return kExitValidation;
    } catch (const std::out_of_range& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return kExitValidation;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "runtime failure: %s\n", e.what());
        return kExitRuntime;
    }
    return kExitUsage;
}
