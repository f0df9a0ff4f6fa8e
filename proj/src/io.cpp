#include "otdr/io.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include <json.hpp>

namespace otdr::io {

using nlohmann::json;

namespace {

std::string format_double(double v) {
    // Shortest representation that round-trips the exact double.
    char buf[64];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, ptr);
}

std::string read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw FileFormatError("cannot open " + path.string());
    std::ostringstream os;
    os << in.rdbuf();
    return os.str();
}

// nlohmann reports only a byte offset; translate it to line/column.
json parse_json(const std::string& content, const std::filesystem::path& path) {
    try {
        return json::parse(content);
    } catch (const json::parse_error& e) {
        std::size_t line = 1, col = 1;
        for (std::size_t i = 0; i + 1 < e.byte && i < content.size(); ++i) {
            if (content[i] == '\n') {
                ++line;
                col = 1;
            } else {
                ++col;
            }
        }
        std::ostringstream os;
        os << path.string() << ": malformed JSON at line " << line << ", column " << col << ": "
           << e.what();
        throw FileFormatError(os.str());
    }
}

void reject_unknown_keys(const json& obj, std::initializer_list<const char*> allowed,
                         const std::string& context) {
    for (auto it = obj.begin(); it != obj.end(); ++it) {
        bool known = false;
        for (const char* k : allowed)
            if (it.key() == k) {
                known = true;
                break;
            }
        if (!known) throw FileFormatError(context + ": unknown key '" + it.key() + "'");
    }
}

template <typename T>
void get_if_present(const json& obj, const char* key, T& out) {
    if (auto it = obj.find(key); it != obj.end()) out = it->get<T>();
}

}  // namespace

void atomic_write(const std::filesystem::path& path, const std::string& content) {
    namespace fs = std::filesystem;
    fs::path dir = path.parent_path();
    if (!dir.empty()) fs::create_directories(dir);
    fs::path tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw std::runtime_error("cannot write " + tmp.string());
        out << content;
        out.flush();
        if (!out) throw std::runtime_error("write failed: " + tmp.string());
    }
    fs::rename(tmp, path);
}

// ---------------------------------------------------------------------------
// Scenario files

FiberScenario read_scenario(const std::filesystem::path& path) {
    json j = parse_json(read_file(path), path);
    if (!j.is_object()) throw FileFormatError(path.string() + ": scenario must be a JSON object");
    reject_unknown_keys(j, {"config", "events", "label"}, path.string());

    FiberScenario s;
    if (j.contains("config")) {
        const json& c = j["config"];
        reject_unknown_keys(c,
                            {"wavelength_nm", "attenuation_db_per_km", "launch_level_db",
                             "pulse_width_ns", "group_index", "sample_spacing_m", "range_m",
                             "noise_sigma_linear", "noise_floor_db", "rng_seed"},
                            path.string() + " config");
        get_if_present(c, "wavelength_nm", s.config.wavelength_nm);
        get_if_present(c, "attenuation_db_per_km", s.config.attenuation_db_per_km);
        get_if_present(c, "launch_level_db", s.config.launch_level_db);
        get_if_present(c, "pulse_width_ns", s.config.pulse_width_ns);
        get_if_present(c, "group_index", s.config.group_index);
        get_if_present(c, "sample_spacing_m", s.config.sample_spacing_m);
        get_if_present(c, "range_m", s.config.range_m);
        get_if_present(c, "noise_sigma_linear", s.config.noise_sigma_linear);
        get_if_present(c, "noise_floor_db", s.config.noise_floor_db);
        get_if_present(c, "rng_seed", s.config.rng_seed);
    }
    if (j.contains("events")) {
        for (const json& e : j["events"]) {
            reject_unknown_keys(
                e, {"kind", "position_m", "loss_db", "reflectance_spike_db", "extent_m"},
                path.string() + " event");
            FiberEvent ev;
            auto kind = event_kind_from_string(e.at("kind").get<std::string>());
            if (!kind)
                throw FileFormatError(path.string() + ": unknown event kind '" +
                                      e.at("kind").get<std::string>() + "'");
            ev.kind = *kind;
            ev.position_m = e.at("position_m").get<double>();
            get_if_present(e, "loss_db", ev.loss_db);
            get_if_present(e, "reflectance_spike_db", ev.reflectance_spike_db);
            get_if_present(e, "extent_m", ev.extent_m);
            s.events.push_back(ev);
        }
    }
    if (j.contains("label")) {
        const json& l = j["label"];
        reject_unknown_keys(l, {"class", "position_m"}, path.string() + " label");
        auto cls = fault_class_from_string(l.at("class").get<std::string>());
        if (!cls)
            throw FileFormatError(path.string() + ": unknown label class '" +
                                  l.at("class").get<std::string>() + "'");
        s.label.cls = *cls;
        if (l.contains("position_m")) s.label.position_m = l["position_m"].get<double>();
    }
    return s;
}

std::string scenario_to_json(const FiberScenario& s) {
    json c;
    c["wavelength_nm"] = s.config.wavelength_nm;
    c["attenuation_db_per_km"] = s.config.attenuation_db_per_km;
    c["launch_level_db"] = s.config.launch_level_db;
    c["pulse_width_ns"] = s.config.pulse_width_ns;
    c["group_index"] = s.config.group_index;
    c["sample_spacing_m"] = s.config.sample_spacing_m;
    c["range_m"] = s.config.range_m;
    c["noise_sigma_linear"] = s.config.noise_sigma_linear;
    c["noise_floor_db"] = s.config.noise_floor_db;
    c["rng_seed"] = s.config.rng_seed;

    json events = json::array();
    for (const FiberEvent& e : s.events) {
        json je;
        je["kind"] = to_string(e.kind);
        je["position_m"] = e.position_m;
        je["loss_db"] = e.loss_db;
        je["reflectance_spike_db"] = e.reflectance_spike_db;
        je["extent_m"] = e.extent_m;
        events.push_back(je);
    }

    json label;
    label["class"] = to_string(s.label.cls);
    if (s.label.position_m) label["position_m"] = *s.label.position_m;

    json j;
    j["config"] = c;
    j["events"] = events;
    j["label"] = label;
    return j.dump(2) + "\n";
}

void write_scenario(const std::filesystem::path& path, const FiberScenario& s) {
    atomic_write(path, scenario_to_json(s));
}

// ---------------------------------------------------------------------------
// Trace CSV

std::string trace_to_csv(const Trace& t) {
    std::ostringstream os;
    os << "# spacing_m=" << format_double(t.spacing_m) << "\n";
    for (const auto& [k, v] : t.meta) os << "# " << k << "=" << v << "\n";
    os << "distance_m,power_db\n";
    for (std::size_t i = 0; i < t.samples.size(); ++i) {
        os << format_double(static_cast<double>(i) * t.spacing_m) << ","
           << format_double(t.samples[i]) << "\n";
    }
    return os.str();
}

void write_trace(const std::filesystem::path& path, const Trace& t) {
    atomic_write(path, trace_to_csv(t));
}

Trace read_trace(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw FileFormatError("cannot open " + path.string());

    Trace t;
    bool have_spacing = false;
    bool have_header = false;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        if (line[0] == '#') {
            std::size_t start = line.find_first_not_of(" \t", 1);
            if (start == std::string::npos) continue;
            std::size_t eq = line.find('=', start);
            if (eq == std::string::npos) continue;
            std::string key = line.substr(start, eq - start);
            std::string value = line.substr(eq + 1);
            if (key == "spacing_m") {
                t.spacing_m = std::stod(value);
                have_spacing = true;
            } else {
                t.meta[key] = value;
            }
            continue;
        }
        if (!have_header) {
            if (line != "distance_m,power_db")
                throw FileFormatError(path.string() + ":" + std::to_string(lineno) +
                                      ": expected header 'distance_m,power_db'");
            have_header = true;
            continue;
        }
        std::size_t comma = line.find(',');
        if (comma == std::string::npos)
            throw FileFormatError(path.string() + ":" + std::to_string(lineno) +
                                  ": expected 'distance,power' row");
        double dist = 0.0, power = 0.0;
        auto r1 = std::from_chars(line.data(), line.data() + comma, dist);
        auto r2 = std::from_chars(line.data() + comma + 1, line.data() + line.size(), power);
        if (r1.ec != std::errc{} || r2.ec != std::errc{})
            throw FileFormatError(path.string() + ":" + std::to_string(lineno) +
                                  ": bad number in row");
        const auto idx = t.samples.size();
        if (idx == 1 && !have_spacing) {
            t.spacing_m = dist;
            have_spacing = true;
        }
        const double expected = static_cast<double>(idx) * t.spacing_m;
        if (idx == 0 && dist != 0.0)
            throw FileFormatError(path.string() + ": distance must start at 0");
        if (idx > 0 && have_spacing && std::abs(dist - expected) > 1e-6 * std::max(1.0, expected))
            throw FileFormatError(path.string() + ":" + std::to_string(lineno) +
                                  ": distances not uniformly ascending");
        t.samples.push_back(power);
    }
    if (!have_header) throw FileFormatError(path.string() + ": missing CSV header");
    if (t.samples.size() < 2) throw FileFormatError(path.string() + ": trace too short");
    return t;
}

// ---------------------------------------------------------------------------
// Route files

RoutePolyline read_route(const std::filesystem::path& path) {
    json j = parse_json(read_file(path), path);
    reject_unknown_keys(j, {"slack_factor", "waypoints", "vertices"}, path.string());

    if (j.contains("vertices")) {
        RoutePolyline route;
        get_if_present(j, "slack_factor", route.slack_factor);
        for (const json& v : j["vertices"]) {
            reject_unknown_keys(v, {"lat", "lon", "chainage_m"}, path.string() + " vertex");
            route.vertices.push_back({v.at("lat").get<double>(), v.at("lon").get<double>(),
                                      v.at("chainage_m").get<double>()});
        }
        auto violations = validate_route(route);
        if (!violations.empty())
            throw FileFormatError(path.string() + ": invalid route: " + violations.front());
        return route;
    }

    if (!j.contains("waypoints"))
        throw FileFormatError(path.string() + ": route needs 'waypoints' or 'vertices'");
    double slack = 1.02;
    get_if_present(j, "slack_factor", slack);
    std::vector<LatLon> pts;
    for (const json& v : j["waypoints"]) {
        reject_unknown_keys(v, {"lat", "lon"}, path.string() + " waypoint");
        pts.push_back({v.at("lat").get<double>(), v.at("lon").get<double>()});
    }
    try {
        return build_route(pts, slack);
    } catch (const std::invalid_argument& e) {
        throw FileFormatError(path.string() + ": " + e.what());
    }
}

void write_route(const std::filesystem::path& path, const RoutePolyline& r) {
    json j;
    j["slack_factor"] = r.slack_factor;
    json verts = json::array();
    for (const auto& v : r.vertices) {
        json jv;
        jv["lat"] = v.lat_deg;
        jv["lon"] = v.lon_deg;
        jv["chainage_m"] = v.chainage_m;
        verts.push_back(jv);
    }
    j["vertices"] = verts;
    atomic_write(path, j.dump(2) + "\n");
}

// ---------------------------------------------------------------------------
// Model weights

namespace {

json layer_to_json(const nn::Layer& l) {
    json j;
    j["kind"] = nn::to_string(l.kind);
    switch (l.kind) {
        case nn::LayerKind::Conv1d:
            j["in_ch"] = l.in_ch;
            j["out_ch"] = l.out_ch;
            j["kernel"] = l.kernel;
            j["stride"] = l.stride;
            j["weights"] = l.weights;
            j["bias"] = l.bias;
            break;
        case nn::LayerKind::Dense:
            j["in_dim"] = l.in_dim;
            j["out_dim"] = l.out_dim;
            j["weights"] = l.weights;
            j["bias"] = l.bias;
            break;
        case nn::LayerKind::MaxPool1d:
            j["width"] = l.pool_width;
            break;
        case nn::LayerKind::ReLU:
        case nn::LayerKind::Softmax:
            break;
    }
    return j;
}

nn::Layer layer_from_json(const json& j, const std::string& context) {
    auto kind = nn::layer_kind_from_string(j.at("kind").get<std::string>());
    if (!kind) throw FileFormatError(context + ": unknown layer kind");
    switch (*kind) {
        case nn::LayerKind::Conv1d: {
            nn::Layer l = nn::Layer::conv1d(j.at("in_ch").get<std::size_t>(),
                                            j.at("out_ch").get<std::size_t>(),
                                            j.at("kernel").get<std::size_t>(),
                                            j.value("stride", std::size_t{1}));
            auto w = j.at("weights").get<std::vector<double>>();
            auto b = j.at("bias").get<std::vector<double>>();
            if (w.size() != l.weights.size() || b.size() != l.bias.size())
                throw FileFormatError(context + ": conv parameter size mismatch");
            l.weights = std::move(w);
            l.bias = std::move(b);
            return l;
        }
        case nn::LayerKind::Dense: {
            nn::Layer l = nn::Layer::dense(j.at("in_dim").get<std::size_t>(),
                                           j.at("out_dim").get<std::size_t>());
            auto w = j.at("weights").get<std::vector<double>>();
            auto b = j.at("bias").get<std::vector<double>>();
            if (w.size() != l.weights.size() || b.size() != l.bias.size())
                throw FileFormatError(context + ": dense parameter size mismatch");
            l.weights = std::move(w);
            l.bias = std::move(b);
            return l;
        }
        case nn::LayerKind::MaxPool1d:
            return nn::Layer::maxpool1d(j.at("width").get<std::size_t>());
        case nn::LayerKind::ReLU:
            return nn::Layer::relu();
        case nn::LayerKind::Softmax:
            return nn::Layer::softmax();
    }
    throw FileFormatError(context + ": unreachable layer kind");
}

}  // namespace

std::string weights_to_json(const CnnModel& m) {
    json j;
    j["format_version"] = 1;
    j["input_len"] = m.input_len;
    json layers = json::array();
    for (const auto& l : m.trunk) layers.push_back(layer_to_json(l));
    layers.push_back(layer_to_json(m.head_class.at(0)));
    layers.push_back(layer_to_json(m.head_pos.at(0)));
    j["layers"] = layers;
    return j.dump() + "\n";
}

void write_weights(const std::filesystem::path& path, const CnnModel& m) {
    atomic_write(path, weights_to_json(m));
}

CnnModel read_weights(const std::filesystem::path& path) {
    json j = parse_json(read_file(path), path);
    if (j.value("format_version", 0) != 1)
        throw FileFormatError(path.string() + ": unsupported weights format_version");
    if (!j.contains("layers") || !j["layers"].is_array() || j["layers"].size() < 3)
        throw FileFormatError(path.string() + ": weights file needs at least 3 layers");

    CnnModel m;
    m.input_len = j.value("input_len", std::size_t{1024});
    const json& layers = j["layers"];
    // The last two layers are the class and position heads, in that order.
    for (std::size_t i = 0; i + 2 < layers.size(); ++i)
        m.trunk.push_back(layer_from_json(layers[i], path.string()));
    m.head_class.push_back(layer_from_json(layers[layers.size() - 2], path.string()));
    m.head_pos.push_back(layer_from_json(layers[layers.size() - 1], path.string()));

    if (m.head_class.at(0).kind != nn::LayerKind::Dense ||
        m.head_pos.at(0).kind != nn::LayerKind::Dense || m.head_pos.at(0).out_dim != 1)
        throw FileFormatError(path.string() + ": head layers malformed");
    return m;
}

// ---------------------------------------------------------------------------
// Dataset manifest

std::string manifest_to_jsonl(const std::vector<ManifestEntry>& entries) {
    std::ostringstream os;
    for (const auto& e : entries) {
        json j;
        j["trace"] = e.trace_path;
        j["class"] = to_string(e.label.cls);
        if (e.label.position_m) j["position_m"] = *e.label.position_m;
        j["seed"] = e.seed;
        os << j.dump() << "\n";
    }
    return os.str();
}

std::vector<ManifestEntry> read_manifest(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw FileFormatError("cannot open " + path.string());
    std::vector<ManifestEntry> entries;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        json j = parse_json(line, path);
        ManifestEntry e;
        e.trace_path = j.at("trace").get<std::string>();
        auto cls = fault_class_from_string(j.at("class").get<std::string>());
        if (!cls)
            throw FileFormatError(path.string() + ":" + std::to_string(lineno) +
                                  ": unknown class");
        e.label.cls = *cls;
        if (j.contains("position_m")) e.label.position_m = j["position_m"].get<double>();
        e.seed = j.value("seed", std::uint64_t{0});
        entries.push_back(e);
    }
    return entries;
}

std::vector<std::pair<Trace, FaultLabel>> load_manifest_dataset(
    const std::filesystem::path& manifest_path) {
    auto entries = read_manifest(manifest_path);
    const auto dir = manifest_path.parent_path();
    std::vector<std::pair<Trace, FaultLabel>> dataset;
    dataset.reserve(entries.size());
    for (const auto& e : entries) {
        std::filesystem::path p = dir / e.trace_path;
        if (!std::filesystem::exists(p))
            throw FileFormatError("manifest references missing trace file " + p.string());
        dataset.emplace_back(read_trace(p), e.label);
    }
    return dataset;
}

// ---------------------------------------------------------------------------
// Configs

SamplerConfig read_sampler_config(const std::filesystem::path& path) {
    json j = parse_json(read_file(path), path);
    reject_unknown_keys(j,
                        {"n_traces", "class_mix", "position_range_m", "splice_loss_db",
                         "bend_loss_db", "bend_extent_m", "connector_loss_db",
                         "connector_spike_db", "noise_sigma_range", "master_seed"},
                        path.string());
    SamplerConfig cfg;
    get_if_present(j, "n_traces", cfg.n_traces);
    if (j.contains("class_mix")) {
        auto mix = j["class_mix"].get<std::vector<double>>();
        if (mix.size() != 4)
            throw FileFormatError(path.string() + ": class_mix must have 4 entries");
        std::copy(mix.begin(), mix.end(), cfg.class_mix.begin());
    }
    auto pair_of = [&](const char* key, double& lo, double& hi) {
        if (!j.contains(key)) return;
        auto v = j[key].get<std::vector<double>>();
        if (v.size() != 2) throw FileFormatError(path.string() + ": " + key + " must be [min, max]");
        lo = v[0];
        hi = v[1];
    };
    pair_of("position_range_m", cfg.position_min_m, cfg.position_max_m);
    pair_of("splice_loss_db", cfg.splice_loss_min_db, cfg.splice_loss_max_db);
    pair_of("bend_loss_db", cfg.bend_loss_min_db, cfg.bend_loss_max_db);
    pair_of("bend_extent_m", cfg.bend_extent_min_m, cfg.bend_extent_max_m);
    pair_of("connector_loss_db", cfg.connector_loss_min_db, cfg.connector_loss_max_db);
    pair_of("connector_spike_db", cfg.connector_spike_min_db, cfg.connector_spike_max_db);
    pair_of("noise_sigma_range", cfg.noise_mult_min, cfg.noise_mult_max);
    get_if_present(j, "master_seed", cfg.master_seed);

    try {
        validate_sampler_config(cfg);
    } catch (const std::invalid_argument& e) {
        throw FileFormatError(path.string() + ": " + e.what());
    }
    return cfg;
}

std::string sampler_config_to_json(const SamplerConfig& cfg) {
    json j;
    j["n_traces"] = cfg.n_traces;
    j["class_mix"] = cfg.class_mix;
    j["position_range_m"] = {cfg.position_min_m, cfg.position_max_m};
    j["splice_loss_db"] = {cfg.splice_loss_min_db, cfg.splice_loss_max_db};
    j["bend_loss_db"] = {cfg.bend_loss_min_db, cfg.bend_loss_max_db};
    j["bend_extent_m"] = {cfg.bend_extent_min_m, cfg.bend_extent_max_m};
    j["connector_loss_db"] = {cfg.connector_loss_min_db, cfg.connector_loss_max_db};
    j["connector_spike_db"] = {cfg.connector_spike_min_db, cfg.connector_spike_max_db};
    j["noise_sigma_range"] = {cfg.noise_mult_min, cfg.noise_mult_max};
    j["master_seed"] = cfg.master_seed;
    return j.dump(2) + "\n";
}

ThresholdConfig read_threshold_config(const std::filesystem::path& path) {
    json j = parse_json(read_file(path), path);
    reject_unknown_keys(j,
                        {"window_m", "loss_cutoff_db", "spike_cutoff_db", "bend_loss_cutoff_db",
                         "guard_m", "spike_skip_m"},
                        path.string());
    ThresholdConfig cfg;
    get_if_present(j, "window_m", cfg.window_m);
    get_if_present(j, "loss_cutoff_db", cfg.loss_cutoff_db);
    get_if_present(j, "spike_cutoff_db", cfg.spike_cutoff_db);
    get_if_present(j, "bend_loss_cutoff_db", cfg.bend_loss_cutoff_db);
    get_if_present(j, "guard_m", cfg.guard_m);
    get_if_present(j, "spike_skip_m", cfg.spike_skip_m);
    return cfg;
}

// ---------------------------------------------------------------------------
// Reports and logs

namespace {

json metrics_to_json(const MethodMetrics& m) {
    json j;
    j["detection_accuracy"] = m.detection_accuracy;
    j["false_positive_rate"] = m.false_positive_rate;
    if (m.mean_localization_error_m)
        j["mean_localization_error_m"] = *m.mean_localization_error_m;
    else
        j["mean_localization_error_m"] = nullptr;
    j["mean_latency_s"] = m.mean_latency_s;
    json conf = json::array();
    for (const auto& row : m.confusion) conf.push_back(row);
    j["confusion"] = conf;
    return j;
}

}  // namespace

std::string report_to_json(const BenchmarkReport& r) {
    json j;
    j["dataset"] = r.dataset_descriptor;
    j["environment"] = r.environment_note;
    j["n_traces"] = r.n_traces;
    j["position_tolerance_m"] = r.position_tolerance_m;
    j["seeds"] = {{"test_master_seed", r.test_master_seed},
                  {"train_master_seed", r.train_master_seed}};
    j["methods"] = {{"baseline", metrics_to_json(r.baseline)}, {"cnn", metrics_to_json(r.cnn)}};
    return j.dump(2) + "\n";
}

void write_report(const std::filesystem::path& path, const BenchmarkReport& r) {
    atomic_write(path, report_to_json(r));
}

std::string training_log_to_csv(const std::vector<EpochLog>& log) {
    std::ostringstream os;
    os << "epoch,train_loss,val_loss,val_acc\n";
    for (const auto& e : log) {
        os << e.epoch << "," << format_double(e.train_loss) << "," << format_double(e.val_loss)
           << "," << format_double(e.val_accuracy) << "\n";
    }
    return os.str();
}

}  // namespace otdr::io
