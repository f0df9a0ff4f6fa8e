#include "otdr/baseline.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <vector>

namespace otdr {

ThresholdConfig ThresholdConfig::for_acquisition(const AcquisitionConfig& acq) {
    ThresholdConfig cfg;
    cfg.spike_skip_m = pulse_spatial_width(acq);
    cfg.guard_m = 2.0 * cfg.spike_skip_m;
    return cfg;
}

namespace {

void check_config(const ThresholdConfig& cfg, double spacing_m) {
    if (!(cfg.window_m > 0.0 && cfg.loss_cutoff_db > 0.0 && cfg.spike_cutoff_db > 0.0 &&
          cfg.bend_loss_cutoff_db > 0.0 && cfg.guard_m > 0.0 && cfg.spike_skip_m > 0.0))
        throw std::invalid_argument("threshold config: all fields must be positive");
    if (!(cfg.window_m >= 5.0 * spacing_m))
        throw std::invalid_argument("threshold config: window_m must be >= 5 * sample spacing");
    if (!(cfg.bend_loss_cutoff_db > cfg.loss_cutoff_db))
        throw std::invalid_argument("threshold config: bend cutoff must exceed loss cutoff");
}

// Least-squares line over samples [lo, hi), evaluated at index i. Samples
// more than mask_db above the window median are excluded (reflectance
// spikes are upward outliers; loss steps point down and are kept).
double masked_fit_at(const Trace& t, std::size_t lo, std::size_t hi, std::size_t i,
                     double mask_db) {
    static thread_local std::vector<double> scratch;
    scratch.assign(t.samples.begin() + static_cast<std::ptrdiff_t>(lo),
                   t.samples.begin() + static_cast<std::ptrdiff_t>(hi));
    auto mid = scratch.begin() + static_cast<std::ptrdiff_t>(scratch.size() / 2);
    std::nth_element(scratch.begin(), mid, scratch.end());
    const double cutoff = *mid + mask_db;

    // Offsets are centered on i so the normal equations stay well conditioned.
    double n = 0, sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (std::size_t j = lo; j < hi; ++j) {
        const double y = t.samples[j];
        if (y > cutoff) continue;
        const double x = (static_cast<double>(j) - static_cast<double>(i)) * t.spacing_m;
        n += 1.0;
        sx += x;
        sy += y;
        sxx += x * x;
        sxy += x * y;
    }
    const double det = n * sxx - sx * sx;
    if (n < 2.0 || det == 0.0) return n > 0.0 ? sy / n : *mid;
    // Intercept of the fitted line at x = 0, i.e. at sample i.
    return (sy * sxx - sx * sxy) / det;
}

}  // namespace

namespace {

// First sample index offset strictly beyond the spike region z_i + skip.
std::size_t gap_samples(const ThresholdConfig& cfg, double dz) {
    return static_cast<std::size_t>(std::floor(cfg.spike_skip_m / dz)) + 1;
}

}  // namespace

std::pair<std::size_t, std::size_t> admissible_index_range(const Trace& t,
                                                           const ThresholdConfig& cfg) {
    const double dz = t.spacing_m;
    const auto window = static_cast<std::size_t>(std::ceil(cfg.window_m / dz));
    const auto gap = gap_samples(cfg, dz);
    const std::size_t n = t.samples.size();
    const std::size_t first = window;
    const std::size_t need_right = window + gap;
    if (n <= first + need_right) return {0, 0};
    return {first, n - need_right};
}

StepEstimate local_step_estimate(const Trace& t, std::size_t i, const ThresholdConfig& cfg) {
    check_config(cfg, t.spacing_m);
    auto [first, last] = admissible_index_range(t, cfg);
    if (i < first || i >= last)
        throw std::out_of_range("local_step_estimate: index too close to trace boundary");

    const double dz = t.spacing_m;
    const auto window = static_cast<std::size_t>(std::ceil(cfg.window_m / dz));
    const auto gap = gap_samples(cfg, dz);

    const double left = masked_fit_at(t, i - window, i, i, cfg.spike_cutoff_db);
    const double right = masked_fit_at(t, i + gap, i + gap + window, i, cfg.spike_cutoff_db);

    StepEstimate est;
    est.loss_db = left - right;

    // Spike height over the left fit, scanned across one pulse width starting
    // at the candidate itself (the peak sits on the event sample).
    double peak = t.samples[i];
    for (std::size_t j = i + 1; j < t.samples.size(); ++j) {
        if ((static_cast<double>(j) - static_cast<double>(i)) * dz > cfg.spike_skip_m) break;
        peak = std::max(peak, t.samples[j]);
    }
    est.spike_db = peak - left;
    return est;
}

Detection detect_threshold(const Trace& t, const ThresholdConfig& cfg) {
    check_config(cfg, t.spacing_m);
    const auto window = static_cast<std::size_t>(std::ceil(cfg.window_m / t.spacing_m));
    if (t.samples.size() < 4 * window)
        throw std::invalid_argument("detect_threshold: trace shorter than 4 fit windows");

    struct Candidate {
        std::size_t index;
        StepEstimate est;
        double strength;
    };

    auto [first, last] = admissible_index_range(t, cfg);
    std::vector<Candidate> candidates;
    for (std::size_t i = first; i < last; ++i) {
        StepEstimate est = local_step_estimate(t, i, cfg);
        if (est.loss_db > cfg.loss_cutoff_db || est.spike_db > cfg.spike_cutoff_db)
            candidates.push_back({i, est, std::max(est.loss_db, est.spike_db)});
    }

    if (candidates.empty()) return Detection{};

    // Single strongest candidate. A reflective event or the spike-skip gap
    // leaves several adjacent candidates numerically tied at the event
    // strength; ties within 1e-9 resolve to the larger position, which is
    // the event sample itself (the gap sits left of it). Candidates farther
    // apart than guard_m are genuinely distinct and compared strictly.
    const Candidate* best = &candidates.front();
    for (const Candidate& c : candidates) {
        if (c.strength > best->strength + 1e-9) {
            best = &c;
        } else if (c.strength > best->strength - 1e-9 && c.index > best->index &&
                   (static_cast<double>(c.index - best->index)) * t.spacing_m < cfg.guard_m) {
            best = &c;
        }
    }
    Detection det;
    det.position_m = static_cast<double>(best->index) * t.spacing_m;
    det.loss_db_est = std::max(0.0, best->est.loss_db);
    if (best->est.spike_db > cfg.spike_cutoff_db) {
        det.cls = FaultClass::Connector;
        det.confidence = std::min(1.0, best->est.spike_db / (2.0 * cfg.spike_cutoff_db));
    } else if (best->est.loss_db >= cfg.bend_loss_cutoff_db) {
        det.cls = FaultClass::Bend;
        det.confidence = std::min(1.0, best->est.loss_db / cfg.bend_loss_cutoff_db);
    } else {
        det.cls = FaultClass::Splice;
        det.confidence = std::min(1.0, best->est.loss_db / cfg.bend_loss_cutoff_db);
    }
    return det;
}

}  // namespace otdr
