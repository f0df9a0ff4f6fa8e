#pragma once

// Classical control method: a fixed dB-cutoff event detector built on local
// two-segment line fits, with a rule-based class heuristic.

#include <cstddef>

#include "otdr/plant.hpp"

namespace otdr {

// Cutoffs and geometry for the threshold detector. spike_skip_m is the pulse
// spatial width: the right fit window starts one pulse width past the
// candidate so a reflectance spike cannot leak into the loss estimate.
struct ThresholdConfig {
    double window_m = 50.0;            // fit half-window
    double loss_cutoff_db = 0.2;       // candidate threshold on step loss
    double spike_cutoff_db = 1.0;      // candidate threshold on spike height
    double bend_loss_cutoff_db = 1.0;  // splice/bend class boundary
    double spike_skip_m = 299792458.0 * 10e-9 / (2.0 * 1.468);
    double guard_m = 2.0 * 299792458.0 * 10e-9 / (2.0 * 1.468);

    // Geometry derived from the instrument parameters instead of the
    // defaults above.
    static ThresholdConfig for_acquisition(const AcquisitionConfig& acq);
};

struct StepEstimate {
    double loss_db = 0.0;   // left fit minus right fit, both evaluated at z_i
    double spike_db = 0.0;  // max sample in [z_i, z_i + skip] minus left fit
};

// Two-segment local fit around sample i. Fit windows mask samples more than
// spike_cutoff_db above the window median so reflectance spikes never bias
// the line fits. Throws std::out_of_range when i is too close to either
// trace end for both windows to fit.
StepEstimate local_step_estimate(const Trace& t, std::size_t i, const ThresholdConfig& cfg);

// First admissible sample index and one-past-last admissible index for
// local_step_estimate on this trace.
std::pair<std::size_t, std::size_t> admissible_index_range(const Trace& t,
                                                           const ThresholdConfig& cfg);

// Scans all admissible samples, thresholds loss/spike estimates, suppresses
// non-maximal candidates within guard_m and reports the single strongest
// event (or Normal). Throws std::invalid_argument when the trace is shorter
// than 4 fit windows or the config violates its invariants.
Detection detect_threshold(const Trace& t, const ThresholdConfig& cfg);

}  // namespace otdr
