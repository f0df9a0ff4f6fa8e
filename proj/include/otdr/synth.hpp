#pragma once

// OTDR trace synthesis: deterministic backscatter curve plus event steps,
// reflectance spikes and seeded linear-domain noise.

#include <array>

#include "otdr/plant.hpp"

namespace otdr {

// Noiseless trace: sloped backscatter baseline, Heaviside steps for splices
// and connectors, linear ramps for bends, triangular reflectance spikes one
// pulse width wide, termination to the noise floor after a FiberEnd.
// Throws std::invalid_argument when validate_scenario reports violations.
Trace clean_trace(const FiberScenario& s);

// clean_trace plus additive Gaussian noise of stddev noise_sigma_linear in
// the linear-power domain, clamped at the receiver floor. Deterministic in
// config.rng_seed; the trace meta records the seed.
Trace noisy_trace(const FiberScenario& s);

// The four archetype scenarios on a 10 km span: Normal, splice at 3 km,
// bend at 6 km, connector at 8 km. Loss magnitudes sit at the midpoints of
// the dataset sampler ranges.
std::array<FiberScenario, 4> reference_scenarios();

}  // namespace otdr
