#pragma once

namespace eps {

// Main-sequence peak velocity, deg/s: 500 * (1 - exp(-A / 14)).
double main_sequence_peak_velocity(double amplitude_deg);

// Raised-cosine velocity profile v(tau) = Vp/2 * (1 - cos(2 pi tau / D)).
// The peak follows the main sequence; the duration is fixed by the area
// constraint D = 2A / Vp so that the profile integrates to the amplitude.
struct SaccadeProfile {
    double amplitude_deg = 0.0;
    double peak_velocity_dps = 0.0;
    double duration_ms = 0.0;

    static SaccadeProfile for_amplitude(double amplitude_deg);

    double velocity_at(double tau_ms) const;
    // Angle covered after tau_ms, in degrees; clamps to [0, amplitude].
    double progress_at(double tau_ms) const;
};

}  // namespace eps
