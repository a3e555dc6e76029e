#include "eps/saccade.hpp"

#include <cmath>
#include <numbers>

namespace eps {

double main_sequence_peak_velocity(double amplitude_deg)
{
    return 500.0 * (1.0 - std::exp(-amplitude_deg / 14.0));
}

SaccadeProfile SaccadeProfile::for_amplitude(double amplitude_deg)
{
    SaccadeProfile p;
    p.amplitude_deg = amplitude_deg;
    if (amplitude_deg <= 1e-9)
        return p;
    p.peak_velocity_dps = main_sequence_peak_velocity(amplitude_deg);
    p.duration_ms = 2.0 * amplitude_deg / p.peak_velocity_dps * 1000.0;
    return p;
}

double SaccadeProfile::velocity_at(double tau_ms) const
{
    if (duration_ms <= 0.0 || tau_ms <= 0.0 || tau_ms >= duration_ms)
        return 0.0;
    return 0.5 * peak_velocity_dps * (1.0 - std::cos(2.0 * std::numbers::pi * tau_ms / duration_ms));
}

double SaccadeProfile::progress_at(double tau_ms) const
{
    if (duration_ms <= 0.0 || tau_ms >= duration_ms)
        return amplitude_deg;
    if (tau_ms <= 0.0)
        return 0.0;
    const double u = tau_ms / duration_ms;
    return amplitude_deg * (u - std::sin(2.0 * std::numbers::pi * u) / (2.0 * std::numbers::pi));
}

}  // namespace eps
