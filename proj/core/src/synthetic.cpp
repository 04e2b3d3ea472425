#include "deepesn/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

namespace deepesn {

namespace {

double unit_uniform(std::mt19937_64& rng) {
    return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

// Box-Muller on the raw engine so the stream is identical across standard libraries.
double standard_normal(std::mt19937_64& rng) {
    const double u1 = 1.0 - unit_uniform(rng);
    const double u2 = unit_uniform(rng);
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

}  // namespace

TimeSeries make_synthetic_traffic(const SyntheticTrafficConfig& config) {
    std::mt19937_64 rng(config.seed);
    const auto slots_per_day = static_cast<double>(kSlotsPerDay);
    std::vector<double> values(config.length);
    std::vector<bool> missing(config.length, false);
    double noise = 0.0;
    const double innovation = config.noise_sigma * std::sqrt(1.0 - config.ar_coefficient * config.ar_coefficient);
    for (std::size_t t = 0; t < config.length; ++t) {
        const double day_phase = 2.0 * std::numbers::pi * static_cast<double>(t) / slots_per_day;
        const auto day = t / kSlotsPerDay;
        const bool weekend = (day % 7) >= 5;
        // Two rush-hour humps per day, damped on weekends.
        const double profile = -std::cos(day_phase) + 0.35 * std::sin(2.0 * day_phase);
        const double scale = weekend ? 1.0 - config.weekly_modulation : 1.0;
        noise = config.ar_coefficient * noise + innovation * standard_normal(rng);
        values[t] = std::max(0.0, config.base_flow + scale * config.daily_amplitude * profile + noise);
        if (config.missing_fraction > 0.0 && unit_uniform(rng) < config.missing_fraction) {
            missing[t] = true;
        }
    }
    return TimeSeries(config.sensor_id, config.start, kSlotSeconds, std::move(values), std::move(missing));
}

}  // namespace deepesn
