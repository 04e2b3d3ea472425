#pragma once

#include "deepesn/data.hpp"

#include <cstdint>
#include <string>

namespace deepesn {

/// Parameters of a traffic-like flow generator: a daily profile with a
/// weekday/weekend modulation plus AR(1) noise, clipped at zero.
struct SyntheticTrafficConfig {
    std::size_t length = 4000;
    double base_flow = 300.0;
    double daily_amplitude = 200.0;
    // Fraction by which weekend days are damped.
    double weekly_modulation = 0.3;
    double noise_sigma = 25.0;
    double ar_coefficient = 0.7;
    // Fraction of slots dropped to simulate sensor outages.
    double missing_fraction = 0.0;
    std::int64_t start = 1483228800;  // 2017-01-01T00:00:00Z
    std::uint64_t seed = 1;
    std::string sensor_id = "synthetic";
};

TimeSeries make_synthetic_traffic(const SyntheticTrafficConfig& config);

}  // namespace deepesn
