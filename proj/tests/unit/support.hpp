#pragma once

// Small helpers shared by the unit tests: a seeded generator for property
// checks and a few conversions.

#include "deepesn/common.hpp"
#include "deepesn/data.hpp"

#include <cstdint>
#include <random>
#include <span>
#include <sstream>
#include <string>
#include <vector>

namespace testing {

class Gen {
public:
    explicit Gen(std::uint64_t seed) : rng_(seed) {}

    double uniform(double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(rng_); }
    double normal(double mean = 0.0, double sd = 1.0) { return std::normal_distribution<double>(mean, sd)(rng_); }
    std::size_t size(std::size_t lo, std::size_t hi) { return std::uniform_int_distribution<std::size_t>(lo, hi)(rng_); }
    std::uint64_t u64() { return rng_(); }
    bool coin() { return std::bernoulli_distribution(0.5)(rng_); }

    template <typename T>
    const T& pick(const std::vector<T>& items) {
        return items[size(0, items.size() - 1)];
    }

    deepesn::Matrix matrix(std::size_t rows, std::size_t cols, double lo = -1.0, double hi = 1.0) {
        deepesn::Matrix m(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
        for (Eigen::Index j = 0; j < m.cols(); ++j) {
            for (Eigen::Index i = 0; i < m.rows(); ++i) {
                m(i, j) = uniform(lo, hi);
            }
        }
        return m;
    }

    std::vector<double> values(std::size_t n, double lo, double hi) {
        std::vector<double> out(n);
        for (auto& v : out) {
            v = uniform(lo, hi);
        }
        return out;
    }

private:
    std::mt19937_64 rng_;
};

inline std::span<const double> view(const deepesn::Vector& v) {
    return {v.data(), static_cast<std::size_t>(v.size())};
}

inline deepesn::TimeSeries series_of(std::vector<double> values, std::string id = "s") {
    return deepesn::TimeSeries(std::move(id), 0, deepesn::kSlotSeconds, std::move(values));
}

inline deepesn::TimeSeries parse_csv(const std::string& text, deepesn::CsvSchema schema = {}) {
    if (schema.sensor_id.empty()) {
        schema.sensor_id = "test";
    }
    std::istringstream in(text);
    return deepesn::parse_series(in, schema);
}

}  // namespace testing
