#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace deepesn {

inline constexpr std::string_view kVersion = "1.0.0";

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

/// Base for all library errors. Precondition violations on arguments
/// (dimension mismatches, out-of-range parameters) use std::invalid_argument.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Input data is malformed or fails a quality gate.
class DataError : public Error {
public:
    using Error::Error;
};

/// A numerical procedure could not produce a valid result.
class NumericalError : public Error {
public:
    using Error::Error;
};

/// Invalid run configuration.
class ConfigError : public Error {
public:
    using Error::Error;
};

// Shortest decimal text that parses back to the identical double.
std::string format_double(double value);

// Fixed-precision text, for human-facing tables.
std::string format_fixed(double value, int digits);

// Strict parse: the whole string must be consumed. Accepts "nan" and "inf".
double parse_double(std::string_view text);

// 64-bit FNV-1a; stable across platforms, used for content and config hashes.
std::uint64_t fnv1a64(std::string_view bytes);
std::string hex64(std::uint64_t value);

std::string trim(std::string_view text);
std::vector<std::string> split(std::string_view line, char delimiter);

// splitmix64 step, used to derive independent seeds from one base seed.
std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream);

}  // namespace deepesn
