#pragma once

// Ingestion, validation and gap imputation of 15-minute traffic-count series.

#include "deepesn/common.hpp"

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

namespace deepesn {

inline constexpr std::int64_t kSlotSeconds = 900;
inline constexpr std::size_t kSlotsPerDay = 96;
inline constexpr std::size_t kSlotsPerYear = 365 * kSlotsPerDay;  // 35,040

/// Uniformly sampled univariate flow series on a dense grid.
///
/// Slots without a reading are kept as rows with `missing(i) == true`; their
/// stored value is NaN. Every present value is finite and non-negative.
class TimeSeries {
public:
    TimeSeries() = default;
    TimeSeries(std::string sensor_id, std::int64_t start, std::int64_t step,
               std::vector<double> values, std::vector<bool> missing);

    // Fully observed series.
    TimeSeries(std::string sensor_id, std::int64_t start, std::int64_t step,
               std::vector<double> values);

    const std::string& sensor_id() const { return sensor_id_; }
    std::int64_t start() const { return start_; }
    std::int64_t step() const { return step_; }
    std::int64_t timestamp(std::size_t i) const { return start_ + static_cast<std::int64_t>(i) * step_; }

    std::size_t size() const { return values_.size(); }
    bool empty() const { return values_.empty(); }
    double value(std::size_t i) const { return values_[i]; }
    bool missing(std::size_t i) const { return missing_[i]; }
    std::span<const double> values() const { return values_; }
    const std::vector<bool>& missing_mask() const { return missing_; }

    std::size_t missing_count() const;
    double missing_fraction() const;
    bool complete() const { return missing_count() == 0; }

private:
    std::string sensor_id_;
    std::int64_t start_ = 0;
    std::int64_t step_ = kSlotSeconds;
    std::vector<double> values_;
    std::vector<bool> missing_;
};

/// Column mapping for delimiter-separated exports.
struct CsvSchema {
    std::string timestamp_column = "timestamp";
    std::string flow_column = "flow";
    char delimiter = ',';
    std::int64_t step_seconds = kSlotSeconds;
    // Empty: derived from the file stem by load_series.
    std::string sensor_id;
};

// ISO-8601 ("2017-03-01T00:15:00", optional 'Z', ' ' separator allowed) or
// integral epoch seconds. Returns epoch seconds (UTC).
std::int64_t parse_timestamp(std::string_view text);
std::string format_timestamp(std::int64_t epoch_seconds);

/// Reads a header + rows export and normalizes it to a dense grid.
/// Rows may arrive in any order. Throws DataError naming the row on
/// malformed input, duplicates, or off-grid timestamps.
TimeSeries load_series(const std::filesystem::path& path, const CsvSchema& schema = {});
TimeSeries parse_series(std::istream& in, const CsvSchema& schema);

struct ImputeOptions {
    double max_missing_fraction = 0.03;
};

/// Linear interpolation across interior gaps, nearest-value hold at the edges.
TimeSeries impute(const TimeSeries& series, const ImputeOptions& options = {});

// Versioned text cache of a normalized series; values round-trip exactly.
void write_series_cache(const TimeSeries& series, std::ostream& out, std::string_view header_note = {});
TimeSeries read_series_cache(std::istream& in);
void save_series_cache(const TimeSeries& series, const std::filesystem::path& path,
                       std::string_view header_note = {});
TimeSeries load_series_cache(const std::filesystem::path& path);

}  // namespace deepesn
