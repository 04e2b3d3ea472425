#include "deepesn/data.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <istream>
#include <limits>
#include <ostream>
#include <sstream>
#include <utility>

namespace deepesn {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();
constexpr std::string_view kCacheMagic = "# deepesn-series v1";

// Howard Hinnant's days_from_civil.
std::int64_t days_from_civil(std::int64_t y, unsigned m, unsigned d) {
    y -= m <= 2;
    const std::int64_t era = (y >= 0 ? y : y - 399) / 400;
    const auto yoe = static_cast<unsigned>(y - era * 400);
    const unsigned doy = (153 * (m + (m > 2 ? -3 : 9)) + 2) / 5 + d - 1;
    const unsigned doe = yoe * 365 + yoe / 4 - yoe / 100 + doy;
    return era * 146097 + static_cast<std::int64_t>(doe) - 719468;
}

void civil_from_days(std::int64_t z, std::int64_t& y, unsigned& m, unsigned& d) {
    z += 719468;
    const std::int64_t era = (z >= 0 ? z : z - 146096) / 146097;
    const auto doe = static_cast<unsigned>(z - era * 146097);
    const unsigned yoe = (doe - doe / 1460 + doe / 36524 - doe / 146096) / 365;
    y = static_cast<std::int64_t>(yoe) + era * 400;
    const unsigned doy = doe - (365 * yoe + yoe / 4 - yoe / 100);
    const unsigned mp = (5 * doy + 2) / 153;
    d = doy - (153 * mp + 2) / 5 + 1;
    m = mp < 10 ? mp + 3 : mp - 9;
    y += m <= 2;
}

bool parse_digits(std::string_view text, std::size_t pos, std::size_t count, int& out) {
    if (pos + count > text.size()) {
        return false;
    }
    const auto* first = text.data() + pos;
    const auto result = std::from_chars(first, first + count, out);
    return result.ec == std::errc{} && result.ptr == first + count;
}

int column_index(const std::vector<std::string>& header, const std::string& name) {
    for (std::size_t i = 0; i < header.size(); ++i) {
        if (trim(header[i]) == name) {
            return static_cast<int>(i);
        }
    }
    return -1;
}

}  // namespace

TimeSeries::TimeSeries(std::string sensor_id, std::int64_t start, std::int64_t step,
                       std::vector<double> values, std::vector<bool> missing)
    : sensor_id_(std::move(sensor_id)),
      start_(start),
      step_(step),
      values_(std::move(values)),
      missing_(std::move(missing)) {
    if (step_ <= 0) {
        throw std::invalid_argument("TimeSeries: step must be positive");
    }
    if (values_.size() != missing_.size()) {
        throw std::invalid_argument("TimeSeries: values and missing mask differ in length");
    }
    for (std::size_t i = 0; i < values_.size(); ++i) {
        if (missing_[i]) {
            values_[i] = kNaN;
        } else if (!std::isfinite(values_[i]) || values_[i] < 0.0) {
            throw DataError("TimeSeries '" + sensor_id_ + "': slot " + std::to_string(i) +
                            " holds an invalid flow value");
        }
    }
}

TimeSeries::TimeSeries(std::string sensor_id, std::int64_t start, std::int64_t step,
                       std::vector<double> values)
    : TimeSeries(std::move(sensor_id), start, step, values, std::vector<bool>(values.size(), false)) {}

std::size_t TimeSeries::missing_count() const {
    return static_cast<std::size_t>(std::count(missing_.begin(), missing_.end(), true));
}

double TimeSeries::missing_fraction() const {
    if (values_.empty()) {
        return 0.0;
    }
    return static_cast<double>(missing_count()) / static_cast<double>(values_.size());
}

std::int64_t parse_timestamp(std::string_view raw) {
    const std::string text = trim(raw);
    if (text.empty()) {
        throw std::invalid_argument("empty timestamp");
    }
    const bool all_digits = std::all_of(text.begin(), text.end(), [](char c) {
        return (c >= '0' && c <= '9') || c == '-';
    });
    if (all_digits && text.find('-', 1) == std::string::npos) {
        std::int64_t epoch = 0;
        const auto result = std::from_chars(text.data(), text.data() + text.size(), epoch);
        if (result.ec == std::errc{} && result.ptr == text.data() + text.size()) {
            return epoch;
        }
    }
    // YYYY-MM-DD[T ]hh:mm[:ss][Z]
    int year = 0, month = 0, day = 0, hour = 0, minute = 0, second = 0;
    const bool date_ok = text.size() >= 10 && parse_digits(text, 0, 4, year) && text[4] == '-' &&
                         parse_digits(text, 5, 2, month) && text[7] == '-' &&
                         parse_digits(text, 8, 2, day);
    if (!date_ok) {
        throw std::invalid_argument("unparseable timestamp '" + text + "'");
    }
    std::size_t pos = 10;
    if (pos < text.size()) {
        if (text[pos] != 'T' && text[pos] != ' ') {
            throw std::invalid_argument("unparseable timestamp '" + text + "'");
        }
        ++pos;
        if (!parse_digits(text, pos, 2, hour) || pos + 2 >= text.size() || text[pos + 2] != ':' ||
            !parse_digits(text, pos + 3, 2, minute)) {
            throw std::invalid_argument("unparseable timestamp '" + text + "'");
        }
        pos += 5;
        if (pos < text.size() && text[pos] == ':') {
            if (!parse_digits(text, pos + 1, 2, second)) {
                throw std::invalid_argument("unparseable timestamp '" + text + "'");
            }
            pos += 3;
        }
        if (pos < text.size() && text[pos] == 'Z') {
            ++pos;
        }
        if (pos != text.size()) {
            throw std::invalid_argument("unparseable timestamp '" + text + "'");
        }
    }
    if (month < 1 || month > 12 || day < 1 || day > 31 || hour > 23 || minute > 59 || second > 60) {
        throw std::invalid_argument("timestamp out of range '" + text + "'");
    }
    const std::int64_t days = days_from_civil(year, static_cast<unsigned>(month), static_cast<unsigned>(day));
    return days * 86400 + hour * 3600 + minute * 60 + second;
}

std::string format_timestamp(std::int64_t epoch_seconds) {
    std::int64_t days = epoch_seconds / 86400;
    std::int64_t rem = epoch_seconds % 86400;
    if (rem < 0) {
        rem += 86400;
        --days;
    }
    std::int64_t year = 0;
    unsigned month = 0, day = 0;
    civil_from_days(days, year, month, day);
    char buffer[32];
    std::snprintf(buffer, sizeof(buffer), "%04lld-%02u-%02uT%02lld:%02lld:%02lld",
                  static_cast<long long>(year), month, day, static_cast<long long>(rem / 3600),
                  static_cast<long long>((rem / 60) % 60), static_cast<long long>(rem % 60));
    return buffer;
}

TimeSeries parse_series(std::istream& in, const CsvSchema& schema) {
    std::string line;
    std::size_t line_number = 0;
    std::vector<std::string> header;
    while (std::getline(in, line)) {
        ++line_number;
        if (!trim(line).empty()) {
            header = split(line, schema.delimiter);
            break;
        }
    }
    if (header.empty()) {
        throw DataError("series '" + schema.sensor_id + "': missing header row");
    }
    const int ts_col = column_index(header, schema.timestamp_column);
    const int flow_col = column_index(header, schema.flow_column);
    if (ts_col < 0 || flow_col < 0) {
        throw DataError("series '" + schema.sensor_id + "': header lacks column '" +
                        (ts_col < 0 ? schema.timestamp_column : schema.flow_column) + "'");
    }

    struct Row {
        std::int64_t time;
        double flow;
        bool missing;
        std::size_t line;
    };
    std::vector<Row> rows;
    while (std::getline(in, line)) {
        ++line_number;
        if (trim(line).empty()) {
            continue;
        }
        const auto fields = split(line, schema.delimiter);
        const auto needed = static_cast<std::size_t>(std::max(ts_col, flow_col));
        const auto where = "series '" + schema.sensor_id + "', row " + std::to_string(line_number);
        if (fields.size() <= needed) {
            throw DataError(where + ": too few fields");
        }
        Row row{0, kNaN, false, line_number};
        try {
            row.time = parse_timestamp(fields[static_cast<std::size_t>(ts_col)]);
        } catch (const std::invalid_argument& e) {
            throw DataError(where + ": " + e.what());
        }
        const std::string flow = trim(fields[static_cast<std::size_t>(flow_col)]);
        if (flow.empty()) {
            row.missing = true;
        } else {
            try {
                row.flow = parse_double(flow);
            } catch (const std::invalid_argument& e) {
                throw DataError(where + ": " + e.what());
            }
            if (std::isnan(row.flow)) {
                row.missing = true;
            } else if (!std::isfinite(row.flow) || row.flow < 0.0) {
                throw DataError(where + ": flow must be finite and non-negative");
            }
        }
        rows.push_back(row);
    }
    if (rows.empty()) {
        throw DataError("series '" + schema.sensor_id + "': no data rows");
    }
    std::stable_sort(rows.begin(), rows.end(), [](const Row& a, const Row& b) { return a.time < b.time; });

    const std::int64_t step = schema.step_seconds;
    const std::int64_t start = rows.front().time;
    for (std::size_t i = 1; i < rows.size(); ++i) {
        if (rows[i].time == rows[i - 1].time) {
            throw DataError("series '" + schema.sensor_id + "', row " + std::to_string(rows[i].line) +
                            ": duplicate timestamp " + format_timestamp(rows[i].time));
        }
    }
    for (const auto& row : rows) {
        if ((row.time - start) % step != 0) {
            throw DataError("series '" + schema.sensor_id + "', row " + std::to_string(row.line) +
                            ": timestamp " + format_timestamp(row.time) + " is off the " +
                            std::to_string(step) + "s grid");
        }
    }
    const auto length = static_cast<std::size_t>((rows.back().time - start) / step) + 1;
    std::vector<double> values(length, kNaN);
    std::vector<bool> missing(length, true);
    for (const auto& row : rows) {
        const auto slot = static_cast<std::size_t>((row.time - start) / step);
        values[slot] = row.flow;
        missing[slot] = row.missing;
    }
    return TimeSeries(schema.sensor_id, start, step, std::move(values), std::move(missing));
}

TimeSeries load_series(const std::filesystem::path& path, const CsvSchema& schema) {
    std::ifstream in(path);
    if (!in) {
        throw DataError("cannot open series file " + path.string());
    }
    CsvSchema resolved = schema;
    if (resolved.sensor_id.empty()) {
        resolved.sensor_id = path.stem().string();
    }
    return parse_series(in, resolved);
}

TimeSeries impute(const TimeSeries& series, const ImputeOptions& options) {
    const std::size_t n = series.size();
    const std::size_t missing = series.missing_count();
    if (n == 0 || missing == n) {
        throw DataError("sensor '" + series.sensor_id() + "': no observed values to impute from");
    }
    if (n - missing < 2) {
        throw DataError("sensor '" + series.sensor_id() + "': at least two observed values are required");
    }
    if (series.missing_fraction() > options.max_missing_fraction) {
        throw DataError("sensor '" + series.sensor_id() + "': missing fraction " +
                        format_fixed(100.0 * series.missing_fraction(), 2) + "% exceeds threshold " +
                        format_fixed(100.0 * options.max_missing_fraction, 2) + "%");
    }
    std::vector<double> values(series.values().begin(), series.values().end());

    std::size_t previous = n;  // index of last observed slot, n = none yet
    for (std::size_t i = 0; i < n; ++i) {
        if (series.missing(i)) {
            continue;
        }
        if (previous == n) {
            std::fill(values.begin(), values.begin() + static_cast<std::ptrdiff_t>(i), values[i]);
        } else if (i - previous > 1) {
            const double left = values[previous];
            const double right = values[i];
            const double span = static_cast<double>(i - previous);
            for (std::size_t j = previous + 1; j < i; ++j) {
                const double t = static_cast<double>(j - previous) / span;
                values[j] = left + t * (right - left);
            }
        }
        previous = i;
    }
    std::fill(values.begin() + static_cast<std::ptrdiff_t>(previous) + 1, values.end(), values[previous]);
    return TimeSeries(series.sensor_id(), series.start(), series.step(), std::move(values));
}

void write_series_cache(const TimeSeries& series, std::ostream& out, std::string_view header_note) {
    out << kCacheMagic << '\n';
    if (!header_note.empty()) {
        out << "# " << header_note << '\n';
    }
    out << "sensor=" << series.sensor_id() << '\n'
        << "start=" << series.start() << '\n'
        << "step=" << series.step() << '\n'
        << "length=" << series.size() << '\n';
    for (std::size_t i = 0; i < series.size(); ++i) {
        out << (series.missing(i) ? std::string("nan") : format_double(series.value(i))) << '\n';
    }
}

TimeSeries read_series_cache(std::istream& in) {
    std::string line;
    if (!std::getline(in, line) || trim(line) != kCacheMagic) {
        throw DataError("series cache: unrecognized header (expected '" + std::string(kCacheMagic) + "')");
    }
    std::string sensor;
    std::int64_t start = 0;
    std::int64_t step = kSlotSeconds;
    std::size_t length = 0;
    bool have_length = false;
    while (!have_length && std::getline(in, line)) {
        if (line.starts_with("#")) {
            continue;
        }
        const auto eq = line.find('=');
        if (eq == std::string::npos) {
            throw DataError("series cache: malformed field line '" + line + "'");
        }
        const std::string key = line.substr(0, eq);
        const std::string value = line.substr(eq + 1);
        try {
            if (key == "sensor") {
                sensor = value;
            } else if (key == "start") {
                start = std::stoll(value);
            } else if (key == "step") {
                step = std::stoll(value);
            } else if (key == "length") {
                length = static_cast<std::size_t>(std::stoull(value));
                have_length = true;
            }
        } catch (const std::exception&) {
            throw DataError("series cache: bad value for '" + key + "'");
        }
    }
    if (!have_length) {
        throw DataError("series cache: missing length field");
    }
    std::vector<double> values;
    std::vector<bool> missing;
    values.reserve(length);
    missing.reserve(length);
    while (values.size() < length && std::getline(in, line)) {
        double v = 0.0;
        try {
            v = parse_double(line);
        } catch (const std::invalid_argument& e) {
            throw DataError(std::string("series cache: ") + e.what());
        }
        missing.push_back(std::isnan(v));
        values.push_back(v);
    }
    if (values.size() != length) {
        throw DataError("series cache: truncated (expected " + std::to_string(length) + " values)");
    }
    return TimeSeries(sensor, start, step, std::move(values), std::move(missing));
}

void save_series_cache(const TimeSeries& series, const std::filesystem::path& path, std::string_view header_note) {
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw DataError("cannot write series cache " + path.string());
    }
    write_series_cache(series, out, header_note);
}

TimeSeries load_series_cache(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw DataError("cannot open series cache " + path.string());
    }
    return read_series_cache(in);
}

}  // namespace deepesn
