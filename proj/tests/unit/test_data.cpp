#include "support.hpp"

#include "deepesn/data.hpp"
#include "deepesn/synthetic.hpp"

#include <doctest.h>

#include <cmath>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <limits>

using namespace deepesn;
using testing::Gen;
using testing::parse_csv;

namespace {

TimeSeries masked(std::vector<double> values, std::vector<bool> missing) {
    for (std::size_t i = 0; i < values.size(); ++i) {
        if (missing[i]) {
            values[i] = std::numeric_limits<double>::quiet_NaN();
        }
    }
    return TimeSeries("m", 0, kSlotSeconds, std::move(values), std::move(missing));
}

std::vector<double> as_vector(const TimeSeries& s) {
    return {s.values().begin(), s.values().end()};
}

bool same_bits(double a, double b) {
    return std::memcmp(&a, &b, sizeof a) == 0;
}

}  // namespace

TEST_SUITE("common") {
    TEST_CASE("format_double round-trips random doubles exactly") {
        Gen gen(11);
        for (int i = 0; i < 2000; ++i) {
            const double v = std::ldexp(gen.uniform(-1.0, 1.0), static_cast<int>(gen.size(0, 120)) - 60);
            CHECK(same_bits(parse_double(format_double(v)), v));
        }
        CHECK(format_double(0.1) == "0.1");
        CHECK(format_double(2.0) == "2");
        CHECK(std::isnan(parse_double(format_double(std::nan("")))));
    }

    TEST_CASE("parse_double rejects trailing garbage") {
        CHECK(parse_double(" 1.5 ") == 1.5);
        CHECK_THROWS_AS(parse_double("1.5x"), std::invalid_argument);
        CHECK_THROWS_AS(parse_double(""), std::invalid_argument);
        CHECK(std::isinf(parse_double("inf")));
    }

    TEST_CASE("fnv1a64 matches the published test vectors") {
        CHECK(fnv1a64("") == 0xcbf29ce484222325ULL);
        CHECK(fnv1a64("a") == 0xaf63dc4c8601ec8cULL);
        CHECK(fnv1a64("foobar") == 0x85944171f73967e8ULL);
        CHECK(hex64(0xabcULL) == "0000000000000abc");
    }

    TEST_CASE("split keeps empty fields and trim strips whitespace") {
        const auto fields = split("a,,b,", ',');
        REQUIRE(fields.size() == 4);
        CHECK(fields[1].empty());
        CHECK(fields[3].empty());
        CHECK(trim("  x y \t\r") == "x y");
    }

    TEST_CASE("mix_seed is deterministic and separates streams") {
        CHECK(mix_seed(7, 0) == mix_seed(7, 0));
        CHECK(mix_seed(7, 0) != mix_seed(7, 1));
        CHECK(mix_seed(7, 0) != mix_seed(8, 0));
    }
}

TEST_SUITE("data") {
    TEST_CASE("three well-formed rows give a complete series of length 3") {
        const auto s = parse_csv("timestamp,flow\n2017-03-01T00:00:00,10\n2017-03-01T00:15:00,12\n2017-03-01T00:30:00,11\n");
        REQUIRE(s.size() == 3);
        CHECK(s.complete());
        CHECK(as_vector(s) == std::vector<double>{10, 12, 11});
        CHECK(s.start() == parse_timestamp("2017-03-01T00:00:00"));
        CHECK(s.step() == 900);
    }

    TEST_CASE("an absent slot is densified as a masked row") {
        const auto s = parse_csv("timestamp,flow\n2017-03-01T00:00:00,10\n2017-03-01T00:30:00,11\n");
        REQUIRE(s.size() == 3);
        CHECK_FALSE(s.missing(0));
        CHECK(s.missing(1));
        CHECK(std::isnan(s.value(1)));
        CHECK_FALSE(s.missing(2));
        CHECK(s.missing_fraction() == doctest::Approx(1.0 / 3.0));
    }

    TEST_CASE("a year of 15-minute slots has 35040 rows") {
        std::string text = "timestamp,flow\n";
        const std::int64_t start = parse_timestamp("2017-01-01T00:00:00");
        for (std::size_t i = 0; i < kSlotsPerYear; ++i) {
            text += std::to_string(start + static_cast<std::int64_t>(i) * 900) + ",1\n";
        }
        const auto s = parse_csv(text);
        CHECK(s.size() == 35040);
        CHECK(kSlotsPerYear == 35040);
        CHECK(format_timestamp(s.timestamp(s.size() - 1)) == "2017-12-31T23:45:00");
    }

    TEST_CASE("rows are sorted and empty counts are masked") {
        const auto s = parse_csv("timestamp,flow\n2017-03-01 00:30,7\n2017-03-01 00:00,5\n2017-03-01 00:15,\n");
        REQUIRE(s.size() == 3);
        CHECK(s.value(0) == 5);
        CHECK(s.missing(1));
        CHECK(s.value(2) == 7);
    }

    TEST_CASE("schema mapping picks named columns and ignores extras") {
        CsvSchema schema;
        schema.timestamp_column = "time";
        schema.flow_column = "intensidad";
        schema.delimiter = ';';
        const auto s = parse_csv("id;time;intensidad;ocupacion\n4;1488326400;100;3\n4;1488327300;90;2\n", schema);
        REQUIRE(s.size() == 2);
        CHECK(s.value(1) == 90);
        CHECK(s.start() == 1488326400);
    }

    TEST_CASE("malformed rows are reported with their row number") {
        try {
            parse_csv("timestamp,flow\n2017-03-01T00:00:00,10\nnot-a-time,12\n");
            FAIL("expected DataError");
        } catch (const DataError& e) {
            CHECK(std::string(e.what()).find("row 3") != std::string::npos);
        }
        CHECK_THROWS_AS(parse_csv("timestamp,flow\n2017-03-01T00:00:00,abc\n"), DataError);
        CHECK_THROWS_AS(parse_csv("timestamp,flow\n2017-03-01T00:00:00\n"), DataError);
        CHECK_THROWS_AS(parse_csv("timestamp,flow\n2017-03-01T00:00:00,-1\n"), DataError);
        CHECK_THROWS_AS(parse_csv("time,flow\n2017-03-01T00:00:00,1\n"), DataError);
        CHECK_THROWS_AS(parse_csv("timestamp,flow\n"), DataError);
        CHECK_THROWS_AS(parse_csv(""), DataError);
    }

    TEST_CASE("duplicate timestamps are an error") {
        CHECK_THROWS_WITH_AS(parse_csv("timestamp,flow\n2017-03-01T00:00:00,1\n2017-03-01T00:00:00,2\n"),
                             doctest::Contains("duplicate"), DataError);
    }

    TEST_CASE("timestamps off the 15-minute grid are an error") {
        CHECK_THROWS_WITH_AS(parse_csv("timestamp,flow\n2017-03-01T00:00:00,1\n2017-03-01T00:07:00,2\n"),
                             doctest::Contains("grid"), DataError);
    }

    TEST_CASE("timestamp parsing and formatting round-trip") {
        CHECK(parse_timestamp("1970-01-01T00:00:00Z") == 0);
        CHECK(parse_timestamp("2000-03-01 12:30") == 951913800);
        CHECK(parse_timestamp("951913800") == 951913800);
        CHECK(parse_timestamp("2017-01-01") == 1483228800);
        CHECK_THROWS_AS(parse_timestamp("2017-13-01"), std::invalid_argument);
        CHECK_THROWS_AS(parse_timestamp("yesterday"), std::invalid_argument);
        Gen gen(5);
        for (int i = 0; i < 500; ++i) {
            const auto t = static_cast<std::int64_t>(gen.size(0, 4'000'000'000ULL));
            CHECK(parse_timestamp(format_timestamp(t)) == t);
        }
    }

    TEST_CASE("present values must be finite and non-negative") {
        CHECK_THROWS_AS(TimeSeries("x", 0, 900, {1.0, -2.0}), DataError);
        CHECK_THROWS_AS(TimeSeries("x", 0, 900, {1.0, std::numeric_limits<double>::infinity()}), DataError);
        CHECK_THROWS_AS(TimeSeries("x", 0, 900, {1.0}, {false, false}), std::invalid_argument);
    }

    TEST_CASE("impute fills a single interior gap by its midpoint") {
        const auto out = impute(masked({10, 0, 20}, {false, true, false}), {1.0});
        CHECK(as_vector(out) == std::vector<double>{10, 15, 20});
        CHECK(out.complete());
    }

    TEST_CASE("impute holds the nearest value at the edges") {
        CHECK(as_vector(impute(masked({0, 5, 7}, {true, false, false}), {1.0})) == std::vector<double>{5, 5, 7});
        CHECK(as_vector(impute(masked({5, 7, 0, 0}, {false, false, true, true}), {1.0})) ==
              std::vector<double>{5, 7, 7, 7});
    }

    TEST_CASE("impute interpolates linearly across a longer gap") {
        const auto out = impute(masked({1, 0, 0, 4}, {false, true, true, false}), {1.0});
        // Oracle: straight line through (0, 1) and (3, 4).
        for (std::size_t i = 0; i < 4; ++i) {
            CHECK(out.value(i) == doctest::Approx(1.0 + static_cast<double>(i)).epsilon(1e-15));
        }
    }

    TEST_CASE("impute enforces the missing-data threshold and names the sensor") {
        std::vector<double> v(100, 3.0);
        std::vector<bool> m(100, false);
        for (std::size_t i = 10; i < 14; ++i) {
            m[i] = true;
        }
        const auto s = masked(v, m);
        CHECK_THROWS_WITH_AS(impute(s), doctest::Contains("'m'"), DataError);
        CHECK_NOTHROW(impute(s, {0.04}));
        CHECK_THROWS_AS(impute(masked({0, 0}, {true, true}), {1.0}), DataError);
        CHECK_THROWS_AS(impute(masked({1, 0, 0}, {false, true, true}), {1.0}), DataError);
    }

    TEST_CASE("property: impute is idempotent and preserves observed values") {
        Gen gen(21);
        for (int trial = 0; trial < 300; ++trial) {
            const std::size_t n = gen.size(2, 60);
            std::vector<double> v(n);
            std::vector<bool> m(n);
            std::size_t observed = 0;
            for (std::size_t i = 0; i < n; ++i) {
                v[i] = gen.uniform(0.0, 500.0);
                m[i] = gen.uniform(0.0, 1.0) < 0.3;
                observed += m[i] ? 0 : 1;
            }
            if (observed < 2) {
                m[0] = m[n - 1] = false;
            }
            const auto s = masked(v, m);
            const auto once = impute(s, {1.0});
            const auto twice = impute(once, {1.0});
            CHECK(as_vector(once) == as_vector(twice));
            for (std::size_t i = 0; i < n; ++i) {
                if (!m[i]) {
                    CHECK(same_bits(once.value(i), v[i]));
                }
                CHECK(std::isfinite(once.value(i)));
            }
        }
    }

    TEST_CASE("property: cache serialization round-trips values bit-exactly") {
        Gen gen(3);
        for (int trial = 0; trial < 50; ++trial) {
            const std::size_t n = gen.size(1, 200);
            std::vector<double> v(n);
            std::vector<bool> m(n);
            for (std::size_t i = 0; i < n; ++i) {
                v[i] = gen.uniform(0.0, 1000.0);
                m[i] = gen.uniform(0.0, 1.0) < 0.1;
            }
            const auto base = masked(v, m);
            const TimeSeries s("sensor " + std::to_string(trial), 1483228800 + 900 * static_cast<std::int64_t>(trial),
                               900, std::vector<double>(base.values().begin(), base.values().end()), m);
            std::stringstream buffer;
            write_series_cache(s, buffer, "note");
            const auto back = read_series_cache(buffer);
            CHECK(back.sensor_id() == s.sensor_id());
            CHECK(back.start() == s.start());
            CHECK(back.step() == s.step());
            REQUIRE(back.size() == n);
            for (std::size_t i = 0; i < n; ++i) {
                CHECK(back.missing(i) == m[i]);
                if (!m[i]) {
                    CHECK(same_bits(back.value(i), v[i]));
                }
            }
        }
    }

    TEST_CASE("load_series round-trips through a file and the cache") {
        const auto dir = std::filesystem::temp_directory_path() / "deepesn_test_data";
        std::filesystem::create_directories(dir);
        const auto csv = dir / "atr_17.csv";
        {
            std::ofstream out(csv);
            out << "timestamp,flow\n2017-03-01T00:00:00,10.25\n2017-03-01T00:15:00,\n2017-03-01T00:30:00,0.1\n";
        }
        const auto s = load_series(csv);
        CHECK(s.sensor_id() == "atr_17");
        save_series_cache(s, dir / "atr_17.series");
        const auto back = load_series_cache(dir / "atr_17.series");
        CHECK(back.value(0) == 10.25);
        CHECK(back.missing(1));
        CHECK(back.value(2) == 0.1);
        CHECK_THROWS_AS(load_series(dir / "absent.csv"), DataError);
        std::filesystem::remove_all(dir);
    }

    TEST_CASE("corrupt caches are rejected") {
        std::istringstream wrong("not a cache\n");
        CHECK_THROWS_AS(read_series_cache(wrong), DataError);
        std::istringstream truncated("# deepesn-series v1\nsensor=x\nstart=0\nstep=900\nlength=3\n1\n2\n");
        CHECK_THROWS_AS(read_series_cache(truncated), DataError);
    }

    TEST_CASE("synthetic traffic is deterministic, non-negative and daily periodic") {
        SyntheticTrafficConfig config;
        config.length = 96 * 14;
        config.noise_sigma = 0.0;
        config.seed = 9;
        const auto a = make_synthetic_traffic(config);
        const auto b = make_synthetic_traffic(config);
        CHECK(as_vector(a) == as_vector(b));
        for (const double v : a.values()) {
            CHECK(v >= 0.0);
        }
        // Without noise, two weekdays one day apart coincide.
        CHECK(a.value(96 * 2 + 40) == doctest::Approx(a.value(96 * 3 + 40)));
        config.missing_fraction = 0.02;
        const auto gappy = make_synthetic_traffic(config);
        CHECK(gappy.missing_fraction() == doctest::Approx(0.02).epsilon(0.5));
    }
}
