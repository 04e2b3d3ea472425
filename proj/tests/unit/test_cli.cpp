#include "support.hpp"

#include "cli/commands.hpp"
#include "cli/config.hpp"
#include "deepesn/evaluation.hpp"

#include <doctest.h>

#include <algorithm>
#include <fstream>
#include <sstream>

#include <unistd.h>

using namespace deepesn;
using namespace deepesn::cli;

namespace {

class TempDir {
public:
    explicit TempDir(const std::string& tag) {
        static int counter = 0;
        path_ = fs::temp_directory_path() /
                ("deepesn_cli_" + tag + "_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
        fs::remove_all(path_);
        fs::create_directories(path_);
    }
    ~TempDir() {
        std::error_code ignored;
        fs::remove_all(path_, ignored);
    }
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;

    const fs::path& path() const { return path_; }
    fs::path operator/(const std::string& name) const { return path_ / name; }

private:
    fs::path path_;
};

std::string slurp(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    std::ostringstream out;
    out << in.rdbuf();
    return out.str();
}

void spit(const fs::path& path, const std::string& text) {
    std::ofstream(path, std::ios::binary) << text;
}

struct Run {
    int code;
    std::string out;
    std::string err;
};

Run run_args(std::vector<std::string> args) {
    std::ostringstream out, err;
    const int code = run_cli(std::move(args), out, err);
    return {code, out.str(), err.str()};
}

// Three synthetic sensors and a small config next to them.
struct Workspace {
    TempDir dir{"ws"};
    fs::path config;

    explicit Workspace(const std::string& extra_models = "") {
        SynthesizeArgs args;
        args.output_dir = dir / "data";
        args.sensors = 3;
        args.length = 400;
        args.seed = 5;
        std::ostringstream sink;
        cmd_synthesize(args, Log(sink, true));
        config = dir / "run.json";
        spit(config, R"({
  "data_dir": "data",
  "sensors": ["sensor_*"],
  "horizons": [1, 2],
  "window": 4,
  "folds": 3,
  "seed": 7,
  "output_dir": "out",
  "models": ["persistence", {"name": "LR", "kind": "linear"}, {"name": "kNN", "kind": "knn", "k": 3})" +
                         extra_models + R"(]
})");
        unsetenv("DEEPESN_CACHE_DIR");
    }
    std::string cfg() const { return config.string(); }
};

}  // namespace

TEST_SUITE("cli") {
    TEST_CASE("config parsing fills defaults and resolves paths against the config directory") {
        TempDir dir("cfg");
        fs::create_directories(dir / "data");
        const auto config = parse_config(R"({"data_dir": "data"})", dir.path());
        CHECK(config.data_dir == dir / "data");
        CHECK(config.horizons == std::vector<std::size_t>{1, 2, 3, 4});
        CHECK(config.window == 6);
        CHECK(config.folds == 10);
        CHECK(config.alpha == 0.05);
        CHECK(config.models.size() == default_models().size());
        CHECK_NOTHROW(config.validate());
        CHECK(config.provenance() == "deepesn 1.0.0 config=" + config.hash());
        CHECK(config.hash().size() == 16);
    }

    TEST_CASE("config errors are reported as configuration errors") {
        TempDir dir("cfgerr");
        fs::create_directories(dir / "data");
        CHECK_THROWS_AS(parse_config(R"({"data_dir": "data", "windw": 6})", dir.path()), ConfigError);
        CHECK_THROWS_AS(parse_config("{not json", dir.path()), ConfigError);
        CHECK_THROWS_AS(parse_config(R"({"data_dir": "data", "window": "six"})", dir.path()), ConfigError);
        const auto validate = [&](const std::string& text) { parse_config(text, dir.path()).validate(); };
        CHECK_THROWS_AS(validate(R"({"data_dir": "data", "alpha": 1.5})"), ConfigError);
        CHECK_THROWS_AS(validate(R"({"data_dir": "data", "horizons": [0]})"), ConfigError);
        CHECK_THROWS_AS(validate(R"({"data_dir": "data", "horizons": []})"), ConfigError);
        CHECK_THROWS_AS(validate(R"({"data_dir": "nowhere"})"), ConfigError);
        CHECK_THROWS_AS(validate(R"({"data_dir": "data", "models": ["persistence", "persistence"]})"), ConfigError);
        CHECK_THROWS_AS(validate(R"({"data_dir": "data", "models": ["external:missing.csv"]})"), ConfigError);
        CHECK_THROWS_AS(validate(R"({"data_dir": "data", "models": [{"name": "x", "kind": "svr"}]})"), ConfigError);
        CHECK_THROWS_AS(load_config(dir / "absent.json"), ConfigError);
    }

    TEST_CASE("overrides win over the file and only result-relevant fields move the hash") {
        TempDir dir("ovr");
        fs::create_directories(dir / "data");
        const auto base = parse_config(R"({"data_dir": "data", "seed": 1})", dir.path());
        auto moved = base;
        apply_overrides(moved, Overrides{dir / "elsewhere", 8, std::nullopt, std::nullopt, std::nullopt,
                                         std::nullopt, {}});
        CHECK(moved.output_dir == dir / "elsewhere");
        CHECK(moved.workers == 8);
        CHECK(moved.hash() == base.hash());

        auto reseeded = base;
        apply_overrides(reseeded, Overrides{std::nullopt, std::nullopt, 2, std::nullopt, std::nullopt, 0.1, {2, 3}});
        CHECK(reseeded.seed == 2);
        CHECK(reseeded.alpha == 0.1);
        CHECK(reseeded.horizons == std::vector<std::size_t>{2, 3});
        CHECK(reseeded.hash() != base.hash());

        // Key order in the file does not matter.
        const auto shuffled = parse_config(R"({"seed": 1, "data_dir": "data"})", dir.path());
        CHECK(shuffled.hash() == base.hash());
    }

    TEST_CASE("builtin deep ESN models inherit the run seed") {
        TempDir dir("seed");
        fs::create_directories(dir / "data");
        const auto config = parse_config(
            R"({"data_dir": "data", "seed": 9, "models": [{"name": "A", "kind": "deepesn"},
                {"name": "B", "kind": "deepesn", "seed": 3}]})",
            dir.path());
        const auto models = config.builtin_models();
        REQUIRE(models.size() == 2);
        CHECK(models[0].get_u64("seed", 0) == 9);
        CHECK(models[1].get_u64("seed", 0) == 3);
    }

    TEST_CASE("sensor resolution matches globs and keeps tuning sensors apart") {
        TempDir dir("sensors");
        fs::create_directories(dir / "data");
        for (const std::string name : {"a1", "a2", "b1", "a3"}) {
            spit(dir / "data" / (name + ".csv"), "timestamp,flow\n");
        }
        spit(dir / "data" / "notes.txt", "");
        const auto config = parse_config(
            R"({"data_dir": "data", "sensors": ["a*"],
                "grid_search": {"model": {"name": "g", "kind": "knn"}, "grid": {"k": [1]},
                                "tuning_sensors": ["a3"]}})",
            dir.path());
        CHECK(resolve_sensors(config) == std::vector<std::string>{"a1", "a2"});
        CHECK(tuning_sensors(config) == std::vector<std::string>{"a3"});
    }

    TEST_CASE("mean and sample deviation formatting") {
        CHECK(mean_std({0.73, 0.93}) == "0.83±0.14");
        CHECK(mean_std({0.5}) == "0.50±0.00");
        CHECK(mean_std({}) == "n/a");
    }

    TEST_CASE("writes are skipped when the content is unchanged") {
        TempDir dir("write");
        const auto file = dir / "x.txt";
        CHECK(write_if_changed(file, "hello"));
        CHECK_FALSE(write_if_changed(file, "hello"));
        CHECK(write_if_changed(file, "hello!"));
        CHECK(slurp(file) == "hello!");
    }

    TEST_CASE("prepare caches every sensor once and reports corrupt files") {
        Workspace ws;
        spit(ws.dir / "data" / "sensor_bad.csv", "timestamp,flow\n2017-01-01 00:00,abc\n");
        const auto first = run_args({"prepare", "-c", ws.cfg()});
        CHECK(first.code == kExitOk);
        CHECK(first.out.find("prepared 3 series, skipped 1") != std::string::npos);
        CHECK(first.out.find("sensor_bad") != std::string::npos);
        const std::string quality = slurp(ws.dir / "out" / "quality.csv");
        CHECK(quality.find("sensor_bad,skipped") != std::string::npos);
        CHECK(quality.find("# deepesn 1.0.0 config=") != std::string::npos);
        CHECK(fs::exists(ws.dir / "out" / "cache" / "sensor_1.series"));

        const auto before = fs::last_write_time(ws.dir / "out" / "cache" / "sensor_1.series");
        std::ostringstream sink;
        const auto summary = cmd_prepare(load_config(ws.config), Log(sink, true));
        CHECK(summary.cached.empty());
        CHECK(summary.unchanged.size() == 3);
        CHECK(fs::last_write_time(ws.dir / "out" / "cache" / "sensor_1.series") == before);
    }

    TEST_CASE("prepare fails with a data error when nothing is usable") {
        TempDir dir("bad");
        fs::create_directories(dir / "data");
        spit(dir / "data" / "only.csv", "timestamp,flow\n");
        spit(dir / "run.json", R"({"data_dir": "data", "output_dir": "out"})");
        CHECK(run_args({"prepare", "-c", (dir / "run.json").string()}).code == kExitData);
    }

    TEST_CASE("benchmark and rank produce every per-horizon output") {
        Workspace ws;
        REQUIRE(run_args({"prepare", "-q", "-c", ws.cfg()}).code == kExitOk);
        const auto bench = run_args({"benchmark", "-c", ws.cfg()});
        REQUIRE(bench.code == kExitOk);
        CHECK(bench.err.find("benchmark") != std::string::npos);
        CHECK(bench.err.find(" s") != std::string::npos);
        const auto out = ws.dir / "out";
        for (const std::string h : {"1", "2"}) {
            CHECK(fs::exists(out / ("scores_h" + h + ".csv")));
        }
        const std::string summary = slurp(out / "summary.txt");
        CHECK(summary.find("±") != std::string::npos);
        CHECK(summary.find("h=2") != std::string::npos);

        const auto config = load_config(ws.config);
        CHECK(summary.find(config.hash()) != std::string::npos);
        std::ifstream scores(out / "scores_h1.csv");
        const auto tensor = ScoreTensor::read_csv(scores);
        CHECK(tensor.score_count() == 3 * 3 * 3);

        REQUIRE(run_args({"rank", "-c", ws.cfg()}).code == kExitOk);
        for (const std::string name : {"rank_h1.txt", "rank_h1.csv", "cd_h1.svg", "cd_h1.txt", "rank_h2.txt"}) {
            CHECK(fs::exists(out / name));
            CHECK(slurp(out / name).find(config.hash()) != std::string::npos);
        }
    }

    TEST_CASE("resumed benchmarks reproduce the fresh score files") {
        Workspace ws;
        REQUIRE(run_args({"prepare", "-q", "-c", ws.cfg()}).code == kExitOk);
        REQUIRE(run_args({"benchmark", "-q", "-c", ws.cfg()}).code == kExitOk);
        const auto fresh = slurp(ws.dir / "out" / "scores_h2.csv");
        // Drop the last model's rows, then resume.
        std::istringstream in(fresh);
        std::string line, truncated;
        while (std::getline(in, line)) {
            if (line.find(",kNN,") == std::string::npos) {
                truncated += line + "\n";
            }
        }
        spit(ws.dir / "out" / "scores_h2.csv", truncated);
        REQUIRE(run_args({"benchmark", "-q", "--resume", "-c", ws.cfg()}).code == kExitOk);
        CHECK(slurp(ws.dir / "out" / "scores_h2.csv") == fresh);
    }

    TEST_CASE("identical runs into different directories are byte-identical") {
        Workspace ws;
        for (const std::string dir : {"run_a", "run_b"}) {
            const std::string target = (ws.dir / dir).string();
            REQUIRE(run_args({"prepare", "-q", "-c", ws.cfg(), "--output-dir", target}).code == kExitOk);
            REQUIRE(run_args({"benchmark", "-q", "-c", ws.cfg(), "--output-dir", target, "--workers", "2"}).code ==
                    kExitOk);
            REQUIRE(run_args({"rank", "-q", "-c", ws.cfg(), "--output-dir", target}).code == kExitOk);
        }
        for (const std::string name : {"scores_h1.csv", "summary.txt", "rank_h2.csv", "cd_h1.svg", "quality.csv"}) {
            CHECK(slurp(ws.dir / "run_a" / name) == slurp(ws.dir / "run_b" / name));
        }
    }

    TEST_CASE("ranking fewer than two models is a configuration error") {
        TempDir dir("rank1");
        spit(dir / "one.csv", "atr,model,fold,horizon,metric,score\ns1,A,1,1,r2,0.5\ns1,A,2,1,r2,0.6\n");
        const auto run = run_args({"rank", "--scores", (dir / "one.csv").string(), "--output-dir", dir.path().string()});
        CHECK(run.code == kExitConfig);
        CHECK(run.err.find("2 models") != std::string::npos);
    }

    TEST_CASE("ranking external score files directly") {
        TempDir dir("rank2");
        std::string text = "atr,model,fold,horizon,metric,score\n";
        for (int atr = 1; atr <= 3; ++atr) {
            for (int fold = 1; fold <= 10; ++fold) {
                const std::string prefix = "s" + std::to_string(atr) + ",";
                const std::string suffix = "," + std::to_string(fold) + ",1,r2,";
                text += prefix + "A" + suffix + format_double(0.9 + 0.001 * fold) + "\n";
                text += prefix + "B" + suffix + format_double(0.5 + 0.002 * fold) + "\n";
            }
        }
        spit(dir / "ext.csv", text);
        REQUIRE(run_args({"rank", "-q", "--scores", (dir / "ext.csv").string(), "--output-dir", dir.path().string()})
                    .code == kExitOk);
        const std::string csv = slurp(dir / "rank_h1.csv");
        CHECK(csv.find("A,1,") != std::string::npos);
        CHECK(csv.find("B,2,") != std::string::npos);
    }

    TEST_CASE("forecasting with persistence shifts the series by the horizon") {
        TempDir dir("fc");
        std::string series = "timestamp,flow\n";
        for (int i = 0; i < 12; ++i) {
            series += "2017-03-01 0" + std::to_string(i / 4) + ":" + (i % 4 == 0 ? std::string("00")
                                                                                  : std::to_string(15 * (i % 4))) +
                      "," + std::to_string(10 * (i + 1)) + "\n";
        }
        spit(dir / "s.csv", series);
        const std::vector<double> train(20, 1.0);
        PersistenceForecaster model;
        model.fit(make_windows(std::span<const double>(train), 3, 2));
        std::ofstream file(dir / "p.model");
        model.save(file);
        file.close();

        const auto run = run_args({"forecast", "-q", "-m", (dir / "p.model").string(), "-s", (dir / "s.csv").string(),
                              "--horizon", "2"});
        REQUIRE(run.code == kExitOk);
        std::istringstream lines(run.out);
        std::string line;
        std::vector<std::string> rows;
        while (std::getline(lines, line)) {
            if (!line.starts_with('#')) {
                rows.push_back(line);
            }
        }
        REQUIRE(rows.size() == 11);  // header + one row per complete window (12 - 3 + 1)
        CHECK(rows[0] == "timestamp,prediction");
        // First window ends at 00:30 (value 30); its target slot is 01:00.
        CHECK(rows[1] == "2017-03-01T01:00:00,30");
        CHECK(rows[10] == "2017-03-01T03:15:00,120");
        CHECK(run.out.find("horizon=2") != std::string::npos);

        const auto again = run_args({"forecast", "-q", "-m", (dir / "p.model").string(), "-s", (dir / "s.csv").string()});
        CHECK(again.out == run.out);

        CHECK(run_args({"forecast", "-m", (dir / "p.model").string(), "-s", (dir / "s.csv").string(), "--horizon", "1"})
                  .code == kExitConfig);
        spit(dir / "short.csv", "timestamp,flow\n2017-03-01 00:00,1\n2017-03-01 00:15,2\n");
        CHECK(run_args({"forecast", "-m", (dir / "p.model").string(), "-s", (dir / "short.csv").string()}).code ==
              kExitData);
    }

    TEST_CASE("train writes a model that forecast can read") {
        Workspace ws;
        REQUIRE(run_args({"prepare", "-q", "-c", ws.cfg()}).code == kExitOk);
        const auto model = ws.dir / "lr.model";
        REQUIRE(run_args({"train", "-q", "-c", ws.cfg(), "--model", "LR", "--sensor", "sensor_2", "--horizon", "2", "-o",
                     model.string()})
                    .code == kExitOk);
        const auto cached = ws.dir / "out" / "cache" / "sensor_2.series";
        const auto run = run_args({"forecast", "-q", "-m", model.string(), "-s", cached.string(), "--horizon", "2"});
        CHECK(run.code == kExitOk);
        CHECK(std::count(run.out.begin(), run.out.end(), '\n') > 300);
        CHECK(run_args({"train", "-q", "-c", ws.cfg(), "--model", "nope", "--sensor", "sensor_2", "-o", model.string()})
                  .code == kExitConfig);
    }

    TEST_CASE("usage errors and missing inputs map to exit codes") {
        CHECK(run_args({}).code == kExitConfig);
        CHECK(run_args({"frobnicate"}).code == kExitConfig);
        CHECK(run_args({"benchmark"}).code == kExitConfig);
        CHECK(run_args({"prepare", "-c", "/nonexistent/run.json"}).code == kExitConfig);
        CHECK(run_args({"--help"}).code == kExitOk);
        const auto version = run_args({"--version"});
        CHECK(version.code == kExitOk);
        CHECK(version.out.find("1.0.0") != std::string::npos);
        Workspace ws;
        // Benchmark before prepare: no cached series.
        CHECK(run_args({"benchmark", "-q", "-c", ws.cfg()}).code == kExitData);
        CHECK(run_args({"rank", "-c", ws.cfg(), "--scores", "x.csv"}).code == kExitConfig);
    }
}
