#pragma once

#include "config.hpp"

#include <chrono>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace deepesn::cli {

enum ExitCode : int {
    kExitOk = 0,
    kExitConfig = 1,
    kExitData = 2,
    kExitNumerical = 3,
};

/// Progress and per-stage wall-clock timing on standard error.
class Log {
public:
    explicit Log(std::ostream& out, bool quiet = false) : out_(out), quiet_(quiet) {}

    void info(const std::string& message) const;
    void warn(const std::string& message) const;

    class Stage {
    public:
        Stage(const Log& log, std::string name);
        ~Stage();
        Stage(const Stage&) = delete;
        Stage& operator=(const Stage&) = delete;

    private:
        const Log& log_;
        std::string name_;
        std::chrono::steady_clock::time_point begin_;
    };

    Stage stage(std::string name) const { return Stage(*this, std::move(name)); }

private:
    std::ostream& out_;
    bool quiet_;
};

struct PrepareSummary {
    std::vector<std::string> cached;
    std::vector<std::string> unchanged;
    std::vector<std::pair<std::string, std::string>> skipped;  // sensor, reason
};

/// Loads, validates and imputes every configured sensor (benchmark and
/// tuning), writes `<cache>/<sensor>.series` when its content changed and
/// `<output>/quality.csv`. Rejected sensors are reported and skipped.
PrepareSummary cmd_prepare(const RunConfig& config, const Log& log);

/// Writes `scores_h<h>.csv` per horizon plus `summary.txt` (mean±std of the
/// per-dataset average R^2). With `resume`, cells already in an existing
/// score file are kept.
void cmd_benchmark(const RunConfig& config, bool resume, const Log& log);

/// Ranks `score_files` (default: the benchmark outputs of `config`) and
/// writes `rank_h<h>.{txt,csv}` and `cd_h<h>.{svg,txt}` into `output_dir`.
void cmd_rank(const std::vector<fs::path>& score_files, double alpha, const fs::path& output_dir,
              const std::string& provenance, const Log& log);
void cmd_rank(const RunConfig& config, const Log& log);

struct ForecastArgs {
    fs::path model_file;
    fs::path series_file;  // `.series` cache file or a raw export
    std::optional<std::size_t> horizon;
    fs::path output;  // empty: standard output
    CsvSchema csv;
    double missing_threshold = 0.03;
};

/// `timestamp,prediction` rows: one h-step-ahead prediction per complete
/// window, stamped with the slot being predicted.
void cmd_forecast(const ForecastArgs& args, std::ostream& stdout_stream, const Log& log);

struct TrainArgs {
    std::string model;
    std::string sensor;
    std::size_t horizon = 1;
    fs::path output;
};

/// Fits a configured model on a whole prepared series and saves it.
void cmd_train(const RunConfig& config, const TrainArgs& args, const Log& log);

/// Writes `grid_h<h>.csv` and `best_h<h>.json` per horizon.
void cmd_grid_search(const RunConfig& config, const Log& log);

struct SynthesizeArgs {
    fs::path output_dir;
    std::size_t sensors = 5;
    std::size_t length = 2688;
    std::uint64_t seed = 1;
    double missing_fraction = 0.01;
    std::string prefix = "sensor_";
};

/// Writes synthetic traffic exports `<prefix><i>.csv` (`timestamp,flow`,
/// missing slots omitted, counts rounded to integers).
void cmd_synthesize(const SynthesizeArgs& args, const Log& log);

/// Parses `args` (without the program name) and runs the chosen subcommand.
/// Errors are reported on `err` and mapped to an exit code.
int run_cli(std::vector<std::string> args, std::ostream& out, std::ostream& err);

/// Writes `content` to `path` through a temporary file. Returns false and
/// leaves the file alone when it already holds exactly `content`.
bool write_if_changed(const fs::path& path, const std::string& content);

/// "0.83±0.14" (two decimals) of the sample mean and standard deviation.
std::string mean_std(const std::vector<double>& values);

}  // namespace deepesn::cli
