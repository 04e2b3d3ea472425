#pragma once

#include "deepesn/data.hpp"
#include "deepesn/models.hpp"

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace deepesn::cli {

namespace fs = std::filesystem;

struct GridSearchConfig {
    ModelSpec base;
    std::map<std::string, std::vector<std::string>> grid;
    std::vector<std::string> tuning_sensors;
    bool enabled = false;
};

/// Run configuration, read from JSON. Relative paths resolve against the
/// directory holding the config file.
///
///   {
///     "data_dir": "data",            "sensors": ["*"],
///     "horizons": [1, 2, 3, 4],      "window": 6,   "folds": 10,
///     "alpha": 0.05,                 "seed": 0,     "workers": 1,
///     "output_dir": "out",           "missing_threshold": 0.03,
///     "csv": {"timestamp_column": "timestamp", "flow_column": "flow",
///             "delimiter": ",", "extension": ".csv"},
///     "models": ["persistence", {"name": "kNN", "kind": "knn", "k": 5},
///                "external:scores/lstm.csv"],
///     "grid_search": {"model": {...}, "grid": {"units": [50, 100]},
///                     "tuning_sensors": ["..."]}
///   }
struct RunConfig {
    fs::path config_path;
    fs::path data_dir;
    std::vector<std::string> sensors{"*"};
    std::vector<std::size_t> horizons{1, 2, 3, 4};
    std::size_t window = 6;
    std::size_t folds = 10;
    double alpha = 0.05;
    std::vector<ModelSpec> models;
    std::uint64_t seed = 0;
    fs::path output_dir;
    std::size_t workers = 1;
    double missing_threshold = 0.03;
    CsvSchema csv;
    std::string extension = ".csv";
    GridSearchConfig grid_search;

    // Sorted-key JSON of every field that influences results (output_dir and
    // workers excluded), used for the config hash.
    std::string canonical;

    std::string hash() const;
    /// "deepesn <version> config=<hash>"; embedded in every output file.
    std::string provenance() const;
    fs::path cache_dir() const;
    void validate() const;

    std::vector<ModelSpec> builtin_models() const;
    std::vector<fs::path> external_score_files() const;
};

/// Command-line values that take precedence over the config file.
struct Overrides {
    std::optional<fs::path> output_dir;
    std::optional<std::size_t> workers;
    std::optional<std::uint64_t> seed;
    std::optional<std::size_t> folds;
    std::optional<std::size_t> window;
    std::optional<double> alpha;
    std::vector<std::size_t> horizons;
};

void apply_overrides(RunConfig& config, const Overrides& overrides);

/// Built-in benchmark line-up used when a config lists no models.
std::vector<ModelSpec> default_models();

RunConfig load_config(const fs::path& path);
RunConfig parse_config(const std::string& json_text, const fs::path& base_dir);

/// Benchmark sensors: ids in data_dir matching the configured ids or glob
/// patterns, minus the grid-search tuning sensors, sorted.
std::vector<std::string> resolve_sensors(const RunConfig& config);
std::vector<std::string> tuning_sensors(const RunConfig& config);

}  // namespace deepesn::cli
