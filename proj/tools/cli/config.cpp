#include "config.hpp"

#include <json.hpp>

#include <fnmatch.h>

#include <algorithm>
#include <cstdlib>
#include <fstream>
#include <set>
#include <sstream>

namespace deepesn::cli {

namespace {

using nlohmann::json;

std::string param_text(const json& value, const std::string& key) {
    if (value.is_string()) {
        return value.get<std::string>();
    }
    if (value.is_boolean()) {
        return value.get<bool>() ? "true" : "false";
    }
    if (value.is_number_integer()) {
        return std::to_string(value.get<long long>());
    }
    if (value.is_number_unsigned()) {
        return std::to_string(value.get<unsigned long long>());
    }
    if (value.is_number_float()) {
        return format_double(value.get<double>());
    }
    throw ConfigError("model parameter '" + key + "' must be a scalar");
}

ModelSpec parse_model(const json& node, const fs::path& base_dir) {
    ModelSpec spec;
    if (node.is_string()) {
        const auto text = node.get<std::string>();
        if (text.starts_with("external:")) {
            spec.kind = "external";
            spec.name = text;
            spec.params["file"] = (base_dir / text.substr(9)).lexically_normal().string();
            return spec;
        }
        spec.kind = text;
        spec.name = text;
    } else if (node.is_object()) {
        if (!node.contains("kind") && !node.contains("name")) {
            throw ConfigError("model entry needs a 'kind' or 'name'");
        }
        spec.kind = node.value("kind", node.value("name", std::string{}));
        spec.name = node.value("name", spec.kind);
        for (const auto& [key, value] : node.items()) {
            if (key == "kind" || key == "name") {
                continue;
            }
            spec.params[key] = param_text(value, key);
        }
        if (spec.kind == "external") {
            if (!spec.has("file")) {
                throw ConfigError("external model '" + spec.name + "' needs a 'file'");
            }
            spec.params["file"] = (base_dir / spec.params["file"]).lexically_normal().string();
        }
    } else {
        throw ConfigError("model entries must be strings or objects");
    }
    return spec;
}

template <typename T>
T get_or(const json& root, const char* key, T fallback) {
    if (!root.contains(key)) {
        return fallback;
    }
    try {
        return root.at(key).get<T>();
    } catch (const json::exception& e) {
        throw ConfigError(std::string("config field '") + key + "': " + e.what());
    }
}

}  // namespace

std::vector<ModelSpec> default_models() {
    ModelSpec persistence{"persistence", "persistence", {}};
    ModelSpec linear{"LR", "linear", {}};
    ModelSpec knn{"kNN", "knn", {{"k", "5"}}};
    ModelSpec esn{"DeepESN",
                  "deepesn",
                  {{"layers", "2"},
                   {"units", "100"},
                   {"leak_rate", "0.9"},
                   {"density", "0.1"},
                   {"spectral_target", "0.9"},
                   {"input_scale", "0.5"},
                   {"lambda", "0.1"}}};
    return {persistence, linear, knn, esn};
}

std::string RunConfig::hash() const {
    return hex64(fnv1a64(canonical));
}

std::string RunConfig::provenance() const {
    return "deepesn " + std::string(kVersion) + " config=" + hash();
}

fs::path RunConfig::cache_dir() const {
    if (const char* env = std::getenv("DEEPESN_CACHE_DIR"); env != nullptr && *env != '\0') {
        return fs::path(env);
    }
    return output_dir / "cache";
}

void RunConfig::validate() const {
    if (horizons.empty()) {
        throw ConfigError("config: at least one horizon is required");
    }
    for (const auto h : horizons) {
        if (h < 1) {
            throw ConfigError("config: horizons must be positive integers");
        }
    }
    if (window < 1) {
        throw ConfigError("config: window must be >= 1");
    }
    if (folds < 1) {
        throw ConfigError("config: folds must be >= 1");
    }
    if (!(alpha > 0.0 && alpha < 1.0)) {
        throw ConfigError("config: alpha must lie in (0, 1)");
    }
    if (workers < 1) {
        throw ConfigError("config: workers must be >= 1");
    }
    if (!(missing_threshold >= 0.0 && missing_threshold <= 1.0)) {
        throw ConfigError("config: missing_threshold must lie in [0, 1]");
    }
    if (!fs::is_directory(data_dir)) {
        throw ConfigError("config: data_dir '" + data_dir.string() + "' is not a directory");
    }
    std::set<std::string> names;
    for (const auto& model : models) {
        if (!names.insert(model.name).second) {
            throw ConfigError("config: duplicate model name '" + model.name + "'");
        }
        if (model.kind == "external") {
            const fs::path file = model.params.at("file");
            if (!fs::is_regular_file(file)) {
                throw ConfigError("config: external score file '" + file.string() + "' does not exist");
            }
        } else {
            make_factory(model);
        }
    }
}

std::vector<ModelSpec> RunConfig::builtin_models() const {
    std::vector<ModelSpec> out;
    for (const auto& model : models) {
        if (model.kind != "external") {
            ModelSpec spec = model;
            if (spec.kind == "deepesn" && !spec.has("seed")) {
                spec.params["seed"] = std::to_string(seed);
            }
            out.push_back(std::move(spec));
        }
    }
    return out;
}

std::vector<fs::path> RunConfig::external_score_files() const {
    std::vector<fs::path> out;
    for (const auto& model : models) {
        if (model.kind == "external") {
            out.emplace_back(model.params.at("file"));
        }
    }
    return out;
}

RunConfig parse_config(const std::string& json_text, const fs::path& base_dir) {
    json root;
    try {
        root = json::parse(json_text);
    } catch (const json::parse_error& e) {
        throw ConfigError(std::string("config is not valid JSON: ") + e.what());
    }
    if (!root.is_object()) {
        throw ConfigError("config root must be a JSON object");
    }
    static const std::set<std::string> known = {"data_dir", "sensors", "horizons", "window", "folds",
                                                "alpha", "models", "seed", "output_dir", "workers",
                                                "missing_threshold", "csv", "grid_search"};
    for (const auto& [key, value] : root.items()) {
        if (!known.count(key)) {
            throw ConfigError("config: unknown field '" + key + "'");
        }
    }

    RunConfig config;
    config.data_dir = (base_dir / get_or<std::string>(root, "data_dir", ".")).lexically_normal();
    config.output_dir = (base_dir / get_or<std::string>(root, "output_dir", "out")).lexically_normal();
    if (root.contains("sensors")) {
        if (root["sensors"].is_string()) {
            config.sensors = {root["sensors"].get<std::string>()};
        } else {
            config.sensors = get_or<std::vector<std::string>>(root, "sensors", {});
        }
    }
    config.horizons = get_or<std::vector<std::size_t>>(root, "horizons", config.horizons);
    config.window = get_or<std::size_t>(root, "window", config.window);
    config.folds = get_or<std::size_t>(root, "folds", config.folds);
    config.alpha = get_or<double>(root, "alpha", config.alpha);
    config.seed = get_or<std::uint64_t>(root, "seed", config.seed);
    config.workers = get_or<std::size_t>(root, "workers", config.workers);
    config.missing_threshold = get_or<double>(root, "missing_threshold", config.missing_threshold);
    if (root.contains("csv")) {
        const auto& csv = root["csv"];
        config.csv.timestamp_column = get_or<std::string>(csv, "timestamp_column", config.csv.timestamp_column);
        config.csv.flow_column = get_or<std::string>(csv, "flow_column", config.csv.flow_column);
        const auto delimiter = get_or<std::string>(csv, "delimiter", ",");
        if (delimiter.size() != 1) {
            throw ConfigError("config: csv.delimiter must be a single character");
        }
        config.csv.delimiter = delimiter[0];
        config.csv.step_seconds = get_or<std::int64_t>(csv, "step_seconds", config.csv.step_seconds);
        config.extension = get_or<std::string>(csv, "extension", config.extension);
    }
    if (root.contains("models")) {
        if (!root["models"].is_array()) {
            throw ConfigError("config: 'models' must be an array");
        }
        for (const auto& node : root["models"]) {
            config.models.push_back(parse_model(node, base_dir));
        }
    } else {
        config.models = default_models();
    }
    if (root.contains("grid_search")) {
        const auto& gs = root["grid_search"];
        config.grid_search.enabled = true;
        if (!gs.contains("model")) {
            throw ConfigError("config: grid_search.model is required");
        }
        config.grid_search.base = parse_model(gs["model"], base_dir);
        if (gs.contains("grid")) {
            for (const auto& [key, values] : gs["grid"].items()) {
                if (!values.is_array() || values.empty()) {
                    throw ConfigError("config: grid_search.grid." + key + " must be a non-empty array");
                }
                for (const auto& v : values) {
                    config.grid_search.grid[key].push_back(param_text(v, key));
                }
            }
        }
        config.grid_search.tuning_sensors = get_or<std::vector<std::string>>(gs, "tuning_sensors", {});
    }

    json canonical = root;
    canonical.erase("output_dir");
    canonical.erase("workers");
    canonical["window"] = config.window;
    canonical["folds"] = config.folds;
    canonical["horizons"] = config.horizons;
    canonical["alpha"] = config.alpha;
    canonical["seed"] = config.seed;
    if (!root.contains("models")) {
        json models = json::array();
        for (const auto& spec : config.models) {
            json m = {{"name", spec.name}, {"kind", spec.kind}};
            for (const auto& [k, v] : spec.params) {
                m[k] = v;
            }
            models.push_back(m);
        }
        canonical["models"] = models;
    }
    config.canonical = canonical.dump();
    return config;
}

void apply_overrides(RunConfig& config, const Overrides& overrides) {
    json canonical = json::parse(config.canonical);
    if (overrides.output_dir) {
        config.output_dir = *overrides.output_dir;
    }
    if (overrides.workers) {
        config.workers = *overrides.workers;
    }
    if (overrides.seed) {
        config.seed = *overrides.seed;
        canonical["seed"] = config.seed;
    }
    if (overrides.folds) {
        config.folds = *overrides.folds;
        canonical["folds"] = config.folds;
    }
    if (overrides.window) {
        config.window = *overrides.window;
        canonical["window"] = config.window;
    }
    if (overrides.alpha) {
        config.alpha = *overrides.alpha;
        canonical["alpha"] = config.alpha;
    }
    if (!overrides.horizons.empty()) {
        config.horizons = overrides.horizons;
        canonical["horizons"] = config.horizons;
    }
    config.canonical = canonical.dump();
}

RunConfig load_config(const fs::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw ConfigError("cannot read config file '" + path.string() + "'");
    }
    std::stringstream buffer;
    buffer << in.rdbuf();
    RunConfig config = parse_config(buffer.str(), path.parent_path());
    config.config_path = path;
    return config;
}

namespace {

std::set<std::string> available_sensors(const RunConfig& config) {
    std::set<std::string> available;
    for (const auto& entry : fs::directory_iterator(config.data_dir)) {
        if (entry.is_regular_file() && entry.path().extension() == config.extension) {
            available.insert(entry.path().stem().string());
        }
    }
    return available;
}

std::set<std::string> match(const std::vector<std::string>& patterns, const std::set<std::string>& available) {
    std::set<std::string> chosen;
    for (const auto& pattern : patterns) {
        bool matched = false;
        for (const auto& id : available) {
            if (fnmatch(pattern.c_str(), id.c_str(), 0) == 0) {
                chosen.insert(id);
                matched = true;
            }
        }
        if (!matched && pattern.find_first_of("*?[") == std::string::npos) {
            // Explicit id without a file: keep it so prepare can report it.
            chosen.insert(pattern);
        }
    }
    return chosen;
}

}  // namespace

std::vector<std::string> resolve_sensors(const RunConfig& config) {
    const auto available = available_sensors(config);
    auto chosen = match(config.sensors, available);
    for (const auto& id : match(config.grid_search.tuning_sensors, available)) {
        chosen.erase(id);
    }
    return {chosen.begin(), chosen.end()};
}

std::vector<std::string> tuning_sensors(const RunConfig& config) {
    const auto chosen = match(config.grid_search.tuning_sensors, available_sensors(config));
    return {chosen.begin(), chosen.end()};
}

}  // namespace deepesn::cli
