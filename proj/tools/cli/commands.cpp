#include "commands.hpp"

#include "deepesn/evaluation.hpp"
#include "deepesn/stats.hpp"
#include "deepesn/synthetic.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iostream>
#include <set>
#include <sstream>

namespace deepesn::cli {

namespace {

std::string csv_safe(std::string text) {
    std::replace(text.begin(), text.end(), ',', ';');
    std::replace(text.begin(), text.end(), '\n', ' ');
    return text;
}

std::string read_file(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw DataError("cannot read '" + path.string() + "'");
    }
    std::stringstream buffer;
    buffer << in.rdbuf();
    return buffer.str();
}

void write_file(const fs::path& path, const std::string& content) {
    write_if_changed(path, content);
}

std::string horizon_file(std::string_view prefix, std::size_t h, std::string_view extension) {
    return std::string(prefix) + "_h" + std::to_string(h) + std::string(extension);
}

std::string join(const std::vector<std::string>& items, std::string_view sep = ", ") {
    std::string out;
    for (const auto& item : items) {
        if (!out.empty()) {
            out += sep;
        }
        out += item;
    }
    return out;
}

fs::path cache_file(const RunConfig& config, const std::string& sensor) {
    return config.cache_dir() / (sensor + ".series");
}

std::vector<TimeSeries> load_prepared(const RunConfig& config, const std::vector<std::string>& ids, const Log& log) {
    std::vector<TimeSeries> out;
    std::vector<std::string> missing;
    for (const auto& id : ids) {
        const auto path = cache_file(config, id);
        if (!fs::exists(path)) {
            missing.push_back(id);
            continue;
        }
        out.push_back(load_series_cache(path));
    }
    if (!missing.empty()) {
        log.warn("not prepared (skipped): " + join(missing));
    }
    return out;
}

// Sample mean and standard deviation; a single value has zero spread.
std::pair<double, double> sample_mean_std(const std::vector<double>& values) {
    const double n = static_cast<double>(values.size());
    double mean = 0.0;
    for (const double v : values) {
        mean += v;
    }
    mean /= n;
    double ss = 0.0;
    for (const double v : values) {
        ss += (v - mean) * (v - mean);
    }
    return {mean, values.size() > 1 ? std::sqrt(ss / (n - 1.0)) : 0.0};
}

// Display width, counting each UTF-8 code point once.
std::size_t display_width(const std::string& text) {
    return static_cast<std::size_t>(
        std::count_if(text.begin(), text.end(), [](char c) { return (static_cast<unsigned char>(c) & 0xC0) != 0x80; }));
}

std::string pad(const std::string& text, std::size_t width) {
    return text + std::string(width - std::min(width, display_width(text)), ' ');
}

}  // namespace

void Log::info(const std::string& message) const {
    if (!quiet_) {
        out_ << "[deepesn] " << message << '\n';
    }
}

void Log::warn(const std::string& message) const {
    out_ << "[deepesn] warning: " << message << '\n';
}

Log::Stage::Stage(const Log& log, std::string name)
    : log_(log), name_(std::move(name)), begin_(std::chrono::steady_clock::now()) {
    log_.info(name_ + ": start");
}

Log::Stage::~Stage() {
    const std::chrono::duration<double> elapsed = std::chrono::steady_clock::now() - begin_;
    log_.info(name_ + ": done in " + format_fixed(elapsed.count(), 3) + " s");
}

bool write_if_changed(const fs::path& path, const std::string& content) {
    if (fs::exists(path)) {
        std::ifstream in(path, std::ios::binary);
        std::stringstream buffer;
        buffer << in.rdbuf();
        if (in && buffer.str() == content) {
            return false;
        }
    }
    if (path.has_parent_path()) {
        fs::create_directories(path.parent_path());
    }
    fs::path tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        out << content;
        if (!out) {
            throw DataError("cannot write '" + path.string() + "'");
        }
    }
    fs::rename(tmp, path);
    return true;
}

std::string mean_std(const std::vector<double>& values) {
    if (values.empty()) {
        return "n/a";
    }
    const auto [mean, sd] = sample_mean_std(values);
    return format_fixed(mean, 2) + "±" + format_fixed(sd, 2);
}

PrepareSummary cmd_prepare(const RunConfig& config, const Log& log) {
    const auto stage = log.stage("prepare");
    std::set<std::string> ids;
    for (const auto& id : resolve_sensors(config)) {
        ids.insert(id);
    }
    for (const auto& id : tuning_sensors(config)) {
        ids.insert(id);
    }
    if (ids.empty()) {
        throw ConfigError("no sensor files match the configured sensors in '" + config.data_dir.string() + "'");
    }

    PrepareSummary summary;
    std::ostringstream quality;
    quality << "# " << config.provenance() << '\n'
            << "sensor,status,length,missing_slots,missing_fraction,detail\n";
    for (const auto& id : ids) {
        const fs::path source = config.data_dir / (id + config.extension);
        std::optional<TimeSeries> raw;
        try {
            if (!fs::exists(source)) {
                throw DataError("file not found: " + source.string());
            }
            CsvSchema schema = config.csv;
            schema.sensor_id = id;
            raw = load_series(source, schema);
            const TimeSeries clean = impute(*raw, ImputeOptions{config.missing_threshold});
            std::ostringstream cache;
            write_series_cache(clean, cache, config.provenance());
            if (write_if_changed(cache_file(config, id), cache.str())) {
                summary.cached.push_back(id);
            } else {
                summary.unchanged.push_back(id);
            }
            quality << id << ",ok," << raw->size() << ',' << raw->missing_count() << ','
                    << format_fixed(raw->missing_fraction(), 6) << ",\n";
        } catch (const DataError& e) {
            summary.skipped.emplace_back(id, e.what());
            fs::remove(cache_file(config, id));
            quality << id << ",skipped,";
            if (raw) {
                quality << raw->size() << ',' << raw->missing_count() << ','
                        << format_fixed(raw->missing_fraction(), 6);
            } else {
                quality << ",,";
            }
            quality << ',' << csv_safe(e.what()) << '\n';
        }
    }
    write_file(config.output_dir / "quality.csv", quality.str());

    log.info("prepare: " + std::to_string(summary.cached.size()) + " written, " +
             std::to_string(summary.unchanged.size()) + " unchanged, " + std::to_string(summary.skipped.size()) +
             " skipped");
    for (const auto& [id, reason] : summary.skipped) {
        log.warn("skipped sensor " + id + ": " + reason);
    }
    if (summary.cached.empty() && summary.unchanged.empty()) {
        throw DataError("prepare: every sensor was rejected (see quality.csv)");
    }
    return summary;
}

void cmd_benchmark(const RunConfig& config, bool resume, const Log& log) {
    const auto stage = log.stage("benchmark");
    const auto series = load_prepared(config, resolve_sensors(config), log);
    if (series.empty()) {
        throw DataError("benchmark: no prepared series; run 'deepesn prepare' first");
    }
    std::vector<std::string> atr_ids;
    for (const auto& s : series) {
        atr_ids.push_back(s.sensor_id());
    }

    std::vector<ModelEntry> entries;
    std::set<std::string> builtin_names;
    for (const auto& spec : config.builtin_models()) {
        entries.push_back({spec.name, make_factory(spec)});
        builtin_names.insert(spec.name);
    }

    std::vector<std::string> summary_models;
    std::map<std::pair<std::string, std::size_t>, std::vector<double>> summary;
    for (const auto h : config.horizons) {
        const auto horizon_stage = log.stage("benchmark h=" + std::to_string(h));
        const fs::path scores_path = config.output_dir / horizon_file("scores", h, ".csv");

        std::vector<ScoreTensor> externals;
        for (const auto& file : config.external_score_files()) {
            std::ifstream in(file, std::ios::binary);
            if (!in) {
                throw DataError("cannot read external score file '" + file.string() + "'");
            }
            externals.push_back(ScoreTensor::read_csv(in, h));
            if (externals.back().score_count() > 0 && externals.back().folds() != config.folds) {
                throw DataError("external score file '" + file.string() + "' has " +
                                std::to_string(externals.back().folds()) + " folds, expected " +
                                std::to_string(config.folds));
            }
            for (const auto& model : externals.back().models()) {
                if (builtin_names.count(model)) {
                    throw ConfigError("external model '" + model + "' clashes with a built-in model name");
                }
            }
        }

        std::optional<ScoreTensor> existing;
        if (resume && fs::exists(scores_path)) {
            std::ifstream in(scores_path, std::ios::binary);
            const ScoreTensor previous = ScoreTensor::read_csv(in, h);
            if (previous.score_count() > 0 && previous.folds() != config.folds) {
                throw ConfigError("resume: '" + scores_path.string() + "' was written with a different fold count");
            }
            // Keep completed built-in cells only, in the order a fresh run produces.
            ScoreTensor kept(h, config.folds);
            for (const auto& atr : atr_ids) {
                kept.add_atr(atr);
            }
            for (const auto& entry : entries) {
                kept.add_model(entry.name);
            }
            std::size_t reused = 0;
            for (const auto& atr : atr_ids) {
                for (const auto& entry : entries) {
                    const auto* cell = previous.find(atr, entry.name);
                    if (cell != nullptr && !cell->failed() && cell->scores.size() == config.folds) {
                        kept.set_scores(atr, entry.name, cell->scores);
                        ++reused;
                    }
                }
            }
            log.info("resume: reusing " + std::to_string(reused) + " completed pairs");
            existing = std::move(kept);
        }

        BenchmarkOptions options;
        options.evaluation = EvaluationOptions{config.folds, config.window, h};
        options.workers = config.workers;
        options.on_progress = [&log, h](const BenchmarkProgress& p) {
            log.info("h=" + std::to_string(h) + " [" + std::to_string(p.done) + "/" + std::to_string(p.total) + "] " +
                     p.atr + " " + p.model + (p.failed ? " FAILED" : ""));
        };
        ScoreTensor tensor = run_benchmark(entries, series, options, std::move(existing));

        for (const auto& external : externals) {
            ScoreTensor filtered(h, config.folds, external.metric());
            std::vector<std::string> ignored;
            for (const auto& atr : external.atrs()) {
                if (std::find(atr_ids.begin(), atr_ids.end(), atr) == atr_ids.end()) {
                    ignored.push_back(atr);
                }
            }
            for (const auto& model : external.models()) {
                filtered.add_model(model);
            }
            for (const auto& atr : atr_ids) {
                for (const auto& model : external.models()) {
                    if (const auto* cell = external.find(atr, model)) {
                        if (cell->failed()) {
                            filtered.set_failed(atr, model, cell->failure);
                        } else {
                            filtered.set_scores(atr, model, cell->scores);
                        }
                    }
                }
            }
            if (!ignored.empty()) {
                log.warn("external scores for datasets outside this run ignored: " + join(ignored));
            }
            tensor.merge(filtered);
            for (const auto& model : external.models()) {
                std::vector<std::string> gaps;
                for (const auto& atr : atr_ids) {
                    if (!tensor.has(atr, model)) {
                        gaps.push_back(atr);
                    }
                }
                if (!gaps.empty()) {
                    log.warn("external model " + model + " (h=" + std::to_string(h) + ") has no scores for: " +
                             join(gaps));
                }
            }
        }

        for (const auto& [atr, model] : tensor.failures()) {
            log.warn("h=" + std::to_string(h) + " " + model + " failed on " + atr + ": " +
                     tensor.find(atr, model)->failure);
        }
        std::ostringstream csv;
        tensor.write_csv(csv, config.provenance());
        write_file(scores_path, csv.str());
        log.info("wrote " + scores_path.string());

        for (const auto& model : tensor.models()) {
            if (std::find(summary_models.begin(), summary_models.end(), model) == summary_models.end()) {
                summary_models.push_back(model);
            }
            auto& values = summary[{model, h}];
            for (const auto& atr : tensor.atrs()) {
                const auto* cell = tensor.find(atr, model);
                if (cell != nullptr && !cell->failed() && !cell->scores.empty()) {
                    values.push_back(tensor.avg_score(atr, model));
                }
            }
        }
    }

    std::vector<std::vector<std::string>> rows;
    rows.push_back({"model"});
    for (const auto h : config.horizons) {
        rows.front().push_back("h=" + std::to_string(h));
    }
    for (const auto& model : summary_models) {
        std::vector<std::string> row{model};
        for (const auto h : config.horizons) {
            const auto it = summary.find({model, h});
            row.push_back(mean_std(it == summary.end() ? std::vector<double>{} : it->second));
        }
        rows.push_back(std::move(row));
    }
    std::vector<std::size_t> widths(rows.front().size(), 0);
    for (const auto& row : rows) {
        for (std::size_t c = 0; c < row.size(); ++c) {
            widths[c] = std::max(widths[c], display_width(row[c]));
        }
    }
    std::ostringstream table;
    table << "# " << config.provenance() << '\n'
          << "# R2 mean±std over datasets (per-dataset mean over " << config.folds << " folds), W="
          << config.window << ", " << series.size() << " datasets\n";
    for (const auto& row : rows) {
        std::string line;
        for (std::size_t c = 0; c < row.size(); ++c) {
            line += c + 1 < row.size() ? pad(row[c], widths[c] + 2) : row[c];
        }
        table << line << '\n';
    }
    write_file(config.output_dir / "summary.txt", table.str());
    log.info("summary:\n" + table.str());
}

void cmd_rank(const std::vector<fs::path>& score_files, double alpha, const fs::path& output_dir,
              const std::string& provenance, const Log& log) {
    const auto stage = log.stage("rank");
    if (score_files.empty()) {
        throw ConfigError("rank: no score files given");
    }
    for (const auto& file : score_files) {
        std::ifstream in(file, std::ios::binary);
        if (!in) {
            throw DataError("cannot read score file '" + file.string() + "'; run 'deepesn benchmark' first");
        }
        const ScoreTensor tensor = ScoreTensor::read_csv(in);
        if (tensor.models().size() < 2) {
            throw ConfigError("rank: '" + file.string() + "' holds fewer than 2 models");
        }
        RankReport report;
        try {
            report = rank_tensor(tensor, alpha);
        } catch (const EvaluationFailure& e) {
            throw DataError(std::string(e.what()) + " in '" + file.string() + "'");
        }
        const std::size_t h = tensor.horizon();
        std::ostringstream table;
        write_rank_table(report, table, provenance);
        write_file(output_dir / horizon_file("rank", h, ".txt"), table.str());
        std::ostringstream csv;
        write_rank_csv(report, csv, provenance);
        write_file(output_dir / horizon_file("rank", h, ".csv"), csv.str());
        fs::create_directories(output_dir);
        write_cd_diagram(report, (output_dir / ("cd_h" + std::to_string(h))).string(), provenance);
        if (!report.excluded_atrs.empty()) {
            log.warn("h=" + std::to_string(h) + ": excluded datasets with failed or missing pairs: " +
                     join(report.excluded_atrs));
        }
        log.info("ranking h=" + std::to_string(h) + ":\n" + table.str());
    }
}

void cmd_rank(const RunConfig& config, const Log& log) {
    std::vector<fs::path> files;
    for (const auto h : config.horizons) {
        files.push_back(config.output_dir / horizon_file("scores", h, ".csv"));
    }
    cmd_rank(files, config.alpha, config.output_dir, config.provenance(), log);
}

void cmd_forecast(const ForecastArgs& args, std::ostream& stdout_stream, const Log& log) {
    const auto stage = log.stage("forecast");
    if (!fs::exists(args.model_file)) {
        throw ConfigError("model file '" + args.model_file.string() + "' does not exist");
    }
    if (!fs::exists(args.series_file)) {
        throw ConfigError("series file '" + args.series_file.string() + "' does not exist");
    }
    const std::string model_text = read_file(args.model_file);
    std::istringstream model_stream(model_text);
    const auto model = load_forecaster(model_stream);
    const std::size_t h = model->horizon();
    const std::size_t w = model->window();
    if (args.horizon && *args.horizon != h) {
        throw ConfigError("horizon mismatch: model was trained for h=" + std::to_string(h) + ", requested h=" +
                          std::to_string(*args.horizon));
    }

    TimeSeries series;
    if (args.series_file.extension() == ".series") {
        series = load_series_cache(args.series_file);
    } else {
        series = impute(load_series(args.series_file, args.csv), ImputeOptions{args.missing_threshold});
    }
    if (!series.complete()) {
        throw DataError("series '" + series.sensor_id() + "' has missing slots; impute it first");
    }
    if (series.size() < w) {
        throw DataError("series '" + series.sensor_id() + "' has " + std::to_string(series.size()) +
                        " slots, shorter than the model window W=" + std::to_string(w));
    }

    const std::size_t rows = series.size() - w + 1;
    Matrix windows(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(w));
    for (std::size_t r = 0; r < rows; ++r) {
        for (std::size_t c = 0; c < w; ++c) {
            windows(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = series.value(r + c);
        }
    }
    const Vector predictions = model->predict_rows(windows);

    std::ostringstream out;
    out << "# deepesn " << kVersion << " model=" << hex64(fnv1a64(model_text)) << " sensor=" << series.sensor_id()
        << " horizon=" << h << '\n'
        << "timestamp,prediction\n";
    for (std::size_t r = 0; r < rows; ++r) {
        const std::int64_t target_time =
            series.timestamp(r + w - 1) + static_cast<std::int64_t>(h) * series.step();
        out << format_timestamp(target_time) << ',' << format_double(predictions(static_cast<Eigen::Index>(r)))
            << '\n';
    }
    if (args.output.empty()) {
        stdout_stream << out.str();
    } else {
        write_file(args.output, out.str());
        log.info("wrote " + std::to_string(rows) + " predictions to " + args.output.string());
    }
}

void cmd_train(const RunConfig& config, const TrainArgs& args, const Log& log) {
    const auto stage = log.stage("train");
    const auto models = config.builtin_models();
    const auto it = std::find_if(models.begin(), models.end(), [&](const ModelSpec& m) { return m.name == args.model; });
    if (it == models.end()) {
        throw ConfigError("train: no built-in model named '" + args.model + "' in the config");
    }
    const auto path = cache_file(config, args.sensor);
    if (!fs::exists(path)) {
        throw DataError("train: sensor '" + args.sensor + "' is not prepared");
    }
    const TimeSeries series = load_series_cache(path);
    const auto data = make_windows(series, config.window, args.horizon);
    auto model = make_forecaster(*it);
    model->fit(data);
    if (!model->warning().empty()) {
        log.warn(model->warning());
    }
    std::ostringstream saved;
    model->save(saved);
    std::string text = saved.str();
    text.insert(text.find('\n') + 1, "# " + config.provenance() + " sensor=" + args.sensor + "\n");
    write_file(args.output, text);
    log.info("wrote model " + args.model + " (h=" + std::to_string(args.horizon) + ") to " + args.output.string());
}

void cmd_grid_search(const RunConfig& config, const Log& log) {
    const auto stage = log.stage("grid-search");
    if (!config.grid_search.enabled) {
        throw ConfigError("grid-search: the config has no 'grid_search' section");
    }
    const auto ids = tuning_sensors(config);
    if (ids.empty()) {
        throw ConfigError("grid-search: grid_search.tuning_sensors matches no sensor");
    }
    const auto tuning = load_prepared(config, ids, log);
    if (tuning.empty()) {
        throw DataError("grid-search: no tuning series prepared; run 'deepesn prepare' first");
    }
    ModelSpec base = config.grid_search.base;
    if (base.kind == "deepesn" && !base.has("seed")) {
        base.params["seed"] = std::to_string(config.seed);
    }
    for (const auto h : config.horizons) {
        const auto horizon_stage = log.stage("grid-search h=" + std::to_string(h));
        const auto result = grid_search(base, config.grid_search.grid, tuning,
                                        EvaluationOptions{config.folds, config.window, h}, config.workers);
        std::ostringstream csv;
        write_grid_results(result, csv, config.provenance());
        write_file(config.output_dir / horizon_file("grid", h, ".csv"), csv.str());

        nlohmann::ordered_json best;
        best["provenance"] = config.provenance();
        best["horizon"] = h;
        best["mean_r2"] = result.best_score;
        nlohmann::ordered_json model;
        model["name"] = result.best.name;
        model["kind"] = result.best.kind;
        for (const auto& [key, value] : result.best.params) {
            model[key] = value;
        }
        best["model"] = model;
        write_file(config.output_dir / horizon_file("best", h, ".json"), best.dump(2) + "\n");
        log.info("h=" + std::to_string(h) + ": best mean R2 " + format_fixed(result.best_score, 4));
    }
}

void cmd_synthesize(const SynthesizeArgs& args, const Log& log) {
    const auto stage = log.stage("synthesize");
    for (std::size_t i = 0; i < args.sensors; ++i) {
        SyntheticTrafficConfig traffic;
        traffic.length = args.length;
        traffic.seed = mix_seed(args.seed, i);
        traffic.missing_fraction = args.missing_fraction;
        traffic.sensor_id = args.prefix + std::to_string(i + 1);
        // Spread the sensors over quieter and busier roads.
        traffic.base_flow = 150.0 + 60.0 * static_cast<double>(i);
        traffic.daily_amplitude = 0.7 * traffic.base_flow;
        traffic.noise_sigma = 0.08 * traffic.base_flow;
        const TimeSeries series = make_synthetic_traffic(traffic);
        std::ostringstream csv;
        csv << "timestamp,flow\n";
        for (std::size_t t = 0; t < series.size(); ++t) {
            if (!series.missing(t)) {
                csv << format_timestamp(series.timestamp(t)) << ',' << format_double(std::round(series.value(t)))
                    << '\n';
            }
        }
        write_file(args.output_dir / (traffic.sensor_id + ".csv"), csv.str());
    }
    log.info("wrote " + std::to_string(args.sensors) + " series to " + args.output_dir.string());
}

namespace {

void add_overrides(CLI::App& cmd, Overrides& overrides) {
    cmd.add_option("--output-dir", overrides.output_dir, "Output directory (overrides config)");
    cmd.add_option("--workers", overrides.workers, "Worker threads (overrides config)")->check(CLI::PositiveNumber);
    cmd.add_option("--seed", overrides.seed, "Base seed (overrides config)");
    cmd.add_option("--folds", overrides.folds, "Number of time splits (overrides config)")->check(CLI::PositiveNumber);
    cmd.add_option("--window", overrides.window, "Input window length (overrides config)")->check(CLI::PositiveNumber);
    cmd.add_option("--alpha", overrides.alpha, "Significance level (overrides config)");
    cmd.add_option("--horizons", overrides.horizons, "Comma-separated horizons (overrides config)")->delimiter(',');
}

RunConfig configured(const fs::path& path, const Overrides& overrides) {
    RunConfig config = load_config(path);
    apply_overrides(config, overrides);
    config.validate();
    return config;
}

}  // namespace

int run_cli(std::vector<std::string> args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Deep echo state network benchmarking for traffic-flow forecasting", "deepesn"};
    app.require_subcommand(1);
    app.fallthrough();  // subcommands accept the global flags too
    app.set_version_flag("--version", "deepesn " + std::string(kVersion));
    bool quiet = false;
    app.add_flag("-q,--quiet", quiet, "Only print warnings and errors");

    fs::path config_path;
    Overrides overrides;

    auto* prepare = app.add_subcommand("prepare", "Validate, impute and cache sensor series");
    prepare->add_option("-c,--config", config_path, "Run configuration (JSON)")->required();
    add_overrides(*prepare, overrides);

    bool resume = false;
    auto* benchmark = app.add_subcommand("benchmark", "Cross-validate every model on every prepared series");
    benchmark->add_option("-c,--config", config_path, "Run configuration (JSON)")->required();
    benchmark->add_flag("--resume", resume, "Keep completed cells of existing score files");
    add_overrides(*benchmark, overrides);

    std::vector<fs::path> score_files;
    auto* rank = app.add_subcommand("rank", "Statistical ranking and critical-difference diagrams");
    auto* rank_config = rank->add_option("-c,--config", config_path, "Run configuration (JSON)");
    rank->add_option("--scores", score_files, "Score files to rank instead of the config outputs")
        ->excludes(rank_config);
    add_overrides(*rank, overrides);

    ForecastArgs forecast_args;
    std::string delimiter = ",";
    auto* forecast = app.add_subcommand("forecast", "Predict with a saved model");
    forecast->add_option("-m,--model", forecast_args.model_file, "Model file written by 'train'")->required();
    forecast->add_option("-s,--series", forecast_args.series_file, "Series: raw export or .series cache")->required();
    forecast->add_option("--horizon", forecast_args.horizon, "Expected horizon (checked against the model)");
    forecast->add_option("-o,--output", forecast_args.output, "Output file (default: standard output)");
    forecast->add_option("--timestamp-column", forecast_args.csv.timestamp_column, "Timestamp column name");
    forecast->add_option("--flow-column", forecast_args.csv.flow_column, "Flow column name");
    forecast->add_option("--delimiter", delimiter, "Field delimiter");
    forecast->add_option("--missing-threshold", forecast_args.missing_threshold, "Largest imputable missing fraction");

    TrainArgs train_args;
    auto* train = app.add_subcommand("train", "Fit a configured model on one prepared series and save it");
    train->add_option("-c,--config", config_path, "Run configuration (JSON)")->required();
    train->add_option("--model", train_args.model, "Model name from the config")->required();
    train->add_option("--sensor", train_args.sensor, "Prepared sensor id")->required();
    train->add_option("--horizon", train_args.horizon, "Forecast horizon")->check(CLI::PositiveNumber);
    train->add_option("-o,--output", train_args.output, "Model file to write")->required();
    add_overrides(*train, overrides);

    auto* grid = app.add_subcommand("grid-search", "Exhaustive hyper-parameter search on the tuning sensors");
    grid->add_option("-c,--config", config_path, "Run configuration (JSON)")->required();
    add_overrides(*grid, overrides);

    SynthesizeArgs synth_args;
    auto* synthesize = app.add_subcommand("synthesize", "Generate synthetic traffic-count exports");
    synthesize->add_option("-o,--output-dir", synth_args.output_dir, "Directory for the CSV files")->required();
    synthesize->add_option("--sensors", synth_args.sensors, "Number of sensors")->check(CLI::PositiveNumber);
    synthesize->add_option("--length", synth_args.length, "Slots per sensor")->check(CLI::PositiveNumber);
    synthesize->add_option("--seed", synth_args.seed, "Base seed");
    synthesize->add_option("--missing", synth_args.missing_fraction, "Fraction of dropped slots")
        ->check(CLI::Range(0.0, 1.0));
    synthesize->add_option("--prefix", synth_args.prefix, "Sensor id prefix");

    try {
        std::reverse(args.begin(), args.end());
        app.parse(args);
        const Log run_log(err, quiet);

        if (prepare->parsed()) {
            const auto summary = cmd_prepare(configured(config_path, overrides), run_log);
            out << "prepared " << summary.cached.size() + summary.unchanged.size() << " series, skipped "
                << summary.skipped.size() << '\n';
            for (const auto& [id, reason] : summary.skipped) {
                out << "  skipped " << id << ": " << reason << '\n';
            }
        } else if (benchmark->parsed()) {
            cmd_benchmark(configured(config_path, overrides), resume, run_log);
        } else if (rank->parsed()) {
            if (!score_files.empty()) {
                std::string digest;
                for (const auto& file : score_files) {
                    digest += read_file(file);
                }
                const double alpha = overrides.alpha.value_or(0.05);
                digest += format_double(alpha);
                const std::string provenance = "deepesn " + std::string(kVersion) + " config=" + hex64(fnv1a64(digest));
                cmd_rank(score_files, alpha, overrides.output_dir.value_or(fs::path(".")), provenance, run_log);
            } else if (!config_path.empty()) {
                cmd_rank(configured(config_path, overrides), run_log);
            } else {
                throw ConfigError("rank: give --config or --scores");
            }
        } else if (forecast->parsed()) {
            if (delimiter.size() != 1) {
                throw ConfigError("--delimiter must be a single character");
            }
            forecast_args.csv.delimiter = delimiter[0];
            cmd_forecast(forecast_args, out, run_log);
        } else if (train->parsed()) {
            cmd_train(configured(config_path, overrides), train_args, run_log);
        } else if (synthesize->parsed()) {
            cmd_synthesize(synth_args, run_log);
        } else if (grid->parsed()) {
            cmd_grid_search(configured(config_path, overrides), run_log);
        }
        return kExitOk;
    } catch (const CLI::ParseError& e) {
        return app.exit(e, out, err) == 0 ? kExitOk : kExitConfig;
    } catch (const ConfigError& e) {
        err << "error: " << e.what() << '\n';
        return kExitConfig;
    } catch (const std::logic_error& e) {
        err << "error: " << e.what() << '\n';
        return kExitConfig;
    } catch (const DataError& e) {
        err << "data error: " << e.what() << '\n';
        return kExitData;
    } catch (const fs::filesystem_error& e) {
        err << "data error: " << e.what() << '\n';
        return kExitData;
    } catch (const std::exception& e) {
        err << "numerical error: " << e.what() << '\n';
        return kExitNumerical;
    }
}

}  // namespace deepesn::cli
