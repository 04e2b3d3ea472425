#include "deepesn/evaluation.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <istream>
#include <mutex>
#include <numeric>
#include <ostream>
#include <stdexcept>
#include <thread>

namespace deepesn {

namespace {

// Runs task(i) for i in [0, count) on up to `workers` threads.
template <typename Task>
void parallel_for(std::size_t count, std::size_t workers, Task&& task) {
    workers = std::clamp<std::size_t>(workers, 1, std::max<std::size_t>(count, 1));
    if (workers == 1) {
        for (std::size_t i = 0; i < count; ++i) {
            task(i);
        }
        return;
    }
    std::atomic<std::size_t> next{0};
    std::vector<std::jthread> pool;
    pool.reserve(workers);
    for (std::size_t w = 0; w < workers; ++w) {
        pool.emplace_back([&] {
            for (std::size_t i = next++; i < count; i = next++) {
                task(i);
            }
        });
    }
}

std::string sanitize_reason(std::string reason) {
    std::replace(reason.begin(), reason.end(), '\n', ' ');
    return reason;
}

}  // namespace

std::size_t min_split_length(std::size_t folds, std::size_t window, std::size_t horizon) {
    return (folds + 1) * std::max<std::size_t>(2, window + horizon);
}

std::vector<TimeSplit> time_splits(std::size_t length, std::size_t folds, std::size_t window, std::size_t horizon) {
    if (folds < 1 || window < 1 || horizon < 1) {
        throw std::invalid_argument("time_splits: folds, window and horizon must be >= 1");
    }
    const std::size_t minimum = min_split_length(folds, window, horizon);
    if (length < minimum) {
        throw std::invalid_argument("time_splits: series length " + std::to_string(length) +
                                    " is too short; need at least " + std::to_string(minimum) + " slots for P=" +
                                    std::to_string(folds) + ", W=" + std::to_string(window) +
                                    ", h=" + std::to_string(horizon));
    }
    const std::size_t block = length / (folds + 1);
    std::vector<TimeSplit> splits;
    splits.reserve(folds);
    for (std::size_t p = 1; p <= folds; ++p) {
        TimeSplit split;
        split.train = {0, p * block};
        split.test = {p * block, p == folds ? length : (p + 1) * block};
        splits.push_back(split);
    }
    return splits;
}

std::vector<double> evaluate_model(const ForecasterFactory& factory, const TimeSeries& series,
                                   const EvaluationOptions& options) {
    if (!series.complete()) {
        throw DataError("evaluate_model: series '" + series.sensor_id() + "' has missing slots; impute first");
    }
    const auto values = series.values();
    const auto splits = time_splits(series.size(), options.folds, options.window, options.horizon);
    std::vector<double> scores;
    scores.reserve(splits.size());
    for (std::size_t p = 0; p < splits.size(); ++p) {
        const auto& split = splits[p];
        try {
            const auto train = make_windows_for_targets(values, options.window, options.horizon, 0, split.train.end);
            const auto test = make_windows_for_targets(values, options.window, options.horizon, split.test.begin,
                                                       split.test.end);
            auto model = factory();
            model->fit(train);
            const Vector predicted = model->predict_rows(test.inputs);
            if (!predicted.allFinite()) {
                throw NumericalError("non-finite prediction");
            }
            scores.push_back(r2(std::span<const double>(test.targets.data(), test.size()),
                                std::span<const double>(predicted.data(), static_cast<std::size_t>(predicted.size()))));
        } catch (const std::domain_error& e) {
            throw EvaluationFailure("fold " + std::to_string(p + 1) + ": constant test segment");
        } catch (const std::exception& e) {
            throw EvaluationFailure("fold " + std::to_string(p + 1) + ": " + e.what());
        }
    }
    return scores;
}

ScoreTensor::ScoreTensor(std::size_t horizon, std::size_t folds, std::string metric)
    : horizon_(horizon), folds_(folds), metric_(std::move(metric)) {
    if (folds_ < 1) {
        throw std::invalid_argument("ScoreTensor: folds must be >= 1");
    }
}

void ScoreTensor::add_atr(const std::string& atr) {
    if (std::find(atrs_.begin(), atrs_.end(), atr) == atrs_.end()) {
        atrs_.push_back(atr);
    }
}

void ScoreTensor::add_model(const std::string& model) {
    if (std::find(models_.begin(), models_.end(), model) == models_.end()) {
        models_.push_back(model);
    }
}

void ScoreTensor::set_scores(const std::string& atr, const std::string& model, std::vector<double> scores) {
    if (scores.size() != folds_) {
        throw std::invalid_argument("ScoreTensor: " + atr + "/" + model + " has " + std::to_string(scores.size()) +
                                    " scores, expected " + std::to_string(folds_));
    }
    if (!std::all_of(scores.begin(), scores.end(), [](double s) { return std::isfinite(s); })) {
        throw std::invalid_argument("ScoreTensor: non-finite score for " + atr + "/" + model);
    }
    add_atr(atr);
    add_model(model);
    cells_[{atr, model}] = ScoreCell{std::move(scores), {}};
}

void ScoreTensor::set_failed(const std::string& atr, const std::string& model, std::string reason) {
    add_atr(atr);
    add_model(model);
    cells_[{atr, model}] = ScoreCell{{}, reason.empty() ? std::string("unspecified failure") : sanitize_reason(reason)};
}

bool ScoreTensor::has(const std::string& atr, const std::string& model) const {
    return cells_.count({atr, model}) != 0;
}

const ScoreCell* ScoreTensor::find(const std::string& atr, const std::string& model) const {
    const auto it = cells_.find({atr, model});
    return it == cells_.end() ? nullptr : &it->second;
}

double ScoreTensor::avg_score(const std::string& atr, const std::string& model) const {
    const auto* cell = find(atr, model);
    if (cell == nullptr || cell->failed()) {
        throw std::out_of_range("ScoreTensor: no scores for " + atr + "/" + model);
    }
    return std::accumulate(cell->scores.begin(), cell->scores.end(), 0.0) / static_cast<double>(cell->scores.size());
}

std::size_t ScoreTensor::score_count() const {
    std::size_t total = 0;
    for (const auto& [key, cell] : cells_) {
        total += cell.scores.size();
    }
    return total;
}

std::vector<std::pair<std::string, std::string>> ScoreTensor::failures() const {
    std::vector<std::pair<std::string, std::string>> out;
    for (const auto& atr : atrs_) {
        for (const auto& model : models_) {
            const auto* cell = find(atr, model);
            if (cell != nullptr && cell->failed()) {
                out.emplace_back(atr, model);
            }
        }
    }
    return out;
}

void ScoreTensor::merge(const ScoreTensor& other) {
    if (other.horizon_ != horizon_ || other.folds_ != folds_ || other.metric_ != metric_) {
        throw std::invalid_argument("ScoreTensor::merge: horizon, fold count or metric differ");
    }
    for (const auto& atr : other.atrs_) {
        add_atr(atr);
    }
    for (const auto& model : other.models_) {
        add_model(model);
    }
    for (const auto& [key, cell] : other.cells_) {
        cells_.try_emplace(key, cell);
    }
}

void ScoreTensor::write_csv(std::ostream& out, std::string_view header_note) const {
    if (!header_note.empty()) {
        out << "# " << header_note << '\n';
    }
    out << "atr,model,fold,horizon,metric,score\n";
    for (const auto& atr : atrs_) {
        for (const auto& model : models_) {
            const auto* cell = find(atr, model);
            if (cell == nullptr) {
                continue;
            }
            if (cell->failed()) {
                out << "# failed," << atr << ',' << model << ',' << cell->failure << '\n';
                continue;
            }
            for (std::size_t p = 0; p < cell->scores.size(); ++p) {
                out << atr << ',' << model << ',' << (p + 1) << ',' << horizon_ << ',' << metric_ << ','
                    << format_double(cell->scores[p]) << '\n';
            }
        }
    }
}

ScoreTensor ScoreTensor::read_csv(std::istream& in, std::optional<std::size_t> horizon) {
    struct Row {
        std::string atr, model, metric;
        std::size_t fold, horizon;
        double score;
    };
    struct Failure {
        std::string atr, model, reason;
    };
    std::vector<Row> rows;
    std::vector<Failure> failed;
    std::string line;
    std::size_t line_number = 0;
    bool header_seen = false;
    while (std::getline(in, line)) {
        ++line_number;
        if (!line.empty() && line.back() == '\r') {
            line.pop_back();
        }
        if (line.starts_with("# failed,")) {
            const auto fields = split(std::string_view(line).substr(9), ',');
            if (fields.size() < 3) {
                throw DataError("score file line " + std::to_string(line_number) + ": malformed failure record");
            }
            std::string reason = fields[2];
            for (std::size_t i = 3; i < fields.size(); ++i) {
                reason += ',' + fields[i];
            }
            failed.push_back({fields[0], fields[1], reason});
            continue;
        }
        if (line.empty() || line.starts_with('#')) {
            continue;
        }
        const auto fields = split(line, ',');
        if (!header_seen) {
            if (fields.size() < 6 || trim(fields[0]) != "atr" || trim(fields[5]) != "score") {
                throw DataError("score file: expected header 'atr,model,fold,horizon,metric,score'");
            }
            header_seen = true;
            continue;
        }
        if (fields.size() != 6) {
            throw DataError("score file line " + std::to_string(line_number) + ": expected 6 fields");
        }
        try {
            Row row{trim(fields[0]), trim(fields[1]), trim(fields[4]),
                    static_cast<std::size_t>(std::stoul(fields[2])), static_cast<std::size_t>(std::stoul(fields[3])),
                    parse_double(fields[5])};
            if (row.fold < 1) {
                throw std::invalid_argument("fold must be >= 1");
            }
            rows.push_back(std::move(row));
        } catch (const std::exception& e) {
            throw DataError("score file line " + std::to_string(line_number) + ": " + e.what());
        }
    }
    if (!header_seen) {
        throw DataError("score file: missing header");
    }
    if (horizon) {
        std::erase_if(rows, [&](const Row& r) { return r.horizon != *horizon; });
    }
    if (rows.empty()) {
        ScoreTensor empty(horizon.value_or(1), 1);
        for (const auto& f : failed) {
            empty.set_failed(f.atr, f.model, f.reason);
        }
        return empty;
    }
    const std::size_t h = rows.front().horizon;
    std::size_t folds = 0;
    for (const auto& row : rows) {
        if (row.horizon != h) {
            throw DataError("score file holds several horizons; select one");
        }
        if (row.metric != rows.front().metric) {
            throw DataError("score file mixes metrics");
        }
        folds = std::max(folds, row.fold);
    }
    ScoreTensor tensor(h, folds, rows.front().metric);
    std::map<std::pair<std::string, std::string>, std::vector<std::optional<double>>> grouped;
    for (const auto& row : rows) {
        tensor.add_atr(row.atr);
        tensor.add_model(row.model);
        auto& slots = grouped[{row.atr, row.model}];
        slots.resize(folds);
        if (slots[row.fold - 1]) {
            throw DataError("score file: duplicate fold " + std::to_string(row.fold) + " for " + row.atr + "/" +
                            row.model);
        }
        slots[row.fold - 1] = row.score;
    }
    for (const auto& [key, slots] : grouped) {
        std::vector<double> scores;
        std::string problem;
        for (std::size_t p = 0; p < slots.size(); ++p) {
            if (!slots[p]) {
                problem = "missing fold " + std::to_string(p + 1);
                break;
            }
            if (!std::isfinite(*slots[p])) {
                problem = "non-finite score in fold " + std::to_string(p + 1);
                break;
            }
            scores.push_back(*slots[p]);
        }
        if (problem.empty()) {
            tensor.set_scores(key.first, key.second, std::move(scores));
        } else {
            tensor.set_failed(key.first, key.second, problem);
        }
    }
    for (const auto& f : failed) {
        if (!tensor.has(f.atr, f.model)) {
            tensor.set_failed(f.atr, f.model, f.reason);
        }
    }
    return tensor;
}

ScoreTensor run_benchmark(const std::vector<ModelEntry>& models, const std::vector<TimeSeries>& atrs,
                          const BenchmarkOptions& options, std::optional<ScoreTensor> existing) {
    if (models.empty() || atrs.empty()) {
        throw std::invalid_argument("run_benchmark: at least one model and one series are required");
    }
    const auto& eval = options.evaluation;
    ScoreTensor tensor = existing ? std::move(*existing) : ScoreTensor(eval.horizon, eval.folds);
    if (tensor.horizon() != eval.horizon || tensor.folds() != eval.folds) {
        throw std::invalid_argument("run_benchmark: existing tensor was produced with a different horizon or fold count");
    }
    for (const auto& series : atrs) {
        tensor.add_atr(series.sensor_id());
    }
    for (const auto& model : models) {
        tensor.add_model(model.name);
    }

    struct Task {
        std::size_t atr, model;
    };
    std::vector<Task> tasks;
    for (std::size_t a = 0; a < atrs.size(); ++a) {
        for (std::size_t m = 0; m < models.size(); ++m) {
            if (!tensor.has(atrs[a].sensor_id(), models[m].name)) {
                tasks.push_back({a, m});
            }
        }
    }

    std::vector<ScoreCell> results(tasks.size());
    std::mutex progress_mutex;
    std::size_t done = 0;
    parallel_for(tasks.size(), options.workers, [&](std::size_t i) {
        const auto& task = tasks[i];
        ScoreCell cell;
        try {
            cell.scores = evaluate_model(models[task.model].factory, atrs[task.atr], eval);
        } catch (const std::exception& e) {
            cell.failure = e.what();
        }
        results[i] = std::move(cell);
        if (options.on_progress) {
            std::lock_guard lock(progress_mutex);
            options.on_progress(BenchmarkProgress{++done, tasks.size(), atrs[task.atr].sensor_id(),
                                                  models[task.model].name, results[i].failed()});
        }
    });

    for (std::size_t i = 0; i < tasks.size(); ++i) {
        const auto& atr = atrs[tasks[i].atr].sensor_id();
        const auto& model = models[tasks[i].model].name;
        if (results[i].failed()) {
            tensor.set_failed(atr, model, results[i].failure);
        } else {
            tensor.set_scores(atr, model, std::move(results[i].scores));
        }
    }
    return tensor;
}

GridSearchResult grid_search(const ModelSpec& base, const std::map<std::string, std::vector<std::string>>& grid,
                             const std::vector<TimeSeries>& tuning, const EvaluationOptions& options,
                             std::size_t workers) {
    if (tuning.empty()) {
        throw std::invalid_argument("grid_search: no tuning series");
    }
    std::vector<std::map<std::string, std::string>> assignments{{}};
    for (const auto& [key, values] : grid) {
        if (values.empty()) {
            throw std::invalid_argument("grid_search: parameter '" + key + "' has no candidate values");
        }
        std::vector<std::map<std::string, std::string>> expanded;
        for (const auto& partial : assignments) {
            for (const auto& value : values) {
                auto next = partial;
                next[key] = value;
                expanded.push_back(std::move(next));
            }
        }
        assignments = std::move(expanded);
    }

    GridSearchResult result;
    result.points.resize(assignments.size());
    parallel_for(assignments.size(), workers, [&](std::size_t i) {
        GridPoint& point = result.points[i];
        point.assignment = assignments[i];
        ModelSpec spec = base;
        for (const auto& [key, value] : assignments[i]) {
            spec.params[key] = value;
        }
        try {
            const auto factory = make_factory(spec);
            double sum = 0.0;
            std::size_t count = 0;
            for (const auto& series : tuning) {
                for (const double score : evaluate_model(factory, series, options)) {
                    sum += score;
                    ++count;
                }
            }
            point.mean_score = sum / static_cast<double>(count);
        } catch (const std::exception& e) {
            point.failure = sanitize_reason(e.what());
        }
    });

    const GridPoint* best = nullptr;
    for (const auto& point : result.points) {
        if (!point.failure.empty()) {
            continue;
        }
        if (best == nullptr || point.mean_score > best->mean_score ||
            (point.mean_score == best->mean_score && point.assignment < best->assignment)) {
            best = &point;
        }
    }
    if (best == nullptr) {
        throw EvaluationFailure("grid_search: every configuration failed");
    }
    result.best = base;
    for (const auto& [key, value] : best->assignment) {
        result.best.params[key] = value;
    }
    result.best_score = best->mean_score;
    return result;
}

namespace {

std::string csv_safe(std::string text) {
    std::replace(text.begin(), text.end(), ',', ';');
    std::replace(text.begin(), text.end(), '\n', ' ');
    return text;
}

}  // namespace

void write_grid_results(const GridSearchResult& result, std::ostream& out, std::string_view header_note) {
    if (!header_note.empty()) {
        out << "# " << header_note << '\n';
    }
    out << "config,mean_r2,status\n";
    for (const auto& point : result.points) {
        std::string config;
        for (const auto& [key, value] : point.assignment) {
            if (!config.empty()) {
                config += ';';
            }
            config += key + '=' + value;
        }
        out << config << ',' << (point.failure.empty() ? format_double(point.mean_score) : std::string("nan")) << ','
            << (point.failure.empty() ? std::string("ok") : "failed: " + csv_safe(point.failure)) << '\n';
    }
}

}  // namespace deepesn
