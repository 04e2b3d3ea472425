#pragma once

// Forward-chaining time-split cross-validation and the benchmark driver that
// fills the (dataset, model, fold) score tensor.

#include "deepesn/data.hpp"
#include "deepesn/models.hpp"

#include <functional>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace deepesn {

struct IndexRange {
    std::size_t begin = 0;
    std::size_t end = 0;

    std::size_t size() const { return end - begin; }
    bool operator==(const IndexRange&) const = default;
};

struct TimeSplit {
    IndexRange train;
    IndexRange test;
};

/// Expanding-window splits: the series is cut into folds + 1 equal blocks
/// (the last test block absorbs the remainder); split p trains on blocks
/// 1..p and tests on block p+1. Throws std::invalid_argument when a block is
/// shorter than max(2, W + h).
std::vector<TimeSplit> time_splits(std::size_t length, std::size_t folds, std::size_t window, std::size_t horizon);

/// Smallest series length accepted by time_splits.
std::size_t min_split_length(std::size_t folds, std::size_t window, std::size_t horizon);

/// Raised when a model cannot be scored on some fold.
class EvaluationFailure : public Error {
public:
    using Error::Error;
};

struct EvaluationOptions {
    std::size_t folds = 10;
    std::size_t window = 6;
    std::size_t horizon = 1;
};

/// One R^2 per split: fit a fresh model on the train block, score it on the
/// windows whose targets fall in the test block.
std::vector<double> evaluate_model(const ForecasterFactory& factory, const TimeSeries& series,
                                   const EvaluationOptions& options);

struct ScoreCell {
    std::vector<double> scores;
    std::string failure;

    bool failed() const { return !failure.empty(); }
};

/// R^2 scores indexed by (atr, model, fold). Models and atrs keep
/// first-insertion order, which fixes the order of every export.
class ScoreTensor {
public:
    explicit ScoreTensor(std::size_t horizon = 1, std::size_t folds = 10, std::string metric = "r2");

    std::size_t horizon() const { return horizon_; }
    std::size_t folds() const { return folds_; }
    const std::string& metric() const { return metric_; }

    const std::vector<std::string>& atrs() const { return atrs_; }
    const std::vector<std::string>& models() const { return models_; }
    void add_atr(const std::string& atr);
    void add_model(const std::string& model);

    void set_scores(const std::string& atr, const std::string& model, std::vector<double> scores);
    void set_failed(const std::string& atr, const std::string& model, std::string reason);

    bool has(const std::string& atr, const std::string& model) const;
    const ScoreCell* find(const std::string& atr, const std::string& model) const;
    double avg_score(const std::string& atr, const std::string& model) const;

    /// Number of stored fold scores (failed pairs excluded).
    std::size_t score_count() const;
    std::vector<std::pair<std::string, std::string>> failures() const;

    /// Cells of `other` that this tensor lacks are copied in; horizon, folds
    /// and metric must agree.
    void merge(const ScoreTensor& other);

    /// Header `atr,model,fold,horizon,metric,score`; failed pairs appear as
    /// `# failed,<atr>,<model>,<reason>` lines.
    void write_csv(std::ostream& out, std::string_view header_note = {}) const;

    /// Parses the same format. With `horizon` set, rows for other horizons are
    /// skipped; otherwise the file must hold a single horizon.
    static ScoreTensor read_csv(std::istream& in, std::optional<std::size_t> horizon = std::nullopt);

private:
    std::size_t horizon_;
    std::size_t folds_;
    std::string metric_;
    std::vector<std::string> atrs_;
    std::vector<std::string> models_;
    std::map<std::pair<std::string, std::string>, ScoreCell> cells_;
};

struct ModelEntry {
    std::string name;
    ForecasterFactory factory;
};

struct BenchmarkProgress {
    std::size_t done = 0;
    std::size_t total = 0;
    std::string atr;
    std::string model;
    bool failed = false;
};

struct BenchmarkOptions {
    EvaluationOptions evaluation;
    std::size_t workers = 1;
    std::function<void(const BenchmarkProgress&)> on_progress;
};

/// Fills every missing (atr, model) pair of `existing` (or of an empty
/// tensor); pairs already present are left untouched. Failures are recorded
/// per pair and never abort the run.
ScoreTensor run_benchmark(const std::vector<ModelEntry>& models, const std::vector<TimeSeries>& atrs,
                          const BenchmarkOptions& options, std::optional<ScoreTensor> existing = std::nullopt);

struct GridPoint {
    std::map<std::string, std::string> assignment;
    double mean_score = 0.0;
    std::string failure;
};

struct GridSearchResult {
    ModelSpec best;
    double best_score = 0.0;
    std::vector<GridPoint> points;
};

/// Exhaustive search over the Cartesian product of `grid` applied on top of
/// `base`. The winner maximizes mean R^2 over tuning series and folds; ties go
/// to the lexicographically smallest assignment.
GridSearchResult grid_search(const ModelSpec& base, const std::map<std::string, std::vector<std::string>>& grid,
                             const std::vector<TimeSeries>& tuning, const EvaluationOptions& options,
                             std::size_t workers = 1);

void write_grid_results(const GridSearchResult& result, std::ostream& out, std::string_view header_note = {});

}  // namespace deepesn
