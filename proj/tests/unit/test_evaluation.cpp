#include "support.hpp"

#include "deepesn/evaluation.hpp"

#include <doctest.h>

#include <atomic>
#include <cmath>
#include <numeric>
#include <sstream>

using namespace deepesn;
using testing::Gen;
using testing::series_of;

namespace {

std::vector<double> ramp(std::size_t n) {
    std::vector<double> values(n);
    std::iota(values.begin(), values.end(), 0.0);
    return values;
}

TimeSeries wave(Gen& gen, std::size_t n, std::string id) {
    std::vector<double> values(n);
    for (std::size_t t = 0; t < n; ++t) {
        values[t] = 200.0 + 80.0 * std::sin(2.0 * M_PI * static_cast<double>(t) / 96.0) + gen.normal(0.0, 6.0);
    }
    return series_of(std::move(values), std::move(id));
}

ModelEntry entry(const std::string& name, const std::string& kind, std::map<std::string, std::string> params = {}) {
    return ModelEntry{name, make_factory(ModelSpec{name, kind, std::move(params)})};
}

BenchmarkOptions options(std::size_t folds, std::size_t window, std::size_t horizon, std::size_t workers = 1) {
    BenchmarkOptions out;
    out.evaluation = EvaluationOptions{folds, window, horizon};
    out.workers = workers;
    return out;
}

}  // namespace

TEST_SUITE("evaluation") {
    TEST_CASE("split geometry for 22 slots and 10 folds") {
        const auto splits = time_splits(22, 10, 1, 1);
        REQUIRE(splits.size() == 10);
        CHECK(splits[0].train == IndexRange{0, 2});
        CHECK(splits[0].test == IndexRange{2, 4});
        CHECK(splits[9].train == IndexRange{0, 20});
        CHECK(splits[9].test == IndexRange{20, 22});
    }

    TEST_CASE("the last split tests on the final block and absorbs the remainder") {
        const auto splits = time_splits(1000, 10, 6, 1);
        // 11 blocks of 90 with 10 slots left over.
        CHECK(splits.back().train == IndexRange{0, 900});
        CHECK(splits.back().test == IndexRange{900, 1000});
    }

    TEST_CASE("too-short series name the minimum length") {
        CHECK(min_split_length(10, 6, 4) == 110);
        CHECK(min_split_length(10, 1, 1) == 22);
        CHECK_THROWS_WITH_AS(time_splits(109, 10, 6, 4), doctest::Contains("110"), std::invalid_argument);
        CHECK_NOTHROW(time_splits(110, 10, 6, 4));
        CHECK_THROWS_AS(time_splits(100, 0, 6, 1), std::invalid_argument);
    }

    TEST_CASE("property: test blocks partition the tail and never precede training") {
        Gen gen(1);
        for (int trial = 0; trial < 200; ++trial) {
            const auto folds = gen.size(1, 12);
            const auto window = gen.size(1, 8);
            const auto horizon = gen.size(1, 4);
            const auto length = min_split_length(folds, window, horizon) + gen.size(0, 500);
            const auto splits = time_splits(length, folds, window, horizon);
            REQUIRE(splits.size() == folds);
            const std::size_t block = length / (folds + 1);
            CHECK(splits.front().test.begin == block);
            for (std::size_t p = 0; p < folds; ++p) {
                CHECK(splits[p].train.begin == 0);
                CHECK(splits[p].train.end == splits[p].test.begin);
                CHECK(splits[p].test.size() >= 2);
                CHECK(splits[p].train.size() >= window + horizon);
                if (p + 1 < folds) {
                    CHECK(splits[p].test.end == splits[p + 1].test.begin);
                }
            }
            CHECK(splits.back().test.end == length);
            CHECK(time_splits(length, folds, window, horizon).back().test == splits.back().test);
        }
    }

    TEST_CASE("property: training windows never see a test target") {
        Gen gen(2);
        for (int trial = 0; trial < 40; ++trial) {
            const auto window = gen.size(1, 6);
            const auto horizon = gen.size(1, 4);
            const auto length = min_split_length(5, window, horizon) + gen.size(0, 100);
            const auto values = ramp(length);
            for (const auto& split : time_splits(length, 5, window, horizon)) {
                const auto train = make_windows_for_targets(values, window, horizon, 0, split.train.end);
                const auto test = make_windows_for_targets(values, window, horizon, split.test.begin, split.test.end);
                // Values equal their slot index, so max entries are max indices.
                CHECK(std::max(train.inputs.maxCoeff(), train.targets.maxCoeff()) <
                      static_cast<double>(split.test.begin));
                CHECK(test.targets.minCoeff() == static_cast<double>(split.test.begin));
                CHECK(test.targets.maxCoeff() == static_cast<double>(split.test.end - 1));
            }
        }
    }

    TEST_CASE("persistence on a ramp scores -3 on every two-slot block") {
        // Each block (t, t+1) is predicted as (t-1, t): SSres = 2, SStot = 0.5.
        const auto factory = make_factory(ModelSpec{"p", "persistence", {}});
        const auto scores = evaluate_model(factory, series_of(ramp(22)), EvaluationOptions{10, 1, 1});
        REQUIRE(scores.size() == 10);
        for (const double score : scores) {
            CHECK(score == doctest::Approx(-3.0).epsilon(1e-14));
        }
    }

    TEST_CASE("a constant test segment fails the evaluation") {
        const auto factory = make_factory(ModelSpec{"p", "persistence", {}});
        const std::vector<double> constant(200, 42.0);
        CHECK_THROWS_WITH_AS(evaluate_model(factory, series_of(constant), EvaluationOptions{}),
                             doctest::Contains("constant test segment"), EvaluationFailure);
        const TimeSeries gappy("g", 0, kSlotSeconds, {1, std::nan(""), 3}, {false, true, false});
        CHECK_THROWS_AS(evaluate_model(factory, gappy, EvaluationOptions{}), DataError);
    }

    TEST_CASE("benchmark cell counts and failure recording") {
        Gen gen(3);
        std::vector<TimeSeries> atrs = {wave(gen, 300, "a"), wave(gen, 300, "b"), wave(gen, 300, "c")};
        const std::vector<ModelEntry> models = {entry("persistence", "persistence"), entry("LR", "linear")};
        const auto tensor = run_benchmark(models, atrs, options(10, 6, 1));
        CHECK(tensor.score_count() == 60);
        CHECK(tensor.failures().empty());
        CHECK(tensor.atrs() == std::vector<std::string>{"a", "b", "c"});
        CHECK(tensor.models() == std::vector<std::string>{"persistence", "LR"});

        atrs.push_back(series_of(std::vector<double>(300, 5.0), "flat"));
        const auto with_flat = run_benchmark(models, atrs, options(10, 6, 1));
        CHECK(with_flat.score_count() == 60);
        REQUIRE(with_flat.failures().size() == 2);
        CHECK(with_flat.find("flat", "LR")->failure.find("constant test segment") != std::string::npos);
    }

    TEST_CASE("resuming computes only the missing cells") {
        Gen gen(4);
        const std::vector<TimeSeries> atrs = {wave(gen, 250, "a"), wave(gen, 250, "b")};
        std::atomic<int> fits{0};
        const auto counting = [&fits](const std::string& name) {
            return ModelEntry{name, [&fits] {
                                  ++fits;
                                  return make_forecaster(ModelSpec{"lr", "linear", {}});
                              }};
        };
        const auto first = run_benchmark({counting("m1")}, atrs, options(5, 6, 2));
        CHECK(fits == 10);

        std::stringstream file;
        first.write_csv(file);
        auto partial = ScoreTensor::read_csv(file);
        fits = 0;
        const auto resumed = run_benchmark({counting("m1"), counting("m2")}, atrs, options(5, 6, 2), partial);
        CHECK(fits == 10);  // only m2 on two atrs, 5 folds each
        CHECK(resumed.find("a", "m1")->scores == first.find("a", "m1")->scores);
        CHECK(resumed.find("a", "m2")->scores == first.find("a", "m1")->scores);

        fits = 0;
        run_benchmark({counting("m1"), counting("m2")}, atrs, options(5, 6, 2), resumed);
        CHECK(fits == 0);
        CHECK_THROWS_AS(run_benchmark({counting("m1")}, atrs, options(5, 6, 3), resumed), std::invalid_argument);
    }

    TEST_CASE("the same model registered twice yields identical columns in parallel") {
        Gen gen(5);
        const std::vector<TimeSeries> atrs = {wave(gen, 400, "a"), wave(gen, 400, "b")};
        const std::map<std::string, std::string> params = {{"units", "20"}, {"seed", "3"}, {"lambda", "0.1"}};
        const auto tensor =
            run_benchmark({entry("esn1", "deepesn", params), entry("esn2", "deepesn", params)}, atrs, options(4, 6, 1, 3));
        for (const auto& atr : tensor.atrs()) {
            CHECK(tensor.find(atr, "esn1")->scores == tensor.find(atr, "esn2")->scores);
        }
        const auto serial =
            run_benchmark({entry("esn1", "deepesn", params)}, atrs, options(4, 6, 1, 1));
        CHECK(serial.find("b", "esn1")->scores == tensor.find("b", "esn1")->scores);
    }

    TEST_CASE("progress is reported once per cell") {
        Gen gen(6);
        const std::vector<TimeSeries> atrs = {wave(gen, 200, "a")};
        auto opts = options(3, 6, 1, 2);
        std::vector<std::size_t> seen;
        opts.on_progress = [&seen](const BenchmarkProgress& p) {
            CHECK(p.total == 2);
            seen.push_back(p.done);
        };
        run_benchmark({entry("p", "persistence"), entry("l", "linear")}, atrs, opts);
        CHECK(seen == std::vector<std::size_t>{1, 2});
    }

    TEST_CASE("score tensors round-trip through CSV, failures included") {
        ScoreTensor tensor(4, 3);
        tensor.set_scores("s1", "A", {0.5, 0.25, -1.0 / 3.0});
        tensor.set_scores("s1", "B", {0.1, 0.2, 0.3});
        tensor.set_failed("s2", "A", "fold 2: constant test segment");
        tensor.set_scores("s2", "B", {1e-17, 0.9999999999999999, 0.7});
        std::stringstream file;
        tensor.write_csv(file, "note");
        const std::string text = file.str();
        CHECK(text.find("atr,model,fold,horizon,metric,score\n") != std::string::npos);
        CHECK(text.find("s1,A,1,4,r2,0.5\n") != std::string::npos);
        CHECK(text.find("# failed,s2,A,fold 2: constant test segment") != std::string::npos);

        const auto back = ScoreTensor::read_csv(file);
        CHECK(back.horizon() == 4);
        CHECK(back.folds() == 3);
        CHECK(back.atrs() == tensor.atrs());
        CHECK(back.models() == tensor.models());
        CHECK(back.find("s1", "A")->scores == tensor.find("s1", "A")->scores);
        CHECK(back.find("s2", "B")->scores == tensor.find("s2", "B")->scores);
        CHECK(back.find("s2", "A")->failed());
        CHECK(back.avg_score("s1", "B") == doctest::Approx(0.2));
        std::ostringstream again;
        back.write_csv(again, "note");
        CHECK(again.str() == text);
    }

    TEST_CASE("malformed score files are data errors") {
        const auto parse = [](const std::string& text, std::optional<std::size_t> h = std::nullopt) {
            std::istringstream in(text);
            return ScoreTensor::read_csv(in, h);
        };
        CHECK_THROWS_AS(parse("a,b,c\n"), DataError);
        CHECK_THROWS_AS(parse(""), DataError);
        CHECK_THROWS_AS(parse("atr,model,fold,horizon,metric,score\ns,m,1,1,r2\n"), DataError);
        CHECK_THROWS_AS(parse("atr,model,fold,horizon,metric,score\ns,m,1,1,r2,x\n"), DataError);
        CHECK_THROWS_AS(parse("atr,model,fold,horizon,metric,score\ns,m,1,1,r2,0.5\ns,m,1,1,r2,0.6\n"), DataError);
        const std::string two = "atr,model,fold,horizon,metric,score\ns,m,1,1,r2,0.5\ns,m,1,2,r2,0.6\n";
        CHECK_THROWS_AS(parse(two), DataError);
        CHECK(parse(two, 2).find("s", "m")->scores == std::vector<double>{0.6});
    }

    TEST_CASE("tensor bookkeeping errors") {
        ScoreTensor tensor(1, 2);
        CHECK_THROWS_AS(tensor.set_scores("a", "m", {0.1}), std::invalid_argument);
        CHECK_THROWS_AS(tensor.set_scores("a", "m", {0.1, std::nan("")}), std::invalid_argument);
        CHECK_THROWS_AS(tensor.avg_score("a", "m"), std::out_of_range);
        ScoreTensor other(2, 2);
        CHECK_THROWS_AS(tensor.merge(other), std::invalid_argument);
        ScoreTensor extra(1, 2);
        extra.set_scores("b", "m", {0.3, 0.4});
        tensor.set_scores("a", "m", {0.1, 0.2});
        tensor.merge(extra);
        CHECK(tensor.atrs() == std::vector<std::string>{"a", "b"});
        CHECK(tensor.score_count() == 4);
    }

    TEST_CASE("grid search with a single point returns it") {
        Gen gen(7);
        const auto result = grid_search(ModelSpec{"knn", "knn", {}}, {{"k", {"3"}}}, {wave(gen, 300, "t")},
                                        EvaluationOptions{5, 6, 1});
        CHECK(result.best.params.at("k") == "3");
        REQUIRE(result.points.size() == 1);
        CHECK(result.best_score == result.points[0].mean_score);
    }

    TEST_CASE("grid search avoids a degenerate reservoir configuration") {
        Gen gen(8);
        const ModelSpec base{"esn", "deepesn", {{"units", "100"}, {"layers", "1"}, {"seed", "1"}}};
        // lambda = 0 with fewer training windows than features cannot be solved.
        const auto sane = grid_search(base, {{"spectral_target", {"0.999", "0.9"}}, {"lambda", {"0", "0.1"}}},
                                      {wave(gen, 600, "t")}, EvaluationOptions{10, 6, 1});
        CHECK(sane.best.params.at("lambda") == "0.1");
        for (const auto& point : sane.points) {
            if (point.assignment.at("lambda") == "0") {
                CHECK_FALSE(point.failure.empty());
            }
        }
    }

    TEST_CASE("grid ties resolve to the lexicographically smallest assignment") {
        Gen gen(9);
        // Persistence ignores its parameters, so every point scores the same.
        const auto result = grid_search(ModelSpec{"p", "persistence", {}}, {{"x", {"b", "a", "c"}}, {"y", {"2", "1"}}},
                                        {wave(gen, 200, "t")}, EvaluationOptions{3, 6, 1}, 2);
        CHECK(result.points.size() == 6);
        CHECK(result.best.params.at("x") == "a");
        CHECK(result.best.params.at("y") == "1");
        std::ostringstream out;
        write_grid_results(result, out);
        CHECK(out.str().find("ok") != std::string::npos);
    }

    TEST_CASE("grid search fails when every point fails") {
        const std::vector<double> flat(200, 3.0);
        CHECK_THROWS_AS(grid_search(ModelSpec{"p", "persistence", {}}, {{"x", {"1"}}}, {series_of(flat)},
                                    EvaluationOptions{3, 6, 1}),
                        EvaluationFailure);
        CHECK_THROWS_AS(grid_search(ModelSpec{"p", "persistence", {}}, {{"x", {}}}, {series_of(flat)},
                                    EvaluationOptions{3, 6, 1}),
                        std::invalid_argument);
        CHECK_THROWS_AS(grid_search(ModelSpec{"p", "persistence", {}}, {{"x", {"1"}}}, {}, EvaluationOptions{}),
                        std::invalid_argument);
    }
}
