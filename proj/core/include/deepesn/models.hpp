#pragma once

// Sliding-window supervised framing, forecasters, and scoring metrics.

#include "deepesn/common.hpp"
#include "deepesn/data.hpp"
#include "deepesn/readout.hpp"
#include "deepesn/reservoir.hpp"

#include <functional>
#include <iosfwd>
#include <map>
#include <memory>
#include <span>
#include <string>

namespace deepesn {

/// (window -> target) pairs. Row i holds series[i .. i+W-1] and target i is
/// series[i+W+h-1], i.e. h slots after the last window element.
struct WindowedDataset {
    Matrix inputs;
    Vector targets;
    std::size_t window = 0;
    std::size_t horizon = 0;

    std::size_t size() const { return static_cast<std::size_t>(targets.size()); }
};

WindowedDataset make_windows(std::span<const double> series, std::size_t window, std::size_t horizon);
WindowedDataset make_windows(const TimeSeries& series, std::size_t window, std::size_t horizon);

/// Only the windows whose target index lies in [target_begin, target_end).
/// Inputs may reach back before target_begin.
WindowedDataset make_windows_for_targets(std::span<const double> series, std::size_t window, std::size_t horizon,
                                         std::size_t target_begin, std::size_t target_end);

double persistence_forecast(std::span<const double> window, std::size_t horizon);

double rmse(std::span<const double> actual, std::span<const double> predicted);

/// Coefficient of determination against the mean of `actual`. Throws
/// std::domain_error when `actual` is constant.
double r2(std::span<const double> actual, std::span<const double> predicted);

/// Model description as written in run configurations: a kind plus
/// string-valued hyper-parameters.
struct ModelSpec {
    std::string name;
    std::string kind;
    std::map<std::string, std::string> params;

    bool has(const std::string& key) const { return params.count(key) != 0; }
    double get_double(const std::string& key, double fallback) const;
    std::size_t get_size(const std::string& key, std::size_t fallback) const;
    std::uint64_t get_u64(const std::string& key, std::uint64_t fallback) const;
    std::string get_string(const std::string& key, const std::string& fallback) const;
    bool get_bool(const std::string& key, bool fallback) const;
};

class Forecaster {
public:
    virtual ~Forecaster() = default;

    virtual std::string kind() const = 0;
    virtual void fit(const WindowedDataset& data) = 0;
    virtual double predict(std::span<const double> window) const = 0;

    /// One prediction per row of `windows`.
    virtual Vector predict_rows(const Matrix& windows) const;

    std::size_t window() const { return window_; }
    std::size_t horizon() const { return horizon_; }
    bool fitted() const { return fitted_; }
    const std::string& warning() const { return warning_; }

    /// Versioned key=value text; reservoirs are regenerated from their seed on load.
    void save(std::ostream& out) const;

protected:
    void mark_fitted(const WindowedDataset& data);
    void check_window(std::span<const double> window) const;
    virtual void save_params(std::ostream& out) const = 0;
    virtual void save_state(std::ostream& out) const = 0;

    std::size_t window_ = 0;
    std::size_t horizon_ = 0;
    bool fitted_ = false;
    std::string warning_;

    friend std::unique_ptr<Forecaster> load_forecaster(std::istream& in);
};

class PersistenceForecaster final : public Forecaster {
public:
    std::string kind() const override { return "persistence"; }
    void fit(const WindowedDataset& data) override;
    double predict(std::span<const double> window) const override;

private:
    void save_params(std::ostream&) const override {}
    void save_state(std::ostream&) const override {}
};

/// Ordinary least squares with intercept on the W window values.
class LinearForecaster final : public Forecaster {
public:
    std::string kind() const override { return "linear"; }
    void fit(const WindowedDataset& data) override;
    double predict(std::span<const double> window) const override;

    double intercept() const { return intercept_; }
    const Vector& coefficients() const { return coefficients_; }
    void set_state(double intercept, Vector coefficients, std::size_t window, std::size_t horizon);

private:
    void save_params(std::ostream&) const override {}
    void save_state(std::ostream& out) const override;

    double intercept_ = 0.0;
    Vector coefficients_;
};

/// Mean target of the k nearest training windows (Euclidean); equal
/// distances resolve to the lower training index.
class KnnForecaster final : public Forecaster {
public:
    explicit KnnForecaster(std::size_t k = 5);

    std::string kind() const override { return "knn"; }
    void fit(const WindowedDataset& data) override;
    double predict(std::span<const double> window) const override;
    std::size_t k() const { return k_; }

private:
    void save_params(std::ostream& out) const override;
    void save_state(std::ostream& out) const override;

    std::size_t k_;
    Matrix train_inputs_;
    Vector train_targets_;
    friend std::unique_ptr<Forecaster> load_forecaster(std::istream& in);
};

enum class ReadoutSolver { ridge, pinv };

struct ReadoutConfig {
    ReadoutSolver solver = ReadoutSolver::ridge;
    double lambda = kDefaultRidgeLambda;
};

/// Windowed deep ESN: every window is run from a zero state through the
/// reservoir stack and the final concatenated state feeds a linear readout.
/// Inputs and targets are standardized with training-split statistics.
class DeepEsnForecaster final : public Forecaster {
public:
    DeepEsnForecaster(DeepEsnConfig model_config, ReadoutConfig readout_config, bool standardize = true);

    std::string kind() const override { return "deepesn"; }
    void fit(const WindowedDataset& data) override;
    double predict(std::span<const double> window) const override;
    Vector predict_rows(const Matrix& windows) const override;

    const DeepEsnConfig& model_config() const { return model_config_; }
    const ReadoutConfig& readout_config() const { return readout_config_; }
    const DeepEsnModel& model() const { return *model_; }
    const ReadoutMatrix& readout() const { return readout_; }
    double center() const { return center_; }
    double scale() const { return scale_; }

private:
    void save_params(std::ostream& out) const override;
    void save_state(std::ostream& out) const override;

    DeepEsnConfig model_config_;
    ReadoutConfig readout_config_;
    bool standardize_;
    std::unique_ptr<DeepEsnModel> model_;
    ReadoutMatrix readout_;
    double center_ = 0.0;
    double scale_ = 1.0;
    friend std::unique_ptr<Forecaster> load_forecaster(std::istream& in);
};

LinearForecaster fit_linear(const WindowedDataset& data);
KnnForecaster fit_knn(const WindowedDataset& data, std::size_t k);
DeepEsnForecaster deep_esn_forecaster(const DeepEsnConfig& model_config, const ReadoutConfig& readout_config);

/// Deep ESN configuration from model parameters: layers, units, leak_rate,
/// density, spectral_target, input_scale, activation, seed, include_input.
DeepEsnConfig deep_esn_config_from(const ModelSpec& spec);
ReadoutConfig readout_config_from(const ModelSpec& spec);

/// Builds an unfitted forecaster. Kinds: persistence, linear, knn, deepesn.
std::unique_ptr<Forecaster> make_forecaster(const ModelSpec& spec);

using ForecasterFactory = std::function<std::unique_ptr<Forecaster>()>;
ForecasterFactory make_factory(const ModelSpec& spec);

std::unique_ptr<Forecaster> load_forecaster(std::istream& in);

}  // namespace deepesn
