#include "deepesn/models.hpp"

#include <Eigen/QR>

#include <algorithm>
#include <cmath>
#include <istream>
#include <numeric>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <utility>
#include <vector>

namespace deepesn {

namespace {

constexpr std::string_view kModelMagic = "# deepesn-model v1";

std::string join_row(const Eigen::Ref<const Vector>& values) {
    std::string out;
    for (Eigen::Index i = 0; i < values.size(); ++i) {
        if (i) {
            out += ' ';
        }
        out += format_double(values(i));
    }
    return out;
}

Vector parse_row(const std::string& text) {
    std::vector<double> values;
    std::istringstream in(text);
    std::string token;
    while (in >> token) {
        values.push_back(parse_double(token));
    }
    return Eigen::Map<Vector>(values.data(), static_cast<Eigen::Index>(values.size()));
}

// Reads "key=value" lines after the magic header, preserving order.
std::vector<std::pair<std::string, std::string>> read_fields(std::istream& in) {
    std::string line;
    if (!std::getline(in, line) || trim(line) != kModelMagic) {
        throw DataError("model file: unrecognized header (expected '" + std::string(kModelMagic) + "')");
    }
    std::vector<std::pair<std::string, std::string>> fields;
    while (std::getline(in, line)) {
        if (line.empty() || line.starts_with('#')) {
            continue;
        }
        if (line == "end") {
            return fields;
        }
        const auto eq = line.find('=');
        if (eq == std::string::npos) {
            throw DataError("model file: malformed line '" + line + "'");
        }
        fields.emplace_back(line.substr(0, eq), line.substr(eq + 1));
    }
    throw DataError("model file: truncated (missing 'end')");
}

const std::string& field(const std::vector<std::pair<std::string, std::string>>& fields, const std::string& key) {
    for (const auto& [k, v] : fields) {
        if (k == key) {
            return v;
        }
    }
    throw DataError("model file: missing field '" + key + "'");
}

std::vector<std::string> fields_named(const std::vector<std::pair<std::string, std::string>>& fields,
                                      const std::string& key) {
    std::vector<std::string> out;
    for (const auto& [k, v] : fields) {
        if (k == key) {
            out.push_back(v);
        }
    }
    return out;
}

std::size_t to_size(const std::string& text) {
    const double v = parse_double(text);
    if (!(v >= 0.0) || v != std::floor(v)) {
        throw std::invalid_argument("expected a non-negative integer, got '" + text + "'");
    }
    return static_cast<std::size_t>(v);
}

ModelSpec spec_from_fields(const std::vector<std::pair<std::string, std::string>>& fields) {
    ModelSpec spec;
    spec.kind = field(fields, "kind");
    for (const auto& [k, v] : fields) {
        if (k.starts_with("param.")) {
            spec.params[k.substr(6)] = v;
        }
    }
    return spec;
}

}  // namespace

WindowedDataset make_windows_for_targets(std::span<const double> series, std::size_t window, std::size_t horizon,
                                         std::size_t target_begin, std::size_t target_end) {
    if (window < 1 || horizon < 1) {
        throw std::invalid_argument("make_windows: window and horizon must be >= 1");
    }
    const std::size_t lead = window + horizon - 1;  // slots between window start and target
    target_begin = std::max(target_begin, lead);
    target_end = std::min(target_end, series.size());
    if (target_end <= target_begin) {
        throw std::invalid_argument("make_windows: series of length " + std::to_string(series.size()) +
                                    " yields no windows for W=" + std::to_string(window) +
                                    ", h=" + std::to_string(horizon));
    }
    const auto count = static_cast<Eigen::Index>(target_end - target_begin);
    WindowedDataset data;
    data.window = window;
    data.horizon = horizon;
    data.inputs.resize(count, static_cast<Eigen::Index>(window));
    data.targets.resize(count);
    for (Eigen::Index i = 0; i < count; ++i) {
        const std::size_t target = target_begin + static_cast<std::size_t>(i);
        const std::size_t first = target - lead;
        for (std::size_t j = 0; j < window; ++j) {
            data.inputs(i, static_cast<Eigen::Index>(j)) = series[first + j];
        }
        data.targets(i) = series[target];
    }
    return data;
}

WindowedDataset make_windows(std::span<const double> series, std::size_t window, std::size_t horizon) {
    if (series.size() < window + horizon) {
        throw std::invalid_argument("make_windows: series length " + std::to_string(series.size()) +
                                    " < W + h = " + std::to_string(window + horizon));
    }
    return make_windows_for_targets(series, window, horizon, 0, series.size());
}

WindowedDataset make_windows(const TimeSeries& series, std::size_t window, std::size_t horizon) {
    if (!series.complete()) {
        throw DataError("make_windows: series '" + series.sensor_id() + "' still has missing slots; impute first");
    }
    return make_windows(series.values(), window, horizon);
}

double persistence_forecast(std::span<const double> window, std::size_t /*horizon*/) {
    if (window.empty()) {
        throw std::invalid_argument("persistence_forecast: empty window");
    }
    return window.back();
}

double rmse(std::span<const double> actual, std::span<const double> predicted) {
    if (actual.size() != predicted.size()) {
        throw std::invalid_argument("rmse: length mismatch");
    }
    if (actual.empty()) {
        throw std::invalid_argument("rmse: empty input");
    }
    double sum = 0.0;
    for (std::size_t i = 0; i < actual.size(); ++i) {
        const double e = actual[i] - predicted[i];
        sum += e * e;
    }
    return std::sqrt(sum / static_cast<double>(actual.size()));
}

double r2(std::span<const double> actual, std::span<const double> predicted) {
    if (actual.size() != predicted.size()) {
        throw std::invalid_argument("r2: length mismatch");
    }
    if (actual.size() < 2) {
        throw std::invalid_argument("r2: at least two observations are required");
    }
    const double mean = std::accumulate(actual.begin(), actual.end(), 0.0) / static_cast<double>(actual.size());
    double residual = 0.0;
    double total = 0.0;
    for (std::size_t i = 0; i < actual.size(); ++i) {
        residual += (actual[i] - predicted[i]) * (actual[i] - predicted[i]);
        total += (actual[i] - mean) * (actual[i] - mean);
    }
    if (total == 0.0) {
        throw std::domain_error("r2: constant test segment");
    }
    return 1.0 - residual / total;
}

double ModelSpec::get_double(const std::string& key, double fallback) const {
    const auto it = params.find(key);
    if (it == params.end()) {
        return fallback;
    }
    try {
        return parse_double(it->second);
    } catch (const std::invalid_argument&) {
        throw ConfigError("model '" + name + "': parameter '" + key + "' is not a number");
    }
}

std::size_t ModelSpec::get_size(const std::string& key, std::size_t fallback) const {
    const auto it = params.find(key);
    if (it == params.end()) {
        return fallback;
    }
    try {
        return to_size(it->second);
    } catch (const std::invalid_argument&) {
        throw ConfigError("model '" + name + "': parameter '" + key + "' must be a non-negative integer");
    }
}

std::uint64_t ModelSpec::get_u64(const std::string& key, std::uint64_t fallback) const {
    const auto it = params.find(key);
    if (it == params.end()) {
        return fallback;
    }
    try {
        std::size_t used = 0;
        const auto value = std::stoull(it->second, &used);
        if (used != it->second.size()) {
            throw std::invalid_argument("trailing characters");
        }
        return value;
    } catch (const std::exception&) {
        throw ConfigError("model '" + name + "': parameter '" + key + "' must be an unsigned integer");
    }
}

std::string ModelSpec::get_string(const std::string& key, const std::string& fallback) const {
    const auto it = params.find(key);
    return it == params.end() ? fallback : it->second;
}

bool ModelSpec::get_bool(const std::string& key, bool fallback) const {
    const auto it = params.find(key);
    if (it == params.end()) {
        return fallback;
    }
    if (it->second == "true" || it->second == "1") {
        return true;
    }
    if (it->second == "false" || it->second == "0") {
        return false;
    }
    throw ConfigError("model '" + name + "': parameter '" + key + "' must be a boolean");
}

Vector Forecaster::predict_rows(const Matrix& windows) const {
    Vector out(windows.rows());
    std::vector<double> buffer(static_cast<std::size_t>(windows.cols()));
    for (Eigen::Index i = 0; i < windows.rows(); ++i) {
        Eigen::Map<Eigen::RowVectorXd>(buffer.data(), windows.cols()) = windows.row(i);
        out(i) = predict(buffer);
    }
    return out;
}

void Forecaster::mark_fitted(const WindowedDataset& data) {
    window_ = data.window;
    horizon_ = data.horizon;
    fitted_ = true;
}

void Forecaster::check_window(std::span<const double> window) const {
    if (!fitted_) {
        throw std::logic_error(kind() + ": predict called before fit");
    }
    if (window.size() != window_) {
        throw std::invalid_argument(kind() + ": window has " + std::to_string(window.size()) +
                                    " values, model was fitted with W=" + std::to_string(window_));
    }
}

void Forecaster::save(std::ostream& out) const {
    if (!fitted_) {
        throw std::logic_error("cannot save an unfitted " + kind() + " model");
    }
    out << kModelMagic << '\n'
        << "kind=" << kind() << '\n'
        << "window=" << window_ << '\n'
        << "horizon=" << horizon_ << '\n';
    save_params(out);
    save_state(out);
    out << "end\n";
}

void PersistenceForecaster::fit(const WindowedDataset& data) {
    if (data.window < 1) {
        throw std::invalid_argument("persistence: window must be >= 1");
    }
    mark_fitted(data);
}

double PersistenceForecaster::predict(std::span<const double> window) const {
    check_window(window);
    return persistence_forecast(window, horizon_);
}

void LinearForecaster::fit(const WindowedDataset& data) {
    const Eigen::Index m = data.inputs.rows();
    const Eigen::Index w = data.inputs.cols();
    if (m < 1) {
        throw std::invalid_argument("linear: empty dataset");
    }
    Matrix design(m, w + 1);
    design.col(0).setOnes();
    design.rightCols(w) = data.inputs;
    Eigen::ColPivHouseholderQR<Matrix> qr(design);
    Vector beta;
    warning_.clear();
    if (qr.rank() == w + 1) {
        beta = qr.solve(data.targets);
    } else {
        // Degenerate design: a tiny ridge keeps the solve defined.
        const double lambda = 1e-10 * std::max(1.0, design.squaredNorm() / static_cast<double>(w + 1));
        Matrix augmented(m + w + 1, w + 1);
        augmented.topRows(m) = design;
        augmented.bottomRows(w + 1) = std::sqrt(lambda) * Matrix::Identity(w + 1, w + 1);
        Vector rhs = Vector::Zero(m + w + 1);
        rhs.head(m) = data.targets;
        beta = Eigen::ColPivHouseholderQR<Matrix>(augmented).solve(rhs);
        warning_ = "linear: rank-deficient design (rank " + std::to_string(qr.rank()) + " of " +
                   std::to_string(w + 1) + "); fitted with ridge lambda " + format_double(lambda);
    }
    intercept_ = beta(0);
    coefficients_ = beta.tail(w);
    mark_fitted(data);
}

double LinearForecaster::predict(std::span<const double> window) const {
    check_window(window);
    const Eigen::Map<const Vector> x(window.data(), static_cast<Eigen::Index>(window.size()));
    return intercept_ + coefficients_.dot(x);
}

void LinearForecaster::set_state(double intercept, Vector coefficients, std::size_t window, std::size_t horizon) {
    if (static_cast<std::size_t>(coefficients.size()) != window) {
        throw std::invalid_argument("linear: coefficient count must equal window");
    }
    intercept_ = intercept;
    coefficients_ = std::move(coefficients);
    window_ = window;
    horizon_ = horizon;
    fitted_ = true;
}

void LinearForecaster::save_state(std::ostream& out) const {
    out << "intercept=" << format_double(intercept_) << '\n' << "coef=" << join_row(coefficients_) << '\n';
}

KnnForecaster::KnnForecaster(std::size_t k) : k_(k) {
    if (k_ < 1) {
        throw std::invalid_argument("knn: k must be >= 1");
    }
}

void KnnForecaster::fit(const WindowedDataset& data) {
    if (k_ > data.size()) {
        throw std::invalid_argument("knn: k=" + std::to_string(k_) + " exceeds the " +
                                    std::to_string(data.size()) + " training windows");
    }
    train_inputs_ = data.inputs;
    train_targets_ = data.targets;
    mark_fitted(data);
}

double KnnForecaster::predict(std::span<const double> window) const {
    check_window(window);
    const Eigen::Map<const Eigen::RowVectorXd> x(window.data(), static_cast<Eigen::Index>(window.size()));
    const Vector distances = (train_inputs_.rowwise() - x).rowwise().squaredNorm();
    std::vector<Eigen::Index> order(static_cast<std::size_t>(distances.size()));
    std::iota(order.begin(), order.end(), Eigen::Index{0});
    const auto by_distance = [&](Eigen::Index a, Eigen::Index b) {
        return distances(a) < distances(b) || (distances(a) == distances(b) && a < b);
    };
    std::partial_sort(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(k_), order.end(), by_distance);
    double sum = 0.0;
    for (std::size_t i = 0; i < k_; ++i) {
        sum += train_targets_(order[i]);
    }
    return sum / static_cast<double>(k_);
}

void KnnForecaster::save_params(std::ostream& out) const {
    out << "param.k=" << k_ << '\n';
}

void KnnForecaster::save_state(std::ostream& out) const {
    out << "rows=" << train_inputs_.rows() << '\n';
    for (Eigen::Index i = 0; i < train_inputs_.rows(); ++i) {
        out << "row=" << join_row(train_inputs_.row(i).transpose()) << ' ' << format_double(train_targets_(i))
            << '\n';
    }
}

DeepEsnForecaster::DeepEsnForecaster(DeepEsnConfig model_config, ReadoutConfig readout_config, bool standardize)
    : model_config_(std::move(model_config)), readout_config_(readout_config), standardize_(standardize) {
    if (model_config_.mode != StateMode::windowed) {
        throw std::invalid_argument("deepesn forecaster: only windowed state mode is supported");
    }
    if (model_config_.layers.empty()) {
        throw std::invalid_argument("deepesn forecaster: at least one layer is required");
    }
    for (const auto& layer : model_config_.layers) {
        layer.validate();
    }
    if (!(readout_config_.lambda >= 0.0)) {
        throw std::invalid_argument("deepesn forecaster: lambda must be >= 0");
    }
}

void DeepEsnForecaster::fit(const WindowedDataset& data) {
    if (data.size() < 1) {
        throw std::invalid_argument("deepesn: empty dataset");
    }
    center_ = 0.0;
    scale_ = 1.0;
    if (standardize_) {
        center_ = data.inputs.mean();
        const double variance = (data.inputs.array() - center_).square().mean();
        scale_ = variance > 0.0 ? std::sqrt(variance) : 1.0;
    }
    model_ = std::make_unique<DeepEsnModel>(DeepEsnModel::create(model_config_, 1));
    const Matrix inputs = (data.inputs.array() - center_) / scale_;
    const Matrix targets = (data.targets.array() - center_) / scale_;
    const Matrix features = harvest_window_states(*model_, inputs);
    readout_ = readout_config_.solver == ReadoutSolver::ridge ? fit_ridge(features, targets, readout_config_.lambda)
                                                               : fit_pinv(features, targets);
    mark_fitted(data);
}

double DeepEsnForecaster::predict(std::span<const double> window) const {
    check_window(window);
    Matrix sequence(static_cast<Eigen::Index>(window.size()), 1);
    for (std::size_t i = 0; i < window.size(); ++i) {
        sequence(static_cast<Eigen::Index>(i), 0) = (window[i] - center_) / scale_;
    }
    const Vector features = model_->window_features(sequence);
    return deepesn::predict(readout_, features)(0) * scale_ + center_;
}

Vector DeepEsnForecaster::predict_rows(const Matrix& windows) const {
    if (!fitted_) {
        throw std::logic_error("deepesn: predict called before fit");
    }
    if (static_cast<std::size_t>(windows.cols()) != window_) {
        throw std::invalid_argument("deepesn: window width mismatch");
    }
    const Matrix inputs = (windows.array() - center_) / scale_;
    const Matrix features = harvest_window_states(*model_, inputs);
    return (deepesn::predict_rows(readout_, features).col(0).array() * scale_ + center_).matrix();
}

void DeepEsnForecaster::save_params(std::ostream& out) const {
    out << "param.layers=" << model_config_.layers.size() << '\n';
    for (std::size_t n = 0; n < model_config_.layers.size(); ++n) {
        const auto& layer = model_config_.layers[n];
        const std::string prefix = "param.layer" + std::to_string(n + 1) + ".";
        out << prefix << "units=" << layer.units << '\n'
            << prefix << "leak_rate=" << format_double(layer.leak_rate) << '\n'
            << prefix << "density=" << format_double(layer.density) << '\n'
            << prefix << "spectral_target=" << format_double(layer.spectral_target) << '\n'
            << prefix << "input_scale=" << format_double(layer.input_scale) << '\n'
            << prefix << "activation=" << to_string(layer.activation) << '\n';
    }
    out << "param.seed=" << model_config_.seed << '\n'
        << "param.include_input=" << (model_config_.include_input_in_readout ? "true" : "false") << '\n'
        << "param.solver=" << (readout_config_.solver == ReadoutSolver::ridge ? "ridge" : "pinv") << '\n'
        << "param.lambda=" << format_double(readout_config_.lambda) << '\n'
        << "param.standardize=" << (standardize_ ? "true" : "false") << '\n';
}

void DeepEsnForecaster::save_state(std::ostream& out) const {
    out << "center=" << format_double(center_) << '\n'
        << "scale=" << format_double(scale_) << '\n'
        << "readout.activation=" << to_string(readout_.output_activation) << '\n'
        << "readout.rows=" << readout_.weights.rows() << '\n';
    for (Eigen::Index i = 0; i < readout_.weights.rows(); ++i) {
        out << "readout.row=" << join_row(readout_.weights.row(i).transpose()) << '\n';
    }
}

LinearForecaster fit_linear(const WindowedDataset& data) {
    LinearForecaster model;
    model.fit(data);
    return model;
}

KnnForecaster fit_knn(const WindowedDataset& data, std::size_t k) {
    KnnForecaster model(k);
    model.fit(data);
    return model;
}

DeepEsnForecaster deep_esn_forecaster(const DeepEsnConfig& model_config, const ReadoutConfig& readout_config) {
    return DeepEsnForecaster(model_config, readout_config);
}

DeepEsnConfig deep_esn_config_from(const ModelSpec& spec) {
    const std::size_t num_layers = spec.get_size("layers", 2);
    if (num_layers < 1) {
        throw ConfigError("model '" + spec.name + "': layers must be >= 1");
    }
    LayerConfig shared;
    shared.units = spec.get_size("units", shared.units);
    shared.leak_rate = spec.get_double("leak_rate", shared.leak_rate);
    shared.density = spec.get_double("density", shared.density);
    shared.spectral_target = spec.get_double("spectral_target", shared.spectral_target);
    shared.input_scale = spec.get_double("input_scale", shared.input_scale);
    shared.activation = parse_activation(spec.get_string("activation", std::string(to_string(shared.activation))));

    DeepEsnConfig config = DeepEsnConfig::uniform(shared, num_layers);
    for (std::size_t n = 0; n < num_layers; ++n) {
        const std::string prefix = "layer" + std::to_string(n + 1) + ".";
        auto& layer = config.layers[n];
        layer.units = spec.get_size(prefix + "units", layer.units);
        layer.leak_rate = spec.get_double(prefix + "leak_rate", layer.leak_rate);
        layer.density = spec.get_double(prefix + "density", layer.density);
        layer.spectral_target = spec.get_double(prefix + "spectral_target", layer.spectral_target);
        layer.input_scale = spec.get_double(prefix + "input_scale", layer.input_scale);
        layer.activation =
            parse_activation(spec.get_string(prefix + "activation", std::string(to_string(layer.activation))));
        try {
            layer.validate();
        } catch (const std::invalid_argument& e) {
            throw ConfigError("model '" + spec.name + "', layer " + std::to_string(n + 1) + ": " + e.what());
        }
    }
    config.mode = StateMode::windowed;
    config.include_input_in_readout = spec.get_bool("include_input", false);
    config.seed = spec.get_u64("seed", 0);
    return config;
}

ReadoutConfig readout_config_from(const ModelSpec& spec) {
    ReadoutConfig config;
    const std::string solver = spec.get_string("solver", "ridge");
    if (solver == "ridge") {
        config.solver = ReadoutSolver::ridge;
    } else if (solver == "pinv") {
        config.solver = ReadoutSolver::pinv;
    } else {
        throw ConfigError("model '" + spec.name + "': unknown readout solver '" + solver + "'");
    }
    config.lambda = spec.get_double("lambda", config.lambda);
    if (!(config.lambda >= 0.0)) {
        throw ConfigError("model '" + spec.name + "': lambda must be >= 0");
    }
    return config;
}

std::unique_ptr<Forecaster> make_forecaster(const ModelSpec& spec) {
    if (spec.kind == "persistence") {
        return std::make_unique<PersistenceForecaster>();
    }
    if (spec.kind == "linear") {
        return std::make_unique<LinearForecaster>();
    }
    if (spec.kind == "knn") {
        const std::size_t k = spec.get_size("k", 5);
        if (k < 1) {
            throw ConfigError("model '" + spec.name + "': k must be >= 1");
        }
        return std::make_unique<KnnForecaster>(k);
    }
    if (spec.kind == "deepesn") {
        return std::make_unique<DeepEsnForecaster>(deep_esn_config_from(spec), readout_config_from(spec),
                                                   spec.get_bool("standardize", true));
    }
    throw ConfigError("unknown model kind '" + spec.kind + "'");
}

ForecasterFactory make_factory(const ModelSpec& spec) {
    // Validate eagerly so configuration errors surface before any fitting.
    make_forecaster(spec);
    return [spec] { return make_forecaster(spec); };
}

std::unique_ptr<Forecaster> load_forecaster(std::istream& in) {
    const auto fields = read_fields(in);
    ModelSpec spec = spec_from_fields(fields);
    spec.name = "loaded";
    const std::size_t window = to_size(field(fields, "window"));
    const std::size_t horizon = to_size(field(fields, "horizon"));

    if (spec.kind == "persistence") {
        auto model = std::make_unique<PersistenceForecaster>();
        model->window_ = window;
        model->horizon_ = horizon;
        model->fitted_ = true;
        return model;
    }
    if (spec.kind == "linear") {
        auto model = std::make_unique<LinearForecaster>();
        model->set_state(parse_double(field(fields, "intercept")), parse_row(field(fields, "coef")), window,
                         horizon);
        return model;
    }
    if (spec.kind == "knn") {
        auto model = std::make_unique<KnnForecaster>(spec.get_size("k", 5));
        const auto rows = fields_named(fields, "row");
        if (rows.size() != to_size(field(fields, "rows"))) {
            throw DataError("model file: knn row count mismatch");
        }
        model->train_inputs_.resize(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(window));
        model->train_targets_.resize(static_cast<Eigen::Index>(rows.size()));
        for (std::size_t i = 0; i < rows.size(); ++i) {
            const Vector values = parse_row(rows[i]);
            if (static_cast<std::size_t>(values.size()) != window + 1) {
                throw DataError("model file: knn row has the wrong width");
            }
            model->train_inputs_.row(static_cast<Eigen::Index>(i)) = values.head(values.size() - 1).transpose();
            model->train_targets_(static_cast<Eigen::Index>(i)) = values(values.size() - 1);
        }
        model->window_ = window;
        model->horizon_ = horizon;
        model->fitted_ = true;
        return model;
    }
    if (spec.kind == "deepesn") {
        auto model = std::make_unique<DeepEsnForecaster>(deep_esn_config_from(spec), readout_config_from(spec),
                                                         spec.get_bool("standardize", true));
        model->model_ = std::make_unique<DeepEsnModel>(DeepEsnModel::create(model->model_config_, 1));
        model->center_ = parse_double(field(fields, "center"));
        model->scale_ = parse_double(field(fields, "scale"));
        const auto rows = fields_named(fields, "readout.row");
        if (rows.size() != to_size(field(fields, "readout.rows")) || rows.empty()) {
            throw DataError("model file: readout row count mismatch");
        }
        const auto width = static_cast<Eigen::Index>(model->model_->feature_dim());
        Matrix weights(static_cast<Eigen::Index>(rows.size()), width);
        for (std::size_t i = 0; i < rows.size(); ++i) {
            const Vector values = parse_row(rows[i]);
            if (values.size() != width) {
                throw DataError("model file: readout width does not match the regenerated reservoir");
            }
            weights.row(static_cast<Eigen::Index>(i)) = values.transpose();
        }
        model->readout_ = ReadoutMatrix{std::move(weights), model->readout_config_.lambda,
                                        parse_activation(field(fields, "readout.activation"))};
        model->window_ = window;
        model->horizon_ = horizon;
        model->fitted_ = true;
        return model;
    }
    throw DataError("model file: unknown kind '" + spec.kind + "'");
}

}  // namespace deepesn
