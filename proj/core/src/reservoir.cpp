#include "deepesn/reservoir.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <complex>
#include <limits>
#include <numeric>
#include <random>
#include <stdexcept>
#include <utility>

namespace deepesn {

namespace {

constexpr Eigen::Index kDenseEigenLimit = 1000;

double unit_uniform(std::mt19937_64& rng) {
    return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

double symmetric_uniform(std::mt19937_64& rng) {
    return 2.0 * unit_uniform(rng) - 1.0;
}

std::uint64_t uniform_index(std::mt19937_64& rng, std::uint64_t n) {
    const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() -
                                std::numeric_limits<std::uint64_t>::max() % n;
    std::uint64_t draw = rng();
    while (draw >= limit) {
        draw = rng();
    }
    return draw % n;
}

Eigen::VectorXcd eigenvalues_of(const Matrix& m) {
    Eigen::EigenSolver<Matrix> solver(m, /*computeEigenvectors=*/false);
    if (solver.info() != Eigen::Success) {
        throw NumericalError("eigenvalue decomposition did not converge");
    }
    return solver.eigenvalues();
}

// Dominant eigenvalue modulus by power iteration. Each iterate is fitted with
// a two-term recurrence so a dominant complex-conjugate pair (where plain
// norm ratios oscillate) is resolved as well as a real one.
double power_iteration_radius(const Matrix& m) {
    const Eigen::Index n = m.rows();
    std::mt19937_64 rng(0x5eed);
    constexpr int kMaxRestarts = 8;
    constexpr int kMaxIterations = 20000;
    for (int restart = 0; restart < kMaxRestarts; ++restart) {
        Vector v(n);
        for (Eigen::Index i = 0; i < n; ++i) {
            v(i) = symmetric_uniform(rng);
        }
        v.normalize();
        double estimate = -1.0;
        int stable = 0;
        bool degenerate = false;
        for (int it = 0; it < kMaxIterations; ++it) {
            const Vector b = m * v;
            const Vector c = m * b;
            if (b.norm() == 0.0 || c.norm() == 0.0) {
                degenerate = true;
                break;
            }
            // c ~ c1 b + c0 v  =>  lambda^2 - c1 lambda - c0 = 0
            Eigen::Matrix2d gram;
            gram << b.dot(b), b.dot(v), v.dot(b), v.dot(v);
            const Eigen::Vector2d rhs(b.dot(c), v.dot(c));
            double current;
            const double det = gram.determinant();
            if (std::abs(det) <= 1e-14 * gram(0, 0) * gram(1, 1)) {
                // b parallel to v: a real dominant eigenvalue
                current = b.norm();
            } else {
                const Eigen::Vector2d coef = gram.ldlt().solve(rhs);
                const std::complex<double> disc = std::sqrt(std::complex<double>(coef(0) * coef(0) + 4.0 * coef(1)));
                const auto r1 = (coef(0) + disc) / 2.0;
                const auto r2 = (coef(0) - disc) / 2.0;
                current = std::max(std::abs(r1), std::abs(r2));
            }
            if (estimate >= 0.0 && std::abs(current - estimate) <= 1e-12 * std::max(current, 1e-300)) {
                if (++stable >= 5) {
                    return current;
                }
            } else {
                stable = 0;
            }
            estimate = current;
            v = c / c.norm();
        }
        if (!degenerate) {
            return estimate;
        }
    }
    // Every restart collapsed to zero: nilpotent to working precision.
    return 0.0;
}

Vector apply_activation(Activation activation, const Vector& v) {
    return activation == Activation::tanh ? Vector(v.array().tanh()) : v;
}

}  // namespace

std::string_view to_string(Activation activation) {
    return activation == Activation::tanh ? "tanh" : "identity";
}

Activation parse_activation(std::string_view name) {
    if (name == "tanh") {
        return Activation::tanh;
    }
    if (name == "identity" || name == "linear") {
        return Activation::identity;
    }
    throw std::invalid_argument("unknown activation '" + std::string(name) + "'");
}

std::string_view to_string(StateMode mode) {
    return mode == StateMode::windowed ? "windowed" : "continuous";
}

StateMode parse_state_mode(std::string_view name) {
    if (name == "windowed") {
        return StateMode::windowed;
    }
    if (name == "continuous") {
        return StateMode::continuous;
    }
    throw std::invalid_argument("unknown state mode '" + std::string(name) + "'");
}

void LayerConfig::validate() const {
    if (units < 1) {
        throw std::invalid_argument("LayerConfig: units must be >= 1");
    }
    if (!(leak_rate > 0.0 && leak_rate <= 1.0)) {
        throw std::invalid_argument("LayerConfig: leak_rate must lie in (0, 1]");
    }
    if (!(density > 0.0 && density <= 1.0)) {
        throw std::invalid_argument("LayerConfig: density must lie in (0, 1]");
    }
    if (!(spectral_target > 0.0 && spectral_target < 1.0)) {
        throw std::invalid_argument("LayerConfig: spectral_target must lie in (0, 1)");
    }
    if (!(input_scale > 0.0) || !std::isfinite(input_scale)) {
        throw std::invalid_argument("LayerConfig: input_scale must be positive");
    }
}

double spectral_radius(const Matrix& m) {
    if (m.rows() != m.cols()) {
        throw std::invalid_argument("spectral_radius: matrix is " + std::to_string(m.rows()) + "x" +
                                    std::to_string(m.cols()) + ", not square");
    }
    if (!m.allFinite()) {
        throw std::invalid_argument("spectral_radius: matrix has non-finite entries");
    }
    if (m.rows() == 0) {
        return 0.0;
    }
    if (m.rows() <= kDenseEigenLimit) {
        return eigenvalues_of(m).cwiseAbs().maxCoeff();
    }
    return power_iteration_radius(m);
}

double leaky_spectral_radius(const Matrix& w, double leak_rate) {
    if (w.rows() != w.cols()) {
        throw std::invalid_argument("leaky_spectral_radius: matrix is not square");
    }
    Matrix effective = leak_rate * w;
    effective.diagonal().array() += 1.0 - leak_rate;
    return spectral_radius(effective);
}

double echo_state_scale(const Matrix& w, double leak_rate, double target) {
    if (w.rows() != w.cols()) {
        throw std::invalid_argument("echo_state_scale: matrix is not square");
    }
    if (!(target > 0.0 && target < 1.0) || !(leak_rate > 0.0 && leak_rate <= 1.0)) {
        throw std::invalid_argument("echo_state_scale: target must lie in (0, 1) and leak_rate in (0, 1]");
    }
    if (leak_rate < 1.0 && target <= 1.0 - leak_rate) {
        throw std::invalid_argument("echo_state_scale: spectral target " + format_double(target) +
                                    " is unreachable with leak_rate " + format_double(leak_rate) +
                                    "; it must exceed 1 - leak_rate");
    }

    // Eigenvalues of (1 - a) I + a s W are (1 - a) + a s lambda_i, so one
    // decomposition of W serves every trial scale.
    const bool dense = w.rows() <= kDenseEigenLimit;
    Eigen::VectorXcd lambdas;
    double radius;
    if (dense) {
        lambdas = eigenvalues_of(w);
        radius = w.rows() == 0 ? 0.0 : lambdas.cwiseAbs().maxCoeff();
    } else {
        radius = power_iteration_radius(w);
    }
    if (radius <= 0.0) {
        throw NumericalError("reservoir matrix has spectral radius 0 and cannot be rescaled; "
                             "increase density or units");
    }
    if (leak_rate == 1.0) {
        return target / radius;
    }

    auto effective_radius = [&](double s) {
        if (dense) {
            double best = 0.0;
            for (Eigen::Index i = 0; i < lambdas.size(); ++i) {
                best = std::max(best, std::abs((1.0 - leak_rate) + leak_rate * s * lambdas(i)));
            }
            return best;
        }
        return leaky_spectral_radius(s * w, leak_rate);
    };

    // The effective radius is convex in s, starts at 1 - a < target and grows
    // without bound, so {s : radius(s) <= target} is an interval [0, s*].
    double lo = 0.0;
    double hi = (target + 1.0) / (leak_rate * radius);
    for (int it = 0; it < 200 && hi - lo > 1e-15 * hi; ++it) {
        const double mid = 0.5 * (lo + hi);
        if (effective_radius(mid) <= target) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    const double achieved = effective_radius(lo);
    if (std::abs(achieved - target) > 1e-6) {
        throw NumericalError("echo_state_scale: bisection reached radius " + format_double(achieved) +
                             " instead of " + format_double(target));
    }
    return lo;
}

EsnLayer::EsnLayer(LayerConfig config, Matrix w_res, Matrix w_in)
    : config_(config), w_res_(std::move(w_res)), w_in_(std::move(w_in)) {
    const auto n = static_cast<Eigen::Index>(config_.units);
    if (w_res_.rows() != n || w_res_.cols() != n) {
        throw std::invalid_argument("EsnLayer: recurrent matrix must be units x units");
    }
    if (w_in_.rows() != n || w_in_.cols() < 1) {
        throw std::invalid_argument("EsnLayer: input matrix must be units x input_dim");
    }
    if (!(config_.leak_rate > 0.0 && config_.leak_rate <= 1.0)) {
        throw std::invalid_argument("EsnLayer: leak_rate must lie in (0, 1]");
    }
    state_ = Vector::Zero(n);
    scratch_ = Vector::Zero(n);
}

void EsnLayer::advance(Vector& state, const Eigen::Ref<const Vector>& input) const {
    if (input.size() != w_in_.cols()) {
        throw std::invalid_argument("EsnLayer: input has dimension " + std::to_string(input.size()) +
                                    ", expected " + std::to_string(w_in_.cols()));
    }
    Vector pre = w_res_ * state + w_in_ * input;
    const double a = config_.leak_rate;
    state = (1.0 - a) * state + a * apply_activation(config_.activation, pre);
}

const Vector& EsnLayer::step(const Eigen::Ref<const Vector>& input) {
    advance(state_, input);
    return state_;
}

EsnLayer make_layer(const LayerConfig& config, const Matrix& raw_w_res, const Matrix& raw_w_in) {
    config.validate();
    const double scale = echo_state_scale(raw_w_res, config.leak_rate, config.spectral_target);
    return EsnLayer(config, scale * raw_w_res, config.input_scale * raw_w_in);
}

EsnLayer init_layer(const LayerConfig& config, std::size_t input_dim, std::uint64_t seed) {
    config.validate();
    if (input_dim < 1) {
        throw std::invalid_argument("init_layer: input_dim must be >= 1");
    }
    const std::size_t n = config.units;
    const std::size_t cells = n * n;
    const auto nonzero = std::clamp<std::size_t>(
        static_cast<std::size_t>(std::llround(config.density * static_cast<double>(cells))), 1, cells);

    std::mt19937_64 rng(seed);
    std::vector<std::uint32_t> positions(cells);
    std::iota(positions.begin(), positions.end(), 0u);
    for (std::size_t i = 0; i < nonzero; ++i) {
        const auto j = i + uniform_index(rng, cells - i);
        std::swap(positions[i], positions[j]);
    }
    Matrix w = Matrix::Zero(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
    for (std::size_t i = 0; i < nonzero; ++i) {
        const auto cell = positions[i];
        double value = symmetric_uniform(rng);
        while (value == 0.0) {
            value = symmetric_uniform(rng);
        }
        w(cell / n, cell % n) = value;
    }
    Matrix w_in(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(input_dim));
    for (Eigen::Index r = 0; r < w_in.rows(); ++r) {
        for (Eigen::Index c = 0; c < w_in.cols(); ++c) {
            w_in(r, c) = symmetric_uniform(rng);
        }
    }
    return make_layer(config, w, w_in);
}

DeepEsnConfig DeepEsnConfig::uniform(const LayerConfig& layer, std::size_t num_layers) {
    DeepEsnConfig config;
    config.layers.assign(num_layers, layer);
    return config;
}

std::uint64_t layer_seed(std::uint64_t base_seed, std::size_t index) {
    return mix_seed(base_seed, index);
}

DeepEsnModel::DeepEsnModel(std::vector<EsnLayer> layers, StateMode mode, bool include_input_in_readout)
    : layers_(std::move(layers)), mode_(mode), include_input_(include_input_in_readout) {
    if (layers_.empty()) {
        throw std::invalid_argument("DeepEsnModel: at least one layer is required");
    }
    for (std::size_t n = 1; n < layers_.size(); ++n) {
        if (layers_[n].input_dim() != layers_[n - 1].units()) {
            throw std::invalid_argument("DeepEsnModel: layer " + std::to_string(n + 1) +
                                        " input dimension must equal layer " + std::to_string(n) + " units");
        }
    }
}

DeepEsnModel DeepEsnModel::create(const DeepEsnConfig& config, std::size_t input_dim) {
    if (config.layers.empty()) {
        throw std::invalid_argument("DeepEsnConfig: at least one layer is required");
    }
    std::vector<EsnLayer> layers;
    layers.reserve(config.layers.size());
    std::size_t fan_in = input_dim;
    for (std::size_t n = 0; n < config.layers.size(); ++n) {
        layers.push_back(init_layer(config.layers[n], fan_in, layer_seed(config.seed, n)));
        fan_in = config.layers[n].units;
    }
    return DeepEsnModel(std::move(layers), config.mode, config.include_input_in_readout);
}

std::size_t DeepEsnModel::state_dim() const {
    std::size_t total = 0;
    for (const auto& layer : layers_) {
        total += layer.units();
    }
    return total;
}

std::size_t DeepEsnModel::feature_dim() const {
    return state_dim() + (include_input_ ? input_dim() : 0);
}

void DeepEsnModel::reset_state() {
    for (auto& layer : layers_) {
        layer.reset();
    }
}

Vector DeepEsnModel::update_state(const Eigen::Ref<const Vector>& input) {
    if (input.size() != static_cast<Eigen::Index>(input_dim())) {
        throw std::invalid_argument("update_state: input has dimension " + std::to_string(input.size()) +
                                    ", expected " + std::to_string(input_dim()));
    }
    Vector out(static_cast<Eigen::Index>(state_dim()));
    Eigen::Index offset = 0;
    const Vector* feed = nullptr;
    for (std::size_t n = 0; n < layers_.size(); ++n) {
        const Vector& x = n == 0 ? layers_[n].step(input) : layers_[n].step(*feed);
        out.segment(offset, x.size()) = x;
        offset += x.size();
        feed = &layers_[n].state();
    }
    return out;
}

Vector DeepEsnModel::window_features(const Eigen::Ref<const Matrix>& sequence) const {
    if (sequence.cols() != static_cast<Eigen::Index>(input_dim()) || sequence.rows() < 1) {
        throw std::invalid_argument("window_features: sequence must be non-empty with input_dim columns");
    }
    std::vector<Vector> states;
    states.reserve(layers_.size());
    for (const auto& layer : layers_) {
        states.push_back(Vector::Zero(static_cast<Eigen::Index>(layer.units())));
    }
    for (Eigen::Index t = 0; t < sequence.rows(); ++t) {
        const Vector u = sequence.row(t).transpose();
        layers_[0].advance(states[0], u);
        for (std::size_t n = 1; n < layers_.size(); ++n) {
            layers_[n].advance(states[n], states[n - 1]);
        }
    }
    Vector out(static_cast<Eigen::Index>(feature_dim()));
    Eigen::Index offset = 0;
    for (const auto& x : states) {
        out.segment(offset, x.size()) = x;
        offset += x.size();
    }
    if (include_input_) {
        out.tail(sequence.cols()) = sequence.row(sequence.rows() - 1).transpose();
    }
    return out;
}

Matrix harvest_states(DeepEsnModel& model, const Eigen::Ref<const Matrix>& inputs, std::size_t washout) {
    if (inputs.rows() == 0) {
        throw std::invalid_argument("harvest_states: empty input sequence");
    }
    if (washout >= static_cast<std::size_t>(inputs.rows())) {
        throw std::invalid_argument("harvest_states: washout " + std::to_string(washout) +
                                    " leaves no states from " + std::to_string(inputs.rows()) + " inputs");
    }
    if (inputs.cols() != static_cast<Eigen::Index>(model.input_dim())) {
        throw std::invalid_argument("harvest_states: input dimension mismatch");
    }
    const auto kept = inputs.rows() - static_cast<Eigen::Index>(washout);
    Matrix out(kept, static_cast<Eigen::Index>(model.feature_dim()));
    const auto state_dim = static_cast<Eigen::Index>(model.state_dim());
    model.reset_state();
    for (Eigen::Index t = 0; t < inputs.rows(); ++t) {
        const Vector u = inputs.row(t).transpose();
        const Vector x = model.update_state(u);
        const Eigen::Index row = t - static_cast<Eigen::Index>(washout);
        if (row >= 0) {
            out.row(row).head(state_dim) = x.transpose();
            if (model.include_input_in_readout()) {
                out.row(row).tail(u.size()) = u.transpose();
            }
        }
    }
    return out;
}

Matrix harvest_window_states(const DeepEsnModel& model, const Eigen::Ref<const Matrix>& windows) {
    if (windows.rows() == 0) {
        throw std::invalid_argument("harvest_window_states: no windows");
    }
    const auto k = static_cast<Eigen::Index>(model.input_dim());
    if (windows.cols() == 0 || windows.cols() % k != 0) {
        throw std::invalid_argument("harvest_window_states: window width is not a multiple of input_dim");
    }
    const Eigen::Index length = windows.cols() / k;
    Matrix out(windows.rows(), static_cast<Eigen::Index>(model.feature_dim()));
    Matrix sequence(length, k);
    for (Eigen::Index i = 0; i < windows.rows(); ++i) {
        // Consecutive k-blocks of the row are consecutive steps. Explicit
        // indexing: reshaping a strided row view reads the wrong elements.
        for (Eigen::Index t = 0; t < length; ++t) {
            for (Eigen::Index j = 0; j < k; ++j) {
                sequence(t, j) = windows(i, t * k + j);
            }
        }
        out.row(i) = model.window_features(sequence).transpose();
    }
    return out;
}

}  // namespace deepesn
