#pragma once

// Single and stacked (deep) echo state reservoirs.
//
// Each layer follows the leaky recurrence
//
//     x(t+1) = (1 - a) x(t) + a f(W x(t) + W_in u(t+1))
//
// where u is the external input for the first layer and the freshly updated
// state of the layer below for every deeper one. No bias and no output
// feedback. Recurrent weights are rescaled at construction so that
// rho((1 - a) I + a W) equals the configured spectral target, which keeps the
// whole stack inside the echo state regime.

#include "deepesn/common.hpp"

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace deepesn {

enum class Activation { tanh, identity };

std::string_view to_string(Activation activation);
Activation parse_activation(std::string_view name);

struct LayerConfig {
    std::size_t units = 100;
    double leak_rate = 1.0;
    double density = 0.1;
    double spectral_target = 0.9;
    double input_scale = 1.0;
    Activation activation = Activation::tanh;

    /// Throws std::invalid_argument if a field is outside its domain.
    void validate() const;
};

/// Largest absolute eigenvalue. Dense eigendecomposition up to a few hundred
/// rows, power iteration with restarts above that.
double spectral_radius(const Matrix& m);

/// rho((1 - leak) I + leak W).
double leaky_spectral_radius(const Matrix& w, double leak_rate);

/// Scale s >= 0 such that rho((1 - leak) I + leak s W) == target, rounded
/// toward the stable side. Throws NumericalError when rho(W) == 0 and
/// std::invalid_argument when target <= 1 - leak (no positive scale can reach it).
double echo_state_scale(const Matrix& w, double leak_rate, double target);

class EsnLayer {
public:
    /// Takes the weights as given; no rescaling.
    EsnLayer(LayerConfig config, Matrix w_res, Matrix w_in);

    const LayerConfig& config() const { return config_; }
    const Matrix& w_res() const { return w_res_; }
    const Matrix& w_in() const { return w_in_; }
    std::size_t units() const { return config_.units; }
    std::size_t input_dim() const { return static_cast<std::size_t>(w_in_.cols()); }

    const Vector& state() const { return state_; }
    void reset() { state_.setZero(); }

    /// Advances the layer's own state by one step and returns it.
    const Vector& step(const Eigen::Ref<const Vector>& input);

    /// Applies one step to an external state buffer, leaving the layer untouched.
    void advance(Vector& state, const Eigen::Ref<const Vector>& input) const;

private:
    LayerConfig config_;
    Matrix w_res_;
    Matrix w_in_;
    Vector state_;
    Vector scratch_;
};

/// Rescales `raw_w_res` to the configured echo-state target and scales
/// `raw_w_in` by input_scale.
EsnLayer make_layer(const LayerConfig& config, const Matrix& raw_w_res, const Matrix& raw_w_in);

/// Random sparse layer: `round(density * N^2)` recurrent entries (at least one)
/// drawn uniform on [-1, 1], dense uniform input weights. Deterministic in `seed`.
EsnLayer init_layer(const LayerConfig& config, std::size_t input_dim, std::uint64_t seed);

enum class StateMode { windowed, continuous };

std::string_view to_string(StateMode mode);
StateMode parse_state_mode(std::string_view name);

struct DeepEsnConfig {
    // One entry per layer, bottom first.
    std::vector<LayerConfig> layers{LayerConfig{}};
    StateMode mode = StateMode::windowed;
    bool include_input_in_readout = false;
    std::size_t washout = 50;
    std::uint64_t seed = 0;

    static DeepEsnConfig uniform(const LayerConfig& layer, std::size_t num_layers);
};

/// Seed used for layer `index` of a model created from `base_seed`.
std::uint64_t layer_seed(std::uint64_t base_seed, std::size_t index);

class DeepEsnModel {
public:
    DeepEsnModel(std::vector<EsnLayer> layers, StateMode mode = StateMode::windowed,
                 bool include_input_in_readout = false);

    static DeepEsnModel create(const DeepEsnConfig& config, std::size_t input_dim);

    std::size_t num_layers() const { return layers_.size(); }
    const EsnLayer& layer(std::size_t i) const { return layers_.at(i); }
    const std::vector<EsnLayer>& layers() const { return layers_; }
    StateMode mode() const { return mode_; }
    bool include_input_in_readout() const { return include_input_; }
    std::size_t input_dim() const { return layers_.front().input_dim(); }

    /// Sum of layer sizes.
    std::size_t state_dim() const;
    /// Width of a harvested row: state_dim, plus input_dim when the input is concatenated.
    std::size_t feature_dim() const;

    void reset_state();

    /// One step through the whole stack; returns [x1; ...; xNL].
    Vector update_state(const Eigen::Ref<const Vector>& input);

    /// Concatenated state after running `sequence` (rows = time, cols = input
    /// dim) from a zero state, without touching the stored state. Includes the
    /// last input when include_input_in_readout is set.
    Vector window_features(const Eigen::Ref<const Matrix>& sequence) const;

private:
    std::vector<EsnLayer> layers_;
    StateMode mode_;
    bool include_input_;
};

/// Continuous mode: reset once, feed `inputs` (rows = time) in order and drop
/// the first `washout` rows. Requires washout < rows.
Matrix harvest_states(DeepEsnModel& model, const Eigen::Ref<const Matrix>& inputs, std::size_t washout);

/// Windowed mode: each row of `windows` is a flattened window of
/// `window_length` consecutive inputs; one feature row per window, each run
/// from a zero state.
Matrix harvest_window_states(const DeepEsnModel& model, const Eigen::Ref<const Matrix>& windows);

}  // namespace deepesn
