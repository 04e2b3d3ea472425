#pragma once

// Linear readout fitted in closed form on harvested reservoir states.

#include "deepesn/common.hpp"
#include "deepesn/reservoir.hpp"

namespace deepesn {

inline constexpr double kDefaultRidgeLambda = 1e-6;

struct ReadoutMatrix {
    // L x D; row l maps a D-wide feature row to output l.
    Matrix weights;
    double ridge_lambda = 0.0;
    Activation output_activation = Activation::identity;

    std::size_t input_dim() const { return static_cast<std::size_t>(weights.cols()); }
    std::size_t output_dim() const { return static_cast<std::size_t>(weights.rows()); }
};

/// Minimizes sum_t ||W z(t) - y(t)||^2 + lambda ||W||_F^2 row by row.
/// Solved as a least-squares problem on Z stacked over sqrt(lambda) I with a
/// column-pivoted QR; no explicit inverse. `states` is T x D, `targets` T x L.
/// Throws NumericalError when lambda == 0 and Z has deficient column rank.
ReadoutMatrix fit_ridge(const Matrix& states, const Matrix& targets, double lambda);

/// Minimum-norm least squares via SVD pseudo-inverse with singular values
/// below max(T, D) * eps * sigma_max treated as zero.
ReadoutMatrix fit_pinv(const Matrix& states, const Matrix& targets);

/// g(W z).
Vector predict(const ReadoutMatrix& readout, const Eigen::Ref<const Vector>& state);

/// Row-wise predict over a T x D state matrix; returns T x L.
Matrix predict_rows(const ReadoutMatrix& readout, const Matrix& states);

}  // namespace deepesn
