#include "deepesn/readout.hpp"

#include <Eigen/QR>
#include <Eigen/SVD>

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

namespace deepesn {

namespace {

void check_fit_inputs(const Matrix& states, const Matrix& targets, const char* who) {
    if (states.rows() < 1 || states.cols() < 1) {
        throw std::invalid_argument(std::string(who) + ": state matrix is empty");
    }
    if (states.rows() != targets.rows()) {
        throw std::invalid_argument(std::string(who) + ": " + std::to_string(states.rows()) + " state rows but " +
                                    std::to_string(targets.rows()) + " target rows");
    }
    if (targets.cols() < 1) {
        throw std::invalid_argument(std::string(who) + ": targets have no columns");
    }
    if (!states.allFinite() || !targets.allFinite()) {
        throw std::invalid_argument(std::string(who) + ": non-finite entries in states or targets");
    }
}

}  // namespace

ReadoutMatrix fit_ridge(const Matrix& states, const Matrix& targets, double lambda) {
    check_fit_inputs(states, targets, "fit_ridge");
    if (!(lambda >= 0.0) || !std::isfinite(lambda)) {
        throw std::invalid_argument("fit_ridge: lambda must be finite and >= 0");
    }
    const Eigen::Index t = states.rows();
    const Eigen::Index d = states.cols();

    Matrix solution;
    if (lambda == 0.0) {
        Eigen::ColPivHouseholderQR<Matrix> qr(states);
        if (qr.rank() < d) {
            throw NumericalError("fit_ridge: state matrix has rank " + std::to_string(qr.rank()) + " < " +
                                 std::to_string(d) + " columns; use lambda > 0 or fit_pinv");
        }
        solution = qr.solve(targets);
    } else {
        Matrix augmented(t + d, d);
        augmented.topRows(t) = states;
        augmented.bottomRows(d) = std::sqrt(lambda) * Matrix::Identity(d, d);
        Matrix rhs = Matrix::Zero(t + d, targets.cols());
        rhs.topRows(t) = targets;
        solution = Eigen::ColPivHouseholderQR<Matrix>(augmented).solve(rhs);
    }
    if (!solution.allFinite()) {
        throw NumericalError("fit_ridge: solve produced non-finite weights");
    }
    return ReadoutMatrix{solution.transpose(), lambda, Activation::identity};
}

ReadoutMatrix fit_pinv(const Matrix& states, const Matrix& targets) {
    check_fit_inputs(states, targets, "fit_pinv");
    Eigen::BDCSVD<Matrix> svd(states, Eigen::ComputeThinU | Eigen::ComputeThinV);
    const Vector& sigma = svd.singularValues();
    const double cutoff = static_cast<double>(std::max(states.rows(), states.cols())) *
                          std::numeric_limits<double>::epsilon() * (sigma.size() > 0 ? sigma(0) : 0.0);
    Vector inverse = Vector::Zero(sigma.size());
    for (Eigen::Index i = 0; i < sigma.size(); ++i) {
        if (sigma(i) > cutoff) {
            inverse(i) = 1.0 / sigma(i);
        }
    }
    const Matrix solution = svd.matrixV() * inverse.asDiagonal() * (svd.matrixU().transpose() * targets);
    return ReadoutMatrix{solution.transpose(), 0.0, Activation::identity};
}

Vector predict(const ReadoutMatrix& readout, const Eigen::Ref<const Vector>& state) {
    if (state.size() != readout.weights.cols()) {
        throw std::invalid_argument("predict: state has dimension " + std::to_string(state.size()) +
                                    ", readout expects " + std::to_string(readout.weights.cols()));
    }
    Vector out = readout.weights * state;
    if (readout.output_activation == Activation::tanh) {
        out = out.array().tanh();
    }
    return out;
}

Matrix predict_rows(const ReadoutMatrix& readout, const Matrix& states) {
    if (states.cols() != readout.weights.cols()) {
        throw std::invalid_argument("predict_rows: state width does not match readout");
    }
    Matrix out = states * readout.weights.transpose();
    if (readout.output_activation == Activation::tanh) {
        out = out.array().tanh();
    }
    return out;
}

}  // namespace deepesn
