#pragma once

#include <algorithm>
#include <cmath>
#include <vector>

#include "forge/kernel/autodiff.hpp"
#include "forge/kernel/tensor.hpp"

namespace forge::kernel {

// (1 - t) a0 + t a1, elementwise.
template <class T>
Matrix<T> flow_interpolate(const Matrix<T>& a0, const Matrix<T>& a1, double t) {
    require_shape(a0.rows() == a1.rows() && a0.cols() == a1.cols(), "flow_interpolate: shapes differ");
    if (!(t >= 0.0 && t <= 1.0)) throw KernelError(KernelErrorCode::bad_argument, "flow_interpolate: t outside [0,1]");
    Matrix<T> out = a0;
    for (std::size_t i = 0; i < out.size(); ++i) {
        out.data()[i] = (1.0 - t) * a0.data()[i] + t * a1.data()[i];
    }
    return out;
}

// Mean over elements of (pred - (a1 - a0))^2.
template <class T>
T fm_loss(const Matrix<T>& pred, const Matrix<T>& a0, const Matrix<T>& a1) {
    require_shape(pred.rows() == a0.rows() && pred.cols() == a0.cols() && a0.rows() == a1.rows() &&
                      a0.cols() == a1.cols(),
                  "fm_loss: shapes differ");
    T acc = T(0.0);
    for (std::size_t i = 0; i < pred.size(); ++i) {
        const T r = pred.data()[i] - (a1.data()[i] - a0.data()[i]);
        acc = acc + r * r;
    }
    return acc / static_cast<double>(pred.size());
}

// -(ll_post - sg(ll_prior)); the prior branch is a baseline that receives no
// gradient from this term.
template <class T>
T alignment_loss(const T& ll_post, const T& ll_prior) {
    return -(ll_post - stop_gradient(ll_prior));
}

template <class T>
struct DecoderParams {
    Matrix<T> w_action;     // action_dim x action_dim
    Matrix<T> w_time;       // 1 x action_dim
    Matrix<T> w_condition;  // d x action_dim
};

// Linear velocity head: v = a_t W_a + t w_t + C W_c, with the 1-row terms
// broadcast over the horizon. `condition` is 1 x d.
template <class T>
Matrix<T> velocity(const Matrix<T>& a_t, double t, const Matrix<T>& condition, const DecoderParams<T>& p) {
    require_shape(condition.rows() == 1, "velocity: condition must be a single row");
    Matrix<T> out = matmul(a_t, p.w_action);
    const Matrix<T> cond = matmul(condition, p.w_condition);
    require_shape(cond.cols() == out.cols() && p.w_time.cols() == out.cols(), "velocity: action widths differ");
    for (int r = 0; r < out.rows(); ++r) {
        for (int c = 0; c < out.cols(); ++c) out(r, c) = out(r, c) + t * p.w_time(0, c) + cond(0, c);
    }
    return out;
}

// Toy categorical head: log-probability of `tokens` under softmax(mean(states) W).
template <class T>
T sequence_log_likelihood(const Matrix<T>& states, const Matrix<T>& w_vocab, const std::vector<int>& tokens) {
    using std::exp;
    using std::log;
    const Matrix<T> logits = matmul(mean_rows(states), w_vocab);
    double shift = value_of(logits(0, 0));
    for (int c = 1; c < logits.cols(); ++c) shift = std::max(shift, value_of(logits(0, c)));
    T denom = T(0.0);
    for (int c = 0; c < logits.cols(); ++c) denom = denom + exp(logits(0, c) - shift);
    const T log_z = log(denom) + shift;
    T ll = T(0.0);
    for (int tok : tokens) {
        if (tok < 0 || tok >= logits.cols()) throw KernelError(KernelErrorCode::bad_argument, "token outside vocabulary");
        ll = ll + (logits(0, tok) - log_z);
    }
    return ll;
}

}  // namespace forge::kernel
