#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include "forge/kernel/autodiff.hpp"
#include "forge/kernel/tensor.hpp"

namespace forge::kernel {

inline Mask full_mask(int queries, int keys) { return Mask(queries, keys, std::uint8_t{1}); }

// Row-wise softmax of Q K^T / sqrt(d) restricted to allowed keys; disallowed
// entries get weight exactly 0.
template <class T>
Matrix<T> attention_weights(const Matrix<T>& q, const Matrix<T>& k, const Mask& mask) {
    using std::exp;
    require_shape(q.cols() == k.cols(), "attention: query and key widths differ");
    require_shape(mask.rows() == q.rows() && mask.cols() == k.rows(), "attention: mask shape must be queries x keys");
    const double scale = 1.0 / std::sqrt(static_cast<double>(q.cols()));

    Matrix<T> w(q.rows(), k.rows());
    for (int i = 0; i < q.rows(); ++i) {
        std::vector<T> logits(static_cast<std::size_t>(k.rows()));
        double max_logit = -std::numeric_limits<double>::infinity();
        bool any = false;
        for (int j = 0; j < k.rows(); ++j) {
            if (!mask(i, j)) continue;
            T dot = q(i, 0) * k(j, 0);
            for (int c = 1; c < q.cols(); ++c) dot = dot + q(i, c) * k(j, c);
            logits[static_cast<std::size_t>(j)] = dot * scale;
            max_logit = std::max(max_logit, value_of(logits[static_cast<std::size_t>(j)]));
            any = true;
        }
        if (!any) {
            throw KernelError(KernelErrorCode::all_keys_masked, "attention: query row " + std::to_string(i) +
                                                                    " has every key masked");
        }
        // The shift is a constant; softmax is invariant to it.
        T denom = T(0.0);
        for (int j = 0; j < k.rows(); ++j) {
            if (!mask(i, j)) continue;
            T e = exp(logits[static_cast<std::size_t>(j)] - max_logit);
            w(i, j) = e;
            denom = denom + e;
        }
        for (int j = 0; j < k.rows(); ++j) {
            w(i, j) = mask(i, j) ? w(i, j) / denom : T(0.0);
        }
    }
    return w;
}

template <class T>
Matrix<T> attention(const Matrix<T>& q, const Matrix<T>& k, const Matrix<T>& v, const Mask& mask) {
    require_shape(v.rows() == k.rows(), "attention: value and key row counts differ");
    return matmul(attention_weights(q, k, mask), v);
}

}  // namespace forge::kernel
