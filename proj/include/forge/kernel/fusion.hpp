#pragma once

// Asymmetric dual-pathway layer.
//
// The general pathway advances on its own through frozen attention and
// feed-forward blocks. The embodied pathway queries from its own states over a
// joint key/value context [sg(K_G); K_E], [sg(V_G); V_E]:
//
//   H_E' = Attn(Q_E, K_joint, V_joint) + FFN_E(H_E)
//
// There is no residual stream or normalization; the update is exactly the sum
// above. FFN(x) = tanh(x W1) W2. Single head.

#include "forge/kernel/attention.hpp"
#include "forge/kernel/autodiff.hpp"
#include "forge/kernel/tensor.hpp"

namespace forge::kernel {

template <class T>
struct PathwayWeights {
    Matrix<T> wq;  // d x d
    Matrix<T> wk;  // d x d
    Matrix<T> wv;  // d x d
    Matrix<T> w1;  // d x hidden
    Matrix<T> w2;  // hidden x d
};

template <class T>
struct FusionParams {
    PathwayWeights<T> general;   // frozen
    PathwayWeights<T> embodied;  // trainable
    int width() const { return general.wq.rows(); }
};

template <class T>
struct FusionOutput {
    Matrix<T> general;
    Matrix<T> embodied;
    int joint_rows = 0;  // rows(H_G) + rows(H_E)
};

template <class T>
Matrix<T> feed_forward(const Matrix<T>& h, const PathwayWeights<T>& w) {
    using std::tanh;
    return matmul(map(matmul(h, w.w1), [](const T& x) { return T(tanh(x)); }), w.w2);
}

template <class T>
void check_pathway(const PathwayWeights<T>& w, int d) {
    require_shape(w.wq.rows() == d && w.wq.cols() == d && w.wk.rows() == d && w.wk.cols() == d &&
                      w.wv.rows() == d && w.wv.cols() == d,
                  "fusion: projection matrices must be d x d");
    require_shape(w.w1.rows() == d && w.w2.cols() == d && w.w1.cols() == w.w2.rows(),
                  "fusion: feed-forward shapes are inconsistent");
}

// Frozen pathway update; depends on nothing but H_G and the general weights.
template <class T>
Matrix<T> general_step(const Matrix<T>& h_general, const PathwayWeights<T>& w) {
    require_shape(h_general.cols() == w.wq.rows(), "fusion: general hidden width differs from d");
    const Matrix<T> q = matmul(h_general, w.wq);
    const Matrix<T> k = matmul(h_general, w.wk);
    const Matrix<T> v = matmul(h_general, w.wv);
    return add(attention(q, k, v, full_mask(h_general.rows(), h_general.rows())), feed_forward(h_general, w));
}

// Embodied update over the joint context. The general keys/values enter
// through stop_gradient.
template <class T>
Matrix<T> embodied_step(const Matrix<T>& h_general, const Matrix<T>& h_embodied, const FusionParams<T>& p,
                        const Mask* mask = nullptr) {
    const int d = p.width();
    require_shape(h_embodied.cols() == d && h_general.cols() == d, "fusion: hidden width differs from d");
    const Matrix<T> k_general = map(matmul(h_general, p.general.wk), [](const T& x) { return T(stop_gradient(x)); });
    const Matrix<T> v_general = map(matmul(h_general, p.general.wv), [](const T& x) { return T(stop_gradient(x)); });
    const Matrix<T> q = matmul(h_embodied, p.embodied.wq);
    const Matrix<T> k = concat_rows(k_general, matmul(h_embodied, p.embodied.wk));
    const Matrix<T> v = concat_rows(v_general, matmul(h_embodied, p.embodied.wv));
    const Mask m = mask ? *mask : full_mask(q.rows(), k.rows());
    return add(attention(q, k, v, m), feed_forward(h_embodied, p.embodied));
}

template <class T>
FusionOutput<T> fuse_layer(const Matrix<T>& h_general, const Matrix<T>& h_embodied, const FusionParams<T>& p,
                           const Mask* embodied_mask = nullptr) {
    const int d = p.width();
    check_pathway(p.general, d);
    check_pathway(p.embodied, d);
    FusionOutput<T> out;
    out.general = general_step(h_general, p.general);
    out.embodied = embodied_step(h_general, h_embodied, p, embodied_mask);
    out.joint_rows = h_general.rows() + h_embodied.rows();
    return out;
}

}  // namespace forge::kernel
