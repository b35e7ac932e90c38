#pragma once

// Randomized small-instance checks of the kernel's gradient-flow contracts,
// shared by the `kernel-check` CLI and the test suites.

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "forge/common/rng.hpp"
#include "forge/kernel/flow.hpp"
#include "forge/kernel/fusion.hpp"

namespace forge::kernel {

struct KernelDims {
    int width = 4;
    int hidden = 4;
    int general_tokens = 3;
    int embodied_tokens = 3;
    int horizon = 2;
    int action_dim = 3;
    int layers = 2;
};

// One end-to-end instance: stacked fused layers feeding a flow-matching head.
template <class T>
struct PipelineInstance {
    Matrix<T> h_general;
    Matrix<T> h_embodied;
    std::vector<FusionParams<T>> layers;
    DecoderParams<T> decoder;
    Matrix<T> a0;
    Matrix<T> a1;
    double t = 0.5;
};

enum class ParamRole { frozen, trainable };

// Visits every parameter matrix in a fixed order. `live` is false for frozen
// matrices with no forward path to the loss: in the last layer only the
// general K/V projections feed the embodied pathway.
template <class T, class Fn>
void for_each_parameter(PipelineInstance<T>& inst, Fn&& fn) {
    const std::size_t last = inst.layers.size() - 1;
    for (std::size_t l = 0; l < inst.layers.size(); ++l) {
        auto& g = inst.layers[l].general;
        const bool deep = l < last;
        fn(ParamRole::frozen, deep, g.wq);
        fn(ParamRole::frozen, true, g.wk);
        fn(ParamRole::frozen, true, g.wv);
        fn(ParamRole::frozen, deep, g.w1);
        fn(ParamRole::frozen, deep, g.w2);
        auto& e = inst.layers[l].embodied;
        for (Matrix<T>* m : {&e.wq, &e.wk, &e.wv, &e.w1, &e.w2}) fn(ParamRole::trainable, true, *m);
    }
    for (Matrix<T>* m : {&inst.decoder.w_action, &inst.decoder.w_time, &inst.decoder.w_condition}) {
        fn(ParamRole::trainable, true, *m);
    }
}

// fm_loss of the velocity head conditioned on the mean embodied state after
// all fused layers.
template <class T>
T pipeline_loss(const PipelineInstance<T>& inst) {
    Matrix<T> hg = inst.h_general;
    Matrix<T> he = inst.h_embodied;
    for (const auto& layer : inst.layers) {
        auto out = fuse_layer(hg, he, layer);
        hg = std::move(out.general);
        he = std::move(out.embodied);
    }
    const Matrix<T> a_t = flow_interpolate(inst.a0, inst.a1, inst.t);
    const Matrix<T> v = velocity(a_t, inst.t, mean_rows(he), inst.decoder);
    return fm_loss(v, inst.a0, inst.a1);
}

PipelineInstance<double> random_instance(const KernelDims& dims, SplitMix64& rng);

struct TapedInstance {
    PipelineInstance<Var> instance;
    std::vector<Var> params;      // every parameter scalar, for_each_parameter order
    std::vector<ParamRole> roles;
    std::vector<bool> live;
};

// Lifts a double instance onto a tape: parameters become variables, inputs
// stay constants.
TapedInstance tape_instance(const PipelineInstance<double>& inst, Tape& tape);

// Reverse-mode gradient of pipeline_loss for every parameter scalar.
std::vector<double> pipeline_gradient(const PipelineInstance<double>& inst);

struct GradientCertificate {
    int instances = 0;
    std::size_t frozen_params = 0;
    std::size_t frozen_live = 0;
    std::size_t frozen_nonzero_grad = 0;
    std::size_t frozen_live_fd_above = 0;  // |central FD| > fd_threshold
    double max_abs_frozen_grad = 0.0;
    std::size_t trainable_params = 0;
    std::size_t trainable_mismatches = 0;
    double max_trainable_rel_error = 0.0;

    double frozen_fd_fraction() const {
        return frozen_live ? static_cast<double>(frozen_live_fd_above) / static_cast<double>(frozen_live) : 0.0;
    }
};

struct CertifyOptions {
    int instances = 100;
    std::uint64_t seed = 20240611;
    double fd_step = 1e-5;
    double fd_threshold = 1e-6;
    double rel_tolerance = 1e-4;
    double abs_floor = 1e-7;
    KernelDims dims;
};

GradientCertificate certify_gradients(const CertifyOptions& options);

struct MaskReport {
    int layouts = 0;
    int prior_violations = 0;     // action row with nonzero weight on a language column
    int posterior_failures = 0;   // action row with no positive weight on any language column
    double max_prior_language_weight = 0.0;
    double min_posterior_language_weight = 1.0;

    bool passed() const { return layouts > 0 && prior_violations == 0 && posterior_failures == 0; }
};

// Exhaustive over 1 <= n_vision, n_action, n_language <= max_count, both branches.
MaskReport check_mask_soundness(int max_count = 4, std::uint64_t seed = 7, int width = 4);

struct CheckLine {
    std::string name;
    bool passed = false;
    std::string detail;
};

struct KernelCheckReport {
    std::vector<CheckLine> lines;
    double max_gradient_error = 0.0;
    bool passed() const;
};

KernelCheckReport run_kernel_check(const CertifyOptions& options);

}  // namespace forge::kernel
