#include "forge/kernel/certify.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <fmt/format.h>

#include "forge/kernel/sequence.hpp"

namespace forge::kernel {

namespace {

Tensor2 uniform_matrix(int rows, int cols, double scale, SplitMix64& rng) {
    Tensor2 m(rows, cols);
    for (auto& v : m.data()) v = scale * (2.0 * rng.uniform() - 1.0);
    return m;
}

Tensor2 gaussian_matrix(int rows, int cols, SplitMix64& rng) {
    Tensor2 m(rows, cols);
    for (auto& v : m.data()) {
        const double u1 = 1.0 - rng.uniform();  // (0, 1]
        const double u2 = rng.uniform();
        v = std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
    }
    return m;
}

PathwayWeights<double> random_pathway(const KernelDims& dims, SplitMix64& rng) {
    const double scale = 1.0;
    return {uniform_matrix(dims.width, dims.width, scale, rng), uniform_matrix(dims.width, dims.width, scale, rng),
            uniform_matrix(dims.width, dims.width, scale, rng), uniform_matrix(dims.width, dims.hidden, scale, rng),
            uniform_matrix(dims.hidden, dims.width, scale, rng)};
}

Matrix<Var> lift(const Tensor2& m, Tape* tape, std::vector<Var>* params) {
    Matrix<Var> out(m.rows(), m.cols());
    for (std::size_t i = 0; i < m.size(); ++i) {
        if (tape) {
            out.data()[i] = tape->variable(m.data()[i]);
            params->push_back(out.data()[i]);
        } else {
            out.data()[i] = Var(m.data()[i]);
        }
    }
    return out;
}

PathwayWeights<Var> lift(const PathwayWeights<double>& w, Tape* tape, std::vector<Var>* params) {
    return {lift(w.wq, tape, params), lift(w.wk, tape, params), lift(w.wv, tape, params), lift(w.w1, tape, params),
            lift(w.w2, tape, params)};
}

// Pointers to every parameter scalar, in for_each_parameter order.
struct ParamSlots {
    std::vector<double*> slots;
    std::vector<ParamRole> roles;
    std::vector<bool> live;
};

ParamSlots collect_slots(PipelineInstance<double>& inst) {
    ParamSlots out;
    for_each_parameter(inst, [&](ParamRole role, bool live, Tensor2& m) {
        for (auto& v : m.data()) {
            out.slots.push_back(&v);
            out.roles.push_back(role);
            out.live.push_back(live);
        }
    });
    return out;
}

double central_difference(PipelineInstance<double>& inst, double* slot, double step) {
    const double saved = *slot;
    *slot = saved + step;
    const double up = pipeline_loss(inst);
    *slot = saved - step;
    const double down = pipeline_loss(inst);
    *slot = saved;
    return (up - down) / (2.0 * step);
}

}  // namespace

PipelineInstance<double> random_instance(const KernelDims& dims, SplitMix64& rng) {
    PipelineInstance<double> inst;
    inst.h_general = uniform_matrix(dims.general_tokens, dims.width, 1.0, rng);
    inst.h_embodied = uniform_matrix(dims.embodied_tokens, dims.width, 1.0, rng);
    for (int l = 0; l < dims.layers; ++l) {
        FusionParams<double> p;
        p.general = random_pathway(dims, rng);
        p.embodied = random_pathway(dims, rng);
        inst.layers.push_back(std::move(p));
    }
    inst.decoder.w_action = uniform_matrix(dims.action_dim, dims.action_dim, 1.0, rng);
    inst.decoder.w_time = uniform_matrix(1, dims.action_dim, 1.0, rng);
    inst.decoder.w_condition = uniform_matrix(dims.width, dims.action_dim, 1.0, rng);
    inst.a0 = gaussian_matrix(dims.horizon, dims.action_dim, rng);
    inst.a1 = uniform_matrix(dims.horizon, dims.action_dim, 1.0, rng);
    inst.t = rng.uniform();
    return inst;
}

TapedInstance tape_instance(const PipelineInstance<double>& inst, Tape& tape) {
    TapedInstance out;
    auto& ti = out.instance;
    ti.h_general = lift(inst.h_general, nullptr, nullptr);
    ti.h_embodied = lift(inst.h_embodied, nullptr, nullptr);
    // Same order as for_each_parameter.
    for (const auto& layer : inst.layers) {
        FusionParams<Var> p;
        p.general = lift(layer.general, &tape, &out.params);
        p.embodied = lift(layer.embodied, &tape, &out.params);
        ti.layers.push_back(std::move(p));
    }
    ti.decoder.w_action = lift(inst.decoder.w_action, &tape, &out.params);
    ti.decoder.w_time = lift(inst.decoder.w_time, &tape, &out.params);
    ti.decoder.w_condition = lift(inst.decoder.w_condition, &tape, &out.params);
    ti.a0 = lift(inst.a0, nullptr, nullptr);
    ti.a1 = lift(inst.a1, nullptr, nullptr);
    ti.t = inst.t;

    PipelineInstance<double> copy = inst;
    for_each_parameter(copy, [&](ParamRole role, bool live, Tensor2& m) {
        out.roles.insert(out.roles.end(), m.size(), role);
        out.live.insert(out.live.end(), m.size(), live);
    });
    return out;
}

std::vector<double> pipeline_gradient(const PipelineInstance<double>& inst) {
    Tape tape;
    TapedInstance taped = tape_instance(inst, tape);
    const Var loss = pipeline_loss(taped.instance);
    return backward(loss, taped.params);
}

GradientCertificate certify_gradients(const CertifyOptions& options) {
    GradientCertificate cert;
    SplitMix64 rng(options.seed);
    for (int n = 0; n < options.instances; ++n) {
        PipelineInstance<double> inst = random_instance(options.dims, rng);
        const std::vector<double> grads = pipeline_gradient(inst);
        ParamSlots slots = collect_slots(inst);
        ++cert.instances;

        for (std::size_t i = 0; i < slots.slots.size(); ++i) {
            const double g = grads[i];
            if (slots.roles[i] == ParamRole::frozen) {
                ++cert.frozen_params;
                cert.max_abs_frozen_grad = std::max(cert.max_abs_frozen_grad, std::abs(g));
                if (g != 0.0) ++cert.frozen_nonzero_grad;
                if (slots.live[i]) {
                    ++cert.frozen_live;
                    const double fd = central_difference(inst, slots.slots[i], options.fd_step);
                    if (std::abs(fd) > options.fd_threshold) ++cert.frozen_live_fd_above;
                }
            } else {
                ++cert.trainable_params;
                const double fd = central_difference(inst, slots.slots[i], options.fd_step);
                const double err = std::abs(g - fd);
                const double scale = std::max({std::abs(g), std::abs(fd), options.abs_floor});
                cert.max_trainable_rel_error = std::max(cert.max_trainable_rel_error, err / scale);
                if (err > options.abs_floor && err > options.rel_tolerance * std::max(std::abs(g), std::abs(fd))) {
                    ++cert.trainable_mismatches;
                }
            }
        }
    }
    return cert;
}

MaskReport check_mask_soundness(int max_count, std::uint64_t seed, int width) {
    MaskReport report;
    SplitMix64 rng(seed);
    for (int nv = 1; nv <= max_count; ++nv) {
        for (int na = 1; na <= max_count; ++na) {
            for (int nl = 1; nl <= max_count; ++nl) {
                for (Branch branch : {Branch::prior, Branch::posterior}) {
                    const SequenceLayout layout = build_sequence(branch, nv, nl, na);
                    const Tensor2 x = uniform_matrix(layout.length(), width, 1.0, rng);
                    const Tensor2 q = matmul(x, uniform_matrix(width, width, 1.0, rng));
                    const Tensor2 k = matmul(x, uniform_matrix(width, width, 1.0, rng));
                    const Tensor2 w = attention_weights(q, k, layout.mask);
                    const auto language = layout.positions(TokenKind::language);
                    for (int row : layout.positions(TokenKind::action)) {
                        double total = 0.0;
                        double best = 0.0;
                        for (int col : language) {
                            total += w(row, col);
                            best = std::max(best, w(row, col));
                        }
                        if (branch == Branch::prior) {
                            report.max_prior_language_weight = std::max(report.max_prior_language_weight, total);
                            if (total != 0.0) ++report.prior_violations;
                        } else {
                            report.min_posterior_language_weight = std::min(report.min_posterior_language_weight, best);
                            if (!(best > 0.0)) ++report.posterior_failures;
                        }
                    }
                    ++report.layouts;
                }
            }
        }
    }
    return report;
}

// ---------------------------------------------------------------------------

bool KernelCheckReport::passed() const {
    return std::all_of(lines.begin(), lines.end(), [](const CheckLine& l) { return l.passed; });
}

namespace {

// Reference: dense softmax with -inf logits for masked keys.
Tensor2 dense_masked_attention(const Tensor2& q, const Tensor2& k, const Tensor2& v, const Mask& mask) {
    Tensor2 out(q.rows(), v.cols());
    for (int i = 0; i < q.rows(); ++i) {
        std::vector<double> logit(static_cast<std::size_t>(k.rows()));
        double mx = -std::numeric_limits<double>::infinity();
        for (int j = 0; j < k.rows(); ++j) {
            double s = 0.0;
            for (int c = 0; c < q.cols(); ++c) s += q(i, c) * k(j, c);
            logit[j] = mask(i, j) ? s / std::sqrt(static_cast<double>(q.cols()))
                                  : -std::numeric_limits<double>::infinity();
            mx = std::max(mx, logit[j]);
        }
        double z = 0.0;
        for (auto& l : logit) z += (l = std::exp(l - mx));
        for (int c = 0; c < v.cols(); ++c) {
            double acc = 0.0;
            for (int j = 0; j < k.rows(); ++j) acc += logit[j] / z * v(j, c);
            out(i, c) = acc;
        }
    }
    return out;
}

CheckLine check_attention(SplitMix64& rng) {
    double worst = 0.0;
    int hull_violations = 0;
    for (int trial = 0; trial < 50; ++trial) {
        const Tensor2 q = uniform_matrix(3, 4, 1.5, rng);
        const Tensor2 k = uniform_matrix(5, 4, 1.5, rng);
        const Tensor2 v = uniform_matrix(5, 3, 1.0, rng);
        Mask mask = full_mask(3, 5);
        for (int i = 0; i < 3; ++i) mask(i, static_cast<int>(rng.below(5))) = 0;
        const Tensor2 got = attention(q, k, v, mask);
        const Tensor2 want = dense_masked_attention(q, k, v, mask);
        for (std::size_t i = 0; i < got.size(); ++i) worst = std::max(worst, std::abs(got.data()[i] - want.data()[i]));
        for (int i = 0; i < 3; ++i) {
            for (int c = 0; c < 3; ++c) {
                double lo = std::numeric_limits<double>::infinity();
                double hi = -lo;
                for (int j = 0; j < 5; ++j) {
                    if (!mask(i, j)) continue;
                    lo = std::min(lo, v(j, c));
                    hi = std::max(hi, v(j, c));
                }
                if (got(i, c) < lo - 1e-12 || got(i, c) > hi + 1e-12) ++hull_violations;
            }
        }
    }
    const bool ok = worst <= 1e-12 && hull_violations == 0;
    return {"attention_vs_dense_oracle", ok,
            fmt::format("max |diff| {:.3e}, convex-hull violations {}", worst, hull_violations)};
}

CheckLine check_frozen_immutability(const KernelDims& dims, SplitMix64& rng) {
    int mismatches = 0;
    for (int n = 0; n < 50; ++n) {
        const auto inst = random_instance(dims, rng);
        const auto fused = fuse_layer(inst.h_general, inst.h_embodied, inst.layers.front());
        const Tensor2 alone = general_step(inst.h_general, inst.layers.front().general);
        if (!(fused.general == alone)) ++mismatches;
    }
    return {"frozen_pathway_immutability", mismatches == 0, fmt::format("{} bitwise mismatches in 50", mismatches)};
}

CheckLine check_flow(SplitMix64& rng) {
    bool ok = true;
    double worst_homog = 0.0;
    for (int n = 0; n < 50; ++n) {
        const Tensor2 a0 = gaussian_matrix(4, 3, rng);
        const Tensor2 a1 = uniform_matrix(4, 3, 1.0, rng);
        Tensor2 target = a1;
        for (std::size_t i = 0; i < target.size(); ++i) target.data()[i] = a1.data()[i] - a0.data()[i];
        ok = ok && fm_loss(target, a0, a1) == 0.0;
        ok = ok && flow_interpolate(a0, a1, 0.0) == a0 && flow_interpolate(a0, a1, 1.0) == a1;

        const Tensor2 r = uniform_matrix(4, 3, 1.0, rng);
        const double k = 0.5 + 3.0 * rng.uniform();
        Tensor2 p1 = target;
        Tensor2 pk = target;
        for (std::size_t i = 0; i < r.size(); ++i) {
            p1.data()[i] = a1.data()[i] - a0.data()[i] + r.data()[i];
            pk.data()[i] = a1.data()[i] - a0.data()[i] + k * r.data()[i];
        }
        const double base = fm_loss(p1, a0, a1);
        const double scaled = fm_loss(pk, a0, a1);
        worst_homog = std::max(worst_homog, std::abs(scaled - k * k * base) / (k * k * base));
    }
    ok = ok && worst_homog <= 1e-12;
    return {"flow_matching_identities", ok, fmt::format("homogeneity rel err {:.3e}", worst_homog)};
}

CheckLine check_alignment() {
    Tape tape;
    Var post = tape.variable(-1.0);
    Var prior = tape.variable(-2.0);
    const Var loss = alignment_loss(post, prior);
    const std::vector<Var> params{post, prior};
    const auto g = backward(loss, params);
    const bool ok = loss.value() == -1.0 && g[0] == -1.0 && g[1] == 0.0;
    return {"alignment_stop_gradient", ok, fmt::format("loss {}, d/dpost {}, d/dprior {}", loss.value(), g[0], g[1])};
}

}  // namespace

KernelCheckReport run_kernel_check(const CertifyOptions& options) {
    KernelCheckReport report;
    SplitMix64 rng(options.seed ^ 0x5eedULL);

    report.lines.push_back(check_attention(rng));

    const MaskReport mask = check_mask_soundness(4, options.seed);
    report.lines.push_back({"mask_soundness", mask.passed(),
                            fmt::format("{} layouts, prior max language weight {:.3e}, posterior min {:.3e}",
                                        mask.layouts, mask.max_prior_language_weight,
                                        mask.min_posterior_language_weight)});

    report.lines.push_back(check_frozen_immutability(options.dims, rng));

    const GradientCertificate cert = certify_gradients(options);
    report.lines.push_back({"stop_gradient_frozen_zero", cert.frozen_nonzero_grad == 0,
                            fmt::format("{} frozen scalars, max |grad| {:.3e}", cert.frozen_params,
                                        cert.max_abs_frozen_grad)});
    report.lines.push_back({"stop_gradient_forward_live", cert.frozen_fd_fraction() >= 0.95,
                            fmt::format("{}/{} live frozen scalars with |FD| > {:.0e} ({:.1f}%)",
                                        cert.frozen_live_fd_above, cert.frozen_live, options.fd_threshold,
                                        100.0 * cert.frozen_fd_fraction())});
    report.lines.push_back({"trainable_gradient_vs_fd", cert.trainable_mismatches == 0,
                            fmt::format("{} scalars, {} mismatches, max rel err {:.3e}", cert.trainable_params,
                                        cert.trainable_mismatches, cert.max_trainable_rel_error)});
    report.max_gradient_error = cert.max_trainable_rel_error;

    report.lines.push_back(check_flow(rng));
    report.lines.push_back(check_alignment());
    return report;
}

}  // namespace forge::kernel
