#include <doctest.h>

#include <cmath>
#include <limits>

#include "forge/common/rng.hpp"
#include "forge/kernel/attention.hpp"
#include "forge/kernel/autodiff.hpp"
#include "forge/kernel/certify.hpp"
#include "forge/kernel/flow.hpp"
#include "forge/kernel/fusion.hpp"
#include "forge/kernel/sequence.hpp"

using namespace forge;
using namespace forge::kernel;

namespace {

Tensor2 random_matrix(int r, int c, SplitMix64& rng, double scale = 1.0) {
    Tensor2 m(r, c);
    for (auto& v : m.data()) v = scale * (2 * rng.uniform() - 1);
    return m;
}

// Dense softmax over all keys, masked logits replaced by -inf.
Tensor2 dense_oracle(const Tensor2& q, const Tensor2& k, const Tensor2& v, const Mask& mask) {
    Tensor2 out(q.rows(), v.cols());
    for (int i = 0; i < q.rows(); ++i) {
        std::vector<double> w(static_cast<std::size_t>(k.rows()));
        double mx = -std::numeric_limits<double>::infinity();
        for (int j = 0; j < k.rows(); ++j) {
            double s = 0;
            for (int c = 0; c < q.cols(); ++c) s += q(i, c) * k(j, c);
            w[j] = mask(i, j) ? s / std::sqrt(double(q.cols())) : -std::numeric_limits<double>::infinity();
            mx = std::max(mx, w[j]);
        }
        double z = 0;
        for (auto& x : w) z += (x = std::exp(x - mx));
        for (int c = 0; c < v.cols(); ++c) {
            double acc = 0;
            for (int j = 0; j < k.rows(); ++j) acc += w[j] / z * v(j, c);
            out(i, c) = acc;
        }
    }
    return out;
}

}  // namespace

TEST_SUITE("kernel") {

TEST_CASE("single key returns its value row") {
    SplitMix64 rng(1);
    const Tensor2 q = random_matrix(1, 4, rng);
    const Tensor2 k = random_matrix(1, 4, rng);
    const Tensor2 v = random_matrix(1, 3, rng);
    CHECK(attention(q, k, v, full_mask(1, 1)) == v);
}

TEST_CASE("equal logits average the value rows") {
    const Tensor2 q(1, 2, 0.7);
    const Tensor2 k(2, 2, 0.3);
    const Tensor2 v(2, 2, std::vector<double>{1.0, 2.0, 3.0, 6.0});
    const Tensor2 out = attention(q, k, v, full_mask(1, 2));
    CHECK(out(0, 0) == doctest::Approx(2.0).epsilon(1e-15));
    CHECK(out(0, 1) == doctest::Approx(4.0).epsilon(1e-15));
}

TEST_CASE("masked attention equals the dense -inf oracle") {
    SplitMix64 rng(2);
    for (int t = 0; t < 200; ++t) {
        const Tensor2 q = random_matrix(3, 4, rng, 2.0);
        const Tensor2 k = random_matrix(4, 4, rng, 2.0);
        const Tensor2 v = random_matrix(4, 3, rng);
        Mask m = full_mask(3, 4);
        m(static_cast<int>(rng.below(3)), static_cast<int>(rng.below(4))) = 0;
        const Tensor2 got = attention(q, k, v, m);
        const Tensor2 want = dense_oracle(q, k, v, m);
        for (std::size_t i = 0; i < got.size(); ++i) CHECK(got.data()[i] == doctest::Approx(want.data()[i]).epsilon(1e-12));
        const Tensor2 w = attention_weights(q, k, m);
        for (int i = 0; i < 3; ++i) {
            double row = 0;
            for (int j = 0; j < 4; ++j) {
                if (!m(i, j)) CHECK(w(i, j) == 0.0);
                row += w(i, j);
            }
            CHECK(row == doctest::Approx(1.0).epsilon(1e-14));
        }
    }
}

TEST_CASE("fully masked row and shape errors") {
    const Tensor2 q(2, 2, 1.0);
    const Tensor2 k(3, 2, 1.0);
    const Tensor2 v(3, 2, 1.0);
    Mask m = full_mask(2, 3);
    for (int j = 0; j < 3; ++j) m(1, j) = 0;
    try {
        attention(q, k, v, m);
        FAIL("expected all_keys_masked");
    } catch (const KernelError& e) {
        CHECK(e.code() == KernelErrorCode::all_keys_masked);
    }
    try {
        attention(q, Tensor2(3, 3, 1.0), v, full_mask(2, 3));
        FAIL("expected shape_mismatch");
    } catch (const KernelError& e) {
        CHECK(e.code() == KernelErrorCode::shape_mismatch);
    }
}

TEST_CASE("prior and posterior layouts") {
    const auto prior = build_sequence(Branch::prior, 2, 2, 1);
    CHECK(prior.length() == 5);
    CHECK(prior.positions(TokenKind::action) == std::vector<int>{2});
    CHECK(prior.positions(TokenKind::language) == std::vector<int>{3, 4});
    CHECK(prior.mask(2, 3) == 0);
    CHECK(prior.mask(2, 4) == 0);
    CHECK(prior.mask(2, 0) == 1);

    const auto post = build_sequence(Branch::posterior, 2, 2, 1);
    CHECK(post.positions(TokenKind::action) == std::vector<int>{4});
    CHECK(post.mask(4, 2) == 1);
    CHECK(post.mask(4, 3) == 1);

    for (const auto* layout : {&prior, &post}) {
        for (int i = 0; i < layout->length(); ++i) {
            for (int j = 0; j < layout->length(); ++j) CHECK(layout->mask(i, j) == (j <= i ? 1 : 0));
        }
    }
    CHECK_THROWS_AS(build_sequence(Branch::prior, 0, 1, 1), KernelError);
}

TEST_CASE("mask soundness is exhaustive over counts up to four") {
    const MaskReport r = check_mask_soundness(4);
    CHECK(r.layouts == 4 * 4 * 4 * 2);
    CHECK(r.passed());
    CHECK(r.max_prior_language_weight == 0.0);
    CHECK(r.min_posterior_language_weight > 0.0);
}

TEST_CASE("fused layer shapes and the convex-combination case") {
    SplitMix64 rng(3);
    KernelDims dims;
    auto inst = random_instance(dims, rng);
    auto& p = inst.layers.front();
    const auto out = fuse_layer(inst.h_general, inst.h_embodied, p);
    CHECK(out.joint_rows == dims.general_tokens + dims.embodied_tokens);
    CHECK(out.embodied.rows() == dims.embodied_tokens);
    CHECK(out.general.rows() == dims.general_tokens);

    // Every value row equals c and FFN_E is zero: each output row is c.
    Tensor2 hg(3, 4, 0.0);
    Tensor2 he(3, 4, 0.0);
    for (int r = 0; r < 3; ++r) {
        hg(r, 0) = 1.0;
        he(r, 0) = 1.0;
    }
    p.general.wv = Tensor2(4, 4, 0.0);
    p.embodied.wv = Tensor2(4, 4, 0.0);
    const double c[] = {0.5, -1.0, 2.0, 0.25};
    for (int j = 0; j < 4; ++j) {
        p.general.wv(0, j) = c[j];
        p.embodied.wv(0, j) = c[j];
    }
    p.embodied.w2 = Tensor2(dims.hidden, 4, 0.0);
    const Tensor2 h = embodied_step(hg, he, p);
    for (int r = 0; r < 3; ++r) {
        for (int j = 0; j < 4; ++j) CHECK(h(r, j) == doctest::Approx(c[j]).epsilon(1e-14));
    }
}

TEST_CASE("general pathway output is bit-identical with or without the embodied pathway") {
    SplitMix64 rng(4);
    for (int i = 0; i < 50; ++i) {
        const auto inst = random_instance(KernelDims{}, rng);
        const auto fused = fuse_layer(inst.h_general, inst.h_embodied, inst.layers.front());
        CHECK(fused.general == general_step(inst.h_general, inst.layers.front().general));
    }
}

TEST_CASE("flow interpolation") {
    SplitMix64 rng(5);
    const Tensor2 a0 = random_matrix(3, 2, rng);
    const Tensor2 a1 = random_matrix(3, 2, rng);
    CHECK(flow_interpolate(a0, a1, 0.0) == a0);
    CHECK(flow_interpolate(a0, a1, 1.0) == a1);
    CHECK(flow_interpolate(Tensor2(1, 1, 0.0), Tensor2(1, 1, 2.0), 0.5)(0, 0) == 1.0);
    for (double t : {0.1, 0.37, 0.5, 0.9}) {
        const Tensor2 at = flow_interpolate(a0, a1, t);
        for (std::size_t i = 0; i < at.size(); ++i) {
            CHECK(at.data()[i] - a0.data()[i] == doctest::Approx(t * (a1.data()[i] - a0.data()[i])).epsilon(1e-12));
        }
    }
    CHECK_THROWS_AS(flow_interpolate(a0, a1, 1.5), KernelError);
}

TEST_CASE("flow matching loss") {
    SplitMix64 rng(6);
    const Tensor2 a0 = random_matrix(4, 3, rng);
    const Tensor2 a1 = random_matrix(4, 3, rng);
    Tensor2 target = a1;
    for (std::size_t i = 0; i < target.size(); ++i) target.data()[i] = a1.data()[i] - a0.data()[i];
    CHECK(fm_loss(target, a0, a1) == 0.0);

    CHECK(fm_loss(Tensor2(1, 2, 0.0), Tensor2(1, 2, 0.0), Tensor2(1, 2, std::vector<double>{2.0, 0.0})) == 2.0);

    const Tensor2 r = random_matrix(4, 3, rng);
    for (double k : {0.5, 2.0, 3.7}) {
        Tensor2 p1 = target;
        Tensor2 pk = target;
        for (std::size_t i = 0; i < r.size(); ++i) {
            p1.data()[i] += r.data()[i];
            pk.data()[i] += k * r.data()[i];
        }
        CHECK(fm_loss(pk, a0, a1) == doctest::Approx(k * k * fm_loss(p1, a0, a1)).epsilon(1e-12));
    }
}

TEST_CASE("alignment loss values and stop-gradient on the prior") {
    CHECK(alignment_loss(-1.5, -1.5) == 0.0);
    CHECK(alignment_loss(-1.0, -2.0) == -1.0);
    Tape tape;
    const Var post = tape.variable(-1.0);
    const Var prior = tape.variable(-2.0);
    const Var loss = alignment_loss(post, prior);
    const std::vector<Var> params{post, prior};
    const auto g = backward(loss, params);
    CHECK(loss.value() == -1.0);
    CHECK(g[0] == -1.0);
    CHECK(g[1] == 0.0);
}

TEST_CASE("reverse mode basics") {
    {
        Tape tape;
        const Var x = tape.variable(3.0);
        const std::vector<Var> p{x};
        CHECK(backward(x * x, p)[0] == 6.0);
    }
    {
        Tape tape;
        const Var x = tape.variable(3.0);
        const std::vector<Var> p{x};
        CHECK(backward(stop_gradient(x) * x, p)[0] == 3.0);
    }
    {
        Tape tape;
        const Var x = tape.variable(0.3);
        const Var y = tape.variable(-0.8);
        const Var f = tanh(x * y) + exp(x) / (y * y) - log(x + 2.0);
        const std::vector<Var> p{x, y};
        const auto g = backward(f, p);
        auto fd = [](double a, double b) { return std::tanh(a * b) + std::exp(a) / (b * b) - std::log(a + 2.0); };
        const double h = 1e-6;
        CHECK(g[0] == doctest::Approx((fd(0.3 + h, -0.8) - fd(0.3 - h, -0.8)) / (2 * h)).epsilon(1e-7));
        CHECK(g[1] == doctest::Approx((fd(0.3, -0.8 + h) - fd(0.3, -0.8 - h)) / (2 * h)).epsilon(1e-7));
    }
}

TEST_CASE("toy likelihood head gradient matches finite differences") {
    SplitMix64 rng(9);
    const Tensor2 states = random_matrix(3, 4, rng);
    const Tensor2 w = random_matrix(4, 5, rng);
    const std::vector<int> tokens{1, 3, 3};
    Tape tape;
    Matrix<Var> ws(4, 5);
    std::vector<Var> params;
    for (std::size_t i = 0; i < w.size(); ++i) {
        ws.data()[i] = tape.variable(w.data()[i]);
        params.push_back(ws.data()[i]);
    }
    Matrix<Var> sv(3, 4);
    for (std::size_t i = 0; i < states.size(); ++i) sv.data()[i] = Var(states.data()[i]);
    const auto g = backward(sequence_log_likelihood(sv, ws, tokens), params);
    for (std::size_t i = 0; i < w.size(); ++i) {
        Tensor2 up = w;
        Tensor2 down = w;
        up.data()[i] += 1e-5;
        down.data()[i] -= 1e-5;
        const double fd = (sequence_log_likelihood(states, up, tokens) - sequence_log_likelihood(states, down, tokens)) / 2e-5;
        CHECK(g[i] == doctest::Approx(fd).epsilon(1e-6));
    }
    CHECK_THROWS_AS(sequence_log_likelihood(states, w, std::vector<int>{7}), KernelError);
}

TEST_CASE("gradient certificate on a reduced instance count") {
    CertifyOptions options;
    options.instances = 10;
    const auto cert = certify_gradients(options);
    CHECK(cert.frozen_nonzero_grad == 0);
    CHECK(cert.max_abs_frozen_grad == 0.0);
    CHECK(cert.frozen_fd_fraction() >= 0.95);
    CHECK(cert.trainable_mismatches == 0);
    CHECK(cert.max_trainable_rel_error < 1e-4);
}

TEST_CASE("double and taped forward passes agree") {
    SplitMix64 rng(10);
    const auto inst = random_instance(KernelDims{}, rng);
    Tape tape;
    const auto taped = tape_instance(inst, tape);
    CHECK(pipeline_loss(taped.instance).value() == doctest::Approx(pipeline_loss(inst)).epsilon(1e-14));
    CHECK(taped.params.size() == taped.roles.size());
    CHECK(pipeline_gradient(inst).size() == taped.params.size());
}

TEST_CASE("kernel-check report passes") {
    CertifyOptions options;
    options.instances = 5;
    const auto report = run_kernel_check(options);
    for (const auto& line : report.lines) {
        CAPTURE(line.name);
        CAPTURE(line.detail);
        CHECK(line.passed);
    }
}

}  // TEST_SUITE
