#include <cmath>

#include "charattr/gradcheck.hpp"
#include "charattr/layers.hpp"
#include "charattr/loss.hpp"
#include "charattr/rng.hpp"
#include "doctest.h"

using namespace charattr::nn;

namespace {

void randomize(Tensor& t, Rng& rng, double lo = -1.0, double hi = 1.0) {
    for (auto& v : t.values) v = rng.uniform(lo, hi);
}

double dot(const Tensor& probe, const Tensor& x) {
    double acc = 0.0;
    for (size_t i = 0; i < x.values.size(); ++i) acc += probe.values[i] * x.values[i];
    return acc;
}

}  // namespace

TEST_CASE("dense layer gradients are tight") {
    for (uint64_t seed = 0; seed < 5; ++seed) {
        Rng rng(seed);
        Tensor in({4}), w({8, 4}), b({8}), probe({8});
        randomize(in, rng);
        randomize(w, rng);
        randomize(b, rng);
        randomize(probe, rng);

        std::vector<GradCheckItem> items{{"input", &in}, {"weights", &w}, {"bias", &b}};
        auto loss = [&] { return dot(probe, dense_forward(in, w, b)); };
        auto backward = [&] {
            for (auto& it : items) {
                it.tensor->alloc_grad();
                it.tensor->zero_grad();
            }
            Tensor gi(in.shape), gw(w.shape), gb(b.shape);
            dense_backward(in, w, probe, gi, gw, gb);
            in.grad = gi.values;
            w.grad = gw.values;
            b.grad = gb.values;
        };
        const auto rep = grad_check(items, loss, backward);
        INFO("seed ", seed, " worst ", rep.worst);
        CHECK(rep.max_rel_error < 1e-6);
    }
}

TEST_CASE("conv relu maxpool chain gradients") {
    for (uint64_t seed = 0; seed < 5; ++seed) {
        Rng rng(seed + 100);
        Tensor in({3, 12}), ker({4, 3, 3}), bias({4});
        randomize(in, rng);
        randomize(ker, rng);
        randomize(bias, rng);
        Tensor probe({4, 3});
        randomize(probe, rng);

        auto forward = [&](std::vector<int>* argmax, Tensor* conv_out, Tensor* relu_out) {
            const Tensor c = conv1d_forward(in, ker, bias);
            const Tensor r = relu_forward(c);
            const Tensor pooled = maxpool1d_forward(r, 3, argmax);
            if (conv_out) *conv_out = c;
            if (relu_out) *relu_out = r;
            return pooled;
        };

        std::vector<GradCheckItem> items{{"input", &in}, {"kernels", &ker}, {"bias", &bias}};
        auto loss = [&] { return dot(probe, forward(nullptr, nullptr, nullptr)); };
        auto backward = [&] {
            for (auto& it : items) {
                it.tensor->alloc_grad();
                it.tensor->zero_grad();
            }
            std::vector<int> argmax;
            Tensor conv_out, relu_out;
            forward(&argmax, &conv_out, &relu_out);
            Tensor g_relu(relu_out.shape);
            maxpool1d_backward(argmax, probe, g_relu);
            Tensor g_conv(conv_out.shape);
            relu_backward(conv_out, g_relu, g_conv);
            Tensor gi(in.shape), gk(ker.shape), gb(bias.shape);
            conv1d_backward(in, ker, g_conv, gi, gk, gb);
            in.grad = gi.values;
            ker.grad = gk.values;
            bias.grad = gb.values;
        };
        const auto rep = grad_check(items, loss, backward);
        INFO("seed ", seed, " worst ", rep.worst);
        CHECK(rep.max_rel_error < 1e-4);
    }
}

TEST_CASE("embedding and dropout gradients with a frozen mask") {
    for (uint64_t seed = 0; seed < 5; ++seed) {
        Rng mask_rng(seed + 500);
        Tensor table({6, 3});
        randomize(table, mask_rng);
        const std::vector<uint16_t> indices{1, 4, 4, 0};
        Tensor probe({3, 4});
        randomize(probe, mask_rng);

        // freeze one dropout mask for the whole check
        std::vector<double> mask;
        {
            Rng r(seed + 900);
            Tensor once = embedding_forward(indices, table);
            dropout_forward(once, 0.4, r, true, &mask);
        }
        auto apply_mask = [&mask](const Tensor& t) {
            Tensor out(t.shape);
            for (size_t i = 0; i < t.values.size(); ++i) out.values[i] = t.values[i] * mask[i];
            return out;
        };

        std::vector<GradCheckItem> items{{"table", &table}};
        auto loss = [&] { return dot(probe, apply_mask(embedding_forward(indices, table))); };
        auto backward = [&] {
            table.alloc_grad();
            table.zero_grad();
            Tensor g_emb(probe.shape);
            dropout_backward(mask, probe, g_emb);
            Tensor gt(table.shape);
            embedding_backward(indices, g_emb, gt);
            table.grad = gt.values;
        };
        const auto rep = grad_check(items, loss, backward);
        INFO("seed ", seed, " worst ", rep.worst);
        CHECK(rep.max_rel_error < 1e-6);
    }
}

TEST_CASE("softmax cross entropy begins the chain correctly") {
    for (uint64_t seed = 0; seed < 5; ++seed) {
        Rng rng(seed + 300);
        Tensor logits({7});
        randomize(logits, rng, -2, 2);
        const int label = static_cast<int>(rng.below(7));

        std::vector<GradCheckItem> items{{"logits", &logits}};
        auto loss = [&] { return softmax_cross_entropy(logits, label).loss; };
        auto backward = [&] {
            logits.alloc_grad();
            logits.zero_grad();
            logits.grad = softmax_cross_entropy(logits, label).grad.values;
        };
        const auto rep = grad_check(items, loss, backward);
        CHECK(rep.max_rel_error < 1e-6);
    }
}

TEST_CASE("negative control: a sign error is loud") {
    Rng rng(4242);
    Tensor in({2, 8}), ker({3, 2, 3}), bias({3});
    randomize(in, rng);
    randomize(ker, rng);
    randomize(bias, rng);
    Tensor probe({3, 6});
    randomize(probe, rng);

    std::vector<GradCheckItem> items{{"kernels", &ker}};
    auto loss = [&] { return dot(probe, conv1d_forward(in, ker, bias)); };
    auto broken_backward = [&] {
        ker.alloc_grad();
        ker.zero_grad();
        Tensor gi(in.shape), gk(ker.shape), gb(bias.shape);
        conv1d_backward(in, ker, probe, gi, gk, gb);
        for (auto& v : gk.values) v = -v;  // the deliberate bug
        ker.grad = gk.values;
    };
    const auto rep = grad_check(items, loss, broken_backward);
    CHECK(rep.max_rel_error > 0.1);
}
