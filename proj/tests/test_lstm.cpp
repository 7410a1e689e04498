#include <cmath>

#include "charattr/gradcheck.hpp"
#include "charattr/layers.hpp"
#include "charattr/rng.hpp"
#include "doctest.h"
#include "oracles.hpp"

using namespace charattr::nn;

namespace {

struct LstmFixture {
    Tensor wx_i, wx_f, wx_g, wx_o;
    Tensor wh_i, wh_f, wh_g, wh_o;
    Tensor b_i, b_f, b_g, b_o;

    LstmFixture(int hid, int dim)
        : wx_i({hid, dim}), wx_f({hid, dim}), wx_g({hid, dim}), wx_o({hid, dim}),
          wh_i({hid, hid}), wh_f({hid, hid}), wh_g({hid, hid}), wh_o({hid, hid}),
          b_i({hid}), b_f({hid}), b_g({hid}), b_o({hid}) {}

    void randomize(Rng& rng) {
        for (Tensor* t : all())
            for (auto& v : t->values) v = rng.uniform(-0.5, 0.5);
    }

    std::vector<Tensor*> all() {
        return {&wx_i, &wx_f, &wx_g, &wx_o, &wh_i, &wh_f, &wh_g, &wh_o,
                &b_i,  &b_f,  &b_g,  &b_o};
    }

    LstmWeights weights() const {
        return {&wx_i, &wx_f, &wx_g, &wx_o, &wh_i, &wh_f, &wh_g, &wh_o,
                &b_i,  &b_f,  &b_g,  &b_o};
    }

    oracle::LstmRef ref() const {
        auto mat = [](const Tensor& t) {
            std::vector<std::vector<double>> m(static_cast<size_t>(t.dim(0)));
            for (int r = 0; r < t.dim(0); ++r)
                for (int c = 0; c < t.dim(1); ++c) m[static_cast<size_t>(r)].push_back(t.at(r, c));
            return m;
        };
        oracle::LstmRef w;
        w.wx_i = mat(wx_i); w.wx_f = mat(wx_f); w.wx_g = mat(wx_g); w.wx_o = mat(wx_o);
        w.wh_i = mat(wh_i); w.wh_f = mat(wh_f); w.wh_g = mat(wh_g); w.wh_o = mat(wh_o);
        w.b_i = b_i.values; w.b_f = b_f.values; w.b_g = b_g.values; w.b_o = b_o.values;
        return w;
    }
};

}  // namespace

TEST_CASE("lstm with all-zero parameters yields zero state") {
    LstmFixture w(3, 2);
    Tensor seq({2, 4}, {1, 2, 3, 4, 5, 6, 7, 8});
    const Tensor h = lstm_forward(seq, w.weights());
    for (double v : h.values) CHECK(v == 0.0);  // sigmoid(0)*tanh(0) composition
}

TEST_CASE("lstm single step equals the hand-unrolled cell") {
    // H = 2, D = 2, one timestep, every weight written out explicitly
    LstmFixture w(2, 2);
    w.wx_i.values = {0.1, 0.2, -0.1, 0.3};
    w.wx_f.values = {0.2, -0.2, 0.4, 0.1};
    w.wx_g.values = {0.5, -0.3, 0.2, 0.2};
    w.wx_o.values = {-0.4, 0.1, 0.3, -0.2};
    // wh_* irrelevant at t=0 (h_prev = 0) but nonzero to catch misuse
    w.wh_i.values = {9, 9, 9, 9};
    w.wh_f.values = {9, 9, 9, 9};
    w.wh_g.values = {9, 9, 9, 9};
    w.wh_o.values = {9, 9, 9, 9};
    w.b_i.values = {0.05, -0.05};
    w.b_f.values = {0.1, 0.0};
    w.b_g.values = {-0.1, 0.2};
    w.b_o.values = {0.0, 0.1};

    const double x0 = 0.7, x1 = -0.3;
    Tensor seq({2, 1}, {x0, x1});

    auto sig = [](double v) { return 1.0 / (1.0 + std::exp(-v)); };
    for (int r = 0; r < 2; ++r) {
        const double i = sig(w.wx_i.at(r, 0) * x0 + w.wx_i.at(r, 1) * x1 + w.b_i.at(r));
        const double g = std::tanh(w.wx_g.at(r, 0) * x0 + w.wx_g.at(r, 1) * x1 + w.b_g.at(r));
        const double o = sig(w.wx_o.at(r, 0) * x0 + w.wx_o.at(r, 1) * x1 + w.b_o.at(r));
        const double c = i * g;  // forget gate has nothing to forget at t=0
        const double expect = o * std::tanh(c);
        const Tensor h = lstm_forward(seq, w.weights());
        CHECK(h.at(r) == doctest::Approx(expect).epsilon(1e-12));
    }
}

TEST_CASE("lstm forward matches reference over several steps") {
    Rng rng(77);
    LstmFixture w(3, 4);
    w.randomize(rng);
    Tensor seq({4, 5});
    for (auto& v : seq.values) v = rng.uniform(-1, 1);

    std::vector<std::vector<double>> x(5, std::vector<double>(4));
    for (int t = 0; t < 5; ++t)
        for (int d = 0; d < 4; ++d) x[static_cast<size_t>(t)][static_cast<size_t>(d)] =
            seq.at(d, t);
    const auto hs = oracle::lstm_states(w.ref(), x);
    const Tensor h = lstm_forward(seq, w.weights());
    for (int r = 0; r < 3; ++r)
        CHECK(std::abs(h.at(r) - hs.back()[static_cast<size_t>(r)]) < 1e-12);
}

TEST_CASE("lstm gradients match finite differences") {
    for (uint64_t seed : {1ULL, 2ULL, 3ULL}) {
        Rng rng(seed);
        LstmFixture w(3, 4);
        w.randomize(rng);
        Tensor seq({4, 5});
        for (auto& v : seq.values) v = rng.uniform(-1, 1);
        Tensor probe({3});
        for (auto& v : probe.values) v = rng.uniform(-1, 1);

        // scalar objective: probe . h_T
        auto loss = [&] {
            const Tensor h = lstm_forward(seq, w.weights());
            double acc = 0.0;
            for (int r = 0; r < 3; ++r) acc += probe.at(r) * h.at(r);
            return acc;
        };

        std::vector<GradCheckItem> items;
        const char* names[] = {"wx_i", "wx_f", "wx_g", "wx_o", "wh_i", "wh_f",
                               "wh_g", "wh_o", "b_i",  "b_f",  "b_g",  "b_o"};
        auto tensors = w.all();
        for (size_t i = 0; i < tensors.size(); ++i) items.push_back({names[i], tensors[i]});
        items.push_back({"sequence", &seq});

        auto backward = [&] {
            for (auto& item : items) {
                item.tensor->alloc_grad();
                item.tensor->zero_grad();
            }
            LstmCache cache;
            lstm_forward(seq, w.weights(), &cache);
            LstmGrads grads;
            std::vector<Tensor> gt;
            gt.reserve(12);
            for (Tensor* t : tensors) gt.emplace_back(t->shape);
            grads = {&gt[0], &gt[1], &gt[2], &gt[3], &gt[4],  &gt[5],
                     &gt[6], &gt[7], &gt[8], &gt[9], &gt[10], &gt[11]};
            Tensor g_seq(seq.shape);
            lstm_backward(seq, w.weights(), cache, probe, grads, g_seq);
            for (size_t i = 0; i < tensors.size(); ++i) tensors[i]->grad = gt[i].values;
            seq.grad = g_seq.values;
        };

        const auto report = grad_check(items, loss, backward);
        INFO("seed ", seed, " worst ", report.worst);
        CHECK(report.max_rel_error < 1e-4);
    }
}

TEST_CASE("lstm rejects mismatched shapes") {
    LstmFixture w(3, 4);
    Tensor wrong_dim({5, 2});
    CHECK_THROWS_WITH_AS(lstm_forward(wrong_dim, w.weights()), doctest::Contains("gate wx"),
                         std::invalid_argument);
    Tensor not_2d({4});
    CHECK_THROWS_AS(lstm_forward(not_2d, w.weights()), std::invalid_argument);
}
