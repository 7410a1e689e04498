#include <cmath>

#include "charattr/loss.hpp"
#include "charattr/rng.hpp"
#include "doctest.h"

using namespace charattr::nn;

TEST_CASE("uniform logits give ln C loss") {
    Tensor logits({6}, {0.3, 0.3, 0.3, 0.3, 0.3, 0.3});
    const auto res = softmax_cross_entropy(logits, 2);
    CHECK(res.loss == doctest::Approx(std::log(6.0)).epsilon(1e-12));
    CHECK(res.loss == doctest::Approx(1.791759469228055).epsilon(1e-9));
}

TEST_CASE("extreme logits do not overflow") {
    Tensor logits({2}, {1000.0, 0.0});
    const auto res = softmax_cross_entropy(logits, 0);
    CHECK(std::isfinite(res.loss));
    CHECK(res.loss == doctest::Approx(0.0).epsilon(1e-9));
    for (double g : res.grad.values) CHECK(std::isfinite(g));

    Tensor neg({3}, {-1000.0, -1000.0, -1000.0});
    const auto res2 = softmax_cross_entropy(neg, 1);
    CHECK(res2.loss == doctest::Approx(std::log(3.0)));
}

TEST_CASE("softmax sums to one under large magnitudes") {
    Rng rng(13);
    for (int trial = 0; trial < 200; ++trial) {
        const int c = 2 + static_cast<int>(rng.below(20));
        Tensor logits({c});
        for (auto& v : logits.values) v = rng.uniform(-1000.0, 1000.0);
        const Tensor p = softmax(logits);
        double sum = 0.0;
        for (double v : p.values) {
            REQUIRE(v >= 0.0);
            sum += v;
        }
        CHECK(std::abs(sum - 1.0) < 1e-12);
    }
}

TEST_CASE("cross-entropy gradient matches finite differences") {
    Rng rng(21);
    Tensor logits({14});
    for (auto& v : logits.values) v = rng.uniform(-2.0, 2.0);
    const int label = 5;
    const auto res = softmax_cross_entropy(logits, label);

    const double eps = 1e-6;
    for (int i = 0; i < 14; ++i) {
        Tensor up = logits, down = logits;
        up.at(i) += eps;
        down.at(i) -= eps;
        const double numeric = (softmax_cross_entropy(up, label).loss -
                                softmax_cross_entropy(down, label).loss) /
                               (2 * eps);
        CHECK(res.grad.at(i) == doctest::Approx(numeric).epsilon(1e-6));
    }
}

TEST_CASE("gradient sums to zero and label out of range is rejected") {
    Tensor logits({4}, {1, 2, 3, 4});
    const auto res = softmax_cross_entropy(logits, 3);
    double sum = 0.0;
    for (double g : res.grad.values) sum += g;
    CHECK(std::abs(sum) < 1e-12);  // softmax probs sum to 1, onehot sums to 1

    CHECK_THROWS_AS(softmax_cross_entropy(logits, 4), std::invalid_argument);
    CHECK_THROWS_AS(softmax_cross_entropy(logits, -1), std::invalid_argument);
}
