#include <cmath>

#include "charattr/layers.hpp"
#include "charattr/rng.hpp"
#include "doctest.h"
#include "oracles.hpp"

using namespace charattr::nn;

namespace {

Tensor random_tensor(std::vector<int> shape, Rng& rng, double lo = -1.0, double hi = 1.0) {
    Tensor t(std::move(shape));
    for (auto& v : t.values) v = rng.uniform(lo, hi);
    return t;
}

std::vector<std::vector<double>> rows_of(const Tensor& t) {
    std::vector<std::vector<double>> out(static_cast<size_t>(t.dim(0)));
    for (int i = 0; i < t.dim(0); ++i)
        for (int j = 0; j < t.dim(1); ++j) out[static_cast<size_t>(i)].push_back(t.at(i, j));
    return out;
}

}  // namespace

TEST_CASE("conv1d identity kernel") {
    Tensor in({1, 5}, {1, 2, 3, 4, 5});
    Tensor ker({1, 1, 1}, {1.0});
    Tensor bias({1}, {0.0});
    const Tensor out = conv1d_forward(in, ker, bias);
    CHECK(out.shape == std::vector<int>{1, 5});
    for (int i = 0; i < 5; ++i) CHECK(out.at(0, i) == doctest::Approx(i + 1.0));
}

TEST_CASE("conv1d box filter") {
    Tensor in({1, 4}, {1, 1, 1, 1});
    Tensor ker({1, 1, 2}, {1, 1});
    Tensor bias({1}, {0.0});
    const Tensor out = conv1d_forward(in, ker, bias);
    CHECK(out.shape == std::vector<int>{1, 3});
    for (int i = 0; i < 3; ++i) CHECK(out.at(0, i) == doctest::Approx(2.0));
}

TEST_CASE("conv1d matches loop oracle on random input") {
    Rng rng(11);
    const Tensor in = random_tensor({3, 10}, rng);
    const Tensor ker = random_tensor({4, 3, 3}, rng);
    const Tensor bias = random_tensor({4}, rng);

    std::vector<std::vector<std::vector<double>>> oker(4);
    for (int c = 0; c < 4; ++c) {
        oker[static_cast<size_t>(c)].resize(3);
        for (int i = 0; i < 3; ++i)
            for (int k = 0; k < 3; ++k)
                oker[static_cast<size_t>(c)][static_cast<size_t>(i)].push_back(ker.at(c, i, k));
    }
    const auto expect = oracle::conv1d(rows_of(in), oker, bias.values);
    const Tensor got = conv1d_forward(in, ker, bias);
    REQUIRE(got.shape == std::vector<int>{4, 8});
    for (int c = 0; c < 4; ++c)
        for (int t = 0; t < 8; ++t)
            CHECK(std::abs(got.at(c, t) -
                           expect[static_cast<size_t>(c)][static_cast<size_t>(t)]) < 1e-12);
}

TEST_CASE("conv1d rejects bad shapes") {
    Tensor in({2, 6});
    Tensor ker({3, 2, 4});
    Tensor bias({3});
    CHECK_NOTHROW(conv1d_forward(in, ker, bias));

    Tensor wrong_channels({3, 1, 4});
    CHECK_THROWS_WITH_AS(conv1d_forward(in, wrong_channels, bias),
                         doctest::Contains("input channels"), std::invalid_argument);
    Tensor wrong_bias({2});
    CHECK_THROWS_WITH_AS(conv1d_forward(in, ker, wrong_bias), doctest::Contains("bias"),
                         std::invalid_argument);
    Tensor short_in({2, 3});
    CHECK_THROWS_WITH_AS(conv1d_forward(short_in, ker, bias), doctest::Contains("kernel size"),
                         std::invalid_argument);
}

TEST_CASE("maxpool1d picks window maxima") {
    Tensor in({1, 6}, {1, 5, 2, 7, 3, 3});
    const Tensor out = maxpool1d_forward(in, 3);
    CHECK(out.shape == std::vector<int>{1, 2});
    CHECK(out.at(0, 0) == 5.0);
    CHECK(out.at(0, 1) == 7.0);
}

TEST_CASE("maxpool1d constant input routes gradient to first index") {
    Tensor in({1, 6}, {2, 2, 2, 2, 2, 2});
    std::vector<int> argmax;
    const Tensor out = maxpool1d_forward(in, 3, &argmax);
    CHECK(out.at(0, 0) == 2.0);
    CHECK(out.at(0, 1) == 2.0);

    Tensor grad_out({1, 2}, {1.0, 1.0});
    Tensor grad_in({1, 6});
    maxpool1d_backward(argmax, grad_out, grad_in);
    CHECK(grad_in.values == std::vector<double>{1, 0, 0, 1, 0, 0});
}

TEST_CASE("maxpool1d drops remainder and matches oracle") {
    Rng rng(3);
    const Tensor in = random_tensor({2, 10}, rng);
    const Tensor out = maxpool1d_forward(in, 3);
    REQUIRE(out.shape == std::vector<int>{2, 3});
    const auto expect = oracle::maxpool1d(rows_of(in), 3);
    for (int c = 0; c < 2; ++c)
        for (int j = 0; j < 3; ++j)
            CHECK(out.at(c, j) == expect[static_cast<size_t>(c)][static_cast<size_t>(j)]);

    Tensor tiny({1, 2});
    CHECK_THROWS_AS(maxpool1d_forward(tiny, 3), std::invalid_argument);
}

TEST_CASE("dense identity and bias") {
    Tensor in({3}, {1, 2, 3});
    Tensor w({3, 3}, {1, 0, 0, 0, 1, 0, 0, 0, 1});
    Tensor b({3}, {0, 0, 0});
    CHECK(dense_forward(in, w, b).values == in.values);

    Tensor zero_in({3}, {0, 0, 0});
    Tensor bias({3}, {4, 5, 6});
    CHECK(dense_forward(zero_in, w, bias).values == bias.values);
}

TEST_CASE("dense matches dot-product oracle at char-model scale") {
    Rng rng(17);
    const Tensor in = random_tensor({9216}, rng);
    const Tensor w = random_tensor({512, 9216}, rng, -0.02, 0.02);
    const Tensor b = random_tensor({512}, rng);
    const Tensor got = dense_forward(in, w, b);

    std::vector<std::vector<double>> ow(512);
    for (int r = 0; r < 512; ++r)
        for (int c = 0; c < 9216; ++c) ow[static_cast<size_t>(r)].push_back(w.at(r, c));
    const auto expect = oracle::dense(in.values, ow, b.values);
    for (int r = 0; r < 512; ++r)
        CHECK(std::abs(got.at(r) - expect[static_cast<size_t>(r)]) < 1e-10);

    Tensor bad_b({7});
    CHECK_THROWS_AS(dense_forward(in, w, bad_b), std::invalid_argument);
}

TEST_CASE("relu forward and gradient convention") {
    Tensor in({3}, {-1, 0, 2});
    const Tensor out = relu_forward(in);
    CHECK(out.values == std::vector<double>{0, 0, 2});

    Tensor grad_out({3}, {1, 1, 1});
    Tensor grad_in({3});
    relu_backward(in, grad_out, grad_in);
    CHECK(grad_in.values == std::vector<double>{0, 0, 1});  // zero gradient at x == 0

    Tensor neg({4}, {-5, -1, -0.5, -2});
    const Tensor zeros = relu_forward(neg);
    for (double v : zeros.values) CHECK(v == 0.0);
}

TEST_CASE("relu(x) + relu(-x) == |x|") {
    Rng rng(23);
    Tensor x = random_tensor({100}, rng, -3.0, 3.0);
    Tensor neg(x.shape);
    for (size_t i = 0; i < x.values.size(); ++i) neg.values[i] = -x.values[i];
    const Tensor a = relu_forward(x), b = relu_forward(neg);
    for (size_t i = 0; i < x.values.size(); ++i)
        CHECK(a.values[i] + b.values[i] == doctest::Approx(std::abs(x.values[i])));
}

TEST_CASE("dropout identity cases") {
    Rng rng(5);
    Tensor in({4}, {1, 2, 3, 4});
    CHECK(dropout_forward(in, 0.0, rng, true).values == in.values);
    CHECK(dropout_forward(in, 0.7, rng, false).values == in.values);
    CHECK_THROWS_AS(dropout_forward(in, 1.0, rng, true), std::invalid_argument);
}

TEST_CASE("dropout preserves mean at rate 0.5") {
    Rng rng(99);
    Tensor in({100000});
    in.values.assign(in.values.size(), 1.0);
    const Tensor out = dropout_forward(in, 0.5, rng, true);
    double mean = 0.0;
    for (double v : out.values) mean += v;
    mean /= static_cast<double>(out.values.size());
    CHECK(mean > 0.98);
    CHECK(mean < 1.02);
}

TEST_CASE("dropout backward reuses the forward mask") {
    Rng rng(31);
    Tensor in({1000});
    in.values.assign(in.values.size(), 2.0);
    std::vector<double> mask;
    const Tensor out = dropout_forward(in, 0.4, rng, true, &mask);

    Tensor grad_out({1000});
    grad_out.values.assign(grad_out.values.size(), 1.0);
    Tensor grad_in({1000});
    dropout_backward(mask, grad_out, grad_in);
    for (size_t i = 0; i < mask.size(); ++i) {
        CHECK(grad_in.values[i] == mask[i]);
        CHECK(out.values[i] == 2.0 * mask[i]);
    }
}

TEST_CASE("embedding lookup with one-hot table") {
    Tensor eye({4, 4});
    for (int i = 0; i < 4; ++i) eye.at(i, i) = 1.0;
    const Tensor out = embedding_forward({2, 0}, eye);
    REQUIRE(out.shape == std::vector<int>{4, 2});
    for (int d = 0; d < 4; ++d) {
        CHECK(out.at(d, 0) == (d == 2 ? 1.0 : 0.0));
        CHECK(out.at(d, 1) == (d == 0 ? 1.0 : 0.0));
    }
}

TEST_CASE("embedding backward scatter-adds repeated indices") {
    Tensor table({5, 2});
    Tensor grad_out({2, 2}, {1, 10, 2, 20});  // columns (1,2) and (10,20)
    Tensor grad_table({5, 2});
    embedding_backward({3, 3}, grad_out, grad_table);
    CHECK(grad_table.at(3, 0) == 11.0);
    CHECK(grad_table.at(3, 1) == 22.0);
    for (int r = 0; r < 5; ++r)
        if (r != 3) CHECK(grad_table.at(r, 0) + grad_table.at(r, 1) == 0.0);
}

TEST_CASE("embedding geometry at attribution scale") {
    Tensor table({253, 253});
    std::vector<uint16_t> indices(3000, 7);
    const Tensor out = embedding_forward(indices, table);
    CHECK(out.shape == std::vector<int>{253, 3000});
}

TEST_CASE("embedding rejects out-of-range index with position") {
    Tensor table({4, 2});
    CHECK_THROWS_WITH_AS(embedding_forward({1, 9, 0}, table), doctest::Contains("position 1"),
                         std::invalid_argument);
}
