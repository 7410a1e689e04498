#pragma once

#include <utility>

#include "charattr/tensor.hpp"

namespace charattr::nn {

// Numerically stable softmax (max-subtraction); output sums to 1.
Tensor softmax(const Tensor& logits);

// Categorical cross-entropy fused with softmax.
// loss = -log softmax(logits)[label]; grad = softmax(logits) - onehot(label).
struct LossResult {
    double loss;
    Tensor grad;
};
LossResult softmax_cross_entropy(const Tensor& logits, int label);

}  // namespace charattr::nn
