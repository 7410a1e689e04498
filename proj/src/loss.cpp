#include "charattr/loss.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace charattr::nn {

Tensor softmax(const Tensor& logits) {
    if (logits.rank() != 1)
        throw std::invalid_argument("softmax: logits must be rank 1, got " +
                                    shape_str(logits.shape));
    const double mx = *std::max_element(logits.values.begin(), logits.values.end());
    Tensor out(logits.shape);
    double sum = 0.0;
    for (size_t i = 0; i < logits.values.size(); ++i) {
        out.values[i] = std::exp(logits.values[i] - mx);
        sum += out.values[i];
    }
    for (auto& v : out.values) v /= sum;
    return out;
}

LossResult softmax_cross_entropy(const Tensor& logits, int label) {
    const int classes = logits.dim(0);
    if (label < 0 || label >= classes)
        throw std::invalid_argument("cross_entropy: label " + std::to_string(label) +
                                    " out of range [0, " + std::to_string(classes) + ")");
    const double mx = *std::max_element(logits.values.begin(), logits.values.end());
    double sum = 0.0;
    Tensor probs(logits.shape);
    for (int i = 0; i < classes; ++i) {
        probs.at(i) = std::exp(logits.at(i) - mx);
        sum += probs.at(i);
    }
    // loss via log-sum-exp so extreme logits cannot overflow
    const double loss = std::log(sum) - (logits.at(label) - mx);
    LossResult res{loss, Tensor(logits.shape)};
    for (int i = 0; i < classes; ++i)
        res.grad.at(i) = probs.at(i) / sum - (i == label ? 1.0 : 0.0);
    return res;
}

}  // namespace charattr::nn
