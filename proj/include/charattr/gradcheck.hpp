#pragma once

#include <functional>
#include <string>
#include <vector>

#include "charattr/tensor.hpp"

namespace charattr::nn {

// A coordinate block to check: the tensor is perturbed in place, so the
// loss function must read the current values on every call.
struct GradCheckItem {
    std::string name;
    Tensor* tensor;
};

struct GradCheckReport {
    double max_rel_error = 0.0;
    std::string worst;  // "name[flat_index]"
};

// Compares analytic gradients against central finite differences.
// `backward` must zero the checked tensors' grads, run a full forward and
// backward pass and leave analytic gradients in tensor->grad; `loss` must
// recompute the same scalar from current tensor values without touching
// grads. Relative error per coordinate is
// |analytic - numeric| / max(1e-8, |analytic| + |numeric|).
GradCheckReport grad_check(const std::vector<GradCheckItem>& items,
                           const std::function<double()>& loss,
                           const std::function<void()>& backward, double eps = 1e-5);

}  // namespace charattr::nn
