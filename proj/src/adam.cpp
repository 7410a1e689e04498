#include "charattr/adam.hpp"

#include <cmath>
#include <string>

#include "charattr/errors.hpp"

namespace charattr::nn {

void AdamState::init(const ParamSet& params) {
    step_count = 0;
    m.clear();
    v.clear();
    m.reserve(params.size());
    v.reserve(params.size());
    for (const auto& it : params) {
        m.emplace_back(it.second.values.size(), 0.0);
        v.emplace_back(it.second.values.size(), 0.0);
    }
}

void adam_step(ParamSet& params, AdamState& state) {
    if (state.m.size() != params.size())
        throw std::invalid_argument("adam: state not initialized for this parameter set");

    state.step_count += 1;
    const double lr = state.effective_lr();
    const double b1 = state.beta1, b2 = state.beta2;
    // bias correction at the current step
    const double b1c = 1.0 - std::pow(b1, static_cast<double>(state.step_count));
    const double b2c = 1.0 - std::pow(b2, static_cast<double>(state.step_count));

    for (size_t p = 0; p < params.size(); ++p) {
        Tensor& t = params.tensor(p);
        if (!t.has_grad())
            throw std::invalid_argument("adam: parameter '" + params.name(p) +
                                        "' has no gradient buffer");
        if (state.m[p].size() != t.values.size())
            throw std::invalid_argument("adam: moment shape mismatch for '" +
                                        params.name(p) + "'");
        auto& m = state.m[p];
        auto& v = state.v[p];
        for (size_t i = 0; i < t.values.size(); ++i) {
            double g = t.grad[i];
            if (!std::isfinite(g))
                throw NumericError("adam: non-finite gradient in parameter '" +
                                   params.name(p) + "' at index " + std::to_string(i));
            if (state.decay_mode == DecayMode::L2Weight) g += state.decay * t.values[i];
            m[i] = b1 * m[i] + (1.0 - b1) * g;
            v[i] = b2 * v[i] + (1.0 - b2) * g * g;
            const double mhat = m[i] / b1c;
            const double vhat = v[i] / b2c;
            t.values[i] -= lr * mhat / (std::sqrt(vhat) + state.epsilon);
        }
    }
}

}  // namespace charattr::nn
