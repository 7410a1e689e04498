#pragma once

#include <cstdint>
#include <vector>

#include "charattr/params.hpp"

namespace charattr::nn {

// The optimizer's "decay" knob is ambiguous in common usage; both readings
// are available. InverseTimeLr is the default: the step size shrinks as
// base_lr / (1 + decay * step_count). L2Weight instead keeps the step size
// fixed and adds decay * theta to each gradient.
enum class DecayMode { InverseTimeLr, L2Weight };

struct AdamState {
    int64_t step_count = 0;
    double base_lr = 0.001;
    double decay = 0.0001;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;
    DecayMode decay_mode = DecayMode::InverseTimeLr;
    std::vector<std::vector<double>> m, v;  // one pair per parameter tensor

    // Moments are zero-initialized, shape-congruent with params.
    void init(const ParamSet& params);

    double effective_lr() const {
        if (decay_mode == DecayMode::L2Weight) return base_lr;
        return base_lr / (1.0 + decay * static_cast<double>(step_count));
    }
};

// One bias-corrected Adam update over every parameter tensor's grad buffer.
// step_count is incremented before the learning rate is evaluated.
// Non-finite gradients are rejected with the parameter's name.
void adam_step(ParamSet& params, AdamState& state);

}  // namespace charattr::nn
