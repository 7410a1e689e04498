#pragma once

#include <cstdint>
#include <vector>

#include "charattr/rng.hpp"
#include "charattr/tensor.hpp"

namespace charattr::nn {

// Layer forward/backward passes. Conventions shared by every function here:
//  * sequence tensors are channels-first: [channels, length]
//  * backward functions ACCUMULATE (+=) into the gradient buffers they are
//    given, so per-sample gradients sum naturally over a batch
//  * shape violations throw std::invalid_argument naming the offending
//    dimension

// Valid (no padding) 1-d convolution, stride 1.
// input [C_in, L], kernels [C_out, C_in, K], bias [C_out] -> [C_out, L-K+1]
Tensor conv1d_forward(const Tensor& input, const Tensor& kernels, const Tensor& bias);

// grad_out [C_out, L-K+1]; accumulates into grad_input [C_in, L],
// grad_kernels [C_out, C_in, K], grad_bias [C_out].
void conv1d_backward(const Tensor& input, const Tensor& kernels, const Tensor& grad_out,
                     Tensor& grad_input, Tensor& grad_kernels, Tensor& grad_bias);

// Non-overlapping max pooling: stride = k, trailing remainder dropped.
// input [C, L] -> [C, floor(L/k)]. argmax, when given, records the flat
// input position of each window maximum (first occurrence on ties) for
// the backward pass.
Tensor maxpool1d_forward(const Tensor& input, int k, std::vector<int>* argmax = nullptr);
void maxpool1d_backward(const std::vector<int>& argmax, const Tensor& grad_out,
                        Tensor& grad_input);

// Fully connected layer: weights [M, N] * input [N] + bias [M] -> [M].
Tensor dense_forward(const Tensor& input, const Tensor& weights, const Tensor& bias);
void dense_backward(const Tensor& input, const Tensor& weights, const Tensor& grad_out,
                    Tensor& grad_input, Tensor& grad_weights, Tensor& grad_bias);

// Elementwise max(0, x). Gradient at x == 0 is defined as 0.
Tensor relu_forward(const Tensor& input);
void relu_backward(const Tensor& input, const Tensor& grad_out, Tensor& grad_input);

// Inverted dropout: in training mode each element is zeroed with
// probability `rate` and survivors are scaled by 1/(1-rate); inference is
// the identity. The mask (0 or 1/(1-rate) per element) is written to
// `mask` for the backward pass. rate must be in [0, 1).
Tensor dropout_forward(const Tensor& input, double rate, Rng& rng, bool training,
                       std::vector<double>* mask = nullptr);
void dropout_backward(const std::vector<double>& mask, const Tensor& grad_out,
                      Tensor& grad_input);

// Embedding lookup, channels-first: output column t is row indices[t] of
// table [V, D], so the result [D, L] feeds conv1d directly. Backward
// scatter-adds into grad_table; repeated indices accumulate.
Tensor embedding_forward(const std::vector<uint16_t>& indices, const Tensor& table);
void embedding_backward(const std::vector<uint16_t>& indices, const Tensor& grad_out,
                        Tensor& grad_table);

// LSTM over a [D, T] sequence with H hidden units, zero initial hidden and
// cell state; returns the final hidden state h_T [H]. Gate order is
// input, forget, cell candidate, output. wx_* are [H, D], wh_* [H, H],
// b_* [H].
struct LstmWeights {
    const Tensor *wx_i, *wx_f, *wx_g, *wx_o;
    const Tensor *wh_i, *wh_f, *wh_g, *wh_o;
    const Tensor *b_i, *b_f, *b_g, *b_o;
};
struct LstmGrads {
    Tensor *wx_i, *wx_f, *wx_g, *wx_o;
    Tensor *wh_i, *wh_f, *wh_g, *wh_o;
    Tensor *b_i, *b_f, *b_g, *b_o;
};

// Per-step activations retained for backpropagation through time.
struct LstmCache {
    int hidden = 0, steps = 0;
    std::vector<double> i, f, g, o;  // gate activations, H per step
    std::vector<double> c, h;        // cell / hidden states, H per step
    std::vector<double> tanh_c;      // tanh(c_t), H per step
};

Tensor lstm_forward(const Tensor& sequence, const LstmWeights& w, LstmCache* cache = nullptr);

// Full BPTT from the gradient of the final hidden state. Accumulates into
// every weight gradient and grad_sequence [D, T].
void lstm_backward(const Tensor& sequence, const LstmWeights& w, const LstmCache& cache,
                   const Tensor& grad_h_final, const LstmGrads& grads, Tensor& grad_sequence);

}  // namespace charattr::nn
