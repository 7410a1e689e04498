#include "charattr/layers.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace charattr::nn {

namespace {

void require_rank(const Tensor& t, int rank, const char* what) {
    if (t.rank() != rank)
        throw std::invalid_argument(std::string(what) + ": expected rank " +
                                    std::to_string(rank) + ", got " +
                                    shape_str(t.shape));
}

}  // namespace

Tensor conv1d_forward(const Tensor& input, const Tensor& kernels, const Tensor& bias) {
    require_rank(input, 2, "conv1d input");
    require_rank(kernels, 3, "conv1d kernels");
    require_rank(bias, 1, "conv1d bias");
    const int c_in = input.dim(0), len = input.dim(1);
    const int c_out = kernels.dim(0), k = kernels.dim(2);
    if (kernels.dim(1) != c_in)
        throw std::invalid_argument("conv1d: kernel input channels " +
                                    std::to_string(kernels.dim(1)) +
                                    " != input channels " + std::to_string(c_in));
    if (bias.dim(0) != c_out)
        throw std::invalid_argument("conv1d: bias size " + std::to_string(bias.dim(0)) +
                                    " != output channels " + std::to_string(c_out));
    if (len < k)
        throw std::invalid_argument("conv1d: input length " + std::to_string(len) +
                                    " < kernel size " + std::to_string(k));

    const int out_len = len - k + 1;
    Tensor out({c_out, out_len});
    for (int c = 0; c < c_out; ++c) {
        double* orow = &out.values[static_cast<size_t>(c) * out_len];
        for (int t = 0; t < out_len; ++t) orow[t] = bias.at(c);
        for (int i = 0; i < c_in; ++i) {
            const double* irow = &input.values[static_cast<size_t>(i) * len];
            const double* krow = &kernels.values[(static_cast<size_t>(c) * c_in + i) * k];
            for (int kk = 0; kk < k; ++kk) {
                const double w = krow[kk];
                for (int t = 0; t < out_len; ++t) orow[t] += irow[t + kk] * w;
            }
        }
    }
    return out;
}

void conv1d_backward(const Tensor& input, const Tensor& kernels, const Tensor& grad_out,
                     Tensor& grad_input, Tensor& grad_kernels, Tensor& grad_bias) {
    const int c_in = input.dim(0), len = input.dim(1);
    const int c_out = kernels.dim(0), k = kernels.dim(2);
    const int out_len = len - k + 1;
    require_shape(grad_out, {c_out, out_len}, "conv1d grad_out");
    require_shape(grad_input, input.shape, "conv1d grad_input");
    require_shape(grad_kernels, kernels.shape, "conv1d grad_kernels");
    require_shape(grad_bias, {c_out}, "conv1d grad_bias");

    for (int c = 0; c < c_out; ++c) {
        const double* grow = &grad_out.values[static_cast<size_t>(c) * out_len];
        double gb = 0.0;
        for (int t = 0; t < out_len; ++t) gb += grow[t];
        grad_bias.at(c) += gb;
        for (int i = 0; i < c_in; ++i) {
            const double* irow = &input.values[static_cast<size_t>(i) * len];
            const double* krow = &kernels.values[(static_cast<size_t>(c) * c_in + i) * k];
            double* gin = &grad_input.values[static_cast<size_t>(i) * len];
            double* gker = &grad_kernels.values[(static_cast<size_t>(c) * c_in + i) * k];
            for (int kk = 0; kk < k; ++kk) {
                const double w = krow[kk];
                double gw = 0.0;
                for (int t = 0; t < out_len; ++t) {
                    gin[t + kk] += grow[t] * w;
                    gw += grow[t] * irow[t + kk];
                }
                gker[kk] += gw;
            }
        }
    }
}

Tensor maxpool1d_forward(const Tensor& input, int k, std::vector<int>* argmax) {
    require_rank(input, 2, "maxpool1d input");
    if (k < 1) throw std::invalid_argument("maxpool1d: pool size must be >= 1");
    const int channels = input.dim(0), len = input.dim(1);
    if (len < k)
        throw std::invalid_argument("maxpool1d: input length " + std::to_string(len) +
                                    " < pool size " + std::to_string(k));
    const int out_len = len / k;
    Tensor out({channels, out_len});
    if (argmax) argmax->assign(static_cast<size_t>(channels) * out_len, 0);
    for (int c = 0; c < channels; ++c) {
        const double* irow = &input.values[static_cast<size_t>(c) * len];
        for (int j = 0; j < out_len; ++j) {
            int best = j * k;
            double m = irow[best];
            for (int t = j * k + 1; t < (j + 1) * k; ++t)
                if (irow[t] > m) {  // strict: first occurrence wins ties
                    m = irow[t];
                    best = t;
                }
            out.at(c, j) = m;
            if (argmax) (*argmax)[static_cast<size_t>(c) * out_len + j] = c * len + best;
        }
    }
    return out;
}

void maxpool1d_backward(const std::vector<int>& argmax, const Tensor& grad_out,
                        Tensor& grad_input) {
    if (argmax.size() != grad_out.values.size())
        throw std::invalid_argument("maxpool1d: argmax cache does not match grad_out");
    for (size_t i = 0; i < argmax.size(); ++i)
        grad_input.values[static_cast<size_t>(argmax[i])] += grad_out.values[i];
}

Tensor dense_forward(const Tensor& input, const Tensor& weights, const Tensor& bias) {
    require_rank(input, 1, "dense input");
    require_rank(weights, 2, "dense weights");
    require_rank(bias, 1, "dense bias");
    const int n = input.dim(0);
    const int m = weights.dim(0);
    if (weights.dim(1) != n)
        throw std::invalid_argument("dense: weight columns " + std::to_string(weights.dim(1)) +
                                    " != input size " + std::to_string(n));
    if (bias.dim(0) != m)
        throw std::invalid_argument("dense: bias size " + std::to_string(bias.dim(0)) +
                                    " != output size " + std::to_string(m));
    Tensor out({m});
    for (int r = 0; r < m; ++r) {
        const double* wrow = &weights.values[static_cast<size_t>(r) * n];
        double acc = bias.at(r);
        for (int c = 0; c < n; ++c) acc += wrow[c] * input.at(c);
        out.at(r) = acc;
    }
    return out;
}

void dense_backward(const Tensor& input, const Tensor& weights, const Tensor& grad_out,
                    Tensor& grad_input, Tensor& grad_weights, Tensor& grad_bias) {
    const int n = input.dim(0), m = weights.dim(0);
    require_shape(grad_out, {m}, "dense grad_out");
    require_shape(grad_input, {n}, "dense grad_input");
    require_shape(grad_weights, weights.shape, "dense grad_weights");
    require_shape(grad_bias, {m}, "dense grad_bias");
    for (int r = 0; r < m; ++r) {
        const double g = grad_out.at(r);
        grad_bias.at(r) += g;
        const double* wrow = &weights.values[static_cast<size_t>(r) * n];
        double* gwrow = &grad_weights.values[static_cast<size_t>(r) * n];
        for (int c = 0; c < n; ++c) {
            grad_input.at(c) += g * wrow[c];
            gwrow[c] += g * input.at(c);
        }
    }
}

Tensor relu_forward(const Tensor& input) {
    Tensor out(input.shape);
    for (size_t i = 0; i < input.values.size(); ++i)
        out.values[i] = input.values[i] > 0.0 ? input.values[i] : 0.0;
    return out;
}

void relu_backward(const Tensor& input, const Tensor& grad_out, Tensor& grad_input) {
    if (!input.same_shape(grad_out) || !input.same_shape(grad_input))
        throw std::invalid_argument("relu: mismatched shapes");
    for (size_t i = 0; i < input.values.size(); ++i)
        if (input.values[i] > 0.0) grad_input.values[i] += grad_out.values[i];
}

Tensor dropout_forward(const Tensor& input, double rate, Rng& rng, bool training,
                       std::vector<double>* mask) {
    if (rate < 0.0 || rate >= 1.0)
        throw std::invalid_argument("dropout: rate must be in [0, 1), got " +
                                    std::to_string(rate));
    if (!training || rate == 0.0) {
        if (mask) mask->assign(input.values.size(), 1.0);
        return input;
    }
    const double keep_scale = 1.0 / (1.0 - rate);
    Tensor out(input.shape);
    if (mask) mask->assign(input.values.size(), 0.0);
    for (size_t i = 0; i < input.values.size(); ++i) {
        const double m = rng.uniform() < rate ? 0.0 : keep_scale;
        out.values[i] = input.values[i] * m;
        if (mask) (*mask)[i] = m;
    }
    return out;
}

void dropout_backward(const std::vector<double>& mask, const Tensor& grad_out,
                      Tensor& grad_input) {
    if (mask.size() != grad_out.values.size() || mask.size() != grad_input.values.size())
        throw std::invalid_argument("dropout: mask does not match gradient shape");
    for (size_t i = 0; i < mask.size(); ++i)
        grad_input.values[i] += grad_out.values[i] * mask[i];
}

Tensor embedding_forward(const std::vector<uint16_t>& indices, const Tensor& table) {
    if (table.rank() != 2)
        throw std::invalid_argument("embedding: table must be rank 2, got " +
                                    shape_str(table.shape));
    const int vocab = table.dim(0), dim = table.dim(1);
    const int len = static_cast<int>(indices.size());
    if (len == 0) throw std::invalid_argument("embedding: empty index sequence");
    Tensor out({dim, len});
    for (int t = 0; t < len; ++t) {
        const int idx = indices[static_cast<size_t>(t)];
        if (idx >= vocab)
            throw std::invalid_argument("embedding: index " + std::to_string(idx) +
                                        " at position " + std::to_string(t) +
                                        " out of range [0, " + std::to_string(vocab) + ")");
        for (int d = 0; d < dim; ++d)
            out.at(d, t) = table.at(idx, d);
    }
    return out;
}

void embedding_backward(const std::vector<uint16_t>& indices, const Tensor& grad_out,
                        Tensor& grad_table) {
    const int dim = grad_table.dim(1);
    const int len = static_cast<int>(indices.size());
    require_shape(grad_out, {dim, len}, "embedding grad_out");
    for (int t = 0; t < len; ++t) {
        const int idx = indices[static_cast<size_t>(t)];
        double* row = &grad_table.values[static_cast<size_t>(idx) * dim];
        for (int d = 0; d < dim; ++d) row[d] += grad_out.at(d, t);
    }
}

namespace {

inline double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

// gate pre-activation: wx [H,D] * x [D] + wh [H,H] * h [H] + b [H]
void gate_preact(const Tensor& wx, const Tensor& wh, const Tensor& b,
                 const double* x, const double* h, int dim, int hid, double* out) {
    for (int r = 0; r < hid; ++r) {
        const double* wxr = &wx.values[static_cast<size_t>(r) * dim];
        const double* whr = &wh.values[static_cast<size_t>(r) * hid];
        double acc = b.at(r);
        for (int c = 0; c < dim; ++c) acc += wxr[c] * x[c];
        for (int c = 0; c < hid; ++c) acc += whr[c] * h[c];
        out[r] = acc;
    }
}

void check_lstm_shapes(const Tensor& sequence, const LstmWeights& w) {
    if (sequence.rank() != 2)
        throw std::invalid_argument("lstm: sequence must be [D, T], got " +
                                    shape_str(sequence.shape));
    const int dim = sequence.dim(0);
    const int hid = w.b_i->dim(0);
    const Tensor* wx[4] = {w.wx_i, w.wx_f, w.wx_g, w.wx_o};
    const Tensor* wh[4] = {w.wh_i, w.wh_f, w.wh_g, w.wh_o};
    const Tensor* b[4] = {w.b_i, w.b_f, w.b_g, w.b_o};
    const char* names[4] = {"input", "forget", "cell", "output"};
    for (int gi = 0; gi < 4; ++gi) {
        if (wx[gi]->shape != std::vector<int>{hid, dim})
            throw std::invalid_argument(std::string("lstm: ") + names[gi] +
                                        " gate wx shape " + shape_str(wx[gi]->shape) +
                                        " != [" + std::to_string(hid) + ", " +
                                        std::to_string(dim) + "]");
        if (wh[gi]->shape != std::vector<int>{hid, hid})
            throw std::invalid_argument(std::string("lstm: ") + names[gi] +
                                        " gate wh shape " + shape_str(wh[gi]->shape));
        if (b[gi]->shape != std::vector<int>{hid})
            throw std::invalid_argument(std::string("lstm: ") + names[gi] +
                                        " gate bias shape " + shape_str(b[gi]->shape));
    }
}

}  // namespace

Tensor lstm_forward(const Tensor& sequence, const LstmWeights& w, LstmCache* cache) {
    check_lstm_shapes(sequence, w);
    const int dim = sequence.dim(0), steps = sequence.dim(1);
    const int hid = w.b_i->dim(0);

    LstmCache local;
    LstmCache& c = cache ? *cache : local;
    c.hidden = hid;
    c.steps = steps;
    const size_t sz = static_cast<size_t>(hid) * steps;
    c.i.assign(sz, 0.0);
    c.f.assign(sz, 0.0);
    c.g.assign(sz, 0.0);
    c.o.assign(sz, 0.0);
    c.c.assign(sz, 0.0);
    c.h.assign(sz, 0.0);
    c.tanh_c.assign(sz, 0.0);

    std::vector<double> x_t(static_cast<size_t>(dim));
    std::vector<double> h_prev(static_cast<size_t>(hid), 0.0);
    std::vector<double> c_prev(static_cast<size_t>(hid), 0.0);
    std::vector<double> pre(static_cast<size_t>(hid));

    for (int t = 0; t < steps; ++t) {
        for (int d = 0; d < dim; ++d) x_t[static_cast<size_t>(d)] = sequence.at(d, t);
        const size_t off = static_cast<size_t>(t) * hid;

        gate_preact(*w.wx_i, *w.wh_i, *w.b_i, x_t.data(), h_prev.data(), dim, hid, pre.data());
        for (int r = 0; r < hid; ++r) c.i[off + r] = sigmoid(pre[static_cast<size_t>(r)]);
        gate_preact(*w.wx_f, *w.wh_f, *w.b_f, x_t.data(), h_prev.data(), dim, hid, pre.data());
        for (int r = 0; r < hid; ++r) c.f[off + r] = sigmoid(pre[static_cast<size_t>(r)]);
        gate_preact(*w.wx_g, *w.wh_g, *w.b_g, x_t.data(), h_prev.data(), dim, hid, pre.data());
        for (int r = 0; r < hid; ++r) c.g[off + r] = std::tanh(pre[static_cast<size_t>(r)]);
        gate_preact(*w.wx_o, *w.wh_o, *w.b_o, x_t.data(), h_prev.data(), dim, hid, pre.data());
        for (int r = 0; r < hid; ++r) c.o[off + r] = sigmoid(pre[static_cast<size_t>(r)]);

        for (int r = 0; r < hid; ++r) {
            const double cc = c.f[off + r] * c_prev[static_cast<size_t>(r)] +
                              c.i[off + r] * c.g[off + r];
            c.c[off + r] = cc;
            c.tanh_c[off + r] = std::tanh(cc);
            c.h[off + r] = c.o[off + r] * c.tanh_c[off + r];
        }
        for (int r = 0; r < hid; ++r) {
            h_prev[static_cast<size_t>(r)] = c.h[off + r];
            c_prev[static_cast<size_t>(r)] = c.c[off + r];
        }
    }

    Tensor h_final({hid});
    const size_t last = static_cast<size_t>(steps - 1) * hid;
    for (int r = 0; r < hid; ++r) h_final.at(r) = c.h[last + r];
    return h_final;
}

void lstm_backward(const Tensor& sequence, const LstmWeights& w, const LstmCache& cache,
                   const Tensor& grad_h_final, const LstmGrads& grads,
                   Tensor& grad_sequence) {
    const int dim = sequence.dim(0), steps = sequence.dim(1);
    const int hid = cache.hidden;
    require_shape(grad_h_final, {hid}, "lstm grad_h_final");
    require_shape(grad_sequence, sequence.shape, "lstm grad_sequence");

    std::vector<double> dh(grad_h_final.values.begin(), grad_h_final.values.end());
    std::vector<double> dc(static_cast<size_t>(hid), 0.0);
    std::vector<double> di(static_cast<size_t>(hid)), df(di), dg(di), dn(di);
    std::vector<double> dh_prev(static_cast<size_t>(hid));
    std::vector<double> x_t(static_cast<size_t>(dim));
    std::vector<double> h_prev(static_cast<size_t>(hid));

    for (int t = steps - 1; t >= 0; --t) {
        const size_t off = static_cast<size_t>(t) * hid;
        for (int d = 0; d < dim; ++d) x_t[static_cast<size_t>(d)] = sequence.at(d, t);
        if (t > 0) {
            const size_t poff = static_cast<size_t>(t - 1) * hid;
            for (int r = 0; r < hid; ++r) h_prev[static_cast<size_t>(r)] = cache.h[poff + r];
        } else {
            std::fill(h_prev.begin(), h_prev.end(), 0.0);
        }

        // through h_t = o * tanh(c_t) and c_t = f * c_prev + i * g
        for (int r = 0; r < hid; ++r) {
            const size_t ir = off + static_cast<size_t>(r);
            const double tc = cache.tanh_c[ir];
            const double do_pre = dh[static_cast<size_t>(r)] * tc *
                                  cache.o[ir] * (1.0 - cache.o[ir]);
            const double dct = dc[static_cast<size_t>(r)] +
                               dh[static_cast<size_t>(r)] * cache.o[ir] * (1.0 - tc * tc);
            const double c_prev = t > 0 ? cache.c[ir - static_cast<size_t>(hid)] : 0.0;
            const double di_pre = dct * cache.g[ir] * cache.i[ir] * (1.0 - cache.i[ir]);
            const double df_pre = dct * c_prev * cache.f[ir] * (1.0 - cache.f[ir]);
            const double dg_pre = dct * cache.i[ir] * (1.0 - cache.g[ir] * cache.g[ir]);
            di[static_cast<size_t>(r)] = di_pre;
            df[static_cast<size_t>(r)] = df_pre;
            dg[static_cast<size_t>(r)] = dg_pre;
            dn[static_cast<size_t>(r)] = do_pre;
            dc[static_cast<size_t>(r)] = dct * cache.f[ir];
        }

        std::fill(dh_prev.begin(), dh_prev.end(), 0.0);
        const double* dpre[4] = {di.data(), df.data(), dg.data(), dn.data()};
        Tensor* gwx[4] = {grads.wx_i, grads.wx_f, grads.wx_g, grads.wx_o};
        Tensor* gwh[4] = {grads.wh_i, grads.wh_f, grads.wh_g, grads.wh_o};
        Tensor* gb[4] = {grads.b_i, grads.b_f, grads.b_g, grads.b_o};
        const Tensor* wx[4] = {w.wx_i, w.wx_f, w.wx_g, w.wx_o};
        const Tensor* wh[4] = {w.wh_i, w.wh_f, w.wh_g, w.wh_o};

        for (int gi = 0; gi < 4; ++gi) {
            for (int r = 0; r < hid; ++r) {
                const double d = dpre[gi][r];
                gb[gi]->at(r) += d;
                double* gwxr = &gwx[gi]->values[static_cast<size_t>(r) * dim];
                const double* wxr = &wx[gi]->values[static_cast<size_t>(r) * dim];
                for (int cc = 0; cc < dim; ++cc) {
                    gwxr[cc] += d * x_t[static_cast<size_t>(cc)];
                    grad_sequence.at(cc, t) += d * wxr[cc];
                }
                double* gwhr = &gwh[gi]->values[static_cast<size_t>(r) * hid];
                const double* whr = &wh[gi]->values[static_cast<size_t>(r) * hid];
                for (int cc = 0; cc < hid; ++cc) {
                    gwhr[cc] += d * h_prev[static_cast<size_t>(cc)];
                    dh_prev[static_cast<size_t>(cc)] += d * whr[cc];
                }
            }
        }
        dh = dh_prev;
    }
}

}  // namespace charattr::nn
