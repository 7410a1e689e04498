#include "charattr/models.hpp"

#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>

#include "charattr/errors.hpp"
#include "charattr/layers.hpp"
#include "charattr/loss.hpp"
#include "vendor_json.hpp"

namespace charattr::model {

using nn::Tensor;

namespace {

std::string hex64(uint64_t v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(v));
    return buf;
}

void check_paper_stack(const CharCnnSpec& s) {
    if (s.custom_stack) return;
    const CharCnnSpec ref;
    if (s.kernels != ref.kernels || s.filters != ref.filters || s.pool != ref.pool ||
        s.dense_units != ref.dense_units || s.alphabet_size != ref.alphabet_size)
        throw DataError(
            "char model stack deviates from the canonical architecture; "
            "set custom_stack to override");
}

void check_paper_stack(const WordCnnLstmSpec& s) {
    if (s.custom_stack) return;
    const WordCnnLstmSpec ref;
    if (s.kernels != ref.kernels || s.filters != ref.filters || s.pool != ref.pool ||
        s.lstm_units != ref.lstm_units || s.dense_units != ref.dense_units ||
        s.embed_dim != ref.embed_dim)
        throw DataError(
            "word model stack deviates from the canonical architecture; "
            "set custom_stack to override");
}

}  // namespace

std::string ShapeChain::to_string() const {
    std::string out;
    for (const auto& st : stages) {
        if (!out.empty()) out += " -> ";
        out += st.name + "[" + std::to_string(st.channels) + "," +
               std::to_string(st.length) + "]";
    }
    out += " -> flatten " + std::to_string(flatten);
    return out;
}

namespace {

// shared conv/pool recurrence; throws with the chain computed so far
void push_conv_pool(ShapeChain& chain, int stage_no, int channels, int kernel, int pool,
                    int& len) {
    const std::string tag = std::to_string(stage_no);
    if (len < kernel)
        throw DataError("length underflow at conv" + tag + ": length " +
                        std::to_string(len) + " < kernel " + std::to_string(kernel) +
                        " (" + chain.to_string() + ")");
    len = len - kernel + 1;
    chain.stages.push_back({"conv" + tag, channels, len});
    if (len < pool)
        throw DataError("length underflow at pool" + tag + ": length " +
                        std::to_string(len) + " < pool " + std::to_string(pool) + " (" +
                        chain.to_string() + ")");
    len = len / pool;
    chain.stages.push_back({"pool" + tag, channels, len});
}

}  // namespace

ShapeChain output_length(const CharCnnSpec& spec) {
    if (spec.input_len <= 0) throw DataError("char spec: input_len must be positive");
    ShapeChain chain;
    int len = spec.input_len;
    chain.stages.push_back({"embed", spec.embed_dim, len});
    for (int s = 0; s < 4; ++s)
        push_conv_pool(chain, s + 1, spec.filters[static_cast<size_t>(s)],
                       spec.kernels[static_cast<size_t>(s)], spec.pool, len);
    chain.flatten = len * spec.filters[3];
    if (chain.flatten <= 0)
        throw DataError("char spec: flatten length is not positive (" + chain.to_string() + ")");
    return chain;
}

ShapeChain output_length(const WordCnnLstmSpec& spec) {
    if (spec.input_len <= 0) throw DataError("word spec: input_len must be positive");
    ShapeChain chain;
    int len = spec.input_len;
    chain.stages.push_back({"embed", spec.embed_dim, len});
    for (int s = 0; s < 2; ++s)
        push_conv_pool(chain, s + 1, spec.filters[static_cast<size_t>(s)],
                       spec.kernels[static_cast<size_t>(s)], spec.pool, len);
    if (len < 1)
        throw DataError("word spec: no timesteps left for the LSTM (" + chain.to_string() + ")");
    chain.stages.push_back({"lstm", spec.lstm_units, 1});
    chain.flatten = spec.lstm_units;
    return chain;
}

std::string spec_to_json(const CharCnnSpec& s) {
    nlohmann::json j;
    j["kind"] = "char_cnn";
    j["alphabet_size"] = s.alphabet_size;
    j["embed_dim"] = s.embed_dim;
    j["kernels"] = s.kernels;
    j["filters"] = s.filters;
    j["pool"] = s.pool;
    j["dense_units"] = s.dense_units;
    j["dropout"] = s.dropout;
    j["classes"] = s.classes;
    j["input_len"] = s.input_len;
    j["alphabet_checksum"] = hex64(s.alphabet_checksum);
    j["custom_stack"] = s.custom_stack;
    return j.dump();
}

std::string spec_to_json(const WordCnnLstmSpec& s) {
    nlohmann::json j;
    j["kind"] = "word_cnn_lstm";
    j["vocab_size"] = s.vocab_size;
    j["embed_dim"] = s.embed_dim;
    j["kernels"] = s.kernels;
    j["filters"] = s.filters;
    j["pool"] = s.pool;
    j["lstm_units"] = s.lstm_units;
    j["dense_units"] = s.dense_units;
    j["dropout_lstm"] = s.dropout_lstm;
    j["dropout_dense"] = s.dropout_dense;
    j["classes"] = s.classes;
    j["input_len"] = s.input_len;
    j["vocab_checksum"] = hex64(s.vocab_checksum);
    j["custom_stack"] = s.custom_stack;
    return j.dump();
}

namespace {

nlohmann::json parse_spec_json(const std::string& text) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::exception& e) {
        throw DataError(std::string("spec json: ") + e.what());
    }
    return j;
}

}  // namespace

CharCnnSpec char_spec_from_json(const std::string& text) {
    auto j = parse_spec_json(text);
    if (j.value("kind", "") != "char_cnn") throw DataError("spec json: not a char_cnn spec");
    CharCnnSpec s;
    s.alphabet_size = j.at("alphabet_size").get<int>();
    s.embed_dim = j.at("embed_dim").get<int>();
    s.kernels = j.at("kernels").get<std::array<int, 4>>();
    s.filters = j.at("filters").get<std::array<int, 4>>();
    s.pool = j.at("pool").get<int>();
    s.dense_units = j.at("dense_units").get<int>();
    s.dropout = j.at("dropout").get<double>();
    s.classes = j.at("classes").get<int>();
    s.input_len = j.at("input_len").get<int>();
    s.alphabet_checksum = std::stoull(j.at("alphabet_checksum").get<std::string>(), nullptr, 16);
    s.custom_stack = j.at("custom_stack").get<bool>();
    return s;
}

WordCnnLstmSpec word_spec_from_json(const std::string& text) {
    auto j = parse_spec_json(text);
    if (j.value("kind", "") != "word_cnn_lstm")
        throw DataError("spec json: not a word_cnn_lstm spec");
    WordCnnLstmSpec s;
    s.vocab_size = j.at("vocab_size").get<int>();
    s.embed_dim = j.at("embed_dim").get<int>();
    s.kernels = j.at("kernels").get<std::array<int, 2>>();
    s.filters = j.at("filters").get<std::array<int, 2>>();
    s.pool = j.at("pool").get<int>();
    s.lstm_units = j.at("lstm_units").get<int>();
    s.dense_units = j.at("dense_units").get<int>();
    s.dropout_lstm = j.at("dropout_lstm").get<double>();
    s.dropout_dense = j.at("dropout_dense").get<double>();
    s.classes = j.at("classes").get<int>();
    s.input_len = j.at("input_len").get<int>();
    s.vocab_checksum = std::stoull(j.at("vocab_checksum").get<std::string>(), nullptr, 16);
    s.custom_stack = j.at("custom_stack").get<bool>();
    return s;
}

int ModelParams::classes() const {
    return kind == ModelKind::CharCnn ? char_spec.classes : word_spec.classes;
}
int ModelParams::input_len() const {
    return kind == ModelKind::CharCnn ? char_spec.input_len : word_spec.input_len;
}
std::string ModelParams::spec_json() const {
    return kind == ModelKind::CharCnn ? spec_to_json(char_spec) : spec_to_json(word_spec);
}
uint64_t ModelParams::spec_fingerprint() const { return nn::fnv1a64(spec_json()); }

namespace {

using Layout = std::vector<std::pair<std::string, std::vector<int>>>;

Layout tensor_layout(const CharCnnSpec& s) {
    const auto chain = output_length(s);
    Layout layout;
    layout.push_back({"embedding", {s.alphabet_size, s.embed_dim}});
    int c_in = s.embed_dim;
    for (int i = 0; i < 4; ++i) {
        const std::string tag = "conv" + std::to_string(i + 1);
        layout.push_back({tag + ".kernels",
                          {s.filters[static_cast<size_t>(i)], c_in,
                           s.kernels[static_cast<size_t>(i)]}});
        layout.push_back({tag + ".bias", {s.filters[static_cast<size_t>(i)]}});
        c_in = s.filters[static_cast<size_t>(i)];
    }
    layout.push_back({"dense.weights", {s.dense_units, chain.flatten}});
    layout.push_back({"dense.bias", {s.dense_units}});
    layout.push_back({"head.weights", {s.classes, s.dense_units}});
    layout.push_back({"head.bias", {s.classes}});
    return layout;
}

Layout tensor_layout(const WordCnnLstmSpec& s) {
    output_length(s);  // validates geometry
    Layout layout;
    layout.push_back({"embedding", {s.vocab_size, s.embed_dim}});
    int c_in = s.embed_dim;
    for (int i = 0; i < 2; ++i) {
        const std::string tag = "conv" + std::to_string(i + 1);
        layout.push_back({tag + ".kernels",
                          {s.filters[static_cast<size_t>(i)], c_in,
                           s.kernels[static_cast<size_t>(i)]}});
        layout.push_back({tag + ".bias", {s.filters[static_cast<size_t>(i)]}});
        c_in = s.filters[static_cast<size_t>(i)];
    }
    const int h = s.lstm_units, d = s.filters[1];
    for (const char* gate : {"i", "f", "g", "o"}) {
        layout.push_back({std::string("lstm.wx_") + gate, {h, d}});
        layout.push_back({std::string("lstm.wh_") + gate, {h, h}});
        layout.push_back({std::string("lstm.b_") + gate, {h}});
    }
    layout.push_back({"dense.weights", {s.dense_units, h}});
    layout.push_back({"dense.bias", {s.dense_units}});
    layout.push_back({"head.weights", {s.classes, s.dense_units}});
    layout.push_back({"head.bias", {s.classes}});
    return layout;
}

// fan-in-scaled uniform: U(-sqrt(6/(fan_in+fan_out)), +sqrt(6/(fan_in+fan_out)))
void init_uniform(Tensor& t, int fan_in, int fan_out, nn::Rng& rng) {
    const double limit = std::sqrt(6.0 / (fan_in + fan_out));
    for (auto& v : t.values) v = rng.uniform(-limit, limit);
}

void init_weight_tensor(const std::string& name, Tensor& t, nn::Rng& rng) {
    if (name.ends_with(".bias") || name.starts_with("lstm.b_")) return;  // stay zero
    if (t.rank() == 3) {  // conv kernels [C_out, C_in, K]
        init_uniform(t, t.dim(1) * t.dim(2), t.dim(0) * t.dim(2), rng);
    } else if (t.rank() == 2) {  // matrices [out, in] and embeddings [V, D]
        init_uniform(t, t.dim(1), t.dim(0), rng);
    }
}

void fill_params(nn::ParamSet& params, const Layout& layout, nn::Rng& rng) {
    for (const auto& [name, shape] : layout) {
        Tensor t(shape);
        init_weight_tensor(name, t, rng);
        params.add(name, std::move(t));
    }
}

}  // namespace

ModelParams build_char_cnn(const CharCnnSpec& spec, EmbeddingInit init,
                           const nn::Tensor* pretrained, nn::Rng& rng) {
    check_paper_stack(spec);
    if (spec.classes < 2) throw DataError("char model needs at least 2 classes");
    ModelParams m;
    m.kind = ModelKind::CharCnn;
    m.char_spec = spec;
    fill_params(m.params, tensor_layout(spec), rng);

    Tensor& emb = m.params.at("embedding");
    switch (init) {
        case EmbeddingInit::OneHot: {
            if (spec.embed_dim != spec.alphabet_size)
                throw DataError("one-hot init requires embed_dim == alphabet_size (" +
                                std::to_string(spec.embed_dim) + " vs " +
                                std::to_string(spec.alphabet_size) + ")");
            emb.values.assign(emb.values.size(), 0.0);
            for (int i = 0; i < spec.alphabet_size; ++i) emb.at(i, i) = 1.0;
            break;
        }
        case EmbeddingInit::Pretrained: {
            if (!pretrained) throw DataError("pretrained init requires an embedding matrix");
            if (pretrained->shape != std::vector<int>{spec.alphabet_size, spec.embed_dim})
                throw DataError("pretrained embedding shape " +
                                nn::shape_str(pretrained->shape) + " != expected " +
                                nn::shape_str({spec.alphabet_size, spec.embed_dim}));
            emb.values = pretrained->values;
            break;
        }
        case EmbeddingInit::Random:
            break;  // already drawn by fill_params
    }
    return m;
}

ModelParams build_word_model(const WordCnnLstmSpec& spec, const nn::Tensor* embeddings,
                             nn::Rng& rng) {
    check_paper_stack(spec);
    if (spec.classes < 2) throw DataError("word model needs at least 2 classes");
    ModelParams m;
    m.kind = ModelKind::WordCnnLstm;
    m.word_spec = spec;
    fill_params(m.params, tensor_layout(spec), rng);
    if (embeddings) {
        if (embeddings->shape != std::vector<int>{spec.vocab_size, spec.embed_dim})
            throw DataError("word embedding shape " + nn::shape_str(embeddings->shape) +
                            " != expected " +
                            nn::shape_str({spec.vocab_size, spec.embed_dim}));
        m.params.at("embedding").values = embeddings->values;
    }
    return m;
}

// ---------------------------------------------------------------------------
// forward / backward

namespace {

struct ConvStageTrace {
    const Tensor* input = nullptr;  // conv input (owned elsewhere)
    Tensor conv_out;                // pre-relu
    Tensor relu_out;
    std::vector<int> argmax;
    Tensor pool_out;
};

struct CharTrace {
    Tensor embedded;
    std::vector<ConvStageTrace> stages;
    Tensor flat;
    Tensor dense_out;   // pre-relu
    Tensor dense_relu;  // post-relu
    std::vector<double> drop_mask;
    Tensor dropped;
};

struct WordTrace {
    Tensor embedded;
    std::vector<ConvStageTrace> stages;
    nn::LstmCache lstm;
    Tensor h_final;
    std::vector<double> lstm_drop_mask;
    Tensor h_dropped;
    Tensor dense_out;
    Tensor dense_relu;
    std::vector<double> dense_drop_mask;
    Tensor dropped;
};

void run_conv_stage(ConvStageTrace& st, const Tensor& input, const Tensor& kernels,
                    const Tensor& bias, int pool) {
    st.input = &input;
    st.conv_out = nn::conv1d_forward(input, kernels, bias);
    st.relu_out = nn::relu_forward(st.conv_out);
    st.pool_out = nn::maxpool1d_forward(st.relu_out, pool, &st.argmax);
}

Tensor flatten(const Tensor& t) {
    Tensor out({static_cast<int>(t.numel())});
    out.values = t.values;
    return out;
}

void check_input_len(int got, int want) {
    if (got != want)
        throw DataError("sample length " + std::to_string(got) +
                        " != model input length " + std::to_string(want));
}

Tensor char_forward(const ModelParams& m, const std::vector<uint16_t>& indices,
                    bool training, nn::Rng& rng, CharTrace& tr,
                    std::vector<Stage>* live_stages) {
    const auto& spec = m.char_spec;
    check_input_len(static_cast<int>(indices.size()), spec.input_len);
    const auto& p = m.params;
    tr.embedded = nn::embedding_forward(indices, p.at("embedding"));
    if (live_stages)
        live_stages->push_back({"embed", tr.embedded.dim(0), tr.embedded.dim(1)});

    tr.stages.resize(4);
    const Tensor* x = &tr.embedded;
    for (int s = 0; s < 4; ++s) {
        const std::string tag = "conv" + std::to_string(s + 1);
        run_conv_stage(tr.stages[static_cast<size_t>(s)], *x, p.at(tag + ".kernels"),
                       p.at(tag + ".bias"), spec.pool);
        auto& st = tr.stages[static_cast<size_t>(s)];
        if (live_stages) {
            live_stages->push_back({tag, st.conv_out.dim(0), st.conv_out.dim(1)});
            live_stages->push_back(
                {"pool" + std::to_string(s + 1), st.pool_out.dim(0), st.pool_out.dim(1)});
        }
        x = &st.pool_out;
    }
    tr.flat = flatten(*x);
    tr.dense_out = nn::dense_forward(tr.flat, p.at("dense.weights"), p.at("dense.bias"));
    tr.dense_relu = nn::relu_forward(tr.dense_out);
    tr.dropped = nn::dropout_forward(tr.dense_relu, spec.dropout, rng, training, &tr.drop_mask);
    return nn::dense_forward(tr.dropped, p.at("head.weights"), p.at("head.bias"));
}

void char_backward(ModelParams& m, const std::vector<uint16_t>& indices, CharTrace& tr,
                   const Tensor& grad_logits) {
    auto& p = m.params;
    p.alloc_grads();

    Tensor g_dropped(tr.dropped.shape);
    {
        Tensor& head_w = p.at("head.weights");
        Tensor gw(head_w.shape), gb({head_w.dim(0)});
        nn::dense_backward(tr.dropped, head_w, grad_logits, g_dropped, gw, gb);
        for (size_t i = 0; i < gw.values.size(); ++i) head_w.grad[i] += gw.values[i];
        Tensor& head_b = p.at("head.bias");
        for (size_t i = 0; i < gb.values.size(); ++i) head_b.grad[i] += gb.values[i];
    }

    Tensor g_dense_relu(tr.dense_relu.shape);
    nn::dropout_backward(tr.drop_mask, g_dropped, g_dense_relu);
    Tensor g_dense_out(tr.dense_out.shape);
    nn::relu_backward(tr.dense_out, g_dense_relu, g_dense_out);

    Tensor g_flat(tr.flat.shape);
    {
        Tensor& dw = p.at("dense.weights");
        Tensor gw(dw.shape), gb({dw.dim(0)});
        nn::dense_backward(tr.flat, dw, g_dense_out, g_flat, gw, gb);
        for (size_t i = 0; i < gw.values.size(); ++i) dw.grad[i] += gw.values[i];
        Tensor& db = p.at("dense.bias");
        for (size_t i = 0; i < gb.values.size(); ++i) db.grad[i] += gb.values[i];
    }

    // reshape flat gradient back to the last pool output
    Tensor g_pool(tr.stages[3].pool_out.shape);
    g_pool.values = g_flat.values;

    for (int s = 3; s >= 0; --s) {
        auto& st = tr.stages[static_cast<size_t>(s)];
        const std::string tag = "conv" + std::to_string(s + 1);
        Tensor g_relu(st.relu_out.shape);
        nn::maxpool1d_backward(st.argmax, g_pool, g_relu);
        Tensor g_conv(st.conv_out.shape);
        nn::relu_backward(st.conv_out, g_relu, g_conv);

        Tensor& kw = p.at(tag + ".kernels");
        Tensor& kb = p.at(tag + ".bias");
        Tensor g_in(st.input->shape);
        Tensor gw(kw.shape), gb(kb.shape);
        nn::conv1d_backward(*st.input, kw, g_conv, g_in, gw, gb);
        for (size_t i = 0; i < gw.values.size(); ++i) kw.grad[i] += gw.values[i];
        for (size_t i = 0; i < gb.values.size(); ++i) kb.grad[i] += gb.values[i];
        g_pool = std::move(g_in);
    }

    // scatter straight into the embedding grad buffer via a value swap so
    // no [V, D] temporary is allocated per sample
    Tensor& emb = p.at("embedding");
    Tensor g_emb;
    g_emb.shape = emb.shape;
    g_emb.values.swap(emb.grad);
    nn::embedding_backward(indices, g_pool, g_emb);
    emb.grad.swap(g_emb.values);
}

Tensor word_forward(const ModelParams& m, const std::vector<uint16_t>& indices,
                    bool training, nn::Rng& rng, WordTrace& tr,
                    std::vector<Stage>* live_stages) {
    const auto& spec = m.word_spec;
    check_input_len(static_cast<int>(indices.size()), spec.input_len);
    const auto& p = m.params;
    tr.embedded = nn::embedding_forward(indices, p.at("embedding"));
    if (live_stages)
        live_stages->push_back({"embed", tr.embedded.dim(0), tr.embedded.dim(1)});

    tr.stages.resize(2);
    const Tensor* x = &tr.embedded;
    for (int s = 0; s < 2; ++s) {
        const std::string tag = "conv" + std::to_string(s + 1);
        run_conv_stage(tr.stages[static_cast<size_t>(s)], *x, p.at(tag + ".kernels"),
                       p.at(tag + ".bias"), spec.pool);
        auto& st = tr.stages[static_cast<size_t>(s)];
        if (live_stages) {
            live_stages->push_back({tag, st.conv_out.dim(0), st.conv_out.dim(1)});
            live_stages->push_back(
                {"pool" + std::to_string(s + 1), st.pool_out.dim(0), st.pool_out.dim(1)});
        }
        x = &st.pool_out;
    }

    const nn::LstmWeights w{&p.at("lstm.wx_i"), &p.at("lstm.wx_f"), &p.at("lstm.wx_g"),
                            &p.at("lstm.wx_o"), &p.at("lstm.wh_i"), &p.at("lstm.wh_f"),
                            &p.at("lstm.wh_g"), &p.at("lstm.wh_o"), &p.at("lstm.b_i"),
                            &p.at("lstm.b_f"), &p.at("lstm.b_g"), &p.at("lstm.b_o")};
    tr.h_final = nn::lstm_forward(*x, w, &tr.lstm);
    if (live_stages) live_stages->push_back({"lstm", tr.h_final.dim(0), 1});

    tr.h_dropped =
        nn::dropout_forward(tr.h_final, spec.dropout_lstm, rng, training, &tr.lstm_drop_mask);
    tr.dense_out = nn::dense_forward(tr.h_dropped, p.at("dense.weights"), p.at("dense.bias"));
    tr.dense_relu = nn::relu_forward(tr.dense_out);
    tr.dropped = nn::dropout_forward(tr.dense_relu, spec.dropout_dense, rng, training,
                                     &tr.dense_drop_mask);
    return nn::dense_forward(tr.dropped, p.at("head.weights"), p.at("head.bias"));
}

void word_backward(ModelParams& m, const std::vector<uint16_t>& indices, WordTrace& tr,
                   const Tensor& grad_logits) {
    auto& p = m.params;
    p.alloc_grads();

    auto accum = [](Tensor& target, const Tensor& add) {
        for (size_t i = 0; i < add.values.size(); ++i) target.grad[i] += add.values[i];
    };

    Tensor g_dropped(tr.dropped.shape);
    {
        Tensor& head_w = p.at("head.weights");
        Tensor gw(head_w.shape), gb({head_w.dim(0)});
        nn::dense_backward(tr.dropped, head_w, grad_logits, g_dropped, gw, gb);
        accum(head_w, gw);
        accum(p.at("head.bias"), gb);
    }

    Tensor g_dense_relu(tr.dense_relu.shape);
    nn::dropout_backward(tr.dense_drop_mask, g_dropped, g_dense_relu);
    Tensor g_dense_out(tr.dense_out.shape);
    nn::relu_backward(tr.dense_out, g_dense_relu, g_dense_out);

    Tensor g_h_dropped(tr.h_dropped.shape);
    {
        Tensor& dw = p.at("dense.weights");
        Tensor gw(dw.shape), gb({dw.dim(0)});
        nn::dense_backward(tr.h_dropped, dw, g_dense_out, g_h_dropped, gw, gb);
        accum(dw, gw);
        accum(p.at("dense.bias"), gb);
    }

    Tensor g_h(tr.h_final.shape);
    nn::dropout_backward(tr.lstm_drop_mask, g_h_dropped, g_h);

    const nn::LstmWeights w{&p.at("lstm.wx_i"), &p.at("lstm.wx_f"), &p.at("lstm.wx_g"),
                            &p.at("lstm.wx_o"), &p.at("lstm.wh_i"), &p.at("lstm.wh_f"),
                            &p.at("lstm.wh_g"), &p.at("lstm.wh_o"), &p.at("lstm.b_i"),
                            &p.at("lstm.b_f"), &p.at("lstm.b_g"), &p.at("lstm.b_o")};
    // LstmGrads wants tensors; route through temporaries then accumulate
    std::vector<std::string> names = {"lstm.wx_i", "lstm.wx_f", "lstm.wx_g", "lstm.wx_o",
                                      "lstm.wh_i", "lstm.wh_f", "lstm.wh_g", "lstm.wh_o",
                                      "lstm.b_i",  "lstm.b_f",  "lstm.b_g",  "lstm.b_o"};
    std::vector<Tensor> gtmp;
    gtmp.reserve(names.size());
    for (const auto& n : names) gtmp.emplace_back(p.at(n).shape);
    const nn::LstmGrads grads{&gtmp[0], &gtmp[1], &gtmp[2],  &gtmp[3], &gtmp[4], &gtmp[5],
                              &gtmp[6], &gtmp[7], &gtmp[8],  &gtmp[9], &gtmp[10], &gtmp[11]};

    const Tensor& seq = tr.stages[1].pool_out;
    Tensor g_seq(seq.shape);
    nn::lstm_backward(seq, w, tr.lstm, g_h, grads, g_seq);
    for (size_t i = 0; i < names.size(); ++i) accum(p.at(names[i]), gtmp[i]);

    Tensor g_pool = std::move(g_seq);
    for (int s = 1; s >= 0; --s) {
        auto& st = tr.stages[static_cast<size_t>(s)];
        const std::string tag = "conv" + std::to_string(s + 1);
        Tensor g_relu(st.relu_out.shape);
        nn::maxpool1d_backward(st.argmax, g_pool, g_relu);
        Tensor g_conv(st.conv_out.shape);
        nn::relu_backward(st.conv_out, g_relu, g_conv);

        Tensor& kw = p.at(tag + ".kernels");
        Tensor& kb = p.at(tag + ".bias");
        Tensor g_in(st.input->shape);
        Tensor gw(kw.shape), gb(kb.shape);
        nn::conv1d_backward(*st.input, kw, g_conv, g_in, gw, gb);
        accum(kw, gw);
        accum(kb, gb);
        g_pool = std::move(g_in);
    }

    Tensor& emb = p.at("embedding");
    Tensor g_emb;
    g_emb.shape = emb.shape;
    g_emb.values.swap(emb.grad);
    nn::embedding_backward(indices, g_pool, g_emb);
    emb.grad.swap(g_emb.values);
}

}  // namespace

nn::Tensor forward_sample(const ModelParams& m, const std::vector<uint16_t>& indices,
                          bool training, nn::Rng& rng) {
    if (m.kind == ModelKind::CharCnn) {
        CharTrace tr;
        return char_forward(m, indices, training, rng, tr, nullptr);
    }
    WordTrace tr;
    return word_forward(m, indices, training, rng, tr, nullptr);
}

nn::Tensor forward(const ModelParams& m,
                   const std::vector<const std::vector<uint16_t>*>& batch, bool training,
                   nn::Rng& rng) {
    const int classes = m.classes();
    Tensor out({static_cast<int>(batch.size()), classes});
    for (size_t b = 0; b < batch.size(); ++b) {
        const Tensor logits = forward_sample(m, *batch[b], training, rng);
        for (int c = 0; c < classes; ++c) out.at(static_cast<int>(b), c) = logits.at(c);
    }
    return out;
}

nn::Tensor forward_sample_traced(const ModelParams& m, const std::vector<uint16_t>& indices,
                                 std::vector<Stage>* live_stages) {
    nn::Rng rng(0);
    if (m.kind == ModelKind::CharCnn) {
        CharTrace tr;
        return char_forward(m, indices, false, rng, tr, live_stages);
    }
    WordTrace tr;
    return word_forward(m, indices, false, rng, tr, live_stages);
}

double accumulate_gradients(ModelParams& m, const std::vector<uint16_t>& indices, int label,
                            nn::Rng& rng) {
    if (m.kind == ModelKind::CharCnn) {
        CharTrace tr;
        const Tensor logits = char_forward(m, indices, true, rng, tr, nullptr);
        auto res = nn::softmax_cross_entropy(logits, label);
        char_backward(m, indices, tr, res.grad);
        return res.loss;
    }
    WordTrace tr;
    const Tensor logits = word_forward(m, indices, true, rng, tr, nullptr);
    auto res = nn::softmax_cross_entropy(logits, label);
    word_backward(m, indices, tr, res.grad);
    return res.loss;
}

// ---------------------------------------------------------------------------
// serialization

namespace {

constexpr char kParamMagic[8] = {'C', 'H', 'A', 'R', 'P', 'A', 'R', 'M'};
constexpr uint32_t kParamVersion = 1;

template <typename T>
void write_le(std::ofstream& f, T v) {
    unsigned char buf[sizeof(T)];
    for (size_t i = 0; i < sizeof(T); ++i)
        buf[i] = static_cast<unsigned char>((static_cast<uint64_t>(v) >> (8 * i)) & 0xFF);
    f.write(reinterpret_cast<const char*>(buf), sizeof(T));
}

template <typename T>
T read_le(std::ifstream& f, const std::string& path) {
    unsigned char buf[sizeof(T)];
    if (!f.read(reinterpret_cast<char*>(buf), sizeof(T)))
        throw DataError("parameter file truncated: " + path);
    uint64_t v = 0;
    for (size_t i = 0; i < sizeof(T); ++i) v |= static_cast<uint64_t>(buf[i]) << (8 * i);
    return static_cast<T>(v);
}

void write_f64(std::ofstream& f, double d) {
    uint64_t bits;
    std::memcpy(&bits, &d, sizeof(bits));
    write_le<uint64_t>(f, bits);
}

double read_f64(std::ifstream& f, const std::string& path) {
    const uint64_t bits = read_le<uint64_t>(f, path);
    double d;
    std::memcpy(&d, &bits, sizeof(d));
    return d;
}

uint64_t payload_checksum(const std::vector<double>& values) {
    uint64_t h = 0xcbf29ce484222325ULL;
    for (double d : values) {
        uint64_t bits;
        std::memcpy(&bits, &d, sizeof(bits));
        unsigned char b[8];
        for (int i = 0; i < 8; ++i) b[i] = static_cast<unsigned char>((bits >> (8 * i)) & 0xFF);
        h = nn::fnv1a64_bytes(b, 8, h);
    }
    return h;
}

}  // namespace

void save_raw_param_file(const std::string& spec_json, const nn::ParamSet& tensors,
                         const std::string& path) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw DataError("cannot open for writing: " + path);
    f.write(kParamMagic, sizeof(kParamMagic));
    write_le<uint32_t>(f, kParamVersion);
    write_le<uint64_t>(f, nn::fnv1a64(spec_json));
    write_le<uint32_t>(f, static_cast<uint32_t>(spec_json.size()));
    f.write(spec_json.data(), static_cast<std::streamsize>(spec_json.size()));
    write_le<uint32_t>(f, static_cast<uint32_t>(tensors.size()));
    for (const auto& [name, t] : tensors) {
        write_le<uint32_t>(f, static_cast<uint32_t>(name.size()));
        f.write(name.data(), static_cast<std::streamsize>(name.size()));
        write_le<uint32_t>(f, static_cast<uint32_t>(t.rank()));
        for (int d : t.shape) write_le<uint32_t>(f, static_cast<uint32_t>(d));
        for (double v : t.values) write_f64(f, v);
        write_le<uint64_t>(f, payload_checksum(t.values));
    }
    if (!f) throw DataError("write failed: " + path);
}

RawParamFile load_raw_param_file(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw DataError("cannot open parameter file: " + path);
    char magic[8];
    if (!f.read(magic, sizeof(magic)) || std::memcmp(magic, kParamMagic, 8) != 0)
        throw DataError("not a parameter file (bad magic): " + path);
    const auto version = read_le<uint32_t>(f, path);
    if (version != kParamVersion)
        throw DataError("unsupported parameter file version " + std::to_string(version));
    const auto fingerprint = read_le<uint64_t>(f, path);
    const auto spec_len = read_le<uint32_t>(f, path);
    RawParamFile raw;
    raw.spec_json.assign(spec_len, '\0');
    if (!f.read(raw.spec_json.data(), spec_len))
        throw DataError("parameter file truncated: " + path);
    if (nn::fnv1a64(raw.spec_json) != fingerprint)
        throw DataError("spec fingerprint mismatch in " + path);

    const auto count = read_le<uint32_t>(f, path);
    for (uint32_t i = 0; i < count; ++i) {
        const auto name_len = read_le<uint32_t>(f, path);
        std::string name(name_len, '\0');
        if (!f.read(name.data(), name_len)) throw DataError("parameter file truncated: " + path);
        const auto rank = read_le<uint32_t>(f, path);
        std::vector<int> shape(rank);
        for (auto& d : shape) d = static_cast<int>(read_le<uint32_t>(f, path));
        Tensor t(shape);
        for (auto& v : t.values) v = read_f64(f, path);
        const auto sum = read_le<uint64_t>(f, path);
        if (sum != payload_checksum(t.values))
            throw DataError("checksum mismatch in tensor '" + name + "' of " + path);
        raw.tensors.add(name, std::move(t));
    }
    char extra;
    if (f.read(&extra, 1)) throw DataError("trailing bytes in parameter file: " + path);
    return raw;
}

void save_params(const ModelParams& m, const std::string& path) {
    save_raw_param_file(m.spec_json(), m.params, path);
}

ModelParams load_params(const std::string& path) {
    RawParamFile raw = load_raw_param_file(path);

    ModelParams m;
    const auto j = nlohmann::json::parse(raw.spec_json, nullptr, false);
    if (j.is_discarded() || !j.contains("kind"))
        throw DataError("parameter file has invalid spec json: " + path);
    if (j["kind"] == "char_cnn") {
        m.kind = ModelKind::CharCnn;
        m.char_spec = char_spec_from_json(raw.spec_json);
    } else if (j["kind"] == "word_cnn_lstm") {
        m.kind = ModelKind::WordCnnLstm;
        m.word_spec = word_spec_from_json(raw.spec_json);
    } else {
        throw DataError("unknown model kind in " + path);
    }

    const Layout layout = m.kind == ModelKind::CharCnn ? tensor_layout(m.char_spec)
                                                       : tensor_layout(m.word_spec);
    if (raw.tensors.size() != layout.size())
        throw DataError("parameter file has " + std::to_string(raw.tensors.size()) +
                        " tensors, spec needs " + std::to_string(layout.size()));
    for (size_t i = 0; i < layout.size(); ++i) {
        if (raw.tensors.name(i) != layout[i].first)
            throw DataError("tensor " + std::to_string(i) + " is '" + raw.tensors.name(i) +
                            "', spec expects '" + layout[i].first + "'");
        if (raw.tensors.tensor(i).shape != layout[i].second)
            throw DataError("tensor '" + layout[i].first + "' shape " +
                            nn::shape_str(raw.tensors.tensor(i).shape) + " != spec-derived " +
                            nn::shape_str(layout[i].second));
        m.params.add(layout[i].first, std::move(raw.tensors.tensor(i)));
    }
    return m;
}

std::string spec_mismatch(const ModelParams& a, const ModelParams& b) {
    const auto ja = nlohmann::json::parse(a.spec_json());
    const auto jb = nlohmann::json::parse(b.spec_json());
    if (ja == jb) return "";
    for (auto& [key, value] : ja.items()) {
        if (!jb.contains(key)) return key;
        if (jb[key] != value) return key;
    }
    for (auto& [key, value] : jb.items())
        if (!ja.contains(key)) return key;
    return "kind";
}

nn::Tensor extract_embedding(const ModelParams& m) {
    if (m.kind != ModelKind::CharCnn)
        throw DataError("extract_embedding: model is not a character model");
    const Tensor& emb = m.params.at("embedding");
    Tensor copy(emb.shape);
    copy.values = emb.values;
    return copy;
}

int64_t embedding_param_count(const CharCnnSpec& spec) {
    return static_cast<int64_t>(spec.alphabet_size) * spec.embed_dim;
}
int64_t embedding_param_count(const WordCnnLstmSpec& spec) {
    return static_cast<int64_t>(spec.vocab_size) * spec.embed_dim;
}

}  // namespace charattr::model
