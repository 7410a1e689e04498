#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "charattr/params.hpp"
#include "charattr/rng.hpp"
#include "charattr/tensor.hpp"

namespace charattr::model {

enum class ModelKind { CharCnn, WordCnnLstm };
enum class EmbeddingInit { OneHot, Pretrained, Random };

// Character model: embedding -> 4 x (conv, relu, maxpool) -> dense 512
// (relu, dropout) -> class head. Kernel/filter tuples are pinned to
// (7,3,1,1)/(64,128,256,256) unless custom_stack permits an override.
struct CharCnnSpec {
    int alphabet_size = 253;
    int embed_dim = 253;
    std::array<int, 4> kernels{7, 3, 1, 1};
    std::array<int, 4> filters{64, 128, 256, 256};
    int pool = 3;
    int dense_units = 512;
    double dropout = 0.5;
    int classes = 0;
    int input_len = 0;
    uint64_t alphabet_checksum = 0;
    bool custom_stack = false;
};

// Word model: embedding -> 2 x (conv, relu, maxpool) -> LSTM (dropout) ->
// dense 512 (relu, dropout) -> class head.
struct WordCnnLstmSpec {
    int vocab_size = 60002;  // 60000 words + pad + unknown
    int embed_dim = 300;
    std::array<int, 2> kernels{7, 3};
    std::array<int, 2> filters{128, 256};
    int pool = 3;
    int lstm_units = 100;
    int dense_units = 512;
    double dropout_lstm = 0.5;
    double dropout_dense = 0.5;
    int classes = 0;
    int input_len = 750;
    uint64_t vocab_checksum = 0;
    bool custom_stack = false;
};

std::string spec_to_json(const CharCnnSpec& s);
std::string spec_to_json(const WordCnnLstmSpec& s);
CharCnnSpec char_spec_from_json(const std::string& text);
WordCnnLstmSpec word_spec_from_json(const std::string& text);

// Per-stage sequence lengths. Each conv applies L -> L-K+1, each pool
// L -> floor(L/pool); flatten is last length x last filter count (char
// model) or the LSTM input geometry (word model). Throws when any stage
// underflows, reporting the full computed chain.
struct Stage {
    std::string name;
    int channels = 0;
    int length = 0;
};
struct ShapeChain {
    std::vector<Stage> stages;
    int flatten = 0;
    std::string to_string() const;
};
ShapeChain output_length(const CharCnnSpec& spec);
ShapeChain output_length(const WordCnnLstmSpec& spec);

struct ModelParams {
    ModelKind kind = ModelKind::CharCnn;
    CharCnnSpec char_spec;
    WordCnnLstmSpec word_spec;
    nn::ParamSet params;

    int classes() const;
    int input_len() const;
    std::string spec_json() const;
    uint64_t spec_fingerprint() const;
};

// Builds the full parameter set. OneHot requires embed_dim ==
// alphabet_size and writes the identity matrix; Pretrained copies the
// given [alphabet_size, embed_dim] matrix; Random draws fan-in-scaled
// uniform values. The embedding stays trainable in all cases.
ModelParams build_char_cnn(const CharCnnSpec& spec, EmbeddingInit init,
                           const nn::Tensor* pretrained, nn::Rng& rng);

// Word model; embeddings, when given, must be [vocab_size, embed_dim] and
// row-aligned with the vocabulary. Without them the embedding is random.
ModelParams build_word_model(const WordCnnLstmSpec& spec, const nn::Tensor* embeddings,
                             nn::Rng& rng);

// Single-sample logits. In training mode dropout draws from rng; in
// inference mode the pass is deterministic.
nn::Tensor forward_sample(const ModelParams& m, const std::vector<uint16_t>& indices,
                          bool training, nn::Rng& rng);

// Batch forward: row b of the result is forward_sample(batch[b]).
nn::Tensor forward(const ModelParams& m,
                   const std::vector<const std::vector<uint16_t>*>& batch, bool training,
                   nn::Rng& rng);

// Optionally records the shapes seen at every stage of a live pass.
nn::Tensor forward_sample_traced(const ModelParams& m, const std::vector<uint16_t>& indices,
                                 std::vector<Stage>* live_stages);

// Train-mode forward + cross-entropy + full backward; accumulates into
// every parameter's grad buffer and returns the sample loss.
double accumulate_gradients(ModelParams& m, const std::vector<uint16_t>& indices, int label,
                            nn::Rng& rng);

// Parameter file: little-endian binary. Header: magic "CHARPARM",
// version u32, spec fingerprint u64, spec JSON (u32 length + bytes),
// tensor count u32. Per tensor: name (u32 length + bytes), rank u32, dims
// u32 each, float64 payload, FNV-1a checksum u64 of the payload bytes.
void save_params(const ModelParams& m, const std::string& path);
ModelParams load_params(const std::string& path);

// Same container without layout validation; used for single-tensor
// artifacts that share the format.
struct RawParamFile {
    std::string spec_json;
    nn::ParamSet tensors;
};
void save_raw_param_file(const std::string& spec_json, const nn::ParamSet& tensors,
                         const std::string& path);
RawParamFile load_raw_param_file(const std::string& path);

// Empty string when equal, otherwise the first differing spec field.
std::string spec_mismatch(const ModelParams& a, const ModelParams& b);

// Copy of the current embedding matrix, decoupled from the model.
nn::Tensor extract_embedding(const ModelParams& m);

// Embedding table size in scalars, e.g. 253*253 for the default character
// model and 60002*300 for the word model.
int64_t embedding_param_count(const CharCnnSpec& spec);
int64_t embedding_param_count(const WordCnnLstmSpec& spec);

}  // namespace charattr::model
