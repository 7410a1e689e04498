#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "charattr/adam.hpp"
#include "charattr/models.hpp"
#include "charattr/textprep.hpp"

namespace charattr::train {

struct HyperParams {
    double learning_rate = 0.001;
    double decay = 0.0001;
    nn::DecayMode decay_mode = nn::DecayMode::InverseTimeLr;
    int batch_size = 128;
    int epochs = 20;
    int max_len = 3000;
    double dropout = 0.5;
    uint64_t seed = 0;

    void validate() const;
    std::string to_json() const;
};

struct TrainReport {
    std::string model;  // "char_cnn" | "word_cnn_lstm"
    std::string init;   // "one_hot" | "pretrained" | "random"
    int authors = 0;
    int samples_per_class = 0;
    std::vector<double> epoch_loss;          // mean per-sample training loss
    std::vector<double> epoch_val_accuracy;  // held-out-from-train accuracy
    int best_epoch = -1;                     // epoch of the returned snapshot
    double test_accuracy = -1.0;
    std::vector<std::vector<int64_t>> confusion;
    double wall_seconds = 0.0;
    HyperParams hp;
    uint64_t train_fingerprint = 0;
    uint64_t val_fingerprint = 0;
    uint64_t test_fingerprint = 0;
    uint64_t spec_fingerprint = 0;

    std::string to_json() const;
    static TrainReport from_json(const std::string& text);
};

struct EvalResult {
    double accuracy = 0.0;
    std::vector<std::vector<int64_t>> confusion;
};

// Argmax-of-logits prediction over a held-out set; deterministic.
EvalResult evaluate(const model::ModelParams& m, const std::vector<text::Sample>& test_set);

// Adam training over seeded, per-epoch-reshuffled batches. The final
// short batch is trained on; loss is mean per sample. Returns the
// parameter snapshot with the best validation accuracy (the final state
// when val_set is empty) plus the populated report. Non-finite losses
// abort with epoch/batch diagnostics.
std::pair<model::ModelParams, TrainReport> train(model::ModelParams m,
                                                 const std::vector<text::Sample>& train_set,
                                                 const std::vector<text::Sample>& val_set,
                                                 const HyperParams& hp);

// Fills test_accuracy/confusion/test_fingerprint; rejects a test set whose
// fingerprint matches the training data.
void evaluate_into_report(const model::ModelParams& m,
                          const std::vector<text::Sample>& test_set, TrainReport& report);

// Learned character embedding plus provenance.
struct EmbeddingArtifact {
    nn::Tensor matrix;  // [alphabet_size, embed_dim]
    uint64_t alphabet_checksum = 0;
    uint64_t corpus_fingerprint = 0;
    HyperParams hp;
    double final_accuracy = -1.0;

    // Stored as a single-tensor parameter file plus a JSON provenance
    // sidecar at <path>.provenance.json.
    void save(const std::string& path) const;
    static EmbeddingArtifact load(const std::string& path);
};

// Trains a character classifier on the topical corpus from a random
// embedding init and extracts the embedding. The spec template supplies
// the architecture; classes and input length come from the dataset.
EmbeddingArtifact pretrain_embeddings(const text::Dataset& news,
                                      model::CharCnnSpec spec_template, HyperParams hp,
                                      uint64_t alphabet_checksum);

// One class of the prepared (unbalanced) corpus.
struct ClassGroup {
    std::string name;
    std::vector<text::Sample> samples;
};

// The k classes with the most samples (count desc, name asc tiebreak).
std::vector<size_t> select_top_classes(const std::vector<ClassGroup>& corpus, int k);
// Per-class sample count after balancing the selected k classes.
int64_t samples_per_class_for_k(const std::vector<ClassGroup>& corpus, int k);

struct SweepConfig {
    std::vector<int> author_counts{6, 8, 10, 12, 14};
    model::ModelKind kind = model::ModelKind::CharCnn;
    model::EmbeddingInit init = model::EmbeddingInit::OneHot;
    const nn::Tensor* char_embedding = nullptr;  // for EmbeddingInit::Pretrained
    const nn::Tensor* word_embedding = nullptr;  // optional word vectors
    model::CharCnnSpec char_template;
    model::WordCnnLstmSpec word_template;
    HyperParams hp;
    double test_fraction = 0.2;
    double val_fraction = 0.1;
    int jobs = 1;  // sweep arms run per-k in parallel when > 1
};

struct SweepRow {
    std::string model;
    std::string init;
    int authors = 0;
    int samples_per_class = 0;
    double accuracy = 0.0;
};

struct SweepResult {
    std::vector<SweepRow> rows;          // ordered by author count
    std::vector<TrainReport> reports;
};

// For each k: select the k largest classes, balance to the minimum,
// split, train, evaluate. Balancing/splitting seeds depend only on
// (hp.seed, k), so two sweeps with different inits see identical data.
SweepResult run_author_sweep(const std::vector<ClassGroup>& corpus, const SweepConfig& cfg);

struct CompareResult {
    SweepResult pretrained;
    SweepResult one_hot;
    std::vector<double> deltas;  // pretrained minus one_hot accuracy, per k
};

// Reads the conventional text interchange format, one line per word:
//   word v1 v2 ... vD
// Rows for pad/unknown and vocabulary words missing from the file are
// seeded-random; matched_out reports how many vocabulary words were found.
nn::Tensor load_word_vectors(const std::string& path, const text::WordVocab& vocab, int dim,
                             uint64_t seed, int* matched_out);

// Paired sweep: init=pretrained vs init=one_hot with identical seeds,
// splits and hyperparameters. Rejects an artifact whose alphabet
// checksum differs from the corpus encoding.
CompareResult compare_pretrained(const std::vector<ClassGroup>& corpus,
                                 const EmbeddingArtifact& artifact,
                                 uint64_t corpus_alphabet_checksum, SweepConfig cfg);

}  // namespace charattr::train
