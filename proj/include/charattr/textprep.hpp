#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "charattr/alphabet.hpp"
#include "charattr/rng.hpp"

namespace charattr::text {

// One fixed-length encoded document: character or word indices plus a
// class label. indices.size() is always the configured maximum length.
struct Sample {
    std::vector<uint16_t> indices;
    int label = 0;
    std::string source_id;
};

// Words are maximal runs of non-whitespace code points; whitespace is the
// Unicode White_Space set.
bool is_unicode_space(uint32_t cp);
std::vector<std::string> tokenize_words(std::string_view text);
int64_t count_words(std::string_view text);

// Splits text into consecutive non-overlapping windows of exactly
// words_per_doc words. Each chunk is a verbatim substring of the input
// (inter-word text preserved); the trailing partial window is dropped.
std::vector<std::string> chunk_documents(std::string_view raw_text, int words_per_doc = 750);

// Frequency-ranked word inventory, ties broken lexicographically.
// Index 0 is pad, index 1 is unknown, words start at index 2.
class WordVocab {
public:
    static constexpr int kPadIndex = 0;
    static constexpr int kUnknownIndex = 1;

    WordVocab() = default;
    explicit WordVocab(std::vector<std::string> words_by_rank);

    int size() const { return static_cast<int>(words_.size()) + 2; }
    int pad_index() const { return kPadIndex; }
    int unknown_index() const { return kUnknownIndex; }
    const std::vector<std::string>& words() const { return words_; }

    int index_of(const std::string& word) const {
        auto it = index_.find(word);
        return it == index_.end() ? kUnknownIndex : it->second;
    }

    std::vector<uint16_t> encode(std::string_view text, int max_len) const;

    uint64_t checksum() const { return checksum_; }

    std::string to_json() const;
    static WordVocab from_json(const std::string& json_text);

private:
    std::vector<std::string> words_;
    std::map<std::string, int> index_;
    uint64_t checksum_ = 0;
};

// Top max_size words of the corpus by descending frequency. Rejects an
// empty corpus.
WordVocab build_word_vocab(const std::vector<std::string>& documents, int max_size = 60000);

// Truncates every class to the minimum per-class count: each class keeps
// the first N of a seeded shuffle, and the union is shuffled again.
std::vector<Sample> balance_classes(const std::vector<Sample>& samples, nn::Rng& rng);

// Stratified split: each class contributes round(count * test_fraction)
// samples to test. Disjoint, exhaustive, deterministic per seed.
struct SplitResult {
    std::vector<Sample> train, test;
};
SplitResult split_dataset(const std::vector<Sample>& samples, double test_fraction,
                          uint64_t seed);

// Order-insensitive-free fingerprint of an encoded sample list (labels +
// indices + geometry), used to pin datasets in reports.
uint64_t dataset_fingerprint(const std::vector<Sample>& samples, int max_len, int classes);

// Binary dataset file. Little-endian layout:
//   magic "CHARDATA" (8 bytes), version u32, max_len u32, class_count u32,
//   sample_count u32, then per sample: label i32, max_len u16 indices.
struct Dataset {
    int max_len = 0;
    int class_count = 0;
    std::vector<Sample> samples;
    uint64_t fingerprint() const { return dataset_fingerprint(samples, max_len, class_count); }
};
void save_dataset(const Dataset& ds, const std::string& path);
Dataset load_dataset(const std::string& path);

// Table-style corpus manifest, serialized as JSON next to the dataset.
struct ManifestClass {
    std::string name;
    int64_t word_count = 0;
    int64_t unique_words = 0;
    int64_t document_count = 0;
    std::vector<std::pair<std::string, std::string>> file_checksums;  // (file, fnv64 hex)
};
struct CorpusManifest {
    std::vector<ManifestClass> classes;
    std::string mode;  // "char" or "word"
    int max_len = 0;
    uint64_t alphabet_checksum = 0;  // or vocab checksum in word mode
    uint64_t train_fingerprint = 0;
    uint64_t test_fingerprint = 0;
    std::string config_echo;  // resolved config, JSON text
    std::string to_json() const;
    static CorpusManifest from_json(const std::string& json_text);
};

}  // namespace charattr::text
