#include "charattr/textprep.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <map>

#include "charattr/errors.hpp"
#include "vendor_json.hpp"

namespace charattr::text {

bool is_unicode_space(uint32_t cp) {
    switch (cp) {
        case 0x09: case 0x0A: case 0x0B: case 0x0C: case 0x0D: case 0x20:
        case 0x85: case 0xA0: case 0x1680:
        case 0x2000: case 0x2001: case 0x2002: case 0x2003: case 0x2004:
        case 0x2005: case 0x2006: case 0x2007: case 0x2008: case 0x2009:
        case 0x200A: case 0x2028: case 0x2029: case 0x202F: case 0x205F:
        case 0x3000:
            return true;
        default:
            return false;
    }
}

namespace {

struct WordSpan {
    size_t begin, end;  // byte offsets into the source text
};

// byte spans of the whitespace-delimited words, validating UTF-8 as it goes
std::vector<WordSpan> word_spans(std::string_view text) {
    std::vector<WordSpan> spans;
    size_t i = 0;
    size_t word_start = std::string_view::npos;
    while (i < text.size()) {
        const size_t at = i;
        const auto b0 = static_cast<unsigned char>(text[i]);
        uint32_t cp = 0;
        size_t extra = 0;
        if (b0 < 0x80) {
            cp = b0;
        } else if ((b0 & 0xE0) == 0xC0) {
            cp = b0 & 0x1F;
            extra = 1;
        } else if ((b0 & 0xF0) == 0xE0) {
            cp = b0 & 0x0F;
            extra = 2;
        } else if ((b0 & 0xF8) == 0xF0) {
            cp = b0 & 0x07;
            extra = 3;
        } else {
            throw DataError("invalid UTF-8 lead byte at offset " + std::to_string(i));
        }
        if (i + extra >= text.size())
            throw DataError("truncated UTF-8 sequence at offset " + std::to_string(i));
        for (size_t k = 1; k <= extra; ++k) {
            const auto b = static_cast<unsigned char>(text[i + k]);
            if ((b & 0xC0) != 0x80)
                throw DataError("invalid UTF-8 continuation byte at offset " +
                                std::to_string(i + k));
            cp = (cp << 6) | (b & 0x3F);
        }
        i += extra + 1;

        if (is_unicode_space(cp)) {
            if (word_start != std::string_view::npos) {
                spans.push_back({word_start, at});
                word_start = std::string_view::npos;
            }
        } else if (word_start == std::string_view::npos) {
            word_start = at;
        }
    }
    if (word_start != std::string_view::npos) spans.push_back({word_start, text.size()});
    return spans;
}

}  // namespace

std::vector<std::string> tokenize_words(std::string_view text) {
    std::vector<std::string> words;
    for (const auto& s : word_spans(text))
        words.emplace_back(text.substr(s.begin, s.end - s.begin));
    return words;
}

int64_t count_words(std::string_view text) {
    return static_cast<int64_t>(word_spans(text).size());
}

std::vector<std::string> chunk_documents(std::string_view raw_text, int words_per_doc) {
    if (words_per_doc <= 0) throw DataError("chunk_documents: words_per_doc must be positive");
    const auto spans = word_spans(raw_text);
    std::vector<std::string> docs;
    const size_t n = spans.size() / static_cast<size_t>(words_per_doc);
    docs.reserve(n);
    for (size_t d = 0; d < n; ++d) {
        const size_t first = d * static_cast<size_t>(words_per_doc);
        const size_t last = first + static_cast<size_t>(words_per_doc) - 1;
        docs.emplace_back(
            raw_text.substr(spans[first].begin, spans[last].end - spans[first].begin));
    }
    return docs;
}

WordVocab::WordVocab(std::vector<std::string> words_by_rank)
    : words_(std::move(words_by_rank)) {
    for (int i = 0; i < static_cast<int>(words_.size()); ++i) {
        auto [it, fresh] = index_.emplace(words_[static_cast<size_t>(i)], i + 2);
        if (!fresh) throw DataError("vocab: duplicate word '" + it->first + "'");
    }
    uint64_t h = 0xcbf29ce484222325ULL;
    for (const auto& w : words_) {
        h = nn::fnv1a64(w, h);
        h = nn::fnv1a64("\x1f", h);  // separator so concatenations differ
    }
    checksum_ = h;
}

std::vector<uint16_t> WordVocab::encode(std::string_view text, int max_len) const {
    if (max_len <= 0) throw DataError("encode: max_len must be positive");
    const auto words = tokenize_words(text);
    std::vector<uint16_t> out(static_cast<size_t>(max_len),
                              static_cast<uint16_t>(kPadIndex));
    const size_t n = std::min(words.size(), static_cast<size_t>(max_len));
    for (size_t i = 0; i < n; ++i)
        out[i] = static_cast<uint16_t>(index_of(words[i]));
    return out;
}

std::string WordVocab::to_json() const {
    nlohmann::json j;
    j["version"] = 1;
    j["words"] = words_;
    j["pad_index"] = kPadIndex;
    j["unknown_index"] = kUnknownIndex;
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(checksum_));
    j["checksum"] = buf;
    return j.dump(2);
}

WordVocab WordVocab::from_json(const std::string& json_text) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(json_text);
    } catch (const nlohmann::json::exception& e) {
        throw DataError(std::string("vocab file: ") + e.what());
    }
    return WordVocab(j.at("words").get<std::vector<std::string>>());
}

WordVocab build_word_vocab(const std::vector<std::string>& documents, int max_size) {
    if (documents.empty()) throw DataError("build_word_vocab: empty corpus");
    std::map<std::string, int64_t> counts;
    for (const auto& doc : documents)
        for (auto& w : tokenize_words(doc)) counts[std::move(w)] += 1;
    if (counts.empty()) throw DataError("build_word_vocab: corpus contains no words");

    std::vector<std::pair<std::string, int64_t>> ranked(counts.begin(), counts.end());
    std::stable_sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) {
        if (a.second != b.second) return a.second > b.second;
        return a.first < b.first;
    });
    if (static_cast<int>(ranked.size()) > max_size) ranked.resize(static_cast<size_t>(max_size));

    std::vector<std::string> words;
    words.reserve(ranked.size());
    for (auto& r : ranked) words.push_back(std::move(r.first));
    return WordVocab(std::move(words));
}

std::vector<Sample> balance_classes(const std::vector<Sample>& samples, nn::Rng& rng) {
    std::map<int, std::vector<const Sample*>> by_class;
    for (const auto& s : samples) by_class[s.label].push_back(&s);
    if (by_class.empty()) throw DataError("balance_classes: no samples");
    for (const auto& [label, group] : by_class)
        if (group.empty())
            throw DataError("balance_classes: empty class " + std::to_string(label));

    size_t min_count = SIZE_MAX;
    for (const auto& [label, group] : by_class) min_count = std::min(min_count, group.size());

    std::vector<Sample> out;
    out.reserve(min_count * by_class.size());
    for (auto& [label, group] : by_class) {
        rng.shuffle(group);
        for (size_t i = 0; i < min_count; ++i) out.push_back(*group[i]);
    }
    rng.shuffle(out);
    return out;
}

SplitResult split_dataset(const std::vector<Sample>& samples, double test_fraction,
                          uint64_t seed) {
    if (!(test_fraction > 0.0 && test_fraction < 1.0))
        throw DataError("split_dataset: test_fraction must be in (0, 1)");
    std::map<int, std::vector<const Sample*>> by_class;
    for (const auto& s : samples) by_class[s.label].push_back(&s);
    if (by_class.empty()) throw DataError("split_dataset: no samples");

    nn::Rng rng(nn::derive_seed(seed, "split"));
    SplitResult out;
    for (auto& [label, group] : by_class) {
        const auto test_n = static_cast<size_t>(
            std::llround(static_cast<double>(group.size()) * test_fraction));
        if (test_n == 0 || test_n >= group.size())
            throw DataError("split_dataset: class " + std::to_string(label) + " has " +
                            std::to_string(group.size()) +
                            " samples, too few to stratify at fraction " +
                            std::to_string(test_fraction));
        rng.shuffle(group);
        for (size_t i = 0; i < group.size(); ++i)
            (i < test_n ? out.test : out.train).push_back(*group[i]);
    }
    rng.shuffle(out.train);
    rng.shuffle(out.test);
    return out;
}

uint64_t dataset_fingerprint(const std::vector<Sample>& samples, int max_len, int classes) {
    uint64_t h = 0xcbf29ce484222325ULL;
    h = nn::fnv1a64_bytes(&max_len, sizeof(max_len), h);
    h = nn::fnv1a64_bytes(&classes, sizeof(classes), h);
    for (const auto& s : samples) {
        h = nn::fnv1a64_bytes(&s.label, sizeof(s.label), h);
        h = nn::fnv1a64_bytes(s.indices.data(), s.indices.size() * sizeof(uint16_t), h);
    }
    return h;
}

namespace {

constexpr char kDatasetMagic[8] = {'C', 'H', 'A', 'R', 'D', 'A', 'T', 'A'};
constexpr uint32_t kDatasetVersion = 1;

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
        throw DataError("dataset file truncated: " + path);
    uint64_t v = 0;
    for (size_t i = 0; i < sizeof(T); ++i) v |= static_cast<uint64_t>(buf[i]) << (8 * i);
    return static_cast<T>(v);
}

}  // namespace

void save_dataset(const Dataset& ds, const std::string& path) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw DataError("cannot open for writing: " + path);
    f.write(kDatasetMagic, sizeof(kDatasetMagic));
    write_le<uint32_t>(f, kDatasetVersion);
    write_le<uint32_t>(f, static_cast<uint32_t>(ds.max_len));
    write_le<uint32_t>(f, static_cast<uint32_t>(ds.class_count));
    write_le<uint32_t>(f, static_cast<uint32_t>(ds.samples.size()));
    for (const auto& s : ds.samples) {
        if (static_cast<int>(s.indices.size()) != ds.max_len)
            throw DataError("save_dataset: sample '" + s.source_id +
                            "' length != max_len");
        write_le<int32_t>(f, s.label);
        for (uint16_t idx : s.indices) write_le<uint16_t>(f, idx);
    }
    if (!f) throw DataError("write failed: " + path);
}

Dataset load_dataset(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw DataError("cannot open dataset: " + path);
    char magic[8];
    if (!f.read(magic, sizeof(magic)) || std::memcmp(magic, kDatasetMagic, 8) != 0)
        throw DataError("not a dataset file (bad magic): " + path);
    const auto version = read_le<uint32_t>(f, path);
    if (version != kDatasetVersion)
        throw DataError("unsupported dataset version " + std::to_string(version) + ": " + path);
    Dataset ds;
    ds.max_len = static_cast<int>(read_le<uint32_t>(f, path));
    ds.class_count = static_cast<int>(read_le<uint32_t>(f, path));
    const auto count = read_le<uint32_t>(f, path);
    ds.samples.resize(count);
    for (uint32_t i = 0; i < count; ++i) {
        auto& s = ds.samples[i];
        s.label = read_le<int32_t>(f, path);
        if (s.label < 0 || s.label >= ds.class_count)
            throw DataError("dataset sample " + std::to_string(i) + " has label " +
                            std::to_string(s.label) + " outside class count");
        s.indices.resize(static_cast<size_t>(ds.max_len));
        for (auto& idx : s.indices) idx = read_le<uint16_t>(f, path);
        s.source_id = path + "#" + std::to_string(i);
    }
    // must now be at EOF
    char extra;
    if (f.read(&extra, 1)) throw DataError("trailing bytes after samples: " + path);
    return ds;
}

std::string CorpusManifest::to_json() const {
    nlohmann::json j;
    j["version"] = 1;
    j["mode"] = mode;
    j["max_len"] = max_len;
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%016llx",
                  static_cast<unsigned long long>(alphabet_checksum));
    j["alphabet_checksum"] = buf;
    std::snprintf(buf, sizeof(buf), "%016llx",
                  static_cast<unsigned long long>(train_fingerprint));
    j["train_fingerprint"] = buf;
    std::snprintf(buf, sizeof(buf), "%016llx",
                  static_cast<unsigned long long>(test_fingerprint));
    j["test_fingerprint"] = buf;
    j["classes"] = nlohmann::json::array();
    for (const auto& c : classes) {
        nlohmann::json cj;
        cj["name"] = c.name;
        cj["word_count"] = c.word_count;
        cj["unique_words"] = c.unique_words;
        cj["document_count"] = c.document_count;
        cj["files"] = nlohmann::json::array();
        for (const auto& [file, sum] : c.file_checksums)
            cj["files"].push_back({{"path", file}, {"checksum", sum}});
        j["classes"].push_back(cj);
    }
    if (!config_echo.empty()) j["config"] = nlohmann::json::parse(config_echo);
    return j.dump(2);
}

CorpusManifest CorpusManifest::from_json(const std::string& json_text) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(json_text);
    } catch (const nlohmann::json::exception& e) {
        throw DataError(std::string("manifest: ") + e.what());
    }
    CorpusManifest m;
    m.mode = j.value("mode", "char");
    m.max_len = j.value("max_len", 0);
    m.alphabet_checksum = std::stoull(j.value("alphabet_checksum", "0"), nullptr, 16);
    m.train_fingerprint = std::stoull(j.value("train_fingerprint", "0"), nullptr, 16);
    m.test_fingerprint = std::stoull(j.value("test_fingerprint", "0"), nullptr, 16);
    for (const auto& cj : j.value("classes", nlohmann::json::array())) {
        ManifestClass c;
        c.name = cj.at("name").get<std::string>();
        c.word_count = cj.value("word_count", static_cast<int64_t>(0));
        c.unique_words = cj.value("unique_words", static_cast<int64_t>(0));
        c.document_count = cj.value("document_count", static_cast<int64_t>(0));
        for (const auto& fj : cj.value("files", nlohmann::json::array()))
            c.file_checksums.emplace_back(fj.at("path").get<std::string>(),
                                          fj.at("checksum").get<std::string>());
        m.classes.push_back(std::move(c));
    }
    if (j.contains("config")) m.config_echo = j["config"].dump();
    return m;
}

}  // namespace charattr::text
