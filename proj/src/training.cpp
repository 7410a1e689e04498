#include "charattr/training.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>
#include <thread>

#include "charattr/errors.hpp"
#include "vendor_json.hpp"

namespace charattr::train {

using model::ModelParams;
using text::Sample;

namespace {

std::string hex64(uint64_t v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(v));
    return buf;
}

uint64_t parse_hex64(const std::string& s) { return std::stoull(s, nullptr, 16); }

uint64_t fingerprint_of(const std::vector<Sample>& set, const ModelParams& m) {
    return text::dataset_fingerprint(set, m.input_len(), m.classes());
}

nlohmann::json hp_to_json_obj(const HyperParams& hp) {
    nlohmann::json j;
    j["learning_rate"] = hp.learning_rate;
    j["decay"] = hp.decay;
    j["decay_mode"] = hp.decay_mode == nn::DecayMode::InverseTimeLr ? "lr" : "l2";
    j["batch_size"] = hp.batch_size;
    j["epochs"] = hp.epochs;
    j["max_len"] = hp.max_len;
    j["dropout"] = hp.dropout;
    j["seed"] = hp.seed;
    return j;
}

HyperParams hp_from_json_obj(const nlohmann::json& j) {
    HyperParams hp;
    hp.learning_rate = j.at("learning_rate").get<double>();
    hp.decay = j.at("decay").get<double>();
    hp.decay_mode = j.value("decay_mode", "lr") == "l2" ? nn::DecayMode::L2Weight
                                                        : nn::DecayMode::InverseTimeLr;
    hp.batch_size = j.at("batch_size").get<int>();
    hp.epochs = j.at("epochs").get<int>();
    hp.max_len = j.at("max_len").get<int>();
    hp.dropout = j.at("dropout").get<double>();
    hp.seed = j.at("seed").get<uint64_t>();
    return hp;
}

}  // namespace

void HyperParams::validate() const {
    if (learning_rate <= 0) throw DataError("hyperparams: learning_rate must be positive");
    if (decay < 0) throw DataError("hyperparams: decay must be non-negative");
    if (batch_size <= 0) throw DataError("hyperparams: batch_size must be positive");
    if (epochs < 0) throw DataError("hyperparams: epochs must be non-negative");
    if (max_len <= 0) throw DataError("hyperparams: max_len must be positive");
    if (dropout < 0 || dropout >= 1) throw DataError("hyperparams: dropout must be in [0, 1)");
}

std::string HyperParams::to_json() const { return hp_to_json_obj(*this).dump(); }

std::string TrainReport::to_json() const {
    nlohmann::json j;
    j["model"] = model;
    j["init"] = init;
    j["authors"] = authors;
    j["samples_per_class"] = samples_per_class;
    j["epoch_loss"] = epoch_loss;
    j["epoch_val_accuracy"] = epoch_val_accuracy;
    j["epochs_run"] = epoch_loss.size();
    j["best_epoch"] = best_epoch;
    j["test_accuracy"] = test_accuracy;
    j["confusion"] = confusion;
    j["wall_seconds"] = wall_seconds;
    j["hyperparams"] = hp_to_json_obj(hp);
    j["train_fingerprint"] = hex64(train_fingerprint);
    j["val_fingerprint"] = hex64(val_fingerprint);
    j["test_fingerprint"] = hex64(test_fingerprint);
    j["spec_fingerprint"] = hex64(spec_fingerprint);
    return j.dump(2);
}

TrainReport TrainReport::from_json(const std::string& text) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::exception& e) {
        throw DataError(std::string("report: ") + e.what());
    }
    TrainReport r;
    r.model = j.at("model").get<std::string>();
    r.init = j.at("init").get<std::string>();
    r.authors = j.at("authors").get<int>();
    r.samples_per_class = j.at("samples_per_class").get<int>();
    r.epoch_loss = j.at("epoch_loss").get<std::vector<double>>();
    r.epoch_val_accuracy = j.at("epoch_val_accuracy").get<std::vector<double>>();
    r.best_epoch = j.at("best_epoch").get<int>();
    r.test_accuracy = j.at("test_accuracy").get<double>();
    r.confusion = j.at("confusion").get<std::vector<std::vector<int64_t>>>();
    r.wall_seconds = j.at("wall_seconds").get<double>();
    r.hp = hp_from_json_obj(j.at("hyperparams"));
    r.train_fingerprint = parse_hex64(j.at("train_fingerprint").get<std::string>());
    r.val_fingerprint = parse_hex64(j.at("val_fingerprint").get<std::string>());
    r.test_fingerprint = parse_hex64(j.at("test_fingerprint").get<std::string>());
    r.spec_fingerprint = parse_hex64(j.at("spec_fingerprint").get<std::string>());
    return r;
}

EvalResult evaluate(const ModelParams& m, const std::vector<Sample>& test_set) {
    if (test_set.empty()) throw DataError("evaluate: empty test set");
    const int classes = m.classes();
    EvalResult res;
    res.confusion.assign(static_cast<size_t>(classes),
                         std::vector<int64_t>(static_cast<size_t>(classes), 0));
    nn::Rng rng(0);  // unused in inference mode
    int64_t correct = 0;
    for (const auto& s : test_set) {
        if (s.label < 0 || s.label >= classes)
            throw DataError("evaluate: sample '" + s.source_id + "' label " +
                            std::to_string(s.label) + " outside model classes");
        const nn::Tensor logits = model::forward_sample(m, s.indices, false, rng);
        int pred = 0;
        for (int c = 1; c < classes; ++c)
            if (logits.at(c) > logits.at(pred)) pred = c;
        res.confusion[static_cast<size_t>(s.label)][static_cast<size_t>(pred)] += 1;
        if (pred == s.label) ++correct;
    }
    res.accuracy = static_cast<double>(correct) / static_cast<double>(test_set.size());
    return res;
}

std::pair<ModelParams, TrainReport> train(ModelParams m, const std::vector<Sample>& train_set,
                                          const std::vector<Sample>& val_set,
                                          const HyperParams& hp) {
    hp.validate();
    if (train_set.empty()) throw DataError("train: empty training set");
    for (const auto& s : train_set)
        if (static_cast<int>(s.indices.size()) != m.input_len())
            throw DataError("train: sample '" + s.source_id + "' length " +
                            std::to_string(s.indices.size()) + " != model input length " +
                            std::to_string(m.input_len()));

    const auto t0 = std::chrono::steady_clock::now();

    TrainReport report;
    report.model = m.kind == model::ModelKind::CharCnn ? "char_cnn" : "word_cnn_lstm";
    report.hp = hp;
    report.train_fingerprint = fingerprint_of(train_set, m);
    report.val_fingerprint = val_set.empty() ? 0 : fingerprint_of(val_set, m);
    report.spec_fingerprint = m.spec_fingerprint();

    nn::AdamState adam;
    adam.base_lr = hp.learning_rate;
    adam.decay = hp.decay;
    adam.decay_mode = hp.decay_mode;
    adam.init(m.params);
    m.params.alloc_grads();

    const size_t n = train_set.size();
    std::vector<size_t> order(n);
    std::vector<std::vector<double>> best_values;
    double best_val_acc = -1.0;

    for (int epoch = 0; epoch < hp.epochs; ++epoch) {
        for (size_t i = 0; i < n; ++i) order[i] = i;
        nn::Rng shuffle_rng(hp.seed ^ static_cast<uint64_t>(epoch));
        shuffle_rng.shuffle(order);

        double loss_sum = 0.0;
        size_t pos = 0;
        int batch_no = 0;
        while (pos < n) {
            const size_t batch_n = std::min(static_cast<size_t>(hp.batch_size), n - pos);
            m.params.zero_grads();
            for (size_t b = 0; b < batch_n; ++b) {
                const size_t slot = pos + b;
                const Sample& s = train_set[order[slot]];
                nn::Rng drop_rng(nn::derive_seed(
                    hp.seed, "dropout",
                    (static_cast<uint64_t>(epoch) << 32) | static_cast<uint64_t>(slot)));
                const double loss =
                    model::accumulate_gradients(m, s.indices, s.label, drop_rng);
                if (!std::isfinite(loss))
                    throw NumericError("non-finite loss at epoch " + std::to_string(epoch) +
                                       ", batch " + std::to_string(batch_no) + ", sample '" +
                                       s.source_id + "'");
                loss_sum += loss;
            }
            m.params.scale_grads(1.0 / static_cast<double>(batch_n));
            try {
                nn::adam_step(m.params, adam);
            } catch (const NumericError& e) {
                throw NumericError("epoch " + std::to_string(epoch) + ", batch " +
                                   std::to_string(batch_no) + ": " + e.what());
            }
            pos += batch_n;
            ++batch_no;
        }
        report.epoch_loss.push_back(loss_sum / static_cast<double>(n));

        if (!val_set.empty()) {
            const double acc = evaluate(m, val_set).accuracy;
            report.epoch_val_accuracy.push_back(acc);
            if (acc > best_val_acc) {
                best_val_acc = acc;
                report.best_epoch = epoch;
                best_values.clear();
                for (const auto& [name, t] : m.params) best_values.push_back(t.values);
            }
        }
    }

    if (!best_values.empty()) {
        size_t i = 0;
        for (auto& [name, t] : m.params) t.values = best_values[i++];
    }

    report.wall_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return {std::move(m), std::move(report)};
}

void evaluate_into_report(const ModelParams& m, const std::vector<Sample>& test_set,
                          TrainReport& report) {
    report.test_fingerprint = fingerprint_of(test_set, m);
    if (report.test_fingerprint == report.train_fingerprint)
        throw DataError("evaluate: test set fingerprint equals training set fingerprint");
    const EvalResult res = evaluate(m, test_set);
    report.test_accuracy = res.accuracy;
    report.confusion = res.confusion;
}

void EmbeddingArtifact::save(const std::string& path) const {
    model::CharCnnSpec spec;
    spec.embed_dim = matrix.dim(1);
    spec.alphabet_size = matrix.dim(0);
    spec.classes = 2;       // placeholder geometry; only the tensor matters
    spec.input_len = 1000;
    spec.alphabet_checksum = alphabet_checksum;
    spec.custom_stack = true;

    nn::ParamSet single;
    nn::Tensor copy(matrix.shape);
    copy.values = matrix.values;
    single.add("embedding", std::move(copy));
    model::save_raw_param_file(model::spec_to_json(spec), single, path);

    nlohmann::json j;
    j["alphabet_checksum"] = hex64(alphabet_checksum);
    j["corpus_fingerprint"] = hex64(corpus_fingerprint);
    j["hyperparams"] = hp_to_json_obj(hp);
    j["final_accuracy"] = final_accuracy;
    j["rows"] = matrix.dim(0);
    j["dim"] = matrix.dim(1);
    std::ofstream f(path + ".provenance.json");
    if (!f) throw DataError("cannot write provenance sidecar for " + path);
    f << j.dump(2) << "\n";
}

EmbeddingArtifact EmbeddingArtifact::load(const std::string& path) {
    auto raw = model::load_raw_param_file(path);
    if (raw.tensors.size() != 1 || !raw.tensors.has("embedding"))
        throw DataError("embedding artifact must hold exactly one 'embedding' tensor: " + path);

    EmbeddingArtifact art;
    art.matrix = raw.tensors.at("embedding");
    const auto spec = model::char_spec_from_json(raw.spec_json);
    art.alphabet_checksum = spec.alphabet_checksum;

    std::ifstream f(path + ".provenance.json");
    if (f) {
        nlohmann::json j;
        try {
            f >> j;
        } catch (const nlohmann::json::exception& e) {
            throw DataError(std::string("provenance sidecar: ") + e.what());
        }
        const auto side_sum = parse_hex64(j.at("alphabet_checksum").get<std::string>());
        if (side_sum != art.alphabet_checksum)
            throw DataError("artifact alphabet checksum differs from provenance sidecar");
        art.corpus_fingerprint = parse_hex64(j.at("corpus_fingerprint").get<std::string>());
        art.hp = hp_from_json_obj(j.at("hyperparams"));
        art.final_accuracy = j.at("final_accuracy").get<double>();
    }
    return art;
}

EmbeddingArtifact pretrain_embeddings(const text::Dataset& news,
                                      model::CharCnnSpec spec_template, HyperParams hp,
                                      uint64_t alphabet_checksum) {
    if (news.samples.empty()) throw DataError("pretrain: empty corpus");
    spec_template.classes = news.class_count;
    spec_template.input_len = news.max_len;
    spec_template.dropout = hp.dropout;
    spec_template.alphabet_checksum = alphabet_checksum;
    hp.max_len = news.max_len;

    nn::Rng init_rng(nn::derive_seed(hp.seed, "pretrain-init"));
    ModelParams m = model::build_char_cnn(spec_template, model::EmbeddingInit::Random,
                                          nullptr, init_rng);

    const auto split =
        text::split_dataset(news.samples, 0.1, nn::derive_seed(hp.seed, "pretrain-val"));
    auto [trained, report] = train(std::move(m), split.train, split.test, hp);

    EmbeddingArtifact art;
    art.matrix = model::extract_embedding(trained);
    art.alphabet_checksum = alphabet_checksum;
    art.corpus_fingerprint = news.fingerprint();
    art.hp = hp;
    art.final_accuracy = report.epoch_val_accuracy.empty()
                             ? -1.0
                             : *std::max_element(report.epoch_val_accuracy.begin(),
                                                 report.epoch_val_accuracy.end());
    return art;
}

std::vector<size_t> select_top_classes(const std::vector<ClassGroup>& corpus, int k) {
    if (k < 2) throw DataError("author sweep needs at least 2 classes, got " + std::to_string(k));
    if (k > static_cast<int>(corpus.size()))
        throw DataError("author sweep: requested " + std::to_string(k) + " classes, corpus has " +
                        std::to_string(corpus.size()));
    std::vector<size_t> idx(corpus.size());
    for (size_t i = 0; i < idx.size(); ++i) idx[i] = i;
    std::stable_sort(idx.begin(), idx.end(), [&corpus](size_t a, size_t b) {
        if (corpus[a].samples.size() != corpus[b].samples.size())
            return corpus[a].samples.size() > corpus[b].samples.size();
        return corpus[a].name < corpus[b].name;
    });
    idx.resize(static_cast<size_t>(k));
    return idx;
}

int64_t samples_per_class_for_k(const std::vector<ClassGroup>& corpus, int k) {
    const auto selected = select_top_classes(corpus, k);
    size_t min_count = SIZE_MAX;
    for (size_t i : selected) min_count = std::min(min_count, corpus[i].samples.size());
    return static_cast<int64_t>(min_count);
}

namespace {

TrainReport run_one_arm(const std::vector<ClassGroup>& corpus, int k, const SweepConfig& cfg) {
    const auto selected = select_top_classes(corpus, k);

    // relabel selected classes 0..k-1 in selection order
    std::vector<Sample> pool;
    for (size_t new_label = 0; new_label < selected.size(); ++new_label) {
        for (const auto& s : corpus[selected[new_label]].samples) {
            Sample copy = s;
            copy.label = static_cast<int>(new_label);
            pool.push_back(std::move(copy));
        }
    }

    // balancing and splitting depend only on (seed, k) so paired sweeps
    // with different inits see identical data
    nn::Rng balance_rng(nn::derive_seed(cfg.hp.seed, "balance", static_cast<uint64_t>(k)));
    const auto balanced = text::balance_classes(pool, balance_rng);
    const auto spc = static_cast<int>(balanced.size() / static_cast<size_t>(k));

    const auto outer = text::split_dataset(
        balanced, cfg.test_fraction,
        nn::derive_seed(cfg.hp.seed, "test-split", static_cast<uint64_t>(k)));
    const auto inner = text::split_dataset(
        outer.train, cfg.val_fraction,
        nn::derive_seed(cfg.hp.seed, "val-split", static_cast<uint64_t>(k)));

    const int input_len = static_cast<int>(balanced.front().indices.size());
    nn::Rng init_rng(nn::derive_seed(cfg.hp.seed, "model-init", static_cast<uint64_t>(k)));

    ModelParams m;
    std::string init_name;
    if (cfg.kind == model::ModelKind::CharCnn) {
        model::CharCnnSpec spec = cfg.char_template;
        spec.classes = k;
        spec.input_len = input_len;
        spec.dropout = cfg.hp.dropout;
        m = model::build_char_cnn(spec, cfg.init, cfg.char_embedding, init_rng);
        switch (cfg.init) {
            case model::EmbeddingInit::OneHot: init_name = "one_hot"; break;
            case model::EmbeddingInit::Pretrained: init_name = "pretrained"; break;
            case model::EmbeddingInit::Random: init_name = "random"; break;
        }
    } else {
        model::WordCnnLstmSpec spec = cfg.word_template;
        spec.classes = k;
        spec.input_len = input_len;
        m = model::build_word_model(spec, cfg.word_embedding, init_rng);
        init_name = cfg.word_embedding ? "pretrained" : "random";
    }

    auto [trained, report] = train(std::move(m), inner.train, inner.test, cfg.hp);
    report.init = init_name;
    report.authors = k;
    report.samples_per_class = spc;
    evaluate_into_report(trained, outer.test, report);
    return report;
}

}  // namespace

SweepResult run_author_sweep(const std::vector<ClassGroup>& corpus, const SweepConfig& cfg) {
    cfg.hp.validate();
    if (cfg.author_counts.empty()) throw DataError("sweep: no author counts given");

    std::vector<TrainReport> reports(cfg.author_counts.size());
    const int jobs = std::max(1, cfg.jobs);
    if (jobs == 1) {
        for (size_t i = 0; i < cfg.author_counts.size(); ++i)
            reports[i] = run_one_arm(corpus, cfg.author_counts[i], cfg);
    } else {
        // per-k arms are independent; merge order stays the author_counts order
        std::vector<std::exception_ptr> errors(cfg.author_counts.size());
        std::vector<std::thread> workers;
        std::atomic<size_t> next{0};
        const size_t nw = std::min<size_t>(static_cast<size_t>(jobs), cfg.author_counts.size());
        for (size_t w = 0; w < nw; ++w) {
            workers.emplace_back([&] {
                for (;;) {
                    const size_t i = next.fetch_add(1);
                    if (i >= cfg.author_counts.size()) return;
                    try {
                        reports[i] = run_one_arm(corpus, cfg.author_counts[i], cfg);
                    } catch (...) {
                        errors[i] = std::current_exception();
                    }
                }
            });
        }
        for (auto& t : workers) t.join();
        for (const auto& e : errors)
            if (e) std::rethrow_exception(e);
    }

    SweepResult result;
    for (auto& r : reports) {
        result.rows.push_back({r.model, r.init, r.authors, r.samples_per_class, r.test_accuracy});
        result.reports.push_back(std::move(r));
    }
    return result;
}

nn::Tensor load_word_vectors(const std::string& path, const text::WordVocab& vocab, int dim,
                             uint64_t seed, int* matched_out) {
    std::ifstream f(path);
    if (!f) throw DataError("cannot open word vector file: " + path);

    nn::Rng rng(nn::derive_seed(seed, "word-vectors"));
    nn::Tensor table({vocab.size(), dim});
    const double limit = std::sqrt(6.0 / (vocab.size() + dim));
    for (auto& v : table.values) v = rng.uniform(-limit, limit);

    int matched = 0;
    std::string line;
    size_t line_no = 0;
    while (std::getline(f, line)) {
        ++line_no;
        if (line.empty()) continue;
        std::istringstream ls(line);
        std::string word;
        ls >> word;
        const int row = vocab.index_of(word);
        if (row == text::WordVocab::kUnknownIndex) {
            continue;  // word not in vocabulary
        }
        for (int d = 0; d < dim; ++d) {
            double v;
            if (!(ls >> v))
                throw DataError("word vector file " + path + " line " +
                                std::to_string(line_no) + ": expected " + std::to_string(dim) +
                                " components for '" + word + "'");
            table.at(row, d) = v;
        }
        double extra;
        if (ls >> extra)
            throw DataError("word vector file " + path + " line " + std::to_string(line_no) +
                            ": too many components for '" + word + "'");
        ++matched;
    }
    if (matched_out) *matched_out = matched;
    return table;
}

CompareResult compare_pretrained(const std::vector<ClassGroup>& corpus,
                                 const EmbeddingArtifact& artifact,
                                 uint64_t corpus_alphabet_checksum, SweepConfig cfg) {
    if (artifact.alphabet_checksum != corpus_alphabet_checksum)
        throw DataError("artifact alphabet checksum " + hex64(artifact.alphabet_checksum) +
                        " != corpus encoding checksum " + hex64(corpus_alphabet_checksum));
    cfg.kind = model::ModelKind::CharCnn;

    CompareResult out;
    cfg.init = model::EmbeddingInit::Pretrained;
    cfg.char_embedding = &artifact.matrix;
    out.pretrained = run_author_sweep(corpus, cfg);

    cfg.init = model::EmbeddingInit::OneHot;
    cfg.char_embedding = nullptr;
    out.one_hot = run_author_sweep(corpus, cfg);

    for (size_t i = 0; i < out.pretrained.reports.size(); ++i) {
        const auto& a = out.pretrained.reports[i];
        const auto& b = out.one_hot.reports[i];
        if (a.train_fingerprint != b.train_fingerprint ||
            a.test_fingerprint != b.test_fingerprint)
            throw DataError("paired sweep arms diverged: dataset fingerprints differ at k=" +
                            std::to_string(a.authors));
        out.deltas.push_back(a.test_accuracy - b.test_accuracy);
    }
    return out;
}

}  // namespace charattr::train
