// Command line front end for the attribution pipeline: corpus preparation,
// embedding pretraining, training, evaluation, author-count sweeps,
// pretrained-vs-one-hot comparisons, artifact verification and plotting.

#include <cstring>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <set>
#include <sstream>

#include "charattr/alphabet.hpp"
#include "charattr/config.hpp"
#include "charattr/errors.hpp"
#include "charattr/models.hpp"
#include "charattr/report.hpp"
#include "charattr/textprep.hpp"
#include "charattr/training.hpp"
#include "json.hpp"

namespace fs = std::filesystem;
using namespace charattr;

namespace {

void write_file(const std::string& path, const std::string& content) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw DataError("cannot open for writing: " + path);
    f.write(content.data(), static_cast<std::streamsize>(content.size()));
    if (!f) throw DataError("write failed: " + path);
}

std::string read_file(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw DataError("cannot open: " + path);
    std::ostringstream ss;
    ss << f.rdbuf();
    return ss.str();
}

std::string hex64(uint64_t v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(v));
    return buf;
}

const std::set<std::string> kHpKeys = {"learning_rate", "decay",   "decay_mode", "batch_size",
                                       "epochs",        "max_len", "dropout",    "seed"};

train::HyperParams hp_from_config(const cli::RunConfig& cfg) {
    train::HyperParams hp;
    hp.learning_rate = cfg.get_double("learning_rate");
    hp.decay = cfg.get_double("decay");
    if (cfg.has("decay_mode")) {
        const std::string mode = cfg.get_str("decay_mode");
        if (mode == "lr") {
            hp.decay_mode = nn::DecayMode::InverseTimeLr;
        } else if (mode == "l2") {
            hp.decay_mode = nn::DecayMode::L2Weight;
        } else {
            throw UsageError("decay_mode must be 'lr' or 'l2'");
        }
    }
    hp.batch_size = cfg.get_int("batch_size");
    hp.epochs = cfg.get_int("epochs");
    hp.dropout = cfg.get_double("dropout");
    hp.seed = cfg.seed();
    return hp;
}

std::array<int, 4> parse4(const cli::RunConfig& cfg, const std::string& key) {
    const auto v = cfg.get_int_list(key);
    if (v.size() != 4) throw UsageError("'" + key + "' needs exactly 4 comma-separated values");
    return {v[0], v[1], v[2], v[3]};
}

model::CharCnnSpec char_spec_from_config(const cli::RunConfig& cfg) {
    model::CharCnnSpec spec;
    spec.embed_dim = cfg.get_int("embed_dim");
    if (cfg.has("filters")) spec.filters = parse4(cfg, "filters");
    if (cfg.has("kernels")) spec.kernels = parse4(cfg, "kernels");
    if (cfg.has("dense_units")) spec.dense_units = cfg.get_int("dense_units");
    const model::CharCnnSpec ref;
    spec.custom_stack = spec.filters != ref.filters || spec.kernels != ref.kernels ||
                        spec.dense_units != ref.dense_units;
    return spec;
}

model::WordCnnLstmSpec word_spec_from_config(const cli::RunConfig& cfg, int vocab_size) {
    model::WordCnnLstmSpec spec;
    spec.vocab_size = vocab_size;
    spec.embed_dim = cfg.get_int("embed_dim");
    if (cfg.has("filters")) {
        const auto v = cfg.get_int_list("filters");
        if (v.size() != 2) throw UsageError("'filters' needs exactly 2 values for word model");
        spec.filters = {v[0], v[1]};
    }
    if (cfg.has("kernels")) {
        const auto v = cfg.get_int_list("kernels");
        if (v.size() != 2) throw UsageError("'kernels' needs exactly 2 values for word model");
        spec.kernels = {v[0], v[1]};
    }
    if (cfg.has("lstm_units")) spec.lstm_units = cfg.get_int("lstm_units");
    if (cfg.has("dense_units")) spec.dense_units = cfg.get_int("dense_units");
    const model::WordCnnLstmSpec ref;
    spec.custom_stack = spec.filters != ref.filters || spec.kernels != ref.kernels ||
                        spec.lstm_units != ref.lstm_units ||
                        spec.dense_units != ref.dense_units || spec.embed_dim != ref.embed_dim;
    return spec;
}

// ---------------------------------------------------------------------------
// prepare

int cmd_prepare(const std::vector<std::string>& args) {
    const std::set<std::string> keys = {"corpus",     "out",           "mode",
                                        "max_len",    "seed",          "test_fraction",
                                        "words_per_doc", "vocab_size"};
    const auto cfg = cli::RunConfig::resolve(
        args,
        {{"mode", "char"}, {"test_fraction", "0.2"}, {"words_per_doc", "750"},
         {"vocab_size", "60000"}},
        keys);
    const std::string corpus_dir = cfg.get_str("corpus");
    const std::string out = cfg.get_str("out");
    const std::string mode = cfg.get_str("mode");
    if (mode != "char" && mode != "word") throw UsageError("mode must be 'char' or 'word'");
    const int max_len = cfg.get_int("max_len");
    const int words_per_doc = cfg.get_int("words_per_doc");
    const uint64_t seed = cfg.seed();

    if (!fs::is_directory(corpus_dir)) throw DataError("corpus is not a directory: " + corpus_dir);
    std::vector<std::string> class_dirs;
    for (const auto& e : fs::directory_iterator(corpus_dir))
        if (e.is_directory()) class_dirs.push_back(e.path().filename().string());
    std::sort(class_dirs.begin(), class_dirs.end());
    if (class_dirs.size() < 2) throw DataError("corpus needs at least 2 class directories");

    // read + chunk every class
    text::CorpusManifest manifest;
    manifest.mode = mode;
    manifest.max_len = max_len;
    std::vector<std::vector<std::string>> class_docs(class_dirs.size());
    for (size_t ci = 0; ci < class_dirs.size(); ++ci) {
        const fs::path dir = fs::path(corpus_dir) / class_dirs[ci];
        std::vector<std::string> files;
        for (const auto& e : fs::directory_iterator(dir))
            if (e.is_regular_file() && e.path().extension() == ".txt")
                files.push_back(e.path().string());
        std::sort(files.begin(), files.end());
        if (files.empty()) throw DataError("class directory has no .txt files: " + dir.string());

        text::ManifestClass mc;
        mc.name = class_dirs[ci];
        std::set<std::string> uniq;
        for (const auto& file : files) {
            const std::string raw = read_file(file);
            mc.file_checksums.emplace_back(fs::path(file).filename().string(),
                                           hex64(nn::fnv1a64(raw)));
            try {
                for (auto& w : text::tokenize_words(raw)) {
                    mc.word_count += 1;
                    uniq.insert(std::move(w));
                }
                for (auto& doc : text::chunk_documents(raw, words_per_doc))
                    class_docs[ci].push_back(std::move(doc));
            } catch (const DataError& e) {
                throw DataError(std::string(e.what()) + " in " + file);
            }
        }
        mc.unique_words = static_cast<int64_t>(uniq.size());
        mc.document_count = static_cast<int64_t>(class_docs[ci].size());
        if (class_docs[ci].empty())
            throw DataError("class '" + mc.name + "' yields no documents of " +
                            std::to_string(words_per_doc) + " words");
        manifest.classes.push_back(std::move(mc));
    }

    // encode
    text::Dataset full;
    full.max_len = max_len;
    full.class_count = static_cast<int>(class_dirs.size());
    if (mode == "char") {
        const auto alphabet = text::Alphabet::builtin();
        manifest.alphabet_checksum = alphabet.checksum();
        write_file(out + ".alphabet.json", alphabet.to_json());
        for (size_t ci = 0; ci < class_docs.size(); ++ci)
            for (size_t di = 0; di < class_docs[ci].size(); ++di)
                full.samples.push_back({alphabet.encode(class_docs[ci][di], max_len),
                                        static_cast<int>(ci),
                                        class_dirs[ci] + "#" + std::to_string(di)});
    } else {
        std::vector<std::string> all_docs;
        for (const auto& docs : class_docs)
            all_docs.insert(all_docs.end(), docs.begin(), docs.end());
        const auto vocab = text::build_word_vocab(all_docs, cfg.get_int("vocab_size"));
        manifest.alphabet_checksum = vocab.checksum();
        write_file(out + ".vocab.json", vocab.to_json());
        for (size_t ci = 0; ci < class_docs.size(); ++ci)
            for (size_t di = 0; di < class_docs[ci].size(); ++di)
                full.samples.push_back({vocab.encode(class_docs[ci][di], max_len),
                                        static_cast<int>(ci),
                                        class_dirs[ci] + "#" + std::to_string(di)});
    }

    // balance, split, write
    nn::Rng balance_rng(nn::derive_seed(seed, "balance"));
    const auto balanced = text::balance_classes(full.samples, balance_rng);
    const auto split = text::split_dataset(balanced, cfg.get_double("test_fraction"), seed);

    text::Dataset train_ds{max_len, full.class_count, split.train};
    text::Dataset test_ds{max_len, full.class_count, split.test};
    save_dataset(full, out + ".full.bin");
    save_dataset(train_ds, out + ".train.bin");
    save_dataset(test_ds, out + ".test.bin");

    manifest.train_fingerprint = train_ds.fingerprint();
    manifest.test_fingerprint = test_ds.fingerprint();
    manifest.config_echo = cfg.echo_json();
    write_file(out + ".manifest.json", manifest.to_json() + "\n");

    std::cout << "prepared " << full.samples.size() << " documents in " << full.class_count
              << " classes (" << split.train.size() << " train, " << split.test.size()
              << " test)\n";
    for (const auto& c : manifest.classes)
        std::cout << "  " << c.name << ": words=" << c.word_count
                  << " unique=" << c.unique_words << " documents=" << c.document_count << "\n";
    return 0;
}

// ---------------------------------------------------------------------------
// pretrain

int cmd_pretrain(const std::vector<std::string>& args) {
    std::set<std::string> keys = {"dataset", "out",     "embed_dim", "filters",
                                  "kernels", "dense_units"};
    keys.insert(kHpKeys.begin(), kHpKeys.end());
    const auto cfg = cli::RunConfig::resolve(args,
                                             {{"learning_rate", "0.001"},
                                              {"decay", "0.0001"},
                                              {"batch_size", "80"},
                                              {"epochs", "5"},
                                              {"dropout", "0.5"},
                                              {"embed_dim", "253"}},
                                             keys);
    const std::string prefix = cfg.get_str("dataset");
    const std::string out = cfg.get_str("out");

    const auto news = text::load_dataset(prefix + ".train.bin");
    const auto manifest = text::CorpusManifest::from_json(read_file(prefix + ".manifest.json"));
    if (manifest.mode != "char")
        throw DataError("pretraining needs a char-mode dataset, manifest says '" +
                        manifest.mode + "'");

    train::HyperParams hp = hp_from_config(cfg);
    const auto art = train::pretrain_embeddings(news, char_spec_from_config(cfg), hp,
                                                manifest.alphabet_checksum);
    art.save(out);
    std::cout << "embedding " << art.matrix.dim(0) << "x" << art.matrix.dim(1)
              << " saved to " << out << "\n";
    std::cout << "accuracy=" << report::format_accuracy(art.final_accuracy) << "\n";
    return 0;
}

// ---------------------------------------------------------------------------
// train / evaluate

int cmd_train(const std::vector<std::string>& args) {
    std::set<std::string> keys = {"dataset",    "model_out", "report",     "model",
                                  "init",       "embedding", "embedding_file",
                                  "embed_dim",  "filters",   "kernels",    "dense_units",
                                  "lstm_units", "val_fraction"};
    keys.insert(kHpKeys.begin(), kHpKeys.end());
    const auto cfg = cli::RunConfig::resolve(args,
                                             {{"model", "char"},
                                              {"init", "one_hot"},
                                              {"learning_rate", "0.001"},
                                              {"decay", "0.0001"},
                                              {"batch_size", "128"},
                                              {"epochs", "20"},
                                              {"dropout", "0.7"},
                                              {"embed_dim", "253"},
                                              {"val_fraction", "0.1"}},
                                             keys);
    const std::string prefix = cfg.get_str("dataset");
    const std::string model_kind = cfg.get_str("model");
    if (model_kind != "char" && model_kind != "word")
        throw UsageError("model must be 'char' or 'word'");

    const auto train_ds = text::load_dataset(prefix + ".train.bin");
    const auto manifest = text::CorpusManifest::from_json(read_file(prefix + ".manifest.json"));
    train::HyperParams hp = hp_from_config(cfg);
    hp.max_len = train_ds.max_len;

    const auto split = text::split_dataset(train_ds.samples, cfg.get_double("val_fraction"),
                                           nn::derive_seed(hp.seed, "val-split"));

    nn::Rng init_rng(nn::derive_seed(hp.seed, "model-init"));
    model::ModelParams m;
    std::string init_name = cfg.get_str("init");
    if (model_kind == "char") {
        if (manifest.mode != "char") throw DataError("dataset was prepared in word mode");
        model::CharCnnSpec spec = char_spec_from_config(cfg);
        spec.classes = train_ds.class_count;
        spec.input_len = train_ds.max_len;
        spec.dropout = hp.dropout;
        spec.alphabet_checksum = manifest.alphabet_checksum;
        model::EmbeddingInit init;
        nn::Tensor pre;
        const nn::Tensor* pre_ptr = nullptr;
        if (init_name == "one_hot") {
            init = model::EmbeddingInit::OneHot;
        } else if (init_name == "random") {
            init = model::EmbeddingInit::Random;
        } else if (init_name == "pretrained") {
            init = model::EmbeddingInit::Pretrained;
            const auto art = train::EmbeddingArtifact::load(cfg.get_str("embedding"));
            if (art.alphabet_checksum != manifest.alphabet_checksum)
                throw DataError("embedding artifact alphabet checksum " +
                                hex64(art.alphabet_checksum) + " != dataset " +
                                hex64(manifest.alphabet_checksum));
            pre = art.matrix;
            pre_ptr = &pre;
            spec.embed_dim = pre.dim(1);
        } else {
            throw UsageError("init must be one_hot, pretrained or random");
        }
        m = model::build_char_cnn(spec, init, pre_ptr, init_rng);
    } else {
        if (manifest.mode != "word") throw DataError("dataset was prepared in char mode");
        const auto vocab = text::WordVocab::from_json(read_file(prefix + ".vocab.json"));
        model::WordCnnLstmSpec spec = word_spec_from_config(cfg, vocab.size());
        spec.classes = train_ds.class_count;
        spec.input_len = train_ds.max_len;
        spec.dropout_lstm = hp.dropout;
        spec.dropout_dense = hp.dropout;
        spec.vocab_checksum = vocab.checksum();
        nn::Tensor vectors;
        const nn::Tensor* vec_ptr = nullptr;
        if (cfg.has("embedding_file")) {
            int matched = 0;
            vectors = train::load_word_vectors(cfg.get_str("embedding_file"), vocab,
                                               spec.embed_dim, hp.seed, &matched);
            vec_ptr = &vectors;
            init_name = "pretrained";
            std::cout << "word vectors: " << matched << "/" << vocab.words().size()
                      << " vocabulary words covered\n";
        } else {
            init_name = "random";
        }
        m = model::build_word_model(spec, vec_ptr, init_rng);
    }

    auto [trained, rep] = train::train(std::move(m), split.train, split.test, hp);
    rep.init = init_name;
    rep.authors = train_ds.class_count;
    rep.samples_per_class =
        static_cast<int>(train_ds.samples.size() / static_cast<size_t>(train_ds.class_count));

    double final_accuracy;
    if (fs::exists(prefix + ".test.bin")) {
        const auto test_ds = text::load_dataset(prefix + ".test.bin");
        train::evaluate_into_report(trained, test_ds.samples, rep);
        final_accuracy = rep.test_accuracy;
    } else {
        final_accuracy = rep.epoch_val_accuracy.empty() ? 0.0
                                                        : rep.epoch_val_accuracy.back();
    }

    if (cfg.has("model_out")) model::save_params(trained, cfg.get_str("model_out"));
    if (cfg.has("report")) write_file(cfg.get_str("report"), rep.to_json() + "\n");
    std::cout << "accuracy=" << report::format_accuracy(final_accuracy) << "\n";
    return 0;
}

int cmd_evaluate(const std::vector<std::string>& args) {
    const auto cfg = cli::RunConfig::resolve(
        args, {}, {"dataset", "model", "report", "seed"});
    const std::string prefix = cfg.get_str("dataset");
    const auto m = model::load_params(cfg.get_str("model"));
    const auto test_ds = text::load_dataset(prefix + ".test.bin");
    const auto manifest = text::CorpusManifest::from_json(read_file(prefix + ".manifest.json"));

    const uint64_t model_sum = m.kind == model::ModelKind::CharCnn
                                   ? m.char_spec.alphabet_checksum
                                   : m.word_spec.vocab_checksum;
    if (model_sum != manifest.alphabet_checksum)
        throw DataError("model alphabet checksum " + hex64(model_sum) +
                        " != dataset encoding checksum " + hex64(manifest.alphabet_checksum));
    if (test_ds.max_len != m.input_len())
        throw DataError("dataset max_len " + std::to_string(test_ds.max_len) +
                        " != model input length " + std::to_string(m.input_len()));
    if (test_ds.class_count != m.classes())
        throw DataError("dataset classes " + std::to_string(test_ds.class_count) +
                        " != model classes " + std::to_string(m.classes()));

    const auto res = train::evaluate(m, test_ds.samples);
    if (cfg.has("report")) {
        train::TrainReport rep;
        rep.model = m.kind == model::ModelKind::CharCnn ? "char_cnn" : "word_cnn_lstm";
        rep.authors = test_ds.class_count;
        rep.test_accuracy = res.accuracy;
        rep.confusion = res.confusion;
        rep.test_fingerprint = test_ds.fingerprint();
        rep.spec_fingerprint = m.spec_fingerprint();
        write_file(cfg.get_str("report"), rep.to_json() + "\n");
    }
    std::cout << "accuracy=" << report::format_accuracy(res.accuracy) << "\n";
    return 0;
}

// ---------------------------------------------------------------------------
// sweep / compare

std::vector<train::ClassGroup> load_class_groups(const std::string& prefix,
                                                 const text::CorpusManifest& manifest) {
    const auto full = text::load_dataset(prefix + ".full.bin");
    if (static_cast<int>(manifest.classes.size()) != full.class_count)
        throw DataError("manifest lists " + std::to_string(manifest.classes.size()) +
                        " classes, dataset has " + std::to_string(full.class_count));
    std::vector<train::ClassGroup> groups(static_cast<size_t>(full.class_count));
    for (size_t ci = 0; ci < groups.size(); ++ci) groups[ci].name = manifest.classes[ci].name;
    for (const auto& s : full.samples)
        groups[static_cast<size_t>(s.label)].samples.push_back(s);
    return groups;
}

void write_sweep_outputs(const std::string& out_dir, const train::SweepResult& result,
                         const std::string& config_echo) {
    fs::create_directories(out_dir);
    write_file(out_dir + "/sweep.csv", report::sweep_csv(result.rows));
    write_file(out_dir + "/sweep.md", report::sweep_markdown(result.rows));
    write_file(out_dir + "/sweep.svg", report::sweep_svg(result.rows));
    nlohmann::json j;
    j["config"] = nlohmann::json::parse(config_echo);
    j["reports"] = nlohmann::json::array();
    for (const auto& r : result.reports) {
        j["reports"].push_back(nlohmann::json::parse(r.to_json()));
        write_file(out_dir + "/report_" + r.model + "_" + r.init + "_k" +
                       std::to_string(r.authors) + ".json",
                   r.to_json() + "\n");
    }
    write_file(out_dir + "/sweep.json", j.dump(2) + "\n");
}

train::SweepConfig sweep_config_from(const cli::RunConfig& cfg,
                                     const text::CorpusManifest& manifest,
                                     const std::string& prefix, nn::Tensor& embedding_storage) {
    train::SweepConfig sc;
    sc.author_counts = cfg.get_int_list("authors");
    sc.hp = hp_from_config(cfg);
    sc.hp.max_len = manifest.max_len;
    if (cfg.has("jobs")) sc.jobs = cfg.get_int("jobs");

    const std::string kind = cfg.get_str("model");
    if (kind == "char") {
        if (manifest.mode != "char") throw DataError("dataset was prepared in word mode");
        sc.kind = model::ModelKind::CharCnn;
        sc.char_template = char_spec_from_config(cfg);
        sc.char_template.alphabet_checksum = manifest.alphabet_checksum;
        const std::string init_name = cfg.get_str("init");
        if (init_name == "one_hot") {
            sc.init = model::EmbeddingInit::OneHot;
        } else if (init_name == "random") {
            sc.init = model::EmbeddingInit::Random;
        } else if (init_name == "pretrained") {
            sc.init = model::EmbeddingInit::Pretrained;
            const auto art = train::EmbeddingArtifact::load(cfg.get_str("embedding"));
            if (art.alphabet_checksum != manifest.alphabet_checksum)
                throw DataError("embedding artifact alphabet checksum " +
                                hex64(art.alphabet_checksum) + " != dataset " +
                                hex64(manifest.alphabet_checksum));
            embedding_storage = art.matrix;
            sc.char_embedding = &embedding_storage;
            sc.char_template.embed_dim = embedding_storage.dim(1);
        } else {
            throw UsageError("init must be one_hot, pretrained or random");
        }
    } else if (kind == "word") {
        if (manifest.mode != "word") throw DataError("dataset was prepared in char mode");
        sc.kind = model::ModelKind::WordCnnLstm;
        const auto vocab = text::WordVocab::from_json(read_file(prefix + ".vocab.json"));
        sc.word_template = word_spec_from_config(cfg, vocab.size());
        sc.word_template.vocab_checksum = vocab.checksum();
        sc.word_template.dropout_lstm = sc.hp.dropout;
        sc.word_template.dropout_dense = sc.hp.dropout;
        if (cfg.has("embedding_file")) {
            int matched = 0;
            embedding_storage =
                train::load_word_vectors(cfg.get_str("embedding_file"), vocab,
                                         sc.word_template.embed_dim, sc.hp.seed, &matched);
            sc.word_embedding = &embedding_storage;
        }
    } else {
        throw UsageError("model must be 'char' or 'word'");
    }
    return sc;
}

int cmd_sweep(const std::vector<std::string>& args) {
    std::set<std::string> keys = {"dataset",   "out_dir", "model",       "init",
                                  "authors",   "embedding", "embedding_file",
                                  "embed_dim", "filters", "kernels",     "dense_units",
                                  "lstm_units", "jobs",   "test_fraction", "val_fraction"};
    keys.insert(kHpKeys.begin(), kHpKeys.end());
    const auto cfg = cli::RunConfig::resolve(args,
                                             {{"model", "char"},
                                              {"init", "one_hot"},
                                              {"learning_rate", "0.001"},
                                              {"decay", "0.0001"},
                                              {"batch_size", "128"},
                                              {"epochs", "20"},
                                              {"dropout", "0.7"},
                                              {"embed_dim", "253"},
                                              {"authors", "6,8,10,12,14"}},
                                             keys);
    const std::string prefix = cfg.get_str("dataset");
    const auto manifest = text::CorpusManifest::from_json(read_file(prefix + ".manifest.json"));
    const auto groups = load_class_groups(prefix, manifest);

    nn::Tensor embedding_storage;
    auto sc = sweep_config_from(cfg, manifest, prefix, embedding_storage);
    if (cfg.has("test_fraction")) sc.test_fraction = cfg.get_double("test_fraction");
    if (cfg.has("val_fraction")) sc.val_fraction = cfg.get_double("val_fraction");

    const auto result = train::run_author_sweep(groups, sc);
    write_sweep_outputs(cfg.get_str("out_dir"), result, cfg.echo_json());
    for (const auto& r : result.rows)
        std::cout << r.model << " (" << r.init << ") k=" << r.authors
                  << " samples/class=" << r.samples_per_class
                  << " accuracy=" << report::format_accuracy(r.accuracy) << "\n";
    return 0;
}

int cmd_compare(const std::vector<std::string>& args) {
    std::set<std::string> keys = {"dataset", "out_dir",  "authors", "embedding",
                                  "embed_dim", "filters", "kernels", "dense_units",
                                  "jobs",    "test_fraction", "val_fraction"};
    keys.insert(kHpKeys.begin(), kHpKeys.end());
    const auto cfg = cli::RunConfig::resolve(args,
                                             {{"learning_rate", "0.001"},
                                              {"decay", "0.0001"},
                                              {"batch_size", "128"},
                                              {"epochs", "20"},
                                              {"dropout", "0.7"},
                                              {"embed_dim", "253"},
                                              {"authors", "6,8,10,12,14"}},
                                             keys);
    const std::string prefix = cfg.get_str("dataset");
    const auto manifest = text::CorpusManifest::from_json(read_file(prefix + ".manifest.json"));
    if (manifest.mode != "char") throw DataError("compare needs a char-mode dataset");
    const auto groups = load_class_groups(prefix, manifest);

    const auto art = train::EmbeddingArtifact::load(cfg.get_str("embedding"));

    train::SweepConfig sc;
    sc.author_counts = cfg.get_int_list("authors");
    sc.hp = hp_from_config(cfg);
    sc.hp.max_len = manifest.max_len;
    sc.char_template = char_spec_from_config(cfg);
    sc.char_template.alphabet_checksum = manifest.alphabet_checksum;
    sc.char_template.embed_dim = art.matrix.dim(1);
    if (cfg.has("jobs")) sc.jobs = cfg.get_int("jobs");
    if (cfg.has("test_fraction")) sc.test_fraction = cfg.get_double("test_fraction");
    if (cfg.has("val_fraction")) sc.val_fraction = cfg.get_double("val_fraction");

    const auto cmp = train::compare_pretrained(groups, art, manifest.alphabet_checksum, sc);

    const std::string out_dir = cfg.get_str("out_dir");
    fs::create_directories(out_dir);
    write_file(out_dir + "/compare.csv", report::compare_csv(cmp));
    write_file(out_dir + "/compare.md", report::compare_markdown(cmp));
    std::vector<train::SweepRow> all_rows = cmp.pretrained.rows;
    all_rows.insert(all_rows.end(), cmp.one_hot.rows.begin(), cmp.one_hot.rows.end());
    write_file(out_dir + "/compare.svg", report::sweep_svg(all_rows));
    nlohmann::json j;
    j["config"] = nlohmann::json::parse(cfg.echo_json());
    j["reports"] = nlohmann::json::array();
    for (const auto& arm : {&cmp.pretrained, &cmp.one_hot})
        for (const auto& r : arm->reports) {
            j["reports"].push_back(nlohmann::json::parse(r.to_json()));
            write_file(out_dir + "/report_" + r.model + "_" + r.init + "_k" +
                           std::to_string(r.authors) + ".json",
                       r.to_json() + "\n");
        }
    j["deltas"] = cmp.deltas;
    write_file(out_dir + "/compare.json", j.dump(2) + "\n");

    for (size_t i = 0; i < cmp.deltas.size(); ++i) {
        const auto& a = cmp.pretrained.rows[i];
        std::cout << "k=" << a.authors << " pretrained="
                  << report::format_accuracy(a.accuracy)
                  << " one_hot=" << report::format_accuracy(cmp.one_hot.rows[i].accuracy)
                  << " delta=" << report::format_accuracy(cmp.deltas[i]) << "\n";
    }
    return 0;
}

// ---------------------------------------------------------------------------
// verify / plot

bool has_magic(const std::string& path, const char* magic) {
    std::ifstream f(path, std::ios::binary);
    char buf[8];
    if (!f.read(buf, 8)) return false;
    return std::memcmp(buf, magic, 8) == 0;
}

int cmd_verify(const std::vector<std::string>& args) {
    const auto cfg = cli::RunConfig::resolve(args, {}, {"path"});
    const std::string path = cfg.get_str("path");
    if (!fs::exists(path)) throw DataError("no such file: " + path);

    if (has_magic(path, "CHARDATA")) {
        const auto ds = text::load_dataset(path);
        std::cout << "ok: dataset, " << ds.samples.size() << " samples, fingerprint "
                  << hex64(ds.fingerprint()) << "\n";
        // cross-check against a sibling manifest when present
        std::string prefix = path;
        for (const char* suffix : {".train.bin", ".test.bin", ".full.bin"}) {
            if (prefix.size() > std::strlen(suffix) &&
                prefix.compare(prefix.size() - std::strlen(suffix), std::string::npos, suffix) ==
                    0) {
                prefix.resize(prefix.size() - std::strlen(suffix));
                break;
            }
        }
        const std::string manifest_path = prefix + ".manifest.json";
        if (fs::exists(manifest_path)) {
            const auto manifest =
                text::CorpusManifest::from_json(read_file(manifest_path));
            if (path.ends_with(".train.bin") &&
                manifest.train_fingerprint != ds.fingerprint())
                throw DataError("train fingerprint differs from manifest");
            if (path.ends_with(".test.bin") && manifest.test_fingerprint != ds.fingerprint())
                throw DataError("test fingerprint differs from manifest");
            std::cout << "ok: fingerprint matches " << manifest_path << "\n";
        }
        return 0;
    }
    if (has_magic(path, "CHARPARM")) {
        const auto raw = model::load_raw_param_file(path);
        std::cout << "ok: parameter file, " << raw.tensors.size()
                  << " tensors, spec fingerprint " << hex64(nn::fnv1a64(raw.spec_json)) << "\n";
        if (fs::exists(path + ".provenance.json")) {
            train::EmbeddingArtifact::load(path);
            std::cout << "ok: provenance sidecar consistent\n";
        }
        return 0;
    }
    if (path.ends_with(".json")) {
        const std::string body = read_file(path);
        const auto j = nlohmann::json::parse(body, nullptr, false);
        if (j.is_discarded()) throw DataError("invalid json: " + path);
        if (j.contains("code_points")) {
            text::Alphabet::from_json(body);
            std::cout << "ok: alphabet file, checksum validated\n";
            return 0;
        }
        if (j.contains("words")) {
            text::WordVocab::from_json(body);
            std::cout << "ok: vocabulary file\n";
            return 0;
        }
        if (j.contains("epoch_loss")) {
            const auto rep = train::TrainReport::from_json(body);
            int64_t total = 0, trace = 0;
            for (size_t r = 0; r < rep.confusion.size(); ++r)
                for (size_t c = 0; c < rep.confusion[r].size(); ++c) {
                    total += rep.confusion[r][c];
                    if (r == c) trace += rep.confusion[r][c];
                }
            if (total > 0 &&
                std::abs(rep.test_accuracy -
                         static_cast<double>(trace) / static_cast<double>(total)) > 1e-12)
                throw DataError("report accuracy does not equal trace/total");
            std::cout << "ok: train report, accuracy consistent with confusion matrix\n";
            return 0;
        }
        if (j.contains("classes")) {
            text::CorpusManifest::from_json(body);
            std::cout << "ok: corpus manifest\n";
            return 0;
        }
        throw DataError("unrecognized json artifact: " + path);
    }
    throw DataError("unrecognized artifact type: " + path);
}

int cmd_plot(const std::vector<std::string>& args) {
    const auto cfg = cli::RunConfig::resolve(args, {}, {"csv", "out"});
    const auto rows = report::sweep_rows_from_csv(read_file(cfg.get_str("csv")));
    write_file(cfg.get_str("out"), report::sweep_svg(rows));
    std::cout << "wrote " << cfg.get_str("out") << "\n";
    return 0;
}

void print_usage() {
    std::cout <<
        "usage: charattr <command> [--key value ...] [--config file.json]\n"
        "\n"
        "commands:\n"
        "  prepare   --corpus DIR --out PREFIX --max_len N --seed S [--mode char|word]\n"
        "            [--test_fraction F] [--words_per_doc N] [--vocab_size N]\n"
        "  pretrain  --dataset PREFIX --out FILE --epochs N --seed S [hyperparameters]\n"
        "  train     --dataset PREFIX [--model_out FILE] [--report FILE] --seed S\n"
        "            [--model char|word] [--init one_hot|pretrained|random]\n"
        "            [--embedding ART] [--embedding_file VECTORS] [hyperparameters]\n"
        "  evaluate  --dataset PREFIX --model FILE [--report FILE]\n"
        "  sweep     --dataset PREFIX --out_dir DIR --authors 6,8,10 --seed S [...]\n"
        "  compare   --dataset PREFIX --out_dir DIR --embedding ART --seed S [...]\n"
        "  verify    --path FILE\n"
        "  plot      --csv FILE --out FILE\n"
        "\n"
        "hyperparameters: --learning_rate --decay --decay_mode lr|l2 --batch_size\n"
        "                 --epochs --dropout --seed; model shape: --embed_dim\n"
        "                 --filters --kernels --dense_units --lstm_units\n"
        "exit codes: 0 ok, 1 usage, 2 data, 3 numeric failure\n";
}

}  // namespace

int main(int argc, char** argv) {
    std::vector<std::string> args(argv + 1, argv + argc);
    if (args.empty() || args[0] == "--help" || args[0] == "help") {
        print_usage();
        return args.empty() ? 1 : 0;
    }
    const std::string command = args[0];
    args.erase(args.begin());
    try {
        if (command == "prepare") return cmd_prepare(args);
        if (command == "pretrain") return cmd_pretrain(args);
        if (command == "train") return cmd_train(args);
        if (command == "evaluate") return cmd_evaluate(args);
        if (command == "sweep") return cmd_sweep(args);
        if (command == "compare") return cmd_compare(args);
        if (command == "verify") return cmd_verify(args);
        if (command == "plot") return cmd_plot(args);
        throw UsageError("unknown command '" + command + "'");
    } catch (const UsageError& e) {
        std::cerr << "usage error: " << e.what() << "\n";
        return 1;
    } catch (const NumericError& e) {
        std::cerr << "numeric failure: " << e.what() << "\n";
        return 3;
    } catch (const DataError& e) {
        std::cerr << "data error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
}
