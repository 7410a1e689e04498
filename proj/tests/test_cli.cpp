// End-to-end checks that spawn the actual command line binary.

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include "charattr/alphabet.hpp"
#include "charattr/textprep.hpp"
#include "doctest.h"
#include "json.hpp"
#include "synthetic.hpp"

namespace fs = std::filesystem;

namespace {

struct CliResult {
    int exit_code;
    std::string output;
};

CliResult run_cli(const std::string& args, const fs::path& dir) {
    const std::string out_path = (dir / "cli_output.txt").string();
    const std::string cmd =
        std::string(CHARATTR_CLI_PATH) + " " + args + " > " + out_path + " 2>&1";
    const int status = std::system(cmd.c_str());
    std::ifstream f(out_path);
    std::ostringstream ss;
    ss << f.rdbuf();
    return {WEXITSTATUS(status), ss.str()};
}

std::string slurp(const fs::path& p) {
    std::ifstream f(p, std::ios::binary);
    std::ostringstream ss;
    ss << f.rdbuf();
    return ss.str();
}

fs::path fresh_dir(const std::string& name) {
    const fs::path dir = fs::temp_directory_path() / name;
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

std::string last_line(const std::string& text) {
    std::istringstream in(text);
    std::string line, last;
    while (std::getline(in, line))
        if (!line.empty()) last = line;
    return last;
}

}  // namespace

TEST_CASE("prepare writes a manifest with exact chunk arithmetic") {
    const auto dir = fresh_dir("charattr_cli_prepare");
    const auto alphabet = charattr::text::Alphabet::builtin();
    // 3 authors x 2250 words -> 3 documents per author at 750 words/doc
    synthetic::write_corpus_dir((dir / "corpus").string(), alphabet, 3, 1, 2250, 7);

    const auto res = run_cli("prepare --corpus " + (dir / "corpus").string() + " --out " +
                                 (dir / "ds").string() + " --max_len 120 --seed 5" +
                                 " --test_fraction 0.34",
                             dir);
    REQUIRE(res.exit_code == 0);

    const auto manifest =
        charattr::text::CorpusManifest::from_json(slurp(dir / "ds.manifest.json"));
    REQUIRE(manifest.classes.size() == 3);
    for (const auto& c : manifest.classes) {
        CHECK(c.word_count == 2250);
        CHECK(c.document_count == 3);  // 2250 / 750
    }

    // unique word counts must match an independent recount
    for (const auto& c : manifest.classes) {
        std::set<std::string> uniq;
        for (const auto& e : fs::directory_iterator(dir / "corpus" / c.name)) {
            std::ifstream f(e.path());
            std::string w;
            while (f >> w) uniq.insert(w);
        }
        CHECK(c.unique_words == static_cast<int64_t>(uniq.size()));
    }

    // identical seed -> byte-identical datasets
    const auto res2 = run_cli("prepare --corpus " + (dir / "corpus").string() + " --out " +
                                  (dir / "ds2").string() + " --max_len 120 --seed 5" +
                                  " --test_fraction 0.34",
                              dir);
    REQUIRE(res2.exit_code == 0);
    for (const char* suffix : {".train.bin", ".test.bin", ".full.bin", ".alphabet.json"})
        CHECK(slurp(dir / (std::string("ds") + suffix)) ==
              slurp(dir / (std::string("ds2") + suffix)));
}

TEST_CASE("train then evaluate reaches 99% on the separable corpus") {
    const auto dir = fresh_dir("charattr_cli_train");
    const auto alphabet = charattr::text::Alphabet::builtin();
    synthetic::write_corpus_dir((dir / "corpus").string(), alphabet, 2, 30, 60, 11);

    auto res = run_cli("prepare --corpus " + (dir / "corpus").string() + " --out " +
                           (dir / "ds").string() +
                           " --max_len 200 --words_per_doc 50 --seed 9",
                       dir);
    REQUIRE(res.exit_code == 0);

    const std::string toy_flags =
        " --embed_dim 8 --filters 4,8,8,8 --kernels 7,3,1,1 --dense_units 16"
        " --init random --epochs 8 --batch_size 8 --learning_rate 0.003"
        " --dropout 0.2 --seed 9";
    res = run_cli("train --dataset " + (dir / "ds").string() + " --model_out " +
                      (dir / "model.params").string() + " --report " +
                      (dir / "report.json").string() + toy_flags,
                  dir);
    INFO(res.output);
    REQUIRE(res.exit_code == 0);
    const std::string train_last = last_line(res.output);
    REQUIRE(train_last.rfind("accuracy=", 0) == 0);
    CHECK(std::stod(train_last.substr(9)) >= 0.99);

    res = run_cli("evaluate --dataset " + (dir / "ds").string() + " --model " +
                      (dir / "model.params").string(),
                  dir);
    INFO(res.output);
    REQUIRE(res.exit_code == 0);
    const std::string eval_last = last_line(res.output);
    REQUIRE(eval_last.rfind("accuracy=", 0) == 0);
    CHECK(std::stod(eval_last.substr(9)) >= 0.99);

    // hyperparameters round trip into the report
    const auto j = nlohmann::json::parse(slurp(dir / "report.json"));
    CHECK(j["hyperparams"]["dropout"] == 0.2);
    CHECK(j["hyperparams"]["batch_size"] == 8);
    CHECK(j["hyperparams"]["max_len"] == 200);

    // verify accepts everything we wrote
    for (const char* artifact : {"ds.train.bin", "ds.alphabet.json", "ds.manifest.json",
                                 "model.params", "report.json"}) {
        const auto v = run_cli("verify --path " + (dir / artifact).string(), dir);
        INFO(artifact, ": ", v.output);
        CHECK(v.exit_code == 0);
    }
}

TEST_CASE("exit codes: usage, data, numeric") {
    const auto dir = fresh_dir("charattr_cli_codes");

    // 1: usage error (missing required setting)
    auto res = run_cli("pretrain --out x.params", dir);
    CHECK(res.exit_code == 1);
    res = run_cli("train --bogus_flag 1", dir);
    CHECK(res.exit_code == 1);

    // 2: data error (nonexistent dataset)
    res = run_cli("pretrain --dataset " + (dir / "missing").string() + " --out " +
                      (dir / "x.params").string() + " --seed 1 --epochs 1",
                  dir);
    CHECK(res.exit_code == 2);

    // build a tiny dataset, then force a numeric blowup with a huge lr
    const auto alphabet = charattr::text::Alphabet::builtin();
    synthetic::write_corpus_dir((dir / "corpus").string(), alphabet, 2, 8, 30, 3);
    res = run_cli("prepare --corpus " + (dir / "corpus").string() + " --out " +
                      (dir / "ds").string() + " --max_len 100 --words_per_doc 25 --seed 3",
                  dir);
    REQUIRE(res.exit_code == 0);

    // 3: numeric failure
    res = run_cli("train --dataset " + (dir / "ds").string() +
                      " --embed_dim 8 --filters 4,8,8,8 --kernels 7,3,1,1 --dense_units 16"
                      " --init random --epochs 30 --batch_size 8 --dropout 0.2 --seed 3"
                      " --learning_rate 1e150",
                  dir);
    INFO(res.output);
    CHECK(res.exit_code == 3);
}

TEST_CASE("evaluate rejects a model whose encoding checksum mismatches") {
    const auto dir = fresh_dir("charattr_cli_checksum");
    const auto alphabet = charattr::text::Alphabet::builtin();
    synthetic::write_corpus_dir((dir / "corpus").string(), alphabet, 2, 10, 40, 13);

    auto res = run_cli("prepare --corpus " + (dir / "corpus").string() + " --out " +
                           (dir / "ds").string() + " --max_len 100 --words_per_doc 30 --seed 2",
                       dir);
    REQUIRE(res.exit_code == 0);
    res = run_cli("train --dataset " + (dir / "ds").string() + " --model_out " +
                      (dir / "model.params").string() +
                      " --embed_dim 8 --filters 4,8,8,8 --kernels 7,3,1,1 --dense_units 16"
                      " --init random --epochs 1 --batch_size 8 --dropout 0.2 --seed 2",
                  dir);
    REQUIRE(res.exit_code == 0);

    // tamper with the recorded encoding checksum
    auto j = nlohmann::json::parse(slurp(dir / "ds.manifest.json"));
    j["alphabet_checksum"] = "00000000deadbeef";
    std::ofstream(dir / "ds.manifest.json") << j.dump(2);

    res = run_cli("evaluate --dataset " + (dir / "ds").string() + " --model " +
                      (dir / "model.params").string(),
                  dir);
    INFO(res.output);
    CHECK(res.exit_code == 2);
    CHECK(res.output.find("checksum") != std::string::npos);
}

TEST_CASE("plot regenerates an svg from sweep csv") {
    const auto dir = fresh_dir("charattr_cli_plot");
    std::ofstream(dir / "sweep.csv") << "model,init,authors,samples_per_class,accuracy\n"
                                        "char_cnn,one_hot,2,20,0.900000\n"
                                        "char_cnn,one_hot,3,15,0.850000\n";
    const auto res =
        run_cli("plot --csv " + (dir / "sweep.csv").string() + " --out " +
                    (dir / "fig.svg").string(),
                dir);
    REQUIRE(res.exit_code == 0);
    const std::string svg = slurp(dir / "fig.svg");
    CHECK(svg.find("<polyline") != std::string::npos);
    CHECK(svg.find("</svg>") != std::string::npos);
}
