#include "charattr/errors.hpp"
#include "charattr/report.hpp"
#include "doctest.h"

using namespace charattr;
using namespace charattr::report;
using train::SweepRow;

namespace {

std::vector<SweepRow> sample_rows() {
    return {{"char_cnn", "pretrained", 6, 1100, 0.96},
            {"char_cnn", "pretrained", 8, 931, 0.92},
            {"char_cnn", "one_hot", 6, 1100, 0.95},
            {"char_cnn", "one_hot", 8, 931, 0.82}};
}

size_t count_occurrences(const std::string& haystack, const std::string& needle) {
    size_t n = 0, pos = 0;
    while ((pos = haystack.find(needle, pos)) != std::string::npos) {
        ++n;
        pos += needle.size();
    }
    return n;
}

}  // namespace

TEST_CASE("csv round trips its rows exactly") {
    const auto rows = sample_rows();
    const std::string csv = sweep_csv(rows);
    const auto back = sweep_rows_from_csv(csv);
    REQUIRE(back.size() == rows.size());
    for (size_t i = 0; i < rows.size(); ++i) {
        CHECK(back[i].model == rows[i].model);
        CHECK(back[i].init == rows[i].init);
        CHECK(back[i].authors == rows[i].authors);
        CHECK(back[i].samples_per_class == rows[i].samples_per_class);
        CHECK(back[i].accuracy == doctest::Approx(rows[i].accuracy).epsilon(1e-9));
    }
    CHECK_THROWS_AS(sweep_rows_from_csv("bogus\n1,2\n"), DataError);
}

TEST_CASE("markdown carries samples/class under each author count") {
    const std::string md = sweep_markdown(sample_rows());
    // header row of author counts and a second header row with samples/class
    CHECK(md.find("| authors | 6 | 8 |") != std::string::npos);
    CHECK(md.find("| samples/class | 1100 | 931 |") != std::string::npos);
    CHECK(md.find("char_cnn (pretrained)") != std::string::npos);
    CHECK(md.find("char_cnn (one_hot)") != std::string::npos);
    CHECK(md.find("0.960000") != std::string::npos);
}

TEST_CASE("svg is well-formed with one polyline per series") {
    const std::string svg = sweep_svg(sample_rows());
    CHECK(svg.rfind("<?xml", 0) == 0);
    CHECK(svg.find("<svg") != std::string::npos);
    CHECK(svg.find("</svg>") != std::string::npos);
    CHECK(count_occurrences(svg, "<polyline") == 2);  // two series
    CHECK(svg.find("samples per class") != std::string::npos);
    CHECK(svg.find("accuracy") != std::string::npos);
    CHECK(svg.find("char_cnn (pretrained)") != std::string::npos);

    // all tags closed: every '<' has a matching '>'
    CHECK(count_occurrences(svg, "<") == count_occurrences(svg, ">"));
}

TEST_CASE("svg generation is byte-deterministic") {
    CHECK(sweep_svg(sample_rows()) == sweep_svg(sample_rows()));
    CHECK(sweep_csv(sample_rows()) == sweep_csv(sample_rows()));
}
