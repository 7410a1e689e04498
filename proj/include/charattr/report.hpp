#pragma once

#include <string>
#include <vector>

#include "charattr/training.hpp"

namespace charattr::report {

// Deterministic float formatting shared by every emitter, so re-runs with
// the same inputs produce byte-identical files.
std::string format_accuracy(double v);

// CSV: one row per (model, init, authors) with samples/class and accuracy.
std::string sweep_csv(const std::vector<train::SweepRow>& rows);
std::vector<train::SweepRow> sweep_rows_from_csv(const std::string& csv_text);

// Markdown table shaped like the headline comparison: one row per
// model/init, one column per author count, samples/class in the header.
std::string sweep_markdown(const std::vector<train::SweepRow>& rows);

// Paired pretrained-vs-one-hot table with a delta row.
std::string compare_markdown(const train::CompareResult& cmp);
std::string compare_csv(const train::CompareResult& cmp);

// Self-contained SVG line chart: accuracy vs samples-per-class, one
// polyline per model/init series, axes, labels and legend embedded.
std::string sweep_svg(const std::vector<train::SweepRow>& rows);

}  // namespace charattr::report
