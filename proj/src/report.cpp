#include "charattr/report.hpp"

#include <algorithm>
#include <cstdio>
#include <map>
#include <set>
#include <sstream>

#include "charattr/errors.hpp"

namespace charattr::report {

std::string format_accuracy(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.6f", v);
    return buf;
}

std::string sweep_csv(const std::vector<train::SweepRow>& rows) {
    std::string out = "model,init,authors,samples_per_class,accuracy\n";
    for (const auto& r : rows) {
        out += r.model + "," + r.init + "," + std::to_string(r.authors) + "," +
               std::to_string(r.samples_per_class) + "," + format_accuracy(r.accuracy) + "\n";
    }
    return out;
}

std::vector<train::SweepRow> sweep_rows_from_csv(const std::string& csv_text) {
    std::istringstream in(csv_text);
    std::string line;
    if (!std::getline(in, line) || line != "model,init,authors,samples_per_class,accuracy")
        throw DataError("sweep csv: unexpected header");
    std::vector<train::SweepRow> rows;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::istringstream ls(line);
        train::SweepRow r;
        std::string field;
        if (!std::getline(ls, r.model, ',') || !std::getline(ls, r.init, ','))
            throw DataError("sweep csv: malformed row: " + line);
        if (!std::getline(ls, field, ',')) throw DataError("sweep csv: malformed row: " + line);
        r.authors = std::stoi(field);
        if (!std::getline(ls, field, ',')) throw DataError("sweep csv: malformed row: " + line);
        r.samples_per_class = std::stoi(field);
        if (!std::getline(ls, field, ',')) throw DataError("sweep csv: malformed row: " + line);
        r.accuracy = std::stod(field);
        rows.push_back(std::move(r));
    }
    return rows;
}

namespace {

// column key: author count + samples/class, kept in first-seen order
struct Column {
    int authors;
    int samples_per_class;
    bool operator==(const Column& o) const {
        return authors == o.authors && samples_per_class == o.samples_per_class;
    }
};

std::vector<Column> columns_of(const std::vector<train::SweepRow>& rows) {
    std::vector<Column> cols;
    for (const auto& r : rows) {
        Column c{r.authors, r.samples_per_class};
        if (std::find(cols.begin(), cols.end(), c) == cols.end()) cols.push_back(c);
    }
    return cols;
}

}  // namespace

std::string sweep_markdown(const std::vector<train::SweepRow>& rows) {
    const auto cols = columns_of(rows);
    std::vector<std::string> series;  // "model (init)" in first-seen order
    for (const auto& r : rows) {
        const std::string key = r.model + " (" + r.init + ")";
        if (std::find(series.begin(), series.end(), key) == series.end())
            series.push_back(key);
    }

    std::string out = "| authors |";
    for (const auto& c : cols) out += " " + std::to_string(c.authors) + " |";
    out += "\n| samples/class |";
    for (const auto& c : cols) out += " " + std::to_string(c.samples_per_class) + " |";
    out += "\n|---|";
    for (size_t i = 0; i < cols.size(); ++i) out += "---|";
    out += "\n";
    for (const auto& key : series) {
        out += "| " + key + " |";
        for (const auto& c : cols) {
            std::string cell = "-";
            for (const auto& r : rows)
                if (r.model + " (" + r.init + ")" == key && r.authors == c.authors &&
                    r.samples_per_class == c.samples_per_class)
                    cell = format_accuracy(r.accuracy);
            out += " " + cell + " |";
        }
        out += "\n";
    }
    return out;
}

std::string compare_markdown(const train::CompareResult& cmp) {
    std::vector<train::SweepRow> rows = cmp.pretrained.rows;
    rows.insert(rows.end(), cmp.one_hot.rows.begin(), cmp.one_hot.rows.end());
    std::string out = sweep_markdown(rows);
    out += "| delta (pretrained - one_hot) |";
    for (const auto& d : cmp.deltas) out += " " + format_accuracy(d) + " |";
    out += "\n";
    return out;
}

std::string compare_csv(const train::CompareResult& cmp) {
    std::string out = "authors,samples_per_class,pretrained,one_hot,delta\n";
    for (size_t i = 0; i < cmp.pretrained.rows.size(); ++i) {
        const auto& a = cmp.pretrained.rows[i];
        const auto& b = cmp.one_hot.rows[i];
        out += std::to_string(a.authors) + "," + std::to_string(a.samples_per_class) + "," +
               format_accuracy(a.accuracy) + "," + format_accuracy(b.accuracy) + "," +
               format_accuracy(cmp.deltas[i]) + "\n";
    }
    return out;
}

namespace {

std::string fmt(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.2f", v);
    return buf;
}

const char* kPalette[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd",
                          "#ff7f0e", "#8c564b", "#17becf", "#7f7f7f"};

}  // namespace

std::string sweep_svg(const std::vector<train::SweepRow>& rows) {
    if (rows.empty()) throw DataError("svg: no rows to plot");

    // series keyed by model/init, points (samples_per_class, accuracy)
    std::vector<std::string> series;
    std::map<std::string, std::vector<std::pair<int, double>>> points;
    int x_min = rows.front().samples_per_class, x_max = x_min;
    for (const auto& r : rows) {
        const std::string key = r.model + " (" + r.init + ")";
        if (std::find(series.begin(), series.end(), key) == series.end())
            series.push_back(key);
        points[key].push_back({r.samples_per_class, r.accuracy});
        x_min = std::min(x_min, r.samples_per_class);
        x_max = std::max(x_max, r.samples_per_class);
    }
    if (x_min == x_max) {
        x_min -= 1;
        x_max += 1;
    }

    const double w = 640, h = 420;
    const double ml = 70, mr = 180, mt = 30, mb = 55;
    const double pw = w - ml - mr, ph = h - mt - mb;
    auto sx = [&](double v) { return ml + (v - x_min) / (x_max - x_min) * pw; };
    auto sy = [&](double acc) { return mt + (1.0 - acc) * ph; };

    std::string svg;
    svg += "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n";
    svg += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"640\" height=\"420\" "
           "viewBox=\"0 0 640 420\">\n";
    svg += "<rect x=\"0\" y=\"0\" width=\"640\" height=\"420\" fill=\"white\"/>\n";

    // axes
    svg += "<line x1=\"" + fmt(ml) + "\" y1=\"" + fmt(mt) + "\" x2=\"" + fmt(ml) +
           "\" y2=\"" + fmt(mt + ph) + "\" stroke=\"black\" stroke-width=\"1\"/>\n";
    svg += "<line x1=\"" + fmt(ml) + "\" y1=\"" + fmt(mt + ph) + "\" x2=\"" + fmt(ml + pw) +
           "\" y2=\"" + fmt(mt + ph) + "\" stroke=\"black\" stroke-width=\"1\"/>\n";

    // y gridline labels at 0, 0.25, 0.5, 0.75, 1
    for (int i = 0; i <= 4; ++i) {
        const double acc = i * 0.25;
        svg += "<line x1=\"" + fmt(ml - 4) + "\" y1=\"" + fmt(sy(acc)) + "\" x2=\"" + fmt(ml) +
               "\" y2=\"" + fmt(sy(acc)) + "\" stroke=\"black\" stroke-width=\"1\"/>\n";
        svg += "<text x=\"" + fmt(ml - 8) + "\" y=\"" + fmt(sy(acc) + 4) +
               "\" font-family=\"sans-serif\" font-size=\"11\" text-anchor=\"end\">" +
               fmt(acc) + "</text>\n";
    }
    // x tick per distinct samples/class
    std::set<int> xticks;
    for (const auto& r : rows) xticks.insert(r.samples_per_class);
    for (int x : xticks) {
        svg += "<line x1=\"" + fmt(sx(x)) + "\" y1=\"" + fmt(mt + ph) + "\" x2=\"" + fmt(sx(x)) +
               "\" y2=\"" + fmt(mt + ph + 4) + "\" stroke=\"black\" stroke-width=\"1\"/>\n";
        svg += "<text x=\"" + fmt(sx(x)) + "\" y=\"" + fmt(mt + ph + 18) +
               "\" font-family=\"sans-serif\" font-size=\"11\" text-anchor=\"middle\">" +
               std::to_string(x) + "</text>\n";
    }

    svg += "<text x=\"" + fmt(ml + pw / 2) + "\" y=\"" + fmt(h - 14) +
           "\" font-family=\"sans-serif\" font-size=\"13\" text-anchor=\"middle\">samples per "
           "class</text>\n";
    svg += "<text x=\"18\" y=\"" + fmt(mt + ph / 2) +
           "\" font-family=\"sans-serif\" font-size=\"13\" text-anchor=\"middle\" "
           "transform=\"rotate(-90 18 " +
           fmt(mt + ph / 2) + ")\">accuracy</text>\n";

    // one polyline per series, points ordered by x
    int color_idx = 0;
    for (const auto& key : series) {
        auto pts = points[key];
        std::sort(pts.begin(), pts.end());
        const char* color = kPalette[color_idx % 8];
        std::string poly;
        for (const auto& [x, acc] : pts) {
            if (!poly.empty()) poly += " ";
            poly += fmt(sx(x)) + "," + fmt(sy(acc));
        }
        svg += "<polyline points=\"" + poly + "\" fill=\"none\" stroke=\"" + color +
               "\" stroke-width=\"2\"/>\n";
        for (const auto& [x, acc] : pts)
            svg += "<rect x=\"" + fmt(sx(x) - 2.5) + "\" y=\"" + fmt(sy(acc) - 2.5) +
                   "\" width=\"5\" height=\"5\" fill=\"" + color + "\"/>\n";

        // legend entry
        const double ly = mt + 12 + 20 * color_idx;
        svg += "<line x1=\"" + fmt(ml + pw + 12) + "\" y1=\"" + fmt(ly) + "\" x2=\"" +
               fmt(ml + pw + 34) + "\" y2=\"" + fmt(ly) + "\" stroke=\"" + color +
               "\" stroke-width=\"2\"/>\n";
        svg += "<text x=\"" + fmt(ml + pw + 40) + "\" y=\"" + fmt(ly + 4) +
               "\" font-family=\"sans-serif\" font-size=\"11\">" + key + "</text>\n";
        ++color_idx;
    }

    svg += "</svg>\n";
    return svg;
}

}  // namespace charattr::report
