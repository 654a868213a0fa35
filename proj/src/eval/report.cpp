#include "holdstab/eval/report.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <set>
#include <tuple>

namespace holdstab {

namespace {

constexpr Modalities kVision{true, false};
constexpr Modalities kTactile{false, true};
constexpr Modalities kBoth{true, true};

struct Row {
    std::string label;
    Modalities modalities;
};

const Row kPoseRows[] = {{"Tactile", kTactile}, {"Vision", kVision}, {"Vision + Tactile", kBoth}};

struct Column {
    std::string label;
    Protocol protocol;
};

const Column kPoseColumns[] = {
    {"Pose Group", Protocol::PoseGroup}, {"Random Poses", Protocol::RandomPoses}, {"Uniform", Protocol::Uniform}};

const Row kObjectColumns[] = {{"Vision", kVision}, {"Tactile", kTactile}, {"Both", kBoth}};

double score_of(const RunResult& r, Score s) {
    return s == Score::Accuracy ? r.metrics.accuracy : r.metrics.accuracy_on_sneq;
}

std::string pad(std::string s, std::size_t width) {
    // Count code points so the "±" sign does not skew alignment.
    std::size_t len = 0;
    for (unsigned char c : s) len += (c & 0xC0) != 0x80;
    if (len < width) s.append(width - len, ' ');
    return s;
}

std::string render_grid(const std::string& corner, const std::vector<std::string>& cols,
                        const std::vector<std::pair<std::string, std::vector<std::string>>>& rows) {
    std::size_t first = corner.size();
    for (const auto& r : rows) first = std::max(first, r.first.size());
    std::size_t width = 16;
    for (const auto& c : cols) width = std::max(width, c.size());
    std::string out = pad(corner, first + 2);
    for (const auto& c : cols) out += pad(c, width + 2);
    out += '\n';
    for (const auto& [label, cells] : rows) {
        out += pad(label, first + 2);
        for (const auto& c : cells) out += pad(c, width + 2);
        out += '\n';
    }
    return out;
}

std::string xml_escape(const std::string& s) {
    std::string out;
    for (char c : s) {
        switch (c) {
            case '&': out += "&amp;"; break;
            case '<': out += "&lt;"; break;
            case '>': out += "&gt;"; break;
            case '"': out += "&quot;"; break;
            default: out += c;
        }
    }
    return out;
}

}  // namespace

Summary summarize(std::span<const double> values) {
    Summary s;
    double sum = 0.0;
    for (double v : values)
        if (std::isfinite(v)) {
            sum += v;
            ++s.n;
        }
    if (s.n == 0) {
        s.mean = std::numeric_limits<double>::quiet_NaN();
        return s;
    }
    s.mean = sum / static_cast<double>(s.n);
    if (s.n > 1) {
        double ss = 0.0;
        for (double v : values)
            if (std::isfinite(v)) ss += (v - s.mean) * (v - s.mean);
        s.std = std::sqrt(ss / static_cast<double>(s.n - 1));
    }
    return s;
}

Summary cell(std::span<const RunResult> results, Protocol protocol, Variant variant, Modalities modalities,
             Score score) {
    std::vector<double> v;
    for (const auto& r : results)
        if (r.protocol == protocol && r.variant == variant && r.modalities == modalities)
            v.push_back(score_of(r, score));
    return summarize(v);
}

std::string format_cell(const Summary& s) {
    if (s.n == 0) return "-";
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.2f \xC2\xB1 %.2f", 100.0 * s.mean, 100.0 * s.std);
    return buf;
}

std::string format_pose_table(std::span<const RunResult> results, Variant variant, Score score) {
    std::vector<std::string> cols;
    for (const auto& c : kPoseColumns) cols.push_back(c.label);
    std::vector<std::pair<std::string, std::vector<std::string>>> rows;
    for (const auto& r : kPoseRows) {
        std::vector<std::string> cells;
        for (const auto& c : kPoseColumns) cells.push_back(format_cell(cell(results, c.protocol, variant, r.modalities, score)));
        rows.emplace_back(r.label, std::move(cells));
    }
    const std::string title = std::string(display_name(variant)) +
                              (score == Score::Accuracy ? " test accuracy (%)" : " accuracy on S-neq (%)");
    return title + "\n" + render_grid("Modality", cols, rows);
}

std::string format_object_table(std::span<const RunResult> results, Score score) {
    std::vector<std::string> cols;
    for (const auto& c : kObjectColumns) cols.push_back(c.label);
    std::vector<std::pair<std::string, std::vector<std::string>>> rows;
    for (auto v : kAllVariants) {
        std::vector<std::string> cells;
        for (const auto& c : kObjectColumns)
            cells.push_back(format_cell(cell(results, Protocol::UnseenObjects, v, c.modalities, score)));
        rows.emplace_back(std::string(display_name(v)), std::move(cells));
    }
    const std::string title =
        score == Score::Accuracy ? "Unseen objects: test accuracy (%)" : "Unseen objects: accuracy on S-neq (%)";
    return title + "\n" + render_grid("Model", cols, rows);
}

std::string format_deltas(std::span<const RunResult> results) {
    std::set<std::tuple<int, bool, bool>> groups;
    for (const auto& r : results)
        groups.insert({static_cast<int>(r.protocol), r.modalities.vision, r.modalities.tactile});
    std::string out = "LSTM+DRS minus LSTM (percentage points)\n";
    bool any = false;
    for (const auto& [p, v, t] : groups) {
        const auto protocol = static_cast<Protocol>(p);
        const Modalities m{v, t};
        const auto drs = cell(results, protocol, Variant::LstmDrs, m);
        const auto base = cell(results, protocol, Variant::Lstm, m);
        if (drs.n == 0 || base.n == 0) continue;
        const auto drs_neq = cell(results, protocol, Variant::LstmDrs, m, Score::AccuracyOnSneq);
        const auto base_neq = cell(results, protocol, Variant::Lstm, m, Score::AccuracyOnSneq);
        char line[160];
        std::snprintf(line, sizeof line, "%-16s %-4s accuracy %+6.2f   on S-neq %+6.2f\n",
                      std::string(to_string(protocol)).c_str(), to_string(m).c_str(), 100.0 * (drs.mean - base.mean),
                      100.0 * (drs_neq.mean - base_neq.mean));
        out += line;
        any = true;
    }
    if (!any) out += "(no protocol has both lstm and lstm-drs runs)\n";
    return out;
}

std::string format_summary_csv(std::span<const RunResult> results) {
    std::set<std::tuple<int, int, bool, bool>> groups;
    for (const auto& r : results)
        groups.insert({static_cast<int>(r.protocol), static_cast<int>(r.variant), r.modalities.vision,
                       r.modalities.tactile});
    std::string out = "protocol,variant,modalities,n,accuracy_mean,accuracy_std,accuracy_on_Sneq_mean,accuracy_on_Sneq_std\n";
    for (const auto& [p, v, vis, tac] : groups) {
        const auto protocol = static_cast<Protocol>(p);
        const auto variant = static_cast<Variant>(v);
        const Modalities m{vis, tac};
        const auto a = cell(results, protocol, variant, m);
        const auto b = cell(results, protocol, variant, m, Score::AccuracyOnSneq);
        char line[256];
        std::snprintf(line, sizeof line, "%s,%s,%s,%zu,%.6f,%.6f,%.6f,%.6f\n", std::string(to_string(protocol)).c_str(),
                      std::string(to_string(variant)).c_str(), to_string(m).c_str(), a.n, a.mean, a.std, b.mean, b.std);
        out += line;
    }
    return out;
}

std::string render_bar_chart_svg(const std::string& title, const std::vector<std::string>& categories,
                                 const std::vector<BarSeries>& series) {
    static const char* const kColors[] = {"#4e79a7", "#f28e2b", "#59a14f", "#e15759", "#76b7b2", "#b07aa1"};
    const double left = 60, top = 40, plot_h = 260, group_w = 40.0 + 28.0 * static_cast<double>(series.size());
    const double plot_w = group_w * static_cast<double>(std::max<std::size_t>(categories.size(), 1));
    const double legend_h = 18.0 * static_cast<double>(series.size());
    const double width = left + plot_w + 20, height = top + plot_h + 50 + legend_h;

    std::string svg;
    char buf[512];
    std::snprintf(buf, sizeof buf,
                  "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"%.0f\" height=\"%.0f\" font-family=\"sans-serif\" "
                  "font-size=\"11\">\n<rect width=\"100%%\" height=\"100%%\" fill=\"white\"/>\n",
                  width, height);
    svg += buf;
    std::snprintf(buf, sizeof buf, "<text x=\"%.1f\" y=\"22\" font-size=\"14\" text-anchor=\"middle\">%s</text>\n",
                  width / 2, xml_escape(title).c_str());
    svg += buf;

    auto y_of = [&](double pct) { return top + plot_h * (1.0 - std::clamp(pct, 0.0, 100.0) / 100.0); };
    for (int tick = 0; tick <= 100; tick += 20) {
        const double y = y_of(tick);
        std::snprintf(buf, sizeof buf,
                      "<line x1=\"%.1f\" y1=\"%.1f\" x2=\"%.1f\" y2=\"%.1f\" stroke=\"#ddd\"/>\n"
                      "<text x=\"%.1f\" y=\"%.1f\" text-anchor=\"end\">%d</text>\n",
                      left, y, left + plot_w, y, left - 6, y + 4, tick);
        svg += buf;
    }

    for (std::size_t c = 0; c < categories.size(); ++c) {
        const double gx = left + group_w * static_cast<double>(c) + 20;
        for (std::size_t s = 0; s < series.size(); ++s) {
            if (c >= series[s].values.size() || series[s].values[c].n == 0) continue;
            const auto& v = series[s].values[c];
            const double x = gx + 28.0 * static_cast<double>(s);
            const double y = y_of(100.0 * v.mean);
            std::snprintf(buf, sizeof buf,
                          "<rect x=\"%.1f\" y=\"%.1f\" width=\"24\" height=\"%.1f\" fill=\"%s\"/>\n", x, y,
                          top + plot_h - y, kColors[s % std::size(kColors)]);
            svg += buf;
            if (v.std > 0) {
                const double y0 = y_of(100.0 * (v.mean - v.std)), y1 = y_of(100.0 * (v.mean + v.std));
                std::snprintf(buf, sizeof buf,
                              "<line x1=\"%.1f\" y1=\"%.1f\" x2=\"%.1f\" y2=\"%.1f\" stroke=\"black\"/>\n", x + 12, y0,
                              x + 12, y1);
                svg += buf;
            }
        }
        std::snprintf(buf, sizeof buf, "<text x=\"%.1f\" y=\"%.1f\" text-anchor=\"middle\">%s</text>\n",
                      gx + 14.0 * static_cast<double>(series.size()) - 2, top + plot_h + 16,
                      xml_escape(categories[c]).c_str());
        svg += buf;
    }
    std::snprintf(buf, sizeof buf, "<line x1=\"%.1f\" y1=\"%.1f\" x2=\"%.1f\" y2=\"%.1f\" stroke=\"black\"/>\n", left,
                  top + plot_h, left + plot_w, top + plot_h);
    svg += buf;

    for (std::size_t s = 0; s < series.size(); ++s) {
        const double y = top + plot_h + 36 + 18.0 * static_cast<double>(s);
        std::snprintf(buf, sizeof buf,
                      "<rect x=\"%.1f\" y=\"%.1f\" width=\"12\" height=\"12\" fill=\"%s\"/>\n"
                      "<text x=\"%.1f\" y=\"%.1f\">%s</text>\n",
                      left, y - 10, kColors[s % std::size(kColors)], left + 18, y, xml_escape(series[s].name).c_str());
        svg += buf;
    }
    svg += "</svg>\n";
    return svg;
}

std::string pose_chart_svg(std::span<const RunResult> results, Variant variant) {
    std::vector<std::string> categories;
    for (const auto& c : kPoseColumns) categories.push_back(c.label);
    std::vector<BarSeries> series;
    for (const auto& r : kPoseRows) {
        BarSeries s{r.label, {}};
        for (const auto& c : kPoseColumns) s.values.push_back(cell(results, c.protocol, variant, r.modalities));
        series.push_back(std::move(s));
    }
    return render_bar_chart_svg(std::string(display_name(variant)) + " accuracy on unseen poses", categories, series);
}

std::string object_chart_svg(std::span<const RunResult> results) {
    std::vector<std::string> categories;
    for (auto v : kAllVariants) categories.emplace_back(display_name(v));
    std::vector<BarSeries> series;
    for (const auto& c : kObjectColumns) {
        BarSeries s{c.label, {}};
        for (auto v : kAllVariants) s.values.push_back(cell(results, Protocol::UnseenObjects, v, c.modalities));
        series.push_back(std::move(s));
    }
    return render_bar_chart_svg("Accuracy on unseen objects", categories, series);
}

}  // namespace holdstab
