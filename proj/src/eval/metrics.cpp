#include "holdstab/eval/metrics.hpp"

#include <cmath>
#include <cstdio>
#include <limits>

#include "holdstab/core/error.hpp"

namespace holdstab {

namespace {

std::string format_hundredths(long h) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%ld.%02ld%%", h / 100, h % 100);
    return buf;
}

}  // namespace

nlohmann::json Metrics::to_json() const {
    return {{"accuracy", accuracy},
            {"accuracy_on_sneq", std::isnan(accuracy_on_sneq) ? nlohmann::json(nullptr) : nlohmann::json(accuracy_on_sneq)},
            {"confusion", confusion},
            {"n", n},
            {"n_sneq", n_sneq}};
}

Metrics evaluate(std::span<const BinaryLabel> predicted, std::span<const FeatureSequence* const> test) {
    if (test.empty()) throw DataError("evaluate on an empty test set");
    if (predicted.size() != test.size())
        throw DataError("got " + std::to_string(predicted.size()) + " predictions for " + std::to_string(test.size()) +
                        " test sequences");
    Metrics m;
    m.n = test.size();
    std::size_t hits = 0, hits_neq = 0;
    for (std::size_t i = 0; i < test.size(); ++i) {
        const auto actual = test[i]->label_shake;
        const bool ok = predicted[i] == actual;
        ++m.confusion[static_cast<std::size_t>(actual)][static_cast<std::size_t>(predicted[i])];
        hits += ok;
        if (test[i]->label_changes()) {
            ++m.n_sneq;
            hits_neq += ok;
        }
    }
    m.accuracy = static_cast<double>(hits) / static_cast<double>(m.n);
    m.accuracy_on_sneq = m.n_sneq ? static_cast<double>(hits_neq) / static_cast<double>(m.n_sneq)
                                  : std::numeric_limits<double>::quiet_NaN();
    return m;
}

Metrics evaluate(const Classifier& classifier, std::span<const FeatureSequence* const> test) {
    if (test.empty()) throw DataError("evaluate on an empty test set");
    const auto pred = classifier(test);
    return evaluate(std::span<const BinaryLabel>(pred), test);
}

BinaryLabel majority_label(std::span<const BinaryLabel> train_labels) {
    if (train_labels.empty()) throw DataError("majority baseline needs training labels");
    std::size_t stable = 0;
    for (auto l : train_labels) stable += l == BinaryLabel::Stable;
    return 2 * stable >= train_labels.size() ? BinaryLabel::Stable : BinaryLabel::NotStable;
}

Classifier majority_baseline(std::span<const BinaryLabel> train_labels) {
    const auto label = majority_label(train_labels);
    return [label](std::span<const FeatureSequence* const> xs) { return std::vector<BinaryLabel>(xs.size(), label); };
}

long percent_hundredths(std::size_t num, std::size_t den) {
    if (den == 0) throw DataError("percentage of an empty set");
    return static_cast<long>((static_cast<unsigned long long>(num) * 10000ULL) / den);
}

long DatasetStatistics::unstable_hundredths(Phase p) const { return percent_hundredths(at(p).unstable(), cycles); }

std::string DatasetStatistics::unstable_percent(Phase p) const { return format_hundredths(unstable_hundredths(p)); }

nlohmann::json DatasetStatistics::to_json() const {
    nlohmann::json j = {{"cycles", cycles}};
    for (auto p : kPhases) {
        const auto& c = at(p);
        nlohmann::json row = {{"pass", c.pass}, {"slip", c.slip}, {"drop", c.drop}, {"not_present", c.not_present}};
        if (cycles) row["unstable_percent"] = unstable_percent(p);
        j[std::string(to_string(p))] = row;
    }
    return j;
}

DatasetStatistics dataset_statistics(const Dataset& d) {
    DatasetStatistics s;
    s.cycles = d.size();
    for (const auto& c : d.cycles)
        for (auto p : kPhases) {
            auto& row = s.phases[index(p)];
            switch (c.label(p)) {
                case PhaseLabel::Pass: ++row.pass; break;
                case PhaseLabel::Slip: ++row.slip; break;
                case PhaseLabel::Drop: ++row.drop; break;
                case PhaseLabel::NotPresent: ++row.not_present; break;
            }
        }
    return s;
}

std::string format_statistics_table(const DatasetStatistics& s) {
    if (s.cycles == 0) throw DataError("statistics of an empty dataset");
    std::string out;
    char line[128];
    std::snprintf(line, sizeof line, "%-8s %6s %6s %6s %12s\n", "Phase", "Pass", "Slip", "Drop", "Slip+Drop");
    out += line;
    for (auto p : {Phase::Grasp, Phase::Pose, Phase::Shake}) {
        const auto& c = s.at(p);
        std::snprintf(line, sizeof line, "%-8s %6zu %6zu %6zu %12s\n", std::string(to_string(p)).c_str(), c.pass,
                      c.slip, c.drop, s.unstable_percent(p).c_str());
        out += line;
    }
    std::snprintf(line, sizeof line, "Total cycles: %zu\n", s.cycles);
    out += line;
    return out;
}

std::string format_statistics_csv(const DatasetStatistics& s) {
    if (s.cycles == 0) throw DataError("statistics of an empty dataset");
    std::string out = "phase,pass,slip,drop,not_present,unstable_percent\n";
    for (auto p : {Phase::Grasp, Phase::Pose, Phase::Shake}) {
        const auto& c = s.at(p);
        const long h = s.unstable_hundredths(p);
        char line[128];
        std::snprintf(line, sizeof line, "%s,%zu,%zu,%zu,%zu,%ld.%02ld\n", std::string(to_string(p)).c_str(), c.pass,
                      c.slip, c.drop, c.not_present, h / 100, h % 100);
        out += line;
    }
    return out;
}

}  // namespace holdstab
