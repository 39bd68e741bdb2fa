#include "smurfids/evaluator.hpp"

#include <algorithm>
#include <cstdio>
#include <numeric>
#include <vector>

#include "json.hpp"

namespace smurfids {

size_t ConfusionCounts::index(Label l) {
    switch (l) {
        case Label::normal: return 0;
        case Label::smurf: return 1;
        case Label::other: break;
    }
    throw Error("confusion counts cover {normal, smurf} only");
}

uint64_t& ConfusionCounts::at(Label actual, Label predicted) {
    return cells[index(actual)][index(predicted)];
}

uint64_t ConfusionCounts::at(Label actual, Label predicted) const {
    return cells[index(actual)][index(predicted)];
}

uint64_t ConfusionCounts::total() const {
    return cells[0][0] + cells[0][1] + cells[1][0] + cells[1][1];
}

uint64_t ConfusionCounts::support(Label actual) const {
    return cells[index(actual)][0] + cells[index(actual)][1];
}

ConfusionCounts confusion(std::span<const Label> truth, std::span<const Label> predicted) {
    if (truth.empty()) throw EmptyInput("no labels to tally");
    if (truth.size() != predicted.size()) {
        throw LengthMismatch("truth has " + std::to_string(truth.size()) + " labels, predictions " +
                             std::to_string(predicted.size()));
    }
    ConfusionCounts counts;
    for (size_t i = 0; i < truth.size(); ++i) {
        ++counts.at(truth[i], predicted[i]);
    }
    return counts;
}

namespace {

// Rank integration (Mann-Whitney), ties contributing half. `positive` picks
// which class counts as positive; scores are smurf-oriented, so they flip
// sign when normal is the positive class.
std::optional<double> roc_area(std::span<const ScoredLabel> scored, Label positive) {
    std::vector<double> values(scored.size());
    for (size_t i = 0; i < scored.size(); ++i) {
        values[i] = positive == Label::smurf ? scored[i].score : -scored[i].score;
    }
    std::vector<size_t> order(scored.size());
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(),
              [&](size_t a, size_t b) { return values[a] < values[b]; });

    double positives = 0, negatives = 0, positive_rank_sum = 0;
    size_t i = 0;
    while (i < order.size()) {
        size_t j = i;
        while (j < order.size() && values[order[j]] == values[order[i]]) ++j;
        const double midrank = (static_cast<double>(i) + static_cast<double>(j) + 1.0) / 2.0;
        for (size_t k = i; k < j; ++k) {
            if (scored[order[k]].truth == positive) {
                positives += 1;
                positive_rank_sum += midrank;
            } else {
                negatives += 1;
            }
        }
        i = j;
    }
    if (positives == 0 || negatives == 0) return std::nullopt;
    return (positive_rank_sum - positives * (positives + 1) / 2.0) / (positives * negatives);
}

ClassMetrics class_metrics(const ConfusionCounts& c, Label cls) {
    const Label other = cls == Label::smurf ? Label::normal : Label::smurf;
    const double tp = static_cast<double>(c.at(cls, cls));
    const double fn = static_cast<double>(c.at(cls, other));
    const double fp = static_cast<double>(c.at(other, cls));
    const double tn = static_cast<double>(c.at(other, other));

    ClassMetrics m;
    m.support = c.support(cls);
    m.absent = m.support == 0;
    m.recall = m.absent ? 0.0 : tp / (tp + fn);
    m.tp_rate = m.recall;
    m.fp_rate = fp + tn > 0 ? fp / (fp + tn) : 0.0;
    m.precision = tp + fp > 0 ? tp / (tp + fp) : 1.0;
    m.f_measure = m.precision + m.recall > 0
                      ? 2.0 * m.precision * m.recall / (m.precision + m.recall)
                      : 0.0;
    return m;
}

}  // namespace

EvalReport metrics(const ConfusionCounts& counts,
                   std::optional<std::span<const ScoredLabel>> scores) {
    if (counts.total() == 0) throw EmptyInput("empty confusion counts");

    EvalReport report;
    report.total = counts.total();
    report.normal = class_metrics(counts, Label::normal);
    report.smurf = class_metrics(counts, Label::smurf);
    if (scores.has_value()) {
        report.normal.roc_area = roc_area(*scores, Label::normal);
        report.smurf.roc_area = roc_area(*scores, Label::smurf);
    }

    const auto total = static_cast<double>(report.total);
    const auto wn = static_cast<double>(report.normal.support) / total;
    const auto ws = static_cast<double>(report.smurf.support) / total;
    auto weighted = [&](double n, double s) { return wn * n + ws * s; };
    report.weighted.support = report.total;
    report.weighted.tp_rate = weighted(report.normal.tp_rate, report.smurf.tp_rate);
    report.weighted.fp_rate = weighted(report.normal.fp_rate, report.smurf.fp_rate);
    report.weighted.precision = weighted(report.normal.precision, report.smurf.precision);
    report.weighted.recall = weighted(report.normal.recall, report.smurf.recall);
    report.weighted.f_measure = weighted(report.normal.f_measure, report.smurf.f_measure);
    if (report.normal.roc_area && report.smurf.roc_area) {
        report.weighted.roc_area = weighted(*report.normal.roc_area, *report.smurf.roc_area);
    }

    report.accuracy =
        static_cast<double>(counts.at(Label::normal, Label::normal) +
                            counts.at(Label::smurf, Label::smurf)) / total;
    report.attack_percentage_truth = static_cast<double>(counts.support(Label::smurf)) / total;
    report.attack_percentage_estimate =
        static_cast<double>(counts.at(Label::normal, Label::smurf) +
                            counts.at(Label::smurf, Label::smurf)) / total;
    report.absolute_error =
        std::abs(report.attack_percentage_estimate - report.attack_percentage_truth);
    return report;
}

namespace {

nlohmann::json class_json(const ClassMetrics& m) {
    nlohmann::json j;
    j["support"] = m.support;
    j["tp_rate"] = m.tp_rate;
    j["fp_rate"] = m.fp_rate;
    j["precision"] = m.precision;
    j["recall"] = m.recall;
    j["f_measure"] = m.f_measure;
    if (m.roc_area) j["roc_area"] = *m.roc_area;
    if (m.absent) j["absent"] = true;
    return j;
}

}  // namespace

std::string to_json_string(const EvalReport& report, int indent) {
    nlohmann::json j;
    j["total"] = report.total;
    j["accuracy"] = report.accuracy;
    auto normal = class_json(report.normal);
    normal["class"] = "normal";
    auto smurf = class_json(report.smurf);
    smurf["class"] = "smurf";
    j["classes"] = nlohmann::json::array({normal, smurf});
    j["weighted_avg"] = class_json(report.weighted);
    j["attack_percentage"] = {{"estimate", report.attack_percentage_estimate},
                              {"truth", report.attack_percentage_truth},
                              {"absolute_error", report.absolute_error}};
    return j.dump(indent);
}

std::string to_table(const EvalReport& report) {
    char line[160];
    std::string out;
    out += "               TP rate  FP rate  Precision  Recall  F-Measure  ROC area  Class\n";
    auto row = [&](const char* prefix, const ClassMetrics& m, const char* cls) {
        char roc[16];
        if (m.roc_area) {
            std::snprintf(roc, sizeof(roc), "%8.3f", *m.roc_area);
        } else {
            std::snprintf(roc, sizeof(roc), "%8s", "-");
        }
        std::snprintf(line, sizeof(line), "%-13s %8.3f %8.3f %10.3f %7.3f %10.3f %s  %s\n", prefix,
                      m.tp_rate, m.fp_rate, m.precision, m.recall, m.f_measure, roc, cls);
        out += line;
    };
    row("", report.normal, "normal");
    row("", report.smurf, "smurf");
    row("Weighted Avg.", report.weighted, "");
    std::snprintf(line, sizeof(line), "accuracy %.4f   attack%% estimate %.4f truth %.4f |err| %.4f\n",
                  report.accuracy, report.attack_percentage_estimate,
                  report.attack_percentage_truth, report.absolute_error);
    out += line;
    return out;
}

}  // namespace smurfids
