#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <string>

#include "smurfids/features.hpp"

namespace smurfids {

// 2x2 confusion table over {normal, smurf}, indexed (actual, predicted).
struct ConfusionCounts {
    std::array<std::array<uint64_t, 2>, 2> cells{};

    static size_t index(Label l);
    uint64_t& at(Label actual, Label predicted);
    uint64_t at(Label actual, Label predicted) const;
    uint64_t total() const;
    uint64_t support(Label actual) const;  // row sum
};

// Throws EmptyInput, LengthMismatch; labels must be normal or smurf.
ConfusionCounts confusion(std::span<const Label> truth, std::span<const Label> predicted);

// A record's ground truth paired with its classifier score (larger = more
// smurf-like). Needed for ROC areas, which rank rather than threshold.
struct ScoredLabel {
    Label truth = Label::normal;
    double score = 0;
};

struct ClassMetrics {
    uint64_t support = 0;
    double tp_rate = 0;
    double fp_rate = 0;
    double precision = 0;
    double recall = 0;
    double f_measure = 0;
    std::optional<double> roc_area;
    bool absent = false;  // no instances of this class in truth
};

struct EvalReport {
    ClassMetrics normal;
    ClassMetrics smurf;
    ClassMetrics weighted;  // support-weighted averages, support = total
    double accuracy = 0;
    double attack_percentage_estimate = 0;
    double attack_percentage_truth = 0;
    double absolute_error = 0;
    uint64_t total = 0;
};

// Per-class rates with the documented degenerate-case conventions:
// precision 0/0 -> 1.0, recall 0/0 -> 0.0 with the class flagged absent,
// f-measure 0/0 -> 0. ROC area by rank integration with ties counting half,
// computed only when scores are supplied.
EvalReport metrics(const ConfusionCounts& counts,
                   std::optional<std::span<const ScoredLabel>> scores = std::nullopt);

std::string to_json_string(const EvalReport& report, int indent = -1);

// Aligned text table, one row per class plus the weighted average.
std::string to_table(const EvalReport& report);

}  // namespace smurfids
