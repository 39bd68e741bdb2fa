#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "smurfids/evaluator.hpp"
#include "smurfids/features.hpp"

namespace smurfids {

// Explicit Smurf condition. The published rule's REJ clause is
// self-contradictory ("> 0.21 and <= 0.01"); the <= bound is the one that
// matches the attack class, the other value stays available as rerror_alt.
struct RuleThresholds {
    double hot_max = 0.0;
    double rerror_max = 0.01;
    double rerror_alt = 0.21;
    double count_low = 41.2;
    double count_high = 112.3;
};

// smurf iff hot <= hot_max and rerror_rate <= rerror_max and
// count_low <= count <= count_high.
Label rule_detect(const ConnectionRecord& record, const RuleThresholds& thresholds = {});

struct Hyperparams {
    double regularization_c = 1.0;
    int epochs = 50;
    double learning_rate = 0.1;  // decays as learning_rate / (1 + epoch)
    uint64_t seed = 42;
};

// Linear soft-margin SVM with per-feature standardization fitted on the
// training set. Decision value for a raw vector x is
// dot(weights, (x - means) / stds) + bias.
struct LinearModel {
    std::array<double, kFeatureCount> weights{};
    double bias = 0;
    std::array<double, kFeatureCount> feature_means{};
    std::array<double, kFeatureCount> feature_stds{};
    double regularization_c = 1.0;
    int training_epochs = 0;
    uint64_t seed = 0;
    FeatureNames feature_names = kDefaultFeatureNames;

    double decision_value(const std::array<double, kFeatureCount>& raw) const;
};

// Primal objective 0.5*||w||^2 + C * sum_i hinge(y_i * (w.x_i + b)) over
// already-standardized vectors, labels in {-1, +1}. Exposed together with
// its subgradient so the numerics can be checked against finite differences.
double svm_objective(std::span<const std::array<double, kFeatureCount>> x,
                     std::span<const double> y,
                     const std::array<double, kFeatureCount>& w, double b, double c);
void svm_subgradient(std::span<const std::array<double, kFeatureCount>> x,
                     std::span<const double> y,
                     const std::array<double, kFeatureCount>& w, double b, double c,
                     std::array<double, kFeatureCount>& grad_w, double& grad_b);

// Stochastic subgradient descent with seeded shuffling, smurf = +1,
// normal = -1. The full objective is evaluated once per epoch and the best
// iterate wins, so the result never scores worse than the zero model.
// Throws DegenerateData on fewer than two records or a single class.
// epoch_objectives, when given, receives the post-epoch objective values.
LinearModel svm_train(std::span<const ConnectionRecord> records, const Hyperparams& params,
                      const DatasetConfig& config = {},
                      std::vector<double>* epoch_objectives = nullptr);

// label = smurf iff score > 0; an exact 0 breaks to normal.
std::pair<Label, double> svm_predict(const LinearModel& model, const ConnectionRecord& record);

struct CrossValidation {
    std::vector<EvalReport> folds;
    EvalReport aggregate;  // metrics over the pooled out-of-fold predictions
};

// Stratified k-fold with seeded shuffling; every class lands in every fold
// within one record of the global ratio. Throws BadFoldCount when k < 2 or
// a class has fewer than k records.
CrossValidation cross_validate(std::span<const ConnectionRecord> records, int k,
                               const Hyperparams& params, const DatasetConfig& config = {});

// Fraction of predictions labeled smurf. Throws EmptyInput.
double attack_percentage(std::span<const Label> predictions);

std::string to_json_string(const LinearModel& model, int indent = -1);
LinearModel model_from_json(std::string_view text);
void save_model(const std::filesystem::path& path, const LinearModel& model);
LinearModel load_model(const std::filesystem::path& path);

}  // namespace smurfids
