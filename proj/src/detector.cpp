#include "smurfids/detector.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>

#include "json.hpp"
#include "smurfids/rng.hpp"

namespace smurfids {

Label rule_detect(const ConnectionRecord& r, const RuleThresholds& t) {
    const bool smurf = r.hot <= t.hot_max && r.rerror_rate <= t.rerror_max &&
                       r.count >= t.count_low && r.count <= t.count_high;
    return smurf ? Label::smurf : Label::normal;
}

double LinearModel::decision_value(const std::array<double, kFeatureCount>& raw) const {
    double score = bias;
    for (size_t i = 0; i < kFeatureCount; ++i) {
        score += weights[i] * (raw[i] - feature_means[i]) / feature_stds[i];
    }
    return score;
}

double svm_objective(std::span<const std::array<double, kFeatureCount>> x,
                     std::span<const double> y,
                     const std::array<double, kFeatureCount>& w, double b, double c) {
    double obj = 0;
    for (const double wi : w) obj += 0.5 * wi * wi;
    for (size_t i = 0; i < x.size(); ++i) {
        double margin = b;
        for (size_t j = 0; j < kFeatureCount; ++j) margin += w[j] * x[i][j];
        obj += c * std::max(0.0, 1.0 - y[i] * margin);
    }
    return obj;
}

void svm_subgradient(std::span<const std::array<double, kFeatureCount>> x,
                     std::span<const double> y,
                     const std::array<double, kFeatureCount>& w, double b, double c,
                     std::array<double, kFeatureCount>& grad_w, double& grad_b) {
    grad_w = w;
    grad_b = 0;
    for (size_t i = 0; i < x.size(); ++i) {
        double margin = b;
        for (size_t j = 0; j < kFeatureCount; ++j) margin += w[j] * x[i][j];
        if (y[i] * margin < 1.0) {
            for (size_t j = 0; j < kFeatureCount; ++j) grad_w[j] -= c * y[i] * x[i][j];
            grad_b -= c * y[i];
        }
    }
}

namespace {

double label_sign(const ConnectionRecord& r, const char* op) {
    if (!r.label.has_value()) throw DegenerateData(std::string(op) + ": unlabeled record");
    switch (*r.label) {
        case Label::smurf: return 1.0;
        case Label::normal: return -1.0;
        case Label::other: break;
    }
    throw DegenerateData(std::string(op) + ": labels must be smurf or normal");
}

struct Standardized {
    std::vector<std::array<double, kFeatureCount>> x;
    std::array<double, kFeatureCount> means{};
    std::array<double, kFeatureCount> stds{};
};

Standardized standardize(std::span<const ConnectionRecord> records, const DatasetConfig& config) {
    Standardized s;
    s.x.resize(records.size());
    for (size_t i = 0; i < records.size(); ++i) {
        s.x[i] = vectorize(records[i], config);
    }
    const auto n = static_cast<double>(records.size());
    for (size_t j = 0; j < kFeatureCount; ++j) {
        double sum = 0;
        for (const auto& row : s.x) sum += row[j];
        s.means[j] = sum / n;
        double var = 0;
        for (const auto& row : s.x) {
            const double d = row[j] - s.means[j];
            var += d * d;
        }
        const double std_dev = std::sqrt(var / n);
        s.stds[j] = std_dev > 0 ? std_dev : 1.0;  // zero-variance features pass through
    }
    for (auto& row : s.x) {
        for (size_t j = 0; j < kFeatureCount; ++j) {
            row[j] = (row[j] - s.means[j]) / s.stds[j];
        }
    }
    return s;
}

}  // namespace

LinearModel svm_train(std::span<const ConnectionRecord> records, const Hyperparams& params,
                      const DatasetConfig& config, std::vector<double>* epoch_objectives) {
    if (records.size() < 2) throw DegenerateData("svm_train: need at least two records");

    std::vector<double> y(records.size());
    bool has_smurf = false, has_normal = false;
    for (size_t i = 0; i < records.size(); ++i) {
        y[i] = label_sign(records[i], "svm_train");
        (y[i] > 0 ? has_smurf : has_normal) = true;
    }
    if (!has_smurf || !has_normal) throw DegenerateData("svm_train: both classes required");

    const Standardized data = standardize(records, config);
    const double c = params.regularization_c;
    const auto n = static_cast<double>(records.size());

    std::array<double, kFeatureCount> w{};
    double b = 0;
    // the zero model is the first candidate, so the returned model can never
    // score worse than objective C*N
    std::array<double, kFeatureCount> best_w{};
    double best_b = 0;
    double best_obj = svm_objective(data.x, y, w, b, c);

    std::vector<size_t> order(records.size());
    std::iota(order.begin(), order.end(), 0);
    Rng rng(params.seed);

    for (int epoch = 0; epoch < params.epochs; ++epoch) {
        const double rate = params.learning_rate / (1.0 + epoch);
        rng.shuffle(order);
        for (const size_t i : order) {
            double margin = b;
            for (size_t j = 0; j < kFeatureCount; ++j) margin += w[j] * data.x[i][j];
            const double shrink = 1.0 - rate / n;
            for (size_t j = 0; j < kFeatureCount; ++j) w[j] *= shrink;
            if (y[i] * margin < 1.0) {
                const double step = rate * c * y[i];
                for (size_t j = 0; j < kFeatureCount; ++j) w[j] += step * data.x[i][j];
                b += step;
            }
        }
        const double obj = svm_objective(data.x, y, w, b, c);
        if (epoch_objectives) epoch_objectives->push_back(obj);
        if (obj < best_obj) {
            best_obj = obj;
            best_w = w;
            best_b = b;
        }
    }

    LinearModel model;
    model.weights = best_w;
    model.bias = best_b;
    model.feature_means = data.means;
    model.feature_stds = data.stds;
    model.regularization_c = c;
    model.training_epochs = params.epochs;
    model.seed = params.seed;
    model.feature_names = config.feature_names;
    return model;
}

std::pair<Label, double> svm_predict(const LinearModel& model, const ConnectionRecord& record) {
    const double score = model.decision_value(vectorize(record, model.feature_names));
    return {score > 0 ? Label::smurf : Label::normal, score};
}

CrossValidation cross_validate(std::span<const ConnectionRecord> records, int k,
                               const Hyperparams& params, const DatasetConfig& config) {
    if (k < 2) throw BadFoldCount("cross_validate: k must be at least 2");

    std::vector<size_t> smurf_idx, normal_idx;
    for (size_t i = 0; i < records.size(); ++i) {
        (label_sign(records[i], "cross_validate") > 0 ? smurf_idx : normal_idx).push_back(i);
    }
    if (smurf_idx.size() < static_cast<size_t>(k) || normal_idx.size() < static_cast<size_t>(k)) {
        throw BadFoldCount("cross_validate: each class needs at least k records");
    }

    Rng rng(params.seed);
    rng.shuffle(smurf_idx);
    rng.shuffle(normal_idx);

    // round-robin dealing keeps every fold within one record of the global
    // class ratio
    std::vector<int> fold_of(records.size());
    for (size_t p = 0; p < smurf_idx.size(); ++p) fold_of[smurf_idx[p]] = static_cast<int>(p % k);
    for (size_t p = 0; p < normal_idx.size(); ++p) fold_of[normal_idx[p]] = static_cast<int>(p % k);

    CrossValidation cv;
    std::vector<Label> pooled_truth, pooled_pred;
    std::vector<ScoredLabel> pooled_scores;
    for (int fold = 0; fold < k; ++fold) {
        std::vector<ConnectionRecord> train;
        std::vector<size_t> test;
        for (size_t i = 0; i < records.size(); ++i) {
            if (fold_of[i] == fold) {
                test.push_back(i);
            } else {
                train.push_back(records[i]);
            }
        }
        const LinearModel model = svm_train(train, params, config);

        std::vector<Label> truth, pred;
        std::vector<ScoredLabel> scored;
        for (const size_t i : test) {
            const auto [label, score] = svm_predict(model, records[i]);
            truth.push_back(*records[i].label);
            pred.push_back(label);
            scored.push_back({*records[i].label, score});
        }
        cv.folds.push_back(metrics(confusion(truth, pred), scored));
        pooled_truth.insert(pooled_truth.end(), truth.begin(), truth.end());
        pooled_pred.insert(pooled_pred.end(), pred.begin(), pred.end());
        pooled_scores.insert(pooled_scores.end(), scored.begin(), scored.end());
    }
    cv.aggregate = metrics(confusion(pooled_truth, pooled_pred), pooled_scores);
    return cv;
}

double attack_percentage(std::span<const Label> predictions) {
    if (predictions.empty()) throw EmptyInput("attack_percentage: no predictions");
    const auto smurf = static_cast<double>(
        std::count(predictions.begin(), predictions.end(), Label::smurf));
    return smurf / static_cast<double>(predictions.size());
}

std::string to_json_string(const LinearModel& model, int indent) {
    nlohmann::json j;
    j["weights"] = model.weights;
    j["bias"] = model.bias;
    j["means"] = model.feature_means;
    j["stds"] = model.feature_stds;
    j["c"] = model.regularization_c;
    j["epochs"] = model.training_epochs;
    j["seed"] = model.seed;
    j["feature_names"] = model.feature_names;
    return j.dump(indent);
}

LinearModel model_from_json(std::string_view text) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::exception& e) {
        throw BadRecord(std::string("model JSON: ") + e.what());
    }
    try {
        LinearModel model;
        const auto weights = j.at("weights").get<std::vector<double>>();
        const auto means = j.at("means").get<std::vector<double>>();
        const auto stds = j.at("stds").get<std::vector<double>>();
        const auto names = j.at("feature_names").get<std::vector<std::string>>();
        if (weights.size() != kFeatureCount || means.size() != kFeatureCount ||
            stds.size() != kFeatureCount || names.size() != kFeatureCount) {
            throw BadRecord("model JSON: vectors must have 7 entries");
        }
        std::copy(weights.begin(), weights.end(), model.weights.begin());
        std::copy(means.begin(), means.end(), model.feature_means.begin());
        std::copy(stds.begin(), stds.end(), model.feature_stds.begin());
        std::copy(names.begin(), names.end(), model.feature_names.begin());
        model.bias = j.at("bias").get<double>();
        model.regularization_c = j.at("c").get<double>();
        model.training_epochs = j.at("epochs").get<int>();
        model.seed = j.at("seed").get<uint64_t>();
        for (const double s : model.feature_stds) {
            if (!(s > 0)) throw BadRecord("model JSON: stds must be strictly positive");
        }
        return model;
    } catch (const nlohmann::json::exception& e) {
        throw BadRecord(std::string("model JSON: ") + e.what());
    }
}

void save_model(const std::filesystem::path& path, const LinearModel& model) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw IoFailure("cannot open for writing: " + path.string());
    out << to_json_string(model, 2) << '\n';
    if (!out) throw IoFailure("write failed: " + path.string());
}

LinearModel load_model(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoFailure("cannot open: " + path.string());
    std::stringstream buf;
    buf << in.rdbuf();
    return model_from_json(buf.str());
}

}  // namespace smurfids
