#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "smurfids/detector.hpp"
#include "smurfids/evaluator.hpp"
#include "smurfids/features.hpp"
#include "smurfids/normalizer.hpp"
#include "smurfids/packet.hpp"
#include "smurfids/pcap.hpp"
#include "smurfids/synth.hpp"

namespace {

using namespace smurfids;

std::string format_number(double v) { return nlohmann::json(v).dump(); }

void emit(const std::string& text, const std::string& path) {
    if (path.empty()) {
        std::cout << text;
        return;
    }
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw IoFailure("cannot open for writing: " + path);
    out << text;
    if (!out) throw IoFailure("write failed: " + path);
}

// Parses a capture into timed datagrams; frames that do not decode as IPv4
// are counted and left out.
std::vector<TimedDatagram> load_datagrams(const std::string& path) {
    const auto packets = read_capture(path);
    std::vector<TimedDatagram> out;
    out.reserve(packets.size());
    size_t unparseable = 0;
    for (const auto& pkt : packets) {
        try {
            out.push_back({pkt.ts, parse_ipv4(pkt.bytes)});
        } catch (const MalformedHeader&) {
            ++unparseable;
        }
    }
    if (unparseable > 0) {
        std::cerr << "note: skipped " << unparseable << " undecodable frame(s)\n";
    }
    return out;
}

struct LabelFile {
    std::vector<Label> labels;
    std::vector<double> scores;  // empty when the file carries no scores
};

// Accepts a records CSV (labels taken from the label column), a predictions
// CSV ("label[,score]" with header), or a bare label-per-line list.
LabelFile read_label_file(const std::string& path) {
    try {
        const auto records = read_records_auto(path);
        LabelFile f;
        for (size_t i = 0; i < records.size(); ++i) {
            if (!records[i].label) {
                throw BadRecord(path + ": record " + std::to_string(i + 1) + " has no label");
            }
            f.labels.push_back(*records[i].label);
        }
        return f;
    } catch (const BadRecord&) {
        // fall through to the simple formats
    }
    std::ifstream in(path);
    if (!in) throw IoFailure("cannot open: " + path);
    LabelFile f;
    std::string line;
    bool first = true;
    bool has_scores = false;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        const size_t comma = line.find(',');
        const std::string head = line.substr(0, comma);
        if (first) {
            first = false;
            if (head == "label") {
                has_scores = comma != std::string::npos;
                continue;
            }
            has_scores = comma != std::string::npos;
        }
        const Label label = parse_label(head);
        if (label == Label::other) throw BadRecord(path + ": unknown label '" + head + "'");
        f.labels.push_back(label);
        if (has_scores && comma != std::string::npos) {
            try {
                f.scores.push_back(std::stod(line.substr(comma + 1)));
            } catch (const std::exception&) {
                throw BadRecord(path + ": bad score on line '" + line + "'");
            }
        }
    }
    if (f.labels.empty()) throw EmptyInput(path + ": no labels");
    if (!f.scores.empty() && f.scores.size() != f.labels.size()) {
        throw BadRecord(path + ": score column is incomplete");
    }
    return f;
}

// Drops records the binary classifier cannot use; reports how many.
std::vector<ConnectionRecord> binary_labeled(std::vector<ConnectionRecord> records) {
    std::vector<ConnectionRecord> kept;
    kept.reserve(records.size());
    size_t skipped = 0;
    for (auto& r : records) {
        if (r.label && (*r.label == Label::smurf || *r.label == Label::normal)) {
            kept.push_back(std::move(r));
        } else {
            ++skipped;
        }
    }
    if (skipped > 0) {
        std::cerr << "note: skipped " << skipped
                  << " record(s) without a smurf/normal label\n";
    }
    return kept;
}

RuleThresholds thresholds_from(const std::vector<double>& v) {
    if (v.empty()) return {};
    RuleThresholds t;
    t.hot_max = v[0];
    t.rerror_max = v[1];
    t.rerror_alt = v[2];
    t.count_low = v[3];
    t.count_high = v[4];
    return t;
}

nlohmann::json report_json(const EvalReport& report) {
    return nlohmann::json::parse(to_json_string(report));
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Traffic normalization and smurf-attack detection toolkit"};
    app.require_subcommand(1);
    app.set_config("--config", "", "Read options from a TOML/INI file; flags override it");

    // ---- normalize ----------------------------------------------------
    struct {
        std::string input, output, log;
        unsigned ttl_floor = 64;
        unsigned max_internal_path = 32;
        bool keep_df = false;
        bool no_trim = false;
        bool no_verify = false;
        bool allow_broadcast_echo = false;
        std::vector<std::string> subnets;
    } nrm;
    auto* cmd_normalize =
        app.add_subcommand("normalize", "Scrub a capture; emit the cleaned capture and a log");
    cmd_normalize->add_option("--input,-i", nrm.input, "Input pcap")->required();
    cmd_normalize->add_option("--output,-o", nrm.output, "Cleaned pcap (omit to skip writing)");
    cmd_normalize->add_option("--log", nrm.log, "Log JSON path (default: standard output)");
    cmd_normalize->add_option("--ttl-floor", nrm.ttl_floor, "TTL packets leave with (default 64)");
    cmd_normalize->add_option("--max-internal-path", nrm.max_internal_path,
                              "Hop count the TTL floor must clear (default 32)");
    cmd_normalize->add_flag("--keep-df", nrm.keep_df, "Do not clear the DF bit");
    cmd_normalize->add_flag("--no-trim", nrm.no_trim, "Do not trim overlong datagrams");
    cmd_normalize->add_flag("--no-verify-checksums", nrm.no_verify,
                            "Skip IP and ICMP checksum verification");
    cmd_normalize->add_flag("--allow-broadcast-echo", nrm.allow_broadcast_echo,
                            "Pass broadcast-addressed echo requests");
    cmd_normalize->add_option("--subnet", nrm.subnets,
                              "Local subnet a.b.c.d/len whose broadcast address is guarded "
                              "(repeatable)");
    cmd_normalize->callback([&] {
        NormalizerConfig config;
        config.ttl_floor = static_cast<uint8_t>(nrm.ttl_floor);
        config.max_internal_path = static_cast<uint8_t>(nrm.max_internal_path);
        config.clear_df = !nrm.keep_df;
        config.trim_overlong = !nrm.no_trim;
        config.verify_ip_checksum = !nrm.no_verify;
        config.verify_icmp_checksum = !nrm.no_verify;
        config.drop_broadcast_echo = !nrm.allow_broadcast_echo;
        for (const auto& s : nrm.subnets) config.local_subnets.push_back(parse_subnet(s));
        if (!config.valid()) {
            throw Error("ttl floor must exceed the internal path length");
        }
        const auto datagrams = load_datagrams(nrm.input);
        const auto [survivors, log] = normalize_stream(datagrams, config);
        if (!nrm.output.empty()) {
            std::vector<CapturedPacket> out;
            out.reserve(survivors.size());
            for (const auto& td : survivors) {
                out.push_back({td.ts, serialize(td.dgram, false)});
            }
            write_capture(nrm.output, out);
        }
        emit(to_json_string(log, 2) + "\n", nrm.log);
    });

    // ---- extract ------------------------------------------------------
    struct {
        std::string input, output;
        double window = 2.0;
        int host_window = 100;
    } ext;
    auto* cmd_extract =
        app.add_subcommand("extract", "Turn a capture into connection records CSV");
    cmd_extract->add_option("--input,-i", ext.input, "Input pcap")->required();
    cmd_extract->add_option("--output,-o", ext.output, "Records CSV path")->required();
    cmd_extract->add_option("--window", ext.window, "Time window in seconds (default 2.0)");
    cmd_extract->add_option("--host-window", ext.host_window,
                            "Trailing connection count for host features (default 100)");
    cmd_extract->callback([&] {
        DatasetConfig config;
        config.window_seconds = ext.window;
        config.host_window = ext.host_window;
        if (!(config.window_seconds > 0) || config.host_window < 1) {
            throw Error("window must be positive and host window at least 1");
        }
        const auto records = extract_connections(load_datagrams(ext.input), config);
        write_records_csv(ext.output, records, config);
        std::cerr << "note: wrote " << records.size() << " record(s)\n";
    });

    // ---- synth ---------------------------------------------------------
    struct {
        std::string records, pcap, victim = "10.0.0.1", subnet = "192.168.1.0/24";
        uint64_t seed = 1;
        size_t n_smurf = 0, n_normal = 0;
        double count_low = 41.2, count_high = 112.3, count_mean = 5.0, rate = 1000.0;
    } syn;
    auto* cmd_synth = app.add_subcommand("synth", "Generate labeled records and/or a capture");
    cmd_synth->add_option("--records", syn.records, "Write labeled records CSV here");
    cmd_synth->add_option("--pcap", syn.pcap, "Write a capture here");
    cmd_synth->add_option("--smurf", syn.n_smurf, "Smurf record/packet count")->required();
    cmd_synth->add_option("--normal", syn.n_normal, "Normal record/packet count")->required();
    cmd_synth->add_option("--seed", syn.seed, "Generator seed (default 1)");
    cmd_synth->add_option("--count-low", syn.count_low, "Smurf count band low edge");
    cmd_synth->add_option("--count-high", syn.count_high, "Smurf count band high edge");
    cmd_synth->add_option("--count-mean", syn.count_mean, "Normal traffic count mean");
    cmd_synth->add_option("--rate", syn.rate, "Capture packet rate per second");
    cmd_synth->add_option("--victim", syn.victim, "Spoofed victim address");
    cmd_synth->add_option("--subnet", syn.subnet, "Amplifier subnet a.b.c.d/len");
    cmd_synth->callback([&] {
        if (syn.records.empty() && syn.pcap.empty()) {
            throw Error("give --records and/or --pcap");
        }
        SynthConfig config;
        config.seed = syn.seed;
        config.n_smurf = syn.n_smurf;
        config.n_normal = syn.n_normal;
        config.smurf_count_low = syn.count_low;
        config.smurf_count_high = syn.count_high;
        config.normal_count_mean = syn.count_mean;
        config.packet_rate = syn.rate;
        config.victim_addr = parse_addr(syn.victim);
        config.amplifier_subnet = parse_subnet(syn.subnet);
        if (!(config.packet_rate > 0) || !(config.smurf_count_low <= config.smurf_count_high)) {
            throw Error("rate must be positive and the count band ordered");
        }
        if (!syn.records.empty()) {
            write_records_csv(syn.records, gen_records(config));
        }
        if (!syn.pcap.empty()) {
            gen_smurf_pcap(syn.pcap, config);
        }
    });

    // ---- train ----------------------------------------------------------
    struct {
        std::string input, model;
        double c = 1.0, lr = 0.1;
        int epochs = 50;
        uint64_t seed = 42;
        bool verbose = false;
    } trn;
    auto* cmd_train = app.add_subcommand("train", "Fit the linear classifier on labeled records");
    cmd_train->add_option("--input,-i", trn.input, "Records CSV or KDD-format file")->required();
    cmd_train->add_option("--model,-m", trn.model, "Model JSON path (default: standard output)");
    cmd_train->add_option("--c", trn.c, "Soft-margin penalty (default 1.0)");
    cmd_train->add_option("--epochs", trn.epochs, "Training epochs (default 50)");
    cmd_train->add_option("--lr", trn.lr, "Initial learning rate (default 0.1)");
    cmd_train->add_option("--seed", trn.seed, "Shuffle seed (default 42)");
    cmd_train->add_flag("--verbose,-v", trn.verbose, "Print the per-epoch objective");
    cmd_train->callback([&] {
        const auto records = binary_labeled(read_records_auto(trn.input));
        Hyperparams params;
        params.regularization_c = trn.c;
        params.epochs = trn.epochs;
        params.learning_rate = trn.lr;
        params.seed = trn.seed;
        if (!(params.regularization_c > 0) || params.epochs < 1 || !(params.learning_rate > 0)) {
            throw Error("c and lr must be positive, epochs at least 1");
        }
        std::vector<double> objectives;
        const LinearModel model =
            svm_train(records, params, {}, trn.verbose ? &objectives : nullptr);
        for (size_t e = 0; e < objectives.size(); ++e) {
            std::cerr << "epoch " << (e + 1) << " objective " << format_number(objectives[e])
                      << "\n";
        }
        emit(to_json_string(model, 2) + "\n", trn.model);
    });

    // ---- detect ---------------------------------------------------------
    struct {
        std::string input, model, output, format = "json";
        bool rule = false;
        std::vector<double> thresholds;
    } det;
    auto* cmd_detect = app.add_subcommand("detect", "Label records with a model or the rule");
    cmd_detect->add_option("--input,-i", det.input, "Records CSV or KDD-format file")->required();
    auto* det_model = cmd_detect->add_option("--model,-m", det.model, "Model JSON");
    auto* det_rule = cmd_detect->add_flag("--rule", det.rule, "Use the threshold rule instead");
    det_rule->excludes(det_model);
    cmd_detect->add_option("--thresholds", det.thresholds,
                           "Rule thresholds: hot_max rerror_max rerror_alt count_low count_high")
        ->expected(5);
    cmd_detect->add_option("--output,-o", det.output,
                           "Predictions CSV (default: standard output, with the attack share "
                           "moved to the diagnostic stream)");
    cmd_detect->add_option("--format", det.format, "Attack-share format (default json)")
        ->check(CLI::IsMember({"json", "table"}));
    cmd_detect->callback([&] {
        if (!det.rule && det.model.empty()) {
            throw Error("give --model or --rule");
        }
        const auto records = read_records_auto(det.input);
        if (records.empty()) throw EmptyInput(det.input + ": no records");

        std::string csv;
        std::vector<Label> predicted;
        if (det.rule) {
            const RuleThresholds t = thresholds_from(det.thresholds);
            if (!(t.count_low <= t.count_high)) throw Error("count band must be ordered");
            csv = "label\n";
            for (const auto& r : records) {
                const Label label = rule_detect(r, t);
                predicted.push_back(label);
                csv += std::string(label_name(label)) + "\n";
            }
        } else {
            const LinearModel model = load_model(det.model);
            csv = "label,score\n";
            for (const auto& r : records) {
                const auto [label, score] = svm_predict(model, r);
                predicted.push_back(label);
                csv += std::string(label_name(label)) + "," + format_number(score) + "\n";
            }
        }
        const double share = attack_percentage(predicted);
        std::string share_text;
        if (det.format == "json") {
            nlohmann::json j;
            j["attack_percentage"] = share;
            j["total"] = predicted.size();
            share_text = j.dump() + "\n";
        } else {
            share_text = "attack_percentage " + format_number(share) + "\n";
        }
        if (det.output.empty()) {
            std::cout << csv;
            std::cerr << share_text;
        } else {
            emit(csv, det.output);
            std::cout << share_text;
        }
    });

    // ---- evaluate ---------------------------------------------------------
    struct {
        std::string input, model, truth, predictions, output, format = "json";
        int k = 0;
        double c = 1.0, lr = 0.1;
        int epochs = 50;
        uint64_t seed = 42;
        bool per_fold = false;
    } evl;
    auto* cmd_evaluate = app.add_subcommand(
        "evaluate",
        "Score predictions against truth, a model against labeled records, or run "
        "k-fold cross-validation");
    cmd_evaluate->add_option("--input,-i", evl.input, "Labeled records (for --model or --k)");
    cmd_evaluate->add_option("--model,-m", evl.model, "Model JSON to evaluate on --input");
    cmd_evaluate->add_option("--truth", evl.truth, "Truth labels (records CSV or label list)");
    cmd_evaluate->add_option("--predictions", evl.predictions, "Predictions (label[,score])");
    cmd_evaluate->add_option("--k", evl.k, "Cross-validation folds on --input");
    cmd_evaluate->add_option("--c", evl.c, "Soft-margin penalty (default 1.0)");
    cmd_evaluate->add_option("--epochs", evl.epochs, "Training epochs (default 50)");
    cmd_evaluate->add_option("--lr", evl.lr, "Initial learning rate (default 0.1)");
    cmd_evaluate->add_option("--seed", evl.seed, "Shuffle seed (default 42)");
    cmd_evaluate->add_flag("--per-fold", evl.per_fold, "Also report every fold");
    cmd_evaluate->add_option("--output,-o", evl.output, "Report path (default: standard output)");
    cmd_evaluate->add_option("--format", evl.format, "json or table (default json)")
        ->check(CLI::IsMember({"json", "table"}));
    cmd_evaluate->callback([&] {
        const bool file_mode = !evl.truth.empty() || !evl.predictions.empty();
        const bool model_mode = !evl.model.empty();
        const bool cv_mode = evl.k != 0;
        if (file_mode + model_mode + cv_mode != 1) {
            throw Error("give exactly one of --truth/--predictions, --model, or --k");
        }

        std::string text;
        if (file_mode) {
            if (evl.truth.empty() || evl.predictions.empty()) {
                throw Error("--truth and --predictions go together");
            }
            const LabelFile truth = read_label_file(evl.truth);
            const LabelFile pred = read_label_file(evl.predictions);
            const ConfusionCounts counts = confusion(truth.labels, pred.labels);
            std::optional<std::vector<ScoredLabel>> scored;
            if (pred.scores.size() == truth.labels.size()) {
                scored.emplace();
                for (size_t i = 0; i < truth.labels.size(); ++i) {
                    scored->push_back({truth.labels[i], pred.scores[i]});
                }
            }
            const EvalReport report =
                scored ? metrics(counts, std::span<const ScoredLabel>(*scored)) : metrics(counts);
            text = evl.format == "json" ? to_json_string(report, 2) + "\n" : to_table(report);
        } else if (model_mode) {
            if (evl.input.empty()) throw Error("--model needs --input");
            const auto records = binary_labeled(read_records_auto(evl.input));
            if (records.empty()) throw EmptyInput(evl.input + ": no usable records");
            const LinearModel model = load_model(evl.model);
            std::vector<Label> truth, pred;
            std::vector<ScoredLabel> scored;
            for (const auto& r : records) {
                const auto [label, score] = svm_predict(model, r);
                truth.push_back(*r.label);
                pred.push_back(label);
                scored.push_back({*r.label, score});
            }
            const EvalReport report = metrics(confusion(truth, pred), scored);
            text = evl.format == "json" ? to_json_string(report, 2) + "\n" : to_table(report);
        } else {
            if (evl.input.empty()) throw Error("--k needs --input");
            const auto records = binary_labeled(read_records_auto(evl.input));
            Hyperparams params;
            params.regularization_c = evl.c;
            params.epochs = evl.epochs;
            params.learning_rate = evl.lr;
            params.seed = evl.seed;
            const CrossValidation cv = cross_validate(records, evl.k, params);
            if (evl.format == "json") {
                nlohmann::json j;
                j["aggregate"] = report_json(cv.aggregate);
                if (evl.per_fold) {
                    auto folds = nlohmann::json::array();
                    for (const auto& fold : cv.folds) folds.push_back(report_json(fold));
                    j["folds"] = folds;
                }
                text = j.dump(2) + "\n";
            } else {
                if (evl.per_fold) {
                    for (size_t f = 0; f < cv.folds.size(); ++f) {
                        text += "fold " + std::to_string(f + 1) + "\n" + to_table(cv.folds[f]) +
                                "\n";
                    }
                }
                text += "aggregate\n" + to_table(cv.aggregate);
            }
        }
        emit(text, evl.output);
    });

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e);
    } catch (const DegenerateData& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    return 0;
}
