#pragma once

#include <array>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "smurfids/errors.hpp"
#include "smurfids/normalizer.hpp"

namespace smurfids {

enum class Proto { icmp, tcp, udp };
enum class Label { normal, smurf, other };

std::string_view proto_name(Proto p);
std::string_view label_name(Label l);
Label parse_label(std::string_view text);  // "smurf." -> smurf, "normal." -> normal, else other

constexpr size_t kFeatureCount = 7;

// One connection's feature vector. Window semantics:
//   count        connections to the same destination host whose start lies in
//                the trailing window_seconds, the connection itself included
//   rerror_rate  fraction of those that ended REJ (TCP RST answering a SYN)
//   srv_count    same-service connections in the same time window
//   dst_host_count  same-destination connections among the trailing
//                host_window connections, the connection itself included
struct ConnectionRecord {
    Proto protocol = Proto::icmp;
    double src_bytes = 0;
    double hot = 0;
    double count = 1;
    double rerror_rate = 0;
    double srv_count = 1;
    double dst_host_count = 1;
    std::optional<Label> label;
};

using FeatureNames = std::array<std::string, kFeatureCount>;

inline const FeatureNames kDefaultFeatureNames = {
    "hot", "count", "rerror_rate", "srv_count", "src_bytes", "dst_host_count", "protocol"};

struct DatasetConfig {
    double window_seconds = 2.0;
    int host_window = 100;
    FeatureNames feature_names = kDefaultFeatureNames;
};

// One KDDCUP 99 line: 41 comma-separated features plus the trailing-dot
// label. Picks out the seven features above by their standard positions.
// Throws BadRecord on a wrong field count or a non-numeric numeric field.
ConnectionRecord parse_kdd_line(std::string_view line);

// Groups a time-ordered packet stream into connections, keyed by
// (protocol, endpoints) for TCP/UDP and (src, dst, type, id) for ICMP, and
// computes the window features over the connection timeline. hot stays 0:
// raw headers carry no content-level indicators.
std::vector<ConnectionRecord> extract_connections(std::span<const TimedDatagram> packets,
                                                  const DatasetConfig& config);

// Fixed-order numeric form; protocol encoded icmp=0, tcp=1, udp=2.
std::array<double, kFeatureCount> vectorize(const ConnectionRecord& record,
                                            const FeatureNames& names);
std::array<double, kFeatureCount> vectorize(const ConnectionRecord& record,
                                            const DatasetConfig& config);

// Records CSV: a header row naming the 7 features plus "label", then one
// row per record. Absent labels round-trip as "-".
void write_records_csv(const std::filesystem::path& path, std::span<const ConnectionRecord> records,
                       const DatasetConfig& config = {});
std::vector<ConnectionRecord> read_records_csv(const std::filesystem::path& path);

// Accepts either format: 42-field KDD lines or the 8-column records CSV.
std::vector<ConnectionRecord> read_records_auto(const std::filesystem::path& path);

}  // namespace smurfids
