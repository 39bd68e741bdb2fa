#include "smurfids/features.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <map>
#include <sstream>

#include "smurfids/packet.hpp"

namespace smurfids {

namespace {

// 0-based positions of the selected features in the 42-field KDD line
constexpr size_t kKddFields = 42;
constexpr size_t kKddProtocol = 1;
constexpr size_t kKddSrcBytes = 4;
constexpr size_t kKddHot = 9;
constexpr size_t kKddCount = 22;
constexpr size_t kKddSrvCount = 23;
constexpr size_t kKddRerrorRate = 26;
constexpr size_t kKddDstHostCount = 31;
constexpr size_t kKddLabel = 41;

std::vector<std::string_view> split_fields(std::string_view line) {
    std::vector<std::string_view> fields;
    size_t start = 0;
    for (size_t i = 0; i <= line.size(); ++i) {
        if (i == line.size() || line[i] == ',') {
            fields.push_back(line.substr(start, i - start));
            start = i + 1;
        }
    }
    return fields;
}

double parse_numeric(std::string_view text, std::string_view what) {
    double value = 0;
    auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
    if (ec != std::errc() || ptr != text.data() + text.size()) {
        throw BadRecord("non-numeric " + std::string(what) + " field: '" + std::string(text) + "'");
    }
    return value;
}

Proto parse_proto(std::string_view text) {
    if (text == "icmp") return Proto::icmp;
    if (text == "tcp") return Proto::tcp;
    if (text == "udp") return Proto::udp;
    throw BadRecord("unknown protocol: '" + std::string(text) + "'");
}

std::string format_double(double v) {
    char buf[32];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, ptr);
}

std::string_view strip_cr(std::string_view line) {
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    return line;
}

}  // namespace

std::string_view proto_name(Proto p) {
    switch (p) {
        case Proto::icmp: return "icmp";
        case Proto::tcp: return "tcp";
        case Proto::udp: return "udp";
    }
    return "?";
}

std::string_view label_name(Label l) {
    switch (l) {
        case Label::normal: return "normal";
        case Label::smurf: return "smurf";
        case Label::other: return "other";
    }
    return "?";
}

Label parse_label(std::string_view text) {
    if (!text.empty() && text.back() == '.') text.remove_suffix(1);
    if (text == "smurf") return Label::smurf;
    if (text == "normal") return Label::normal;
    return Label::other;
}

ConnectionRecord parse_kdd_line(std::string_view line) {
    const auto fields = split_fields(strip_cr(line));
    if (fields.size() != kKddFields) {
        throw BadRecord("KDD line has " + std::to_string(fields.size()) + " fields, expected 42");
    }
    ConnectionRecord r;
    r.protocol = parse_proto(fields[kKddProtocol]);
    r.src_bytes = parse_numeric(fields[kKddSrcBytes], "src_bytes");
    r.hot = parse_numeric(fields[kKddHot], "hot");
    r.count = parse_numeric(fields[kKddCount], "count");
    r.srv_count = parse_numeric(fields[kKddSrvCount], "srv_count");
    r.rerror_rate = parse_numeric(fields[kKddRerrorRate], "rerror_rate");
    r.dst_host_count = parse_numeric(fields[kKddDstHostCount], "dst_host_count");
    r.label = parse_label(fields[kKddLabel]);
    return r;
}

namespace {

struct ConnState {
    double start = 0;
    Proto proto = Proto::icmp;
    uint32_t dst_addr = 0;
    uint64_t service = 0;
    uint32_t initiator = 0;
    uint16_t initiator_port = 0;
    double src_bytes = 0;
    bool saw_syn = false;
    bool saw_responder_rst = false;

    bool rejected() const { return saw_syn && saw_responder_rst; }
};

using ConnKey = std::array<uint64_t, 3>;

uint64_t endpoint(uint32_t addr, uint16_t port) {
    return (static_cast<uint64_t>(addr) << 16) | port;
}

}  // namespace

std::vector<ConnectionRecord> extract_connections(std::span<const TimedDatagram> packets,
                                                  const DatasetConfig& config) {
    std::vector<ConnState> conns;
    std::map<ConnKey, size_t> by_key;

    for (const auto& tp : packets) {
        const IpDatagram& d = tp.dgram;
        const double ts = tp.ts.seconds();

        ConnKey key{};
        uint16_t src_port = 0, dst_port = 0;
        Proto proto;
        if (d.protocol == kProtoIcmp) {
            if (d.payload.size() < kIcmpHeaderBytes) continue;
            proto = Proto::icmp;
            const uint16_t type_code = static_cast<uint16_t>((d.payload[0] << 8) | d.payload[1]);
            const uint16_t ident = static_cast<uint16_t>((d.payload[4] << 8) | d.payload[5]);
            key = {d.protocol, (static_cast<uint64_t>(d.src_addr) << 32) | d.dst_addr,
                   (static_cast<uint64_t>(type_code) << 16) | ident};
        } else if (d.protocol == kProtoTcp || d.protocol == kProtoUdp) {
            const size_t min_len = d.protocol == kProtoTcp ? kTcpHeaderBytes : 8;
            if (d.payload.size() < min_len) continue;
            proto = d.protocol == kProtoTcp ? Proto::tcp : Proto::udp;
            src_port = static_cast<uint16_t>((d.payload[0] << 8) | d.payload[1]);
            dst_port = static_cast<uint16_t>((d.payload[2] << 8) | d.payload[3]);
            const uint64_t a = endpoint(d.src_addr, src_port);
            const uint64_t b = endpoint(d.dst_addr, dst_port);
            key = {d.protocol, std::min(a, b), std::max(a, b)};
        } else {
            continue;
        }

        auto [it, inserted] = by_key.try_emplace(key, conns.size());
        if (inserted) {
            ConnState c;
            c.start = ts;
            c.proto = proto;
            c.dst_addr = d.dst_addr;
            c.initiator = d.src_addr;
            c.initiator_port = src_port;
            if (d.protocol == kProtoIcmp) {
                c.service = (static_cast<uint64_t>(d.protocol) << 32) | d.payload[0];
            } else {
                c.service = (static_cast<uint64_t>(d.protocol) << 32) | dst_port;
            }
            conns.push_back(c);
        }
        ConnState& c = conns[it->second];

        const bool from_initiator =
            d.src_addr == c.initiator && (d.protocol == kProtoIcmp || src_port == c.initiator_port);
        if (from_initiator) c.src_bytes += static_cast<double>(d.payload.size());
        if (d.protocol == kProtoTcp) {
            const uint8_t flags = d.payload[13];
            if (from_initiator && (flags & kTcpSyn) && !(flags & kTcpAck)) c.saw_syn = true;
            if (!from_initiator && (flags & kTcpRst)) c.saw_responder_rst = true;
        }
    }

    // timelines grouped by destination host, by service, and globally; the
    // group vectors stay sorted because conns is in start order
    std::map<uint32_t, std::vector<size_t>> by_dst;
    std::map<uint64_t, std::vector<size_t>> by_service;
    for (size_t i = 0; i < conns.size(); ++i) {
        by_dst[conns[i].dst_addr].push_back(i);
        by_service[conns[i].service].push_back(i);
    }

    std::vector<ConnectionRecord> records(conns.size());
    for (size_t i = 0; i < conns.size(); ++i) {
        const ConnState& c = conns[i];
        const double lo = c.start - config.window_seconds;

        const auto& dst_group = by_dst[c.dst_addr];
        auto in_window = [&](const std::vector<size_t>& group) {
            auto first = std::lower_bound(group.begin(), group.end(), lo,
                                          [&](size_t j, double t) { return conns[j].start < t; });
            auto last = std::upper_bound(group.begin(), group.end(), c.start,
                                         [&](double t, size_t j) { return t < conns[j].start; });
            return std::pair(first, last);
        };

        auto [dst_first, dst_last] = in_window(dst_group);
        const auto window_count = static_cast<double>(dst_last - dst_first);
        double rejected = 0;
        for (auto it = dst_first; it != dst_last; ++it) {
            if (conns[*it].rejected()) rejected += 1.0;
        }

        auto [srv_first, srv_last] = in_window(by_service[c.service]);

        // trailing host_window connections, this one included
        const size_t win_lo = i + 1 >= static_cast<size_t>(config.host_window)
                                  ? i + 1 - static_cast<size_t>(config.host_window)
                                  : 0;
        auto host_first = std::lower_bound(dst_group.begin(), dst_group.end(), win_lo);
        auto host_last = std::upper_bound(dst_group.begin(), dst_group.end(), i);

        ConnectionRecord& r = records[i];
        r.protocol = c.proto;
        r.src_bytes = c.src_bytes;
        r.hot = 0;
        r.count = window_count;
        r.rerror_rate = window_count > 0 ? rejected / window_count : 0.0;
        r.srv_count = static_cast<double>(srv_last - srv_first);
        r.dst_host_count = static_cast<double>(host_last - host_first);
    }
    return records;
}

std::array<double, kFeatureCount> vectorize(const ConnectionRecord& r, const FeatureNames& names) {
    std::array<double, kFeatureCount> v{};
    for (size_t i = 0; i < names.size(); ++i) {
        const std::string& name = names[i];
        if (name == "hot") v[i] = r.hot;
        else if (name == "count") v[i] = r.count;
        else if (name == "rerror_rate") v[i] = r.rerror_rate;
        else if (name == "srv_count") v[i] = r.srv_count;
        else if (name == "src_bytes") v[i] = r.src_bytes;
        else if (name == "dst_host_count") v[i] = r.dst_host_count;
        else if (name == "protocol") v[i] = static_cast<double>(static_cast<int>(r.protocol));
        else throw Error("unknown feature name: " + name);
    }
    return v;
}

std::array<double, kFeatureCount> vectorize(const ConnectionRecord& r, const DatasetConfig& config) {
    return vectorize(r, config.feature_names);
}

void write_records_csv(const std::filesystem::path& path,
                       std::span<const ConnectionRecord> records, const DatasetConfig& config) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw IoFailure("cannot open for writing: " + path.string());
    for (const auto& name : config.feature_names) out << name << ',';
    out << "label\n";
    for (const auto& r : records) {
        const auto v = vectorize(r, config);
        for (size_t i = 0; i < v.size(); ++i) {
            if (config.feature_names[i] == "protocol") {
                out << proto_name(r.protocol);
            } else {
                out << format_double(v[i]);
            }
            out << ',';
        }
        out << (r.label ? label_name(*r.label) : "-") << '\n';
    }
    if (!out) throw IoFailure("write failed: " + path.string());
}

namespace {

ConnectionRecord record_from_csv_fields(const std::vector<std::string_view>& fields,
                                        const std::vector<std::string>& header) {
    ConnectionRecord r;
    for (size_t i = 0; i + 1 < header.size(); ++i) {
        const std::string& name = header[i];
        if (name == "protocol") r.protocol = parse_proto(fields[i]);
        else if (name == "hot") r.hot = parse_numeric(fields[i], name);
        else if (name == "count") r.count = parse_numeric(fields[i], name);
        else if (name == "rerror_rate") r.rerror_rate = parse_numeric(fields[i], name);
        else if (name == "srv_count") r.srv_count = parse_numeric(fields[i], name);
        else if (name == "src_bytes") r.src_bytes = parse_numeric(fields[i], name);
        else if (name == "dst_host_count") r.dst_host_count = parse_numeric(fields[i], name);
        else throw BadRecord("unknown column: " + name);
    }
    const auto label_text = fields.back();
    r.label = label_text == "-" || label_text.empty()
                  ? std::nullopt
                  : std::optional<Label>(parse_label(label_text));
    return r;
}

}  // namespace

std::vector<ConnectionRecord> read_records_csv(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoFailure("cannot open: " + path.string());

    std::string line;
    std::vector<std::string> header;
    std::vector<ConnectionRecord> records;
    while (std::getline(in, line)) {
        const auto text = strip_cr(line);
        if (text.empty()) continue;
        const auto fields = split_fields(text);
        if (header.empty()) {
            if (fields.size() != kFeatureCount + 1 || fields.back() != "label") {
                throw BadRecord("records CSV must start with a 7-feature + label header row");
            }
            for (const auto f : fields) header.emplace_back(f);
            continue;
        }
        if (fields.size() != header.size()) {
            throw BadRecord("row has " + std::to_string(fields.size()) + " fields, expected " +
                            std::to_string(header.size()));
        }
        records.push_back(record_from_csv_fields(fields, header));
    }
    return records;
}

std::vector<ConnectionRecord> read_records_auto(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoFailure("cannot open: " + path.string());
    std::string first;
    do {
        if (!std::getline(in, first)) throw BadRecord("empty records file: " + path.string());
    } while (strip_cr(first).empty());

    const size_t fields = split_fields(strip_cr(first)).size();
    if (fields == kKddFields) {
        std::vector<ConnectionRecord> records;
        records.push_back(parse_kdd_line(first));
        std::string line;
        while (std::getline(in, line)) {
            if (strip_cr(line).empty()) continue;
            records.push_back(parse_kdd_line(line));
        }
        return records;
    }
    if (fields == kFeatureCount + 1) {
        return read_records_csv(path);
    }
    throw BadRecord("unrecognized records format (" + std::to_string(fields) +
                    " fields in the first row)");
}

}  // namespace smurfids
