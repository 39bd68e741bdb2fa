#include "smurfids/normalizer.hpp"

#include <charconv>

#include "json.hpp"

namespace smurfids {

namespace {

uint32_t ones_add(uint32_t sum, uint16_t word) {
    sum += word;
    if (sum > 0xFFFF) sum = (sum & 0xFFFF) + 1;
    return sum;
}

// One's-complement sum of the header as it would serialize, without
// materializing the bytes. Returns the folded 16-bit sum; a header with a
// correct stored checksum folds to 0xFFFF.
uint32_t header_sum(const IpDatagram& d, bool include_stored_checksum) {
    uint32_t sum = 0;
    sum = ones_add(sum, static_cast<uint16_t>(((d.version << 4) | (d.header_length & 0x0F)) << 8 |
                                              d.tos));
    sum = ones_add(sum, d.total_length);
    sum = ones_add(sum, d.identification);
    uint16_t flags_frag = d.fragment_offset & 0x1FFF;
    if (d.df_flag) flags_frag |= 0x4000;
    if (d.mf_flag) flags_frag |= 0x2000;
    sum = ones_add(sum, flags_frag);
    sum = ones_add(sum, static_cast<uint16_t>((d.ttl << 8) | d.protocol));
    if (include_stored_checksum) sum = ones_add(sum, d.header_checksum);
    sum = ones_add(sum, static_cast<uint16_t>(d.src_addr >> 16));
    sum = ones_add(sum, static_cast<uint16_t>(d.src_addr & 0xFFFF));
    sum = ones_add(sum, static_cast<uint16_t>(d.dst_addr >> 16));
    sum = ones_add(sum, static_cast<uint16_t>(d.dst_addr & 0xFFFF));
    for (size_t i = 0; i + 1 < d.options.size(); i += 2) {
        sum = ones_add(sum, static_cast<uint16_t>((d.options[i] << 8) | d.options[i + 1]));
    }
    if (d.options.size() % 2 != 0) {
        sum = ones_add(sum, static_cast<uint16_t>(d.options.back() << 8));
    }
    return sum;
}

bool ip_checksum_valid(const IpDatagram& d) { return header_sum(d, true) == 0xFFFF; }

uint16_t compute_ip_checksum(const IpDatagram& d) {
    return static_cast<uint16_t>(~header_sum(d, false) & 0xFFFF);
}

bool is_broadcast_dst(uint32_t dst, const NormalizerConfig& config) {
    if (dst == 0xFFFFFFFF) return true;
    for (const auto& s : config.local_subnets) {
        if (dst == s.broadcast_addr()) return true;
    }
    return false;
}

NormalizeResult dropped(std::vector<Reason> reasons, bool alerted = false) {
    return {Verdict{Action::Dropped, alerted, std::move(reasons)}, std::nullopt};
}

}  // namespace

std::string_view reason_name(Reason r) {
    switch (r) {
        case Reason::BadIpChecksum: return "BAD_IP_CHECKSUM";
        case Reason::BadHeaderLength: return "BAD_HEADER_LENGTH";
        case Reason::DeclaredLenExceedsActual: return "DECLARED_LEN_EXCEEDS_ACTUAL";
        case Reason::OverlongTrimmed: return "OVERLONG_TRIMMED";
        case Reason::TtlRaised: return "TTL_RAISED";
        case Reason::DfCleared: return "DF_CLEARED";
        case Reason::MfInvalid: return "MF_INVALID";
        case Reason::BroadcastEcho: return "BROADCAST_ECHO";
        case Reason::BadIcmpChecksum: return "BAD_ICMP_CHECKSUM";
        case Reason::MalformedIcmp: return "MALFORMED_ICMP";
        case Reason::BadTcpChecksum: return "BAD_TCP_CHECKSUM";
        case Reason::TcpReservedCleared: return "TCP_RESERVED_CLEARED";
        case Reason::MalformedTcp: return "MALFORMED_TCP";
    }
    return "UNKNOWN";
}

uint32_t Subnet::mask() const {
    if (prefix_len <= 0) return 0;
    if (prefix_len >= 32) return 0xFFFFFFFF;
    return 0xFFFFFFFFu << (32 - prefix_len);
}

bool Subnet::contains(uint32_t a) const { return (a & mask()) == (addr & mask()); }

uint32_t Subnet::broadcast_addr() const { return (addr & mask()) | ~mask(); }

Subnet parse_subnet(std::string_view text) {
    const auto slash = text.find('/');
    if (slash == std::string_view::npos) throw Error("subnet must be a.b.c.d/len");
    Subnet s;
    s.addr = parse_addr(text.substr(0, slash));
    const auto len_text = text.substr(slash + 1);
    int len = -1;
    auto [ptr, ec] = std::from_chars(len_text.data(), len_text.data() + len_text.size(), len);
    if (ec != std::errc() || ptr != len_text.data() + len_text.size() || len < 0 || len > 32) {
        throw Error("subnet prefix length must be 0..32");
    }
    s.prefix_len = len;
    return s;
}

void NormalizationLog::record(const Verdict& v) {
    ++total;
    switch (v.action) {
        case Action::Pass: ++passed; break;
        case Action::Modified: ++modified; break;
        case Action::Dropped: ++dropped; break;
    }
    if (v.alerted) ++alerted;
    for (const Reason r : v.reasons) {
        ++per_reason[std::string(reason_name(r))];
    }
}

std::string to_json_string(const NormalizationLog& log, int indent) {
    nlohmann::json j;
    j["total"] = log.total;
    j["passed"] = log.passed;
    j["modified"] = log.modified;
    j["dropped"] = log.dropped;
    j["alerted"] = log.alerted;
    j["inserted"] = log.inserted;
    j["per_reason"] = log.per_reason;
    return j.dump(indent);
}

NormalizeResult normalize_ip(const IpDatagram& dgram, const NormalizerConfig& config) {
    // rule 1: checksum
    if (config.verify_ip_checksum && !ip_checksum_valid(dgram)) {
        return dropped({Reason::BadIpChecksum});
    }
    // rule 2: header length sane and consistent with both length fields; a
    // declared total shorter than the header itself can satisfy neither the
    // trim nor the discard rule, so it drops here too
    if (dgram.header_length < 5 || dgram.header_length > 15 ||
        dgram.header_bytes() > dgram.actual_length ||
        dgram.total_length < dgram.header_bytes()) {
        return dropped({Reason::BadHeaderLength});
    }
    // rule 3: declared longer than observed
    if (dgram.total_length > dgram.actual_length) {
        return dropped({Reason::DeclaredLenExceedsActual});
    }

    Verdict verdict;
    IpDatagram out = dgram;
    // rule 4: observed longer than declared -> trim to the declared length
    if (config.trim_overlong && out.actual_length > out.total_length) {
        out.payload.resize(out.total_length - out.header_bytes());
        out.actual_length = out.total_length;
        verdict.reasons.push_back(Reason::OverlongTrimmed);
    }
    // rule 5: ttl floor
    if (out.ttl < config.ttl_floor) {
        out.ttl = config.ttl_floor;
        verdict.reasons.push_back(Reason::TtlRaised);
    }
    // rule 6: DF
    if (config.clear_df && out.df_flag) {
        out.df_flag = false;
        verdict.reasons.push_back(Reason::DfCleared);
    }
    // rule 7: MF with nothing to fragment
    if (out.mf_flag && out.total_length == out.header_bytes()) {
        return dropped({Reason::MfInvalid});
    }
    // rule 8: modified packets leave with a fresh checksum
    if (!verdict.reasons.empty()) {
        verdict.action = Action::Modified;
        out.header_checksum = compute_ip_checksum(out);
    }
    return {std::move(verdict), std::move(out)};
}

NormalizeResult normalize_icmp(const IpDatagram& dgram, const NormalizerConfig& config) {
    if (dgram.payload.size() < kIcmpHeaderBytes) {
        return dropped({Reason::MalformedIcmp});
    }
    if (config.verify_icmp_checksum && internet_checksum(dgram.payload) != 0) {
        return dropped({Reason::BadIcmpChecksum});
    }
    if (config.drop_broadcast_echo && dgram.payload[0] == kIcmpEchoRequest &&
        is_broadcast_dst(dgram.dst_addr, config)) {
        return dropped({Reason::BroadcastEcho}, /*alerted=*/true);
    }
    return {Verdict{}, dgram};
}

NormalizeResult normalize_tcp(const IpDatagram& dgram, const NormalizerConfig& config) {
    (void)config;
    const auto& seg = dgram.payload;
    if (seg.size() < kTcpHeaderBytes) {
        return dropped({Reason::MalformedTcp});
    }
    const uint8_t data_offset = seg[12] >> 4;
    if (data_offset < 5 || static_cast<size_t>(data_offset) * 4 > seg.size()) {
        return dropped({Reason::MalformedTcp});
    }
    const uint16_t stored = static_cast<uint16_t>((seg[16] << 8) | seg[17]);
    if (tcp_checksum(dgram.src_addr, dgram.dst_addr, seg) != stored) {
        return dropped({Reason::BadTcpChecksum});
    }
    if ((seg[12] & 0x0F) != 0) {
        IpDatagram out = dgram;
        out.payload[12] &= 0xF0;
        const uint16_t fresh = tcp_checksum(out.src_addr, out.dst_addr, out.payload);
        out.payload[16] = static_cast<uint8_t>(fresh >> 8);
        out.payload[17] = static_cast<uint8_t>(fresh & 0xFF);
        return {Verdict{Action::Modified, /*alerted=*/true, {Reason::TcpReservedCleared}},
                std::move(out)};
    }
    return {Verdict{}, dgram};
}

NormalizeResult normalize_packet(const IpDatagram& dgram, const NormalizerConfig& config) {
    auto [verdict, out] = normalize_ip(dgram, config);
    if (verdict.action == Action::Dropped) {
        return {std::move(verdict), std::nullopt};
    }
    // Fragments carry a slice of the transport message, not a header, and the
    // transport checksum spans the whole message; only unfragmented datagrams
    // get transport-level treatment.
    if (out->mf_flag || out->fragment_offset != 0) {
        return {std::move(verdict), std::move(out)};
    }
    NormalizeResult proto_result{Verdict{}, std::nullopt};
    if (out->protocol == kProtoIcmp) {
        proto_result = normalize_icmp(*out, config);
    } else if (out->protocol == kProtoTcp) {
        proto_result = normalize_tcp(*out, config);
    } else {
        return {std::move(verdict), std::move(out)};
    }

    auto& [proto_verdict, proto_out] = proto_result;
    verdict.alerted = verdict.alerted || proto_verdict.alerted;
    verdict.reasons.insert(verdict.reasons.end(), proto_verdict.reasons.begin(),
                           proto_verdict.reasons.end());
    if (proto_verdict.action == Action::Dropped) {
        verdict.action = Action::Dropped;
        return {std::move(verdict), std::nullopt};
    }
    if (proto_verdict.action == Action::Modified) {
        verdict.action = Action::Modified;
    }
    return {std::move(verdict), std::move(proto_out)};
}

std::pair<std::vector<TimedDatagram>, NormalizationLog> normalize_stream(
    std::span<const TimedDatagram> packets, const NormalizerConfig& config) {
    std::vector<TimedDatagram> out;
    out.reserve(packets.size());
    NormalizationLog log;
    for (const auto& p : packets) {
        auto [verdict, dgram] = normalize_packet(p.dgram, config);
        log.record(verdict);
        if (dgram.has_value()) {
            out.push_back(TimedDatagram{p.ts, std::move(*dgram)});
        }
    }
    return {std::move(out), std::move(log)};
}

}  // namespace smurfids
