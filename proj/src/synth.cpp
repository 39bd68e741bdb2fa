#include "smurfids/synth.hpp"

#include <algorithm>
#include <cmath>

#include "smurfids/packet.hpp"
#include "smurfids/pcap.hpp"
#include "smurfids/rng.hpp"

namespace smurfids {

namespace {

ConnectionRecord smurf_record(Rng& rng, const SynthConfig& cfg) {
    ConnectionRecord r;
    r.protocol = Proto::icmp;
    r.src_bytes = 1032;  // 1024-byte echo payload plus the 8-byte ICMP header
    r.hot = 0;
    r.count = rng.uniform(cfg.smurf_count_low, cfg.smurf_count_high);
    r.rerror_rate = 0;
    r.srv_count = r.count * rng.uniform(0.8, 1.0);
    r.dst_host_count = rng.uniform(90.0, 100.0);
    r.label = Label::smurf;
    return r;
}

ConnectionRecord normal_record(Rng& rng, const SynthConfig& cfg) {
    ConnectionRecord r;
    const double pick = rng.uniform();
    r.protocol = pick < 0.7 ? Proto::tcp : (pick < 0.9 ? Proto::udp : Proto::icmp);
    r.src_bytes = std::min(1.0e6, std::exp(rng.normal(5.5, 1.0)));
    r.hot = static_cast<double>(rng.poisson(0.1));
    // clamped below the rule band's lower edge so the classes never overlap
    const double band_low = cfg.smurf_count_low;
    r.count = std::clamp(rng.normal(cfg.normal_count_mean, 2.0), 0.0, band_low - 1.0);
    r.rerror_rate = rng.uniform(0.0, 0.5);
    r.srv_count = rng.uniform(0.0, std::max(r.count, 1.0) + 2.0);
    r.dst_host_count = rng.uniform(1.0, 30.0);
    r.label = Label::normal;
    return r;
}

std::vector<uint8_t> echo_message(uint8_t icmp_type, uint16_t ident, uint16_t seq,
                                  size_t data_bytes) {
    std::vector<uint8_t> msg(kIcmpHeaderBytes + data_bytes, 0);
    msg[0] = icmp_type;
    msg[4] = static_cast<uint8_t>(ident >> 8);
    msg[5] = static_cast<uint8_t>(ident & 0xFF);
    msg[6] = static_cast<uint8_t>(seq >> 8);
    msg[7] = static_cast<uint8_t>(seq & 0xFF);
    for (size_t j = 0; j < data_bytes; ++j) {
        msg[kIcmpHeaderBytes + j] = static_cast<uint8_t>(j & 0xFF);
    }
    const uint16_t sum = icmp_checksum(msg);
    msg[2] = static_cast<uint8_t>(sum >> 8);
    msg[3] = static_cast<uint8_t>(sum & 0xFF);
    return msg;
}

IpDatagram make_datagram(uint32_t src, uint32_t dst, uint8_t ttl, uint16_t ident,
                         std::vector<uint8_t> payload) {
    IpDatagram d;
    d.total_length = static_cast<uint16_t>(20 + payload.size());
    d.actual_length = d.total_length;
    d.identification = ident;
    d.ttl = ttl;
    d.protocol = kProtoIcmp;
    d.src_addr = src;
    d.dst_addr = dst;
    d.payload = std::move(payload);
    return d;
}

uint32_t random_host(Rng& rng, const Subnet& subnet) {
    const uint32_t host_bits = 32 - subnet.prefix_len;
    const uint32_t last_host = (1u << host_bits) - 2;  // network and broadcast excluded
    return (subnet.addr & subnet.mask()) + 1 + static_cast<uint32_t>(rng.below(last_host));
}

}  // namespace

std::vector<ConnectionRecord> gen_records(const SynthConfig& config) {
    Rng rng(config.seed);
    std::vector<ConnectionRecord> records;
    records.reserve(config.n_smurf + config.n_normal);
    for (size_t i = 0; i < config.n_smurf; ++i) records.push_back(smurf_record(rng, config));
    for (size_t i = 0; i < config.n_normal; ++i) records.push_back(normal_record(rng, config));
    return records;
}

void gen_smurf_pcap(const std::filesystem::path& path, const SynthConfig& config) {
    Rng rng(config.seed);
    std::vector<int> kinds(config.n_smurf, 1);
    kinds.resize(config.n_smurf + config.n_normal, 0);
    rng.shuffle(kinds);

    const uint32_t broadcast = config.amplifier_subnet.broadcast_addr();
    std::vector<CapturedPacket> packets;
    packets.reserve(kinds.size());
    for (size_t i = 0; i < kinds.size(); ++i) {
        const auto ident = static_cast<uint16_t>(i & 0xFFFF);
        IpDatagram d;
        if (kinds[i] == 1) {
            // spoofed victim source aimed at the directed broadcast address
            d = make_datagram(config.victim_addr, broadcast, 255, ident,
                              echo_message(kIcmpEchoRequest, ident, ident, 1024));
        } else {
            const uint32_t host = random_host(rng, config.amplifier_subnet);
            const bool request = rng.uniform() < 0.5;
            d = make_datagram(request ? host : config.victim_addr,
                              request ? config.victim_addr : host, 64, ident,
                              echo_message(request ? kIcmpEchoRequest : kIcmpEchoReply, ident,
                                           ident, 56));
        }
        CapturedPacket pkt;
        pkt.ts = Timestamp::from_seconds(static_cast<double>(i) / config.packet_rate);
        pkt.bytes = serialize(d, true);
        packets.push_back(std::move(pkt));
    }
    write_capture(path, packets);
}

}  // namespace smurfids
