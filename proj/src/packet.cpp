#include "smurfids/packet.hpp"

#include <charconv>

namespace smurfids {

namespace {

uint16_t read_u16(std::span<const uint8_t> b, size_t off) {
    return static_cast<uint16_t>((b[off] << 8) | b[off + 1]);
}

uint32_t read_u32(std::span<const uint8_t> b, size_t off) {
    return (static_cast<uint32_t>(b[off]) << 24) | (static_cast<uint32_t>(b[off + 1]) << 16) |
           (static_cast<uint32_t>(b[off + 2]) << 8) | static_cast<uint32_t>(b[off + 3]);
}

void write_u16(std::vector<uint8_t>& b, size_t off, uint16_t v) {
    b[off] = static_cast<uint8_t>(v >> 8);
    b[off + 1] = static_cast<uint8_t>(v & 0xFF);
}

void write_u32(std::vector<uint8_t>& b, size_t off, uint32_t v) {
    b[off] = static_cast<uint8_t>(v >> 24);
    b[off + 1] = static_cast<uint8_t>((v >> 16) & 0xFF);
    b[off + 2] = static_cast<uint8_t>((v >> 8) & 0xFF);
    b[off + 3] = static_cast<uint8_t>(v & 0xFF);
}

}  // namespace

uint16_t internet_checksum(std::span<const uint8_t> bytes) {
    uint32_t sum = 0;
    size_t i = 0;
    for (; i + 1 < bytes.size(); i += 2) {
        sum += static_cast<uint32_t>((bytes[i] << 8) | bytes[i + 1]);
        if (sum > 0xFFFF) sum = (sum & 0xFFFF) + 1;
    }
    if (i < bytes.size()) {  // odd length: pad with a zero byte
        sum += static_cast<uint32_t>(bytes[i]) << 8;
        if (sum > 0xFFFF) sum = (sum & 0xFFFF) + 1;
    }
    return static_cast<uint16_t>(~sum & 0xFFFF);
}

IpDatagram parse_ipv4(std::span<const uint8_t> bytes) {
    if (bytes.size() < 20) {
        throw MalformedHeader("IPv4 datagram shorter than 20 bytes");
    }
    const uint8_t version = bytes[0] >> 4;
    if (version == 6) {
        throw UnsupportedProtocol("IPv6 is not supported");
    }
    if (version != 4) {
        throw MalformedHeader("IP version is not 4");
    }

    IpDatagram d;
    d.version = version;
    d.header_length = bytes[0] & 0x0F;
    if (d.header_length < 5) {
        throw MalformedHeader("IPv4 header length below 5 words");
    }
    d.actual_length = static_cast<uint32_t>(bytes.size());
    if (d.header_bytes() > bytes.size()) {
        throw MalformedHeader("IPv4 header length extends past the packet");
    }
    d.tos = bytes[1];
    d.total_length = read_u16(bytes, 2);
    d.identification = read_u16(bytes, 4);
    const uint16_t flags_frag = read_u16(bytes, 6);
    d.df_flag = (flags_frag & 0x4000) != 0;
    d.mf_flag = (flags_frag & 0x2000) != 0;
    d.fragment_offset = flags_frag & 0x1FFF;
    d.ttl = bytes[8];
    d.protocol = bytes[9];
    d.header_checksum = read_u16(bytes, 10);
    d.src_addr = read_u32(bytes, 12);
    d.dst_addr = read_u32(bytes, 16);
    d.options.assign(bytes.begin() + 20, bytes.begin() + static_cast<long>(d.header_bytes()));
    d.payload.assign(bytes.begin() + static_cast<long>(d.header_bytes()), bytes.end());
    return d;
}

std::vector<uint8_t> serialize(const IpDatagram& d, bool recompute_checksum) {
    std::vector<uint8_t> out(d.header_bytes() + d.payload.size());
    out[0] = static_cast<uint8_t>((d.version << 4) | (d.header_length & 0x0F));
    out[1] = d.tos;
    write_u16(out, 2, d.total_length);
    write_u16(out, 4, d.identification);
    uint16_t flags_frag = d.fragment_offset & 0x1FFF;
    if (d.df_flag) flags_frag |= 0x4000;
    if (d.mf_flag) flags_frag |= 0x2000;
    write_u16(out, 6, flags_frag);
    out[8] = d.ttl;
    out[9] = d.protocol;
    write_u16(out, 10, d.header_checksum);
    write_u32(out, 12, d.src_addr);
    write_u32(out, 16, d.dst_addr);
    std::copy(d.options.begin(), d.options.end(), out.begin() + 20);
    std::copy(d.payload.begin(), d.payload.end(), out.begin() + static_cast<long>(d.header_bytes()));
    if (recompute_checksum) {
        write_u16(out, 10, 0);
        const uint16_t c =
            internet_checksum(std::span<const uint8_t>(out.data(), d.header_bytes()));
        write_u16(out, 10, c);
    }
    return out;
}

IcmpHeader parse_icmp(std::span<const uint8_t> message) {
    if (message.size() < kIcmpHeaderBytes) {
        throw MalformedHeader("ICMP message shorter than 8 bytes");
    }
    IcmpHeader h;
    h.icmp_type = message[0];
    h.code = message[1];
    h.checksum = read_u16(message, 2);
    h.identifier = read_u16(message, 4);
    h.sequence = read_u16(message, 6);
    return h;
}

uint16_t icmp_checksum(std::span<const uint8_t> message) {
    std::vector<uint8_t> copy(message.begin(), message.end());
    if (copy.size() >= 4) {
        copy[2] = 0;
        copy[3] = 0;
    }
    return internet_checksum(copy);
}

TcpHeader parse_tcp(std::span<const uint8_t> segment) {
    if (segment.size() < kTcpHeaderBytes) {
        throw MalformedHeader("TCP segment shorter than 20 bytes");
    }
    TcpHeader h;
    h.src_port = read_u16(segment, 0);
    h.dst_port = read_u16(segment, 2);
    h.seq = read_u32(segment, 4);
    h.ack = read_u32(segment, 8);
    h.data_offset = segment[12] >> 4;
    h.reserved = segment[12] & 0x0F;
    h.flags = segment[13];
    h.window = read_u16(segment, 14);
    h.checksum = read_u16(segment, 16);
    h.urgent = read_u16(segment, 18);
    return h;
}

uint16_t tcp_checksum(uint32_t src_addr, uint32_t dst_addr, std::span<const uint8_t> segment) {
    std::vector<uint8_t> buf(12 + segment.size());
    write_u32(buf, 0, src_addr);
    write_u32(buf, 4, dst_addr);
    buf[8] = 0;
    buf[9] = kProtoTcp;
    write_u16(buf, 10, static_cast<uint16_t>(segment.size()));
    std::copy(segment.begin(), segment.end(), buf.begin() + 12);
    if (segment.size() >= 18) {
        buf[12 + 16] = 0;
        buf[12 + 17] = 0;
    }
    return internet_checksum(buf);
}

uint32_t parse_addr(std::string_view text) {
    uint32_t addr = 0;
    size_t pos = 0;
    for (int octet = 0; octet < 4; ++octet) {
        if (octet > 0) {
            if (pos >= text.size() || text[pos] != '.') throw Error("bad IPv4 address");
            ++pos;
        }
        unsigned value = 0;
        const auto* first = text.data() + pos;
        const auto* last = text.data() + text.size();
        auto [ptr, ec] = std::from_chars(first, last, value);
        if (ec != std::errc() || ptr == first || value > 255) throw Error("bad IPv4 address");
        pos = static_cast<size_t>(ptr - text.data());
        addr = (addr << 8) | value;
    }
    if (pos != text.size()) throw Error("bad IPv4 address");
    return addr;
}

std::string format_addr(uint32_t addr) {
    return std::to_string((addr >> 24) & 0xFF) + "." + std::to_string((addr >> 16) & 0xFF) + "." +
           std::to_string((addr >> 8) & 0xFF) + "." + std::to_string(addr & 0xFF);
}

}  // namespace smurfids
