#include "smurfids/pcap.hpp"

#include <array>
#include <cmath>
#include <cstring>
#include <fstream>

namespace smurfids {

namespace {

constexpr uint32_t kMagicNative = 0xA1B2C3D4;
constexpr uint32_t kMagicSwapped = 0xD4C3B2A1;
constexpr uint32_t kLinkEthernet = 1;
constexpr size_t kEthHeaderBytes = 14;
constexpr uint16_t kEthertypeIpv4 = 0x0800;

uint32_t swap32(uint32_t v) {
    return ((v & 0xFF) << 24) | ((v & 0xFF00) << 8) | ((v >> 8) & 0xFF00) | (v >> 24);
}

struct FileHeader {
    uint32_t magic;
    uint16_t version_major;
    uint16_t version_minor;
    int32_t thiszone;
    uint32_t sigfigs;
    uint32_t snaplen;
    uint32_t network;
};

struct RecordHeader {
    uint32_t ts_sec;
    uint32_t ts_usec;
    uint32_t incl_len;
    uint32_t orig_len;
};

static_assert(sizeof(FileHeader) == 24);
static_assert(sizeof(RecordHeader) == 16);

}  // namespace

Timestamp Timestamp::from_seconds(double s) {
    if (s < 0) s = 0;
    Timestamp t;
    t.sec = static_cast<uint32_t>(s);
    t.usec = static_cast<uint32_t>(std::llround((s - t.sec) * 1e6));
    if (t.usec >= 1000000) {
        t.sec += t.usec / 1000000;
        t.usec %= 1000000;
    }
    return t;
}

std::vector<CapturedPacket> read_capture(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw IoFailure("cannot open capture file: " + path.string());
    }

    FileHeader fh{};
    if (!in.read(reinterpret_cast<char*>(&fh), sizeof(fh))) {
        throw BadCaptureFile("capture file shorter than its header");
    }

    bool swapped = false;
    if (fh.magic == kMagicSwapped) {
        swapped = true;
    } else if (fh.magic != kMagicNative) {
        throw BadCaptureFile("capture magic is not classic pcap");
    }
    const uint32_t network = swapped ? swap32(fh.network) : fh.network;
    if (network != kLinkEthernet) {
        throw BadCaptureFile("capture link type is not Ethernet");
    }

    std::vector<CapturedPacket> packets;
    for (;;) {
        RecordHeader rh{};
        in.read(reinterpret_cast<char*>(&rh), sizeof(rh));
        if (in.gcount() == 0 && in.eof()) break;
        if (in.gcount() != sizeof(rh)) {
            throw BadCaptureFile("truncated record header");
        }
        if (swapped) {
            rh.ts_sec = swap32(rh.ts_sec);
            rh.ts_usec = swap32(rh.ts_usec);
            rh.incl_len = swap32(rh.incl_len);
            rh.orig_len = swap32(rh.orig_len);
        }
        std::vector<uint8_t> frame(rh.incl_len);
        in.read(reinterpret_cast<char*>(frame.data()), static_cast<long>(frame.size()));
        if (static_cast<uint32_t>(in.gcount()) != rh.incl_len) {
            throw BadCaptureFile("truncated record data");
        }
        if (frame.size() < kEthHeaderBytes) continue;
        const uint16_t ethertype = static_cast<uint16_t>((frame[12] << 8) | frame[13]);
        if (ethertype != kEthertypeIpv4) continue;  // non-IPv4 frames are skipped

        CapturedPacket p;
        p.ts = Timestamp{rh.ts_sec, rh.ts_usec};
        p.bytes.assign(frame.begin() + kEthHeaderBytes, frame.end());
        packets.push_back(std::move(p));
    }
    return packets;
}

void write_capture(const std::filesystem::path& path, std::span<const CapturedPacket> packets) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) {
        throw IoFailure("cannot open capture file for writing: " + path.string());
    }

    FileHeader fh{};
    fh.magic = kMagicNative;
    fh.version_major = 2;
    fh.version_minor = 4;
    fh.thiszone = 0;
    fh.sigfigs = 0;
    fh.snaplen = 65535;
    fh.network = kLinkEthernet;
    out.write(reinterpret_cast<const char*>(&fh), sizeof(fh));

    for (const auto& p : packets) {
        std::array<uint8_t, kEthHeaderBytes> eth{};
        // locally administered MACs derived from the IP addresses
        eth[0] = 0x02;
        eth[6] = 0x02;
        if (p.bytes.size() >= 20) {
            std::memcpy(eth.data() + 2, p.bytes.data() + 16, 4);  // dst MAC <- dst IP
            std::memcpy(eth.data() + 8, p.bytes.data() + 12, 4);  // src MAC <- src IP
        }
        eth[12] = kEthertypeIpv4 >> 8;
        eth[13] = kEthertypeIpv4 & 0xFF;

        RecordHeader rh{};
        rh.ts_sec = p.ts.sec;
        rh.ts_usec = p.ts.usec;
        rh.incl_len = static_cast<uint32_t>(eth.size() + p.bytes.size());
        rh.orig_len = rh.incl_len;
        out.write(reinterpret_cast<const char*>(&rh), sizeof(rh));
        out.write(reinterpret_cast<const char*>(eth.data()), static_cast<long>(eth.size()));
        out.write(reinterpret_cast<const char*>(p.bytes.data()), static_cast<long>(p.bytes.size()));
    }
    if (!out) {
        throw IoFailure("write failed: " + path.string());
    }
}

}  // namespace smurfids
