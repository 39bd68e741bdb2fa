#include <algorithm>
#include <cstring>
#include <filesystem>
#include <fstream>

#include "doctest.h"
#include "smurfids/packet.hpp"
#include "smurfids/pcap.hpp"
#include "test_support.hpp"

using namespace smurfids;

namespace {

std::filesystem::path temp_file(const char* name) {
    return std::filesystem::temp_directory_path() / name;
}

void append_u32(std::vector<uint8_t>& out, uint32_t v) {
    uint8_t buf[4];
    std::memcpy(buf, &v, 4);
    out.insert(out.end(), buf, buf + 4);
}

void append_u16(std::vector<uint8_t>& out, uint16_t v) {
    uint8_t buf[2];
    std::memcpy(buf, &v, 2);
    out.insert(out.end(), buf, buf + 2);
}

uint32_t swap32(uint32_t v) {
    return ((v & 0xFF) << 24) | ((v & 0xFF00) << 8) | ((v >> 8) & 0xFF00) | (v >> 24);
}

void write_file(const std::filesystem::path& p, const std::vector<uint8_t>& bytes) {
    std::ofstream out(p, std::ios::binary | std::ios::trunc);
    out.write(reinterpret_cast<const char*>(bytes.data()),
              static_cast<std::streamsize>(bytes.size()));
}

std::vector<uint8_t> eth_frame(const std::vector<uint8_t>& ip_bytes, uint16_t ethertype) {
    std::vector<uint8_t> frame(14 + ip_bytes.size(), 0);
    frame[12] = static_cast<uint8_t>(ethertype >> 8);
    frame[13] = static_cast<uint8_t>(ethertype & 0xFF);
    std::copy(ip_bytes.begin(), ip_bytes.end(), frame.begin() + 14);
    return frame;
}

// hand-built capture; when swapped, every header integer is byte-reversed
// relative to the reading machine
std::vector<uint8_t> capture_bytes(const std::vector<std::vector<uint8_t>>& frames,
                                   uint32_t linktype, bool swapped) {
    auto fix = [&](uint32_t v) { return swapped ? swap32(v) : v; };
    std::vector<uint8_t> out;
    append_u32(out, fix(0xA1B2C3D4));
    append_u16(out, swapped ? 0x0200 : 0x0002);
    append_u16(out, swapped ? 0x0400 : 0x0004);
    append_u32(out, 0);
    append_u32(out, 0);
    append_u32(out, fix(65535));
    append_u32(out, fix(linktype));
    uint32_t sec = 100;
    for (const auto& f : frames) {
        append_u32(out, fix(sec++));
        append_u32(out, fix(500));
        append_u32(out, fix(static_cast<uint32_t>(f.size())));
        append_u32(out, fix(static_cast<uint32_t>(f.size())));
        out.insert(out.end(), f.begin(), f.end());
    }
    return out;
}

std::vector<uint8_t> sample_ip() {
    testsup::RawIp raw;
    raw.payload = {0x10, 0x20, 0x30, 0x40};
    return testsup::build_ip(raw);
}

}  // namespace

TEST_CASE("write_capture then read_capture round-trips packets and timestamps") {
    std::vector<CapturedPacket> packets;
    packets.push_back({{1000, 250000}, sample_ip()});
    testsup::RawIp second;
    second.proto = 1;
    second.payload = testsup::build_icmp_echo(8, 7, 1, 16);
    packets.push_back({{1000, 999999}, testsup::build_ip(second)});

    const auto path = temp_file("roundtrip.pcap");
    write_capture(path, packets);
    const auto back = read_capture(path);
    REQUIRE(back.size() == 2);
    for (size_t i = 0; i < 2; ++i) {
        CHECK(back[i].ts == packets[i].ts);
        CHECK(back[i].bytes == packets[i].bytes);
    }
    std::filesystem::remove(path);
}

TEST_CASE("read_capture accepts the opposite byte order") {
    const auto ip = sample_ip();
    const auto path = temp_file("swapped.pcap");
    write_file(path, capture_bytes({eth_frame(ip, 0x0800)}, 1, true));
    const auto packets = read_capture(path);
    REQUIRE(packets.size() == 1);
    CHECK(packets[0].ts.sec == 100);
    CHECK(packets[0].ts.usec == 500);
    CHECK(packets[0].bytes == ip);
    std::filesystem::remove(path);
}

TEST_CASE("read_capture skips frames that are not IPv4") {
    const auto ip = sample_ip();
    std::vector<std::vector<uint8_t>> frames{
        eth_frame(ip, 0x0806),           // ARP
        eth_frame(ip, 0x0800),           // the one to keep
        eth_frame(ip, 0x86DD),           // IPv6
        {0x01, 0x02, 0x03},              // runt frame, shorter than a MAC header
    };
    const auto path = temp_file("mixed.pcap");
    write_file(path, capture_bytes(frames, 1, false));
    const auto packets = read_capture(path);
    REQUIRE(packets.size() == 1);
    CHECK(packets[0].bytes == ip);
    std::filesystem::remove(path);
}

TEST_CASE("read_capture rejects damaged files") {
    const auto path = temp_file("damaged.pcap");

    write_file(path, {0x01, 0x02, 0x03});
    CHECK_THROWS_AS(read_capture(path), BadCaptureFile);

    auto bad_magic = capture_bytes({}, 1, false);
    bad_magic[0] = 0x12;
    bad_magic[1] = 0x34;
    bad_magic[2] = 0x56;
    bad_magic[3] = 0x78;
    write_file(path, bad_magic);
    CHECK_THROWS_AS(read_capture(path), BadCaptureFile);

    write_file(path, capture_bytes({eth_frame(sample_ip(), 0x0800)}, 101, false));
    CHECK_THROWS_AS(read_capture(path), BadCaptureFile);  // raw-IP linktype unsupported

    auto truncated = capture_bytes({eth_frame(sample_ip(), 0x0800)}, 1, false);
    truncated.resize(truncated.size() - 5);
    write_file(path, truncated);
    CHECK_THROWS_AS(read_capture(path), BadCaptureFile);

    auto header_only = capture_bytes({eth_frame(sample_ip(), 0x0800)}, 1, false);
    header_only.resize(24 + 7);  // record header cut short
    write_file(path, header_only);
    CHECK_THROWS_AS(read_capture(path), BadCaptureFile);

    std::filesystem::remove(path);
    CHECK_THROWS_AS(read_capture(path), IoFailure);  // the file is gone
}

TEST_CASE("timestamps convert to and from seconds") {
    CHECK(Timestamp{3, 500000}.seconds() == doctest::Approx(3.5));
    const Timestamp t = Timestamp::from_seconds(2.000001);
    CHECK(t.sec == 2);
    CHECK(t.usec == 1);
    const Timestamp r = Timestamp::from_seconds(1.9999996);  // rounds up into the next second
    CHECK(r.sec == 2);
    CHECK(r.usec == 0);
    CHECK(Timestamp::from_seconds(-5.0) == Timestamp{0, 0});
    CHECK(Timestamp{1, 2} < Timestamp{1, 3});
    CHECK(Timestamp{1, 999999} < Timestamp{2, 0});
}
