#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include "smurfids/features.hpp"
#include "smurfids/normalizer.hpp"

namespace smurfids {

// Generator for desk-scale experiments. The two record classes are disjoint
// by construction — every smurf record falls inside the default rule band,
// every normal record outside it — so classifier tests have exact expected
// outcomes.
struct SynthConfig {
    uint64_t seed = 1;
    size_t n_normal = 0;
    size_t n_smurf = 0;
    double smurf_count_low = 41.2;
    double smurf_count_high = 112.3;
    double normal_count_mean = 5.0;
    uint32_t victim_addr = 0x0A000001;            // 10.0.0.1
    Subnet amplifier_subnet{0xC0A80100, 24};      // 192.168.1.0/24
    double packet_rate = 1000.0;                  // packets per second
};

// Labeled records, smurf first then normal, deterministic per seed.
std::vector<ConnectionRecord> gen_records(const SynthConfig& config);

// Writes a capture of n_smurf spoofed-source echo requests aimed at the
// amplifier subnet's broadcast address, interleaved with n_normal benign
// unicast echo packets at packet_rate. Throws IoFailure on write errors.
void gen_smurf_pcap(const std::filesystem::path& path, const SynthConfig& config);

}  // namespace smurfids
