#pragma once

#include <cstdint>
#include <vector>

namespace snsqkd {

/// Bit strings formed by the Z-window effective events. Bit convention:
/// sending maps to 1 for Alice and 0 for Bob, so agreeing bits are the
/// correct outcomes. tags marks ground-truth untagged bits (single photon,
/// exactly one sender) and is only populated by simulation.
struct RawKeyPair {
    std::vector<std::uint8_t> alice_bits;
    std::vector<std::uint8_t> bob_bits;
    std::vector<std::uint8_t> tags;

    std::size_t size() const { return alice_bits.size(); }
};

}  // namespace snsqkd
