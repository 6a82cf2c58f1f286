#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>
#include <vector>

namespace mscale {

using Engine = std::mt19937_64;

/// Independent streams are separated by a domain tag so that quantile draws
/// and synthetic data never share a substream for the same master seed.
enum class StreamDomain : std::uint32_t {
    GaussianDraw = 0x47415553u,
    SyntheticPanel = 0x53594e54u,
};

/// Engine for the substream identified by (master seed, domain, indices...).
/// The state depends only on these values, never on scheduling.
inline Engine make_substream(std::uint64_t master_seed, StreamDomain domain,
                             std::initializer_list<std::uint64_t> indices) {
    std::vector<std::uint32_t> words;
    words.reserve(3 + 2 * indices.size());
    words.push_back(static_cast<std::uint32_t>(master_seed));
    words.push_back(static_cast<std::uint32_t>(master_seed >> 32));
    words.push_back(static_cast<std::uint32_t>(domain));
    for (auto idx : indices) {
        words.push_back(static_cast<std::uint32_t>(idx));
        words.push_back(static_cast<std::uint32_t>(idx >> 32));
    }
    std::seed_seq seq(words.begin(), words.end());
    return Engine(seq);
}

} // namespace mscale
