#pragma once

#include <cstdint>
#include <string_view>

namespace sier {

/// Counter-based generator (splitmix64). Used everywhere instead of the
/// standard distributions so that sequences are identical across platforms.
class RngStream {
public:
    explicit RngStream(std::uint64_t key) : state_(key) {}

    std::uint64_t next_u64() {
        state_ += 0x9e3779b97f4a7c15ULL;
        std::uint64_t z = state_;
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    }

    /// Uniform in [0, 1), 53 bits of mantissa.
    double next_double() {
        return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
    }

    std::uint64_t next_below(std::uint64_t n) {
        return n == 0 ? 0 : next_u64() % n;
    }

private:
    std::uint64_t state_;
};

enum class Phase : std::uint64_t { Init = 1, Evolution = 2, Finalize = 3 };

std::uint64_t fnv1a(std::string_view s);

/// Stream key for one backend call, derived from (global seed, problem id,
/// phase, path index, step index, sample index). Every generation in a run
/// gets its own stream, so results do not depend on scheduling.
std::uint64_t stream_key(std::uint64_t seed, std::string_view problem_id, Phase phase,
                         std::uint64_t path_index, std::uint64_t step_index,
                         std::uint64_t sample_index);

}  // namespace sier
