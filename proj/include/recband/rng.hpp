#pragma once

#include <cstdint>
#include <initializer_list>
#include <limits>
#include <random>

namespace recband {

inline constexpr std::uint64_t kGoldenGamma = 0x9E3779B97F4A7C15ULL;

/// SplitMix64 finalizer.
constexpr std::uint64_t mix64(std::uint64_t z) noexcept {
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

/// What a sub-stream is used for. Values are part of the stream derivation and
/// must not be renumbered, or every recorded seed changes meaning.
enum class StreamPurpose : std::uint64_t {
    RecoveryModel = 1,
    RewardNoise = 2,
    Policy = 3,
};

/// Counter-based generator: output n is mix64(key + n * gamma). Splitting hashes
/// a tag into a fresh key, so sub-streams depend only on (key, tag path) and never
/// on how many numbers another stream has consumed.
class RandomStream {
public:
    using result_type = std::uint64_t;

    explicit RandomStream(std::uint64_t key = 0) : key_(key) {}

    static constexpr result_type min() { return 0; }
    static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }

    result_type operator()() noexcept { return mix64(key_ + (++counter_) * kGoldenGamma); }

    [[nodiscard]] RandomStream split(std::uint64_t tag) const {
        return RandomStream(mix64(key_ ^ mix64(tag + kGoldenGamma)));
    }

    [[nodiscard]] RandomStream split(std::initializer_list<std::uint64_t> tags) const {
        RandomStream out = *this;
        for (auto tag : tags) out = out.split(tag);
        return out;
    }

    double normal() { return normal_(*this); }

    double uniform() { return std::uniform_real_distribution<double>(0.0, 1.0)(*this); }

    [[nodiscard]] std::uint64_t key() const noexcept { return key_; }
    [[nodiscard]] std::uint64_t counter() const noexcept { return counter_; }

private:
    std::uint64_t key_;
    std::uint64_t counter_ = 0;
    std::normal_distribution<double> normal_{0.0, 1.0};
};

/// Stream for one (replication, arm, purpose) triple of an experiment.
inline RandomStream derive_stream(std::uint64_t master_seed, std::uint64_t replication,
                                  std::uint64_t arm, StreamPurpose purpose) {
    return RandomStream(master_seed).split({replication, arm, static_cast<std::uint64_t>(purpose)});
}

}  // namespace recband
