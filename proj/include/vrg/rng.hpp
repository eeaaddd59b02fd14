#pragma once

#include <cstdint>
#include <vector>

#include "vrg/tensor.hpp"

namespace vrg {

// Identifier written into container manifests so the generator algorithm is
// pinned: splitmix64 state advance, 53-bit uniforms, Box-Muller normals.
inline constexpr const char* kRngAlgoId = "splitmix64-boxmuller-v1";

// Deterministic stream generator. Same seed gives bit-identical draws on any
// platform; there is no global state.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : state_(seed) {}

    std::uint64_t next_u64();

    // Uniform in [0, 1) with 53 significant bits.
    double uniform();
    double uniform(double lo, double hi);

    // Standard normal via Box-Muller; the paired draw is cached.
    double normal();

    // Unbiased integer in [0, n) by rejection.
    std::uint64_t below(std::uint64_t n);

    Tensor normal_tensor(std::vector<std::size_t> shape, double stddev = 1.0);
    Tensor uniform_tensor(std::vector<std::size_t> shape, double lo, double hi);

    template <typename T>
    void shuffle(std::vector<T>& v) {
        for (std::size_t i = v.size(); i > 1; --i) {
            std::swap(v[i - 1], v[below(i)]);
        }
    }

private:
    std::uint64_t state_;
    double spare_ = 0.0;
    bool has_spare_ = false;
};

// Derives an independent stream seed from a master seed, a stream tag and an
// index (e.g. epoch or optimizer step). Pure function of its arguments.
std::uint64_t derive_seed(std::uint64_t master, std::uint64_t stream, std::uint64_t index = 0);

// Stream tags used across the engine so consumers never collide.
namespace streams {
inline constexpr std::uint64_t kSynthCenters = 1;
inline constexpr std::uint64_t kSynthDescriptions = 2;
inline constexpr std::uint64_t kSynthFeatures = 3;
inline constexpr std::uint64_t kSynthBranchMap = 4;
inline constexpr std::uint64_t kAdapterInit = 5;
inline constexpr std::uint64_t kAdapterEps = 6;
inline constexpr std::uint64_t kShuffle = 7;
inline constexpr std::uint64_t kGradCheck = 8;
} // namespace streams

} // namespace vrg
