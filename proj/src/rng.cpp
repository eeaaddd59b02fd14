#include "vrg/rng.hpp"

#include <cmath>
#include <numbers>

namespace vrg {

std::uint64_t Rng::next_u64() {
    state_ += 0x9e3779b97f4a7c15ULL;
    std::uint64_t z = state_;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

double Rng::uniform() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
}

double Rng::uniform(double lo, double hi) {
    return lo + (hi - lo) * uniform();
}

double Rng::normal() {
    if (has_spare_) {
        has_spare_ = false;
        return spare_;
    }
    // 1 - uniform() lies in (0, 1], keeping the log finite.
    const double u1 = 1.0 - uniform();
    const double u2 = uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double theta = 2.0 * std::numbers::pi * u2;
    spare_ = r * std::sin(theta);
    has_spare_ = true;
    return r * std::cos(theta);
}

std::uint64_t Rng::below(std::uint64_t n) {
    const std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
    std::uint64_t x;
    do {
        x = next_u64();
    } while (x >= limit);
    return x % n;
}

Tensor Rng::normal_tensor(std::vector<std::size_t> shape, double stddev) {
    Tensor out(std::move(shape));
    for (double& v : out.span()) v = stddev * normal();
    return out;
}

Tensor Rng::uniform_tensor(std::vector<std::size_t> shape, double lo, double hi) {
    Tensor out(std::move(shape));
    for (double& v : out.span()) v = uniform(lo, hi);
    return out;
}

std::uint64_t derive_seed(std::uint64_t master, std::uint64_t stream, std::uint64_t index) {
    Rng a(master ^ (0x9e3779b97f4a7c15ULL * (stream + 1)));
    Rng b(a.next_u64() ^ (0xbf58476d1ce4e5b9ULL * (index + 1)));
    return b.next_u64();
}

} // namespace vrg
