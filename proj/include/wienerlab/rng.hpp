#pragma once

#include <cmath>
#include <cstdint>
#include <random>

namespace wienerlab {

inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

/// Per-path random stream. The state is derived from (seed, path_index)
/// only, so a path set is identical no matter how paths are distributed
/// over workers. Gaussians come from an explicit Box-Muller so the draw
/// sequence does not depend on the standard library implementation.
class PathRng {
  public:
    PathRng(std::uint64_t seed, std::uint64_t path_index)
        : engine_(splitmix64(splitmix64(seed) ^ (path_index + 0x51ed2701a3c5e47bULL))) {}

    double uniform() {
        // in (0, 1]
        return (static_cast<double>(engine_() >> 11) + 1.0) * 0x1.0p-53;
    }

    double gaussian() {
        if (has_spare_) {
            has_spare_ = false;
            return spare_;
        }
        const double u1 = uniform();
        const double u2 = uniform();
        const double r = std::sqrt(-2.0 * std::log(u1));
        const double a = 2.0 * 3.14159265358979323846 * u2;
        spare_ = r * std::sin(a);
        has_spare_ = true;
        return r * std::cos(a);
    }

  private:
    std::mt19937_64 engine_;
    bool has_spare_ = false;
    double spare_ = 0.0;
};

}  // namespace wienerlab
