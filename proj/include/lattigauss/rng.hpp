#pragma once

#include <cmath>
#include <cstdint>
#include <vector>

#include "lattigauss/numeric.hpp"

// Counter-based random streams. A stream is fully determined by
// (seed, stream_id): the j-th output is a mix of an affine counter, so any
// batch of work can be replayed independently of scheduling order. This is
// what makes Monte Carlo results bit-identical across worker counts.
namespace lattigauss::rng {

namespace detail {

inline uint64_t splitmix64(uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    uint64_t z = x;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

inline uint64_t mix2(uint64_t a, uint64_t b) {
    return splitmix64(splitmix64(a) ^ (0x9e3779b97f4a7c15ULL + b));
}

}  // namespace detail

class Stream {
public:
    Stream(uint64_t seed, uint64_t stream_id)
        : base_(detail::mix2(seed, stream_id)) {}

    uint64_t next_u64() { return detail::splitmix64(base_ + (ctr_++) * 0x9e3779b97f4a7c15ULL); }

    // Uniform in [0,1) with 53 random bits.
    double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    // Uniform in (0,1], safe as a log() argument.
    double uniform_open() {
        return (static_cast<double>(next_u64() >> 11) + 1.0) * 0x1.0p-53;
    }

    // Standard normal via Box-Muller; second value cached.
    double normal() {
        if (have_cached_) {
            have_cached_ = false;
            return cached_;
        }
        double u1 = uniform_open();
        double u2 = uniform();
        double r = std::sqrt(-2.0 * std::log(u1));
        double a = 2.0 * kPi * u2;
        cached_ = r * std::sin(a);
        have_cached_ = true;
        return r * std::cos(a);
    }

    std::vector<double> normal_vec(int n, double sigma = 1.0) {
        std::vector<double> v(static_cast<size_t>(n));
        for (auto& x : v) x = sigma * normal();
        return v;
    }

    // Uniform integer in [0, m).
    uint64_t below(uint64_t m) {
        // rejection to remove modulo bias
        uint64_t lim = UINT64_MAX - UINT64_MAX % m;
        uint64_t x;
        do {
            x = next_u64();
        } while (x >= lim);
        return x % m;
    }

private:
    uint64_t base_;
    uint64_t ctr_ = 0;
    double cached_ = 0.0;
    bool have_cached_ = false;
};

// Point uniform on the sphere of radius r in R^n.
inline std::vector<double> sphere_point(Stream& s, int n, double r) {
    std::vector<double> v = s.normal_vec(n);
    double nrm = 0.0;
    for (double x : v) nrm += x * x;
    nrm = std::sqrt(nrm);
    for (double& x : v) x = x / nrm * r;
    return v;
}

}  // namespace lattigauss::rng
