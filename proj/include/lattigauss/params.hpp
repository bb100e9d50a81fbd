#pragma once

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "lattigauss/numeric.hpp"

// Parameter quadruples (n, k, p, a) for scaled mod-p lattices, their derived
// volumes and volume-to-noise ratios, prime generation, and the threshold
// rules used to pick code parameters at a given block length. All threshold
// comparisons run in natural-log space: quantities like (d*n)^(n/2k) leave
// double range long before the block lengths of interest.
namespace lattigauss::params {

// -------------------------------------------------------------------------
// Primality. Deterministic Miller-Rabin over the full 64-bit range; plain
// trial division below 1e6.
// -------------------------------------------------------------------------

namespace detail {

inline uint64_t mulmod_u64(uint64_t a, uint64_t b, uint64_t m) {
    return static_cast<uint64_t>((static_cast<unsigned __int128>(a) * b) % m);
}

inline uint64_t powmod_u64(uint64_t base, uint64_t exp, uint64_t m) {
    uint64_t r = 1;
    base %= m;
    while (exp > 0) {
        if (exp & 1) r = mulmod_u64(r, base, m);
        base = mulmod_u64(base, base, m);
        exp >>= 1;
    }
    return r;
}

inline bool miller_rabin_witness(uint64_t n, uint64_t a) {
    // n odd, n > 2, a reduced mod n and nonzero
    uint64_t d = n - 1;
    int r = 0;
    while ((d & 1) == 0) {
        d >>= 1;
        ++r;
    }
    uint64_t x = powmod_u64(a, d, n);
    if (x == 1 || x == n - 1) return true;
    for (int i = 1; i < r; ++i) {
        x = mulmod_u64(x, x, n);
        if (x == n - 1) return true;
    }
    return false;
}

}  // namespace detail

inline bool is_prime(uint64_t n) {
    if (n < 2) return false;
    if (n < 1000000) {
        if (n % 2 == 0) return n == 2;
        for (uint64_t d = 3; d * d <= n; d += 2) {
            if (n % d == 0) return false;
        }
        return true;
    }
    if (n % 2 == 0) return false;
    // This witness set is exact for all 64-bit integers.
    static constexpr uint64_t witnesses[] = {2,  3,  5,  7,  11, 13,
                                             17, 19, 23, 29, 31, 37};
    for (uint64_t a : witnesses) {
        if (a % n == 0) continue;
        if (!detail::miller_rabin_witness(n, a % n)) return false;
    }
    return true;
}

// Smallest prime strictly greater than x.
inline uint64_t next_prime(double x) {
    if (!(x >= 0.0)) throw std::domain_error("next_prime: x must be >= 0");
    if (x >= 9.2e18) throw std::overflow_error("next_prime: x exceeds 64-bit range");
    uint64_t c = (x < 2.0) ? 2 : static_cast<uint64_t>(std::floor(x)) + 1;
    while (!is_prime(c)) ++c;
    return c;
}

// -------------------------------------------------------------------------
// Domain types
// -------------------------------------------------------------------------

struct ParameterQuadruple {
    int n = 0;       // block length, >= 2
    int k = 0;       // code dimension, in [1, n-1]
    uint64_t p = 0;  // prime alphabet size
    double a = 0.0;  // positive scaling factor

    void validate() const {
        if (n < 2) throw std::invalid_argument("quadruple: n must be >= 2");
        if (k < 1 || k > n - 1)
            throw std::invalid_argument("quadruple: k must lie in [1, n-1]");
        if (!is_prime(p)) throw std::invalid_argument("quadruple: p must be prime");
        if (!(a > 0.0)) throw std::invalid_argument("quadruple: a must be positive");
    }
};

struct NoiseModel {
    double sigma_w = 0.0;  // per-component noise standard deviation

    void validate() const {
        if (!(sigma_w > 0.0)) throw std::invalid_argument("noise: sigma_w must be positive");
    }
};

struct ScheduleEntry {
    ParameterQuadruple q;
    double sigma_w = 1.0;  // per-entry noise level; constant across entries in the main regime
};

struct ParameterSchedule {
    std::vector<ScheduleEntry> entries;  // strictly increasing in n
    std::string description;

    void validate() const {
        int prev_n = 1;
        for (const auto& e : entries) {
            e.q.validate();
            if (e.q.n <= prev_n)
                throw std::invalid_argument("schedule: entries must be strictly increasing in n");
            if (!(e.sigma_w > 0.0))
                throw std::invalid_argument("schedule: sigma_w must be positive");
            prev_n = e.q.n;
        }
    }
};

// -------------------------------------------------------------------------
// Volumes and VNR
// -------------------------------------------------------------------------

/// log of the fundamental volume a^n p^(n-k).
inline double log_volume(const ParameterQuadruple& q) {
    return q.n * std::log(q.a) + (q.n - q.k) * std::log(static_cast<double>(q.p));
}

inline double volume(const ParameterQuadruple& q) {
    q.validate();
    return exp_guarded(log_volume(q));
}

/// Volume-to-noise ratio volume^(2/n) / sigma^2.
inline double vnr(const ParameterQuadruple& q, double sigma) {
    q.validate();
    if (!(sigma > 0.0)) throw std::domain_error("vnr: sigma must be positive");
    return exp_guarded(2.0 / q.n * log_volume(q)) / (sigma * sigma);
}

/// epsilon = volume^(2/n) / (2 pi e sigma_w^2) - 1, the excess-volume margin.
inline double epsilon_of(const ParameterQuadruple& q, double sigma_w) {
    return vnr(q, sigma_w) / kTwoPiE - 1.0;
}

/// Scale a so that volume^(2/n)/(2 pi e sigma_w^2) - 1 == epsilon.
inline double solve_scale(int n, int k, uint64_t p, double sigma_w, double epsilon) {
    if (!(epsilon > -1.0)) throw std::domain_error("solve_scale: epsilon must exceed -1");
    if (!(sigma_w > 0.0)) throw std::domain_error("solve_scale: sigma_w must be positive");
    if (n < 2 || k < 1 || k > n - 1) throw std::invalid_argument("solve_scale: bad (n,k)");
    double log_a = 0.5 * std::log(kTwoPiE * sigma_w * sigma_w * (1.0 + epsilon)) -
                   (static_cast<double>(n - k) / n) * std::log(static_cast<double>(p));
    return exp_guarded(log_a);
}

// -------------------------------------------------------------------------
// Threshold rules
// -------------------------------------------------------------------------

/// p > max( (d'n)^(n/2k), ((1/pi) log n)^(n/2(n-k)) ), evaluated in log space.
inline bool check_mac(int n, int k, uint64_t p, double delta_prime) {
    if (n < 2 || k < 1 || k > n - 1) throw std::invalid_argument("check_mac: bad (n,k)");
    if (!(delta_prime > 0.0)) throw std::domain_error("check_mac: delta_prime must be positive");
    double log_p = std::log(static_cast<double>(p));
    double t1 = static_cast<double>(n) / (2.0 * k) * std::log(delta_prime * n);
    double log_arg = std::log(static_cast<double>(n)) / kPi;
    double t2 = static_cast<double>(n) / (2.0 * (n - k)) * std::log(log_arg);
    return log_p > t1 && log_p > t2;
}

/// p > (2 d n / (pi e (1+eps)))^(n/2k).
inline bool check_pe_prime(int n, int k, uint64_t p, double delta, double epsilon) {
    if (!(delta > 1.0)) throw std::domain_error("check_pe_prime: delta must exceed 1");
    if (!(epsilon > 0.0)) throw std::domain_error("check_pe_prime: epsilon must be positive");
    if (n < 2 || k < 1 || k > n - 1) throw std::invalid_argument("check_pe_prime: bad (n,k)");
    double log_p = std::log(static_cast<double>(p));
    double t = static_cast<double>(n) / (2.0 * k) *
               std::log(2.0 * delta * n / (kPi * kE * (1.0 + epsilon)));
    return log_p > t;
}

/// (d'n)^((1/2)(1 + loglog n / log n)), the prime threshold of the coding theorem.
inline double lg_prime_threshold(int n, double delta_prime) {
    if (n < 3) throw std::domain_error("lg_prime_threshold: n must be >= 3 (loglog n)");
    double ln_n = std::log(static_cast<double>(n));
    double expo = 0.5 * (1.0 + std::log(ln_n) / ln_n);
    return exp_guarded(expo * std::log(delta_prime * n));
}

// -------------------------------------------------------------------------
// Gaussian-coding parameter suggestion
// -------------------------------------------------------------------------

struct LgDerived {
    ParameterQuadruple q;
    double sigma_tilde = 0.0;  // sigma_s^2 / sqrt(sigma_s^2 + sigma_z^2)
    double sigma_w = 0.0;      // (sigma_tilde / sigma_s) * sigma_z
};

/// Effective MMSE standard deviations for the Gaussian-coding channel.
inline double sigma_tilde_of(double sigma_s, double sigma_z) {
    return sigma_s * sigma_s / std::sqrt(sigma_s * sigma_s + sigma_z * sigma_z);
}

inline double sigma_w_of(double sigma_s, double sigma_z) {
    return sigma_tilde_of(sigma_s, sigma_z) / sigma_s * sigma_z;
}

/// Picks (n, k, p, a): p from the loglog-corrected prime threshold, k as the
/// smallest integer at or above n log n / log(n log n) passing the combined
/// threshold rule, and a so the VNR at sigma_w equals gamma.
inline LgDerived suggest_lg_parameters(int n, double sigma_s, double sigma_z, double eta,
                                       double gamma) {
    if (n < 3) throw std::invalid_argument("suggest_lg_parameters: n too small");
    double snr_like = sigma_s * sigma_s / (sigma_z * sigma_z);
    if (!(snr_like > kE))
        throw std::domain_error("suggest_lg_parameters: requires sigma_s^2/sigma_z^2 > e");
    double eta_max = 0.5 * std::log(snr_like / kE);
    if (!(eta > 0.0 && eta < eta_max))
        throw std::domain_error("suggest_lg_parameters: eta outside (0, (1/2)log(sigma_s^2/(e sigma_z^2)))");
    double gamma_max = kTwoPiE * std::exp(2.0 * eta);
    if (!(gamma > kTwoPiE && gamma <= gamma_max))
        throw std::domain_error("suggest_lg_parameters: gamma outside (2 pi e, 2 pi e^(1+2 eta)]");

    const double delta_prime = 2.0 / (kPi * kE);
    uint64_t p = next_prime(lg_prime_threshold(n, delta_prime));

    double ln_n = std::log(static_cast<double>(n));
    double k_lo = n * ln_n / std::log(n * ln_n);
    int k = static_cast<int>(std::ceil(k_lo));
    if (k < 1) k = 1;
    while (k <= n - 1 && !check_mac(n, k, p, delta_prime)) ++k;
    if (k > n - 1)
        throw std::runtime_error("suggest_lg_parameters: no feasible k at this block length");

    LgDerived out;
    out.sigma_tilde = sigma_tilde_of(sigma_s, sigma_z);
    out.sigma_w = sigma_w_of(sigma_s, sigma_z);
    double log_a = 0.5 * std::log(gamma * out.sigma_w * out.sigma_w) -
                   (static_cast<double>(n - k) / n) * std::log(static_cast<double>(p));
    out.q = ParameterQuadruple{n, k, p, exp_guarded(log_a)};
    out.q.validate();
    return out;
}

// -------------------------------------------------------------------------
// Flatness-theorem bookkeeping functions
// -------------------------------------------------------------------------

struct FfFg {
    double f = 0.0;  // n exp(-pi / (a^2 tau))
    double g = 0.0;  // n exp(-pi V^(2/n) tau p^(2k/n))
};

/// The (f, g) pair that inverts the scale/prime parameterization of the
/// flatness theorem at a given tau.
inline FfFg ff_f_g(const ParameterQuadruple& q, double tau) {
    q.validate();
    if (!(tau > 0.0)) throw std::domain_error("ff_f_g: tau must be positive");
    FfFg out;
    double log_n = std::log(static_cast<double>(q.n));
    double e_f = log_n - kPi / (q.a * q.a * tau);
    out.f = (e_f < -745.0) ? 0.0 : std::exp(e_f);
    double v2n = exp_guarded(2.0 / q.n * log_volume(q));
    double p2kn = exp_guarded(2.0 * q.k / q.n * std::log(static_cast<double>(q.p)));
    double e_g = log_n - kPi * v2n * tau * p2kn;
    out.g = (e_g < -745.0) ? 0.0 : std::exp(e_g);
    return out;
}

}  // namespace lattigauss::params
