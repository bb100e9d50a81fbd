#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <set>
#include <stdexcept>
#include <vector>

#include "lattigauss/gf.hpp"
#include "lattigauss/numeric.hpp"

// Theta series (Jacobi, Z^n, mod-p coset lattices), the flatness factor,
// sphere-packing / Poltyrev exponents, the Chernoff radial tail, and ball
// volume bounds.
//
// Truncation policy: every 1-D series stops on a geometric tail certificate
// (default 1e-15 per factor) and the certificate is carried in the returned
// value; n-fold products amplify the per-factor budget n-fold, so callers at
// large n should work with the log forms.
namespace lattigauss::theta {

inline constexpr double kThetaTol = 1e-15;

struct ThetaValue {
    double value = 0.0;
    double abs_error = 0.0;  // truncation budget
};

namespace detail {

// Geometric tail certificate for sum_{z >= z0} exp(-pi tau z^2), z0 > 0:
// ratio of consecutive terms is at most exp(-pi tau (2 z0 + 1)).
inline double tail_bound(double tau, double z0) {
    double t = std::exp(-kPi * tau * z0 * z0);
    double ratio = std::exp(-kPi * tau * (2.0 * z0 + 1.0));
    return t / (1.0 - ratio);
}

inline ThetaValue jacobi_theta_direct(double tau, double tol) {
    KahanSum s;
    s.add(1.0);
    double z = 1.0;
    double bound;
    for (;;) {
        bound = tail_bound(tau, z);
        if (bound < tol) break;
        s.add(2.0 * std::exp(-kPi * tau * z * z));
        z += 1.0;
    }
    return ThetaValue{s.value(), 2.0 * bound};
}

}  // namespace detail

/// theta(0, i tau) = sum_z exp(-pi tau z^2). Small tau is routed through the
/// functional equation theta(tau) = tau^(-1/2) theta(1/tau) to keep the term
/// count bounded; crossover at tau = 1.
inline ThetaValue jacobi_theta(double tau, double tol = kThetaTol) {
    if (!(tau > 0.0)) throw std::domain_error("jacobi_theta: tau must be positive");
    if (tau >= 1.0) return detail::jacobi_theta_direct(tau, tol);
    ThetaValue inner = detail::jacobi_theta_direct(1.0 / tau, tol);
    double scale = 1.0 / std::sqrt(tau);
    return ThetaValue{scale * inner.value, scale * inner.abs_error};
}

/// theta(0, i tau) - 1, summed without the constant term so values near 1
/// keep full relative precision.
inline ThetaValue jacobi_theta_minus_1(double tau, double tol = kThetaTol) {
    if (tau >= 1.0) {
        KahanSum s;
        double z = 1.0;
        double bound;
        for (;;) {
            bound = detail::tail_bound(tau, z);
            if (bound < tol) break;
            s.add(2.0 * std::exp(-kPi * tau * z * z));
            z += 1.0;
        }
        return ThetaValue{s.value(), 2.0 * bound};
    }
    ThetaValue t = jacobi_theta(tau, tol);
    return ThetaValue{t.value - 1.0, t.abs_error};
}

/// Theta_{Z^n}(tau) = theta(0, i tau)^n, as exp(n log theta).
inline ThetaValue theta_zn(int n, double tau, double tol = kThetaTol) {
    if (n < 1) throw std::invalid_argument("theta_zn: n must be >= 1");
    ThetaValue t = jacobi_theta(tau, tol);
    double v = exp_guarded(n * std::log(t.value));
    double rel = n * (t.abs_error / t.value);
    return ThetaValue{v, v * rel};
}

/// log Theta_{Z^n}(tau) with a relative-error estimate, for large-n assembly.
struct LogTheta {
    double log_value = 0.0;
    double rel_error = 0.0;
};

inline LogTheta log_theta_zn(int n, double tau, double tol = kThetaTol) {
    ThetaValue t = jacobi_theta(tau, tol);
    return LogTheta{n * std::log(t.value), n * (t.abs_error / t.value)};
}

/// Relative residual of Theta_{Z^n}(t) = t^(-n/2) Theta_{Z^n}(1/t). Both
/// sides are summed directly (no small-tau rerouting, which would make the
/// check circular).
inline double check_functional_equation(int n, double t) {
    if (!(t > 0.0)) throw std::domain_error("check_functional_equation: t must be positive");
    auto raw = [](double tt) {
        KahanSum s;
        s.add(1.0);
        for (double z = 1.0; z < 1e7; z += 1.0) {
            double term = 2.0 * std::exp(-kPi * tt * z * z);
            s.add(term);
            if (detail::tail_bound(tt, z + 1.0) < 1e-18 * s.value()) break;
        }
        return s.value();
    };
    double lhs = exp_guarded(n * std::log(raw(t)));
    double rhs = exp_guarded(-0.5 * n * std::log(t) + n * std::log(raw(1.0 / t)));
    return std::abs(lhs - rhs) / lhs;
}

/// sum_z exp(-pi tau (delta + z)^2) for delta in [0, 1).
inline ThetaValue theta_shifted_1d(double delta, double tau, double tol = kThetaTol) {
    if (!(tau > 0.0)) throw std::domain_error("theta_shifted_1d: tau must be positive");
    if (!(delta >= 0.0 && delta < 1.0))
        throw std::domain_error("theta_shifted_1d: delta must lie in [0, 1)");
    KahanSum s;
    double m = 0.0;
    double bound;
    for (;;) {
        s.add(std::exp(-kPi * tau * sq(delta + m)));        // z = m
        s.add(std::exp(-kPi * tau * sq(m + 1.0 - delta)));  // z = -(m+1)
        bound = detail::tail_bound(tau, delta + m + 1.0) +
                detail::tail_bound(tau, m + 2.0 - delta);
        if (bound < tol) break;
        m += 1.0;
    }
    return ThetaValue{s.value(), bound};
}

/// Theta series of the scaled mod-p lattice a(C(M) + p Z^n), by coset
/// decomposition: sum over distinct codewords c of
/// prod_i theta_shifted_1d(c_i / p, a^2 p^2 tau). The per-residue factors are
/// cached; duplicate codewords of a rank-deficient M are collapsed first.
inline ThetaValue theta_construction_a(const gf::GeneratorMatrix& M, uint64_t p, double a,
                                       double tau, uint64_t cap = gf::kEnumerationCap,
                                       double tol = kThetaTol) {
    if (M.p != p) throw std::invalid_argument("theta_construction_a: modulus mismatch");
    if (!(a > 0.0) || !(tau > 0.0))
        throw std::domain_error("theta_construction_a: a and tau must be positive");
    auto words = gf::enumerate_codewords(M, cap);
    std::set<std::vector<uint32_t>> distinct(words.begin(), words.end());

    double tau1 = a * a * static_cast<double>(p) * static_cast<double>(p) * tau;
    std::vector<ThetaValue> residue(p);
    for (uint64_t r = 0; r < p; ++r) {
        residue[r] = theta_shifted_1d(static_cast<double>(r) / static_cast<double>(p), tau1, tol);
    }

    KahanSum total;
    double err = 0.0;
    for (const auto& c : distinct) {
        double prod = 1.0;
        double rel = 0.0;
        for (uint32_t ci : c) {
            prod *= residue[ci].value;
            rel += residue[ci].abs_error / residue[ci].value;
        }
        total.add(prod);
        err += prod * rel;
    }
    return ThetaValue{total.value(), err};
}

/// Flatness factor from the fundamental volume and a theta value evaluated at
/// 1/(2 pi sigma^2). Analytically nonnegative; values inside the truncation
/// budget are clipped to 0 and flagged.
inline double flatness_factor(double lat_volume, int n, ThetaValue theta_at, double sigma,
                              bool* clipped = nullptr) {
    if (!(sigma > 0.0)) throw std::domain_error("flatness_factor: sigma must be positive");
    if (!(lat_volume > 0.0)) throw std::domain_error("flatness_factor: volume must be positive");
    double scale =
        exp_guarded(std::log(lat_volume) - 0.5 * n * std::log(2.0 * kPi * sigma * sigma));
    double v = scale * theta_at.value - 1.0;
    if (clipped != nullptr) *clipped = false;
    if (v < 0.0) {
        if (clipped != nullptr) *clipped = true;
        v = 0.0;
    }
    return v;
}

// -------------------------------------------------------------------------
// Exponents
// -------------------------------------------------------------------------

/// Sphere-packing function: (x - 1 - ln x)/2 on [1, inf), 0 below.
inline double e_sp(double x) {
    if (x < 1.0) return 0.0;
    return 0.5 * (x - 1.0 - std::log(x));
}

/// Unexpurgated Poltyrev exponent.
inline double e_p_un(double b) {
    if (!(b >= 1.0)) throw std::domain_error("e_p_un: b must be >= 1");
    if (b < 2.0) return e_sp(b);
    return 0.5 * std::log(kE * b / 4.0);
}

/// E_T(b) = E_sp^{-1}(E_P^un(b)); equals b on [1, 2], and never exceeds b.
inline double e_t(double b) {
    if (!(b >= 1.0)) throw std::domain_error("e_t: b must be >= 1");
    if (b <= 2.0) return b;
    double target = e_p_un(b);
    double lo = 1.0, hi = b;  // e_sp(b) >= target, so the root lies in [1, b]
    while (hi - lo > 1e-12) {
        double mid = 0.5 * (lo + hi);
        if (e_sp(mid) < target) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    return 0.5 * (lo + hi);
}

/// Chernoff bound on Pr(||W|| > r) for W with n iid N(0, sigma_w^2) entries.
inline double chernoff_tail(int n, double sigma_w, double r) {
    if (!(r > 0.0) || !(sigma_w > 0.0))
        throw std::domain_error("chernoff_tail: r and sigma_w must be positive");
    double x = r * r / (n * sigma_w * sigma_w);
    double e = -static_cast<double>(n) * e_sp(x);
    return (e < -745.0) ? 0.0 : std::exp(e);
}

/// Exact unit-ball volume pi^(n/2) / Gamma(n/2 + 1).
inline double ball_volume(int n) {
    if (n < 1) throw std::invalid_argument("ball_volume: n must be >= 1");
    return exp_guarded(0.5 * n * std::log(kPi) - std::lgamma(0.5 * n + 1.0));
}

/// Upper bound (1/sqrt(n pi)) (2 pi e / n)^(n/2); the exact volume never
/// exceeds it and the ratio tends to 1.
inline double ball_volume_bound(int n) {
    if (n < 1) throw std::invalid_argument("ball_volume_bound: n must be >= 1");
    return exp_guarded(-0.5 * std::log(n * kPi) + 0.5 * n * std::log(kTwoPiE / n));
}

// -------------------------------------------------------------------------
// Theta limit diagnostics
// -------------------------------------------------------------------------

struct ThetaLimitRow {
    int n = 0;
    double c_n = 0.0;
    double theta_minus_1 = 0.0;       // Theta_{Z^n}(c_n) - 1 (inf if out of range)
    double n_exp_diagnostic = 0.0;    // n * exp(-pi c_n)
};

/// Evaluates Theta_{Z^n}(c_n) - 1 along a schedule, with the n e^{-pi c_n}
/// diagnostic that governs whether the limit is 1.
inline std::vector<ThetaLimitRow> theta_limit_check(
    const std::vector<std::pair<int, double>>& schedule) {
    std::vector<ThetaLimitRow> rows;
    rows.reserve(schedule.size());
    for (const auto& [n, c] : schedule) {
        if (!(c > 0.0)) throw std::domain_error("theta_limit_check: c_n must be positive");
        ThetaLimitRow row;
        row.n = n;
        row.c_n = c;
        ThetaValue d = jacobi_theta_minus_1(c);
        double e = n * std::log1p(d.value);
        row.theta_minus_1 = (e > 700.0) ? std::numeric_limits<double>::infinity() : std::expm1(e);
        double diag = std::log(static_cast<double>(n)) - kPi * c;
        row.n_exp_diagnostic = (diag < -745.0) ? 0.0 : std::exp(diag);
        rows.push_back(row);
    }
    return rows;
}

}  // namespace lattigauss::theta
