#pragma once

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <vector>

#include "lattigauss/gf.hpp"
#include "lattigauss/numeric.hpp"
#include "lattigauss/params.hpp"
#include "lattigauss/theta.hpp"

// The bound pipeline: radial counting bound on h, the v^NN rate function and
// its infimum over the critical interval, the decoding-error bound
// (Chernoff tail + integral term), and the ensemble-averaged flatness bounds.
// Every n-th-power term is assembled in log space; mixed-magnitude sums use
// compensated summation.
namespace lattigauss::bounds {

namespace detail {

/// sqrt(pi e / 2) / p^(1 - k/n), the recurring lattice-density ratio.
inline double density_ratio(const params::ParameterQuadruple& q) {
    double log_p = std::log(static_cast<double>(q.p));
    return std::exp(0.5 * std::log(kPi * kE / 2.0) - (1.0 - static_cast<double>(q.k) / q.n) * log_p);
}

inline double density_ratio_from_power(double p_pow) {
    return std::sqrt(kPi * kE / 2.0) / p_pow;
}

}  // namespace detail

// -------------------------------------------------------------------------
// h bound and v^NN
// -------------------------------------------------------------------------

/// Upper bound on the conditional expected count of near-lattice points at
/// radius rho:  (2/sqrt(pi n)) (rho sqrt(2 pi e)/(sqrt(n) V^(1/n)) + ratio)^n.
inline double h_upper(const params::ParameterQuadruple& q, double sigma_w, double rho) {
    (void)sigma_w;  // enters only through the caller's choice of rho
    q.validate();
    if (!(rho > 0.0)) throw std::domain_error("h_upper: rho must be positive");
    double v_1n = std::exp(params::log_volume(q) / q.n);
    double base = rho * std::sqrt(2.0 * kPi * kE) / (std::sqrt(static_cast<double>(q.n)) * v_1n) +
                  detail::density_ratio(q);
    double e = std::log(2.0) - 0.5 * std::log(kPi * q.n) + q.n * std::log(base);
    return (e < -745.0) ? 0.0 : exp_guarded(e);
}

/// v^NN(u, eps) = E_sp(u^2/(n sigma^2))
///             - ((n-1)/n) log( u / sqrt(n sigma^2 (1+eps)) + ratio ),
/// with the density ratio passed as p^(1-k/n).
inline double v_nn_from_power(int n, double sigma_w, double p_pow, double u, double epsilon) {
    if (!(u > 0.0)) throw std::domain_error("v_nn: u must be positive");
    if (!(epsilon > 0.0)) throw std::domain_error("v_nn: epsilon must be positive");
    double ns2 = n * sigma_w * sigma_w;
    double r = detail::density_ratio_from_power(p_pow);
    return theta::e_sp(u * u / ns2) -
           (static_cast<double>(n - 1) / n) * std::log(u / std::sqrt(ns2 * (1.0 + epsilon)) + r);
}

inline double v_nn(const params::ParameterQuadruple& q, double sigma_w, double u, double epsilon) {
    q.validate();
    double p_pow = std::exp((1.0 - static_cast<double>(q.k) / q.n) *
                            std::log(static_cast<double>(q.p)));
    return v_nn_from_power(q.n, sigma_w, p_pow, u, epsilon);
}

struct InfResult {
    double u_star = 0.0;
    double value = 0.0;
};

/// Golden-section minimization of v^NN over C = [sqrt(n s^2), sqrt(n s^2 (1+eps))].
/// v^NN is strictly convex in u, so the section search is exact up to the
/// interval tolerance.
inline InfResult inf_v_nn_from_power(int n, double sigma_w, double p_pow, double epsilon) {
    if (!(epsilon > 0.0)) throw std::domain_error("inf_v_nn: epsilon must be positive");
    double lo = std::sqrt(n * sigma_w * sigma_w);
    double hi = std::sqrt(n * sigma_w * sigma_w * (1.0 + epsilon));
    auto f = [&](double u) { return v_nn_from_power(n, sigma_w, p_pow, u, epsilon); };
    const double inv_phi = 0.6180339887498949;
    double a = lo, b = hi;
    double x1 = b - inv_phi * (b - a);
    double x2 = a + inv_phi * (b - a);
    double f1 = f(x1), f2 = f(x2);
    double tol = 1e-10 * (hi - lo);
    while (b - a > tol) {
        if (f1 < f2) {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - inv_phi * (b - a);
            f1 = f(x1);
        } else {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + inv_phi * (b - a);
            f2 = f(x2);
        }
    }
    InfResult r;
    r.u_star = 0.5 * (a + b);
    r.value = f(r.u_star);
    // the infimum never exceeds the endpoint values
    double fe = std::min(f(lo), f(hi));
    if (fe < r.value) {
        r.value = fe;
        r.u_star = (f(lo) <= f(hi)) ? lo : hi;
    }
    return r;
}

inline InfResult inf_v_nn(const params::ParameterQuadruple& q, double sigma_w, double epsilon) {
    q.validate();
    double p_pow = std::exp((1.0 - static_cast<double>(q.k) / q.n) *
                            std::log(static_cast<double>(q.p)));
    return inf_v_nn_from_power(q.n, sigma_w, p_pow, epsilon);
}

/// Integral-term bound:
///   ratio^n + n ( (1/sqrt(1+eps) + ratio)^n + exp(-n inf v^NN) ).
inline double ip_upper(const params::ParameterQuadruple& q, double sigma_w, double epsilon) {
    q.validate();
    if (!(epsilon > 0.0)) throw std::domain_error("ip_upper: epsilon must be positive");
    double r = detail::density_ratio(q);
    InfResult inf = inf_v_nn(q, sigma_w, epsilon);
    KahanSum s;
    double e1 = q.n * std::log(r);
    s.add(e1 < -745.0 ? 0.0 : std::exp(e1));
    double e2 = std::log(static_cast<double>(q.n)) +
                q.n * std::log(1.0 / std::sqrt(1.0 + epsilon) + r);
    s.add(e2 < -745.0 ? 0.0 : exp_guarded(e2));
    double e3 = std::log(static_cast<double>(q.n)) - q.n * inf.value;
    s.add(e3 < -745.0 ? 0.0 : exp_guarded(e3));
    return s.value();
}

// -------------------------------------------------------------------------
// Nearest-neighbor decoding bound
// -------------------------------------------------------------------------

struct NNBoundReport {
    double chernoff_term = 0.0;  // Pr(||W|| > a p / 2) bound
    double ip_bound = 0.0;       // integral-term bound
    double inf_v = 0.0;          // minimized v^NN over the critical interval
    double u_star = 0.0;
    double total = 0.0;          // chernoff_term + ip_bound
    double exponent = 0.0;       // -log(total)/n
};

/// Full decoding-error bound at (q, sigma_w). epsilon must be the margin the
/// quadruple actually realizes (volume^(2/n)/(2 pi e sigma_w^2) - 1).
inline NNBoundReport b_nn_upper(const params::ParameterQuadruple& q, double sigma_w,
                                double epsilon) {
    q.validate();
    double eps_actual = params::epsilon_of(q, sigma_w);
    if (std::abs(eps_actual - epsilon) > 1e-6 * std::max(1.0, std::abs(epsilon)))
        throw std::invalid_argument("b_nn_upper: epsilon inconsistent with quadruple");
    if (!(epsilon > 0.0)) throw std::domain_error("b_nn_upper: epsilon must be positive");
    NNBoundReport rep;
    rep.chernoff_term = theta::chernoff_tail(q.n, sigma_w, q.a * static_cast<double>(q.p) / 2.0);
    InfResult inf = inf_v_nn(q, sigma_w, epsilon);
    rep.inf_v = inf.value;
    rep.u_star = inf.u_star;
    rep.ip_bound = ip_upper(q, sigma_w, epsilon);
    rep.total = rep.chernoff_term + rep.ip_bound;
    rep.exponent = -std::log(rep.total) / q.n;
    return rep;
}

// -------------------------------------------------------------------------
// Flatness bounds
// -------------------------------------------------------------------------

struct FlatnessBoundReport {
    double a_fl = 0.0;        // ensemble theta bound, direct form
    double a_fl_dual = 0.0;   // same quantity through the functional equation
    double theta_small = 0.0; // Theta_{Z^n}(a^2 tau)
    double theta_big = 0.0;   // Theta_{Z^n}(a^2 p^2 tau)
    double b_fl = 0.0;        // ensemble flatness bound (set by b_fl ops)
};

/// A^Fl(G, tau) = p^k xi_max Theta_{Z^n}(a^2 tau)
///             + p^k (xi_zero - xi_max) Theta_{Z^n}(a^2 p^2 tau),
/// computed in both the direct and the dual (functional-equation) form. The
/// two agree identically in exact arithmetic; disagreement beyond 1e-8
/// signals theta truncation failure and throws.
inline FlatnessBoundReport a_fl(const params::ParameterQuadruple& q, const gf::XiStats& stats,
                                double tau) {
    q.validate();
    if (!(tau > 0.0)) throw std::domain_error("a_fl: tau must be positive");
    const int n = q.n;
    const double log_p = std::log(static_cast<double>(q.p));
    const double a2tau = q.a * q.a * tau;
    const double big_tau = a2tau * static_cast<double>(q.p) * static_cast<double>(q.p);

    theta::LogTheta lt_small = theta::log_theta_zn(n, a2tau);
    theta::LogTheta lt_big = theta::log_theta_zn(n, big_tau);
    theta::LogTheta lt_dual = theta::log_theta_zn(n, 1.0 / a2tau);

    FlatnessBoundReport rep;
    rep.theta_small = exp_guarded(lt_small.log_value);
    rep.theta_big = exp_guarded(lt_big.log_value);

    double term2 = 0.0;
    double diff = stats.xi_zero - stats.xi_max;
    if (diff > 0.0) {
        term2 = exp_guarded(q.k * log_p + std::log(diff) + lt_big.log_value);
    }
    double term1 = 0.0, term1_dual = 0.0;
    if (stats.xi_max > 0.0) {
        term1 = exp_guarded(q.k * log_p + std::log(stats.xi_max) + lt_small.log_value);
        term1_dual = exp_guarded(-params::log_volume(q) + n * log_p - 0.5 * n * std::log(tau) +
                                 std::log(stats.xi_max) + lt_dual.log_value);
    }
    rep.a_fl = term1 + term2;
    rep.a_fl_dual = term1_dual + term2;
    if (!nearly_equal_rel(rep.a_fl, rep.a_fl_dual, 1e-8))
        throw std::runtime_error("a_fl: direct and dual forms disagree beyond 1e-8");
    return rep;
}

namespace detail {

/// Ensemble flatness bound V tau^(n/2) A^Fl / (1 - p^(k-n)) - 1, assembled
/// through the dual form so the near-1 regime keeps full precision:
///   V tau^(n/2) A^Fl = p^n xi_max Theta(1/(a^2 tau))
///                    + (a^2 p^2 tau)^(n/2) (xi0 - xi_max) Theta(a^2 p^2 tau).
inline double b_fl_from_stats(const params::ParameterQuadruple& q, double tau,
                              const gf::XiStats& stats) {
    const int n = q.n;
    const double log_p = std::log(static_cast<double>(q.p));
    const double a2tau = q.a * q.a * tau;
    const double big_tau = a2tau * static_cast<double>(q.p) * static_cast<double>(q.p);
    theta::LogTheta lt_dual = theta::log_theta_zn(n, 1.0 / a2tau);
    theta::LogTheta lt_big = theta::log_theta_zn(n, big_tau);

    double s1 = n * log_p + std::log(stats.xi_max) + lt_dual.log_value;
    double term1 = (stats.xi_max > 0.0) ? exp_guarded(s1) : 0.0;
    double diff = stats.xi_zero - stats.xi_max;
    double term2 = 0.0;
    if (diff > 0.0) {
        double s2 = 0.5 * n * std::log(big_tau) + std::log(diff) + lt_big.log_value;
        term2 = (s2 < -745.0) ? 0.0 : exp_guarded(s2);
    }
    double d = std::exp(static_cast<double>(q.k - q.n) * log_p);  // p^(k-n)
    // (term1 + term2)/(1-d) - 1  ==  ((term1 - 1) + term2 + d) / (1 - d)
    double term1_minus_1 =
        (stats.xi_max > 0.0 && std::abs(s1) < 0.5) ? std::expm1(s1) : term1 - 1.0;
    return (term1_minus_1 + term2 + d) / (1.0 - d);
}

}  // namespace detail

/// Flatness bound with exact full-rank collision statistics at desk scale,
/// falling back to the uniform-ensemble surrogate (which the proof chain
/// itself uses) when exhaustive enumeration is infeasible.
inline double b_fl(const params::ParameterQuadruple& q, double tau,
                   uint64_t cap = gf::kEnumerationCap) {
    q.validate();
    if (!(tau > 0.0)) throw std::domain_error("b_fl: tau must be positive");
    bool exhaustive = true;
    {
        int cells = q.n * q.k;
        double bits = cells * std::log2(static_cast<double>(q.p));
        if (bits > std::log2(static_cast<double>(cap))) exhaustive = false;
    }
    gf::XiStats stats = exhaustive
                            ? gf::xi_stats(gf::EnsembleSpec::full_rank_only(), q, cap)
                            : gf::xi_stats(gf::EnsembleSpec::all_matrices(), q, cap);
    return detail::b_fl_from_stats(q, tau, stats);
}

/// Surrogate-only variant (uniform-ensemble statistics), used at schedule
/// scale regardless of instance size.
inline double b_fl_surrogate(const params::ParameterQuadruple& q, double tau) {
    q.validate();
    if (!(tau > 0.0)) throw std::domain_error("b_fl_surrogate: tau must be positive");
    gf::XiStats stats = gf::xi_stats(gf::EnsembleSpec::all_matrices(), q);
    return detail::b_fl_from_stats(q, tau, stats);
}

// -------------------------------------------------------------------------
// Schedule-level checks
// -------------------------------------------------------------------------

struct FfCheckRow {
    int n = 0;
    double tau = 0.0;
    double f = 0.0;
    double g = 0.0;
    double b_fl = 0.0;
    double tau1_v2n = 0.0;     // tau_1 * volume^(2/n) at this n
    double log_p_nk = 0.0;     // (n - k) log p, the growth diagnostic
    bool hypotheses_ok = true; // tau ordering, tau_1 V^(2/n) < 1
};

/// Evaluates the flatness-theorem hypotheses and the resulting b_fl along a
/// schedule, one row per (n, tau_j).
inline std::vector<FfCheckRow> theorem_ff_check(const params::ParameterSchedule& schedule,
                                                const std::vector<double>& taus) {
    schedule.validate();
    if (taus.empty()) throw std::invalid_argument("theorem_ff_check: empty tau list");
    for (size_t j = 1; j < taus.size(); ++j) {
        if (!(taus[j - 1] > taus[j]) || !(taus[j] > 0.0))
            throw std::invalid_argument("theorem_ff_check: taus must be strictly decreasing and positive");
    }
    std::vector<FfCheckRow> rows;
    for (const auto& entry : schedule.entries) {
        const auto& q = entry.q;
        double v2n = std::exp(2.0 / q.n * params::log_volume(q));
        double t1v = taus.front() * v2n;
        double log_pnk = (q.n - q.k) * std::log(static_cast<double>(q.p));
        for (double tau : taus) {
            FfCheckRow row;
            row.n = q.n;
            row.tau = tau;
            auto fg = params::ff_f_g(q, tau);
            row.f = fg.f;
            row.g = fg.g;
            row.b_fl = b_fl_surrogate(q, tau);
            row.tau1_v2n = t1v;
            row.log_p_nk = log_pnk;
            row.hypotheses_ok = (t1v < 1.0);
            rows.push_back(row);
        }
    }
    return rows;
}

struct VnnGapRow {
    int n = 0;
    double p_pow = 0.0;  // p^(1 - k/n)
    double inf_v = 0.0;
    double target = 0.0;  // E_P^un(1 + b)
    double gap = 0.0;
};

/// Gap table |inf v^NN - E_P^un(1+b)| along a schedule of (n, p^(1-k/n)).
inline std::vector<VnnGapRow> lemma_vnn_convergence(
    double b, const std::vector<std::pair<int, double>>& schedule, double sigma_w = 1.0) {
    if (!(b > 0.0)) throw std::domain_error("lemma_vnn_convergence: b must be positive");
    double target = theta::e_p_un(1.0 + b);
    std::vector<VnnGapRow> rows;
    for (const auto& [n, p_pow] : schedule) {
        VnnGapRow row;
        row.n = n;
        row.p_pow = p_pow;
        row.inf_v = inf_v_nn_from_power(n, sigma_w, p_pow, b).value;
        row.target = target;
        row.gap = std::abs(row.inf_v - target);
        rows.push_back(row);
    }
    return rows;
}

}  // namespace lattigauss::bounds
