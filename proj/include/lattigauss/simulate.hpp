#pragma once

#include <atomic>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include "lattigauss/bounds.hpp"
#include "lattigauss/gf.hpp"
#include "lattigauss/lattice.hpp"
#include "lattigauss/numeric.hpp"
#include "lattigauss/params.hpp"
#include "lattigauss/rng.hpp"
#include "lattigauss/theta.hpp"

// Monte Carlo and exhaustive verification: decoding error rates against the
// analytic bound, the counting/theta averaging inequalities on exhaustive
// small instances, h estimation, and the end-to-end lattice Gaussian coding
// experiment.
//
// Reproducibility: every trial batch draws from a counter-based stream keyed
// by (seed, family, batch index) and batches merge by integer summation, so
// results are bit-identical for a fixed (seed, trials, batch) at any worker
// count.
namespace lattigauss::sim {

struct TrialPlan {
    uint64_t seed = 1;
    uint64_t trials = 10000;
    int workers = 1;
    uint64_t batch = 1024;
};

struct ErrorEstimate {
    double p_hat = 0.0;
    double stderr_ = 0.0;
    uint64_t trials = 0;
};

namespace detail {

inline rng::Stream make_stream(uint64_t seed, uint64_t family, uint64_t index) {
    return rng::Stream(seed, (family << 40) ^ index);
}

/// Runs fn(batch_index, stream, trials_in_batch) over all batches on a small
/// worker pool; partial results land in a vector indexed by batch, which the
/// caller reduces in index order.
template <typename T, typename Fn>
inline std::vector<T> run_batches(const TrialPlan& plan, uint64_t family, Fn&& fn) {
    if (plan.trials == 0 || plan.batch == 0)
        throw std::invalid_argument("run_batches: trials and batch must be positive");
    uint64_t n_batches = (plan.trials + plan.batch - 1) / plan.batch;
    std::vector<T> results(n_batches);
    std::atomic<uint64_t> next{0};
    auto work = [&]() {
        for (;;) {
            uint64_t b = next.fetch_add(1);
            if (b >= n_batches) break;
            uint64_t first = b * plan.batch;
            uint64_t count = std::min(plan.batch, plan.trials - first);
            rng::Stream s = make_stream(plan.seed, family, b);
            results[b] = fn(b, s, count);
        }
    };
    int workers = std::max(1, plan.workers);
    if (workers == 1) {
        work();
    } else {
        std::vector<std::thread> pool;
        pool.reserve(static_cast<size_t>(workers));
        for (int w = 0; w < workers; ++w) pool.emplace_back(work);
        for (auto& t : pool) t.join();
    }
    return results;
}

inline ErrorEstimate estimate_from_errors(uint64_t errors, uint64_t trials) {
    ErrorEstimate e;
    e.trials = trials;
    e.p_hat = static_cast<double>(errors) / static_cast<double>(trials);
    e.stderr_ = std::sqrt(e.p_hat * (1.0 - e.p_hat) / static_cast<double>(trials));
    return e;
}

inline bool coords_zero(const std::vector<int64_t>& m) {
    for (int64_t x : m) {
        if (x != 0) return false;
    }
    return true;
}

}  // namespace detail

// stream families; values are arbitrary but fixed for reproducibility
inline constexpr uint64_t kFamilyDecode = 1;
inline constexpr uint64_t kFamilyMatrix = 2;
inline constexpr uint64_t kFamilyDirections = 3;
inline constexpr uint64_t kFamilyLg = 4;
inline constexpr uint64_t kFamilyLgPe = 5;
inline constexpr uint64_t kFamilyEnsembleBase = 16;

// -------------------------------------------------------------------------
// Decoding error estimation
// -------------------------------------------------------------------------

/// Pr(W not in V(Lambda)): draw W ~ N(0, sigma_w^2 I), decode, count nonzero
/// outcomes.
inline ErrorEstimate estimate_decode_error(const lattice::ConstructionALattice& lat,
                                           double sigma_w, const TrialPlan& plan,
                                           uint64_t family = kFamilyDecode) {
    const int n = lat.q.n;
    auto counts = detail::run_batches<uint64_t>(
        plan, family, [&](uint64_t, rng::Stream& s, uint64_t count) {
            uint64_t errors = 0;
            std::vector<double> w(static_cast<size_t>(n));
            for (uint64_t t = 0; t < count; ++t) {
                for (auto& x : w) x = sigma_w * s.normal();
                auto dec = lattice::decode_cvp(lat, w);
                if (!detail::coords_zero(dec.coords)) ++errors;
            }
            return errors;
        });
    uint64_t total = 0;
    for (uint64_t c : counts) total += c;
    return detail::estimate_from_errors(total, plan.trials);
}

/// Same error event for the scaled integer lattice a Z^n (componentwise
/// rounding is the exact decoder). n = 1 reproduces the closed form
/// 2 Q(a / (2 sigma)).
inline ErrorEstimate estimate_decode_error_zn(int n, double a, double sigma_w,
                                              const TrialPlan& plan,
                                              uint64_t family = kFamilyDecode) {
    auto counts = detail::run_batches<uint64_t>(
        plan, family, [&](uint64_t, rng::Stream& s, uint64_t count) {
            uint64_t errors = 0;
            for (uint64_t t = 0; t < count; ++t) {
                bool err = false;
                for (int i = 0; i < n; ++i) {
                    double w = sigma_w * s.normal();
                    if (std::round(w / a) != 0.0) err = true;
                }
                if (err) ++errors;
            }
            return errors;
        });
    uint64_t total = 0;
    for (uint64_t c : counts) total += c;
    return detail::estimate_from_errors(total, plan.trials);
}

// -------------------------------------------------------------------------
// Ensemble error vs bound
// -------------------------------------------------------------------------

struct EnsembleErrorReport {
    ErrorEstimate mean;                  // ensemble-averaged block error
    bounds::NNBoundReport bound;         // analytic upper bound
    std::vector<double> per_matrix;      // per-matrix p_hat
    bool vacuous = false;                // bound >= 1
    bool pass = false;                   // mean <= min(1, bound) + 3 stderr
};

inline EnsembleErrorReport ensemble_error_vs_bound(const params::ParameterQuadruple& q,
                                                   const gf::EnsembleSpec& ens, double sigma_w,
                                                   int matrices, const TrialPlan& plan) {
    q.validate();
    double eps = params::epsilon_of(q, sigma_w);
    if (!(eps > 0.0))
        throw std::domain_error("ensemble_error_vs_bound: quadruple must have positive epsilon");
    EnsembleErrorReport rep;
    rep.bound = bounds::b_nn_upper(q, sigma_w, eps);

    KahanSum mean_sum;
    KahanSum var_sum;
    for (int i = 0; i < matrices; ++i) {
        rng::Stream ms = detail::make_stream(plan.seed, kFamilyMatrix, static_cast<uint64_t>(i));
        gf::GeneratorMatrix M = gf::sample_matrix(ens, q, ms);
        auto lat = lattice::make_lattice(q, M);
        ErrorEstimate e = estimate_decode_error(lat, sigma_w, plan,
                                                kFamilyEnsembleBase + static_cast<uint64_t>(i));
        rep.per_matrix.push_back(e.p_hat);
        mean_sum.add(e.p_hat);
        var_sum.add(e.stderr_ * e.stderr_);
    }
    rep.mean.trials = plan.trials * static_cast<uint64_t>(matrices);
    rep.mean.p_hat = mean_sum.value() / matrices;
    rep.mean.stderr_ = std::sqrt(var_sum.value()) / matrices;
    rep.vacuous = rep.bound.total >= 1.0;
    rep.pass = rep.mean.p_hat <= std::min(1.0, rep.bound.total) + 3.0 * rep.mean.stderr_;
    return rep;
}

// -------------------------------------------------------------------------
// Exhaustive averaging checks (integer-exact)
// -------------------------------------------------------------------------

struct BallSpec {
    std::vector<double> center;
    double r = 0.0;
};

struct AveragingReport {
    int checks = 0;
    int violations = 0;
    double max_violation = -std::numeric_limits<double>::infinity();
    std::vector<std::string> failures;

    void record(bool ok, double slack, const std::string& what) {
        ++checks;
        max_violation = std::max(max_violation, slack);
        if (!ok) {
            ++violations;
            failures.push_back(what);
        }
    }
};

/// Counting-averaging inequalities over an exhaustive matrix ensemble:
/// both ensemble forms, plus the ball-count bound, the sublattice-distance
/// claim, and the density constant estimate. All comparisons are exact
/// 128-bit integer arithmetic.
inline AveragingReport verify_counting_averaging(const params::ParameterQuadruple& q,
                                                 const std::vector<BallSpec>& grid,
                                                 uint64_t cap = gf::kEnumerationCap) {
    q.validate();
    using u128 = unsigned __int128;
    AveragingReport rep;

    auto mats = gf::all_matrices(q.p, q.n, q.k, cap);
    std::vector<size_t> full_rank_idx;
    for (size_t i = 0; i < mats.size(); ++i) {
        if (gf::rank_fp(mats[i]) == q.k) full_rank_idx.push_back(i);
    }
    std::vector<lattice::ConstructionALattice> lats;
    lats.reserve(mats.size());
    for (const auto& M : mats) lats.push_back(lattice::make_lattice(q, M, cap));

    // exact collision counts over the uniform ensemble and the full-rank slice
    auto counts_all = gf::detail::collision_counts(mats, cap);
    std::vector<gf::GeneratorMatrix> fr_mats;
    for (size_t i : full_rank_idx) fr_mats.push_back(mats[i]);
    auto counts_fr = gf::detail::collision_counts(fr_mats, cap);

    u128 pk = 1, pn = 1, pnk_pairs = 1, pnmk = 1;
    for (int t = 0; t < q.k; ++t) pk *= q.p;
    for (int t = 0; t < q.n; ++t) pn *= q.p;
    for (int t = 0; t < q.n * q.k; ++t) pnk_pairs *= q.p;
    for (int t = 0; t < q.n - q.k; ++t) pnmk *= q.p;
    u128 xi_den = pnk_pairs * pk;          // denominator of Pr(U' u = y)
    u128 xi_num = counts_all[0];           // pairs with M u = 0
    u128 best_all = 0;
    for (size_t y = 1; y < counts_all.size(); ++y)
        best_all = std::max<u128>(best_all, counts_all[y]);
    u128 best_fr = 0;
    for (size_t y = 1; y < counts_fr.size(); ++y)
        best_fr = std::max<u128>(best_fr, counts_fr[y]);

    // density constant: (1 - xi) p^n / ((1 - p^(k-n))(p^n - 1)) < p/(p-1) <= 2
    {
        u128 lhs = (xi_den - xi_num) * pn * pnmk * (q.p - 1);
        u128 rhs = xi_den * (pnmk - 1) * (pn - 1) * q.p;
        rep.record(lhs < rhs, lhs < rhs ? -1.0 : 1.0, "density constant bound");
    }

    for (const auto& ball : grid) {
        if (ball.center.size() != static_cast<size_t>(q.n))
            throw std::invalid_argument("verify_counting_averaging: ball dimension mismatch");
        u128 n_zn = lattice::count_in_ball_zn(q.n, q.a, ball.center, ball.r);

        u128 sum_all = 0, sum_fr = 0;
        std::vector<uint64_t> per_matrix(mats.size());
        for (size_t i = 0; i < mats.size(); ++i) {
            per_matrix[i] = lattice::count_in_ball(lats[i], ball.center, ball.r,
                                                   lattice::Exclude::OriginAndSublattice);
            sum_all += per_matrix[i];
        }
        for (size_t i : full_rank_idx) sum_fr += per_matrix[i];

        // uniform-ensemble averaging: sum_M N_M <= max-count * N_zn
        {
            u128 lhs = sum_all;
            u128 rhs = best_all * n_zn;
            rep.record(lhs <= rhs, static_cast<double>(static_cast<long double>(lhs) -
                                                       static_cast<long double>(rhs)),
                       "uniform-ensemble counting bound");
        }
        // full-rank-ensemble averaging (scaled to clear all denominators):
        // A xi_den (p^(n-k)-1)(p^n-1) <= |FR| p^n (xi_den - xi_num) N_zn
        {
            u128 lhs = sum_fr * xi_den * (pnmk - 1) * (pn - 1);
            u128 rhs = static_cast<u128>(full_rank_idx.size()) * pn * (xi_den - xi_num) * n_zn;
            rep.record(lhs <= rhs, static_cast<double>(static_cast<long double>(lhs) -
                                                       static_cast<long double>(rhs)) /
                                       static_cast<double>(static_cast<long double>(xi_den)),
                       "full-rank-ensemble counting bound");
        }
        // ball-count bound on the ambient lattice
        {
            double zn_bound = theta::ball_volume(q.n) *
                              pow_log(ball.r / q.a + 0.5 * std::sqrt(static_cast<double>(q.n)),
                                      static_cast<double>(q.n));
            rep.record(static_cast<double>(n_zn) <= zn_bound,
                       static_cast<double>(n_zn) - zn_bound, "ball count bound");
        }
        // sublattice distance claim: a point of a p Z^n inside B(center, r)
        // forces ||center|| >= a p - r
        {
            uint64_t c_sub =
                lattice::count_in_ball_zn(q.n, q.a * static_cast<double>(q.p), ball.center, ball.r);
            double norm_c = 0.0;
            for (double x : ball.center) norm_c += x * x;
            norm_c = std::sqrt(norm_c);
            bool ok = (c_sub == 0) || (norm_c >= q.a * static_cast<double>(q.p) - ball.r);
            rep.record(ok, ok ? -1.0 : 1.0, "sublattice distance claim");
        }
    }
    return rep;
}

/// Randomized nonnegative-functional check of the full-rank-conditioning
/// inequality E[f(U')] >= E[f(U)] (1 - p^(k-n)), exhaustive over matrices.
inline AveragingReport verify_lemma_u(const params::ParameterQuadruple& q, uint64_t seed,
                                      int rounds = 8, uint64_t cap = gf::kEnumerationCap) {
    q.validate();
    AveragingReport rep;
    auto mats = gf::all_matrices(q.p, q.n, q.k, cap);
    std::vector<int> is_fr(mats.size());
    size_t fr_count = 0;
    for (size_t i = 0; i < mats.size(); ++i) {
        is_fr[i] = (gf::rank_fp(mats[i]) == q.k) ? 1 : 0;
        fr_count += static_cast<size_t>(is_fr[i]);
    }
    double pkn = std::exp(static_cast<double>(q.k - q.n) * std::log(static_cast<double>(q.p)));
    for (int round = 0; round < rounds; ++round) {
        rng::Stream s(seed, 0x1e44aULL + static_cast<uint64_t>(round));
        KahanSum all_sum, fr_sum;
        for (size_t i = 0; i < mats.size(); ++i) {
            double f = s.uniform() * 10.0;
            all_sum.add(f);
            if (is_fr[i]) fr_sum.add(f);
        }
        double mean_all = all_sum.value() / static_cast<double>(mats.size());
        double mean_fr = fr_sum.value() / static_cast<double>(fr_count);
        double slack = mean_fr * (1.0 - pkn) - mean_all;
        rep.record(slack <= 1e-12 * std::max(1.0, mean_all), slack, "full-rank conditioning bound");
    }
    return rep;
}

/// Theta and flatness averaging over an exhaustive ensemble, for each tau:
/// ensemble-mean theta against the collision-statistics bound, and
/// full-rank-mean flatness against the flatness bound.
inline AveragingReport verify_theta_averaging(const params::ParameterQuadruple& q,
                                              const gf::EnsembleSpec& ens,
                                              const std::vector<double>& taus,
                                              uint64_t cap = gf::kEnumerationCap) {
    q.validate();
    AveragingReport rep;

    std::vector<std::pair<gf::GeneratorMatrix, double>> weighted;
    switch (ens.kind) {
        case gf::EnsembleKind::AllMatrices: {
            auto mats = gf::all_matrices(q.p, q.n, q.k, cap);
            double w = 1.0 / static_cast<double>(mats.size());
            for (auto& m : mats) weighted.emplace_back(std::move(m), w);
            break;
        }
        case gf::EnsembleKind::FullRankOnly: {
            auto mats = gf::all_matrices(q.p, q.n, q.k, cap);
            std::vector<gf::GeneratorMatrix> fr;
            for (auto& m : mats) {
                if (gf::rank_fp(m) == q.k) fr.push_back(std::move(m));
            }
            double w = 1.0 / static_cast<double>(fr.size());
            for (auto& m : fr) weighted.emplace_back(std::move(m), w);
            break;
        }
        case gf::EnsembleKind::Explicit:
            weighted = ens.support;
            break;
    }
    gf::XiStats stats = gf::xi_stats(ens, q, cap);
    gf::XiStats stats_fr = gf::xi_stats(gf::EnsembleSpec::full_rank_only(), q, cap);

    for (double tau : taus) {
        KahanSum mean_theta;
        double budget = 0.0;
        for (const auto& [M, w] : weighted) {
            theta::ThetaValue tv = theta::theta_construction_a(M, q.p, q.a, tau, cap);
            mean_theta.add(w * tv.value);
            budget += w * tv.abs_error;
        }
        auto afl = bounds::a_fl(q, stats, tau);
        rep.record(mean_theta.value() <= afl.a_fl + budget + 1e-9 * afl.a_fl,
                   mean_theta.value() - afl.a_fl, "ensemble theta averaging bound");

        // full-rank flatness mean at sigma = 1/sqrt(2 pi tau) vs the flatness bound
        double sigma = 1.0 / std::sqrt(2.0 * kPi * tau);
        double v = params::volume(q);
        KahanSum mean_flat;
        double flat_budget = 0.0;
        auto fr_mats = gf::all_matrices(q.p, q.n, q.k, cap);
        size_t fr_count = 0;
        for (const auto& M : fr_mats) {
            if (gf::rank_fp(M) != q.k) continue;
            ++fr_count;
            theta::ThetaValue tv = theta::theta_construction_a(M, q.p, q.a, tau, cap);
            mean_flat.add(theta::flatness_factor(v, q.n, tv, sigma));
            flat_budget += tv.abs_error * v;
        }
        double mean_eps = mean_flat.value() / static_cast<double>(fr_count);
        double bfl = bounds::detail::b_fl_from_stats(q, tau, stats_fr);
        rep.record(mean_eps <= bfl + flat_budget + 1e-9 * std::max(1.0, std::abs(bfl)),
                   mean_eps - bfl, "full-rank flatness averaging bound");
    }
    return rep;
}

// -------------------------------------------------------------------------
// h estimation
// -------------------------------------------------------------------------

struct HEstimate {
    double mean = 0.0;
    double stderr_ = 0.0;
    uint64_t directions = 0;
};

/// Monte Carlo over directions of radius rho, ensemble-averaged expected
/// count of non-sublattice points within rho. The ensemble is enumerated
/// exhaustively when feasible, otherwise sampled (ensemble_samples > 0).
inline HEstimate estimate_h(const params::ParameterQuadruple& q, const gf::EnsembleSpec& ens,
                            double rho, uint64_t direction_samples, const TrialPlan& plan,
                            int ensemble_samples = 0, uint64_t cap = gf::kEnumerationCap) {
    q.validate();
    if (!(rho > 0.0)) throw std::domain_error("estimate_h: rho must be positive");

    std::vector<std::pair<lattice::ConstructionALattice, double>> lats;
    double bits = q.n * q.k * std::log2(static_cast<double>(q.p));
    if (ens.kind == gf::EnsembleKind::Explicit) {
        for (const auto& [M, w] : ens.support) lats.emplace_back(lattice::make_lattice(q, M, cap), w);
    } else if (bits <= std::log2(static_cast<double>(cap)) && ensemble_samples == 0) {
        auto mats = gf::all_matrices(q.p, q.n, q.k, cap);
        std::vector<gf::GeneratorMatrix> keep;
        for (auto& m : mats) {
            if (ens.kind == gf::EnsembleKind::AllMatrices || gf::rank_fp(m) == q.k)
                keep.push_back(std::move(m));
        }
        double w = 1.0 / static_cast<double>(keep.size());
        for (const auto& m : keep) lats.emplace_back(lattice::make_lattice(q, m, cap), w);
    } else {
        if (ensemble_samples <= 0)
            throw std::length_error("estimate_h: ensemble too large; pass ensemble_samples");
        double w = 1.0 / static_cast<double>(ensemble_samples);
        for (int i = 0; i < ensemble_samples; ++i) {
            rng::Stream ms = detail::make_stream(plan.seed, kFamilyMatrix, static_cast<uint64_t>(i));
            lats.emplace_back(lattice::make_lattice(q, gf::sample_matrix(ens, q, ms), cap), w);
        }
    }

    TrialPlan dplan = plan;
    dplan.trials = direction_samples;
    struct Partial {
        double sum = 0.0;
        double sum_sq = 0.0;
    };
    auto partials = detail::run_batches<Partial>(
        dplan, kFamilyDirections, [&](uint64_t, rng::Stream& s, uint64_t count) {
            Partial p;
            for (uint64_t t = 0; t < count; ++t) {
                std::vector<double> w = rng::sphere_point(s, q.n, rho);
                double val = 0.0;
                for (const auto& [lat, weight] : lats) {
                    val += weight * static_cast<double>(lattice::count_in_ball(
                                        lat, w, rho, lattice::Exclude::OriginAndSublattice));
                }
                p.sum += val;
                p.sum_sq += val * val;
            }
            return p;
        });
    KahanSum total, total_sq;
    for (const auto& p : partials) {
        total.add(p.sum);
        total_sq.add(p.sum_sq);
    }
    HEstimate h;
    h.directions = direction_samples;
    h.mean = total.value() / static_cast<double>(direction_samples);
    double var = total_sq.value() / static_cast<double>(direction_samples) - h.mean * h.mean;
    h.stderr_ = std::sqrt(std::max(0.0, var) / static_cast<double>(direction_samples));
    return h;
}

// -------------------------------------------------------------------------
// Lattice Gaussian coding experiment
// -------------------------------------------------------------------------

struct LgReport {
    ErrorEstimate map_error;
    ErrorEstimate euclid_error;       // mismatched nearest-point decoding of Y
    double bound = 0.0;               // (1+eps(sigma_tilde))/(1-eps(sigma_s)) * Pr-term
    double bound_stderr = 0.0;        // Monte Carlo part of the bound
    double rate_lb = 0.0;
    lattice::EntropyPair entropy;
    double power = 0.0;               // P = (1/n) E ||X - c||^2
    double eps_sigma_s = 0.0;
    double eps_sigma_tilde = 0.0;
    double sigma_w = 0.0;
    bool pass_bound = false;          // map <= bound within 3 combined stderr
};

/// End-to-end experiment: draw X from the lattice Gaussian, transmit over
/// AWGN, decode by exact posterior maximization over a certified candidate
/// window (discarded candidates have posterior weight below 1e-12 of the
/// maximum), and compare the block error rate against the analytic bound.
inline LgReport lg_experiment(const lattice::ConstructionALattice& lat, double sigma_s,
                              double sigma_z, const std::vector<double>& c,
                              const TrialPlan& plan) {
    const int n = lat.q.n;
    if (c.size() != static_cast<size_t>(n))
        throw std::invalid_argument("lg_experiment: center dimension mismatch");
    if (!(sigma_s > 0.0) || !(sigma_z > 0.0))
        throw std::domain_error("lg_experiment: sigma_s and sigma_z must be positive");

    LgReport rep;
    double sigma_tilde = params::sigma_tilde_of(sigma_s, sigma_z);
    rep.sigma_w = params::sigma_w_of(sigma_s, sigma_z);
    double v = lat.volume();

    auto flat_at = [&](double sigma) {
        double tau = 1.0 / (2.0 * kPi * sigma * sigma);
        theta::ThetaValue tv = theta::theta_construction_a(lat.M, lat.q.p, lat.q.a, tau);
        return theta::flatness_factor(v, n, tv, sigma);
    };
    rep.eps_sigma_s = flat_at(sigma_s);
    rep.eps_sigma_tilde = flat_at(sigma_tilde);
    if (!(rep.eps_sigma_s < 1.0))
        throw std::domain_error("lg_experiment: flatness factor at sigma_s must be below 1");

    auto tbl = lattice::discrete_gaussian(lat, sigma_s, c);
    rep.power = lattice::signal_power(tbl);
    rep.entropy = lattice::entropy_lattice_gaussian(tbl);
    rep.rate_lb = lattice::rate_lower_bound(lat, sigma_s, sigma_z, rep.eps_sigma_s, rep.power);

    // MAP decoding: the posterior f_{sigma_z}(Y - x) D(x) is a decreasing
    // function of the distance to the MMSE-shifted point, so the certified
    // window is a ball around it.
    const double alpha = sigma_s * sigma_s / (sigma_s * sigma_s + sigma_z * sigma_z);
    const double kappa = 1.0 / (sigma_z * sigma_z) + 1.0 / (sigma_s * sigma_s);
    const double window_gap2 = 2.0 * std::log(1e12) / kappa;

    struct Counts {
        uint64_t map_err = 0;
        uint64_t euclid_err = 0;
    };
    auto partials = detail::run_batches<Counts>(
        plan, kFamilyLg, [&](uint64_t, rng::Stream& s, uint64_t count) {
            Counts out;
            std::vector<double> y(static_cast<size_t>(n)), ytil(static_cast<size_t>(n));
            for (uint64_t t = 0; t < count; ++t) {
                size_t xi = lattice::sample_index(tbl, s.uniform());
                const auto& xm = tbl.points[xi];
                for (int i = 0; i < n; ++i) {
                    double x = lat.q.a * static_cast<double>(xm[static_cast<size_t>(i)]);
                    y[static_cast<size_t>(i)] = x + sigma_z * s.normal();
                    ytil[static_cast<size_t>(i)] = alpha * y[static_cast<size_t>(i)] +
                                                   (1.0 - alpha) * c[static_cast<size_t>(i)];
                }
                auto nearest = lattice::decode_cvp(lat, ytil);
                double r_window = std::sqrt(nearest.dist2 + window_gap2);
                auto candidates = lattice::points_in_ball(lat, ytil, r_window);
                double best_w = -std::numeric_limits<double>::infinity();
                const std::vector<int64_t>* best_m = nullptr;
                for (const auto& [m, d2] : candidates) {
                    double logw = -0.5 * kappa * d2;
                    if (logw > best_w) {
                        best_w = logw;
                        best_m = &m;
                    }
                }
                if (best_m == nullptr || *best_m != xm) ++out.map_err;
                auto euclid = lattice::decode_cvp(lat, y);
                if (euclid.coords != xm) ++out.euclid_err;
            }
            return out;
        });
    uint64_t map_total = 0, euclid_total = 0;
    for (const auto& p : partials) {
        map_total += p.map_err;
        euclid_total += p.euclid_err;
    }
    rep.map_error = detail::estimate_from_errors(map_total, plan.trials);
    rep.euclid_error = detail::estimate_from_errors(euclid_total, plan.trials);

    ErrorEstimate pe = estimate_decode_error(lat, rep.sigma_w, plan, kFamilyLgPe);
    double factor = (1.0 + rep.eps_sigma_tilde) / (1.0 - rep.eps_sigma_s);
    rep.bound = factor * pe.p_hat;
    rep.bound_stderr = factor * pe.stderr_;
    double comb = std::sqrt(rep.map_error.stderr_ * rep.map_error.stderr_ +
                            rep.bound_stderr * rep.bound_stderr);
    rep.pass_bound = rep.map_error.p_hat <= rep.bound + 3.0 * comb;
    return rep;
}

}  // namespace lattigauss::sim
