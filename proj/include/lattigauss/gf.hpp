#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <stdexcept>
#include <vector>

#include "lattigauss/numeric.hpp"
#include "lattigauss/params.hpp"
#include "lattigauss/rng.hpp"

// Linear algebra over F_p, codeword enumeration, random-matrix ensembles and
// their rank/collision statistics, and the q-Pochhammer machinery behind the
// rank law. Exhaustive quantities on small instances are integer counts
// divided once at the end, so oracle comparisons carry no float accumulation.
namespace lattigauss::gf {

inline constexpr uint64_t kEnumerationCap = uint64_t{1} << 22;

// -------------------------------------------------------------------------
// Matrices over F_p
// -------------------------------------------------------------------------

struct GeneratorMatrix {
    uint64_t p = 0;
    int n = 0;  // rows
    int k = 0;  // cols
    std::vector<uint32_t> entries;  // row-major, values in [0, p)

    uint32_t at(int i, int j) const { return entries[static_cast<size_t>(i) * k + j]; }
    uint32_t& at(int i, int j) { return entries[static_cast<size_t>(i) * k + j]; }

    static GeneratorMatrix zero(uint64_t p, int n, int k) {
        GeneratorMatrix m;
        m.p = p;
        m.n = n;
        m.k = k;
        m.entries.assign(static_cast<size_t>(n) * k, 0);
        return m;
    }

    void validate() const {
        if (n < 1 || k < 1) throw std::invalid_argument("matrix: empty shape");
        if (entries.size() != static_cast<size_t>(n) * k)
            throw std::invalid_argument("matrix: entry count does not match shape");
        for (uint32_t e : entries) {
            if (e >= p) throw std::invalid_argument("matrix: entry out of [0, p)");
        }
    }

    bool operator==(const GeneratorMatrix& o) const {
        return p == o.p && n == o.n && k == o.k && entries == o.entries;
    }
};

/// (M x) mod p.
inline std::vector<uint32_t> matvec(const GeneratorMatrix& M, const std::vector<uint32_t>& x) {
    if (x.size() != static_cast<size_t>(M.k))
        throw std::invalid_argument("matvec: vector length does not match matrix columns");
    std::vector<uint32_t> y(static_cast<size_t>(M.n));
    for (int i = 0; i < M.n; ++i) {
        uint64_t acc = 0;
        for (int j = 0; j < M.k; ++j) {
            acc += static_cast<uint64_t>(M.at(i, j)) * x[static_cast<size_t>(j)];
        }
        y[static_cast<size_t>(i)] = static_cast<uint32_t>(acc % M.p);
    }
    return y;
}

/// Rank over F_p by Gaussian elimination with modular inverses.
inline int rank_fp(const GeneratorMatrix& M) {
    std::vector<uint64_t> a(M.entries.begin(), M.entries.end());
    const uint64_t p = M.p;
    auto at = [&](int i, int j) -> uint64_t& { return a[static_cast<size_t>(i) * M.k + j]; };
    int rank = 0;
    for (int col = 0; col < M.k && rank < M.n; ++col) {
        int pivot = -1;
        for (int i = rank; i < M.n; ++i) {
            if (at(i, col) != 0) {
                pivot = i;
                break;
            }
        }
        if (pivot < 0) continue;
        for (int j = 0; j < M.k; ++j) std::swap(at(pivot, j), at(rank, j));
        uint64_t inv = params::detail::powmod_u64(at(rank, col), p - 2, p);
        for (int j = 0; j < M.k; ++j) at(rank, j) = at(rank, j) * inv % p;
        for (int i = 0; i < M.n; ++i) {
            if (i == rank || at(i, col) == 0) continue;
            uint64_t f = at(i, col);
            for (int j = 0; j < M.k; ++j) {
                at(i, j) = (at(i, j) + (p - f) * at(rank, j)) % p;
            }
        }
        ++rank;
    }
    return rank;
}

/// p^e with overflow check, for cap arithmetic.
inline uint64_t pow_u64_checked(uint64_t p, int e) {
    uint64_t r = 1;
    for (int i = 0; i < e; ++i) {
        if (r > UINT64_MAX / p) throw std::overflow_error("pow_u64_checked: overflow");
        r *= p;
    }
    return r;
}

/// Message-indexed codeword list: entry t is M x_t where x_t is the t-th
/// vector of F_p^k in lexicographic order (x_0 = 0). Not deduplicated; a
/// rank-deficient M repeats codewords, and downstream tie-breaks rely on the
/// message indexing.
inline std::vector<std::vector<uint32_t>> enumerate_codewords(
    const GeneratorMatrix& M, uint64_t cap = kEnumerationCap) {
    uint64_t total = pow_u64_checked(M.p, M.k);
    if (total > cap) throw std::length_error("enumerate_codewords: p^k exceeds enumeration cap");
    std::vector<std::vector<uint32_t>> out;
    out.reserve(total);
    std::vector<uint32_t> x(static_cast<size_t>(M.k), 0);
    for (uint64_t t = 0;; ++t) {
        out.push_back(matvec(M, x));
        if (t + 1 == total) break;
        // lexicographic odometer, last coordinate fastest
        for (int j = M.k - 1; j >= 0; --j) {
            if (++x[static_cast<size_t>(j)] < M.p) break;
            x[static_cast<size_t>(j)] = 0;
        }
    }
    return out;
}

// -------------------------------------------------------------------------
// Ensembles
// -------------------------------------------------------------------------

enum class EnsembleKind { AllMatrices, FullRankOnly, Explicit };

struct EnsembleSpec {
    EnsembleKind kind = EnsembleKind::AllMatrices;
    std::vector<std::pair<GeneratorMatrix, double>> support;  // Explicit only

    static EnsembleSpec all_matrices() { return EnsembleSpec{EnsembleKind::AllMatrices, {}}; }
    static EnsembleSpec full_rank_only() { return EnsembleSpec{EnsembleKind::FullRankOnly, {}}; }
    static EnsembleSpec explicit_dist(std::vector<std::pair<GeneratorMatrix, double>> s) {
        EnsembleSpec e{EnsembleKind::Explicit, std::move(s)};
        double total = 0.0;
        for (const auto& [m, w] : e.support) {
            m.validate();
            if (w < 0.0) throw std::invalid_argument("ensemble: negative probability");
            total += w;
        }
        if (std::abs(total - 1.0) > 1e-12)
            throw std::invalid_argument("ensemble: probabilities must sum to 1");
        return e;
    }
};

inline GeneratorMatrix sample_matrix(const EnsembleSpec& ens, const params::ParameterQuadruple& q,
                                     rng::Stream& stream) {
    switch (ens.kind) {
        case EnsembleKind::AllMatrices: {
            GeneratorMatrix m = GeneratorMatrix::zero(q.p, q.n, q.k);
            for (auto& e : m.entries) e = static_cast<uint32_t>(stream.below(q.p));
            return m;
        }
        case EnsembleKind::FullRankOnly: {
            // acceptance probability exceeds 1 - p^(k-n), so this terminates fast
            for (;;) {
                GeneratorMatrix m = GeneratorMatrix::zero(q.p, q.n, q.k);
                for (auto& e : m.entries) e = static_cast<uint32_t>(stream.below(q.p));
                if (rank_fp(m) == q.k) return m;
            }
        }
        case EnsembleKind::Explicit: {
            double u = stream.uniform();
            double acc = 0.0;
            for (const auto& [m, w] : ens.support) {
                acc += w;
                if (u < acc) return m;
            }
            return ens.support.back().first;
        }
    }
    throw std::logic_error("sample_matrix: unreachable");
}

/// All matrices of F_p^{n x k} in a fixed lexicographic order, for exhaustive
/// small-instance checks.
inline std::vector<GeneratorMatrix> all_matrices(uint64_t p, int n, int k,
                                                 uint64_t cap = kEnumerationCap) {
    int cells = n * k;
    uint64_t total = pow_u64_checked(p, cells);
    if (total > cap) throw std::length_error("all_matrices: p^(nk) exceeds cap");
    std::vector<GeneratorMatrix> out;
    out.reserve(total);
    GeneratorMatrix m = GeneratorMatrix::zero(p, n, k);
    for (uint64_t t = 0;; ++t) {
        out.push_back(m);
        if (t + 1 == total) break;
        for (int c = cells - 1; c >= 0; --c) {
            if (++m.entries[static_cast<size_t>(c)] < p) break;
            m.entries[static_cast<size_t>(c)] = 0;
        }
    }
    return out;
}

// -------------------------------------------------------------------------
// q-Pochhammer and the rank law
// -------------------------------------------------------------------------

inline constexpr int kPochhammerInfinite = -1;

/// (a; q)_m, with m = kPochhammerInfinite for the infinite product. The
/// infinite product truncates once |a q^l| < 1e-17; the dropped tail is a
/// relative error below |a q^L| / (1 - |q|).
inline double pochhammer(double a, double q, int m) {
    if (m == kPochhammerInfinite) {
        if (!(std::abs(q) < 1.0))
            throw std::domain_error("pochhammer: infinite product requires |q| < 1");
        double prod = 1.0;
        double term = a;
        while (std::abs(term) >= 1e-17) {
            prod *= (1.0 - term);
            term *= q;
        }
        return prod;
    }
    if (m < 0) throw std::domain_error("pochhammer: m must be >= 0 or infinite");
    double prod = 1.0;
    double term = a;
    for (int l = 0; l < m; ++l) {
        prod *= (1.0 - term);
        term *= q;
    }
    return prod;
}

/// Euler function phi(q) = (q; q)_inf.
inline double euler_phi(double q) { return pochhammer(q, q, kPochhammerInfinite); }

namespace detail {

/// log (1/p; 1/p)_m = sum_{l=1..m} log(1 - p^-l).
inline double log_pochhammer_inv_p(uint64_t p, int m) {
    double s = 0.0;
    double t = 1.0 / static_cast<double>(p);
    for (int l = 1; l <= m; ++l) {
        s += std::log1p(-t);
        t /= static_cast<double>(p);
        if (t < 1e-300) {
            // remaining factors are 1 to double precision
            break;
        }
    }
    return s;
}

}  // namespace detail

/// Pr(rank = j) for a uniform matrix over F_p^{n x k}, via the Pochhammer
/// form of the rank law, assembled in log space.
inline double rank_distribution(int n, int k, uint64_t p, int j) {
    if (n < 1 || k < 1) throw std::invalid_argument("rank_distribution: bad shape");
    if (j < 0 || j > std::min(n, k))
        throw std::out_of_range("rank_distribution: j outside [0, min(n,k)]");
    double log_p = std::log(static_cast<double>(p));
    double lp = -static_cast<double>(n - j) * (k - j) * log_p;
    lp += detail::log_pochhammer_inv_p(p, n) + detail::log_pochhammer_inv_p(p, k);
    lp -= detail::log_pochhammer_inv_p(p, j) + detail::log_pochhammer_inv_p(p, n - j) +
          detail::log_pochhammer_inv_p(p, k - j);
    return std::exp(lp);
}

/// Exact rank-law numerator over denominator p^(nk):
///   prod_{i<j} (p^n - p^i)(p^(k-i) - 1) / prod_{i<j} (p^(i+1) - 1).
/// Only valid at desk scale (the numerator must fit 128 bits).
inline unsigned __int128 rank_count_exact(int n, int k, uint64_t p, int j) {
    if (j < 0 || j > std::min(n, k)) throw std::out_of_range("rank_count_exact: bad j");
    unsigned __int128 num = 1;
    for (int i = 0; i < j; ++i) {
        unsigned __int128 pn = 1, pi = 1, pki = 1;
        for (int t = 0; t < n; ++t) pn *= p;
        for (int t = 0; t < i; ++t) pi *= p;
        for (int t = 0; t < k - i; ++t) pki *= p;
        num *= (pn - pi);
        num *= (pki - 1);
    }
    for (int i = 0; i < j; ++i) {
        unsigned __int128 d = 1;
        for (int t = 0; t < i + 1; ++t) d *= p;
        num /= (d - 1);  // divides exactly (Gaussian binomial structure)
    }
    return num;
}

/// xi = sum_j p^-j Pr(rank = j): the collision probability Pr(U' u = 0) for
/// the uniform ensemble.
inline double xi_zero_uniform(int n, int k, uint64_t p) {
    KahanSum s;
    double log_p = std::log(static_cast<double>(p));
    for (int j = 0; j <= std::min(n, k); ++j) {
        double lp = std::log(rank_distribution(n, k, p, j)) - j * log_p;
        s.add(std::exp(lp));
    }
    return s.value();
}

/// Pr(rank = k) for the uniform ensemble; checks the lower bound 1 - p^(k-n).
inline double full_rank_mass(int n, int k, uint64_t p) {
    if (k > n) throw std::invalid_argument("full_rank_mass: k must be <= n");
    double mass = rank_distribution(n, k, p, k);
    double lb = 1.0 - exp_guarded(static_cast<double>(k - n) * std::log(static_cast<double>(p)));
    if (!(mass > lb)) throw std::runtime_error("full_rank_mass: rank-law lower bound violated");
    return mass;
}

// -------------------------------------------------------------------------
// Collision statistics
// -------------------------------------------------------------------------

struct XiStats {
    double xi_zero = 0.0;  // Pr(G u = 0)
    double xi_max = 0.0;   // max over nonzero y of Pr(G u = y)
};

namespace detail {

/// Exact pair counts: for each y in F_p^n (encoded in lexicographic order),
/// the number of (M, u) pairs with M u = y, M ranging over `mats`.
/// Denominator is |mats| * p^k.
inline std::vector<uint64_t> collision_counts(const std::vector<GeneratorMatrix>& mats,
                                              uint64_t cap = kEnumerationCap) {
    if (mats.empty()) throw std::invalid_argument("collision_counts: empty matrix list");
    const uint64_t p = mats.front().p;
    const int n = mats.front().n;
    uint64_t space = pow_u64_checked(p, n);
    if (space > cap) throw std::length_error("collision_counts: p^n exceeds cap");
    std::vector<uint64_t> counts(space, 0);
    for (const auto& M : mats) {
        auto words = enumerate_codewords(M, cap);
        for (const auto& y : words) {
            uint64_t idx = 0;
            for (uint32_t c : y) idx = idx * p + c;
            ++counts[idx];
        }
    }
    return counts;
}

inline XiStats xi_from_counts(const std::vector<uint64_t>& counts, double denom) {
    XiStats s;
    s.xi_zero = static_cast<double>(counts[0]) / denom;
    uint64_t best = 0;
    for (size_t i = 1; i < counts.size(); ++i) best = std::max(best, counts[i]);
    s.xi_max = static_cast<double>(best) / denom;
    return s;
}

}  // namespace detail

/// Collision statistics of G u for the given ensemble. AllMatrices uses the
/// closed forms; FullRankOnly and Explicit enumerate exactly and therefore
/// require desk-scale instances. The uniform ensemble satisfies
/// xi_max (p^n - 1) + xi_zero = 1 exactly.
inline XiStats xi_stats(const EnsembleSpec& ens, const params::ParameterQuadruple& q,
                        uint64_t cap = kEnumerationCap) {
    switch (ens.kind) {
        case EnsembleKind::AllMatrices: {
            XiStats s;
            s.xi_zero = xi_zero_uniform(q.n, q.k, q.p);
            // (1 - xi) / (p^n - 1), written to survive large p^n
            double log_p = std::log(static_cast<double>(q.p));
            double pn_minus_1_log = q.n * log_p + std::log1p(-std::exp(-q.n * log_p));
            s.xi_max = std::exp(std::log1p(-s.xi_zero) - pn_minus_1_log);
            return s;
        }
        case EnsembleKind::FullRankOnly: {
            auto mats = all_matrices(q.p, q.n, q.k, cap);
            std::vector<GeneratorMatrix> fr;
            for (auto& m : mats) {
                if (rank_fp(m) == q.k) fr.push_back(std::move(m));
            }
            auto counts = detail::collision_counts(fr, cap);
            double denom = static_cast<double>(fr.size()) *
                           static_cast<double>(pow_u64_checked(q.p, q.k));
            return detail::xi_from_counts(counts, denom);
        }
        case EnsembleKind::Explicit: {
            // support is weighted; accumulate probabilities per output
            uint64_t space = pow_u64_checked(q.p, q.n);
            if (ens.support.empty())
                throw std::invalid_argument("xi_stats: empty explicit support");
            uint64_t pk = pow_u64_checked(q.p, q.k);
            if (space > cap || ens.support.size() * pk > cap)
                throw std::length_error("xi_stats: explicit support exceeds cap");
            std::vector<double> prob(space, 0.0);
            for (const auto& [M, w] : ens.support) {
                auto words = enumerate_codewords(M, cap);
                for (const auto& y : words) {
                    uint64_t idx = 0;
                    for (uint32_t c : y) idx = idx * q.p + c;
                    prob[idx] += w / static_cast<double>(pk);
                }
            }
            XiStats s;
            s.xi_zero = prob[0];
            for (size_t i = 1; i < prob.size(); ++i) s.xi_max = std::max(s.xi_max, prob[i]);
            return s;
        }
    }
    throw std::logic_error("xi_stats: unreachable");
}

}  // namespace lattigauss::gf
