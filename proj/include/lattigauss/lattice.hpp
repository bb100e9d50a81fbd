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
#include "lattigauss/params.hpp"
#include "lattigauss/theta.hpp"

// Concrete lattice computations on scaled mod-p lattices a(C(M) + p Z^n):
// exact nearest-point decoding by coset enumeration, point counting in balls,
// and discrete Gaussian tables with certified truncation.
//
// Lattice points are carried as integer coordinate vectors m with the real
// point being a*m; this keeps equality tests exact.
namespace lattigauss::lattice {

inline constexpr uint64_t kPointCap = 10000000;  // total enumerated points per call

struct ConstructionALattice {
    params::ParameterQuadruple q;
    gf::GeneratorMatrix M;
    // distinct codewords in order of first appearance, with that message index
    std::vector<std::pair<std::vector<uint32_t>, uint64_t>> codewords;

    double volume() const { return params::volume(q); }
};

inline ConstructionALattice make_lattice(const params::ParameterQuadruple& q,
                                         const gf::GeneratorMatrix& M,
                                         uint64_t cap = gf::kEnumerationCap) {
    q.validate();
    M.validate();
    if (M.p != q.p || M.n != q.n || M.k != q.k)
        throw std::invalid_argument("make_lattice: matrix shape does not match quadruple");
    ConstructionALattice lat;
    lat.q = q;
    lat.M = M;
    auto words = gf::enumerate_codewords(M, cap);
    std::set<std::vector<uint32_t>> seen;
    for (uint64_t idx = 0; idx < words.size(); ++idx) {
        if (seen.insert(words[idx]).second) {
            lat.codewords.emplace_back(words[idx], idx);
        }
    }
    return lat;
}

/// Membership: a*m with m = c + p z for a cached codeword c.
inline bool contains(const ConstructionALattice& lat, const std::vector<int64_t>& m) {
    if (m.size() != static_cast<size_t>(lat.q.n)) return false;
    std::vector<uint32_t> res(m.size());
    int64_t p = static_cast<int64_t>(lat.q.p);
    for (size_t i = 0; i < m.size(); ++i) {
        int64_t r = m[i] % p;
        if (r < 0) r += p;
        res[i] = static_cast<uint32_t>(r);
    }
    for (const auto& [c, idx] : lat.codewords) {
        if (c == res) return true;
    }
    return false;
}

// -------------------------------------------------------------------------
// Decoding
// -------------------------------------------------------------------------

struct DecodeResult {
    std::vector<int64_t> coords;  // integer coordinates m; the point is a*m
    uint64_t message_index = 0;
    double dist2 = 0.0;
};

/// Exact nearest point of a(C(M) + p Z^n) to y, by per-coset rounding: in
/// each coset the nearest representative is componentwise
/// z_i = round((y_i/a - c_i)/p), rounding half away from zero. Ties between
/// cosets go to the smaller message index. Cost O(p^k n).
inline DecodeResult decode_cvp(const ConstructionALattice& lat, const std::vector<double>& y) {
    const int n = lat.q.n;
    if (y.size() != static_cast<size_t>(n))
        throw std::invalid_argument("decode_cvp: dimension mismatch");
    const double a = lat.q.a;
    const double p = static_cast<double>(lat.q.p);
    const uint64_t pu = lat.q.p;

    // per-dimension, per-residue best squared distance and rounded z
    std::vector<double> best_d2(static_cast<size_t>(n) * pu);
    std::vector<int64_t> best_z(static_cast<size_t>(n) * pu);
    for (int i = 0; i < n; ++i) {
        double yi_scaled = y[static_cast<size_t>(i)] / a;
        for (uint64_t r = 0; r < pu; ++r) {
            double z = std::round((yi_scaled - static_cast<double>(r)) / p);
            double diff = y[static_cast<size_t>(i)] - a * (static_cast<double>(r) + p * z);
            best_d2[static_cast<size_t>(i) * pu + r] = diff * diff;
            best_z[static_cast<size_t>(i) * pu + r] = static_cast<int64_t>(z);
        }
    }

    double best = std::numeric_limits<double>::infinity();
    const std::vector<uint32_t>* best_cw = nullptr;
    uint64_t best_idx = 0;
    for (const auto& [c, idx] : lat.codewords) {
        double d2 = 0.0;
        for (int i = 0; i < n; ++i) {
            d2 += best_d2[static_cast<size_t>(i) * pu + c[static_cast<size_t>(i)]];
        }
        if (d2 < best) {  // strict: ties keep the earlier (smaller) message index
            best = d2;
            best_cw = &c;
            best_idx = idx;
        }
    }

    DecodeResult out;
    out.message_index = best_idx;
    out.dist2 = best;
    out.coords.resize(static_cast<size_t>(n));
    for (int i = 0; i < n; ++i) {
        uint32_t r = (*best_cw)[static_cast<size_t>(i)];
        out.coords[static_cast<size_t>(i)] =
            static_cast<int64_t>(r) +
            static_cast<int64_t>(pu) * best_z[static_cast<size_t>(i) * pu + r];
    }
    return out;
}

// -------------------------------------------------------------------------
// Point enumeration
// -------------------------------------------------------------------------

namespace detail {

/// Visit all m in Z^n with m = c (mod p), ||a m - center|| <= r if
/// `closed`, < r otherwise. cb(m, dist2).
template <typename Cb>
inline void enum_coset(int n, double a, int64_t p, const uint32_t* coset,
                       const std::vector<double>& center, double r, bool closed, Cb&& cb,
                       uint64_t* budget) {
    std::vector<int64_t> m(static_cast<size_t>(n));
    double r2 = r * r;
    auto rec = [&](auto&& self, int dim, double partial) -> void {
        if (dim == n) {
            bool inside = closed ? (partial <= r2) : (partial < r2);
            if (inside) cb(m, partial);
            return;
        }
        double rem = r2 - partial;
        if (rem < 0.0) return;
        double halfwidth = std::sqrt(rem);
        double ci = (coset != nullptr) ? static_cast<double>(coset[dim]) : 0.0;
        double center_scaled = center[static_cast<size_t>(dim)] / a;
        // a(c + p z) in [center - hw, center + hw]
        double zlo = std::ceil((center_scaled - halfwidth / a - ci) / static_cast<double>(p) -
                               1e-12);
        double zhi = std::floor((center_scaled + halfwidth / a - ci) / static_cast<double>(p) +
                                1e-12);
        for (int64_t z = static_cast<int64_t>(zlo); z <= static_cast<int64_t>(zhi); ++z) {
            if (*budget == 0) throw std::length_error("lattice enumeration: point cap exceeded");
            --(*budget);
            int64_t mi = static_cast<int64_t>(ci) + p * z;
            m[static_cast<size_t>(dim)] = mi;
            double diff = a * static_cast<double>(mi) - center[static_cast<size_t>(dim)];
            self(self, dim + 1, partial + diff * diff);
        }
    };
    rec(rec, 0, 0.0);
}

inline bool is_zero(const std::vector<int64_t>& m) {
    for (int64_t x : m) {
        if (x != 0) return false;
    }
    return true;
}

}  // namespace detail

enum class Exclude {
    OriginOnly,          // the counting function's default
    OriginAndSublattice  // additionally drop a p Z^n
};

/// |a Lambda(M) intersect (B(center, r) \ {0})|, open ball; optionally also
/// excluding the scaled sublattice a p Z^n (the coset of the zero codeword).
inline uint64_t count_in_ball(const ConstructionALattice& lat, const std::vector<double>& center,
                              double r, Exclude exclude = Exclude::OriginOnly) {
    if (!(r > 0.0)) throw std::domain_error("count_in_ball: r must be positive");
    if (center.size() != static_cast<size_t>(lat.q.n))
        throw std::invalid_argument("count_in_ball: dimension mismatch");
    uint64_t budget = kPointCap;
    uint64_t count = 0;
    for (const auto& [c, idx] : lat.codewords) {
        bool zero_coset = std::all_of(c.begin(), c.end(), [](uint32_t v) { return v == 0; });
        if (exclude == Exclude::OriginAndSublattice && zero_coset) continue;
        detail::enum_coset(
            lat.q.n, lat.q.a, static_cast<int64_t>(lat.q.p), c.data(), center, r, false,
            [&](const std::vector<int64_t>& m, double) {
                if (zero_coset && detail::is_zero(m)) return;
                ++count;
            },
            &budget);
    }
    return count;
}

/// Same counting over a plain scaled integer lattice s Z^n (origin excluded).
inline uint64_t count_in_ball_zn(int n, double scale, const std::vector<double>& center,
                                 double r) {
    if (!(r > 0.0)) throw std::domain_error("count_in_ball_zn: r must be positive");
    uint64_t budget = kPointCap;
    uint64_t count = 0;
    detail::enum_coset(
        n, scale, 1, nullptr, center, r, false,
        [&](const std::vector<int64_t>& m, double) {
            if (detail::is_zero(m)) return;
            ++count;
        },
        &budget);
    return count;
}

/// All lattice points with ||a m - center|| <= r, with their squared
/// distances, in deterministic (coset, odometer) order.
inline std::vector<std::pair<std::vector<int64_t>, double>> points_in_ball(
    const ConstructionALattice& lat, const std::vector<double>& center, double r) {
    uint64_t budget = kPointCap;
    std::vector<std::pair<std::vector<int64_t>, double>> pts;
    for (const auto& [c, idx] : lat.codewords) {
        detail::enum_coset(
            lat.q.n, lat.q.a, static_cast<int64_t>(lat.q.p), c.data(), center, r, true,
            [&](const std::vector<int64_t>& m, double d2) { pts.emplace_back(m, d2); },
            &budget);
    }
    return pts;
}

/// Length of a shortest nonzero lattice vector, by growing-ball enumeration.
inline double min_distance(const ConstructionALattice& lat) {
    std::vector<double> origin(static_cast<size_t>(lat.q.n), 0.0);
    double r = lat.q.a;
    for (int iter = 0; iter < 64; ++iter) {
        auto pts = points_in_ball(lat, origin, r);
        double best = std::numeric_limits<double>::infinity();
        for (const auto& [m, d2] : pts) {
            if (!detail::is_zero(m)) best = std::min(best, d2);
        }
        if (best < std::numeric_limits<double>::infinity()) return std::sqrt(best);
        r *= 1.5;
    }
    throw std::runtime_error("min_distance: no nonzero point found");
}

// -------------------------------------------------------------------------
// Discrete Gaussian tables
// -------------------------------------------------------------------------

struct DiscreteGaussianTable {
    ConstructionALattice lat;
    std::vector<std::vector<int64_t>> points;  // integer coordinates
    std::vector<double> weights;               // normalized, sum to 1
    std::vector<double> cumulative;            // inclusive prefix sums for sampling
    double sigma_s = 0.0;
    std::vector<double> c;
    double truncated_mass_bound = 0.0;  // certified mass outside the window / total
    double window_radius = 0.0;
    double zmass = 0.0;  // sum of exp(-||a m - c||^2 / (2 sigma^2)) over the window

    int dim() const { return lat.q.n; }
};

namespace detail {

/// Certified bound on sum of exp(-d^2/(2 sigma^2)) over lattice points at
/// distance > R from the center: shells of width a, point counts bounded by
/// the ball-count estimate on the ambient a Z^n.
inline double gaussian_tail_bound(int n, double a, double sigma, double R) {
    double total = 0.0;
    double vb = theta::ball_volume(n);
    for (int j = 0; j < 100000; ++j) {
        double lo = R + j * a;
        double hi = lo + a;
        double count_log =
            std::log(vb) + n * std::log(hi / a + 0.5 * std::sqrt(static_cast<double>(n)));
        double term_log = count_log - lo * lo / (2.0 * sigma * sigma);
        double term = (term_log < -745.0) ? 0.0 : std::exp(term_log);
        total += term;
        if (term < 1e-300 || term < 1e-6 * total) break;
    }
    return total;
}

}  // namespace detail

/// Enumerated, normalized probability table for the lattice Gaussian
/// D_{Lambda, sigma, c} on a window around c. The window grows geometrically
/// until the certified outside mass is below tol relative to the enumerated
/// mass.
inline DiscreteGaussianTable discrete_gaussian(const ConstructionALattice& lat, double sigma_s,
                                               const std::vector<double>& c, double tol = 1e-12) {
    if (!(sigma_s > 0.0)) throw std::domain_error("discrete_gaussian: sigma_s must be positive");
    if (c.size() != static_cast<size_t>(lat.q.n))
        throw std::invalid_argument("discrete_gaussian: center dimension mismatch");
    const int n = lat.q.n;
    double R = std::max(3.0 * sigma_s * std::sqrt(static_cast<double>(n)),
                        lat.q.a * static_cast<double>(lat.q.p));
    for (int attempt = 0; attempt < 64; ++attempt) {
        auto pts = points_in_ball(lat, c, R);
        if (pts.empty()) {
            R *= 1.5;
            continue;
        }
        KahanSum z;
        for (const auto& [m, d2] : pts) z.add(std::exp(-d2 / (2.0 * sigma_s * sigma_s)));
        double tail = detail::gaussian_tail_bound(n, lat.q.a, sigma_s, R);
        if (tail <= tol * z.value()) {
            DiscreteGaussianTable tbl;
            tbl.lat = lat;
            tbl.sigma_s = sigma_s;
            tbl.c = c;
            tbl.window_radius = R;
            tbl.zmass = z.value();
            tbl.truncated_mass_bound = tail / z.value();
            tbl.points.reserve(pts.size());
            tbl.weights.reserve(pts.size());
            for (const auto& [m, d2] : pts) {
                tbl.points.push_back(m);
                tbl.weights.push_back(std::exp(-d2 / (2.0 * sigma_s * sigma_s)) / z.value());
            }
            tbl.cumulative.resize(tbl.weights.size());
            double acc = 0.0;
            for (size_t i = 0; i < tbl.weights.size(); ++i) {
                acc += tbl.weights[i];
                tbl.cumulative[i] = acc;
            }
            tbl.cumulative.back() = 1.0;
            return tbl;
        }
        R *= 1.5;
    }
    throw std::runtime_error("discrete_gaussian: window certification failed");
}

/// Index into the table by inverse CDF.
inline size_t sample_index(const DiscreteGaussianTable& tbl, double u) {
    auto it = std::lower_bound(tbl.cumulative.begin(), tbl.cumulative.end(), u);
    if (it == tbl.cumulative.end()) --it;
    return static_cast<size_t>(it - tbl.cumulative.begin());
}

/// P = (1/n) E ||X - c||^2 over the table.
inline double signal_power(const DiscreteGaussianTable& tbl) {
    KahanSum s;
    const double a = tbl.lat.q.a;
    for (size_t i = 0; i < tbl.points.size(); ++i) {
        double d2 = 0.0;
        for (size_t j = 0; j < tbl.c.size(); ++j) {
            double diff = a * static_cast<double>(tbl.points[i][j]) - tbl.c[j];
            d2 += diff * diff;
        }
        s.add(tbl.weights[i] * d2);
    }
    return s.value() / tbl.dim();
}

struct EntropyPair {
    double direct = 0.0;       // -sum w log w
    double via_formula = 0.0;  // log((2 pi s^2)^(n/2) f(Lambda)) + (n/2) P / s^2
};

inline EntropyPair entropy_lattice_gaussian(const DiscreteGaussianTable& tbl) {
    EntropyPair out;
    KahanSum h;
    for (double w : tbl.weights) {
        if (w > 0.0) h.add(-w * std::log(w));
    }
    out.direct = h.value();
    double P = signal_power(tbl);
    // (2 pi s^2)^(n/2) f(Lambda) equals the unnormalized window mass
    out.via_formula = std::log(tbl.zmass) +
                      0.5 * tbl.dim() * P / (tbl.sigma_s * tbl.sigma_s);
    return out;
}

/// Achievable-rate lower bound (nats per dimension):
///   (1/2) log( (1-eps)^(2/n) / ((1+e_vol) e^(1 - P/s^2)) )
/// + (1/2) log(1 + s^2/z^2),
/// with 1 + e_vol = volume^(2/n) / (2 pi e sigma_w^2).
inline double rate_lower_bound(const ConstructionALattice& lat, double sigma_s, double sigma_z,
                               double flatness_at_sigma_s, double P) {
    if (!(flatness_at_sigma_s < 1.0))
        throw std::domain_error("rate_lower_bound: flatness factor must be below 1");
    double sigma_w = params::sigma_w_of(sigma_s, sigma_z);
    double one_plus_eps = std::exp(2.0 / lat.q.n * params::log_volume(lat.q)) /
                          (kTwoPiE * sigma_w * sigma_w);
    double first = 0.5 * ((2.0 / lat.q.n) * std::log1p(-flatness_at_sigma_s) -
                          std::log(one_plus_eps) - (1.0 - P / (sigma_s * sigma_s)));
    double second = 0.5 * std::log1p(sigma_s * sigma_s / (sigma_z * sigma_z));
    return first + second;
}

}  // namespace lattigauss::lattice
