#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <map>
#include <set>

#include "lattigauss/gf.hpp"

using namespace lattigauss;
using gf::GeneratorMatrix;

namespace {

GeneratorMatrix make(uint64_t p, int n, int k, std::vector<uint32_t> e) {
    GeneratorMatrix m;
    m.p = p;
    m.n = n;
    m.k = k;
    m.entries = std::move(e);
    m.validate();
    return m;
}

// rank oracle: the column span of M has p^rank elements
int rank_by_span(const GeneratorMatrix& M) {
    auto words = gf::enumerate_codewords(M);
    std::set<std::vector<uint32_t>> span(words.begin(), words.end());
    int r = 0;
    size_t sz = span.size();
    while (sz > 1) {
        sz /= M.p;
        ++r;
    }
    return r;
}

}  // namespace

TEST_CASE("matvec") {
    auto z = GeneratorMatrix::zero(5, 3, 2);
    CHECK(gf::matvec(z, {4, 3}) == std::vector<uint32_t>{0, 0, 0});
    auto rep = make(2, 2, 1, {1, 1});
    CHECK(gf::matvec(rep, {1}) == std::vector<uint32_t>{1, 1});
    auto m3 = make(3, 3, 2, {1, 2, 0, 1, 2, 2});
    CHECK(gf::matvec(m3, {1, 2}) == std::vector<uint32_t>{2, 2, 0});
    CHECK_THROWS_AS(gf::matvec(m3, {1}), std::invalid_argument);
}

TEST_CASE("rank matches span counting exhaustively") {
    for (auto [n, k, p] : std::vector<std::tuple<int, int, uint64_t>>{
             {2, 1, 2}, {3, 2, 2}, {2, 1, 3}, {3, 2, 3}, {4, 2, 2}}) {
        for (const auto& M : gf::all_matrices(p, n, k)) {
            CAPTURE(n, k, p);
            CHECK(gf::rank_fp(M) == rank_by_span(M));
        }
    }
    // identity block and zero matrix
    auto id = make(7, 3, 2, {1, 0, 0, 1, 0, 0});
    CHECK(gf::rank_fp(id) == 2);
    CHECK(gf::rank_fp(GeneratorMatrix::zero(7, 3, 2)) == 0);
    auto ones = make(2, 2, 2, {1, 1, 1, 1});
    CHECK(gf::rank_fp(ones) == 1);
}

TEST_CASE("codeword enumeration is message-indexed") {
    auto rep = make(2, 2, 1, {1, 1});
    auto words = gf::enumerate_codewords(rep);
    REQUIRE(words.size() == 2);
    CHECK(words[0] == std::vector<uint32_t>{0, 0});
    CHECK(words[1] == std::vector<uint32_t>{1, 1});

    auto zero = GeneratorMatrix::zero(3, 2, 2);
    auto zw = gf::enumerate_codewords(zero);
    REQUIRE(zw.size() == 9);  // duplicates retained
    for (const auto& w : zw) CHECK(w == std::vector<uint32_t>{0, 0});

    auto id = make(2, 2, 2, {1, 0, 0, 1});
    auto iw = gf::enumerate_codewords(id);
    REQUIRE(iw.size() == 4);
    CHECK(iw[0] == std::vector<uint32_t>{0, 0});
    CHECK(iw[1] == std::vector<uint32_t>{0, 1});
    CHECK(iw[2] == std::vector<uint32_t>{1, 0});
    CHECK(iw[3] == std::vector<uint32_t>{1, 1});

    CHECK_THROWS_AS(gf::enumerate_codewords(make(2, 2, 1, {1, 1}), 1), std::length_error);
}

TEST_CASE("matrix sampling frequencies") {
    params::ParameterQuadruple q{2, 1, 2, 1.0};
    rng::Stream s(7, 0);
    std::map<std::vector<uint32_t>, int> freq;
    const int draws = 100000;
    for (int i = 0; i < draws; ++i) {
        auto M = gf::sample_matrix(gf::EnsembleSpec::all_matrices(), q, s);
        ++freq[M.entries];
    }
    REQUIRE(freq.size() == 4);
    for (const auto& [e, c] : freq) {
        CHECK(static_cast<double>(c) / draws == Catch::Approx(0.25).margin(0.01));
    }

    rng::Stream s2(8, 0);
    std::map<std::vector<uint32_t>, int> freq_fr;
    for (int i = 0; i < draws; ++i) {
        auto M = gf::sample_matrix(gf::EnsembleSpec::full_rank_only(), q, s2);
        ++freq_fr[M.entries];
    }
    REQUIRE(freq_fr.size() == 3);  // the zero matrix never appears
    CHECK(freq_fr.count({0, 0}) == 0);
    for (const auto& [e, c] : freq_fr) {
        CHECK(static_cast<double>(c) / draws == Catch::Approx(1.0 / 3.0).margin(0.01));
    }
}

TEST_CASE("explicit ensembles") {
    auto rep = make(2, 2, 1, {1, 1});
    auto zero = GeneratorMatrix::zero(2, 2, 1);
    auto ens = gf::EnsembleSpec::explicit_dist({{rep, 0.75}, {zero, 0.25}});
    rng::Stream s(3, 0);
    int reps = 0;
    const int draws = 100000;
    for (int i = 0; i < draws; ++i) {
        if (gf::sample_matrix(ens, {2, 1, 2, 1.0}, s) == rep) ++reps;
    }
    CHECK(static_cast<double>(reps) / draws == Catch::Approx(0.75).margin(0.01));

    CHECK_THROWS_AS(gf::EnsembleSpec::explicit_dist({{rep, 0.5}, {zero, 0.4}}),
                    std::invalid_argument);
}

TEST_CASE("pochhammer") {
    CHECK(gf::pochhammer(0.3, 0.5, 0) == 1.0);
    CHECK(gf::pochhammer(0.5, 0.5, 2) == Catch::Approx(0.375).epsilon(1e-15));
    CHECK(gf::euler_phi(0.5) == Catch::Approx(0.2887880951).epsilon(1e-7));
    CHECK(gf::euler_phi(0.5) > std::exp(-2.0));
    CHECK_THROWS_AS(gf::pochhammer(0.5, 1.5, gf::kPochhammerInfinite), std::domain_error);

    // (1/2;1/2)_m decreases in m and stays above phi(1/2)
    double prev = 1.0;
    for (int m = 1; m <= 60; ++m) {
        double v = gf::pochhammer(0.5, 0.5, m);
        CHECK(v < prev);
        CHECK(v > gf::euler_phi(0.5) - 1e-15);
        prev = v;
    }
}

TEST_CASE("rank distribution matches exhaustive counts") {
    for (auto [n, k, p] : std::vector<std::tuple<int, int, uint64_t>>{
             {2, 1, 2}, {2, 1, 3}, {3, 1, 2}, {3, 2, 2}, {4, 2, 2}, {3, 2, 3}}) {
        CAPTURE(n, k, p);
        auto mats = gf::all_matrices(p, n, k);
        std::vector<uint64_t> counts(static_cast<size_t>(std::min(n, k)) + 1, 0);
        for (const auto& M : mats) ++counts[static_cast<size_t>(gf::rank_fp(M))];

        double total = 0.0;
        for (int j = 0; j <= std::min(n, k); ++j) {
            // exact integer form equals the enumeration count exactly
            auto exact = gf::rank_count_exact(n, k, p, j);
            CHECK(static_cast<uint64_t>(exact) == counts[static_cast<size_t>(j)]);
            // log-space form matches to float precision
            double prob = gf::rank_distribution(n, k, p, j);
            double emp = static_cast<double>(counts[static_cast<size_t>(j)]) /
                         static_cast<double>(mats.size());
            CHECK(prob == Catch::Approx(emp).epsilon(1e-12));
            total += prob;
        }
        CHECK(total == Catch::Approx(1.0).epsilon(1e-12));
    }
    CHECK(gf::rank_distribution(2, 1, 2, 0) == Catch::Approx(0.25).epsilon(1e-14));
    CHECK(gf::rank_distribution(2, 1, 2, 1) == Catch::Approx(0.75).epsilon(1e-14));
    CHECK_THROWS_AS(gf::rank_distribution(2, 1, 2, 2), std::out_of_range);
}

TEST_CASE("full rank mass exceeds its lower bound") {
    CHECK(gf::full_rank_mass(2, 1, 2) == Catch::Approx(0.75).epsilon(1e-14));
    CHECK(gf::full_rank_mass(2, 1, 2) > 0.5);
    CHECK(gf::full_rank_mass(3, 2, 2) > 0.5);
    CHECK(gf::full_rank_mass(4, 1, 3) > 1.0 - std::pow(3.0, -3.0));
    for (auto [n, k, p] : std::vector<std::tuple<int, int, uint64_t>>{
             {5, 3, 2}, {6, 2, 3}, {4, 3, 5}, {10, 5, 2}}) {
        CHECK_NOTHROW(gf::full_rank_mass(n, k, p));
    }
}

TEST_CASE("xi against exhaustive pair counts") {
    for (auto [n, k, p] : std::vector<std::tuple<int, int, uint64_t>>{
             {2, 1, 2}, {2, 1, 3}, {3, 1, 2}, {3, 2, 2}, {4, 2, 2}}) {
        CAPTURE(n, k, p);
        auto mats = gf::all_matrices(p, n, k);
        uint64_t zero_pairs = 0;
        uint64_t pk = gf::pow_u64_checked(p, k);
        for (const auto& M : mats) {
            for (const auto& w : gf::enumerate_codewords(M)) {
                bool z = true;
                for (uint32_t c : w) z = z && (c == 0);
                if (z) ++zero_pairs;
            }
        }
        double emp = static_cast<double>(zero_pairs) /
                     (static_cast<double>(mats.size()) * static_cast<double>(pk));
        double xi = gf::xi_zero_uniform(n, k, p);
        CHECK(xi == Catch::Approx(emp).epsilon(1e-12));
        CHECK(xi >= 1.0 / static_cast<double>(pk));
    }
    CHECK(gf::xi_zero_uniform(2, 1, 2) == Catch::Approx(0.625).epsilon(1e-13));
    CHECK(gf::xi_zero_uniform(2, 1, 3) == Catch::Approx(11.0 / 27.0).epsilon(1e-13));
}

TEST_CASE("xi stats per ensemble") {
    params::ParameterQuadruple q{2, 1, 2, 1.0};
    auto uni = gf::xi_stats(gf::EnsembleSpec::all_matrices(), q);
    CHECK(uni.xi_zero == Catch::Approx(0.625).epsilon(1e-13));
    CHECK(uni.xi_max == Catch::Approx(0.125).epsilon(1e-13));

    auto zero = GeneratorMatrix::zero(2, 2, 1);
    auto point_zero = gf::xi_stats(gf::EnsembleSpec::explicit_dist({{zero, 1.0}}), q);
    CHECK(point_zero.xi_zero == 1.0);
    CHECK(point_zero.xi_max == 0.0);

    auto rep = make(2, 2, 1, {1, 1});
    auto point_rep = gf::xi_stats(gf::EnsembleSpec::explicit_dist({{rep, 1.0}}), q);
    CHECK(point_rep.xi_zero == Catch::Approx(0.5));
    CHECK(point_rep.xi_max == Catch::Approx(0.5));

    // full-rank stats by exhaustive enumeration: xi_zero = 1/p^k,
    // xi_max = (p^k - 1) / (p^k (p^n - 1)) by symmetry over nonzero targets
    auto fr = gf::xi_stats(gf::EnsembleSpec::full_rank_only(), q);
    CHECK(fr.xi_zero == Catch::Approx(0.5).epsilon(1e-13));
    CHECK(fr.xi_max == Catch::Approx(1.0 / 6.0).epsilon(1e-13));
}

TEST_CASE("uniform ensemble xi identity") {
    for (auto [n, k, p] : std::vector<std::tuple<int, int, uint64_t>>{
             {2, 1, 2}, {3, 2, 2}, {2, 1, 3}, {4, 2, 2}, {3, 2, 5}}) {
        auto s = gf::xi_stats(gf::EnsembleSpec::all_matrices(), {n, k, p, 1.0});
        double pn = std::pow(static_cast<double>(p), n);
        CHECK(s.xi_max * (pn - 1.0) + s.xi_zero == Catch::Approx(1.0).epsilon(1e-12));
    }
}

TEST_CASE("xi p^k approaches 1 as p^(n-k) grows") {
    // schedule (n, 1, 2): gap |xi p^k - 1| = 2^-n, monotone to below 1%
    double prev_gap = 1e300;
    for (int n = 2; n <= 8; ++n) {
        double xi = gf::xi_zero_uniform(n, 1, 2);
        double gap = std::abs(xi * 2.0 - 1.0);
        CHECK(gap < prev_gap);
        prev_gap = gap;
    }
    CHECK(prev_gap < 0.01);
}
