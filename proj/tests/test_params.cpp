#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "lattigauss/params.hpp"

using namespace lattigauss;
using params::ParameterQuadruple;

namespace {

// trial-division oracle, independent of the library's Miller-Rabin path
bool prime_by_trial_division(uint64_t n) {
    if (n < 2) return false;
    for (uint64_t d = 2; d * d <= n; ++d) {
        if (n % d == 0) return false;
    }
    return true;
}

}  // namespace

TEST_CASE("volume closed forms") {
    CHECK(params::volume({2, 1, 2, 1.0}) == Catch::Approx(2.0).epsilon(1e-14));
    CHECK(params::volume({2, 1, 2, 2.0}) == Catch::Approx(8.0).epsilon(1e-14));
    // log-space evaluation against a big-integer style split: a^12 * 23^9
    double expected = std::pow(0.7871, 12) * 1801152661463.0;  // 23^9 exactly
    CHECK(params::volume({12, 3, 23, 0.7871}) == Catch::Approx(expected).epsilon(1e-12));
    CHECK(params::volume({12, 3, 23, 0.7871}) == Catch::Approx(1.0196e11).epsilon(1e-3));
}

TEST_CASE("volume rejects invalid quadruples") {
    CHECK_THROWS_AS(params::volume({1, 1, 2, 1.0}), std::invalid_argument);
    CHECK_THROWS_AS(params::volume({3, 3, 2, 1.0}), std::invalid_argument);
    CHECK_THROWS_AS(params::volume({3, 1, 4, 1.0}), std::invalid_argument);
    CHECK_THROWS_AS(params::volume({3, 1, 2, 0.0}), std::invalid_argument);
}

TEST_CASE("vnr closed forms") {
    CHECK(params::vnr({2, 1, 2, 1.0}, 1.0) == Catch::Approx(2.0).epsilon(1e-14));
    // a from solve_scale at epsilon = 3 gives VNR = 4 * 2 pi e
    double a = params::solve_scale(12, 3, 23, 1.0, 3.0);
    CHECK(a == Catch::Approx(0.7869954334).epsilon(1e-6));
    CHECK(params::vnr({12, 3, 23, a}, 1.0) == Catch::Approx(4.0 * kTwoPiE).epsilon(1e-12));
}

TEST_CASE("solve_scale closed form and round trip") {
    // n=2,k=1,p=2,sigma=1,eps=0: a^2 * 2 = 2 pi e, so a = sqrt(pi e)
    double a = params::solve_scale(2, 1, 2, 1.0, 0.0);
    CHECK(a == Catch::Approx(std::sqrt(kPi * kE)).epsilon(1e-14));

    for (double eps : {0.0, 0.5, 3.0, 10.0}) {
        for (double sw : {0.5, 1.0, 2.0}) {
            double aa = params::solve_scale(12, 3, 23, sw, eps);
            double back = params::epsilon_of({12, 3, 23, aa}, sw);
            CHECK(back == Catch::Approx(eps).margin(1e-12 * std::max(1.0, eps)));
        }
    }
    CHECK_THROWS_AS(params::solve_scale(2, 1, 2, 1.0, -1.0), std::domain_error);
}

TEST_CASE("primality against trial division") {
    for (uint64_t n = 0; n < 2000; ++n) {
        CAPTURE(n);
        CHECK(params::is_prime(n) == prime_by_trial_division(n));
    }
    // spot checks across the ranges served by the two code paths
    CHECK(params::is_prime(999983));
    CHECK_FALSE(params::is_prime(999981));
    CHECK(params::is_prime(1000003));
    CHECK_FALSE(params::is_prime(1000001));
    CHECK(params::is_prime(2305843009213693951ULL));  // 2^61 - 1
    CHECK_FALSE(params::is_prime(2305843009213693953ULL));
}

TEST_CASE("next_prime") {
    CHECK(params::next_prime(8.165) == 11);
    CHECK(params::next_prime(1.0) == 2);
    CHECK(params::next_prime(23.42) == 29);
    CHECK(params::next_prime(0.0) == 2);
    CHECK(params::next_prime(2.0) == 3);
    // strictly exceeds the input and is prime (trial-division oracle)
    for (double x : {0.5, 4.0, 100.0, 7919.0, 104729.5}) {
        uint64_t p = params::next_prime(x);
        CHECK(static_cast<double>(p) > x);
        CHECK(prime_by_trial_division(p));
    }
}

TEST_CASE("check_mac thresholds") {
    const double dp = 2.0 / (kPi * kE);
    // n=16,k=8: thresholds (dp*16)^1 = 3.7473 and (log16/pi)^1 = 0.88253
    CHECK(params::check_mac(16, 8, 5, dp));
    CHECK_FALSE(params::check_mac(16, 8, 3, dp));
    CHECK_FALSE(params::check_mac(16, 8, 2, dp));
    // monotone in p
    bool seen_true = false;
    for (uint64_t p : {2ULL, 3ULL, 5ULL, 7ULL, 11ULL, 13ULL, 17ULL}) {
        bool ok = params::check_mac(16, 8, p, dp);
        if (seen_true) CHECK(ok);
        if (ok) seen_true = true;
    }
    CHECK(seen_true);
}

TEST_CASE("check_pe_prime thresholds") {
    // n=12,k=3,delta=2,eps=3: threshold (48/(4 pi e))^2 = 1.9746
    double thr = std::pow(48.0 / (4.0 * kPi * kE), 2.0);
    CHECK(thr == Catch::Approx(1.9746).epsilon(1e-3));
    CHECK(params::check_pe_prime(12, 3, 23, 2.0, 3.0));
    CHECK(params::check_pe_prime(12, 3, 2, 2.0, 3.0));
    // n=12,k=1: threshold = 1.4052^6 = 7.704 > 7
    CHECK_FALSE(params::check_pe_prime(12, 1, 7, 2.0, 3.0));
}

TEST_CASE("lg parameter suggestion") {
    const double dp = 2.0 / (kPi * kE);
    CHECK(params::lg_prime_threshold(100, dp) == Catch::Approx(8.1645).epsilon(1e-3));

    auto out = params::suggest_lg_parameters(100, 3.0, 1.0, 0.3, kTwoPiE * 1.2);
    CHECK(out.q.p == 11);
    CHECK(out.q.k == 76);  // ceil(100 ln 100 / ln(100 ln 100)) = 76, feasible at p=11
    CHECK(out.sigma_tilde == Catch::Approx(9.0 / std::sqrt(10.0)).epsilon(1e-12));
    CHECK(out.sigma_w == Catch::Approx(0.9486832981).epsilon(1e-9));
    // the suggested quadruple satisfies the threshold rules and hits the VNR
    CHECK(params::check_mac(out.q.n, out.q.k, out.q.p, dp));
    CHECK(static_cast<double>(out.q.p) > params::lg_prime_threshold(100, dp));
    CHECK(params::vnr(out.q, out.sigma_w) == Catch::Approx(kTwoPiE * 1.2).epsilon(1e-10));

    CHECK_THROWS_AS(params::suggest_lg_parameters(100, 1.0, 1.0, 0.1, kTwoPiE * 1.1),
                    std::domain_error);
    CHECK_THROWS_AS(params::suggest_lg_parameters(100, 3.0, 1.0, 0.3, kTwoPiE * 0.9),
                    std::domain_error);
}

TEST_CASE("ff f/g inversion") {
    // a^2 tau = pi / ln(n e) makes f = n e^{-ln n - 1} = 1/e
    int n = 12;
    double tau = 0.37;
    double a = std::sqrt(kPi / (tau * (std::log(static_cast<double>(n)) + 1.0)));
    ParameterQuadruple q{n, 3, 23, a};
    auto fg = params::ff_f_g(q, tau);
    CHECK(fg.f == Catch::Approx(1.0 / kE).epsilon(1e-12));

    // round trip: a reconstructed from f recovers the input a to 1e-12
    double a_back = std::sqrt(kPi / (tau * std::log(n / fg.f)));
    CHECK(a_back == Catch::Approx(a).epsilon(1e-12));

    // and p reconstructed from g recovers p
    ParameterQuadruple q2{12, 3, 23, 0.7871};
    auto fg2 = params::ff_f_g(q2, 0.01);
    CHECK(fg2.f == Catch::Approx(0.0).margin(1e-200));
    double v2n = std::exp(2.0 / q2.n * params::log_volume(q2));
    double p_back = std::pow(std::log(q2.n / fg2.g) / (kPi * v2n * 0.01),
                             q2.n / (2.0 * q2.k));
    CHECK(p_back == Catch::Approx(23.0).epsilon(1e-10));
}

TEST_CASE("schedule validation") {
    params::ParameterSchedule sched;
    sched.entries.push_back({{4, 2, 5, 1.0}, 1.0});
    sched.entries.push_back({{8, 4, 7, 1.0}, 1.0});
    CHECK_NOTHROW(sched.validate());
    sched.entries.push_back({{8, 4, 11, 1.0}, 1.0});  // n not increasing
    CHECK_THROWS_AS(sched.validate(), std::invalid_argument);
}
