#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <stdexcept>
#include <vector>

// Shared numeric helpers: constants, compensated summation, log-space
// assembly of n-th-power terms.
namespace lattigauss {

inline constexpr double kPi = 3.14159265358979323846;
inline constexpr double kE = 2.71828182845904523536;
inline constexpr double kTwoPiE = 2.0 * kPi * kE;

// Kahan-Babuska compensated accumulator for sums of wildly different
// magnitudes.
class KahanSum {
public:
    void add(double x) {
        double t = sum_ + x;
        if (std::abs(sum_) >= std::abs(x)) {
            comp_ += (sum_ - t) + x;
        } else {
            comp_ += (x - t) + sum_;
        }
        sum_ = t;
    }
    double value() const { return sum_ + comp_; }

private:
    double sum_ = 0.0;
    double comp_ = 0.0;
};

// exp(e) guarded against overflow reporting; underflow flushes to 0.
inline double exp_guarded(double e) {
    if (e > 700.0) {
        throw std::overflow_error("exp_guarded: exponent " + std::to_string(e) +
                                  " overflows double range");
    }
    return std::exp(e);
}

// x^n for positive real x assembled as exp(n log x).
inline double pow_log(double x, double n) {
    if (x <= 0.0) {
        throw std::domain_error("pow_log: base must be positive");
    }
    return exp_guarded(n * std::log(x));
}

inline double sq(double x) { return x * x; }

inline bool nearly_equal_rel(double a, double b, double rel_tol) {
    double scale = std::max(std::abs(a), std::abs(b));
    return std::abs(a - b) <= rel_tol * std::max(scale, 1e-300);
}

}  // namespace lattigauss
