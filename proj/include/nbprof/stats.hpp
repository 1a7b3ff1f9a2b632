#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <vector>

#include "nbprof/error.hpp"

namespace nbprof {

/// Regularized incomplete beta function I_x(a, b), via the standard
/// continued-fraction expansion (modified Lentz). Relative accuracy is
/// around 1e-14 over (0, 1).
inline double regularized_incomplete_beta(double a, double b, double x) {
    if (!(a > 0.0) || !(b > 0.0))
        throw usage_error("regularized_incomplete_beta: a, b must be positive");
    if (x < 0.0 || x > 1.0 || !std::isfinite(x))
        throw usage_error("regularized_incomplete_beta: x must lie in [0, 1]");
    if (x == 0.0) return 0.0;
    if (x == 1.0) return 1.0;

    const auto cont_frac = [](double a_, double b_, double x_) {
        constexpr int max_iter = 300;
        constexpr double eps = 3e-16;
        constexpr double fpmin = 1e-300;
        const double qab = a_ + b_;
        const double qap = a_ + 1.0;
        const double qam = a_ - 1.0;
        double c = 1.0;
        double d = 1.0 - qab * x_ / qap;
        if (std::fabs(d) < fpmin) d = fpmin;
        d = 1.0 / d;
        double h = d;
        for (int m = 1; m <= max_iter; ++m) {
            const auto dm = static_cast<double>(m);
            const double m2 = 2.0 * dm;
            double aa = dm * (b_ - dm) * x_ / ((qam + m2) * (a_ + m2));
            d = 1.0 + aa * d;
            if (std::fabs(d) < fpmin) d = fpmin;
            c = 1.0 + aa / c;
            if (std::fabs(c) < fpmin) c = fpmin;
            d = 1.0 / d;
            h *= d * c;
            aa = -(a_ + dm) * (qab + dm) * x_ / ((a_ + m2) * (qap + m2));
            d = 1.0 + aa * d;
            if (std::fabs(d) < fpmin) d = fpmin;
            c = 1.0 + aa / c;
            if (std::fabs(c) < fpmin) c = fpmin;
            d = 1.0 / d;
            const double del = d * c;
            h *= del;
            if (std::fabs(del - 1.0) < eps) return h;
        }
        throw internal_error("regularized_incomplete_beta: no convergence");
    };

    const double ln_front = std::lgamma(a + b) - std::lgamma(a) -
                            std::lgamma(b) + a * std::log(x) +
                            b * std::log1p(-x);
    const double bt = std::exp(ln_front);
    if (x < (a + 1.0) / (a + b + 2.0)) return bt * cont_frac(a, b, x) / a;
    return 1.0 - bt * cont_frac(b, a, 1.0 - x) / b;
}

/// P(U_(k) <= r) for the k-th smallest of L iid uniforms, i.e. the
/// binomial tail Sum_{l=k..L} C(L,l) r^l (1-r)^(L-l) = I_r(k, L-k+1).
inline double beta_order_cdf(std::size_t k, std::size_t L, double r) {
    if (k < 1 || k > L) throw usage_error("beta_order_cdf: need 1 <= k <= L");
    if (!(r >= 0.0) || r > 1.0)
        throw usage_error("beta_order_cdf: rank must lie in [0, 1]");
    if (r == 0.0) return 0.0;
    if (r == 1.0) return 1.0;
    return regularized_incomplete_beta(static_cast<double>(k),
                                       static_cast<double>(L - k) + 1.0, r);
}

inline double mean(const std::vector<double>& v) {
    if (v.empty()) throw usage_error("mean: empty vector");
    double s = 0.0;
    for (double x : v) s += x;
    return s / static_cast<double>(v.size());
}

/// Unbiased sample variance (n-1 denominator).
inline double sample_variance(const std::vector<double>& v) {
    if (v.size() < 2) throw usage_error("sample_variance: need >= 2 values");
    const double m = mean(v);
    double s = 0.0;
    for (double x : v) s += (x - m) * (x - m);
    return s / static_cast<double>(v.size() - 1);
}

/// Two-sided p-value of a Student t statistic with nu degrees of freedom:
/// I_{nu/(nu+t^2)}(nu/2, 1/2).
inline double student_t_two_sided_p(double t, double nu) {
    if (!(nu > 0.0)) throw usage_error("student_t_two_sided_p: nu must be > 0");
    if (std::isinf(t)) return 0.0;
    const double x = nu / (nu + t * t);
    return regularized_incomplete_beta(nu / 2.0, 0.5, x);
}

struct PairedTestResult {
    double mean_difference = 0.0;
    double t_statistic = 0.0;
    double p_value = 1.0;
    std::size_t n_pairs = 0;
    bool degenerate = false; ///< zero variance of the differences
};

/// Two-sided paired t-test on equal-length vectors. Zero-variance
/// differences are reported explicitly: p = 1 when the mean difference is
/// also zero, otherwise p = 0 with an infinite t.
inline PairedTestResult paired_t_test(const std::vector<double>& a,
                                      const std::vector<double>& b) {
    if (a.size() != b.size())
        throw usage_error("paired_t_test: length mismatch");
    if (a.size() < 2) throw usage_error("paired_t_test: need >= 2 pairs");
    std::vector<double> d(a.size());
    for (std::size_t i = 0; i < a.size(); ++i) d[i] = a[i] - b[i];
    PairedTestResult res;
    res.n_pairs = d.size();
    res.mean_difference = mean(d);
    const double var = sample_variance(d);
    if (var == 0.0) {
        res.degenerate = true;
        if (res.mean_difference == 0.0) {
            res.t_statistic = 0.0;
            res.p_value = 1.0;
        } else {
            res.t_statistic = res.mean_difference > 0.0
                                  ? std::numeric_limits<double>::infinity()
                                  : -std::numeric_limits<double>::infinity();
            res.p_value = 0.0;
        }
        return res;
    }
    const auto n = static_cast<double>(d.size());
    res.t_statistic = res.mean_difference / std::sqrt(var / n);
    res.p_value = student_t_two_sided_p(res.t_statistic, n - 1.0);
    return res;
}

} // namespace nbprof
