#pragma once
// Small statistics toolbox used by the tests and the lab experiments:
// Kolmogorov-Smirnov against a reference CDF, chi-squared tail probabilities,
// integrated autocorrelation times and basic summaries.

#include <algorithm>
#include <cmath>
#include <functional>
#include <stdexcept>
#include <vector>

namespace ilab {

struct Summary {
    double mean = 0;
    double var = 0;   // unbiased
    double sd = 0;
    size_t n = 0;
};

inline Summary summarize(const std::vector<double>& xs) {
    Summary s;
    s.n = xs.size();
    if (s.n == 0) return s;
    double m = 0;
    for (double x : xs) m += x;
    m /= static_cast<double>(s.n);
    double v = 0;
    for (double x : xs) v += (x - m) * (x - m);
    s.mean = m;
    s.var = s.n > 1 ? v / static_cast<double>(s.n - 1) : 0.0;
    s.sd = std::sqrt(s.var);
    return s;
}

// Survival function of the Kolmogorov distribution, evaluated with the
// Stephens small-sample correction. Good to ~1e-6 for n >= 10.
inline double kolmogorov_sf(double d, size_t n) {
    if (d <= 0) return 1.0;
    double sn = std::sqrt(static_cast<double>(n));
    double x = (sn + 0.12 + 0.11 / sn) * d;
    double sum = 0;
    for (int k = 1; k <= 100; ++k) {
        double term = 2.0 * ((k % 2 == 1) ? 1.0 : -1.0) * std::exp(-2.0 * k * k * x * x);
        sum += term;
        if (std::fabs(term) < 1e-12) break;
    }
    return std::min(1.0, std::max(0.0, sum));
}

struct KsResult {
    double statistic = 0;
    double p_value = 1;
};

// KS test of the sample against an explicit CDF.
inline KsResult ks_test(std::vector<double> xs, const std::function<double(double)>& cdf) {
    if (xs.empty()) throw std::invalid_argument("ks_test: empty sample");
    std::sort(xs.begin(), xs.end());
    double n = static_cast<double>(xs.size());
    double d = 0;
    for (size_t i = 0; i < xs.size(); ++i) {
        double f = cdf(xs[i]);
        d = std::max(d, std::fabs(f - static_cast<double>(i + 1) / n));
        d = std::max(d, std::fabs(f - static_cast<double>(i) / n));
    }
    return {d, kolmogorov_sf(d, xs.size())};
}

inline KsResult ks_test_exponential(const std::vector<double>& xs, double mean) {
    if (mean <= 0) throw std::invalid_argument("ks_test_exponential: mean <= 0");
    return ks_test(xs, [mean](double x) { return x <= 0 ? 0.0 : 1.0 - std::exp(-x / mean); });
}

// Regularized upper incomplete gamma Q(a, x), series + continued fraction.
inline double gamma_q(double a, double x) {
    if (a <= 0 || x < 0) throw std::invalid_argument("gamma_q: bad arguments");
    if (x == 0) return 1.0;
    double gln = std::lgamma(a);
    if (x < a + 1.0) {
        // lower series
        double ap = a, sum = 1.0 / a, del = sum;
        for (int i = 0; i < 500; ++i) {
            ap += 1.0;
            del *= x / ap;
            sum += del;
            if (std::fabs(del) < std::fabs(sum) * 1e-15) break;
        }
        double p = sum * std::exp(-x + a * std::log(x) - gln);
        return 1.0 - p;
    }
    // continued fraction for Q
    const double tiny = 1e-300;
    double b = x + 1.0 - a, c = 1.0 / tiny, d = 1.0 / b, h = d;
    for (int i = 1; i < 500; ++i) {
        double an = -static_cast<double>(i) * (static_cast<double>(i) - a);
        b += 2.0;
        d = an * d + b;
        if (std::fabs(d) < tiny) d = tiny;
        c = b + an / c;
        if (std::fabs(c) < tiny) c = tiny;
        d = 1.0 / d;
        double del = d * c;
        h *= del;
        if (std::fabs(del - 1.0) < 1e-15) break;
    }
    return std::exp(-x + a * std::log(x) - gln) * h;
}

// Upper-tail p-value of a chi-squared statistic with k degrees of freedom.
inline double chi2_sf(double stat, double dof) {
    return gamma_q(dof / 2.0, stat / 2.0);
}

// Integrated autocorrelation time of a (roughly stationary) series, using the
// standard self-consistent window: sum rho_k for k < 6 tau. Returns a value in
// units of sample spacing, at least 0.5.
inline double integrated_autocorrelation(const std::vector<double>& xs) {
    size_t n = xs.size();
    if (n < 8) return 0.5;
    Summary s = summarize(xs);
    if (s.var <= 0) return 0.5;
    double c0 = 0;
    std::vector<double> centered(n);
    for (size_t i = 0; i < n; ++i) centered[i] = xs[i] - s.mean;
    for (size_t i = 0; i < n; ++i) c0 += centered[i] * centered[i];
    c0 /= static_cast<double>(n);
    double tau = 0.5;
    for (size_t k = 1; k < n / 2; ++k) {
        double ck = 0;
        for (size_t i = 0; i + k < n; ++i) ck += centered[i] * centered[i + k];
        ck /= static_cast<double>(n - k);
        double rho = ck / c0;
        tau += rho;
        if (static_cast<double>(k) >= 6.0 * tau) break;
        if (rho < 0 && k > 4) break;
    }
    return std::max(0.5, tau);
}

// Total variation distance between two distributions over the same index set.
inline double total_variation(const std::vector<double>& p, const std::vector<double>& q) {
    if (p.size() != q.size()) throw std::invalid_argument("total_variation: size mismatch");
    double tv = 0;
    for (size_t i = 0; i < p.size(); ++i) tv += std::fabs(p[i] - q[i]);
    return tv / 2.0;
}

} // namespace ilab
