#include "ivrand/stats.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include <boost/math/distributions/students_t.hpp>

namespace ivrand::stats {

double mean(std::span<const double> v) {
    double s = 0.0;
    for (double x : v) s += x;
    return s / static_cast<double>(v.size());
}

double variance_n(std::span<const double> v) {
    const double m = mean(v);
    double s = 0.0;
    for (double x : v) {
        const double d = x - m;
        s += d * d;
    }
    return s / static_cast<double>(v.size());
}

double student_t_two_sided_p(double t, double df) {
    if (df <= 0) throw std::invalid_argument("student_t_two_sided_p: df must be > 0");
    if (!std::isfinite(t)) return 0.0;
    boost::math::students_t_distribution<double> dist(df);
    return 2.0 * boost::math::cdf(dist, -std::fabs(t));
}

double normal_cdf(double z) { return 0.5 * std::erfc(-z / std::sqrt(2.0)); }

namespace {

// log C(n, k)
double log_choose(long n, long k) {
    return std::lgamma(static_cast<double>(n + 1)) -
           std::lgamma(static_cast<double>(k + 1)) -
           std::lgamma(static_cast<double>(n - k + 1));
}

}  // namespace

double fisher_exact_two_sided(long a, long b, long c, long d) {
    if (a < 0 || b < 0 || c < 0 || d < 0)
        throw std::invalid_argument("fisher_exact_two_sided: negative cell count");
    const long r1 = a + b, r2 = c + d, c1 = a + c, n = a + b + c + d;
    if (n == 0) return 1.0;
    const double log_denom = log_choose(n, c1);
    auto log_p = [&](long aa) {
        return log_choose(r1, aa) + log_choose(r2, c1 - aa) - log_denom;
    };
    const long lo = std::max(0L, c1 - r2);
    const long hi = std::min(r1, c1);
    const double lp_obs = log_p(a);
    double p = 0.0;
    for (long aa = lo; aa <= hi; ++aa) {
        const double lp = log_p(aa);
        if (lp <= lp_obs + 1e-7) p += std::exp(lp);
    }
    return std::min(1.0, p);
}

double quantile_sorted(std::span<const double> sorted, double p) {
    if (sorted.empty()) throw std::invalid_argument("quantile_sorted: empty input");
    if (p <= 0.0) return sorted.front();
    if (p >= 1.0) return sorted.back();
    const double pos = p * static_cast<double>(sorted.size() - 1);
    const auto k = static_cast<std::size_t>(pos);
    const double frac = pos - static_cast<double>(k);
    if (k + 1 >= sorted.size()) return sorted.back();
    return sorted[k] + frac * (sorted[k + 1] - sorted[k]);
}

std::vector<double> pava_non_increasing(std::span<const double> v) {
    // Stack of blocks (value, weight); merge while the sequence increases.
    std::vector<double> value;
    std::vector<double> weight;
    value.reserve(v.size());
    weight.reserve(v.size());
    for (double x : v) {
        value.push_back(x);
        weight.push_back(1.0);
        while (value.size() > 1 && value[value.size() - 2] < value.back()) {
            const double w = weight[weight.size() - 2] + weight.back();
            const double m = (value[value.size() - 2] * weight[weight.size() - 2] +
                              value.back() * weight.back()) / w;
            value.pop_back();
            weight.pop_back();
            value.back() = m;
            weight.back() = w;
        }
    }
    std::vector<double> out;
    out.reserve(v.size());
    for (std::size_t i = 0; i < value.size(); ++i) {
        for (long j = 0; j < static_cast<long>(weight[i] + 0.5); ++j) out.push_back(value[i]);
    }
    return out;
}

}  // namespace ivrand::stats
