#include "ivrand/estimators.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>
#include <vector>

#include "ivrand/errors.hpp"
#include "ivrand/stats.hpp"

namespace ivrand {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

// Observed-point projection of a trial, with z as doubles for the covariances.
struct ObservedView {
    std::vector<double> z, x, y, w;
    int m = 0;
    int n_z1 = 0;
};

ObservedView observed_view(const TrialSeries& trial) {
    ObservedView v;
    const auto n = static_cast<std::size_t>(trial.n());
    v.z.reserve(n);
    v.x.reserve(n);
    v.y.reserve(n);
    const bool has_w = trial.has_w();
    if (has_w) v.w.reserve(n);
    for (std::size_t t = 0; t < n; ++t) {
        if (!trial.observed_mask[t]) continue;
        v.z.push_back(static_cast<double>(trial.z[t]));
        v.x.push_back(trial.x[t]);
        v.y.push_back(trial.y[t]);
        if (has_w) v.w.push_back(trial.w[t]);
        v.n_z1 += trial.z[t] != 0;
    }
    v.m = static_cast<int>(v.z.size());
    return v;
}

void require_both_groups(const ObservedView& v) {
    if (v.m < 2)
        throw UndefinedEstimatorError("fewer than 2 observed points");
    if (v.n_z1 == 0 || v.n_z1 == v.m)
        throw UndefinedEstimatorError("one suggestion group (z = 0 or z = 1) is empty");
}

}  // namespace

double sample_cov(std::span<const double> a, std::span<const double> b) {
    if (a.size() != b.size())
        throw std::invalid_argument("sample_cov: length mismatch");
    if (a.size() < 2)
        throw std::invalid_argument("sample_cov: need at least 2 points");
    const double ma = stats::mean(a);
    const double mb = stats::mean(b);
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += (a[i] - ma) * (b[i] - mb);
    return s / static_cast<double>(a.size());
}

double estimate_iv(const TrialSeries& trial) {
    const auto v = observed_view(trial);
    require_both_groups(v);
    const double cov_zx = sample_cov(v.z, v.x);
    if (cov_zx == 0.0)
        throw DegenerateInstrumentError("cov(Z, X) is exactly zero");
    return sample_cov(v.z, v.y) / cov_zx;
}

double estimate_itt(const TrialSeries& trial) {
    const auto v = observed_view(trial);
    require_both_groups(v);
    double s1 = 0.0, s0 = 0.0;
    long n1 = 0, n0 = 0;
    for (int i = 0; i < v.m; ++i) {
        if (v.z[static_cast<std::size_t>(i)] > 0.5) {
            s1 += v.y[static_cast<std::size_t>(i)];
            ++n1;
        } else {
            s0 += v.y[static_cast<std::size_t>(i)];
            ++n0;
        }
    }
    return s1 / static_cast<double>(n1) - s0 / static_cast<double>(n0);
}

namespace {

double ace_denominator(const ObservedView& v) {
    const double zbar = stats::mean(v.z);
    return zbar * (1.0 - zbar);
}

}  // namespace

double estimate_ace_z_on_y(const TrialSeries& trial) {
    const auto v = observed_view(trial);
    require_both_groups(v);
    return sample_cov(v.z, v.y) / ace_denominator(v);
}

double estimate_ace_z_on_x(const TrialSeries& trial) {
    const auto v = observed_view(trial);
    require_both_groups(v);
    return sample_cov(v.z, v.x) / ace_denominator(v);
}

namespace {

struct SimpleFit {
    double intercept = 0.0;
    double slope = 0.0;
};

SimpleFit ols_fit(std::span<const double> predictor, std::span<const double> response) {
    const double var_p = stats::variance_n(predictor);
    if (var_p == 0.0)
        throw DegenerateRegressionError("regressor is constant over observed points");
    SimpleFit fit;
    fit.slope = sample_cov(predictor, response) / var_p;
    fit.intercept = stats::mean(response) - fit.slope * stats::mean(predictor);
    return fit;
}

}  // namespace

TrialSeries residualize_on_w(const TrialSeries& trial) {
    if (!trial.has_w())
        throw std::invalid_argument("residualize_on_w: trial carries no w series");
    const auto v = observed_view(trial);
    if (v.m < 3)
        throw UndefinedEstimatorError("residualize_on_w: need at least 3 observed points");
    const auto fit_x = ols_fit(v.w, v.x);
    const auto fit_y = ols_fit(v.w, v.y);

    TrialSeries out = trial;
    const auto n = static_cast<std::size_t>(trial.n());
    for (std::size_t t = 0; t < n; ++t) {
        out.x[t] = trial.x[t] - (fit_x.intercept + fit_x.slope * trial.w[t]);
        out.y[t] = trial.y[t] - (fit_y.intercept + fit_y.slope * trial.w[t]);
    }
    return out;
}

TTestResult naive_t_test(const TrialSeries& trial, bool adjusted) {
    const TrialSeries* target = &trial;
    TrialSeries adjusted_trial;
    if (adjusted) {
        adjusted_trial = residualize_on_w(trial);
        target = &adjusted_trial;
    }
    const auto v = observed_view(*target);
    if (v.m < 3)
        throw UndefinedEstimatorError("naive_t_test: need at least 3 observed points");
    const double var_x = stats::variance_n(v.x);
    if (var_x == 0.0)
        throw UndefinedEstimatorError("naive_t_test: one treatment group is empty");

    TTestResult result;
    result.slope = sample_cov(v.x, v.y) / var_x;
    const double mean_x = stats::mean(v.x);
    const double mean_y = stats::mean(v.y);
    double rss = 0.0;
    for (int i = 0; i < v.m; ++i) {
        const auto k = static_cast<std::size_t>(i);
        const double fitted = mean_y + result.slope * (v.x[k] - mean_x);
        const double r = v.y[k] - fitted;
        rss += r * r;
    }
    const double df = static_cast<double>(v.m - 2);
    const double sxx = var_x * static_cast<double>(v.m);
    const double se2 = rss / df / sxx;
    if (se2 == 0.0) {
        result.t = 0.0;
        result.p = result.slope == 0.0 ? 1.0 : 0.0;
        if (result.slope != 0.0)
            result.t = std::numeric_limits<double>::infinity() * (result.slope > 0 ? 1 : -1);
        return result;
    }
    result.t = result.slope / std::sqrt(se2);
    result.p = stats::student_t_two_sided_p(result.t, df);
    return result;
}

EstimateReport full_report(const TrialSeries& trial, bool adjusted) {
    const TrialSeries* target = &trial;
    TrialSeries adjusted_trial;
    if (adjusted) {
        adjusted_trial = residualize_on_w(trial);
        target = &adjusted_trial;
    }
    const auto v = observed_view(*target);
    require_both_groups(v);

    EstimateReport report;
    report.adjusted = adjusted;
    report.cov_zy = sample_cov(v.z, v.y);
    report.cov_zx = sample_cov(v.z, v.x);
    report.var_z = stats::variance_n(v.z);
    const double var_x = stats::variance_n(v.x);
    report.cor_zx = var_x > 0.0 ? report.cov_zx / std::sqrt(report.var_z * var_x) : kNaN;
    report.k_constant = report.cov_zx / report.var_z;
    // Covariance form of the ITT contrast (equal to the group-mean difference
    // algebraically); keeps beta_itt = k * beta_iv exact to rounding even when
    // y's scale dwarfs the contrast.
    report.beta_itt = report.cov_zy / report.var_z;
    const double ace_denom = ace_denominator(v);
    report.ace_z_on_y = report.cov_zy / ace_denom;
    report.ace_z_on_x = report.cov_zx / ace_denom;

    if (report.cov_zx == 0.0) {
        report.degenerate = true;
        report.beta_iv = kNaN;
    } else {
        report.beta_iv = report.cov_zy / report.cov_zx;
    }

    if (var_x > 0.0 && v.m >= 3) {
        const auto t = naive_t_test(*target, false);
        report.naive_slope = t.slope;
        report.naive_t = t.t;
        report.naive_p = t.p;
    } else {
        report.naive_slope = kNaN;
        report.naive_t = kNaN;
        report.naive_p = kNaN;
    }
    return report;
}

double compliance_fisher_p(const TrialSeries& trial) {
    long cells[2][2] = {{0, 0}, {0, 0}};
    const auto n = static_cast<std::size_t>(trial.n());
    for (std::size_t t = 0; t < n; ++t) {
        if (!trial.observed_mask[t]) continue;
        const double xv = trial.x[t];
        if (xv != 0.0 && xv != 1.0)
            throw std::invalid_argument("compliance_fisher_p: x is not binary");
        cells[trial.z[t] ? 1 : 0][xv > 0.5 ? 1 : 0] += 1;
    }
    return stats::fisher_exact_two_sided(cells[0][0], cells[0][1], cells[1][0], cells[1][1]);
}

}  // namespace ivrand
