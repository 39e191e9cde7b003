#pragma once

#include <span>

#include "ivrand/trial.hpp"

namespace ivrand {

// Point estimates and diagnostics for one trial. k_constant is
// cov(Z,X)/Var(Z), the compliance effect linking beta_itt = K * beta_iv.
// All covariances use divisor n (not n-1) so the algebraic identities
// beta_itt = K * beta_iv and beta_iv = ace_z_on_y / ace_z_on_x hold exactly.
// On a degenerate instrument (cov_zx == 0) the ratio estimators are NaN and
// `degenerate` is set instead of failing.
struct EstimateReport {
    double beta_iv = 0.0;
    double beta_itt = 0.0;
    double ace_z_on_y = 0.0;
    double ace_z_on_x = 0.0;
    double k_constant = 0.0;
    double cov_zy = 0.0;
    double cov_zx = 0.0;
    double var_z = 0.0;
    double cor_zx = 0.0;
    double naive_slope = 0.0;
    double naive_t = 0.0;
    double naive_p = 1.0;
    bool adjusted = false;
    bool degenerate = false;
};

// Sample covariance n^-1 sum(ab) - (n^-1 sum a)(n^-1 sum b), evaluated in
// centered form. Throws std::invalid_argument for mismatched or short input.
double sample_cov(std::span<const double> a, std::span<const double> b);

// beta_iv = cov(Z,Y) / cov(Z,X) over observed points.
// Throws UndefinedEstimatorError if a suggestion group is empty,
// DegenerateInstrumentError if cov(Z,X) is exactly zero.
double estimate_iv(const TrialSeries& trial);

// beta_itt = mean(y | z=1) - mean(y | z=0) over observed points.
double estimate_itt(const TrialSeries& trial);

// Nonparametric average causal effects of Z on Y and on X:
// cov(Z, .) / (zbar * (1 - zbar)).
double estimate_ace_z_on_y(const TrialSeries& trial);
double estimate_ace_z_on_x(const TrialSeries& trial);

// Returns a copy of the trial whose x and y are OLS residuals from simple
// regressions on w (intercept included, fitted over observed points).
// z, w, u and the mask are unchanged. Throws DegenerateRegressionError if w
// is constant over the observed points.
TrialSeries residualize_on_w(const TrialSeries& trial);

struct TTestResult {
    double slope = 0.0;
    double t = 0.0;
    double p = 1.0;
};

// OLS slope t-test of y on x (classical normal-theory reference, n-2 df).
// With adjusted = true, x and y are residualized on w first.
TTestResult naive_t_test(const TrialSeries& trial, bool adjusted);

// All estimators and diagnostics in one pass.
EstimateReport full_report(const TrialSeries& trial, bool adjusted);

// Two-sided Fisher exact test on the 2x2 (z, x) table over observed points.
// Requires binary x (the pre-adjustment treatment indicator).
double compliance_fisher_p(const TrialSeries& trial);

}  // namespace ivrand
