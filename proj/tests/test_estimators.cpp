#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <stdexcept>
#include <vector>

#include "ivrand/errors.hpp"
#include "ivrand/estimators.hpp"
#include "ivrand/sim_models.hpp"

using namespace ivrand;
using Catch::Approx;

namespace {

TrialSeries make_trial(std::vector<int> z, std::vector<double> x, std::vector<double> y,
                       std::vector<double> w = {}) {
    TrialSeries trial;
    for (int v : z) trial.z.push_back(v != 0);
    trial.x = std::move(x);
    trial.y = std::move(y);
    trial.w = std::move(w);
    trial.u.assign(trial.z.size(), 0.0);
    trial.observed_mask.assign(trial.z.size(), 1);
    return trial;
}

// The worked 4-point dataset used throughout: z=(1,0,1,0), x=(1,0,1,1), y=(2,0,2,1).
TrialSeries hand_trial() { return make_trial({1, 0, 1, 0}, {1, 0, 1, 1}, {2, 0, 2, 1}); }

}  // namespace

TEST_CASE("sample_cov hand values", "[estimators]") {
    const std::vector<double> a = {1, 0, 1, 0};
    const std::vector<double> b = {2, 0, 2, 1};
    REQUIRE(sample_cov(a, a) == Approx(0.25));
    REQUIRE(sample_cov(a, b) == Approx(0.375));
    const std::vector<double> c = {3, 3, 3, 3};
    REQUIRE(sample_cov(c, b) == Approx(0.0).margin(1e-15));

    REQUIRE_THROWS_AS(sample_cov(a, std::vector<double>{1.0}), std::invalid_argument);
    REQUIRE_THROWS_AS(sample_cov(std::vector<double>{1.0}, std::vector<double>{1.0}),
                      std::invalid_argument);
}

TEST_CASE("IV, ITT and ACE estimators on the hand dataset", "[estimators]") {
    const auto trial = hand_trial();
    REQUIRE(estimate_iv(trial) == Approx(3.0));
    REQUIRE(estimate_itt(trial) == Approx(1.5));
    REQUIRE(estimate_ace_z_on_y(trial) == Approx(1.5));
    REQUIRE(estimate_ace_z_on_x(trial) == Approx(0.5));
    REQUIRE(estimate_ace_z_on_y(trial) / estimate_ace_z_on_x(trial) == Approx(3.0));

    const auto report = full_report(trial, false);
    REQUIRE(report.beta_iv == Approx(3.0));
    REQUIRE(report.beta_itt == Approx(1.5));
    REQUIRE(report.k_constant == Approx(0.5));
    REQUIRE_FALSE(report.degenerate);
}

TEST_CASE("estimator error paths", "[estimators]") {
    // One suggestion group empty.
    auto one_group = make_trial({1, 1, 1}, {1, 0, 1}, {1, 2, 3});
    REQUIRE_THROWS_AS(estimate_itt(one_group), UndefinedEstimatorError);
    REQUIRE_THROWS_AS(estimate_iv(one_group), UndefinedEstimatorError);

    // Degenerate instrument: x constant.
    auto no_compliance = make_trial({1, 0, 1, 0}, {0, 0, 0, 0}, {1, 2, 3, 4});
    REQUIRE_THROWS_AS(estimate_iv(no_compliance), DegenerateInstrumentError);
    const auto report = full_report(no_compliance, false);
    REQUIRE(report.degenerate);
    REQUIRE(std::isnan(report.beta_iv));
    REQUIRE(std::isfinite(report.beta_itt));

    // y constant: zero numerator.
    auto flat_y = make_trial({1, 0, 1, 0}, {1, 0, 1, 1}, {5, 5, 5, 5});
    REQUIRE(estimate_iv(flat_y) == Approx(0.0).margin(1e-15));
    REQUIRE(estimate_itt(flat_y) == Approx(0.0).margin(1e-15));
}

TEST_CASE("perfect compliance collapses IV to ITT", "[estimators]") {
    const auto trial = make_trial({1, 0, 0, 1, 1, 0}, {1, 0, 0, 1, 1, 0},
                                  {2.3, 0.4, -1.1, 3.0, 1.7, 0.2});
    REQUIRE(estimate_iv(trial) == Approx(estimate_itt(trial)).epsilon(1e-14));
}

TEST_CASE("estimator invariances", "[estimators][property]") {
    for (std::uint64_t seed = 1; seed <= 20; ++seed) {
        ModelSpec spec;
        spec.response.family = ResponseFamily::Arma10;
        spec.response.phi1 = 0.4;
        spec.response.beta = 1.5;
        spec.response.lambda = 0.8;
        spec.response.eta = -0.7;
        spec.compliance.kind = ComplianceKind::Simple;
        spec.compliance.alpha = 1.5;
        spec.compliance.omega = 0.5;
        spec.compliance.gamma = 0.5;
        spec.n = 80;
        spec.seed = seed;
        const auto trial = simulate_trial(spec);
        const auto base = full_report(trial, false);

        {
            // Location invariance: y + c changes nothing.
            auto shifted = trial;
            for (auto& v : shifted.y) v += 17.5;
            const auto r = full_report(shifted, false);
            REQUIRE(r.beta_iv == Approx(base.beta_iv).epsilon(1e-9));
            REQUIRE(r.beta_itt == Approx(base.beta_itt).epsilon(1e-9));
            REQUIRE(r.ace_z_on_y == Approx(base.ace_z_on_y).epsilon(1e-9));
        }
        {
            // Scale equivariance (power of two: exact in floating point).
            auto scaled = trial;
            for (auto& v : scaled.y) v *= 4.0;
            const auto r = full_report(scaled, false);
            REQUIRE(r.beta_iv == 4.0 * base.beta_iv);
            REQUIRE(r.beta_itt == 4.0 * base.beta_itt);
            REQUIRE(r.ace_z_on_y == 4.0 * base.ace_z_on_y);
            REQUIRE(r.ace_z_on_x == base.ace_z_on_x);
        }
        {
            // Relabeling z <-> 1 - z negates ITT and the covariances, keeps IV.
            auto flipped = trial;
            for (auto& v : flipped.z) v = v ? 0 : 1;
            const auto r = full_report(flipped, false);
            REQUIRE(r.beta_iv == Approx(base.beta_iv).epsilon(1e-12));
            REQUIRE(r.beta_itt == Approx(-base.beta_itt).epsilon(1e-12));
            REQUIRE(r.cov_zx == Approx(-base.cov_zx).epsilon(1e-12));
            REQUIRE(r.cov_zy == Approx(-base.cov_zy).epsilon(1e-12));
            REQUIRE(r.ace_z_on_y == Approx(-base.ace_z_on_y).epsilon(1e-12));
        }
        {
            // The algebraic identities hold to near machine precision, and the
            // report's covariance-form ITT matches the group-mean contrast.
            REQUIRE(base.beta_itt ==
                    Approx(base.k_constant * base.beta_iv).epsilon(1e-12));
            REQUIRE(base.beta_iv ==
                    Approx(base.ace_z_on_y / base.ace_z_on_x).epsilon(1e-12));
            REQUIRE(estimate_itt(trial) == Approx(base.beta_itt).epsilon(1e-12));
        }
    }
}

TEST_CASE("residualize_on_w", "[estimators]") {
    // Perfect fit: y = 2w exactly, residual y is identically zero.
    {
        const std::vector<double> w = {0.5, -1.0, 2.0, 1.5, -0.25, 0.75};
        std::vector<double> y(w.size());
        for (std::size_t i = 0; i < w.size(); ++i) y[i] = 2.0 * w[i];
        auto trial = make_trial({1, 0, 1, 0, 1, 0}, {1, 0, 1, 1, 0, 0}, y, w);
        const auto resid = residualize_on_w(trial);
        for (double v : resid.y) REQUIRE(std::fabs(v) < 1e-12);
        const auto r = full_report(resid, false);
        REQUIRE(std::fabs(r.beta_iv) < 1e-9);
    }
    // Residuals are orthogonal to w.
    {
        ModelSpec spec;
        spec.response.family = ResponseFamily::Arma00;
        spec.response.beta = 1.0;
        spec.response.lambda = 2.0;
        spec.compliance.kind = ComplianceKind::Simple;
        spec.compliance.alpha = 1.0;
        spec.compliance.omega = 1.5;
        spec.n = 400;
        spec.seed = 9;
        const auto trial = simulate_trial(spec);
        const auto resid = residualize_on_w(trial);
        auto sd = [](const std::vector<double>& v) {
            double m = 0.0;
            for (double a : v) m += a;
            m /= static_cast<double>(v.size());
            double s = 0.0;
            for (double a : v) s += (a - m) * (a - m);
            return std::sqrt(s / static_cast<double>(v.size()));
        };
        REQUIRE(std::fabs(sample_cov(resid.y, resid.w)) <
                1e-10 * sd(resid.y) * sd(resid.w) + 1e-300);
        REQUIRE(std::fabs(sample_cov(resid.x, resid.w)) <
                1e-10 * sd(resid.x) * sd(resid.w) + 1e-300);
    }
    // Constant w is a degenerate regression.
    {
        auto trial = make_trial({1, 0, 1, 0}, {1, 0, 1, 1}, {2, 0, 2, 1}, {1, 1, 1, 1});
        REQUIRE_THROWS_AS(residualize_on_w(trial), DegenerateRegressionError);
    }
    // No w at all.
    {
        auto trial = hand_trial();
        REQUIRE_THROWS_AS(residualize_on_w(trial), std::invalid_argument);
        REQUIRE_THROWS_AS(full_report(trial, true), std::invalid_argument);
    }
}

TEST_CASE("adjustment is asymptotically a no-op when w is irrelevant", "[estimators][mc]") {
    ModelSpec spec;
    spec.response.family = ResponseFamily::Arma00;
    spec.response.beta = 2.0;
    spec.response.eta = 1.0;
    spec.response.lambda = 0.0;  // w unrelated to y
    spec.compliance.kind = ComplianceKind::Simple;
    spec.compliance.alpha = 1.5;
    spec.compliance.omega = 0.0;  // w unrelated to x
    spec.compliance.gamma = 0.5;
    spec.n = 10000;
    spec.seed = 2718;
    const auto trial = simulate_trial(spec);
    const double raw = estimate_iv(trial);
    const double adj = estimate_iv(residualize_on_w(trial));
    REQUIRE(std::fabs(raw - adj) < 0.05);
}

TEST_CASE("naive t-test", "[estimators]") {
    // x = z with no confounding: slope equals the ITT contrast.
    {
        const auto trial = make_trial({1, 0, 0, 1, 1, 0}, {1, 0, 0, 1, 1, 0},
                                      {2.1, 0.3, -0.8, 2.9, 1.4, 0.6});
        const auto t = naive_t_test(trial, false);
        REQUIRE(t.slope == Approx(estimate_itt(trial)).epsilon(1e-12));
    }
    // Constant y: slope 0, t 0.
    {
        const auto trial = make_trial({1, 0, 1, 0}, {1, 0, 1, 1}, {3, 3, 3, 3});
        const auto t = naive_t_test(trial, false);
        REQUIRE(t.slope == 0.0);
        REQUIRE(t.t == 0.0);
        REQUIRE(t.p == 1.0);
    }
    // One treatment group empty.
    {
        const auto trial = make_trial({1, 0, 1, 0}, {1, 1, 1, 1}, {1, 2, 3, 4});
        REQUIRE_THROWS_AS(naive_t_test(trial, false), UndefinedEstimatorError);
    }
}

TEST_CASE("masked points are excluded from every estimator", "[estimators]") {
    // Append poison rows and mask them out: results must match the clean trial.
    auto clean = hand_trial();
    auto poisoned = clean;
    poisoned.z.push_back(1);
    poisoned.x.push_back(0.0);
    poisoned.y.push_back(1e9);
    poisoned.u.push_back(0.0);
    poisoned.observed_mask.push_back(0);
    const auto a = full_report(clean, false);
    const auto b = full_report(poisoned, false);
    REQUIRE(a.beta_iv == b.beta_iv);
    REQUIRE(a.beta_itt == b.beta_itt);
    REQUIRE(a.cov_zx == b.cov_zx);
}

TEST_CASE("Monte Carlo consistency of IV and ITT", "[estimators][mc]") {
    // Simple compliance, ARMA(0,0), beta = 2, n = 800: the IV estimator is
    // consistent for beta and ITT for K*beta.
    const int reps = 500;
    double sum_iv = 0.0, ss_iv = 0.0;
    double sum_d = 0.0, ss_d = 0.0;  // d = beta_itt - 2 * ace_zx
    for (int rep = 0; rep < reps; ++rep) {
        ModelSpec spec;
        spec.response.family = ResponseFamily::Arma00;
        spec.response.beta = 2.0;
        spec.response.eta = 1.5;
        spec.response.lambda = 1.0;
        spec.compliance.kind = ComplianceKind::Simple;
        spec.compliance.alpha = 1.0;
        spec.compliance.omega = 0.8;
        spec.compliance.gamma = 0.8;
        spec.n = 800;
        spec.seed = 10000 + static_cast<std::uint64_t>(rep);
        const auto r = full_report(simulate_trial(spec), false);
        sum_iv += r.beta_iv;
        ss_iv += r.beta_iv * r.beta_iv;
        const double d = r.beta_itt - 2.0 * r.ace_z_on_x;
        sum_d += d;
        ss_d += d * d;
    }
    const double mean_iv = sum_iv / reps;
    const double se_iv = std::sqrt((ss_iv / reps - mean_iv * mean_iv) / reps);
    REQUIRE(std::fabs(mean_iv - 2.0) < 3.0 * se_iv);

    const double mean_d = sum_d / reps;
    const double se_d = std::sqrt((ss_d / reps - mean_d * mean_d) / reps);
    REQUIRE(std::fabs(mean_d) < 3.0 * se_d);
}

TEST_CASE("compliance Fisher diagnostic", "[estimators]") {
    const auto strong = make_trial({1, 1, 1, 1, 1, 0, 0, 0, 0, 0},
                                   {1, 1, 1, 1, 1, 0, 0, 0, 0, 0},
                                   {1, 2, 3, 4, 5, 6, 7, 8, 9, 10});
    REQUIRE(compliance_fisher_p(strong) < 0.01);
    auto real_x = strong;
    real_x.x[0] = 0.5;
    REQUIRE_THROWS_AS(compliance_fisher_p(real_x), std::invalid_argument);
}
