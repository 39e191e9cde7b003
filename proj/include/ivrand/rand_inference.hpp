#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include "ivrand/trial.hpp"

namespace ivrand {

enum class Sidedness { TwoSided, GreaterThan, LessThan };
enum class PConvention { PlainProportion, PlusOne };
enum class TestStatistic { IV, ITT };

std::string to_string(Sidedness s);
Sidedness sidedness_from_string(const std::string& name);
std::string to_string(PConvention c);
PConvention p_convention_from_string(const std::string& name);

struct RandTestConfig {
    int n_perm = 10000;  // >= 100
    Sidedness sidedness = Sidedness::TwoSided;
    PConvention p_convention = PConvention::PlainProportion;
    std::uint64_t seed = 0;
};

void validate(const RandTestConfig& cfg);

struct NullSummary {
    double mean = 0.0;
    double sd = 0.0;
    double min = 0.0;
    double q025 = 0.0;
    double q05 = 0.0;
    double q25 = 0.0;
    double q50 = 0.0;
    double q75 = 0.0;
    double q95 = 0.0;
    double q975 = 0.0;
    double max = 0.0;
};

struct RandTestResult {
    double stat_observed = 0.0;
    long exceed_count = 0;
    int n_perm = 0;
    double p_value = 1.0;
    NullSummary null_summary;
    TestStatistic statistic = TestStatistic::IV;
    Sidedness sidedness = Sidedness::TwoSided;
    bool fell_back_to_itt = false;
};

// Randomization test of the sharp null H0: beta = 0. Only y is permuted; the
// (z, x) pairs stay intact, and only observed indices enter the permutation.
// Because the IV and ITT statistics share the permutation-varying numerator
// cov(Z, y_perm) while their denominators are permutation constants, exceedance
// comparisons are evaluated on the shared numerator: p-values under the two
// statistics are bit-identical for a shared seed (two-sided always; one-sided
// whenever the denominators agree in sign). A degenerate instrument
// (cov(Z,X) = 0) with statistic IV falls back to ITT and sets a flag.
RandTestResult rand_test_sharp_null(const TrialSeries& trial, const RandTestConfig& cfg,
                                    TestStatistic statistic);

// Randomization test of H0: beta = beta_j against a one-sided alternative,
// via the equivalent two-sample location problem on the ITT scale: the
// modified response ytilde_t = y_t + beta_j * K * 1{z_t = 0} has zero ITT
// effect under H0, and the ITT test of zero is run on ytilde. `side` is the
// alternative in beta space (GreaterThan means H1: beta > beta_j).
// Throws CannotInvertError when K = 0.
RandTestResult rand_test_location(const TrialSeries& trial, double beta_j,
                                  Sidedness side, const RandTestConfig& cfg);

// One-sided randomization p-value profile: starting from beta_hat = beta_iv,
// each arm walks outward in steps of grid_step (default |beta_hat|/50 with a
// floor of 0.01 when grid_step <= 0), testing H1: beta > beta_j on the left
// arm and H1: beta < beta_j on the right arm, and terminates at the first
// exceedance count of zero. All grid points share one permutation stream.
struct PValueProfile {
    std::vector<std::pair<double, double>> grid;  // (beta_j, one-sided p), ascending
    double beta_hat = 0.0;
    double k_constant = 0.0;
};

PValueProfile pvalue_profile(const TrialSeries& trial, const RandTestConfig& cfg,
                             double grid_step = 0.0);

struct ConfidenceInterval {
    double lo = 0.0;
    double hi = 0.0;
};

// Reads the 100(1-2*alpha)% confidence interval off a profile: the closure of
// {beta_j : p(beta_j) > alpha} after isotonic (non-increasing per arm)
// smoothing, with linear interpolation at the boundary crossings.
// Throws EmptyIntervalError if the whole smoothed profile is <= alpha.
ConfidenceInterval ci_from_profile(const PValueProfile& profile, double alpha);

// Smoothed copy of the profile's p-values (the function ci_from_profile
// thresholds); exposed for diagnostics and tests.
std::vector<double> smoothed_profile_p(const PValueProfile& profile);

}  // namespace ivrand
