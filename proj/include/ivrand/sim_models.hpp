#pragma once

#include <span>
#include <vector>

#include "ivrand/rng.hpp"
#include "ivrand/trial.hpp"

namespace ivrand {

// One draw from the error family (mean 0, variance 1).
double draw_error(ErrorFamily family, RngStream& rng);

// I.i.d. Bernoulli(0.5) suggestion sequence. Throws std::invalid_argument for n < 1.
std::vector<std::uint8_t> simulate_instrument(int n, RngStream& rng);

// Thresholded treatment indicator. Complex threads an AR(1) error
// (eps*_0 = 0); Simple uses fresh errors. One error draw is consumed per time
// point for either kind, so the two kinds see identical noise given the same
// stream, and x_t depends on z only through the alpha * z_t term.
std::vector<double> simulate_compliance(const ComplianceSpec& spec,
                                        std::span<const std::uint8_t> z,
                                        std::span<const double> w,
                                        std::span<const double> u,
                                        double latent_h,
                                        ErrorFamily errors,
                                        RngStream& rng);

// Response recursion for the selected family with
//   g_t = lambda W_t + eta U_t + psi L + beta X_t + delta1 X_{t-1}.
// State initialization: Y_0 = 0, eps_0 = 0, sigma^2_0 = mu_sigma, X_0 = 0.
// Threshold families draw T_t ~ N(0,1) fresh each step (before eps_t).
// simulate_trial handles burn-in by simulating extra points and discarding.
std::vector<double> simulate_response(const ResponseModelSpec& spec,
                                      std::span<const double> x,
                                      std::span<const double> w,
                                      std::span<const double> u,
                                      double latent_l,
                                      ErrorFamily errors,
                                      RngStream& rng);

// Number of leading points simulated and discarded by simulate_trial.
constexpr int kBurnIn = 100;

// Draws W, U, L, H, C, composes instrument, compliance and response over
// n + kBurnIn points, and returns the last n. Sub-streams are derived from
// spec.seed with fixed purpose tags, so the result is a pure function of spec.
TrialSeries simulate_trial(const ModelSpec& spec);

// Applies a missingness mechanism to a fully observed trial: only
// observed_mask changes, data values are untouched. Throws
// std::invalid_argument if the trial is already masked.
TrialSeries apply_selection(const TrialSeries& trial, const SelectionSpec& sel,
                            RngStream& rng);

void validate(const ResponseModelSpec& spec);
void validate(const ComplianceSpec& spec);
void validate(const ModelSpec& spec);

}  // namespace ivrand
