#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace ivrand {

// Error family for every continuous disturbance (epsilon, W, U, L, H, C).
// Both are mean 0 and variance 1; Uniform is supported on [-sqrt(3), sqrt(3)].
enum class ErrorFamily { Gaussian, Uniform };

enum class ResponseFamily {
    Arma11,
    Arma10,
    Arma01,
    Arma00,
    Arch1,
    Garch11,
    Tar1,
    Lstar1,
    Estar1,
    Setar1,
};

constexpr int kNumResponseFamilies = 10;

std::string to_string(ResponseFamily f);
ResponseFamily response_family_from_string(const std::string& name);
std::string to_string(ErrorFamily f);
ErrorFamily error_family_from_string(const std::string& name);

// Full parameterization of one response recursion. Fields not used by the
// selected family are ignored and never read by the simulator.
struct ResponseModelSpec {
    ResponseFamily family = ResponseFamily::Arma00;

    double phi1 = 0.0;    // AR(1) coefficient (ARMA families)
    double theta1 = 0.0;  // MA(1) coefficient (ARMA families)
    double phi11 = 0.0;   // lower-regime AR coefficient (threshold families)
    double phi12 = 0.0;   // upper-regime AR coefficient (threshold families)

    double a1 = 0.0;        // ARCH coefficient on Y_{t-1}^2
    double b1 = 0.0;        // GARCH coefficient on sigma^2_{t-1}
    double mu_sigma = 1.0;  // conditional-variance intercept

    double beta = 0.0;    // causal effect of X_t on Y_t
    double delta1 = 0.0;  // lagged-treatment effect (X_{t-1})
    double lambda = 0.0;  // coefficient on W_t
    double eta = 0.0;     // coefficient on U_t
    double psi = 0.0;     // coefficient on the ubiquitous latent L

    // Skips the stationarity bounds on phi1/phi11/phi12 (and a1 + b1 <= 1).
    bool allow_nonstationary = false;
};

enum class ComplianceKind { Complex, Simple };

std::string to_string(ComplianceKind k);
ComplianceKind compliance_kind_from_string(const std::string& name);

// Threshold model for the actual treatment. Simple never evaluates varphi or rho.
struct ComplianceSpec {
    ComplianceKind kind = ComplianceKind::Simple;
    double alpha = 1.0;   // instrument strength, > 0
    double omega = 0.0;   // coefficient on W_t
    double gamma = 0.0;   // coefficient on U_t
    double varphi = 0.0;  // coefficient on the ubiquitous latent H (Complex only)
    double rho = 0.0;     // AR(1) coefficient of the threshold noise (Complex only)
    bool allow_nonstationary = false;
};

enum class SelectionMechanism {
    None,
    DebilitationMediator,
    CompetitiveSkipOnZ,
    DebilitationPlusDepression,
};

std::string to_string(SelectionMechanism m);
SelectionMechanism selection_mechanism_from_string(const std::string& name);

// Logistic missingness propensities. The debilitation variable is
//   D_t = d0 + d1 * X_t + nu_t,  nu_t ~ N(0, 1),
// and the keep probability is
//   DebilitationMediator:        sigmoid(c0 + c1 * D_t)
//   CompetitiveSkipOnZ:          sigmoid(c0 + c1 * Z_t)
//   DebilitationPlusDepression:  sigmoid(c0 + c1 * D_t + c2 * U_t)
// where U_t is the trial's retained time-specific latent (the variable that
// raises Y_t through eta), playing the depression role.
struct SelectionSpec {
    SelectionMechanism mechanism = SelectionMechanism::None;
    double c0 = 0.0;
    double c1 = 0.0;
    double c2 = 0.0;
    double d0 = 0.0;
    double d1 = 0.0;
};

struct ModelSpec {
    ResponseModelSpec response;
    ComplianceSpec compliance;
    ErrorFamily errors = ErrorFamily::Gaussian;
    int n = 100;             // series length; >= 10
    std::uint64_t seed = 0;  // root of all streams for this trial
};

struct LatentScalars {
    double l = 0.0;  // ubiquitous latent raising Y
    double h = 0.0;  // ubiquitous latent entering X (Complex compliance)
    double c = 0.0;  // ubiquitous confounder; drawn but unused by the recursions
};

// One simulated (or observed) n-of-1 trial. z is the randomized suggestion,
// x the actual treatment, y the response. u and the latent scalars are kept
// for oracle checks only. x and y are doubles because covariate adjustment
// replaces them with regression residuals.
struct TrialSeries {
    std::vector<std::uint8_t> z;
    std::vector<double> x;
    std::vector<double> y;
    std::vector<double> w;
    std::vector<double> u;
    LatentScalars latent_scalars;
    std::vector<std::uint8_t> observed_mask;  // defaults to all-true

    int n() const { return static_cast<int>(z.size()); }
    int n_observed() const {
        int k = 0;
        for (auto m : observed_mask) k += (m != 0);
        return k;
    }
    bool has_w() const { return !w.empty(); }
};

}  // namespace ivrand
