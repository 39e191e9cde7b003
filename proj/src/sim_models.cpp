#include "ivrand/sim_models.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

#include "ivrand/stats.hpp"

namespace ivrand {

namespace {

constexpr double kSqrt3 = 1.7320508075688772;

// Purpose tags for the per-trial sub-streams.
enum StreamTag : std::uint64_t {
    kTagInstrument = 1,
    kTagW = 2,
    kTagU = 3,
    kTagScalars = 4,
    kTagCompliance = 5,
    kTagResponse = 6,
};

void check_same_length(std::size_t a, std::size_t b, const char* what) {
    if (a != b)
        throw std::invalid_argument(std::string("mismatched input lengths in ") + what);
}

}  // namespace

std::string to_string(ResponseFamily f) {
    switch (f) {
        case ResponseFamily::Arma11: return "arma11";
        case ResponseFamily::Arma10: return "arma10";
        case ResponseFamily::Arma01: return "arma01";
        case ResponseFamily::Arma00: return "arma00";
        case ResponseFamily::Arch1: return "arch1";
        case ResponseFamily::Garch11: return "garch11";
        case ResponseFamily::Tar1: return "tar1";
        case ResponseFamily::Lstar1: return "lstar1";
        case ResponseFamily::Estar1: return "estar1";
        case ResponseFamily::Setar1: return "setar1";
    }
    return "unknown";
}

ResponseFamily response_family_from_string(const std::string& name) {
    std::string s;
    for (char ch : name)
        if (ch != '(' && ch != ')' && ch != ',' && ch != ' ' && ch != '_')
            s.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(ch))));
    if (s == "arma11") return ResponseFamily::Arma11;
    if (s == "arma10") return ResponseFamily::Arma10;
    if (s == "arma01") return ResponseFamily::Arma01;
    if (s == "arma00") return ResponseFamily::Arma00;
    if (s == "arch1") return ResponseFamily::Arch1;
    if (s == "garch11") return ResponseFamily::Garch11;
    if (s == "tar1") return ResponseFamily::Tar1;
    if (s == "lstar1") return ResponseFamily::Lstar1;
    if (s == "estar1") return ResponseFamily::Estar1;
    if (s == "setar1") return ResponseFamily::Setar1;
    throw std::invalid_argument("unknown response family: " + name);
}

std::string to_string(ErrorFamily f) {
    return f == ErrorFamily::Gaussian ? "gaussian" : "uniform";
}

ErrorFamily error_family_from_string(const std::string& name) {
    std::string s;
    for (char ch : name) s.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(ch))));
    if (s == "gaussian" || s == "normal") return ErrorFamily::Gaussian;
    if (s == "uniform") return ErrorFamily::Uniform;
    throw std::invalid_argument("unknown error family: " + name);
}

std::string to_string(ComplianceKind k) {
    return k == ComplianceKind::Complex ? "complex" : "simple";
}

ComplianceKind compliance_kind_from_string(const std::string& name) {
    std::string s;
    for (char ch : name) s.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(ch))));
    if (s == "complex") return ComplianceKind::Complex;
    if (s == "simple") return ComplianceKind::Simple;
    throw std::invalid_argument("unknown compliance kind: " + name);
}

std::string to_string(SelectionMechanism m) {
    switch (m) {
        case SelectionMechanism::None: return "none";
        case SelectionMechanism::DebilitationMediator: return "debilitation_mediator";
        case SelectionMechanism::CompetitiveSkipOnZ: return "competitive_skip_on_z";
        case SelectionMechanism::DebilitationPlusDepression: return "debilitation_plus_depression";
    }
    return "unknown";
}

SelectionMechanism selection_mechanism_from_string(const std::string& name) {
    std::string s;
    for (char ch : name) s.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(ch))));
    if (s == "none") return SelectionMechanism::None;
    if (s == "debilitation_mediator") return SelectionMechanism::DebilitationMediator;
    if (s == "competitive_skip_on_z") return SelectionMechanism::CompetitiveSkipOnZ;
    if (s == "debilitation_plus_depression") return SelectionMechanism::DebilitationPlusDepression;
    throw std::invalid_argument("unknown selection mechanism: " + name);
}

double draw_error(ErrorFamily family, RngStream& rng) {
    if (family == ErrorFamily::Gaussian) return rng.normal();
    return kSqrt3 * (2.0 * rng.uniform01() - 1.0);
}

void validate(const ResponseModelSpec& spec) {
    auto bound = [&](double v, const char* name) {
        if (!(std::fabs(v) < 1.0))
            throw std::invalid_argument(std::string(name) + " = " + std::to_string(v) +
                                        " violates the stationarity bound |" + name +
                                        "| < 1 (set allow_nonstationary to override)");
    };
    const bool strict = !spec.allow_nonstationary;
    switch (spec.family) {
        case ResponseFamily::Arma11:
            if (strict) bound(spec.phi1, "phi1");
            break;
        case ResponseFamily::Arma10:
            if (strict) bound(spec.phi1, "phi1");
            break;
        case ResponseFamily::Arma01:
        case ResponseFamily::Arma00:
            break;
        case ResponseFamily::Arch1:
            if (spec.a1 < 0.0 || spec.a1 > 0.99)
                throw std::invalid_argument("a1 must lie in [0, 0.99]");
            break;
        case ResponseFamily::Garch11:
            if (spec.a1 < 0.0 || spec.a1 > 0.99)
                throw std::invalid_argument("a1 must lie in [0, 0.99]");
            if (spec.b1 < 0.0) throw std::invalid_argument("b1 must be >= 0");
            if (strict && spec.a1 + spec.b1 > 1.0 + 1e-12)
                throw std::invalid_argument(
                    "a1 + b1 > 1 violates the GARCH variance-stationarity bound "
                    "(set allow_nonstationary to override)");
            break;
        case ResponseFamily::Tar1:
        case ResponseFamily::Lstar1:
        case ResponseFamily::Estar1:
        case ResponseFamily::Setar1:
            if (strict) {
                bound(spec.phi11, "phi11");
                bound(spec.phi12, "phi12");
            }
            break;
    }
    if (spec.family == ResponseFamily::Arch1 || spec.family == ResponseFamily::Garch11) {
        if (!(spec.mu_sigma > 0.0))
            throw std::invalid_argument("mu_sigma must be > 0 for ARCH/GARCH");
    }
}

void validate(const ComplianceSpec& spec) {
    if (!(spec.alpha > 0.0))
        throw std::invalid_argument("compliance alpha must be > 0");
    if (spec.kind == ComplianceKind::Complex && !spec.allow_nonstationary &&
        !(std::fabs(spec.rho) < 1.0))
        throw std::invalid_argument(
            "rho = " + std::to_string(spec.rho) +
            " violates the stationarity bound |rho| < 1 (set allow_nonstationary to override)");
}

void validate(const ModelSpec& spec) {
    validate(spec.response);
    validate(spec.compliance);
    if (spec.n < 10) throw std::invalid_argument("ModelSpec.n must be >= 10");
}

std::vector<std::uint8_t> simulate_instrument(int n, RngStream& rng) {
    if (n < 1) throw std::invalid_argument("simulate_instrument: n must be >= 1");
    std::vector<std::uint8_t> z(static_cast<std::size_t>(n));
    for (auto& zt : z) zt = rng.bernoulli_half() ? 1 : 0;
    return z;
}

std::vector<double> simulate_compliance(const ComplianceSpec& spec,
                                        std::span<const std::uint8_t> z,
                                        std::span<const double> w,
                                        std::span<const double> u,
                                        double latent_h,
                                        ErrorFamily errors,
                                        RngStream& rng) {
    validate(spec);
    check_same_length(z.size(), w.size(), "simulate_compliance");
    check_same_length(z.size(), u.size(), "simulate_compliance");
    const std::size_t n = z.size();
    std::vector<double> x(n);
    double eps_star = 0.0;
    const bool complex_kind = spec.kind == ComplianceKind::Complex;
    for (std::size_t t = 0; t < n; ++t) {
        const double eps = draw_error(errors, rng);
        double index = spec.alpha * static_cast<double>(z[t]) + spec.omega * w[t] +
                       spec.gamma * u[t];
        if (complex_kind) {
            eps_star = spec.rho * eps_star + eps;
            index += spec.varphi * latent_h + eps_star;
        } else {
            index += eps;
        }
        x[t] = index > 0.0 ? 1.0 : 0.0;
    }
    return x;
}

std::vector<double> simulate_response(const ResponseModelSpec& spec,
                                      std::span<const double> x,
                                      std::span<const double> w,
                                      std::span<const double> u,
                                      double latent_l,
                                      ErrorFamily errors,
                                      RngStream& rng) {
    validate(spec);
    check_same_length(x.size(), w.size(), "simulate_response");
    check_same_length(x.size(), u.size(), "simulate_response");
    const std::size_t n = x.size();
    std::vector<double> y(n);

    double y_prev = 0.0;
    double eps_prev = 0.0;
    double sigma2_prev = spec.mu_sigma;
    double x_prev = 0.0;

    const bool needs_threshold = spec.family == ResponseFamily::Tar1 ||
                                 spec.family == ResponseFamily::Lstar1 ||
                                 spec.family == ResponseFamily::Estar1;

    for (std::size_t t = 0; t < n; ++t) {
        const double g = spec.lambda * w[t] + spec.eta * u[t] + spec.psi * latent_l +
                         spec.beta * x[t] + spec.delta1 * x_prev;
        // Threshold variable first (standard normal regardless of family), then eps.
        const double threshold = needs_threshold ? rng.normal() : 0.0;
        const double eps = draw_error(errors, rng);
        double yt = 0.0;
        switch (spec.family) {
            case ResponseFamily::Arma11:
                yt = g + spec.phi1 * y_prev + spec.theta1 * eps_prev + eps;
                break;
            case ResponseFamily::Arma10:
                yt = g + spec.phi1 * y_prev + eps;
                break;
            case ResponseFamily::Arma01:
                yt = g + spec.theta1 * eps_prev + eps;
                break;
            case ResponseFamily::Arma00:
                yt = g + eps;
                break;
            case ResponseFamily::Arch1: {
                const double sigma2 = spec.mu_sigma + spec.a1 * y_prev * y_prev;
                yt = g + eps * std::sqrt(sigma2);
                sigma2_prev = sigma2;
                break;
            }
            case ResponseFamily::Garch11: {
                const double sigma2 =
                    spec.mu_sigma + spec.a1 * y_prev * y_prev + spec.b1 * sigma2_prev;
                yt = g + eps * std::sqrt(sigma2);
                sigma2_prev = sigma2;
                break;
            }
            case ResponseFamily::Tar1: {
                const double phi = threshold <= 0.0 ? spec.phi11 : spec.phi12;
                yt = g + phi * y_prev + eps;
                break;
            }
            case ResponseFamily::Lstar1: {
                const double gt = 1.0 / (1.0 + std::exp(-threshold));
                yt = g + (spec.phi11 * gt + spec.phi12 * (1.0 - gt)) * y_prev + eps;
                break;
            }
            case ResponseFamily::Estar1: {
                const double gt = 1.0 - std::exp(-threshold * threshold);
                yt = g + (spec.phi11 * gt + spec.phi12 * (1.0 - gt)) * y_prev + eps;
                break;
            }
            case ResponseFamily::Setar1: {
                const double phi = y_prev <= 0.0 ? spec.phi11 : spec.phi12;
                yt = g + phi * y_prev + eps;
                break;
            }
        }
        y[t] = yt;
        y_prev = yt;
        eps_prev = eps;
        x_prev = x[t];
    }
    return y;
}

TrialSeries simulate_trial(const ModelSpec& spec) {
    validate(spec);
    const int total = spec.n + kBurnIn;
    const auto m = static_cast<std::size_t>(total);

    auto rng_z = RngStream::from_key(spec.seed, kTagInstrument);
    auto rng_w = RngStream::from_key(spec.seed, kTagW);
    auto rng_u = RngStream::from_key(spec.seed, kTagU);
    auto rng_scalars = RngStream::from_key(spec.seed, kTagScalars);
    auto rng_x = RngStream::from_key(spec.seed, kTagCompliance);
    auto rng_y = RngStream::from_key(spec.seed, kTagResponse);

    const auto z_full = simulate_instrument(total, rng_z);
    std::vector<double> w_full(m);
    std::vector<double> u_full(m);
    for (auto& v : w_full) v = draw_error(spec.errors, rng_w);
    for (auto& v : u_full) v = draw_error(spec.errors, rng_u);

    LatentScalars latents;
    latents.l = draw_error(spec.errors, rng_scalars);
    latents.h = draw_error(spec.errors, rng_scalars);
    latents.c = draw_error(spec.errors, rng_scalars);

    const auto x_full = simulate_compliance(spec.compliance, z_full, w_full, u_full,
                                            latents.h, spec.errors, rng_x);
    const auto y_full = simulate_response(spec.response, x_full, w_full, u_full,
                                          latents.l, spec.errors, rng_y);

    TrialSeries trial;
    trial.latent_scalars = latents;
    const auto keep = static_cast<std::size_t>(spec.n);
    const std::size_t off = m - keep;
    trial.z.assign(z_full.begin() + static_cast<long>(off), z_full.end());
    trial.x.assign(x_full.begin() + static_cast<long>(off), x_full.end());
    trial.y.assign(y_full.begin() + static_cast<long>(off), y_full.end());
    trial.w.assign(w_full.begin() + static_cast<long>(off), w_full.end());
    trial.u.assign(u_full.begin() + static_cast<long>(off), u_full.end());
    trial.observed_mask.assign(keep, 1);
    return trial;
}

TrialSeries apply_selection(const TrialSeries& trial, const SelectionSpec& sel,
                            RngStream& rng) {
    for (auto m : trial.observed_mask)
        if (!m)
            throw std::invalid_argument(
                "apply_selection: trial is already masked (observed_mask must be all-true)");

    TrialSeries out = trial;
    if (sel.mechanism == SelectionMechanism::None) return out;

    const int n = trial.n();
    for (int t = 0; t < n; ++t) {
        double keep_prob = 1.0;
        switch (sel.mechanism) {
            case SelectionMechanism::DebilitationMediator: {
                const double debilitation = sel.d0 + sel.d1 * trial.x[static_cast<std::size_t>(t)] + rng.normal();
                keep_prob = stats::sigmoid(sel.c0 + sel.c1 * debilitation);
                break;
            }
            case SelectionMechanism::CompetitiveSkipOnZ: {
                keep_prob = stats::sigmoid(sel.c0 + sel.c1 * static_cast<double>(trial.z[static_cast<std::size_t>(t)]));
                break;
            }
            case SelectionMechanism::DebilitationPlusDepression: {
                const double debilitation = sel.d0 + sel.d1 * trial.x[static_cast<std::size_t>(t)] + rng.normal();
                keep_prob = stats::sigmoid(sel.c0 + sel.c1 * debilitation +
                                           sel.c2 * trial.u[static_cast<std::size_t>(t)]);
                break;
            }
            case SelectionMechanism::None:
                break;
        }
        out.observed_mask[static_cast<std::size_t>(t)] = rng.uniform01() < keep_prob ? 1 : 0;
    }
    return out;
}

}  // namespace ivrand
