#include "ivrand/rand_inference.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <string>

#include "ivrand/errors.hpp"
#include "ivrand/estimators.hpp"
#include "ivrand/rng.hpp"
#include "ivrand/stats.hpp"

namespace ivrand {

namespace {

constexpr std::uint64_t kPermStreamTag = UINT64_C(0x7065726d);  // "perm"

// Permutation index matrices above this entry count are regenerated on the
// fly instead of stored (only matters for very large n_perm).
constexpr std::size_t kMaxStoredEntries = std::size_t{16} << 20;

// Shared state for one trial's randomization tests. Permutation b is derived
// from (seed, kPermStreamTag, b) alone, so evaluation order never matters.
class PermEngine {
public:
    PermEngine(const TrialSeries& trial, int n_perm, std::uint64_t seed)
        : n_perm_(n_perm), seed_(seed) {
        const auto n = static_cast<std::size_t>(trial.n());
        for (std::size_t t = 0; t < n; ++t) {
            if (!trial.observed_mask[t]) continue;
            z_.push_back(trial.z[t]);
            x_.push_back(trial.x[t]);
            y_.push_back(trial.y[t]);
        }
        m_ = static_cast<int>(z_.size());
        for (int t = 0; t < m_; ++t)
            if (z_[static_cast<std::size_t>(t)]) z1_slots_.push_back(static_cast<std::uint32_t>(t));
        n1_ = static_cast<int>(z1_slots_.size());
        if (m_ < 2) throw UndefinedEstimatorError("fewer than 2 observed points");
        if (n1_ == 0 || n1_ == m_)
            throw UndefinedEstimatorError("one suggestion group (z = 0 or z = 1) is empty");

        std::vector<double> zd(z_.begin(), z_.end());
        zbar_ = stats::mean(zd);
        var_z_ = stats::variance_n(zd);
        cov_zx_ = sample_cov(zd, x_);
    }

    int n_perm() const { return n_perm_; }
    int m() const { return m_; }
    double var_z() const { return var_z_; }
    double cov_zx() const { return cov_zx_; }
    double k_constant() const { return cov_zx_ / var_z_; }

    // Numerator cov(z, v) for the observed pairing of a response vector v.
    double observed_num(std::span<const double> v) const {
        double s = 0.0;
        for (auto slot : z1_slots_) s += v[slot];
        return s / static_cast<double>(m_) - zbar_ * stats::mean(v);
    }

    // Numerators cov(z, v_perm) for all permutations. The same summation
    // pattern as observed_num keeps ties exact between observed and permuted
    // values (the identity permutation reproduces observed_num bit for bit).
    std::vector<double> permuted_nums(std::span<const double> v) {
        ensure_slot_images();
        const double c1 = zbar_ * stats::mean(v);
        const double inv_m = 1.0 / static_cast<double>(m_);
        std::vector<double> nums(static_cast<std::size_t>(n_perm_));
        if (!slot_images_.empty()) {
            const auto n1 = static_cast<std::size_t>(n1_);
            for (int b = 0; b < n_perm_; ++b) {
                const std::uint32_t* row = slot_images_.data() + static_cast<std::size_t>(b) * n1;
                double s = 0.0;
                for (std::size_t j = 0; j < n1; ++j) s += v[row[j]];
                nums[static_cast<std::size_t>(b)] = s * inv_m - c1;
            }
        } else {
            std::vector<std::uint32_t> perm(static_cast<std::size_t>(m_));
            for (int b = 0; b < n_perm_; ++b) {
                fill_permutation(perm, b);
                double s = 0.0;
                for (auto slot : z1_slots_) s += v[perm[slot]];
                nums[static_cast<std::size_t>(b)] = s * inv_m - c1;
            }
        }
        return nums;
    }

    // Response with the location shift applied to the assigned control group,
    // then centered (centering changes no covariance and keeps the subset sums
    // well conditioned when y has a large mean).
    std::vector<double> shifted_response(double shift) const {
        std::vector<double> v(y_.size());
        for (std::size_t t = 0; t < y_.size(); ++t)
            v[t] = y_[t] + shift * (1.0 - static_cast<double>(z_[t]));
        const double m = stats::mean(v);
        for (double& x : v) x -= m;
        return v;
    }

private:
    void fill_permutation(std::vector<std::uint32_t>& perm, int b) const {
        std::iota(perm.begin(), perm.end(), 0u);
        auto rng = RngStream::from_key(seed_, kPermStreamTag, static_cast<std::uint64_t>(b));
        const auto m = static_cast<std::uint32_t>(m_);
        for (std::uint32_t t = 0; t + 1 < m; ++t) {
            const std::uint32_t j = t + rng.uniform_below(m - t);
            std::swap(perm[t], perm[j]);
        }
    }

    // Stores, per permutation, only the images at the z = 1 slots.
    void ensure_slot_images() {
        if (images_ready_) return;
        images_ready_ = true;
        const auto entries =
            static_cast<std::size_t>(n_perm_) * static_cast<std::size_t>(n1_);
        if (entries > kMaxStoredEntries) return;  // fall back to streaming
        slot_images_.resize(entries);
        std::vector<std::uint32_t> perm(static_cast<std::size_t>(m_));
        const auto n1 = static_cast<std::size_t>(n1_);
        for (int b = 0; b < n_perm_; ++b) {
            fill_permutation(perm, b);
            std::uint32_t* row = slot_images_.data() + static_cast<std::size_t>(b) * n1;
            for (std::size_t j = 0; j < n1; ++j) row[j] = perm[z1_slots_[j]];
        }
    }

    int n_perm_;
    std::uint64_t seed_;
    int m_ = 0;
    int n1_ = 0;
    double zbar_ = 0.0;
    double var_z_ = 0.0;
    double cov_zx_ = 0.0;
    std::vector<std::uint8_t> z_;
    std::vector<double> x_;
    std::vector<double> y_;
    std::vector<std::uint32_t> z1_slots_;
    std::vector<std::uint32_t> slot_images_;
    bool images_ready_ = false;
};

long count_exceedances(std::span<const double> nums, double num_obs, Sidedness side,
                       double denom) {
    long count = 0;
    switch (side) {
        case Sidedness::TwoSided: {
            const double q = std::fabs(num_obs);
            for (double v : nums) count += std::fabs(v) >= q;
            break;
        }
        case Sidedness::GreaterThan: {
            if (denom > 0.0)
                for (double v : nums) count += v >= num_obs;
            else
                for (double v : nums) count += v <= num_obs;
            break;
        }
        case Sidedness::LessThan: {
            if (denom > 0.0)
                for (double v : nums) count += v <= num_obs;
            else
                for (double v : nums) count += v >= num_obs;
            break;
        }
    }
    return count;
}

double p_from_count(long exceed, int n_perm, PConvention convention) {
    if (convention == PConvention::PlainProportion)
        return static_cast<double>(exceed) / static_cast<double>(n_perm);
    return static_cast<double>(1 + exceed) / static_cast<double>(1 + n_perm);
}

NullSummary summarize_null(std::vector<double> stats_sorted) {
    NullSummary s;
    const auto n = static_cast<double>(stats_sorted.size());
    double mean = 0.0;
    for (double v : stats_sorted) mean += v;
    mean /= n;
    double ss = 0.0;
    for (double v : stats_sorted) {
        const double d = v - mean;
        ss += d * d;
    }
    std::sort(stats_sorted.begin(), stats_sorted.end());
    s.mean = mean;
    s.sd = std::sqrt(ss / n);
    s.min = stats_sorted.front();
    s.max = stats_sorted.back();
    s.q025 = stats::quantile_sorted(stats_sorted, 0.025);
    s.q05 = stats::quantile_sorted(stats_sorted, 0.05);
    s.q25 = stats::quantile_sorted(stats_sorted, 0.25);
    s.q50 = stats::quantile_sorted(stats_sorted, 0.5);
    s.q75 = stats::quantile_sorted(stats_sorted, 0.75);
    s.q95 = stats::quantile_sorted(stats_sorted, 0.95);
    s.q975 = stats::quantile_sorted(stats_sorted, 0.975);
    return s;
}

RandTestResult run_engine_test(PermEngine& engine, const RandTestConfig& cfg,
                               TestStatistic requested, double shift,
                               Sidedness stat_side, bool fell_back) {
    const auto v = engine.shifted_response(shift);
    const double num_obs = engine.observed_num(v);
    const auto nums = engine.permuted_nums(v);
    const double denom =
        requested == TestStatistic::IV ? engine.cov_zx() : engine.var_z();

    RandTestResult result;
    result.statistic = requested;
    result.sidedness = stat_side;
    result.fell_back_to_itt = fell_back;
    result.n_perm = cfg.n_perm;
    result.exceed_count = count_exceedances(nums, num_obs, stat_side, denom);
    result.p_value = p_from_count(result.exceed_count, cfg.n_perm, cfg.p_convention);
    result.stat_observed = num_obs / denom;
    std::vector<double> scaled(nums.size());
    for (std::size_t i = 0; i < nums.size(); ++i) scaled[i] = nums[i] / denom;
    result.null_summary = summarize_null(std::move(scaled));
    return result;
}

}  // namespace

std::string to_string(Sidedness s) {
    switch (s) {
        case Sidedness::TwoSided: return "two-sided";
        case Sidedness::GreaterThan: return "greater";
        case Sidedness::LessThan: return "less";
    }
    return "unknown";
}

Sidedness sidedness_from_string(const std::string& name) {
    if (name == "two-sided" || name == "two_sided" || name == "twosided")
        return Sidedness::TwoSided;
    if (name == "greater") return Sidedness::GreaterThan;
    if (name == "less") return Sidedness::LessThan;
    throw std::invalid_argument("unknown sidedness: " + name);
}

std::string to_string(PConvention c) {
    return c == PConvention::PlainProportion ? "plain" : "plus-one";
}

PConvention p_convention_from_string(const std::string& name) {
    if (name == "plain" || name == "plain_proportion") return PConvention::PlainProportion;
    if (name == "plus-one" || name == "plus_one" || name == "plusone")
        return PConvention::PlusOne;
    throw std::invalid_argument("unknown p-value convention: " + name);
}

void validate(const RandTestConfig& cfg) {
    if (cfg.n_perm < 100)
        throw std::invalid_argument("RandTestConfig.n_perm must be >= 100 (got " +
                                    std::to_string(cfg.n_perm) + ")");
}

RandTestResult rand_test_sharp_null(const TrialSeries& trial, const RandTestConfig& cfg,
                                    TestStatistic statistic) {
    validate(cfg);
    PermEngine engine(trial, cfg.n_perm, cfg.seed);
    bool fell_back = false;
    TestStatistic effective = statistic;
    if (statistic == TestStatistic::IV && engine.cov_zx() == 0.0) {
        effective = TestStatistic::ITT;
        fell_back = true;
    }
    return run_engine_test(engine, cfg, effective, 0.0, cfg.sidedness, fell_back);
}

namespace {

Sidedness beta_side_to_itt_side(Sidedness side, double k_constant) {
    if (side == Sidedness::TwoSided) return Sidedness::TwoSided;
    const bool greater = side == Sidedness::GreaterThan;
    // H1: beta > beta_j means the modified ITT effect K*(beta - beta_j) is
    // positive when K > 0 and negative when K < 0.
    if (k_constant > 0.0) return greater ? Sidedness::GreaterThan : Sidedness::LessThan;
    return greater ? Sidedness::LessThan : Sidedness::GreaterThan;
}

RandTestResult location_test_with_engine(PermEngine& engine, double beta_j,
                                         Sidedness side, const RandTestConfig& cfg) {
    const double k = engine.k_constant();
    const Sidedness stat_side = beta_side_to_itt_side(side, k);
    return run_engine_test(engine, cfg, TestStatistic::ITT, beta_j * k, stat_side, false);
}

}  // namespace

RandTestResult rand_test_location(const TrialSeries& trial, double beta_j,
                                  Sidedness side, const RandTestConfig& cfg) {
    validate(cfg);
    PermEngine engine(trial, cfg.n_perm, cfg.seed);
    if (engine.cov_zx() == 0.0)
        throw CannotInvertError("cov(Z, X) = 0: K is zero, location tests are undefined");
    return location_test_with_engine(engine, beta_j, side, cfg);
}

PValueProfile pvalue_profile(const TrialSeries& trial, const RandTestConfig& cfg,
                             double grid_step) {
    validate(cfg);
    PermEngine engine(trial, cfg.n_perm, cfg.seed);
    if (engine.cov_zx() == 0.0)
        throw CannotInvertError("cov(Z, X) = 0: K is zero, the profile is undefined");

    PValueProfile profile;
    profile.k_constant = engine.k_constant();
    const auto v = engine.shifted_response(0.0);
    profile.beta_hat = engine.observed_num(v) / engine.cov_zx();

    const double step =
        grid_step > 0.0 ? grid_step : std::max(std::fabs(profile.beta_hat) / 50.0, 0.01);
    constexpr long kMaxSteps = 1000000;

    auto march = [&](int direction, Sidedness beta_side,
                     std::vector<std::pair<double, double>>& out) {
        for (long i = direction > 0 ? 1 : 0;; ++i) {
            double beta_j = profile.beta_hat + direction * static_cast<double>(i) * step;
            if (std::fabs(beta_j) < step * 1e-9) beta_j = 0.0;  // land exactly on zero
            const auto r = location_test_with_engine(engine, beta_j, beta_side, cfg);
            out.emplace_back(beta_j, r.p_value);
            if (r.exceed_count == 0) break;
            if (i >= kMaxSteps)
                throw std::runtime_error("pvalue_profile: arm failed to terminate");
        }
    };

    std::vector<std::pair<double, double>> left, right;
    march(-1, Sidedness::GreaterThan, left);  // includes the center point
    march(+1, Sidedness::LessThan, right);

    profile.grid.assign(left.rbegin(), left.rend());
    profile.grid.insert(profile.grid.end(), right.begin(), right.end());
    return profile;
}

namespace {

std::size_t center_index(const PValueProfile& profile) {
    for (std::size_t i = 0; i < profile.grid.size(); ++i)
        if (profile.grid[i].first == profile.beta_hat) return i;
    // Fall back to the closest grid point (externally constructed profiles).
    std::size_t best = 0;
    double best_d = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < profile.grid.size(); ++i) {
        const double d = std::fabs(profile.grid[i].first - profile.beta_hat);
        if (d < best_d) {
            best_d = d;
            best = i;
        }
    }
    return best;
}

}  // namespace

std::vector<double> smoothed_profile_p(const PValueProfile& profile) {
    const std::size_t n = profile.grid.size();
    if (n == 0) return {};
    const std::size_t c = center_index(profile);

    std::vector<double> left_arm;  // center outward to the left
    for (std::size_t i = c + 1; i-- > 0;) left_arm.push_back(profile.grid[i].second);
    std::vector<double> right_arm;  // center outward to the right
    for (std::size_t i = c; i < n; ++i) right_arm.push_back(profile.grid[i].second);

    const auto left_sm = stats::pava_non_increasing(left_arm);
    const auto right_sm = stats::pava_non_increasing(right_arm);

    std::vector<double> out(n);
    for (std::size_t j = 0; j < left_sm.size(); ++j) out[c - j] = left_sm[j];
    for (std::size_t j = 0; j < right_sm.size(); ++j) out[c + j] = right_sm[j];
    out[c] = std::max(left_sm.front(), right_sm.front());
    return out;
}

ConfidenceInterval ci_from_profile(const PValueProfile& profile, double alpha) {
    if (!(alpha > 0.0 && alpha < 0.5))
        throw std::invalid_argument("ci_from_profile: alpha must lie in (0, 0.5)");
    if (profile.grid.size() < 2)
        throw std::invalid_argument("ci_from_profile: profile grid too small");

    const auto sm = smoothed_profile_p(profile);
    const std::size_t c = center_index(profile);
    if (sm[c] <= alpha)
        throw EmptyIntervalError(
            "entire profile at or below alpha; refine the grid or raise n_perm");

    auto beta_at = [&](std::size_t i) { return profile.grid[i].first; };

    // Left boundary: walk outward (downward in beta) to the first p <= alpha.
    ConfidenceInterval ci;
    {
        std::size_t i = c;
        while (i > 0 && sm[i - 1] > alpha) --i;
        if (i == 0) {
            ci.lo = beta_at(0);  // profile never crossed; boundary at the grid edge
        } else {
            const double p_inner = sm[i], b_inner = beta_at(i);
            const double p_outer = sm[i - 1], b_outer = beta_at(i - 1);
            ci.lo = b_outer + (b_inner - b_outer) * (alpha - p_outer) / (p_inner - p_outer);
        }
    }
    {
        std::size_t i = c;
        const std::size_t last = profile.grid.size() - 1;
        while (i < last && sm[i + 1] > alpha) ++i;
        if (i == last) {
            ci.hi = beta_at(last);
        } else {
            const double p_inner = sm[i], b_inner = beta_at(i);
            const double p_outer = sm[i + 1], b_outer = beta_at(i + 1);
            ci.hi = b_outer + (b_inner - b_outer) * (alpha - p_outer) / (p_inner - p_outer);
        }
    }
    return ci;
}

}  // namespace ivrand
