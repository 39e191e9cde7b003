#include "ivrand/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <limits>
#include <mutex>
#include <stdexcept>
#include <thread>

#include "ivrand/errors.hpp"
#include "ivrand/rand_inference.hpp"
#include "ivrand/rng.hpp"
#include "ivrand/sim_models.hpp"
#include "ivrand/stats.hpp"

namespace ivrand {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

enum HarnessStreamTag : std::uint64_t {
    kTagLhs = 11,
    kTagTrial = 12,
    kTagPermRaw = 13,
    kTagPermAdj = 14,
};

std::uint64_t cell_code(ResponseFamily model, int setting_id) {
    return static_cast<std::uint64_t>(model) * 100 + static_cast<std::uint64_t>(setting_id);
}

const std::vector<ResponseFamily>& all_families() {
    static const std::vector<ResponseFamily> families = {
        ResponseFamily::Arma11, ResponseFamily::Arma10, ResponseFamily::Arma01,
        ResponseFamily::Arma00, ResponseFamily::Arch1,  ResponseFamily::Garch11,
        ResponseFamily::Tar1,   ResponseFamily::Lstar1, ResponseFamily::Estar1,
        ResponseFamily::Setar1,
    };
    return families;
}

const std::vector<ResponseFamily>& stress_families() {
    static const std::vector<ResponseFamily> families = {
        ResponseFamily::Arma11, ResponseFamily::Arma10, ResponseFamily::Tar1,
        ResponseFamily::Setar1,
    };
    return families;
}

bool uses_phi1(ResponseFamily f) {
    return f == ResponseFamily::Arma11 || f == ResponseFamily::Arma10;
}

bool uses_theta1(ResponseFamily f) {
    return f == ResponseFamily::Arma11 || f == ResponseFamily::Arma01;
}

bool uses_regime_phis(ResponseFamily f) {
    return f == ResponseFamily::Tar1 || f == ResponseFamily::Lstar1 ||
           f == ResponseFamily::Estar1 || f == ResponseFamily::Setar1;
}

bool uses_a1(ResponseFamily f) {
    return f == ResponseFamily::Arch1 || f == ResponseFamily::Garch11;
}

ParamRange make_range(const std::string& name, double lo, double hi,
                      const ExperimentConfig& cfg, bool integer_valued = false) {
    ParamRange r{name, lo, hi, integer_valued};
    const auto it = cfg.range_overrides.find(name);
    if (it != cfg.range_overrides.end()) {
        r.lo = it->second.first;
        r.hi = it->second.second;
    }
    validate(r);
    return r;
}

}  // namespace

SettingSpec setting_from_id(int id) {
    if (id < 1 || id > 8)
        throw std::invalid_argument("setting id must lie in 1..8");
    SettingSpec s;
    s.id = id;
    s.error_family = (id % 2 == 1) ? ErrorFamily::Gaussian : ErrorFamily::Uniform;
    const int within = (id - 1) % 4;  // 0,1 alt; 2,3 null
    s.alt_hypothesis = within < 2;
    s.compliance_kind = id <= 4 ? ComplianceKind::Complex : ComplianceKind::Simple;
    return s;
}

void validate(const ExperimentConfig& cfg) {
    if (cfg.n_datasets_per_cell < 1)
        throw std::invalid_argument("n_datasets_per_cell must be >= 1");
    if (cfg.n_perm < 100) throw std::invalid_argument("n_perm must be >= 100");
    if (cfg.threads < 1) throw std::invalid_argument("threads must be >= 1");
    if (cfg.lhs_sweeps < 0) throw std::invalid_argument("lhs_sweeps must be >= 0");
    for (int id : cfg.settings) setting_from_id(id);
    if (cfg.nonstationary_stress) {
        if (!cfg.allow_nonstationary)
            throw std::invalid_argument(
                "nonstationary stress runs require allow_nonstationary");
        for (auto m : cfg.models) {
            const auto& ok = stress_families();
            if (std::find(ok.begin(), ok.end(), m) == ok.end())
                throw std::invalid_argument("stress mode supports only arma11, arma10, "
                                            "tar1 and setar1 (got " + to_string(m) + ")");
        }
    }
}

ExperimentConfig canonicalize(const ExperimentConfig& cfg) {
    ExperimentConfig out = cfg;
    if (out.models.empty())
        out.models = out.nonstationary_stress ? stress_families() : all_families();
    std::sort(out.models.begin(), out.models.end());
    out.models.erase(std::unique(out.models.begin(), out.models.end()), out.models.end());
    if (out.settings.empty()) out.settings = {1, 2, 3, 4, 5, 6, 7, 8};
    std::sort(out.settings.begin(), out.settings.end());
    out.settings.erase(std::unique(out.settings.begin(), out.settings.end()),
                       out.settings.end());
    validate(out);
    return out;
}

std::vector<ParamRange> cell_axes(ResponseFamily model, const SettingSpec& setting,
                                  const ExperimentConfig& cfg) {
    std::vector<ParamRange> axes;
    axes.push_back(make_range("alpha", 0.5, 4.0, cfg));
    axes.push_back(make_range("omega", -4.0, 4.0, cfg));
    axes.push_back(make_range("gamma", -4.0, 4.0, cfg));
    if (setting.compliance_kind == ComplianceKind::Complex) {
        axes.push_back(make_range("varphi", -4.0, 4.0, cfg));
        if (!cfg.nonstationary_stress) axes.push_back(make_range("rho", -0.8, 0.8, cfg));
    }
    if (setting.alt_hypothesis) axes.push_back(make_range("beta", -4.0, 4.0, cfg));
    axes.push_back(make_range("delta1", -4.0, 4.0, cfg));
    axes.push_back(make_range("lambda", -4.0, 4.0, cfg));
    axes.push_back(make_range("eta", -4.0, 4.0, cfg));
    axes.push_back(make_range("psi", -4.0, 4.0, cfg));
    if (uses_phi1(model) && !cfg.nonstationary_stress)
        axes.push_back(make_range("phi1", -0.8, 0.8, cfg));
    if (uses_theta1(model)) axes.push_back(make_range("theta1", -4.0, 4.0, cfg));
    if (uses_regime_phis(model) && !cfg.nonstationary_stress) {
        axes.push_back(make_range("phi11", -0.8, 0.8, cfg));
        axes.push_back(make_range("phi12", -0.8, 0.8, cfg));
    }
    if (uses_a1(model)) axes.push_back(make_range("a1", 0.0, 0.99, cfg));
    axes.push_back(make_range("n", 50.0, 800.0, cfg, /*integer_valued=*/true));
    return axes;
}

ModelSpec build_model_spec(ResponseFamily model, const SettingSpec& setting,
                           const std::map<std::string, double>& params,
                           const ExperimentConfig& cfg, std::uint64_t trial_seed) {
    auto get = [&](const std::string& name, double fallback) {
        const auto it = params.find(name);
        return it == params.end() ? fallback : it->second;
    };

    ModelSpec spec;
    spec.errors = setting.error_family;
    spec.seed = trial_seed;
    spec.n = static_cast<int>(std::lround(get("n", 100)));

    auto& r = spec.response;
    r.family = model;
    r.beta = setting.alt_hypothesis ? get("beta", 0.0) : 0.0;
    r.delta1 = get("delta1", 0.0);
    r.lambda = get("lambda", 0.0);
    r.eta = get("eta", 0.0);
    r.psi = get("psi", 0.0);
    r.mu_sigma = 1.0;
    if (uses_phi1(model)) r.phi1 = cfg.nonstationary_stress ? 1.0 : get("phi1", 0.0);
    if (uses_theta1(model)) r.theta1 = get("theta1", 0.0);
    if (uses_regime_phis(model)) {
        r.phi11 = cfg.nonstationary_stress ? 1.0 : get("phi11", 0.0);
        r.phi12 = cfg.nonstationary_stress ? 1.0 : get("phi12", 0.0);
    }
    if (uses_a1(model)) {
        r.a1 = get("a1", 0.0);
        if (model == ResponseFamily::Garch11)
            r.b1 = cfg.garch_strict ? 0.99 * (1.0 - r.a1) : 1.0 - r.a1;
    }
    r.allow_nonstationary = cfg.allow_nonstationary;

    auto& c = spec.compliance;
    c.kind = setting.compliance_kind;
    c.alpha = get("alpha", 1.0);
    c.omega = get("omega", 0.0);
    c.gamma = get("gamma", 0.0);
    if (setting.compliance_kind == ComplianceKind::Complex) {
        c.varphi = get("varphi", 0.0);
        c.rho = cfg.nonstationary_stress ? 1.0 : get("rho", 0.0);
    }
    c.allow_nonstationary = cfg.allow_nonstationary;
    return spec;
}

ReplicateRecord run_replicate(ResponseFamily model, const SettingSpec& setting,
                              int replicate, const std::map<std::string, double>& params,
                              const ExperimentConfig& cfg) {
    ReplicateRecord record;
    record.model = model;
    record.setting_id = setting.id;
    record.replicate = replicate;
    record.params = params;
    const std::uint64_t code = cell_code(model, setting.id);
    record.trial_seed =
        derive_seed(cfg.seed, code, static_cast<std::uint64_t>(replicate), kTagTrial);

    const ModelSpec spec = build_model_spec(model, setting, params, cfg, record.trial_seed);
    record.n = spec.n;
    record.beta_true = spec.response.beta;
    record.params["n"] = static_cast<double>(spec.n);
    record.params["beta"] = spec.response.beta;

    try {
        const TrialSeries trial = simulate_trial(spec);
        for (double v : trial.y) {
            if (!std::isfinite(v)) {
                record.nonfinite = true;
                break;
            }
        }
        if (record.nonfinite) {
            record.valid = false;
            record.error = "non-finite response values";
            record.p_iv_raw = record.p_iv_adj = record.p_t_raw = record.p_t_adj = kNaN;
            return record;
        }

        record.raw = full_report(trial, false);
        const TrialSeries adjusted = residualize_on_w(trial);
        record.adj = full_report(adjusted, false);
        record.adj.adjusted = true;
        record.degenerate = record.raw.degenerate;
        record.cor_zx = record.raw.cor_zx;
        record.fisher_p = compliance_fisher_p(trial);

        RandTestConfig tc;
        tc.n_perm = cfg.n_perm;
        tc.sidedness = Sidedness::TwoSided;
        tc.p_convention = PConvention::PlainProportion;
        tc.seed = derive_seed(cfg.seed, code, static_cast<std::uint64_t>(replicate), kTagPermRaw);
        record.p_iv_raw = rand_test_sharp_null(trial, tc, TestStatistic::IV).p_value;
        tc.seed = derive_seed(cfg.seed, code, static_cast<std::uint64_t>(replicate), kTagPermAdj);
        record.p_iv_adj = rand_test_sharp_null(adjusted, tc, TestStatistic::IV).p_value;
        record.p_t_raw = record.raw.naive_p;
        record.p_t_adj = record.adj.naive_p;
    } catch (const std::exception& e) {
        record.valid = false;
        record.error = e.what();
        record.p_iv_raw = record.p_iv_adj = record.p_t_raw = record.p_t_adj = kNaN;
    }
    return record;
}

void parallel_for(int n, int threads, const std::function<void(int)>& fn) {
    if (threads <= 1 || n <= 1) {
        for (int i = 0; i < n; ++i) fn(i);
        return;
    }
    std::atomic<int> next{0};
    std::exception_ptr first_error;
    std::mutex error_mutex;
    auto worker = [&]() {
        for (;;) {
            const int i = next.fetch_add(1);
            if (i >= n) return;
            try {
                fn(i);
            } catch (...) {
                std::lock_guard<std::mutex> lock(error_mutex);
                if (!first_error) first_error = std::current_exception();
                return;
            }
        }
    };
    std::vector<std::thread> pool;
    const int n_workers = std::min(threads, n);
    pool.reserve(static_cast<std::size_t>(n_workers));
    for (int t = 0; t < n_workers; ++t) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
    if (first_error) std::rethrow_exception(first_error);
}

void run_experiment(const ExperimentConfig& raw_cfg,
                    const std::function<void(const ReplicateRecord&)>& sink,
                    const std::set<std::pair<int, int>>& skip_cells) {
    const ExperimentConfig cfg = canonicalize(raw_cfg);
    const int n_reps = cfg.n_datasets_per_cell;

    for (auto model : cfg.models) {
        for (int setting_id : cfg.settings) {
            if (skip_cells.count({static_cast<int>(model), setting_id})) continue;
            const SettingSpec setting = setting_from_id(setting_id);
            const auto axes = cell_axes(model, setting, cfg);
            const std::uint64_t code = cell_code(model, setting_id);
            const auto design =
                lhs_maximin(std::max(2, n_reps), axes, cfg.lhs_sweeps,
                            derive_seed(cfg.seed, code, 0, kTagLhs));

            std::vector<ReplicateRecord> records(static_cast<std::size_t>(n_reps));
            parallel_for(n_reps, cfg.threads, [&](int r) {
                std::map<std::string, double> params;
                const auto& row = design.points[static_cast<std::size_t>(r)];
                for (std::size_t c = 0; c < axes.size(); ++c)
                    params[axes[c].name] = row[c];
                records[static_cast<std::size_t>(r)] =
                    run_replicate(model, setting, r, params, cfg);
            });
            for (const auto& record : records) sink(record);
        }
    }
}

std::vector<ReplicateRecord> run_experiment_collect(const ExperimentConfig& cfg) {
    std::vector<ReplicateRecord> records;
    run_experiment(cfg, [&](const ReplicateRecord& r) { records.push_back(r); });
    return records;
}

int abs_beta_bin(double beta) {
    const double b = std::fabs(beta);
    if (b < 1.0) return 0;
    if (b < 3.0) return 1;
    return 2;
}

int sample_size_bin(int n) {
    if (n < 200) return 0;
    if (n < 400) return 1;
    if (n < 600) return 2;
    return 3;
}

int compliance_bin(double cor_zx) {
    if (!(cor_zx > 0.2)) return 0;
    if (cor_zx <= 0.4) return 1;
    if (cor_zx <= 0.6) return 2;
    return 3;
}

std::vector<double> default_alpha_grid() {
    std::vector<double> grid;
    for (double a = 0.005; a < 0.1005; a += 0.005) grid.push_back(a);
    for (double a = 0.125; a < 1.0001; a += 0.025) grid.push_back(a);
    grid.insert(grid.begin(), {0.001, 0.0025});
    return grid;
}

namespace {

struct StratumCounts {
    long n = 0;
    std::vector<long> rejects;  // per alpha
};

const char* kMethods[] = {"iv_raw", "iv_adj", "t_raw", "t_adj"};

double record_p(const ReplicateRecord& r, int method) {
    switch (method) {
        case 0: return r.p_iv_raw;
        case 1: return r.p_iv_adj;
        case 2: return r.p_t_raw;
        default: return r.p_t_adj;
    }
}

}  // namespace

CurveTable aggregate_curves(const std::vector<ReplicateRecord>& records) {
    CurveTable table;
    table.alpha_grid = default_alpha_grid();
    const auto n_alpha = table.alpha_grid.size();

    // key: method, hypothesis(0 null/1 alt), cor, beta, n  (-1 = pooled)
    std::map<std::tuple<int, int, int, int, int>, StratumCounts> cells;
    auto bump = [&](int method, int hyp, int cor, int beta, int nb, double p) {
        auto& cell = cells[{method, hyp, cor, beta, nb}];
        if (cell.rejects.empty()) cell.rejects.assign(n_alpha, 0);
        cell.n += 1;
        if (!std::isfinite(p)) return;  // never rejects
        for (std::size_t a = 0; a < n_alpha; ++a)
            if (p <= table.alpha_grid[a]) cell.rejects[a] += 1;
    };

    for (const auto& r : records) {
        if (!r.valid || r.nonfinite) {
            table.n_skipped += 1;
            continue;
        }
        const int hyp = setting_from_id(r.setting_id).alt_hypothesis ? 1 : 0;
        for (int m = 0; m < 4; ++m) {
            const double p = record_p(r, m);
            bump(m, hyp, -1, -1, -1, p);
            if (hyp == 1) {
                bump(m, hyp, compliance_bin(r.cor_zx), abs_beta_bin(r.beta_true),
                     sample_size_bin(r.n), p);
            }
        }
    }

    for (const auto& [key, counts] : cells) {
        const auto [method, hyp, cor, beta, nb] = key;
        for (std::size_t a = 0; a < n_alpha; ++a) {
            CurveRow row;
            row.method = kMethods[method];
            row.hypothesis = hyp ? "alt" : "null";
            row.cor_bin = cor;
            row.beta_bin = beta;
            row.n_bin = nb;
            row.alpha = table.alpha_grid[a];
            row.n_records = counts.n;
            row.n_reject = counts.rejects.empty() ? 0 : counts.rejects[a];
            row.rate = counts.n > 0
                           ? static_cast<double>(row.n_reject) / static_cast<double>(counts.n)
                           : kNaN;
            table.rows.push_back(std::move(row));
        }
    }
    return table;
}

namespace {

BiasRow summarize_bias(const std::string& method, const std::string& hypothesis,
                       const std::string& split, std::vector<double> biases) {
    BiasRow row;
    row.method = method;
    row.hypothesis = hypothesis;
    row.compliance_split = split;
    row.count = static_cast<long>(biases.size());
    if (biases.empty()) return row;
    double mean = 0.0;
    for (double b : biases) mean += b;
    mean /= static_cast<double>(biases.size());
    double ss = 0.0;
    double max_abs = 0.0;
    for (double b : biases) {
        ss += (b - mean) * (b - mean);
        max_abs = std::max(max_abs, std::fabs(b));
    }
    std::sort(biases.begin(), biases.end());
    row.mean = mean;
    row.sd = std::sqrt(ss / static_cast<double>(biases.size()));
    row.median = stats::quantile_sorted(biases, 0.5);
    row.iqr = stats::quantile_sorted(biases, 0.75) - stats::quantile_sorted(biases, 0.25);
    row.q05 = stats::quantile_sorted(biases, 0.05);
    row.q95 = stats::quantile_sorted(biases, 0.95);
    row.max_abs = max_abs;
    return row;
}

}  // namespace

std::vector<BiasRow> bias_table(const std::vector<ReplicateRecord>& records) {
    const char* method_names[] = {"iv_raw", "itt_raw", "iv_adj", "itt_adj", "t_raw", "t_adj"};
    auto estimate = [&](const ReplicateRecord& r, int method) {
        switch (method) {
            case 0: return r.raw.beta_iv;
            case 1: return r.raw.beta_itt;
            case 2: return r.adj.beta_iv;
            case 3: return r.adj.beta_itt;
            case 4: return r.raw.naive_slope;
            default: return r.adj.naive_slope;
        }
    };

    // [method][hyp][split] -> biases
    std::vector<double> buckets[6][2][3];
    for (const auto& r : records) {
        if (!r.valid || r.nonfinite) continue;
        const int hyp = setting_from_id(r.setting_id).alt_hypothesis ? 1 : 0;
        const int split = r.fisher_p < 0.05 ? 1 : 2;  // 1 = sig, 2 = nonsig
        for (int m = 0; m < 6; ++m) {
            const double est = estimate(r, m);
            if (!std::isfinite(est)) continue;
            const double bias = r.beta_true - est;
            buckets[m][hyp][0].push_back(bias);
            buckets[m][hyp][split == 1 ? 1 : 2].push_back(bias);
        }
    }

    const char* split_names[] = {"all", "fisher_sig", "fisher_nonsig"};
    std::vector<BiasRow> rows;
    for (int m = 0; m < 6; ++m)
        for (int h = 0; h < 2; ++h)
            for (int s = 0; s < 3; ++s)
                rows.push_back(summarize_bias(method_names[m], h ? "alt" : "null",
                                              split_names[s],
                                              std::move(buckets[m][h][s])));
    return rows;
}

CurveTable nonstationarity_stress(const ExperimentConfig& base) {
    ExperimentConfig cfg = base;
    cfg.nonstationary_stress = true;
    if (cfg.models.empty()) cfg.models = stress_families();
    cfg = canonicalize(cfg);  // validates allow_nonstationary and the model subset
    return aggregate_curves(run_experiment_collect(cfg));
}

}  // namespace ivrand
