#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "ivrand/estimators.hpp"
#include "ivrand/lhs.hpp"
#include "ivrand/trial.hpp"

namespace ivrand {

// One row of Table-2-style settings: error family x hypothesis x compliance.
struct SettingSpec {
    int id = 1;  // 1..8
    ErrorFamily error_family = ErrorFamily::Gaussian;
    bool alt_hypothesis = true;  // false: data generated under beta = 0
    ComplianceKind compliance_kind = ComplianceKind::Complex;
};

// Bijection between ids 1..8 and the settings grid (1-4 complex, 5-8 simple;
// odd ids gaussian; ids 1,2,5,6 under the alternative).
SettingSpec setting_from_id(int id);

struct ExperimentConfig {
    std::vector<ResponseFamily> models;  // deduped, canonical order; empty = all 10
    std::vector<int> settings;           // deduped ascending; empty = 1..8
    int n_datasets_per_cell = 250;
    int n_perm = 2000;
    std::uint64_t seed = 0;
    int threads = 1;
    int lhs_sweeps = 50;
    bool garch_strict = false;          // b1 = 0.99 * (1 - a1) instead of 1 - a1
    bool nonstationary_stress = false;  // unit-root phi/rho runs (Supp. S8 style)
    bool allow_nonstationary = false;   // required for stress mode
    // Optional [lo, hi] overrides keyed by parameter name.
    std::map<std::string, std::pair<double, double>> range_overrides;
};

void validate(const ExperimentConfig& cfg);

// Fills empty model/setting lists with the defaults and canonicalizes order.
ExperimentConfig canonicalize(const ExperimentConfig& cfg);

struct ReplicateRecord {
    ResponseFamily model = ResponseFamily::Arma00;
    int setting_id = 1;
    int replicate = 0;
    std::uint64_t trial_seed = 0;
    std::map<std::string, double> params;  // full parameter vector, incl. n
    int n = 0;
    double beta_true = 0.0;
    EstimateReport raw;
    EstimateReport adj;
    double p_iv_raw = 1.0;
    double p_iv_adj = 1.0;
    double p_t_raw = 1.0;
    double p_t_adj = 1.0;
    double cor_zx = 0.0;
    double fisher_p = 1.0;
    bool degenerate = false;  // cov(Z,X) == 0 in the raw report
    bool nonfinite = false;   // simulated y contained non-finite values
    bool valid = true;        // false when estimation threw; see error
    std::string error;
};

// Parameter axes for one (model, setting) cell: Table 3 ranges, beta removed
// under the null, phi/rho axes removed in stress mode (they are pinned at 1).
std::vector<ParamRange> cell_axes(ResponseFamily model, const SettingSpec& setting,
                                  const ExperimentConfig& cfg);

// ModelSpec for one LHS draw. `params` must carry every axis named by
// cell_axes; fixed values (beta under the null, unit roots under stress,
// mu_sigma, b1) are filled in here.
ModelSpec build_model_spec(ResponseFamily model, const SettingSpec& setting,
                           const std::map<std::string, double>& params,
                           const ExperimentConfig& cfg, std::uint64_t trial_seed);

// Simulates, estimates and tests one replicate (pure function of its inputs).
ReplicateRecord run_replicate(ResponseFamily model, const SettingSpec& setting,
                              int replicate, const std::map<std::string, double>& params,
                              const ExperimentConfig& cfg);

// Runs every (model, setting) cell sequentially in canonical order, replicates
// in parallel inside each cell, and emits records through `sink` in
// (cell, replicate) order. Cells listed in `skip_cells` (family, setting_id)
// are assumed complete and are not recomputed. Record values depend only on
// (config, seed), never on the thread count.
void run_experiment(const ExperimentConfig& cfg,
                    const std::function<void(const ReplicateRecord&)>& sink,
                    const std::set<std::pair<int, int>>& skip_cells = {});

std::vector<ReplicateRecord> run_experiment_collect(const ExperimentConfig& cfg);

// Stratification bins (paper figure conventions).
int abs_beta_bin(double beta);        // |beta|: [0,1) -> 0, [1,3) -> 1, >= 3 -> 2
int sample_size_bin(int n);           // [50,200) 0, [200,400) 1, [400,600) 2, >= 600 3
int compliance_bin(double cor_zx);    // <= 0.2 -> 0, (0.2,0.4] 1, (0.4,0.6] 2, > 0.6 3
constexpr int kNumAbsBetaBins = 3;
constexpr int kNumSampleSizeBins = 4;
constexpr int kNumComplianceBins = 4;

// Empirical rejection-rate curves: rate(alpha) = fraction of records with
// p <= alpha, per method, pooled by hypothesis and (for alternative records)
// stratified by the bins above. Bin value -1 marks a pooled dimension.
struct CurveRow {
    std::string method;  // iv_raw, iv_adj, t_raw, t_adj
    std::string hypothesis;  // "null" or "alt"
    int cor_bin = -1;
    int beta_bin = -1;
    int n_bin = -1;
    double alpha = 0.0;
    long n_records = 0;
    long n_reject = 0;
    double rate = 0.0;  // NaN for empty strata
};

struct CurveTable {
    std::vector<double> alpha_grid;
    std::vector<CurveRow> rows;
    long n_skipped = 0;  // invalid / non-finite records excluded
};

std::vector<double> default_alpha_grid();

CurveTable aggregate_curves(const std::vector<ReplicateRecord>& records);

// Distribution summaries of beta_true - estimate per method, split by
// hypothesis and by the Fisher compliance-significance filter.
struct BiasRow {
    std::string method;            // iv_raw, itt_raw, iv_adj, itt_adj, t_raw, t_adj
    std::string hypothesis;        // "null" or "alt"
    std::string compliance_split;  // "all", "fisher_sig", "fisher_nonsig"
    long count = 0;
    double mean = 0.0;
    double median = 0.0;
    double sd = 0.0;
    double iqr = 0.0;
    double q05 = 0.0;
    double q95 = 0.0;
    double max_abs = 0.0;
};

std::vector<BiasRow> bias_table(const std::vector<ReplicateRecord>& records);

// Unit-root stress pipeline (Supp. S8): restricts models to
// {ARMA11, ARMA10, TAR1, SETAR1}, pins phi1/phi11/phi12/rho at 1, runs the
// grid and aggregates. Requires cfg.allow_nonstationary.
CurveTable nonstationarity_stress(const ExperimentConfig& cfg);

// Simple dynamic-scheduling parallel loop; fn(i) for i in [0, n).
void parallel_for(int n, int threads, const std::function<void(int)>& fn);

}  // namespace ivrand
