#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>

#include "ivrand/experiment.hpp"
#include "ivrand/io.hpp"

using namespace ivrand;
using Catch::Approx;

namespace {

ExperimentConfig tiny_config() {
    ExperimentConfig cfg;
    cfg.models = {ResponseFamily::Arma10, ResponseFamily::Setar1};
    cfg.settings = {1, 7};  // one alt/complex, one null/simple
    cfg.n_datasets_per_cell = 12;
    cfg.n_perm = 150;
    cfg.seed = 99;
    cfg.lhs_sweeps = 5;
    cfg.range_overrides["n"] = {50.0, 120.0};
    return cfg;
}

}  // namespace

TEST_CASE("setting table bijection", "[experiment]") {
    std::set<std::tuple<int, bool, int>> seen;
    for (int id = 1; id <= 8; ++id) {
        const auto s = setting_from_id(id);
        REQUIRE(s.id == id);
        seen.insert({static_cast<int>(s.error_family), s.alt_hypothesis,
                     static_cast<int>(s.compliance_kind)});
    }
    REQUIRE(seen.size() == 8);
    REQUIRE(setting_from_id(1).compliance_kind == ComplianceKind::Complex);
    REQUIRE(setting_from_id(5).compliance_kind == ComplianceKind::Simple);
    REQUIRE(setting_from_id(3).alt_hypothesis == false);
    REQUIRE(setting_from_id(2).error_family == ErrorFamily::Uniform);
    REQUIRE_THROWS_AS(setting_from_id(0), std::invalid_argument);
    REQUIRE_THROWS_AS(setting_from_id(9), std::invalid_argument);
}

TEST_CASE("cell axes follow the family and setting", "[experiment]") {
    ExperimentConfig cfg;
    auto names = [&](ResponseFamily f, int setting) {
        std::set<std::string> out;
        for (const auto& r : cell_axes(f, setting_from_id(setting), cfg)) out.insert(r.name);
        return out;
    };
    // Complex alternative: compliance extras and beta present.
    auto a = names(ResponseFamily::Arma11, 1);
    REQUIRE(a.count("beta") == 1);
    REQUIRE(a.count("varphi") == 1);
    REQUIRE(a.count("rho") == 1);
    REQUIRE(a.count("phi1") == 1);
    REQUIRE(a.count("theta1") == 1);
    REQUIRE(a.count("a1") == 0);
    // Null: beta is fixed at zero, not sampled.
    auto b = names(ResponseFamily::Arma11, 3);
    REQUIRE(b.count("beta") == 0);
    // Simple compliance: no varphi/rho.
    auto c = names(ResponseFamily::Arch1, 5);
    REQUIRE(c.count("varphi") == 0);
    REQUIRE(c.count("rho") == 0);
    REQUIRE(c.count("a1") == 1);
    REQUIRE(c.count("phi1") == 0);
    // Stress mode drops the pinned unit-root axes.
    ExperimentConfig stress = cfg;
    stress.nonstationary_stress = true;
    stress.allow_nonstationary = true;
    std::set<std::string> d;
    for (const auto& r : cell_axes(ResponseFamily::Tar1, setting_from_id(1), stress))
        d.insert(r.name);
    REQUIRE(d.count("phi11") == 0);
    REQUIRE(d.count("rho") == 0);
}

TEST_CASE("garch b1 coupling follows the mode", "[experiment]") {
    ExperimentConfig cfg;
    std::map<std::string, double> params{{"a1", 0.4}, {"alpha", 1.0}, {"n", 60}};
    const auto literal =
        build_model_spec(ResponseFamily::Garch11, setting_from_id(7), params, cfg, 1);
    REQUIRE(literal.response.b1 == Approx(0.6));
    cfg.garch_strict = true;
    const auto strict =
        build_model_spec(ResponseFamily::Garch11, setting_from_id(7), params, cfg, 1);
    REQUIRE(strict.response.b1 == Approx(0.99 * 0.6));
}

TEST_CASE("tiny grid end to end", "[experiment][mc]") {
    const auto cfg = tiny_config();
    const auto records = run_experiment_collect(cfg);
    REQUIRE(records.size() == 2 * 2 * 12);

    for (const auto& r : records) {
        REQUIRE(r.valid);
        REQUIRE(std::isfinite(r.raw.beta_itt));  // ITT never degenerates here
        if (!setting_from_id(r.setting_id).alt_hypothesis) {
            REQUIRE(r.beta_true == 0.0);
        }
        REQUIRE(r.n >= 50);
        REQUIRE(r.n <= 120);
        REQUIRE(r.p_iv_raw >= 0.0);
        REQUIRE(r.p_iv_raw <= 1.0);
    }
    // Canonical ordering by (model, setting, replicate).
    for (std::size_t i = 1; i < records.size(); ++i) {
        const auto& a = records[i - 1];
        const auto& b = records[i];
        const auto ka = std::make_tuple(static_cast<int>(a.model), a.setting_id, a.replicate);
        const auto kb = std::make_tuple(static_cast<int>(b.model), b.setting_id, b.replicate);
        REQUIRE(ka < kb);
    }
}

TEST_CASE("record stream is invariant to the thread count", "[experiment][mc]") {
    auto cfg = tiny_config();
    cfg.n_datasets_per_cell = 8;
    cfg.threads = 1;
    const auto serial = run_experiment_collect(cfg);
    cfg.threads = 3;
    const auto parallel = run_experiment_collect(cfg);
    REQUIRE(serial.size() == parallel.size());
    for (std::size_t i = 0; i < serial.size(); ++i) {
        REQUIRE(io::record_to_json(serial[i]).dump() ==
                io::record_to_json(parallel[i]).dump());
    }
}

TEST_CASE("skip_cells resumes by cell", "[experiment]") {
    auto cfg = tiny_config();
    cfg.n_datasets_per_cell = 6;
    const auto full = run_experiment_collect(cfg);

    std::vector<ReplicateRecord> partial;
    run_experiment(cfg, [&](const ReplicateRecord& r) { partial.push_back(r); },
                   {{static_cast<int>(ResponseFamily::Arma10), 1}});
    REQUIRE(partial.size() == full.size() - 6);
    // The skipped cell is missing; everything else matches the full run.
    std::size_t j = 0;
    for (const auto& r : full) {
        if (r.model == ResponseFamily::Arma10 && r.setting_id == 1) continue;
        REQUIRE(io::record_to_json(partial[j]).dump() == io::record_to_json(r).dump());
        ++j;
    }
}

TEST_CASE("aggregate_curves basics", "[experiment]") {
    const auto cfg = tiny_config();
    const auto records = run_experiment_collect(cfg);
    const auto table = aggregate_curves(records);
    REQUIRE(table.n_skipped == 0);

    // Rates are non-decreasing in alpha for every (method, stratum) series.
    std::map<std::tuple<std::string, std::string, int, int, int>, double> last_rate;
    std::map<std::tuple<std::string, std::string, int, int, int>, double> last_alpha;
    for (const auto& row : table.rows) {
        const auto key = std::make_tuple(row.method, row.hypothesis, row.cor_bin,
                                         row.beta_bin, row.n_bin);
        if (last_rate.count(key)) {
            REQUIRE(row.alpha > last_alpha[key]);
            if (!std::isnan(row.rate)) REQUIRE(row.rate >= last_rate[key]);
        }
        last_alpha[key] = row.alpha;
        last_rate[key] = std::isnan(row.rate) ? 0.0 : row.rate;
    }

    // A single record yields a step function jumping at its p-value.
    std::vector<ReplicateRecord> one = {records.front()};
    const auto single = aggregate_curves(one);
    for (const auto& row : single.rows) {
        if (row.method != "iv_raw" || row.cor_bin != -1) continue;
        REQUIRE(row.n_records == 1);
        const double expected = row.alpha >= one[0].p_iv_raw ? 1.0 : 0.0;
        REQUIRE(row.rate == expected);
    }
}

TEST_CASE("aggregation is an order-insensitive monoid over records", "[experiment]") {
    const auto cfg = tiny_config();
    auto records = run_experiment_collect(cfg);
    auto table_full = aggregate_curves(records);

    // Split, aggregate the concatenation in scrambled order.
    std::vector<ReplicateRecord> scrambled(records.rbegin(), records.rend());
    auto table_scrambled = aggregate_curves(scrambled);
    REQUIRE(table_full.rows.size() == table_scrambled.rows.size());
    for (std::size_t i = 0; i < table_full.rows.size(); ++i) {
        const auto& a = table_full.rows[i];
        const auto& b = table_scrambled.rows[i];
        REQUIRE(a.method == b.method);
        REQUIRE(a.alpha == b.alpha);
        REQUIRE(a.n_records == b.n_records);
        REQUIRE(a.n_reject == b.n_reject);
    }
}

TEST_CASE("bias table shape", "[experiment]") {
    const auto records = run_experiment_collect(tiny_config());
    const auto rows = bias_table(records);
    REQUIRE(rows.size() == 6 * 2 * 3);
    long alt_all = 0;
    for (const auto& r : rows) {
        if (r.hypothesis == "alt" && r.compliance_split == "all" && r.method == "itt_raw")
            alt_all = r.count;
        if (r.count > 0) REQUIRE(r.iqr >= 0.0);
    }
    REQUIRE(alt_all == 2 * 12);  // two alt cells
}

TEST_CASE("stress mode requires the waiver and the right models", "[experiment]") {
    ExperimentConfig cfg = tiny_config();
    cfg.nonstationary_stress = true;
    REQUIRE_THROWS_AS(canonicalize(cfg), std::invalid_argument);
    cfg.allow_nonstationary = true;
    cfg.models = {ResponseFamily::Arch1};
    REQUIRE_THROWS_AS(canonicalize(cfg), std::invalid_argument);
    cfg.models = {ResponseFamily::Arma10};
    cfg.settings = {3};
    cfg.n_datasets_per_cell = 4;
    REQUIRE_NOTHROW(nonstationarity_stress(cfg));
}

TEST_CASE("parallel_for covers the range and propagates errors", "[experiment]") {
    std::vector<int> hits(100, 0);
    parallel_for(100, 4, [&](int i) { hits[static_cast<std::size_t>(i)] += 1; });
    for (int h : hits) REQUIRE(h == 1);
    REQUIRE_THROWS_AS(parallel_for(10, 3,
                                   [](int i) {
                                       if (i == 7) throw std::runtime_error("boom");
                                   }),
                      std::runtime_error);
}
