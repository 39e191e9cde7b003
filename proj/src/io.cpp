#include "ivrand/io.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

#include "ivrand/errors.hpp"
#include "ivrand/sim_models.hpp"

namespace ivrand::io {

using nlohmann::json;

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

[[noreturn]] void config_fail(const std::string& message) { throw ConfigError(message); }

double get_number(const json& j, const std::string& field, std::optional<double> fallback = {}) {
    if (!j.contains(field)) {
        if (fallback) return *fallback;
        config_fail("missing required field '" + field + "'");
    }
    const auto& v = j.at(field);
    if (!v.is_number()) config_fail("field '" + field + "' must be a number");
    return v.get<double>();
}

std::string get_string(const json& j, const std::string& field,
                       std::optional<std::string> fallback = {}) {
    if (!j.contains(field)) {
        if (fallback) return *fallback;
        config_fail("missing required field '" + field + "'");
    }
    const auto& v = j.at(field);
    if (!v.is_string()) config_fail("field '" + field + "' must be a string");
    return v.get<std::string>();
}

void reject_unknown(const json& j, std::initializer_list<const char*> known,
                    const std::string& context) {
    for (auto it = j.begin(); it != j.end(); ++it) {
        bool ok = false;
        for (const char* k : known) ok = ok || it.key() == k;
        if (!ok) config_fail("unknown field '" + it.key() + "' in " + context);
    }
}

json number_or_null(double v) {
    if (std::isfinite(v)) return v;
    return nullptr;
}

double number_from(const json& v) {
    if (v.is_null()) return kNaN;
    return v.get<double>();
}

}  // namespace

std::string format_double(double v) {
    if (std::isnan(v)) return "nan";
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    char buf[40];
    const auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

// --- ModelSpec ---------------------------------------------------------------

json to_json(const ModelSpec& spec) {
    json r = {
        {"family", to_string(spec.response.family)},
        {"phi1", spec.response.phi1},
        {"theta1", spec.response.theta1},
        {"phi11", spec.response.phi11},
        {"phi12", spec.response.phi12},
        {"a1", spec.response.a1},
        {"b1", spec.response.b1},
        {"mu_sigma", spec.response.mu_sigma},
        {"beta", spec.response.beta},
        {"delta1", spec.response.delta1},
        {"lambda", spec.response.lambda},
        {"eta", spec.response.eta},
        {"psi", spec.response.psi},
    };
    if (spec.response.allow_nonstationary) r["allow_nonstationary"] = true;
    json c = {
        {"kind", to_string(spec.compliance.kind)},
        {"alpha", spec.compliance.alpha},
        {"omega", spec.compliance.omega},
        {"gamma", spec.compliance.gamma},
        {"varphi", spec.compliance.varphi},
        {"rho", spec.compliance.rho},
    };
    if (spec.compliance.allow_nonstationary) c["allow_nonstationary"] = true;
    return json{
        {"schema_version", kSchemaVersion},
        {"n", spec.n},
        {"seed", spec.seed},
        {"errors", to_string(spec.errors)},
        {"response", std::move(r)},
        {"compliance", std::move(c)},
    };
}

ModelSpec model_spec_from_json(const json& j) {
    if (!j.is_object()) config_fail("model spec must be a JSON object");
    reject_unknown(j, {"schema_version", "n", "seed", "errors", "response", "compliance",
                       "selection"},
                   "model spec");
    ModelSpec spec;
    spec.n = static_cast<int>(get_number(j, "n"));
    spec.seed = j.contains("seed") ? j.at("seed").get<std::uint64_t>() : 0;
    try {
        spec.errors = error_family_from_string(get_string(j, "errors", "gaussian"));
    } catch (const std::invalid_argument& e) {
        config_fail(e.what());
    }

    if (!j.contains("response")) config_fail("missing required field 'response'");
    const json& r = j.at("response");
    reject_unknown(r,
                   {"family", "phi1", "theta1", "phi11", "phi12", "a1", "b1", "mu_sigma",
                    "beta", "delta1", "lambda", "eta", "psi", "allow_nonstationary"},
                   "response");
    try {
        spec.response.family = response_family_from_string(get_string(r, "family"));
    } catch (const std::invalid_argument& e) {
        config_fail(e.what());
    }
    spec.response.phi1 = get_number(r, "phi1", 0.0);
    spec.response.theta1 = get_number(r, "theta1", 0.0);
    spec.response.phi11 = get_number(r, "phi11", 0.0);
    spec.response.phi12 = get_number(r, "phi12", 0.0);
    spec.response.a1 = get_number(r, "a1", 0.0);
    spec.response.mu_sigma = get_number(r, "mu_sigma", 1.0);
    spec.response.beta = get_number(r, "beta", 0.0);
    spec.response.delta1 = get_number(r, "delta1", 0.0);
    spec.response.lambda = get_number(r, "lambda", 0.0);
    spec.response.eta = get_number(r, "eta", 0.0);
    spec.response.psi = get_number(r, "psi", 0.0);
    spec.response.allow_nonstationary =
        r.contains("allow_nonstationary") && r.at("allow_nonstationary").get<bool>();
    // GARCH defaults b1 to the paper's 1 - a1 coupling when absent.
    const double default_b1 =
        spec.response.family == ResponseFamily::Garch11 ? 1.0 - spec.response.a1 : 0.0;
    spec.response.b1 = get_number(r, "b1", default_b1);

    if (!j.contains("compliance")) config_fail("missing required field 'compliance'");
    const json& c = j.at("compliance");
    reject_unknown(c, {"kind", "alpha", "omega", "gamma", "varphi", "rho",
                       "allow_nonstationary"},
                   "compliance");
    try {
        spec.compliance.kind = compliance_kind_from_string(get_string(c, "kind", "simple"));
    } catch (const std::invalid_argument& e) {
        config_fail(e.what());
    }
    spec.compliance.alpha = get_number(c, "alpha");
    spec.compliance.omega = get_number(c, "omega", 0.0);
    spec.compliance.gamma = get_number(c, "gamma", 0.0);
    spec.compliance.varphi = get_number(c, "varphi", 0.0);
    spec.compliance.rho = get_number(c, "rho", 0.0);
    spec.compliance.allow_nonstationary =
        c.contains("allow_nonstationary") && c.at("allow_nonstationary").get<bool>();

    try {
        validate(spec);
    } catch (const std::invalid_argument& e) {
        config_fail(e.what());
    }
    return spec;
}

ModelSpec load_model_spec(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open config file: " + path);
    json j;
    try {
        in >> j;
    } catch (const json::exception& e) {
        config_fail("invalid JSON in " + path + ": " + e.what());
    }
    return model_spec_from_json(j);
}

json to_json(const SelectionSpec& sel) {
    return json{{"mechanism", to_string(sel.mechanism)}, {"c0", sel.c0}, {"c1", sel.c1},
                {"c2", sel.c2},                          {"d0", sel.d0}, {"d1", sel.d1}};
}

SelectionSpec selection_spec_from_json(const json& j) {
    reject_unknown(j, {"mechanism", "c0", "c1", "c2", "d0", "d1"}, "selection");
    SelectionSpec sel;
    try {
        sel.mechanism = selection_mechanism_from_string(get_string(j, "mechanism"));
    } catch (const std::invalid_argument& e) {
        config_fail(e.what());
    }
    sel.c0 = get_number(j, "c0", 0.0);
    sel.c1 = get_number(j, "c1", 0.0);
    sel.c2 = get_number(j, "c2", 0.0);
    sel.d0 = get_number(j, "d0", 0.0);
    sel.d1 = get_number(j, "d1", 0.0);
    return sel;
}

// --- TrialSeries -------------------------------------------------------------

void write_trial_csv(std::ostream& os, const TrialSeries& trial) {
    os << "t,z,x,y,w,observed\n";
    const auto n = static_cast<std::size_t>(trial.n());
    for (std::size_t t = 0; t < n; ++t) {
        os << (t + 1) << ',' << static_cast<int>(trial.z[t]) << ','
           << format_double(trial.x[t]) << ',' << format_double(trial.y[t]) << ','
           << (trial.has_w() ? format_double(trial.w[t]) : std::string()) << ','
           << static_cast<int>(trial.observed_mask[t]) << '\n';
    }
}

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> out;
    std::string cur;
    for (char ch : line) {
        if (ch == ',') {
            out.push_back(cur);
            cur.clear();
        } else if (ch != '\r') {
            cur.push_back(ch);
        }
    }
    out.push_back(cur);
    return out;
}

double parse_double_field(const std::string& s, const char* column, std::size_t lineno) {
    if (s == "nan") return kNaN;
    double v = 0.0;
    const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
    if (res.ec != std::errc() || res.ptr != s.data() + s.size())
        throw DataError("line " + std::to_string(lineno) + ": cannot parse column '" +
                        column + "' value '" + s + "'");
    return v;
}

}  // namespace

TrialSeries read_trial_csv(std::istream& is) {
    std::string line;
    if (!std::getline(is, line)) throw DataError("empty trial CSV");
    const auto header = split_csv_line(line);
    const std::vector<std::string> expected = {"t", "z", "x", "y", "w", "observed"};
    if (header != expected)
        throw DataError("trial CSV header must be exactly 't,z,x,y,w,observed'");

    TrialSeries trial;
    bool any_w = false;
    std::size_t lineno = 1;
    while (std::getline(is, line)) {
        ++lineno;
        if (line.empty()) continue;
        const auto f = split_csv_line(line);
        if (f.size() != 6)
            throw DataError("line " + std::to_string(lineno) + ": expected 6 columns");
        const double zv = parse_double_field(f[1], "z", lineno);
        if (zv != 0.0 && zv != 1.0)
            throw DataError("line " + std::to_string(lineno) + ": z must be 0 or 1");
        trial.z.push_back(zv != 0.0);
        trial.x.push_back(parse_double_field(f[2], "x", lineno));
        trial.y.push_back(parse_double_field(f[3], "y", lineno));
        if (f[4].empty()) {
            trial.w.push_back(0.0);
        } else {
            trial.w.push_back(parse_double_field(f[4], "w", lineno));
            any_w = true;
        }
        const double obs = parse_double_field(f[5], "observed", lineno);
        if (obs != 0.0 && obs != 1.0)
            throw DataError("line " + std::to_string(lineno) + ": observed must be 0 or 1");
        trial.observed_mask.push_back(obs != 0.0);
    }
    if (trial.z.empty()) throw DataError("trial CSV carries no data rows");
    if (!any_w) trial.w.clear();
    trial.u.assign(trial.z.size(), 0.0);
    return trial;
}

json trial_to_json(const TrialSeries& trial, const ModelSpec* provenance) {
    json data;
    const auto n = static_cast<std::size_t>(trial.n());
    std::vector<int> t(n), z(n), observed(n);
    for (std::size_t i = 0; i < n; ++i) {
        t[i] = static_cast<int>(i) + 1;
        z[i] = trial.z[i];
        observed[i] = trial.observed_mask[i];
    }
    data["t"] = t;
    data["z"] = z;
    data["x"] = trial.x;
    data["y"] = trial.y;
    if (trial.has_w()) data["w"] = trial.w;
    data["observed"] = observed;
    json j{{"schema_version", kSchemaVersion}, {"data", std::move(data)}};
    if (provenance) j["spec"] = to_json(*provenance);
    json latents{{"u", trial.u},
                 {"L", trial.latent_scalars.l},
                 {"H", trial.latent_scalars.h},
                 {"C", trial.latent_scalars.c}};
    j["latents"] = std::move(latents);
    return j;
}

TrialSeries trial_from_json(const json& j) {
    if (!j.is_object() || !j.contains("data"))
        throw DataError("trial JSON must carry a 'data' object");
    const json& d = j.at("data");
    TrialSeries trial;
    try {
        for (const auto& v : d.at("z")) trial.z.push_back(v.get<int>() != 0);
        trial.x = d.at("x").get<std::vector<double>>();
        trial.y = d.at("y").get<std::vector<double>>();
        if (d.contains("w")) trial.w = d.at("w").get<std::vector<double>>();
        if (d.contains("observed"))
            for (const auto& v : d.at("observed")) trial.observed_mask.push_back(v.get<int>() != 0);
        else
            trial.observed_mask.assign(trial.z.size(), 1);
        if (j.contains("latents") && j.at("latents").contains("u"))
            trial.u = j.at("latents").at("u").get<std::vector<double>>();
        else
            trial.u.assign(trial.z.size(), 0.0);
        if (j.contains("latents")) {
            const json& l = j.at("latents");
            trial.latent_scalars.l = l.value("L", 0.0);
            trial.latent_scalars.h = l.value("H", 0.0);
            trial.latent_scalars.c = l.value("C", 0.0);
        }
    } catch (const json::exception& e) {
        throw DataError(std::string("malformed trial JSON: ") + e.what());
    }
    const auto n = trial.z.size();
    if (n == 0) throw DataError("trial JSON carries no data");
    if (trial.x.size() != n || trial.y.size() != n || trial.observed_mask.size() != n ||
        (!trial.w.empty() && trial.w.size() != n) || trial.u.size() != n)
        throw DataError("trial JSON vectors have mismatched lengths");
    return trial;
}

TrialSeries load_trial(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open trial file: " + path);
    if (path.size() >= 5 && path.substr(path.size() - 5) == ".json") {
        json j;
        try {
            in >> j;
        } catch (const json::exception& e) {
            throw DataError("invalid JSON in " + path + ": " + e.what());
        }
        return trial_from_json(j);
    }
    return read_trial_csv(in);
}

// --- EstimateReport ----------------------------------------------------------

json to_json(const EstimateReport& report) {
    return json{
        {"beta_iv", number_or_null(report.beta_iv)},
        {"beta_itt", number_or_null(report.beta_itt)},
        {"ace_z_on_y", number_or_null(report.ace_z_on_y)},
        {"ace_z_on_x", number_or_null(report.ace_z_on_x)},
        {"k", number_or_null(report.k_constant)},
        {"cov_zy", number_or_null(report.cov_zy)},
        {"cov_zx", number_or_null(report.cov_zx)},
        {"var_z", number_or_null(report.var_z)},
        {"cor_zx", number_or_null(report.cor_zx)},
        {"naive_slope", number_or_null(report.naive_slope)},
        {"naive_t", number_or_null(report.naive_t)},
        {"naive_p", number_or_null(report.naive_p)},
        {"adjusted", report.adjusted},
        {"degenerate", report.degenerate},
    };
}

EstimateReport estimate_report_from_json(const json& j) {
    EstimateReport r;
    r.beta_iv = number_from(j.at("beta_iv"));
    r.beta_itt = number_from(j.at("beta_itt"));
    r.ace_z_on_y = number_from(j.at("ace_z_on_y"));
    r.ace_z_on_x = number_from(j.at("ace_z_on_x"));
    r.k_constant = number_from(j.at("k"));
    r.cov_zy = number_from(j.at("cov_zy"));
    r.cov_zx = number_from(j.at("cov_zx"));
    r.var_z = number_from(j.at("var_z"));
    r.cor_zx = number_from(j.at("cor_zx"));
    r.naive_slope = number_from(j.at("naive_slope"));
    r.naive_t = number_from(j.at("naive_t"));
    r.naive_p = number_from(j.at("naive_p"));
    r.adjusted = j.at("adjusted").get<bool>();
    r.degenerate = j.at("degenerate").get<bool>();
    return r;
}

std::string estimate_report_csv_header() {
    return "beta_iv,beta_itt,ace_z_on_y,ace_z_on_x,k,cov_zy,cov_zx,var_z,cor_zx,"
           "naive_slope,naive_t,naive_p,adjusted,degenerate";
}

std::string estimate_report_csv_row(const EstimateReport& r) {
    std::ostringstream os;
    os << format_double(r.beta_iv) << ',' << format_double(r.beta_itt) << ','
       << format_double(r.ace_z_on_y) << ',' << format_double(r.ace_z_on_x) << ','
       << format_double(r.k_constant) << ',' << format_double(r.cov_zy) << ','
       << format_double(r.cov_zx) << ',' << format_double(r.var_z) << ','
       << format_double(r.cor_zx) << ',' << format_double(r.naive_slope) << ','
       << format_double(r.naive_t) << ',' << format_double(r.naive_p) << ','
       << (r.adjusted ? 1 : 0) << ',' << (r.degenerate ? 1 : 0);
    return os.str();
}

// --- Randomization results ---------------------------------------------------

json to_json(const RandTestResult& r) {
    return json{
        {"stat_observed", number_or_null(r.stat_observed)},
        {"exceed_count", r.exceed_count},
        {"n_perm", r.n_perm},
        {"p_value", r.p_value},
        {"statistic", r.statistic == TestStatistic::IV ? "iv" : "itt"},
        {"sidedness", to_string(r.sidedness)},
        {"fell_back_to_itt", r.fell_back_to_itt},
        {"null_summary",
         json{{"mean", number_or_null(r.null_summary.mean)},
              {"sd", number_or_null(r.null_summary.sd)},
              {"min", number_or_null(r.null_summary.min)},
              {"q025", number_or_null(r.null_summary.q025)},
              {"q05", number_or_null(r.null_summary.q05)},
              {"q25", number_or_null(r.null_summary.q25)},
              {"q50", number_or_null(r.null_summary.q50)},
              {"q75", number_or_null(r.null_summary.q75)},
              {"q95", number_or_null(r.null_summary.q95)},
              {"q975", number_or_null(r.null_summary.q975)},
              {"max", number_or_null(r.null_summary.max)}}},
    };
}

json to_json(const PValueProfile& profile) {
    json grid = json::array();
    for (const auto& [beta, p] : profile.grid) grid.push_back(json{{"beta", beta}, {"p", p}});
    return json{{"beta_hat", profile.beta_hat},
                {"k", profile.k_constant},
                {"grid", std::move(grid)}};
}

void write_profile_csv(std::ostream& os, const PValueProfile& profile) {
    os << "beta_j,p\n";
    for (const auto& [beta, p] : profile.grid)
        os << format_double(beta) << ',' << format_double(p) << '\n';
}

// --- Experiment config / records ----------------------------------------------

json to_json(const ExperimentConfig& cfg) {
    json models = json::array();
    for (auto m : cfg.models) models.push_back(to_string(m));
    json overrides = json::object();
    for (const auto& [name, range] : cfg.range_overrides)
        overrides[name] = json::array({range.first, range.second});
    json j{{"schema_version", kSchemaVersion},
           {"models", std::move(models)},
           {"settings", cfg.settings},
           {"n_datasets_per_cell", cfg.n_datasets_per_cell},
           {"n_perm", cfg.n_perm},
           {"seed", cfg.seed},
           {"lhs_sweeps", cfg.lhs_sweeps},
           {"garch_strict", cfg.garch_strict},
           {"nonstationary_stress", cfg.nonstationary_stress},
           {"allow_nonstationary", cfg.allow_nonstationary}};
    if (!cfg.range_overrides.empty()) j["ranges"] = std::move(overrides);
    return j;
}

ExperimentConfig experiment_config_from_json(const json& j) {
    if (!j.is_object()) config_fail("experiment config must be a JSON object");
    reject_unknown(j,
                   {"schema_version", "models", "settings", "n_datasets_per_cell", "n_perm",
                    "seed", "threads", "lhs_sweeps", "garch_strict", "nonstationary_stress",
                    "allow_nonstationary", "ranges"},
                   "experiment config");
    ExperimentConfig cfg;
    try {
        if (j.contains("models")) {
            if (j.at("models").is_string() && j.at("models").get<std::string>() == "all") {
                // keep default (all families)
            } else {
                for (const auto& m : j.at("models"))
                    cfg.models.push_back(response_family_from_string(m.get<std::string>()));
            }
        }
        if (j.contains("settings")) {
            if (j.at("settings").is_string() && j.at("settings").get<std::string>() == "all") {
                // keep default
            } else {
                cfg.settings = j.at("settings").get<std::vector<int>>();
            }
        }
        cfg.n_datasets_per_cell =
            static_cast<int>(get_number(j, "n_datasets_per_cell", 250.0));
        cfg.n_perm = static_cast<int>(get_number(j, "n_perm", 2000.0));
        cfg.seed = j.contains("seed") ? j.at("seed").get<std::uint64_t>() : 0;
        cfg.threads = static_cast<int>(get_number(j, "threads", 1.0));
        cfg.lhs_sweeps = static_cast<int>(get_number(j, "lhs_sweeps", 50.0));
        cfg.garch_strict = j.value("garch_strict", false);
        cfg.nonstationary_stress = j.value("nonstationary_stress", false);
        cfg.allow_nonstationary = j.value("allow_nonstationary", false);
        if (j.contains("ranges")) {
            for (auto it = j.at("ranges").begin(); it != j.at("ranges").end(); ++it) {
                const auto& arr = it.value();
                if (!arr.is_array() || arr.size() != 2)
                    config_fail("range override '" + it.key() + "' must be [lo, hi]");
                cfg.range_overrides[it.key()] = {arr[0].get<double>(), arr[1].get<double>()};
            }
        }
    } catch (const json::exception& e) {
        config_fail(std::string("malformed experiment config: ") + e.what());
    } catch (const std::invalid_argument& e) {
        config_fail(e.what());
    }
    try {
        validate(cfg);
    } catch (const std::invalid_argument& e) {
        config_fail(e.what());
    }
    return cfg;
}

ExperimentConfig load_experiment_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open config file: " + path);
    json j;
    try {
        in >> j;
    } catch (const json::exception& e) {
        config_fail("invalid JSON in " + path + ": " + e.what());
    }
    return experiment_config_from_json(j);
}

json record_to_json(const ReplicateRecord& r) {
    json params = json::object();
    for (const auto& [name, value] : r.params) params[name] = value;
    json j{{"schema_version", kSchemaVersion},
           {"model", to_string(r.model)},
           {"setting", r.setting_id},
           {"replicate", r.replicate},
           {"trial_seed", r.trial_seed},
           {"params", std::move(params)},
           {"n", r.n},
           {"beta_true", r.beta_true},
           {"raw", to_json(r.raw)},
           {"adj", to_json(r.adj)},
           {"p_iv_raw", number_or_null(r.p_iv_raw)},
           {"p_iv_adj", number_or_null(r.p_iv_adj)},
           {"p_t_raw", number_or_null(r.p_t_raw)},
           {"p_t_adj", number_or_null(r.p_t_adj)},
           {"cor_zx", number_or_null(r.cor_zx)},
           {"fisher_p", number_or_null(r.fisher_p)},
           {"degenerate", r.degenerate},
           {"nonfinite", r.nonfinite},
           {"valid", r.valid}};
    if (!r.error.empty()) j["error"] = r.error;
    return j;
}

ReplicateRecord record_from_json(const json& j) {
    ReplicateRecord r;
    try {
        r.model = response_family_from_string(j.at("model").get<std::string>());
        r.setting_id = j.at("setting").get<int>();
        r.replicate = j.at("replicate").get<int>();
        r.trial_seed = j.at("trial_seed").get<std::uint64_t>();
        for (auto it = j.at("params").begin(); it != j.at("params").end(); ++it)
            r.params[it.key()] = it.value().get<double>();
        r.n = j.at("n").get<int>();
        r.beta_true = j.at("beta_true").get<double>();
        r.raw = estimate_report_from_json(j.at("raw"));
        r.adj = estimate_report_from_json(j.at("adj"));
        r.p_iv_raw = number_from(j.at("p_iv_raw"));
        r.p_iv_adj = number_from(j.at("p_iv_adj"));
        r.p_t_raw = number_from(j.at("p_t_raw"));
        r.p_t_adj = number_from(j.at("p_t_adj"));
        r.cor_zx = number_from(j.at("cor_zx"));
        r.fisher_p = number_from(j.at("fisher_p"));
        r.degenerate = j.at("degenerate").get<bool>();
        r.nonfinite = j.at("nonfinite").get<bool>();
        r.valid = j.at("valid").get<bool>();
        if (j.contains("error")) r.error = j.at("error").get<std::string>();
    } catch (const json::exception& e) {
        throw DataError(std::string("malformed record: ") + e.what());
    }
    return r;
}

void write_record_line(std::ostream& os, const ReplicateRecord& record) {
    os << record_to_json(record).dump() << '\n';
}

std::vector<ReplicateRecord> read_records(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open records file: " + path);
    std::vector<ReplicateRecord> records;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        json j;
        try {
            j = json::parse(line);
        } catch (const json::exception& e) {
            throw DataError(path + ":" + std::to_string(lineno) + ": invalid JSON record");
        }
        records.push_back(record_from_json(j));
    }
    return records;
}

void write_curves_csv(std::ostream& os, const CurveTable& table) {
    os << "method,hypothesis,cor_bin,beta_bin,n_bin,alpha,n_records,n_reject,rate\n";
    for (const auto& r : table.rows) {
        os << r.method << ',' << r.hypothesis << ',' << r.cor_bin << ',' << r.beta_bin
           << ',' << r.n_bin << ',' << format_double(r.alpha) << ',' << r.n_records << ','
           << r.n_reject << ',' << format_double(r.rate) << '\n';
    }
}

void write_bias_csv(std::ostream& os, const std::vector<BiasRow>& rows) {
    os << "method,hypothesis,compliance_split,count,mean,median,sd,iqr,q05,q95,max_abs\n";
    for (const auto& r : rows) {
        os << r.method << ',' << r.hypothesis << ',' << r.compliance_split << ',' << r.count
           << ',' << format_double(r.mean) << ',' << format_double(r.median) << ','
           << format_double(r.sd) << ',' << format_double(r.iqr) << ','
           << format_double(r.q05) << ',' << format_double(r.q95) << ','
           << format_double(r.max_abs) << '\n';
    }
}

std::uint64_t config_hash(const ExperimentConfig& cfg) {
    const std::string dump = to_json(cfg).dump();
    std::uint64_t h = UINT64_C(0xcbf29ce484222325);
    for (unsigned char ch : dump) {
        h ^= ch;
        h *= UINT64_C(0x100000001b3);
    }
    return h;
}

json make_manifest(const ExperimentConfig& cfg) {
    return json{{"schema_version", kSchemaVersion},
                {"config", to_json(cfg)},
                {"config_hash", config_hash(cfg)},
                {"seed", cfg.seed},
                {"code_version", "ivrand 0.1.0"}};
}

}  // namespace ivrand::io
