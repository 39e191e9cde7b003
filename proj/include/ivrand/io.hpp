#pragma once

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "ivrand/estimators.hpp"
#include "ivrand/experiment.hpp"
#include "ivrand/rand_inference.hpp"
#include "ivrand/trial.hpp"

namespace ivrand::io {

inline constexpr int kSchemaVersion = 1;

// --- ModelSpec config (JSON) -------------------------------------------------
// Field names follow the simulation-table symbols (phi1, theta1, a1, alpha,
// beta, ...). Unknown fields are rejected so typos surface as config errors.
nlohmann::json to_json(const ModelSpec& spec);
ModelSpec model_spec_from_json(const nlohmann::json& j);
ModelSpec load_model_spec(const std::string& path);

nlohmann::json to_json(const SelectionSpec& sel);
SelectionSpec selection_spec_from_json(const nlohmann::json& j);

// --- TrialSeries -------------------------------------------------------------
// CSV columns: t,z,x,y,w,observed. The JSON envelope carries the generating
// ModelSpec (when known) plus the latent series for oracle use.
void write_trial_csv(std::ostream& os, const TrialSeries& trial);
TrialSeries read_trial_csv(std::istream& is);
nlohmann::json trial_to_json(const TrialSeries& trial, const ModelSpec* provenance);
TrialSeries trial_from_json(const nlohmann::json& j);
TrialSeries load_trial(const std::string& path);  // dispatches on .json/.csv

// --- EstimateReport ----------------------------------------------------------
nlohmann::json to_json(const EstimateReport& report);
EstimateReport estimate_report_from_json(const nlohmann::json& j);
std::string estimate_report_csv_header();
std::string estimate_report_csv_row(const EstimateReport& report);

// --- Randomization results ---------------------------------------------------
nlohmann::json to_json(const RandTestResult& result);
nlohmann::json to_json(const PValueProfile& profile);
void write_profile_csv(std::ostream& os, const PValueProfile& profile);

// --- Experiment configs, records, outputs ------------------------------------
nlohmann::json to_json(const ExperimentConfig& cfg);
ExperimentConfig experiment_config_from_json(const nlohmann::json& j);
ExperimentConfig load_experiment_config(const std::string& path);

nlohmann::json record_to_json(const ReplicateRecord& record);
ReplicateRecord record_from_json(const nlohmann::json& j);
void write_record_line(std::ostream& os, const ReplicateRecord& record);
std::vector<ReplicateRecord> read_records(const std::string& path);

void write_curves_csv(std::ostream& os, const CurveTable& table);
void write_bias_csv(std::ostream& os, const std::vector<BiasRow>& rows);

// FNV-1a over a canonical config dump; stored in the manifest and used to
// refuse resuming against a mismatched record file.
std::uint64_t config_hash(const ExperimentConfig& cfg);
nlohmann::json make_manifest(const ExperimentConfig& cfg);

// Shortest round-trip decimal formatting (used by all CSV writers).
std::string format_double(double v);

}  // namespace ivrand::io
