#pragma once

#include <cstdint>
#include <ostream>
#include <string>
#include <vector>

#include <json.hpp>

#include "cone_lab/models.hpp"

namespace cone_lab {

inline constexpr const char* kToolVersion = "0.1.0";

enum ExitCode { kExitPass = 0, kExitSuiteFailure = 1, kExitConfig = 2, kExitSolver = 3 };

struct ExperimentConfig {
    nlohmann::json model;
    std::string op;
    nlohmann::json params = nlohmann::json::object();
    std::uint64_t seed = 1;
    int workers = 1;
    std::string output = "results.jsonl";
};

// Throws Error(Config) on schema violations. CONE_LAB_SEED overrides the seed when set.
ExperimentConfig parse_config(const nlohmann::json& j);
ExperimentConfig load_config(const std::string& path);

std::vector<std::string> known_ops();

struct OpResult {
    nlohmann::json outputs;
    nlohmann::json provenance;  // value name -> {method, error}
    bool invariants_ok = true;
};

OpResult run_op(const ExperimentConfig& cfg);

struct ResultRecord {
    std::string config_hash;
    std::string record_hash;  // over config and outputs, not timing
    std::string op;
    nlohmann::json model;
    nlohmann::json params;
    std::uint64_t seed = 0;
    nlohmann::json outputs;
    nlohmann::json provenance;
    bool invariants_ok = true;
    double wall_time = 0.0;
    std::string tool_version = kToolVersion;
};

nlohmann::json to_json(const ResultRecord& r);
std::string fnv1a_hex(const std::string& s);

ResultRecord execute(const ExperimentConfig& cfg);
void append_record(const std::string& store, const ResultRecord& r);

// Full `run` command: parse, execute, append. Returns an exit code and reports to err.
int run_command(const std::string& config_path, std::ostream& out, std::ostream& err);

struct SuiteResult {
    std::string name;
    std::string statement;
    bool passed = false;
    bool skipped = false;
    std::string detail;
    double seconds = 0.0;
};

std::vector<SuiteResult> verify_all(const nlohmann::json& model_spec, std::uint64_t seed = 1);
int verify_all_command(const std::string& model_path, std::ostream& out, std::ostream& err);

// Query "op=<name>" (optionally ",model=<kind>"). Writes <out_dir>/<op>.csv; throws Config when nothing matches.
std::vector<std::string> export_plot_data(const std::string& store, const std::string& query, const std::string& out_dir);
int export_command(const std::string& store, const std::string& query, const std::string& out_dir, std::ostream& out,
                   std::ostream& err);

}  // namespace cone_lab
