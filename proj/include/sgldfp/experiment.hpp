#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "sgldfp/dataset.hpp"

namespace sgldfp {

enum class ExperimentId {
    Fig1BiasSweep,
    Fig2CovTraceSweep,
    Fig3GradVariance,
    Fig4TestNll,
    OracleLinreg,
    CouplingContraction,
};

const char* to_string(ExperimentId id);
ExperimentId experiment_from_string(const std::string& name);

/// Step-size conventions: gamma = eta/N, the spectral rule 1/(1 + delta/4)
/// with delta the largest eigenvalue of X^T X, or a fixed gamma = eta.
enum class StepRule { EtaOverN, Spectral, Fixed };

const char* to_string(StepRule rule);
StepRule step_rule_from_string(const std::string& name);

/// Unset optional fields pick per-experiment defaults (see with_defaults).
struct ExperimentConfig {
    ExperimentId experiment = ExperimentId::OracleLinreg;
    std::vector<long> n_grid;  // sorted ascending; empty = default grid
    std::optional<double> eta;
    std::optional<StepRule> step_rule;
    std::optional<int> p;
    std::optional<int> replicas;
    std::uint64_t seed = 0;
    int dim = 2;
    std::string model = "logistic";
    std::string data_path;  // when set, libsvm input replaces simulation
    long n_iters = 0;       // 0 = ceil(1/gamma)
    double burn_in_fraction = 0.10;
    double mode_tol = 1e-10;
    std::string output_prefix;  // optional; "<prefix>.csv" and "<prefix>.json"
};

/// Resolve every unset field to its per-experiment default.
ExperimentConfig with_defaults(ExperimentConfig config);

struct MetricRow {
    std::string experiment;
    std::string kind;
    long n = 0;  // 0 for grid-aggregate rows (slopes)
    double gamma = 0.0;
    std::string step_rule;
    int p = 0;
    int replicas = 0;
    std::string metric_name;
    double metric_value = 0.0;
    double stderr_value = 0.0;
    std::uint64_t seed = 0;
};

struct RunRecord {
    std::string schema_version = "1";
    ExperimentConfig config;  // resolved config echo
    std::vector<MetricRow> rows;
    std::vector<std::string> notes;  // conventions, divergences; deterministic
    double wall_clock_seconds = 0.0;
};

/// Run one experiment. Deterministic given (config, seed) up to the
/// wall-clock field; every replica owns an RNG stream derived from the seed
/// and its cell coordinates, so scheduling cannot change results.
RunRecord run_experiment(const ExperimentConfig& config);

/// Fixed column order:
/// experiment,kind,N,gamma,step_rule,p,replicas,metric_name,metric_value,stderr,seed
/// Floats carry 17 significant digits.
std::string csv_string(const std::vector<MetricRow>& rows);
void emit_csv(const std::vector<MetricRow>& rows, const std::string& path);
std::vector<MetricRow> parse_csv_string(const std::string& text);
std::vector<MetricRow> parse_csv(const std::string& path);

void emit_json(const RunRecord& record, const std::string& path);
std::string json_string(const RunRecord& record);

ExperimentConfig config_from_json_file(const std::string& path);

/// Linear-regression fixture the oracle experiment runs on (dim 1 or 2).
Dataset oracle_fixture_dataset(int dim);

/// Linear-regression fixture with genuine multiplicative gradient noise,
/// used by the coupling experiment.
Dataset contraction_fixture_dataset();

}  // namespace sgldfp
