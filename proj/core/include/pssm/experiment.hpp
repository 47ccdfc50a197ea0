#pragma once

#include "pssm/datadriven.hpp"
#include "pssm/normal_form.hpp"
#include "pssm/systems.hpp"

#include <nlohmann/json.hpp>

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace pssm {

struct OrderPair {
    int mw = 4;
    int mr = 5;
    std::string label() const { return "MW" + std::to_string(mw) + "_MR" + std::to_string(mr); }
};

struct ExperimentConfig {
    std::filesystem::path system;  // spec file; relative paths resolve against base_dir
    std::filesystem::path base_dir;
    std::vector<double> training{7900, 7950, 8000, 8050, 8150, 8250, 8400, 8500};
    std::vector<double> test{7925, 7975, 8100, 8350, 8450};
    std::vector<OrderPair> orders{{4, 5}, {2, 3}};
    std::uint64_t data_seed = 20240101;
    DataOptions data;
    std::optional<std::pair<double, double>> bifurcation_range;
    std::filesystem::path output_dir = "experiment";
    bool write_datasets = false;

    /// Disjoint training/test sets, >= 3 sorted unique knots, existing system spec.
    void validate(bool require_system_file = true) const;
    std::filesystem::path system_path() const;
};

ExperimentConfig experiment_config_from_json(const nlohmann::json& j, const std::filesystem::path& base_dir = {});
ExperimentConfig load_experiment_config(const std::filesystem::path& path);
nlohmann::json to_json(const ExperimentConfig& c);

struct ExperimentRow {
    OrderPair orders;
    double mu = 0;
    std::string protocol;
    ErrorSummary errors;
};

struct OrderResult {
    OrderPair orders;
    std::optional<double> mu_pred;
    std::string bifurcation_note;
    std::vector<ExperimentRow> rows;
    std::vector<nlohmann::json> knot_diagnostics;
};

struct ExperimentReport {
    std::vector<std::uint64_t> training_seeds, test_seeds;
    std::vector<OrderResult> results;
    nlohmann::json to_json(const ExperimentConfig& config) const;
    /// mu, NMTE, NMAE, RecError for one order pair.
    std::string table_csv(const OrderResult& r) const;
    std::string table_text() const;
};

/// Runs the full pipeline on `system`; when `output_dir` is non-empty every
/// stage writes its outputs there before the next stage starts. Failures are
/// rethrown with the stage name prefixed to the message.
ExperimentReport run_experiment(const ExperimentConfig& config, const DynamicalSystem& system,
                                const std::filesystem::path& output_dir = {});
/// Loads the system from the config and writes below resolve_output(output_dir).
ExperimentReport run_experiment(const ExperimentConfig& config);

// ---------------------------------------------------------------- figure data

/// Long-format CSV `series,x,z` of the y = 0 cross-section for each h(rho0)
/// value, plus the analytic branch when one exists.
std::string cross_section_csv(const HopfParams& p, double rho0, const std::vector<double>& branches,
                              double x_min = 5e-3, double x_max = 0.5, int points = 100);
/// CSV `order,location,residual,asymptotic_estimate`.
std::string resonance_csv(const EigenCurves& curves, int m_max, std::vector<std::string>* diagnostics = nullptr);
/// CSV `u1,u2,du1,du2` on an n x n grid over [-extent, extent]^2.
std::string phase_portrait_csv(const SsmModel& model, double extent, int n);

/// kind in {normal-form-cross-section, resonance-locations, reduced-phase-portrait};
/// returns the CSV text. Throws UnknownKind otherwise.
std::string emit_figure_data(const std::string& kind, const nlohmann::json& args);

}  // namespace pssm
