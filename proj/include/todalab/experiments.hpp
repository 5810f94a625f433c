#pragma once

// Scenario configuration, execution and reporting.

#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "todalab/diagnostics.hpp"
#include "todalab/dynamics.hpp"
#include "todalab/lattice.hpp"
#include "todalab/modulation.hpp"
#include "todalab/solitons.hpp"

namespace todalab {

enum class RunMode {
    Nonlinear,   // u and v1 evolved, decomposed and diagnosed
    Linearized,  // v evolved along the soliton's linearization
    Virial,      // v evolved alone, virial functional monitored
};

enum class PerturbationKind { None, LocalizedBump, SecondSoliton, RandomLocalized };

struct Perturbation {
    PerturbationKind kind = PerturbationKind::None;
    double amplitude = 0.0;  // bump height, or l2 norm for random data
    double width = 4.0;      // bump: amplitude * exp(-((n - center) / width)^2) in r
    double center = 0.0;
    double half_width = 10.0;  // random data occupies |n - center| <= half_width
    std::uint64_t seed = 0;
    double c2 = 0.0;  // second soliton
    double x2 = 0.0;
};

struct FpuFamilySpec {
    double c_lo = 1.01;
    double c_hi = 1.03;
    double L = 200.0;
    int points_per_site = 4;
    int nodes = 17;
};

struct CheckSpec {
    std::string name;
    double tolerance = 0.0;
};

struct Scenario {
    std::string name;
    RunMode mode = RunMode::Nonlinear;
    PotentialModel model;
    LatticeGrid grid{-300, 400};
    std::optional<std::pair<double, double>> soliton;  // (c0, x0)
    Perturbation perturbation;
    IntegratorConfig integrator;
    double a = 0.1;  // exponent of the X/W norms and of the linearized-decay weight
    VirialSpec virial;
    std::optional<double> sigma;  // default (c_s + c_plus) / 2
    std::pair<double, double> decay_window{20.0, 120.0};
    std::string linear_input = "q_random";  // q_random, raw_random, ud, uc
    FpuFamilySpec fpu;
    bool expect_fail = false;
    std::vector<CheckSpec> checks;

    static Scenario from_json(const nlohmann::json& j);
    [[nodiscard]] nlohmann::json to_json() const;
    void validate() const;
};

struct CheckResult {
    std::string name;
    bool pass = false;
    double value = 0.0;
    double tolerance = 0.0;
    nlohmann::json fitted;  // fitted constants and windows, when any
};

struct RunReport {
    std::string scenario_id;
    nlohmann::json scenario;
    bool ok = true;  // false when a stage threw
    std::string failed_stage;
    std::string cause;
    bool expect_fail = false;
    double c_plus = 0.0;
    std::map<std::string, double> metrics;
    std::vector<CheckResult> checks;
    std::vector<std::string> artifacts;

    /// All checks passed and no stage failed.
    [[nodiscard]] bool passed() const;
    [[nodiscard]] nlohmann::json to_json() const;
};

/// Data produced by a run, kept for callers that need more than the report.
struct RunData {
    std::optional<ModulationTrack> track;
    std::optional<MonotonicityReport> virial;
    std::vector<double> times;
    std::vector<double> energies;
    std::vector<double> linear_norm;  // linearized runs: ||Q v||_X (or ||v||_X) per sample
};

/// The built-in scenario presets addressable by name.
std::vector<std::string> preset_names();
Scenario preset(const std::string& name);

/// Applies "dotted.key=value" overrides; values parse as JSON when possible.
nlohmann::json apply_overrides(nlohmann::json j, const std::vector<std::string>& assignments);

/// Runs one scenario; any stage error is captured in the report. When out_dir
/// is given, track.csv, diagnostics/*.csv, report.json and meta.json are written there.
RunReport run_scenario(const Scenario& s, const std::optional<std::filesystem::path>& out_dir = std::nullopt,
                       RunData* data = nullptr);

struct SuiteResult {
    std::vector<RunReport> reports;
    int exit_code = 0;
    nlohmann::json summary;
};

/// Reads a JSON suite {"output_dir", "parallel", "scenarios": [...]} where each
/// entry is a full scenario or {"preset": name, "set": {...}}.
SuiteResult run_suite(const std::filesystem::path& config_path);
SuiteResult run_suite(const nlohmann::json& config, const std::filesystem::path& base_dir);

/// Summarizes report.json files found under dir.
nlohmann::json summarize_reports(const std::filesystem::path& dir);

}  // namespace todalab
