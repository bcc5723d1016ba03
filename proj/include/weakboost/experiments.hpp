#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "weakboost/hybrid_pde.hpp"
#include "weakboost/schemes.hpp"

namespace wb {

class ConfigError : public std::runtime_error {
public:
    explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

enum class ModelKind { cir, heston, multifactor };

struct ExperimentConfig {
    std::string name = "experiment";
    std::string command = "converge";  // converge | variance | pde
    ModelKind model = ModelKind::cir;
    std::string scheme = "nv";
    std::vector<int> levels{1};
    std::vector<int> n_list{1};
    double maturity = 1.0;

    CirParams cir{};          // model = cir
    HestonParams heston{};    // model = heston / multifactor (heston.cir holds the variance block)
    KernelNodes kernel{};     // model = multifactor

    CirPayoff cir_payoff{};
    HestonPayoff heston_payoff{};

    std::vector<CouplingKind> couplings{CouplingKind::standard};
    SampleLayout layout = SampleLayout::shared;
    uint64_t samples = 0;    // fixed M1 = M2 when > 0
    double epsilon = 0.0;    // target 95% half-width otherwise
    uint64_t max_samples = 4'000'000'000ull;
    uint64_t pilot = 10000;
    uint64_t seed = 1;
    int workers = 1;
    bool conditional = false;
    bool control = false;
    std::string reference = "auto";  // auto | none | self | <number>

    int pde_steps = 100;
    double pde_dx = 0.01;
    int pde_half = 0;

    void validate() const;  // throws ConfigError or RegimeError
};

ExperimentConfig parse_config_string(const std::string& toml_text, const std::string& origin = "<string>");
ExperimentConfig load_config(const std::string& path);

CouplingKind parse_coupling(const std::string& s);
std::string to_string(CouplingKind c);

struct PointResult {
    int n = 0;
    int level = 1;
    Estimate estimate;  // of the boosted value
    uint64_t m1 = 0, m2 = 0;
    double seconds = 0.0;
    bool capped = false;
    PilotStats pilot;
};

// One boosted estimate. With `hw95 > 0` the sample sizes come from a pilot
// run and allocate_samples; otherwise cfg.samples / cfg.epsilon decide.
PointResult run_point(const ExperimentConfig& cfg, int n, int level, double hw95 = 0.0);

// Closed-form/semi-closed value of the target, if one exists for the config.
std::optional<double> reference_value(const ExperimentConfig& cfg);

struct ConvergeLevel {
    int level = 1;
    std::vector<PointResult> points;
    std::vector<std::pair<double, double>> errors;  // (n, error); self mode: (n, P(2n) - P(n))
    std::optional<SlopeFit> slope;
};

struct ConvergeOutput {
    std::optional<double> reference;
    bool self_difference = false;
    std::vector<ConvergeLevel> levels;
    double seconds = 0.0;
};

ConvergeOutput cmd_converge(const ExperimentConfig& cfg);

struct VarianceRow {
    int n = 0;
    CouplingKind coupling = CouplingKind::standard;
    double variance = 0.0;    // Var of the correction term
    double half_width = 0.0;  // 95% precision of the variance estimate
    uint64_t samples = 0;
    double seconds = 0.0;
};

// Correction-term variance V(n) for every (n, coupling), level from cfg.levels.front() (>= 2).
std::vector<VarianceRow> cmd_variance(const ExperimentConfig& cfg);

struct PdeOutput {
    HybridResult surface;
    double price = 0.0;
    std::optional<double> reference;
    double seconds = 0.0;
};

PdeOutput cmd_pde(const ExperimentConfig& cfg);

// CSV writers: n,estimate,variance,half_width,samples,wallclock_s (converge);
// n,coupling,variance,half_width,samples,wallclock_s (variance); x,spot,price (pde).
void write_converge_csv(std::ostream& os, const ConvergeLevel& lvl);
void write_variance_csv(std::ostream& os, const std::vector<VarianceRow>& rows);
void write_pde_csv(std::ostream& os, const PdeOutput& out, const ExperimentConfig& cfg);

std::string converge_summary_json(const ExperimentConfig& cfg, const ConvergeOutput& out);
std::string variance_summary_json(const ExperimentConfig& cfg, const std::vector<VarianceRow>& rows);
std::string pde_summary_json(const ExperimentConfig& cfg, const PdeOutput& out);

}  // namespace wb
