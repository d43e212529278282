#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

#include "nlsfgr/evolution.hpp"
#include "nlsfgr/fgr.hpp"
#include "nlsfgr/grid.hpp"

namespace nlsfgr {

// The defaults double as the schema: a key is accepted only if it appears
// here, and its value must have the same JSON type (integers are accepted
// where a float is expected).
nlohmann::json default_config();

// TOML unless the file name ends in .json. ConfigError names the path when
// the file is missing or malformed.
nlohmann::json load_config_file(const std::string& path);

// "section.key=value"; the value is read as JSON when it parses (numbers,
// booleans, arrays) and as a bare string otherwise.
void apply_override(nlohmann::json& cfg, const std::string& assignment);

// defaults <- file (if any) <- overrides, then schema and range checks.
nlohmann::json resolve_config(const std::string& path, const std::vector<std::string>& overrides);

enum class ScenarioKind { resonance, radiation, branch_tracking };
ScenarioKind parse_scenario_kind(const std::string& name);
std::string to_string(ScenarioKind kind);

struct ScenarioSettings {
    ScenarioKind kind = ScenarioKind::resonance;
    double eps = 0.5;         // |z0| (resonance) or |chi| (radiation, branch tracking)
    double z_phase = 0.0;
    double eta_scale = 0.0;   // |eta0| = eta_scale |z0|^(3/2)
    double eta_bound = 1.0;   // admissible C in |eta0| <= C |z0|^(3/2)
    double eta_width = 3.0;
    double chi_width = 2.0;
    double chi_momentum = 0.0;
    double a0 = 0.0;          // R-component for branch tracking
    std::uint64_t seed = 1;
};

struct EvolveSettings {
    double T = 100.0;
    double dt = 0.01;
    double stride = 1.0;            // largest gap between observer samples
    double points_per_decade = 100; // log-spaced samples until the gap reaches stride
    bool gauge = true;
    bool checkpoint = true;
    std::string initial;            // checkpoint path; empty: scenario data
};

struct FitSettings {
    double start_factor = 10.0;  // resonance windows start at t = start_factor eps^-2
    double start_time = 10.0;    // radiation and branch-tracking windows start here
    double end_fraction = 0.9;
    double final_fraction = 0.05;  // share of samples averaged into E_final
    int bins = 40;
    double min_decades = 1.5;
};

struct NFSettings {
    double eps = 0.1;
    double Gamma = 0.0;  // 0: take Gamma from the FGR computation
    double T = 1e4;
    double dt = 0.1;
    double d21_im = 0.0;
    double d1_im = 0.0;
    double C1 = 0.5;
    double sigma = 0.1;
    double m = 2.0;  // bracket factor written to nf.csv
    double example_Gamma = 1.0;
    double example_eps = 1.0;
    double example_T = 1e4;
    std::vector<double> example_samples;  // empty: multiples of the threshold
};

struct RunConfig {
    PotentialSpec potential;
    double r_max = 200.0;
    int n = 1999;

    double lambda = 1.6;
    std::string target = "mass";  // "mass" or "E"
    double mass = 5.0;
    double E = -2.0;
    std::vector<double> sweep;  // energies for the branch written by `ground`

    ResolventOptions resolvent;
    TimeDomainOptions timedomain;
    std::vector<double> a1_shifts;

    CapSpec cap;
    EvolveSettings evolve;
    ScenarioSettings scenario;

    double beta = 3.0;
    double max_distance = 0.5;
    double renorm_tolerance = 1e-12;

    FitSettings fits;
    double monitor_sigma = 0.1;
    NFSettings nf;

    std::string decompose_input;

    int jobs = 1;
    nlohmann::json resolved;  // what config.json echoes
};

// Typed view of a resolved configuration.
RunConfig parse_run_config(const nlohmann::json& cfg);

}  // namespace nlsfgr
