#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include <json.hpp>

#include "nlsfgr/config.hpp"
#include "nlsfgr/fgr.hpp"
#include "nlsfgr/fit.hpp"
#include "nlsfgr/ground_state.hpp"
#include "nlsfgr/linearization.hpp"
#include "nlsfgr/spectrum.hpp"

namespace nlsfgr {

// Grid, bound states, ground state at the configured mass or energy, and
// its linearization.
struct Setup {
    RadialGrid grid;
    BoundStatePair pair;
    GroundState gs;
    LinearizedSystem sys;
};
Setup prepare_setup(const RunConfig& cfg);

// Removes the Q-component from the real and the imaginary part.
CVec remove_Q_components(const CVec& f, const RVec& Q, const RadialGrid& grid);

// Localized random bump in the continuous subspace of L with |eta| = norm.
CVec continuum_bump(const LinearizedSystem& sys, double width, double norm, std::uint64_t seed);

// exp(-r^2 / 2 w^2) e^{i k r} projected on the continuous subspace, both
// parts made orthogonal to Q, scaled to |chi| = norm.
CVec radiation_profile(const LinearizedSystem& sys, double norm, double width, double momentum);

// psi0 = Q + h0 with h0 the Q-orthogonal part of z0 u+ + conj(z0) u- + eta0,
// so that the frame of psi0 at this ground state has a = 0, Theta = 0 and
// returns z0 exactly. ConfigError if |eta0| > eta_bound |z0|^(3/2) or if the
// data leave the frame's neighbourhood of Q.
CVec prepare_resonance_data(const GroundState& gs, const LinearizedSystem& sys, cplx z0, const CVec& eta0,
                            double eta_bound, double max_distance);

// psi0 = Q + a0 R + chi with chi from radiation_profile (a0 = 0 for the
// radiation scenario).
CVec prepare_radiation_data(const GroundState& gs, const LinearizedSystem& sys, const CVec& chi, double a0,
                            double max_distance);

// Renormalizes psi to its branch point E' and removes the z u+ + conj(z) u-
// part of the correction there, leaving Q_E' + eta up to the phase.
CVec strip_discrete_mode(const CVec& psi, const GroundState& gs, const BoundStatePair& pair, const RadialGrid& grid,
                         double max_distance);

// Initial field of the configured scenario in the lab frame, or the
// evolve.initial checkpoint when one is given.
CVec scenario_initial_data(const RunConfig& cfg, const Setup& st);

// Observer steps: log-spaced (points_per_decade) from one step until the gap
// reaches `stride`, uniform after that; always contains 0 and the last step.
std::vector<long> sample_steps(double T, double dt, double stride, double points_per_decade);

struct FrameRow {
    double t = 0.0;
    double E = 0.0;      // renormalized energy at t
    double Theta = 0.0;  // renormalized phase, lab frame
    double a = 0.0;      // R-coordinate at E_final
    double b = 0.0;
    cplx z;
    double eta_l2loc = 0.0;
    double eta_l4 = 0.0;
    double mass = 0.0;
    double energy = 0.0;
};

inline const std::vector<std::string> frame_columns = {"t",     "E",     "Theta",     "a",      "b",    "Re_z",
                                                       "Im_z",  "abs_z", "eta_L2loc", "eta_L4", "mass", "energy"};

// Running suprema of {t}^(1/2)|z|, {t}^(3/4 - sigma)|eta|_L4 and
// {t}^(1 + sigma/4)|eta|_L2loc.
struct Monitor {
    double sigma = 0.1;
    std::vector<double> t, z_term, l4_term, loc_term;
    double sup_z = 0.0, sup_l4 = 0.0, sup_loc = 0.0;
    bool finite = true;

    void add(double t, double clock, double abs_z, double l4, double loc);
    nlohmann::json to_json() const;
};

struct RunRecord {
    ScenarioKind kind = ScenarioKind::resonance;
    std::vector<FrameRow> rows;
    double eps = 0.0;  // |z(0)| for resonance runs, |chi| otherwise
    double E_initial = 0.0;
    double E_final = 0.0;
    double Gamma = 0.0;
    double a20 = 0.0;
    double max_contraction = 0.0;
    double T_reached = 0.0;
    bool complete = true;
    std::string failure;
    nlohmann::json fits, monitor, cap, fgr;
};

using Progress = std::function<void(const std::string&)>;

// Evolves the scenario, renormalizes E at every observer sample, then
// decomposes the stored samples in the fixed frame at E_final (in parallel
// over cfg.jobs), fits the decay laws and writes config.json, frame.csv,
// fits.json, monitor.json, cap.json, fgr.json, nf.csv (resonance runs) and a
// final checkpoint into out_dir. On a numerical failure the partial record
// is written before the error is rethrown.
RunRecord run_scenario(const RunConfig& cfg, const std::string& out_dir, const Progress& progress = nullptr);

// Fits used by run_scenario; exposed for tests. A failing fit is reported as
// {"error": message} rather than thrown.
nlohmann::json fit_or_error(const std::vector<double>& x, const std::vector<double>& y, double lo, double hi,
                            const FitOptions& opts);

// Largest of max(r) and 1/min(r) for r = |z| {t}^(1/2) on the window.
double envelope_factor(const std::vector<double>& clock, const std::vector<double>& abs_z, double lo, double hi);

void write_frame_csv(const std::string& path, const std::vector<FrameRow>& rows);

}  // namespace nlsfgr
