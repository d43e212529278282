#pragma once

#include <functional>
#include <memory>
#include <string>

#include <json.hpp>

#include "nlsfgr/grid.hpp"
#include "nlsfgr/types.hpp"

namespace nlsfgr {

// Complex absorbing layer W(r) = strength ((r - start)/(r_max - start))^power
// for r > start.
struct CapSpec {
    bool enabled = false;
    double start_radius = 150.0;
    double strength = 2.0;
    double power = 4.0;

    void validate(double r_max) const;
    RVec profile(const RadialGrid& grid) const;  // zero when disabled
};

struct Physics {
    RVec V;
    double lambda = 0.0;
    CapSpec cap;
    // Stored fields rotate with e^{+i E0 t} relative to the lab field, which
    // keeps a soliton near E0 almost static.
    double gauge_E0 = 0.0;
};

// psi holds physical values in the rotating gauge; lab() undoes it.
struct FieldState {
    double t = 0.0;
    CVec psi;
    double dt = 0.0;
    bool cap = false;
    double gauge_E0 = 0.0;

    CVec lab() const;
};

FieldState make_state(const CVec& psi_lab, double t, const Physics& physics);

struct Conserved {
    double mass = 0.0;
    double energy = 0.0;
};

// Mass (psi, psi) and H = int 1/2 |grad psi|^2 + 1/2 V |psi|^2 + 1/4 lambda |psi|^4
// with the same second-difference gradient the stepper uses.
Conserved conserved_quantities(const CVec& psi, const RVec& V, double lambda, const RadialGrid& grid);

// Largest step the accuracy bound dt <= 0.1 / max|V + lambda |psi|^2| admits.
double max_stable_dt(const CVec& psi, const RVec& V, double lambda);

// Strang splitting: half step of the local phase (with the absorbing layer),
// a full exact kinetic step in the sine basis, another half step of phase.
// In the scaled reduced representation the Dirichlet second difference is
// diagonalized by the type-I discrete sine transform.
class SplitStepper {
public:
    SplitStepper(const RadialGrid& grid, const Physics& physics, double dt);
    ~SplitStepper();
    SplitStepper(const SplitStepper&) = delete;
    SplitStepper& operator=(const SplitStepper&) = delete;

    const RadialGrid& grid() const { return grid_; }
    const Physics& physics() const { return physics_; }
    double dt() const { return dt_; }

    // One step; IntegrationError (carrying the input state) on non-finite output.
    void step(FieldState& state);
    // nsteps steps; finiteness is checked every `check_every` steps and a
    // failure reports the last checked state.
    void advance(FieldState& state, long nsteps, int check_every = 64);

private:
    void phase_half(CVec& y) const;
    void kinetic(CVec& y);

    RadialGrid grid_;
    Physics physics_;
    double dt_;
    RVec inv_scale2_;
    RVec potential_phase_;  // (V - E0) dt/2
    RVec cap_damp_;         // e^{-W dt/2}
    RVec cap_nl_time_;      // int_0^{dt/2} e^{-2 W s} ds
    CVec kinetic_factor_;   // e^{-i mu_k dt} / (2(n+1))
    CVec work_;
    struct Plan;
    std::unique_ptr<Plan> plan_;
};

using Observer = std::function<void(const FieldState&)>;

// Advances to state.t + T in whole steps of the stepper's dt (T must be a
// multiple of dt to 1e-9 relative) calling observe at t0 and then every
// `stride` steps, and once more at the end if the last step is off-stride.
// T = 0 only observes. Accuracy-bound violations at observer samples raise
// IntegrationError.
void evolve(SplitStepper& stepper, FieldState& state, double T, long stride, const Observer& observe);

// Checkpoint blob, little endian:
//   char[8] "NLSFGRC1", f64 t, u64 n, f64 dr, f64 gauge_E0,
//   then n pairs (f64 re, f64 im) of the stored (gauged) psi.
void write_checkpoint(const std::string& path, const FieldState& state, const RadialGrid& grid);
FieldState read_checkpoint(const std::string& path, const RadialGrid& grid);

// Mass currently inside the absorbing layer relative to the mass it has
// absorbed so far; small values mean outgoing waves are taken up rather
// than piling up or reflecting.
nlohmann::json cap_diagnostic(const CVec& psi, double mass0, const RadialGrid& grid, const CapSpec& cap);

}  // namespace nlsfgr
