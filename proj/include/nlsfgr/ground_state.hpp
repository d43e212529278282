#pragma once

#include <string>
#include <utility>
#include <vector>

#include "nlsfgr/grid.hpp"
#include "nlsfgr/spectrum.hpp"
#include "nlsfgr/types.hpp"

namespace nlsfgr {

// Nonlinear ground state Q_E of (-Lap + V) Q + lambda Q^3 = E Q together with
// R = dQ/dE. Q = w phi0 + h with h orthogonal to phi0.
struct GroundState {
    double E = 0.0;
    double lambda = 0.0;
    double e0 = 0.0;
    RVec Q;
    RVec R;
    RVec V;
    double w = 0.0;
    double residual = 0.0;    // |(-Lap+V)Q + lambda Q^3 - E Q| / |Q|
    double r_residual = 0.0;  // |L+^or R - Q| / |Q|
    int iterations = 0;

    double mass(const RadialGrid& grid) const { return grid.inner(Q, Q); }
    // d|Q|^2/dE = 2 (Q, R)
    double mass_derivative(const RadialGrid& grid) const { return 2.0 * grid.inner(Q, R); }
};

struct GroundStateOptions {
    int max_iterations = 50;
    double tolerance = 1e-12;
    // Newton iterations stop once the residual stops decreasing below this
    // level; anything above it after max_iterations is a SolveError.
    double accept = 1e-10;
};

// Newton on the full discretized profile. Newton is affine invariant, so the
// iterates coincide with Newton on the (w, h) splitting.
GroundState solve_ground_state(double E, double lambda, const BoundStatePair& pair,
                               const RadialGrid& grid, const GroundStateOptions& opts = {},
                               const RVec* initial_guess = nullptr);

// Ground state with |Q|^2 = mass, found by Newton in E using d|Q|^2/dE = 2(Q,R).
GroundState solve_for_mass(double mass, double lambda, const BoundStatePair& pair,
                           const RadialGrid& grid, const GroundStateOptions& opts = {});

struct GroundStateBranch {
    double lambda = 0.0;
    std::vector<GroundState> samples;
    std::vector<std::pair<double, std::string>> dropped;  // (E, reason)
};

inline constexpr double branch_mass_min = 1.0;
inline constexpr double branch_mass_max = 10.0;

// Solves each E; keeps those whose mass lies in [1, 10]. `jobs` > 1 evaluates
// samples concurrently.
GroundStateBranch branch_sweep(double lambda, const std::vector<double>& E_list,
                               const BoundStatePair& pair, const RadialGrid& grid, int jobs = 1);

// CSV columns E,w,mass,residual plus a little-endian blob:
//   char[8] "NLSFGRB1", u64 n, f64 dr, u64 count,
//   then per sample f64 E followed by f64 Q[n] and f64 R[n].
void write_branch(const GroundStateBranch& branch, const RadialGrid& grid,
                  const std::string& csv_path, const std::string& blob_path);
GroundStateBranch read_branch_blob(const std::string& blob_path, double lambda, RadialGrid* grid_out = nullptr);

// Residual of the discretized bound-state equation, relative to |Q|.
double ground_state_residual(const RVec& Q, double E, double lambda, const RVec& V,
                             const RadialGrid& grid);

}  // namespace nlsfgr
