#pragma once

#include <json.hpp>

#include "nlsfgr/grid.hpp"
#include "nlsfgr/types.hpp"

namespace nlsfgr {

// The two lowest s-wave eigenpairs of -Laplacian + V. The sampled potential
// travels with the pair so downstream solvers see exactly the operator the
// eigenfunctions belong to.
struct BoundStatePair {
    double e0 = 0.0;
    double e1 = 0.0;
    double e01 = 0.0;
    RVec phi0;
    RVec phi1;

    PotentialSpec potential;
    RVec V;
    int negative_count = 0;
    double residual0 = 0.0;
    double residual1 = 0.0;
};

BoundStatePair bound_states(const PotentialSpec& v, const RadialGrid& grid);

// Gap part of the resonance assumption: 2 e01 lies inside the continuum of
// H0 = -Laplacian + V - e0, i.e. 2 e01 > |e0|.
bool check_resonance_condition(const BoundStatePair& pair);
bool check_resonance_condition(double e0, double e1);

// Interior sign changes, ignoring the exponentially small tail where the
// sign is pure roundoff.
int count_nodes(const RVec& f, double relative_floor = 1e-8);

nlohmann::json spectrum_report(const BoundStatePair& pair);

}  // namespace nlsfgr
