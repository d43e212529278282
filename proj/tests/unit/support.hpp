#pragma once

#include <random>

#include "nlsfgr/grid.hpp"
#include "nlsfgr/spectrum.hpp"
#include "nlsfgr/types.hpp"

namespace nlsfgr::test {

// Shipped potential and production grid, built once per test binary.
inline const RadialGrid& default_grid() {
    static const RadialGrid g = build_grid(200.0, 1999);
    return g;
}

inline const PotentialSpec& default_potential() {
    static const PotentialSpec v{PotentialShape::gaussian_well, 4.0, 2.0};
    return v;
}

inline const BoundStatePair& default_pair() {
    static const BoundStatePair p = bound_states(default_potential(), default_grid());
    return p;
}

// Smaller box used where dense linear algebra on the full grid would make a
// unit test slow. The bound states are converged on it to ~1e-12.
inline const RadialGrid& small_grid() {
    static const RadialGrid g = build_grid(60.0, 599);
    return g;
}

inline const BoundStatePair& small_pair() {
    static const BoundStatePair p = bound_states(default_potential(), small_grid());
    return p;
}

inline RVec random_vector(int n, std::mt19937_64& rng) {
    std::normal_distribution<double> d;
    RVec v(n);
    for (int i = 0; i < n; ++i) v(i) = d(rng);
    return v;
}

// Random smooth localized function: Gaussian envelope times a random
// low-order polynomial, so it is well resolved on the grid.
inline RVec random_localized(const RadialGrid& g, std::mt19937_64& rng, double width = 4.0) {
    std::normal_distribution<double> d;
    const double c0 = d(rng), c1 = d(rng), c2 = d(rng), c3 = d(rng);
    RVec f(g.size());
    for (int j = 0; j < g.size(); ++j) {
        const double r = g.r(j) / width;
        f(j) = (c0 + c1 * r + c2 * r * r + c3 * r * r * r) * std::exp(-0.5 * r * r);
    }
    return f;
}

inline CVec random_localized_complex(const RadialGrid& g, std::mt19937_64& rng, double width = 4.0) {
    return random_localized(g, rng, width).cast<cplx>() + cplx(0, 1) * random_localized(g, rng, width).cast<cplx>();
}

}  // namespace nlsfgr::test
