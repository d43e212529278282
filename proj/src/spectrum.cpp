#include "nlsfgr/spectrum.hpp"

#include <cmath>

#include "nlsfgr/errors.hpp"
#include "nlsfgr/linalg.hpp"

namespace nlsfgr {

BoundStatePair bound_states(const PotentialSpec& v, const RadialGrid& grid) {
    v.validate();
    const int n = grid.size();
    BoundStatePair pair;
    pair.potential = v;
    pair.V = grid.sample(v);

    const RVec diag = RVec::Constant(n, grid.kinetic_diagonal()) + pair.V;
    const RVec off = RVec::Constant(n - 1, grid.kinetic_offdiagonal());

    pair.negative_count = count_eigenvalues_below(diag, off, 0.0);
    if (pair.negative_count < 2)
        throw SpectrumError("potential too shallow: " + std::to_string(pair.negative_count) +
                            " negative s-wave eigenvalue(s), two are required");

    const SymmetricEigen low = eigh_tridiagonal_lowest(diag, off, 2);
    pair.e0 = low.values(0);
    pair.e1 = low.values(1);
    pair.e01 = pair.e1 - pair.e0;

    RVec y0 = low.vectors.col(0);
    RVec y1 = low.vectors.col(1);
    if (y0(0) < 0.0) y0 = -y0;
    if (y1(0) < 0.0) y1 = -y1;
    rebuild_decaying_tail(grid, y0, (pair.V.array() - pair.e0).matrix());
    rebuild_decaying_tail(grid, y1, (pair.V.array() - pair.e1).matrix());
    // Unit Euclidean norm in y is unit L^2 norm in R^3.
    y0.normalize();
    y1.normalize();

    auto residual = [&](const RVec& y, double e) {
        RVec hy = diag.cwiseProduct(y);
        hy.head(n - 1) += off.cwiseProduct(y.tail(n - 1));
        hy.tail(n - 1) += off.cwiseProduct(y.head(n - 1));
        return (hy - e * y).norm();
    };
    pair.residual0 = residual(y0, pair.e0);
    pair.residual1 = residual(y1, pair.e1);

    pair.phi0 = grid.from_reduced(y0);
    pair.phi1 = grid.from_reduced(y1);
    return pair;
}

bool check_resonance_condition(double e0, double e1) { return 2.0 * (e1 - e0) > std::abs(e0); }

bool check_resonance_condition(const BoundStatePair& pair) {
    return check_resonance_condition(pair.e0, pair.e1);
}

int count_nodes(const RVec& f, double relative_floor) {
    const double floor = relative_floor * f.cwiseAbs().maxCoeff();
    int nodes = 0;
    int last_sign = 0;
    for (Eigen::Index j = 0; j < f.size(); ++j) {
        if (std::abs(f(j)) <= floor) continue;
        const int s = f(j) > 0 ? 1 : -1;
        if (last_sign != 0 && s != last_sign) ++nodes;
        last_sign = s;
    }
    return nodes;
}

nlohmann::json spectrum_report(const BoundStatePair& pair) {
    return {
        {"e0", pair.e0},
        {"e1", pair.e1},
        {"e01", pair.e01},
        {"resonance_ok", check_resonance_condition(pair)},
        {"negative_eigenvalue_count", pair.negative_count},
        {"residual0", pair.residual0},
        {"residual1", pair.residual1},
        {"potential", {{"shape", to_string(pair.potential.shape)},
                       {"depth", pair.potential.depth},
                       {"width", pair.potential.width}}},
    };
}

}  // namespace nlsfgr
