#include "nlsfgr/ground_state.hpp"

#include <cmath>
#include <limits>
#include <optional>
#include <sstream>

#include "nlsfgr/errors.hpp"
#include "nlsfgr/io.hpp"
#include "nlsfgr/linalg.hpp"

namespace nlsfgr {

namespace {

// Everything below works on the scaled reduced wave y = sqrt(w) psi, where
// the cubic term lambda psi^3 becomes lambda y^3 / w.
struct ReducedProblem {
    const RadialGrid& grid;
    const RVec& V;
    double E;
    double lambda;

    RVec residual(const RVec& y) const {
        const int n = grid.size();
        const double d = grid.kinetic_diagonal(), o = grid.kinetic_offdiagonal();
        RVec f = (d + V.array() - E).matrix().cwiseProduct(y);
        f.head(n - 1) += o * y.tail(n - 1);
        f.tail(n - 1) += o * y.head(n - 1);
        f.array() += lambda * y.array().cube() / grid.weights().array();
        return f;
    }

    // Diagonal of -Lap + V - E + 3 lambda Q^2 in the reduced representation.
    RVec jacobian_diagonal(const RVec& y) const {
        return (grid.kinetic_diagonal() + V.array() - E +
                3.0 * lambda * y.array().square() / grid.weights().array())
            .matrix();
    }

    RVec solve_jacobian(const RVec& y, const RVec& rhs) const {
        const RVec off = RVec::Constant(grid.size() - 1, grid.kinetic_offdiagonal());
        return solve_tridiagonal(off, jacobian_diagonal(y), off, rhs);
    }
};

double quartic_overlap(const RVec& phi0, const RadialGrid& grid) {
    return (phi0.array().pow(4) * grid.weights().array()).sum();
}

}  // namespace

double ground_state_residual(const RVec& Q, double E, double lambda, const RVec& V,
                             const RadialGrid& grid) {
    const ReducedProblem p{grid, V, E, lambda};
    const RVec y = grid.to_reduced(Q);
    return p.residual(y).norm() / y.norm();
}

GroundState solve_ground_state(double E, double lambda, const BoundStatePair& pair,
                               const RadialGrid& grid, const GroundStateOptions& opts,
                               const RVec* initial_guess) {
    if (lambda == 0.0) throw DomainError("lambda must be nonzero");
    const double e_prime = E - pair.e0;
    const double w2 = e_prime / (lambda * quartic_overlap(pair.phi0, grid));
    if (!(w2 > 0.0)) {
        std::ostringstream msg;
        msg << "E = " << E << " gives w^2 = " << w2 << " <= 0 for lambda = " << lambda
            << " (E must lie on the " << (lambda > 0 ? "upper" : "lower") << " side of e0 = " << pair.e0
            << ")";
        throw DomainError(msg.str());
    }

    const ReducedProblem prob{grid, pair.V, E, lambda};
    RVec y = initial_guess ? grid.to_reduced(*initial_guess) : grid.to_reduced(RVec(std::sqrt(w2) * pair.phi0));

    RVec f = prob.residual(y);
    double res = f.norm() / y.norm();
    int it = 0;
    if (initial_guess) {
        // A warm start may already sit below the tolerance while still
        // belonging to a slightly different E; one undamped step moves it.
        y -= prob.solve_jacobian(y, f);
        f = prob.residual(y);
        res = f.norm() / y.norm();
        ++it;
    }
    for (; it < opts.max_iterations && res > opts.tolerance; ++it) {
        const RVec step = prob.solve_jacobian(y, f);
        double t = 1.0;
        RVec y_new = y - step;
        RVec f_new = prob.residual(y_new);
        double res_new = f_new.norm() / y_new.norm();
        // Damping 0.5 on residual increase.
        for (int k = 0; k < 30 && !(res_new < res); ++k) {
            t *= 0.5;
            y_new = y - t * step;
            f_new = prob.residual(y_new);
            res_new = f_new.norm() / y_new.norm();
        }
        if (!(res_new < res)) break;  // roundoff floor reached
        y = std::move(y_new);
        f = std::move(f_new);
        res = res_new;
    }
    if (!(res <= opts.accept) || !std::isfinite(res))
        throw SolveError("ground-state Newton did not converge: residual " + std::to_string(res) +
                         " after " + std::to_string(it) + " iterations at E = " + std::to_string(E));

    {
        const RVec p_local = (pair.V.array() - E + lambda * y.array().square() / grid.weights().array()).matrix();
        if (rebuild_decaying_tail(grid, y, p_local) >= 0) res = prob.residual(y).norm() / y.norm();
    }

    GroundState gs;
    gs.E = E;
    gs.lambda = lambda;
    gs.e0 = pair.e0;
    gs.V = pair.V;
    gs.iterations = it;
    gs.residual = res;
    gs.Q = grid.from_reduced(y);
    if (gs.Q.minCoeff() <= 0.0) throw SolveError("ground-state solution is not positive");
    gs.w = grid.inner(pair.phi0, gs.Q);

    const RVec yR = prob.solve_jacobian(y, y);
    RVec jr = prob.jacobian_diagonal(y).cwiseProduct(yR);
    const int n = grid.size();
    jr.head(n - 1) += grid.kinetic_offdiagonal() * yR.tail(n - 1);
    jr.tail(n - 1) += grid.kinetic_offdiagonal() * yR.head(n - 1);
    gs.r_residual = (jr - y).norm() / y.norm();
    gs.R = grid.from_reduced(yR);
    return gs;
}

GroundState solve_for_mass(double mass, double lambda, const BoundStatePair& pair,
                           const RadialGrid& grid, const GroundStateOptions& opts) {
    if (!(mass > 0.0)) throw DomainError("target mass must be positive");
    if (lambda == 0.0) throw DomainError("lambda must be nonzero");
    double E = pair.e0 + lambda * mass * quartic_overlap(pair.phi0, grid);
    std::optional<GroundState> gs;
    double last_miss = std::numeric_limits<double>::infinity();
    for (int it = 0; it < 60; ++it) {
        gs = solve_ground_state(E, lambda, pair, grid, opts, gs ? &gs->Q : nullptr);
        const double miss = gs->mass(grid) - mass;
        if (std::abs(miss) <= 1e-13 * mass) return *gs;
        // Newton in E has stalled at the roundoff floor of the profile solve.
        if (std::abs(miss) >= 0.5 * std::abs(last_miss) && std::abs(miss) <= 1e-10 * mass) return *gs;
        last_miss = miss;
        double step = -miss / gs->mass_derivative(grid);
        // Stay on the side of e0 where the branch exists.
        while ((E + step - pair.e0) * lambda <= 0.0) step *= 0.5;
        E += step;
    }
    throw SolveError("mass targeting did not converge for mass " + std::to_string(mass));
}

GroundStateBranch branch_sweep(double lambda, const std::vector<double>& E_list,
                               const BoundStatePair& pair, const RadialGrid& grid, int jobs) {
    for (std::size_t i = 1; i < E_list.size(); ++i)
        if (!(E_list[i] > E_list[i - 1])) throw ConfigError("branch_sweep: E values must be strictly increasing");

    std::vector<std::optional<GroundState>> solved(E_list.size());
    std::vector<std::string> why(E_list.size());
    io::parallel_for(jobs, E_list.size(), [&](std::size_t i) {
        try {
            solved[i] = solve_ground_state(E_list[i], lambda, pair, grid);
        } catch (const Error& e) {
            why[i] = e.what();
        }
    });

    GroundStateBranch branch;
    branch.lambda = lambda;
    for (std::size_t i = 0; i < E_list.size(); ++i) {
        if (!solved[i]) {
            branch.dropped.emplace_back(E_list[i], why[i]);
            continue;
        }
        const double m = solved[i]->mass(grid);
        if (m < branch_mass_min || m > branch_mass_max) {
            branch.dropped.emplace_back(E_list[i], "mass " + std::to_string(m) + " outside [1, 10]");
            continue;
        }
        branch.samples.push_back(std::move(*solved[i]));
    }
    if (branch.samples.empty()) throw BranchError("no E sample produced a ground state with mass in [1, 10]");
    return branch;
}

void write_branch(const GroundStateBranch& branch, const RadialGrid& grid, const std::string& csv_path,
                  const std::string& blob_path) {
    io::CsvWriter csv(csv_path, {"E", "w", "mass", "residual"});
    for (const auto& s : branch.samples) csv.row({s.E, s.w, s.mass(grid), s.residual});

    io::BinaryWriter blob(blob_path);
    blob.tag("NLSFGRB1");
    blob.u64(static_cast<std::uint64_t>(grid.size()));
    blob.f64(grid.dr());
    blob.u64(branch.samples.size());
    for (const auto& s : branch.samples) {
        blob.f64(s.E);
        blob.f64_array(s.Q.data(), static_cast<std::size_t>(s.Q.size()));
        blob.f64_array(s.R.data(), static_cast<std::size_t>(s.R.size()));
    }
}

GroundStateBranch read_branch_blob(const std::string& blob_path, double lambda, RadialGrid* grid_out) {
    io::BinaryReader in(blob_path);
    in.expect_tag("NLSFGRB1");
    const auto n = static_cast<int>(in.u64());
    const double dr = in.f64();
    const auto count = in.u64();
    if (grid_out) *grid_out = RadialGrid(dr * (n + 1), n);
    GroundStateBranch branch;
    branch.lambda = lambda;
    for (std::uint64_t k = 0; k < count; ++k) {
        GroundState s;
        s.lambda = lambda;
        s.E = in.f64();
        s.Q.resize(n);
        s.R.resize(n);
        in.f64_array(s.Q.data(), static_cast<std::size_t>(n));
        in.f64_array(s.R.data(), static_cast<std::size_t>(n));
        branch.samples.push_back(std::move(s));
    }
    return branch;
}

}  // namespace nlsfgr
