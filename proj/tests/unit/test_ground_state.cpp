#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>

#include "nlsfgr/errors.hpp"
#include "nlsfgr/ground_state.hpp"
#include "nlsfgr/linalg.hpp"
#include "support.hpp"

using namespace nlsfgr;

namespace {

// Imaginary-time relaxation at fixed mass: backward-Euler steps of
// d(psi)/d(tau) = -(-Lap + V + lambda psi^2) psi with the nonlinearity frozen per
// step, followed by renormalization. Independent of the Newton path.
std::pair<RVec, double> relax(double mass, double lambda, const BoundStatePair& p, const RadialGrid& g) {
    const int n = g.size();
    RVec y = g.to_reduced(RVec(std::sqrt(mass) * p.phi0));
    const RVec off = RVec::Constant(n - 1, -1.0 / (g.dr() * g.dr()));
    // 1 + dtau*e must stay positive for every level e >= e0 ~ -2.1.
    const double dtau = 0.2;
    for (int it = 0; it < 400; ++it) {
        const RVec diag = (1.0 + dtau * (2.0 / (g.dr() * g.dr()) + p.V.array() +
                                         lambda * y.array().square() / g.weights().array()))
                              .matrix();
        y = solve_tridiagonal(dtau * off, diag, dtau * off, y);
        y *= std::sqrt(mass) / y.norm();
    }
    // Rayleigh-type quotient for E.
    RVec hy = (2.0 / (g.dr() * g.dr()) + p.V.array() + lambda * y.array().square() / g.weights().array())
                  .matrix()
                  .cwiseProduct(y);
    hy.head(n - 1) += off.cwiseProduct(y.tail(n - 1));
    hy.tail(n - 1) += off.cwiseProduct(y.head(n - 1));
    return {g.from_reduced(y), y.dot(hy) / y.dot(y)};
}

}  // namespace

TEST(GroundState, ResidualsAndPositivityOnShippedPotential) {
    const RadialGrid& g = test::default_grid();
    const BoundStatePair& p = test::default_pair();
    for (double lambda : {0.05, 1.6, -0.05}) {
        const GroundState gs = solve_for_mass(2.0, lambda, p, g);
        EXPECT_LT(gs.residual, 1e-8);
        EXPECT_LT(ground_state_residual(gs.Q, gs.E, lambda, p.V, g), 1e-8);
        EXPECT_LT(gs.r_residual, 1e-6);
        EXPECT_GT(gs.Q.minCoeff(), 0.0);
        EXPECT_NEAR(gs.mass(g), 2.0, 1e-10);
        EXPECT_EQ((gs.E - p.e0) * lambda > 0, true);
        // H_E Q = 0 is the same statement as the bound-state equation.
        const RVec HQ = -g.laplacian(gs.Q) + (p.V.array() - gs.E + lambda * gs.Q.array().square()).matrix().cwiseProduct(gs.Q);
        EXPECT_LT(g.norm(HQ) / g.norm(gs.Q), 1e-8);
    }
}

TEST(GroundState, AgreesWithImaginaryTimeRelaxation) {
    const RadialGrid& g = test::small_grid();
    const BoundStatePair& p = test::small_pair();
    const double lambda = 0.05, mass = 3.0;
    const GroundState gs = solve_for_mass(mass, lambda, p, g);
    const auto [q_relax, e_relax] = relax(mass, lambda, p, g);
    EXPECT_LT(g.norm(RVec(gs.Q - q_relax)) / g.norm(gs.Q), 1e-8);
    EXPECT_NEAR(gs.E, e_relax, 1e-10);
}

TEST(GroundState, RejectsBranchEndpointAndWrongSide) {
    const RadialGrid& g = test::small_grid();
    const BoundStatePair& p = test::small_pair();
    EXPECT_THROW(solve_ground_state(p.e0, 0.05, p, g), DomainError);
    EXPECT_THROW(solve_ground_state(p.e0 - 0.01, 0.05, p, g), DomainError);
    EXPECT_THROW(solve_ground_state(p.e0 + 0.01, -0.05, p, g), DomainError);
    EXPECT_THROW(solve_ground_state(p.e0 + 0.01, 0.0, p, g), DomainError);
}

TEST(GroundState, SmallCouplingScaling) {
    // At fixed mass 1 the phi0 amplitude w tends to 1 and the orthogonal
    // correction |h| = O(lambda w^3) halves with lambda.
    const RadialGrid& g = test::small_grid();
    const BoundStatePair& p = test::small_pair();
    const double quartic = (p.phi0.array().pow(4) * g.weights().array()).sum();
    std::vector<double> h_norm;
    for (double lambda : {0.04, 0.02, 0.01, 0.005}) {
        const GroundState gs = solve_for_mass(1.0, lambda, p, g);
        const RVec h = gs.Q - gs.w * p.phi0;
        EXPECT_NEAR(g.inner(h, p.phi0), 0.0, 1e-12);
        h_norm.push_back(g.norm(h));
        // w^2 ~ E'/(lambda int phi0^4)
        EXPECT_NEAR(gs.w * gs.w, (gs.E - p.e0) / (lambda * quartic), 0.1 * lambda);
    }
    for (std::size_t i = 1; i < h_norm.size(); ++i) EXPECT_NEAR(h_norm[i - 1] / h_norm[i], 2.0, 0.3);
}

TEST(GroundState, DerivativeMatchesCentralDifference) {
    const RadialGrid& g = test::default_grid();
    const BoundStatePair& p = test::default_pair();
    for (double lambda : {0.05, 1.6}) {
        const GroundState gs = solve_for_mass(1.0, lambda, p, g);
        const double e_prime = gs.E - p.e0;
        std::vector<double> err;
        for (double rel : {4e-3, 2e-3}) {
            const double d = rel * e_prime;
            const GroundState plus = solve_ground_state(gs.E + d, lambda, p, g, {}, &gs.Q);
            const GroundState minus = solve_ground_state(gs.E - d, lambda, p, g, {}, &gs.Q);
            const RVec fd = (plus.Q - minus.Q) / (2 * d);
            err.push_back(g.norm(RVec(fd - gs.R)) / g.norm(gs.R));
            // d|Q|^2/dE two ways
            const double dm = (plus.mass(g) - minus.mass(g)) / (2 * d);
            EXPECT_NEAR(dm / gs.mass_derivative(g), 1.0, 1e-3);
        }
        EXPECT_LT(err.back(), 1e-4);
        EXPECT_NEAR(err[0] / err[1], 4.0, 0.8);
    }
}

TEST(GroundState, DerivativeNormGrowsLikeInverseCoupling) {
    const RadialGrid& g = test::small_grid();
    const BoundStatePair& p = test::small_pair();
    double prev = 0.0;
    for (double lambda : {0.04, 0.02, 0.01}) {
        const GroundState gs = solve_for_mass(1.0, lambda, p, g);
        const double ratio = g.norm(gs.R) / g.norm(gs.Q);
        if (prev > 0.0) EXPECT_NEAR(ratio / prev, 2.0, 0.2);
        prev = ratio;
    }
}

TEST(GroundStateBranch, WindowFilteringAndMonotoneMass) {
    const RadialGrid& g = test::small_grid();
    const BoundStatePair& p = test::small_pair();
    const double lambda = 0.5;
    const double quartic = (p.phi0.array().pow(4) * g.weights().array()).sum();
    // Masses roughly 0.5 .. 12 before filtering.
    std::vector<double> E;
    for (double m : {0.5, 1.5, 3.0, 5.0, 8.0, 12.0}) E.push_back(p.e0 + lambda * quartic * m);
    const GroundStateBranch b = branch_sweep(lambda, E, p, g, 2);
    EXPECT_GE(b.samples.size(), 3u);
    EXPECT_GE(b.dropped.size(), 1u);
    for (std::size_t i = 1; i < b.samples.size(); ++i) {
        EXPECT_GT(b.samples[i].E, b.samples[i - 1].E);
        EXPECT_GT(b.samples[i].mass(g), b.samples[i - 1].mass(g));
    }
    for (const auto& s : b.samples) {
        EXPECT_GE(s.mass(g), 1.0);
        EXPECT_LE(s.mass(g), 10.0);
    }

    const GroundStateBranch single = branch_sweep(lambda, {E[2]}, p, g);
    EXPECT_EQ(single.samples.size(), 1u);
    EXPECT_THROW(branch_sweep(lambda, {E[0]}, p, g), BranchError);
}

TEST(GroundStateBranch, SerializationRoundTrip) {
    const RadialGrid& g = test::small_grid();
    const BoundStatePair& p = test::small_pair();
    const GroundState gs = solve_for_mass(2.0, 0.3, p, g);
    GroundStateBranch b;
    b.lambda = 0.3;
    b.samples.push_back(gs);
    const auto dir = std::filesystem::temp_directory_path() / "nlsfgr_branch_test";
    write_branch(b, g, (dir / "branch.csv").string(), (dir / "branch.bin").string());
    RadialGrid g2;
    const GroundStateBranch back = read_branch_blob((dir / "branch.bin").string(), 0.3, &g2);
    ASSERT_EQ(back.samples.size(), 1u);
    EXPECT_EQ(g2.size(), g.size());
    EXPECT_DOUBLE_EQ(g2.dr(), g.dr());
    EXPECT_EQ(back.samples[0].E, gs.E);
    EXPECT_EQ((back.samples[0].Q - gs.Q).cwiseAbs().maxCoeff(), 0.0);
    EXPECT_EQ((back.samples[0].R - gs.R).cwiseAbs().maxCoeff(), 0.0);
    std::filesystem::remove_all(dir);
}
