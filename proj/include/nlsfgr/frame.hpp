#pragma once

#include <vector>

#include "nlsfgr/ground_state.hpp"
#include "nlsfgr/linearization.hpp"
#include "nlsfgr/types.hpp"

namespace nlsfgr {

// psi = (Q + a R + h) e^{i Theta} with h orthogonal to Q (both real and
// imaginary parts).
struct FrameDecomposition {
    double a = 0.0;
    double Theta = 0.0;  // principal value in (-pi, pi]
    CVec h;
    double distance = 0.0;  // min over phi of |psi - Q e^{i phi}|, relative to |Q|
};

// Project psi on Q for the complex amplitude (1 + a0) e^{i Theta}, then move
// the Q-part a0 Q of the correction into the R direction: a = a0 (Q,Q)/(Q,R).
// FrameError when psi is farther than max_distance |Q| from the orbit of Q.
FrameDecomposition decompose_once(const CVec& psi, const GroundState& gs, const RadialGrid& grid,
                                  double max_distance = 0.2);

struct RenormOptions {
    double tolerance = 1e-12;  // on |a_k|
    int max_iterations = 50;
    double orthogonality_tolerance = 1e-10;
    double max_distance = 0.2;
    // |a_k| below this is treated as roundoff when contraction ratios are logged
    double noise_floor = 1e-13;
};

struct RenormResult {
    double E = 0.0;
    double Theta = 0.0;
    CVec h;
    GroundState gs;
    std::vector<double> E_iterates;
    std::vector<double> a_iterates;
    // largest |a_{k+1}|/|a_k| among iterates above the noise floor (0 when
    // the first iterate already met the tolerance)
    double contraction = 0.0;
    double orthogonality_residual = 0.0;  // |(psi - Q e^{i Theta}, Q)| / |Q|^2
    double reconstruction_residual = 0.0; // |(Q + h) e^{i Theta} - psi| / |psi|
    int iterations = 0;
};

// Fixed point E_{k+1} = E_k + a_k with a_k from decompose_once at Q_{E_k}.
// Each ground state is warm started from the previous one (or from `warm`).
// RenormError when |a| grows twice or the iteration budget runs out.
RenormResult renormalize_E(const CVec& psi, double E_guess, double lambda, const BoundStatePair& pair,
                           const RadialGrid& grid, const RenormOptions& opts = {}, const RVec* warm = nullptr);

struct ZEta {
    cplx z;
    CVec zeta;  // z u+ + conj(z) u-
    CVec eta;   // h - zeta, in the continuous subspace of L
};

// z = (v, Re h) + i (u, Im h).
ZEta split_h(const CVec& h, const LinearizedSystem& sys);

// a20 = (lambda / 4 kappa) (c1 Q, Q (u+^2 - u-^2)), c1 = 1/(Q, R).
double a20_coefficient(const LinearizedSystem& sys, const GroundState& gs);

// b = a - a20 (z^2 + conj(z)^2)
std::vector<double> extract_b(const std::vector<double>& a, const std::vector<cplx>& z, double a20);

// Continuous unwrapping: the branch of `theta` closest to `previous`.
double unwrap_phase(double theta, double previous);

// Online renormalization along a trajectory stored in the rotating gauge
// e^{+i E0 t}. Theta is reported in the lab frame.
class FrameTracker {
public:
    FrameTracker(const BoundStatePair& pair, const RadialGrid& grid, const GroundState& initial, double gauge_E0,
                 const RenormOptions& opts = {});

    struct Sample {
        double t = 0.0;
        double E = 0.0;
        double Theta = 0.0;
        double contraction = 0.0;
        int iterations = 0;
        double orthogonality_residual = 0.0;
    };
    Sample observe(double t, const CVec& psi_stored);
    const GroundState& current() const { return gs_; }

private:
    const BoundStatePair& pair_;
    RadialGrid grid_;
    GroundState gs_;
    double E0_;
    RenormOptions opts_;
    bool first_ = true;
    double theta_stored_ = 0.0;
};

// Weighted local norm and L^4 norm of eta as stored in frame.csv.
struct EtaNorms {
    double l2loc = 0.0;
    double l4 = 0.0;
};
EtaNorms eta_norms(const CVec& eta, const RadialGrid& grid, double beta);

}  // namespace nlsfgr
