#include "nlsfgr/frame.hpp"

#include <cmath>
#include <sstream>

#include "nlsfgr/errors.hpp"

namespace nlsfgr {

FrameDecomposition decompose_once(const CVec& psi, const GroundState& gs, const RadialGrid& grid,
                                  double max_distance) {
    const CVec Qc = gs.Q.cast<cplx>();
    const double QQ = grid.inner(gs.Q, gs.Q);
    const double QR = grid.inner(gs.Q, gs.R);
    const cplx amp = grid.inner(Qc, psi) / QQ;
    const double modulus = std::abs(amp);

    FrameDecomposition d;
    d.Theta = modulus > 0.0 ? std::arg(amp) : 0.0;
    const CVec rotated = psi * std::exp(cplx(0.0, -d.Theta));
    d.distance = grid.norm(CVec(rotated - Qc)) / std::sqrt(QQ);
    if (!(d.distance <= max_distance)) {
        std::ostringstream msg;
        msg << "field is " << d.distance << " |Q| away from the soliton orbit (limit " << max_distance << ")";
        throw FrameError(msg.str());
    }
    const double a0 = modulus - 1.0;
    const CVec k = rotated - (1.0 + a0) * Qc;
    d.a = a0 * QQ / QR;
    d.h = k + (a0 * gs.Q - d.a * gs.R).cast<cplx>();
    return d;
}

RenormResult renormalize_E(const CVec& psi, double E_guess, double lambda, const BoundStatePair& pair,
                           const RadialGrid& grid, const RenormOptions& opts, const RVec* warm) {
    RenormResult out;
    double E = E_guess;
    RVec guess;
    if (warm) guess = *warm;
    int growth = 0;
    FrameDecomposition d;
    for (int k = 0;; ++k) {
        out.gs = solve_ground_state(E, lambda, pair, grid, {}, guess.size() ? &guess : nullptr);
        guess = out.gs.Q;
        d = decompose_once(psi, out.gs, grid, opts.max_distance);
        out.E_iterates.push_back(E);
        out.a_iterates.push_back(d.a);
        out.iterations = k + 1;
        const std::size_t m = out.a_iterates.size();
        if (m >= 2) {
            const double prev = std::abs(out.a_iterates[m - 2]);
            const double cur = std::abs(d.a);
            if (prev > opts.noise_floor && cur > opts.noise_floor) out.contraction = std::max(out.contraction, cur / prev);
            if (cur > prev && prev > opts.tolerance && ++growth >= 2)
                throw RenormError("renormalization of E is not contracting", out.a_iterates);
        }
        if (std::abs(d.a) <= opts.tolerance) break;
        if (k + 1 >= opts.max_iterations)
            throw RenormError("renormalization of E did not reach |a| <= tolerance", out.a_iterates);
        E += d.a;
    }
    out.E = E;
    out.Theta = d.Theta;
    out.h = d.h;

    const CVec Qc = out.gs.Q.cast<cplx>();
    const CVec e_theta = Qc * std::exp(cplx(0.0, d.Theta));
    const double QQ = grid.inner(out.gs.Q, out.gs.Q);
    out.orthogonality_residual = std::abs(grid.inner(CVec(psi - e_theta), e_theta)) / QQ;
    out.reconstruction_residual =
        grid.norm(CVec((Qc + d.h) * std::exp(cplx(0.0, d.Theta)) - psi)) / grid.norm(psi);
    if (!(out.orthogonality_residual <= opts.orthogonality_tolerance)) {
        std::ostringstream msg;
        msg << "renormalized frame violates orthogonality: residual " << out.orthogonality_residual;
        throw RenormError(msg.str(), out.a_iterates);
    }
    return out;
}

ZEta split_h(const CVec& h, const LinearizedSystem& sys) {
    const RadialGrid& g = sys.grid();
    ZEta out;
    out.z = cplx(g.inner(sys.v(), RVec(h.real())), g.inner(sys.u(), RVec(h.imag())));
    out.zeta = out.z * sys.u_plus().cast<cplx>() + std::conj(out.z) * sys.u_minus().cast<cplx>();
    out.eta = h - out.zeta;
    return out;
}

double a20_coefficient(const LinearizedSystem& sys, const GroundState& gs) {
    const RadialGrid& g = sys.grid();
    const double c1 = 1.0 / g.inner(gs.Q, gs.R);
    const RVec q2 = gs.Q.cwiseAbs2();
    const RVec diff = (sys.u_plus().cwiseAbs2() - sys.u_minus().cwiseAbs2()).eval();
    return sys.lambda() / (4.0 * sys.kappa()) * c1 * g.inner(q2, diff);
}

std::vector<double> extract_b(const std::vector<double>& a, const std::vector<cplx>& z, double a20) {
    if (a.size() != z.size()) throw DomainError("a and z series differ in length");
    std::vector<double> b(a.size());
    for (std::size_t i = 0; i < a.size(); ++i) b[i] = a[i] - a20 * 2.0 * std::real(z[i] * z[i]);
    return b;
}

double unwrap_phase(double theta, double previous) {
    return theta + 2.0 * pi * std::round((previous - theta) / (2.0 * pi));
}

FrameTracker::FrameTracker(const BoundStatePair& pair, const RadialGrid& grid, const GroundState& initial,
                           double gauge_E0, const RenormOptions& opts)
    : pair_(pair), grid_(grid), gs_(initial), E0_(gauge_E0), opts_(opts) {}

FrameTracker::Sample FrameTracker::observe(double t, const CVec& psi_stored) {
    const RenormResult r = renormalize_E(psi_stored, gs_.E, gs_.lambda, pair_, grid_, opts_, &gs_.Q);
    gs_ = r.gs;
    theta_stored_ = first_ ? r.Theta : unwrap_phase(r.Theta, theta_stored_);
    first_ = false;
    Sample s;
    s.t = t;
    s.E = r.E;
    s.Theta = theta_stored_ - E0_ * t;
    s.contraction = r.contraction;
    s.iterations = r.iterations;
    s.orthogonality_residual = r.orthogonality_residual;
    return s;
}

EtaNorms eta_norms(const CVec& eta, const RadialGrid& grid, double beta) {
    return {grid.local_norm(eta, beta), grid.lp_norm(eta, 4.0)};
}

}  // namespace nlsfgr
