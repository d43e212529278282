#include "nlsfgr/linearization.hpp"

#include <cmath>
#include <sstream>

#include "nlsfgr/errors.hpp"
#include "nlsfgr/linalg.hpp"

namespace nlsfgr {

LinearizedSystem::LinearizedSystem(const GroundState& gs, const RadialGrid& grid,
                                   const LinearizationOptions& opts)
    : grid_(grid), E_(gs.E), lambda_(gs.lambda), coupled_(!opts.drop_coupling), Q_(gs.Q) {
    const int n = grid.size();
    if (gs.Q.size() != n) throw ConfigError("ground state and grid sizes differ");

    const RVec yQ = to_y(Q_);
    q_hat_ = yQ / yQ.norm();
    const RVec Q2 = yQ.array().square() / grid.weights().array();
    Hdiag_y_ = (grid.kinetic_diagonal() + gs.V.array() - E_ + lambda_ * Q2.array()).matrix();
    coupling_y_ = coupled_ ? RVec(2.0 * lambda_ * Q2) : RVec(RVec::Zero(n));

    {
        SymmetricEigen he = eigh_tridiagonal(Hdiag_y_, RVec::Constant(n - 1, grid.kinetic_offdiagonal()));
        h_ = std::move(he.values);
        Vh_ = std::move(he.vectors);
    }
    const RVec overlap = Vh_.transpose() * q_hat_;
    overlap.cwiseAbs().maxCoeff(&h_kernel_);
    if (std::abs(overlap(h_kernel_)) < 0.99)
        throw SpectralError("no eigenvector of L- is aligned with Q (best overlap " +
                            std::to_string(std::abs(overlap(h_kernel_))) + ")");

    sqrt_h_ = RVec::Zero(n);
    inv_sqrt_h_ = RVec::Zero(n);
    for (int j = 0; j < n; ++j) {
        if (j == h_kernel_) continue;
        double hj = h_(j);
        if (hj < -1e-8) {
            std::ostringstream msg;
            msg << "L- is not positive on X: eigenvalue " << hj;
            throw SpectralError(msg.str());
        }
        hj = std::max(hj, opts.clip);
        sqrt_h_(j) = std::sqrt(hj);
        inv_sqrt_h_(j) = 1.0 / sqrt_h_(j);
    }

    // A^2 = B L+ B in the eigenbasis of L-:
    //   S (diag(h) + (Pi V)^T diag(2 lambda Q^2) (Pi V)) S,  S = diag(sqrt h).
    RMat A2;
    {
        const RMat PV = Vh_ - q_hat_ * (q_hat_.transpose() * Vh_);
        const RMat CPV = coupling_y_.asDiagonal() * PV;
        A2.noalias() = PV.transpose() * CPV;
    }
    A2.diagonal() += h_.cwiseMax(0.0);
    A2 = sqrt_h_.asDiagonal() * A2 * sqrt_h_.asDiagonal();
    A2 = 0.5 * (A2 + A2.transpose()).eval();

    SymmetricEigen ae = eigh(A2);
    a2_min_raw_ = ae.values.minCoeff();
    const double scale = std::max(1.0, ae.values.cwiseAbs().maxCoeff());
    if (a2_min_raw_ < -1e-6 * scale) {
        std::ostringstream msg;
        msg << "B L+ B is not positive semidefinite: eigenvalue " << a2_min_raw_;
        throw NotPSDError(msg.str());
    }
    a_ = ae.values.cwiseMax(0.0).cwiseSqrt();
    ae.vectors.row(h_kernel_).cwiseAbs().maxCoeff(&kernel_index_);
    Ya_.noalias() = Vh_ * ae.vectors;

    // Exactly one discrete eigenvalue strictly inside (0, -E).
    const double edge = -E_;
    int below = 0;
    for (int j = 0; j < n; ++j) {
        if (j == kernel_index_ || !(a_(j) < edge)) continue;
        if (below++ == 0) kappa_index_ = j;
    }
    if (below != 1) {
        std::ostringstream msg;
        msg << below << " eigenvalue(s) of A below the continuum edge " << edge
            << "; the linearization needs exactly one";
        throw SpectralError(msg.str());
    }
    kappa_ = a_(kappa_index_);
    const double gap_left = kappa_index_ > 0 ? kappa_ - a_(kappa_index_ - 1) : kappa_;
    const double gap_right = kappa_index_ + 1 < n ? a_(kappa_index_ + 1) - kappa_ : 1.0;
    if (std::min(gap_left, gap_right) < 1e-8 * std::max(1.0, kappa_))
        throw SpectralError("kappa^2 is not a simple eigenvalue of A^2");

    RVec wy = Ya_.col(kappa_index_);
    RVec uy = B_y(wy, false);
    if (uy(0) < 0.0) {
        uy = -uy;
        wy = -wy;
    }
    uy *= std::sqrt(kappa_ / uy.dot(Lp_y(uy)));
    const RVec vy = Lp_y(uy) / kappa_;
    // (w, B v) > 0 holds by construction: B v is a positive multiple of w.
    w_ = from_y(wy);
    u_ = from_y(uy);
    v_ = from_y(vy);
    u_plus_ = 0.5 * (u_ + v_);
    u_minus_ = 0.5 * (u_ - v_);
}

RVec LinearizedSystem::H_y(const RVec& y) const {
    const int n = grid_.size();
    const double o = grid_.kinetic_offdiagonal();
    RVec out = Hdiag_y_.cwiseProduct(y);
    out.head(n - 1) += o * y.tail(n - 1);
    out.tail(n - 1) += o * y.head(n - 1);
    return out;
}

RVec LinearizedSystem::Lp_y(const RVec& y) const {
    return H_y(y) + project_X_y(coupling_y_.cwiseProduct(project_X_y(y)));
}

RVec LinearizedSystem::B_y(const RVec& y, bool inverse) const {
    const RVec c = Vh_.transpose() * project_X_y(y);
    return project_X_y(Vh_ * (inverse ? inv_sqrt_h_ : sqrt_h_).cwiseProduct(c));
}

RVec LinearizedSystem::A_power_y(const RVec& y, double s) const {
    RVec c = Ya_.transpose() * y;
    for (Eigen::Index j = 0; j < c.size(); ++j)
        c(j) = j == kernel_index_ ? 0.0 : c(j) * std::pow(a_(j), s);
    return Ya_ * c;
}

RVec LinearizedSystem::project_X(const RVec& f) const { return from_y(project_X_y(to_y(f))); }

CVec LinearizedSystem::project_X(const CVec& f) const {
    const RVec re = project_X(RVec(f.real())), im = project_X(RVec(f.imag()));
    return re.cast<cplx>() + cplx(0, 1) * im.cast<cplx>();
}

RVec LinearizedSystem::apply_H(const RVec& f) const { return from_y(H_y(to_y(f))); }
RVec LinearizedSystem::apply_Lp(const RVec& f) const { return from_y(Lp_y(to_y(f))); }
RVec LinearizedSystem::apply_B(const RVec& f) const { return from_y(B_y(to_y(f), false)); }
RVec LinearizedSystem::apply_B_inv(const RVec& f) const { return from_y(B_y(to_y(f), true)); }
RVec LinearizedSystem::apply_A_power(const RVec& f, double s) const { return from_y(A_power_y(to_y(f), s)); }

RVec LinearizedSystem::Pc_A(const RVec& f) const {
    RVec c = Ya_.transpose() * to_y(f);
    c(kernel_index_) = 0.0;
    c(kappa_index_) = 0.0;
    return from_y(Ya_ * c);
}

CVec LinearizedSystem::apply_L(const CVec& h) const {
    const RVec f = h.real(), g = h.imag();
    return apply_H(g).cast<cplx>() - cplx(0, 1) * apply_Lp(f).cast<cplx>();
}

CVec LinearizedSystem::U_fwd(const CVec& h) const {
    const RVec f = to_y(RVec(h.real())), g = to_y(RVec(h.imag()));
    const RVec F = A_power_y(B_y(f, true), 0.5);
    const RVec G = A_power_y(B_y(g, false), -0.5);
    return from_y(F).cast<cplx>() + cplx(0, 1) * from_y(G).cast<cplx>();
}

CVec LinearizedSystem::U_inv(const CVec& h) const {
    const RVec F = to_y(RVec(h.real())), G = to_y(RVec(h.imag()));
    const RVec f = B_y(A_power_y(F, -0.5), false);
    const RVec g = B_y(A_power_y(G, 0.5), true);
    return from_y(f).cast<cplx>() + cplx(0, 1) * from_y(g).cast<cplx>();
}

CVec LinearizedSystem::propagate_A(const CVec& f, double t) const {
    const RVec cr = Ya_.transpose() * to_y(RVec(f.real()));
    const RVec ci = Ya_.transpose() * to_y(RVec(f.imag()));
    RVec outr(cr.size()), outi(cr.size());
    for (Eigen::Index j = 0; j < cr.size(); ++j) {
        const cplx c = (j == kernel_index_ ? cplx(0) : cplx(cr(j), ci(j)) * std::polar(1.0, -t * a_(j)));
        outr(j) = c.real();
        outi(j) = c.imag();
    }
    return from_y(RVec(Ya_ * outr)).cast<cplx>() + cplx(0, 1) * from_y(RVec(Ya_ * outi)).cast<cplx>();
}

nlohmann::json LinearizedSystem::diagnostics(double e01) const {
    const double edge = continuum_edge();
    return {
        {"E", E_},
        {"lambda", lambda_},
        {"kappa", kappa_},
        {"e01", e01},
        {"continuum_edge", edge},
        {"first_continuum_eigenvalue", a_(kappa_index_ + 1)},
        {"gap_2kappa_into_continuum", 2.0 * kappa_ - edge},
        {"norm_u_plus", grid_.norm(u_plus_)},
        {"norm_u_minus", grid_.norm(u_minus_)},
        {"u_dot_v", grid_.inner(u_, v_)},
        {"smallest_A2_eigenvalue", a2_min_raw_},
    };
}

LinearizedSystem build_linearization(const GroundState& gs, const RadialGrid& grid,
                                     const LinearizationOptions& opts) {
    return LinearizedSystem(gs, grid, opts);
}

CVec project_continuum(const LinearizedSystem& sys, const CVec& f, bool remove_Q) {
    const CVec g = remove_Q ? sys.project_X(f) : f;
    const RadialGrid& grid = sys.grid();
    const RVec re = g.real(), im = g.imag();
    const double alpha = grid.inner(sys.v(), re);
    const double beta = grid.inner(sys.u(), im);
    const RVec out_re = re - alpha * sys.u();
    const RVec out_im = im - beta * sys.v();
    return out_re.cast<cplx>() + cplx(0, 1) * out_im.cast<cplx>();
}

}  // namespace nlsfgr
