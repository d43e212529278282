#pragma once

#include <json.hpp>

#include "nlsfgr/ground_state.hpp"
#include "nlsfgr/grid.hpp"
#include "nlsfgr/types.hpp"

namespace nlsfgr {

struct LinearizationOptions {
    // Zero the 2 lambda Pi Q^2 Pi coupling so that L+ = L- (degenerate check).
    bool drop_coupling = false;
    // Non-kernel eigenvalues of L- below this are clipped before square roots.
    double clip = 1e-12;
};

// Linearization of the NLS around Q_E, acting on X = {f : (Q, f) = 0}.
//
//   L- = H = -Lap + V - E + lambda Q^2
//   L+ = H + 2 lambda Pi Q^2 Pi
//   B  = Pi (L-)^(1/2) Pi,   A = sqrt(B L+ B)
//   L(f + i g) = L- g - i L+ f
//
// L- is tridiagonal; its full eigendecomposition H = V diag(h) V^T gives B and
// B^-1 directly, and one dense eigendecomposition of A^2 in that basis gives
// every function of A. Public methods take and return physical grid values;
// members suffixed `_y` live in the scaled reduced representation where the
// inner product is Euclidean.
class LinearizedSystem {
public:
    LinearizedSystem() = default;
    LinearizedSystem(const GroundState& gs, const RadialGrid& grid, const LinearizationOptions& opts = {});

    const RadialGrid& grid() const { return grid_; }
    double E() const { return E_; }
    double lambda() const { return lambda_; }
    const RVec& Q() const { return Q_; }
    double kappa() const { return kappa_; }
    double continuum_edge() const { return -E_; }

    const RVec& u() const { return u_; }
    const RVec& v() const { return v_; }
    const RVec& u_plus() const { return u_plus_; }
    const RVec& u_minus() const { return u_minus_; }
    // Unit eigenvector of A at kappa.
    const RVec& w_vec() const { return w_; }

    // Spectrum of A (ascending) and its eigenvectors in the reduced representation.
    const RVec& a_values() const { return a_; }
    const RMat& a_vectors_y() const { return Ya_; }
    int kernel_index() const { return kernel_index_; }
    int kappa_index() const { return kappa_index_; }
    // True for eigenvalues of A belonging to the continuum (neither the
    // kernel nor the kappa mode).
    bool is_continuum(int j) const { return j != kernel_index_ && j != kappa_index_; }

    RVec project_X(const RVec& f) const;
    CVec project_X(const CVec& f) const;
    RVec apply_H(const RVec& f) const;
    RVec apply_Lp(const RVec& f) const;
    CVec apply_L(const CVec& h) const;
    RVec apply_B(const RVec& f) const;
    RVec apply_B_inv(const RVec& f) const;
    // A^s on X; negative powers skip the kernel.
    RVec apply_A_power(const RVec& f, double s) const;
    RVec apply_A(const RVec& f) const { return apply_A_power(f, 1.0); }
    // Continuum projector of A within X.
    RVec Pc_A(const RVec& f) const;

    // U(f + i g) = A^(1/2) B^-1 f + i A^(-1/2) B g, and its inverse.
    CVec U_fwd(const CVec& h) const;
    CVec U_inv(const CVec& h) const;

    // e^{-i t A} f for f in X (complex).
    CVec propagate_A(const CVec& f, double t) const;

    // {kappa, e01, continuum_edge, gap_2kappa_into_continuum, norms of u+-, ...}.
    // e01 is the linear gap the caller compares kappa against.
    nlohmann::json diagnostics(double e01) const;

    // Smallest eigenvalue of A^2 before clipping; PSD up to roundoff.
    double smallest_A2_eigenvalue() const { return a2_min_raw_; }

private:
    RVec to_y(const RVec& f) const { return grid_.to_reduced(f); }
    RVec from_y(const RVec& y) const { return grid_.from_reduced(y); }
    RVec project_X_y(const RVec& y) const { return y - q_hat_ * q_hat_.dot(y); }
    RVec H_y(const RVec& y) const;
    RVec Lp_y(const RVec& y) const;
    RVec B_y(const RVec& y, bool inverse) const;
    RVec A_power_y(const RVec& y, double s) const;

    RadialGrid grid_;
    double E_ = 0.0, lambda_ = 0.0, kappa_ = 0.0;
    bool coupled_ = true;
    RVec Q_, q_hat_, Hdiag_y_, coupling_y_;
    RMat Vh_;
    RVec h_, sqrt_h_, inv_sqrt_h_;
    int h_kernel_ = -1;
    RMat Ya_;
    RVec a_;
    double a2_min_raw_ = 0.0;
    int kernel_index_ = -1, kappa_index_ = -1;
    RVec u_, v_, u_plus_, u_minus_, w_;
};

LinearizedSystem build_linearization(const GroundState& gs, const RadialGrid& grid,
                                     const LinearizationOptions& opts = {});

// Removes the discrete L-eigenspace span{u, i v}:
//   out = f - (v, Re f) u - i (u, Im f) v,
// so that (v, Re out) = (u, Im out) = 0. With remove_Q the Q-component of
// the real and imaginary parts is removed first.
CVec project_continuum(const LinearizedSystem& sys, const CVec& f, bool remove_Q = false);

}  // namespace nlsfgr
