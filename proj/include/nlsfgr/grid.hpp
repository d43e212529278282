#pragma once

#include <string>

#include "nlsfgr/types.hpp"

namespace nlsfgr {

enum class PotentialShape { gaussian_well, square_well };

PotentialShape parse_potential_shape(const std::string& name);
std::string to_string(PotentialShape shape);

// Attractive radial well of depth V0 and width sigma.
struct PotentialSpec {
    PotentialShape shape = PotentialShape::gaussian_well;
    double depth = 4.0;
    double width = 2.0;

    double operator()(double r) const;
    void validate() const;
};

// Uniform radial grid for the s-wave sector of R^3.
//
// Nodes r_j = j*dr, j = 1..n, with dr = r_max/(n+1); the reduced wave
// u = r*psi vanishes at r = 0 and r = r_max. Grid functions are stored as
// physical values psi(r_j). Internally many operators act on the scaled
// reduced wave y_j = sqrt(4 pi dr) r_j psi(r_j), because in that
// representation the quadrature inner product is the Euclidean one and the
// Laplacian is the symmetric second-difference matrix.
class RadialGrid {
public:
    RadialGrid() = default;
    RadialGrid(double r_max, int n);

    int size() const { return n_; }
    double r_max() const { return r_max_; }
    double dr() const { return dr_; }
    const RVec& r() const { return r_; }
    double r(int j) const { return r_(j); }
    // Quadrature weights 4 pi r_j^2 dr.
    const RVec& weights() const { return weights_; }
    // sqrt of the weights: the map psi -> y.
    const RVec& scale() const { return scale_; }

    double inner(const RVec& f, const RVec& g) const;
    cplx inner(const CVec& f, const CVec& g) const;  // antilinear in f
    double norm(const RVec& f) const;
    double norm(const CVec& f) const;
    // (integral |f|^p d^3x)^(1/p)
    double lp_norm(const CVec& f, double p) const;
    // L^2 norm of <x>^(-beta) f
    double local_norm(const CVec& f, double beta) const;

    RVec laplacian(const RVec& psi) const;
    CVec laplacian(const CVec& psi) const;

    RVec to_reduced(const RVec& psi) const { return psi.cwiseProduct(scale_); }
    CVec to_reduced(const CVec& psi) const { return psi.cwiseProduct(scale_); }
    RVec from_reduced(const RVec& y) const { return y.cwiseQuotient(scale_); }
    CVec from_reduced(const CVec& y) const { return y.cwiseQuotient(scale_); }

    // Diagonal and off-diagonal of -Laplacian in the scaled reduced representation.
    double kinetic_diagonal() const { return 2.0 / (dr_ * dr_); }
    double kinetic_offdiagonal() const { return -1.0 / (dr_ * dr_); }

    RVec sample(const PotentialSpec& v) const;

private:
    double r_max_ = 0.0;
    int n_ = 0;
    double dr_ = 0.0;
    RVec r_, weights_, scale_;
};

RadialGrid build_grid(double r_max, int n);

// Rebuilds the exponentially small tail of a bound-state profile given in
// the scaled reduced representation. Beyond the point where |y| falls below
// `threshold * max|y|` the stored values are dominated by roundoff (and can
// change sign); there the profile solves the linear recurrence
// y[j+1] - 2 y[j] + y[j-1] = dr^2 P[j] y[j] with P = V - E > 0, which is
// stable when run inward from the Dirichlet wall. The rebuilt tail is matched
// to the stored value at the junction. Returns the junction index or -1 when
// nothing was changed.
int rebuild_decaying_tail(const RadialGrid& grid, RVec& y, const RVec& local_potential,
                          double threshold = 1e-10);

inline RVec apply_laplacian(const RadialGrid& grid, const RVec& psi) { return grid.laplacian(psi); }

}  // namespace nlsfgr
