#pragma once

#include <vector>

#include <json.hpp>

#include "nlsfgr/fit.hpp"
#include "nlsfgr/grid.hpp"
#include "nlsfgr/linearization.hpp"
#include "nlsfgr/spectrum.hpp"
#include "nlsfgr/types.hpp"

namespace nlsfgr {

// Discrete spectral measure of a localized function phi against a
// self-adjoint operator on the finite grid: sum_j weights_j delta(x - energies_j).
// Only continuum modes enter; the discrete part is projected out when the
// measure is built.
struct SpectralMeasure {
    RVec energies;  // ascending
    RVec weights;   // |(e_j, phi)|^2
    double edge = 0.0;

    // Mean spacing of the eigenvalues around x (over +-`half_window` levels).
    double local_spacing(double x, int half_window = 5) const;
    // sum_j w_j eps / ((a_j - x)^2 + eps^2) = Im (phi, (T - x - i eps)^-1 phi)
    double broadened(double x, double eps) const;
    // Re of the windowed autocorrelation sum_j w_j e^{-i (a_j - x) t}.
    std::complex<double> autocorrelation(double x, double t) const;
};

// Continuum of A within X for phi (physical values, real).
SpectralMeasure measure_from_A(const LinearizedSystem& sys, const RVec& phi);
// Continuum of H0 = -Lap + V - e0 (both bound states removed).
SpectralMeasure measure_from_H0(const BoundStatePair& pair, const RadialGrid& grid, const RVec& phi);
// Generic symmetric tridiagonal operator with eigenvalues below `edge`
// excluded; phi given directly in the Euclidean representation.
SpectralMeasure measure_from_tridiagonal(const RVec& diag, const RVec& offdiag, const RVec& phi_euclid,
                                         double edge);

struct ResolventOptions {
    // empty: geometric {8, 4, 2} x delta, delta = 2 x local level spacing
    std::vector<double> eps_schedule;
    // Allow energies below the continuum edge (the broadened value is then
    // an O(eps) tail and extrapolates to ~0) instead of raising DomainError.
    bool allow_below_edge = false;
    // Relative size of an opposite-sign step that counts as non-monotone.
    double monotone_tolerance = 1e-3;
    int jobs = 1;
};

struct ResolventResult {
    double value = 0.0;
    std::vector<double> eps;
    std::vector<double> values;
    // value(eps_i) minus the extrapolated value, per eps
    std::vector<double> residuals;
    double spacing = 0.0;
    // limit from the two smallest eps with a linear model, for comparison
    double linear_estimate = 0.0;
};

// lim_{eps -> 0+} Im (phi, (T - x - i eps)^-1 P_c phi) by quadratic
// Richardson extrapolation through the three schedule points.
ResolventResult resolvent_fgr(const SpectralMeasure& m, double x, const ResolventOptions& opts = {});

// (A - x - i0)^-1 P_c^A Pi f as a grid function (physical values): the
// eps-regularized resolvent on the schedule of resolvent_fgr, combined with
// the same extrapolation weights.
struct LimitingResolvent {
    CVec value;
    std::vector<double> eps;
};
LimitingResolvent limiting_resolvent(const LinearizedSystem& sys, const RVec& f, double x,
                                     const ResolventOptions& opts = {});

struct TimeDomainOptions {
    // T as a fraction of the recurrence time 2 pi / spacing.
    double T_fraction = 0.5;
    double T = 0.0;  // explicit horizon overrides T_fraction when > 0
    double max_fraction = 0.75;
    double taper_fraction = 0.2;
    // |C(t)| on [T/2, T] above this multiple of |C(0)| signals regrowth.
    double regrowth_threshold = 0.25;
};

struct TimeDomainResult {
    double value = 0.0;
    double T = 0.0;
    double T_recurrence = 0.0;
    double late_autocorrelation = 0.0;  // max |C(t)|/|C(0)| on [T/2, T]
};

// Im i int_0^T (phi, e^{-i t (T - x)} P_c phi) w(t) dt, with w = 1 up to
// (1 - taper) T and a cosine half-window after. Integrated analytically per mode.
TimeDomainResult time_domain_fgr(const SpectralMeasure& m, double x, const TimeDomainOptions& opts = {});

struct FGRResult {
    double lambda = 0.0;
    double kappa = 0.0;
    double energy = 0.0;  // 2 kappa
    double gamma = 0.0;
    double gamma_resolvent = 0.0;
    double gamma_timedomain = 0.0;
    ResolventResult resolvent;
    TimeDomainResult timedomain;

    double agreement() const;  // |resolvent - timedomain| / resolvent
    nlohmann::json to_json() const;
};

// Gamma = 2 lambda^2 (Q u+^2, Im (A - 0i - 2 kappa)^-1 P_c^A Pi Q u+^2).
FGRResult compute_gamma(const LinearizedSystem& sys, const ResolventOptions& ropts = {},
                        const TimeDomainOptions& topts = {});

struct A1Result {
    double gamma0 = 0.0;             // resolvent route at s = 0
    double gamma0_timedomain = 0.0;  // time-domain route at s = 0
    std::vector<double> s;
    std::vector<double> values;      // resolvent route per s
    ResolventResult at_zero;

    nlohmann::json to_json() const;
};

// (phi0 phi1^2, Im (H0 - 0i - 2 e01 - s)^-1 P_c phi0 phi1^2) at s = 0 and on
// the given s-grid. DomainError if the gap condition fails.
A1Result check_A1(const BoundStatePair& pair, const RadialGrid& grid, const std::vector<double>& s_values = {},
                  const ResolventOptions& opts = {});

struct DecayProbeOptions {
    double beta = 3.0;
    double t_min = 0.5;
    double fit_from = 3.0;
    double T = 0.0;  // 0: up to the wall round-trip time
    // spectral weight quantile whose group velocity sets the round-trip time
    double weight_quantile = 0.99;
    // a local norm this many times above its running minimum is regrowth
    double regrowth_factor = 1.2;
    int samples = 200;
    // true: probe e^{-itA} (A - 2 kappa - i eps)^-1 P_c Pi phi; false: e^{-itA} P_c Pi phi
    bool regularized_resolvent = true;
    double eps = 0.0;  // 0: 8 x local level spacing at 2 kappa
    double min_decades = 1.0;
};

struct DecayProbe {
    std::vector<double> t;
    std::vector<double> local_norm;
    DecayFit fit;
    double T_roundtrip = 0.0;
    double T_fit = 0.0;  // end of the fit window
    bool truncated = false;
    bool zero = false;
};

// Weighted local L2 norm of a propagated continuum vector and its fitted
// power-law exponent.
DecayProbe dispersive_decay_probe(const LinearizedSystem& sys, const RVec& phi, const DecayProbeOptions& opts = {});

}  // namespace nlsfgr
