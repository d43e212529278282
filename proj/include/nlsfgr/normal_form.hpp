#pragma once

#include <functional>
#include <vector>

#include <json.hpp>

#include "nlsfgr/fgr.hpp"
#include "nlsfgr/ground_state.hpp"
#include "nlsfgr/linearization.hpp"
#include "nlsfgr/types.hpp"

namespace nlsfgr {

struct NormalFormParams {
    double Gamma = 0.0;
    double kappa = 0.0;
    double lambda = 0.0;
    double a20 = 0.0;
    double c0 = 0.0;  // 1/(Q, Q)
    double c1 = 0.0;  // 1/(Q, R)
    double c2 = 0.0;  // -(c0 Q, lambda Q^2 u)
    double d21_re = 0.0;
    double d21_im = 0.0;  // phase-only, configurable
    double d1_im = 0.0;   // phase-only, configurable
    RVec phi20, phi11, phi02;
    CVec eta20;

    nlohmann::json to_json() const;  // scalars and grid-function norms
};

struct BuildParamsOptions {
    ResolventOptions resolvent;
    double d21_im = 0.0;
    double d1_im = 0.0;
    // Replace u- by 0 in the second-order sources (symmetric test case).
    bool drop_u_minus = false;
};

// Second-order coefficients at the ground state behind `sys`. Gamma is taken
// from `fgr`; eta20 = -(A - 2 kappa - i0)^-1 P_c Pi phi20.
NormalFormParams build_params(const GroundState& gs, const LinearizedSystem& sys, const FGRResult& fgr,
                              const BuildParamsOptions& opts = {});

// Two assemblies of the leading b-coupling: c1 lambda (Q u+^2, -Im eta20)
// against (c1/2) Gamma.
struct B22Check {
    double from_eta20 = 0.0;
    double from_gamma = 0.0;
    double relative_difference = 0.0;
    nlohmann::json to_json() const;
};
B22Check b22_cross_check(const NormalFormParams& p, const GroundState& gs, const RadialGrid& grid,
                         const LinearizedSystem& sys);

// {t}_eps = eps^-2 + 2 Gamma t
inline double bracket_clock(double t, double eps, double Gamma) { return 1.0 / (eps * eps) + 2.0 * Gamma * t; }

struct NFOptions {
    double dt = 0.1;
    double max_relative_change = 0.1;  // per step, else the step is halved
    int max_halvings = 40;
    double underflow = 1e-14;
    long record_every = 1;  // accepted steps between recorded samples
    double eps0 = std::numeric_limits<double>::infinity();
};

struct NFSeries {
    std::vector<double> t, rho, omega;
    std::vector<cplx> q;
    bool underflow = false;
    long steps = 0;
    long rejected = 0;
};

using BForcing = std::function<double(double t)>;
using GForcing = std::function<cplx(double t, cplx q)>;

// q' = delta21 |q|^2 q + d1 b q + g with delta21 = d21_re + i d21_im and
// d1 = i d1_im; classical RK4 with step halving.
NFSeries nf_integrate(cplx q0, const NormalFormParams& p, const BForcing& b, const GForcing& g, double T,
                      const NFOptions& opts = {});

struct ComparisonBracket {
    double eps = 0.0, Gamma = 0.0, C1 = 0.0, sigma = 0.0, m = 0.0, eps0 = 0.0;
    bool upper_ok = false;  // Gamma (1 - m^-2) m^3 >= C1 eps0^(2 sigma)
    bool lower_ok = false;  // Gamma (m^2 - 1) m^-3 >= C1 eps0^(2 sigma)
    bool valid = false;

    double rho_minus(double t) const;
    double rho_plus(double t) const;
};

// eps0 <= 0 means eps0 = eps.
ComparisonBracket comparison_bracket(double eps, double Gamma, double C1, double sigma, double m, double eps0 = 0.0);

// Smallest m > 1 for which the bracket is valid (both inequalities grow on
// (1, sqrt 3]); NaN if none exists there.
double minimal_bracket_m(double eps, double Gamma, double C1, double sigma, double eps0 = 0.0, double tol = 1e-12);

// Scalar model r' = -Gamma r^3 - eps (1 + t)^-3 and its facts (a)-(e).
struct ExampleFacts {
    double Gamma = 0.0, eps = 0.0, T = 0.0;
    double r0_critical = 0.0;           // threshold by forward bisection
    double r0_critical_backward = 0.0;  // backward shooting from the t^-2 tail
    double critical_exponent = 0.0;     // fit of the critical branch on [1e2, 1e4]
    double r1 = 0.0;                    // fact b threshold found on the sample set
    bool fact_a = false, fact_b = false, fact_c = false, fact_d = false, fact_e = false;
    std::vector<double> r0_samples;
    std::vector<double> extinction_time;  // NaN where the solution survives to T
    std::vector<double> final_ratio;      // r(T) (r0^-2 + 2 Gamma T)^(1/2)
    std::vector<double> late_integral;    // int r^2 over the last decade of [0, T]

    nlohmann::json to_json() const;
};

struct ScalarTrajectory {
    std::vector<double> t, r;
    bool extinct = false;
    double t_extinct = 0.0;
};
// Forward (T > t0) or backward (T < t0) integration of the example ODE.
ScalarTrajectory example_trajectory(double Gamma, double eps, double r_start, double t0, double T);

ExampleFacts example_family(double Gamma, double eps, const std::vector<double>& r0_samples, double T);

// Improved continuity estimate: rho1, rho2 solve rho' = -Gamma rho^3 + g~ with
// the same rho(0) = eps and forcings differing by delta_g with
// |delta_g| <= delta0 {t}^(-3/2 - sigma).
struct ContinuityCheck {
    bool holds = false;
    double min_margin = 0.0;  // min over samples of bound / |rho2 - rho1|
    std::vector<double> t, diff, bound;
};
ContinuityCheck continuity_bound_check(double Gamma, double eps, double sigma, double delta0,
                                       const std::function<double(double)>& g1,
                                       const std::function<double(double)>& delta_g, double T, double dt = 0.1);

// Backward-in-time model of the mass coordinate for radiation-dominated data:
// source(t) = K eps xi(t)^2 (cubic in xi with one L^2 factor eps) and
// a(t) = int_t^inf source, with the tail beyond the last sample taken from
// the bound C eps <t>^(-3/2), <t> = (1 + t^2)^(1/2).
struct RadiationModel {
    std::vector<double> t, a, g_norm, envelope;  // envelope = (K C^2 / 2) eps^3 t^-2 asymptote
    bool class_A = false;  // |a| <= eps <t>^-2 and g_norm <= eps <t>^-2 on every sample
};
RadiationModel radiation_ode_scaffold(const std::function<double(double)>& xi_norm, double eps, double C, double K,
                                      const std::vector<double>& t_samples);

}  // namespace nlsfgr
