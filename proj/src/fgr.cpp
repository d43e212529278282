#include "nlsfgr/fgr.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "nlsfgr/errors.hpp"
#include "nlsfgr/io.hpp"
#include "nlsfgr/linalg.hpp"

namespace nlsfgr {

namespace {

// int_0^tau cos(nu s + phase) ds
double cos_segment(double nu, double phase, double tau) {
    if (std::abs(nu) * tau < 1e-8) return tau * std::cos(phase) - 0.5 * nu * tau * tau * std::sin(phase);
    return (std::sin(nu * tau + phase) - std::sin(phase)) / nu;
}

// int_0^T w(t) cos(omega t) dt for the flat-then-cosine window.
double windowed_cosine_integral(double omega, double T, double taper_fraction) {
    const double tau = taper_fraction * T;
    const double T1 = T - tau;
    const double flat = cos_segment(omega, 0.0, T1);
    if (tau <= 0.0) return flat;
    const double phase = omega * T1;
    const double k = pi / tau;
    return flat + 0.5 * cos_segment(omega, phase, tau) + 0.25 * cos_segment(omega + k, phase, tau) +
           0.25 * cos_segment(omega - k, phase, tau);
}

// Lagrange weights of the interpolant through (eps_i, .) evaluated at 0.
std::vector<double> richardson_weights(const std::vector<double>& eps) {
    std::vector<double> w(eps.size(), 1.0);
    for (std::size_t i = 0; i < eps.size(); ++i)
        for (std::size_t j = 0; j < eps.size(); ++j)
            if (j != i) w[i] *= (0.0 - eps[j]) / (eps[i] - eps[j]);
    return w;
}

double richardson_at_zero(const std::vector<double>& eps, const std::vector<double>& vals) {
    const std::vector<double> w = richardson_weights(eps);
    double out = 0.0;
    for (std::size_t i = 0; i < eps.size(); ++i) out += vals[i] * w[i];
    return out;
}

}  // namespace

double SpectralMeasure::local_spacing(double x, int half_window) const {
    const Eigen::Index n = energies.size();
    if (n < 2) return 0.0;
    const auto it = std::lower_bound(energies.data(), energies.data() + n, x);
    const Eigen::Index i = it - energies.data();
    const Eigen::Index lo = std::clamp<Eigen::Index>(i - half_window, 0, n - 2);
    const Eigen::Index hi = std::clamp<Eigen::Index>(i + half_window, lo + 1, n - 1);
    return (energies(hi) - energies(lo)) / static_cast<double>(hi - lo);
}

double SpectralMeasure::broadened(double x, double eps) const {
    const auto d = energies.array() - x;
    return (weights.array() * eps / (d.square() + eps * eps)).sum();
}

std::complex<double> SpectralMeasure::autocorrelation(double x, double t) const {
    std::complex<double> c = 0.0;
    for (Eigen::Index j = 0; j < energies.size(); ++j) c += weights(j) * std::polar(1.0, -(energies(j) - x) * t);
    return c;
}

SpectralMeasure measure_from_A(const LinearizedSystem& sys, const RVec& phi) {
    const RVec y = sys.grid().to_reduced(sys.project_X(phi));
    const RVec c = sys.a_vectors_y().transpose() * y;
    const RVec& a = sys.a_values();
    SpectralMeasure m;
    m.edge = sys.continuum_edge();
    std::vector<double> e, w;
    for (Eigen::Index j = 0; j < a.size(); ++j) {
        if (!sys.is_continuum(static_cast<int>(j))) continue;
        e.push_back(a(j));
        w.push_back(c(j) * c(j));
    }
    m.energies = Eigen::Map<RVec>(e.data(), static_cast<Eigen::Index>(e.size()));
    m.weights = Eigen::Map<RVec>(w.data(), static_cast<Eigen::Index>(w.size()));
    return m;
}

SpectralMeasure measure_from_tridiagonal(const RVec& diag, const RVec& offdiag, const RVec& phi_euclid, double edge) {
    const SymmetricEigen eig = eigh_tridiagonal(diag, offdiag);
    const RVec c = eig.vectors.transpose() * phi_euclid;
    std::vector<double> e, w;
    for (Eigen::Index j = 0; j < c.size(); ++j) {
        if (eig.values(j) < edge) continue;
        e.push_back(eig.values(j));
        w.push_back(c(j) * c(j));
    }
    SpectralMeasure m;
    m.edge = edge;
    m.energies = Eigen::Map<RVec>(e.data(), static_cast<Eigen::Index>(e.size()));
    m.weights = Eigen::Map<RVec>(w.data(), static_cast<Eigen::Index>(w.size()));
    return m;
}

SpectralMeasure measure_from_H0(const BoundStatePair& pair, const RadialGrid& grid, const RVec& phi) {
    const int n = grid.size();
    const RVec diag = (grid.kinetic_diagonal() + pair.V.array() - pair.e0).matrix();
    // Every eigenvalue of H0 below -e0 is a bound state; P_c drops them.
    return measure_from_tridiagonal(diag, RVec::Constant(n - 1, grid.kinetic_offdiagonal()), grid.to_reduced(phi),
                                    -pair.e0);
}

LimitingResolvent limiting_resolvent(const LinearizedSystem& sys, const RVec& f, double x,
                                     const ResolventOptions& opts) {
    // The schedule and its checks are shared with the scalar route.
    const SpectralMeasure m = measure_from_A(sys, f);
    const ResolventResult scalar = resolvent_fgr(m, x, opts);
    const std::vector<double> w = richardson_weights(scalar.eps);

    const RadialGrid& g = sys.grid();
    const RVec y = g.to_reduced(sys.project_X(f));
    const RVec c = sys.a_vectors_y().transpose() * y;
    const RVec& a = sys.a_values();
    CVec coef = CVec::Zero(a.size());
    for (Eigen::Index j = 0; j < a.size(); ++j) {
        if (!sys.is_continuum(static_cast<int>(j))) continue;
        cplx k = 0.0;
        for (std::size_t i = 0; i < w.size(); ++i) k += w[i] / cplx(a(j) - x, -scalar.eps[i]);
        coef(j) = c(j) * k;
    }
    LimitingResolvent out;
    out.eps = scalar.eps;
    out.value = g.from_reduced(CVec(sys.a_vectors_y().cast<cplx>() * coef));
    return out;
}

ResolventResult resolvent_fgr(const SpectralMeasure& m, double x, const ResolventOptions& opts) {
    if (!(x > m.edge) && !opts.allow_below_edge) {
        std::ostringstream msg;
        msg << "energy " << x << " is not inside the continuum (edge " << m.edge << ")";
        throw DomainError(msg.str());
    }
    ResolventResult r;
    r.spacing = m.local_spacing(std::max(x, m.edge));
    r.eps = opts.eps_schedule;
    if (r.eps.empty()) {
        const double delta = 2.0 * r.spacing;
        r.eps = {8.0 * delta, 4.0 * delta, 2.0 * delta};
    }
    if (r.eps.size() < 2) throw ConfigError("eps schedule needs at least two values");
    for (double e : r.eps) {
        if (!(e > 0.0)) throw ConfigError("eps schedule values must be positive");
        if (e < r.spacing) {
            std::ostringstream msg;
            msg << "eps = " << e << " is below the local level spacing " << r.spacing
                << "; the broadened resolvent would resolve individual grid levels";
            throw DomainError(msg.str());
        }
    }
    r.values.assign(r.eps.size(), 0.0);
    io::parallel_for(opts.jobs, r.eps.size(), [&](std::size_t i) { r.values[i] = m.broadened(x, r.eps[i]); });

    r.value = richardson_at_zero(r.eps, r.values);
    const std::size_t k = r.eps.size();
    r.linear_estimate = richardson_at_zero({r.eps[k - 2], r.eps[k - 1]}, {r.values[k - 2], r.values[k - 1]});
    r.residuals.resize(k);
    for (std::size_t i = 0; i < k; ++i) r.residuals[i] = r.values[i] - r.value;

    const double scale = std::max(std::abs(r.values.back()), 1e-300);
    for (std::size_t i = 2; i < k; ++i) {
        const double d1 = r.values[i - 1] - r.values[i - 2];
        const double d2 = r.values[i] - r.values[i - 1];
        if (d1 * d2 < 0.0 && std::min(std::abs(d1), std::abs(d2)) > opts.monotone_tolerance * scale) {
            std::ostringstream msg;
            msg << "broadened resolvent is not monotone in eps (values";
            for (double v : r.values) msg << ' ' << v;
            msg << ")";
            throw ConvergenceError(msg.str(), r.values);
        }
    }
    return r;
}

TimeDomainResult time_domain_fgr(const SpectralMeasure& m, double x, const TimeDomainOptions& opts) {
    if (!(x > m.edge)) {
        std::ostringstream msg;
        msg << "energy " << x << " is not inside the continuum (edge " << m.edge << ")";
        throw DomainError(msg.str());
    }
    TimeDomainResult r;
    const double spacing = m.local_spacing(x);
    r.T_recurrence = 2.0 * pi / spacing;
    r.T = opts.T > 0.0 ? opts.T : opts.T_fraction * r.T_recurrence;
    if (r.T > opts.max_fraction * r.T_recurrence) {
        std::ostringstream msg;
        msg << "T = " << r.T << " exceeds " << opts.max_fraction << " of the recurrence time " << r.T_recurrence;
        throw ConvergenceError(msg.str(), {r.T, r.T_recurrence});
    }

    double value = 0.0;
    for (Eigen::Index j = 0; j < m.energies.size(); ++j)
        value += m.weights(j) * windowed_cosine_integral(m.energies(j) - x, r.T, opts.taper_fraction);
    r.value = value;

    const double c0 = m.weights.sum();
    if (c0 > 0.0) {
        constexpr int probes = 64;
        double late = 0.0;
        for (int i = 0; i <= probes; ++i) {
            const double t = r.T * (0.5 + 0.5 * i / probes);
            late = std::max(late, std::abs(m.autocorrelation(x, t)) / c0);
        }
        r.late_autocorrelation = late;
        if (late > opts.regrowth_threshold) {
            std::ostringstream msg;
            msg << "autocorrelation regrows to " << late << " of its initial value before T = " << r.T;
            throw ConvergenceError(msg.str(), {late});
        }
    }
    return r;
}

double FGRResult::agreement() const {
    return std::abs(gamma_resolvent - gamma_timedomain) / std::abs(gamma_resolvent);
}

nlohmann::json FGRResult::to_json() const {
    return {
        {"lambda", lambda},
        {"kappa", kappa},
        {"energy", energy},
        {"gamma", gamma},
        {"gamma_resolvent", gamma_resolvent},
        {"gamma_timedomain", gamma_timedomain},
        {"agreement", agreement()},
        {"eps_schedule", resolvent.eps},
        {"extrapolation_diagnostics",
         {{"values", resolvent.values},
          {"residuals", resolvent.residuals},
          {"linear_estimate", resolvent.linear_estimate},
          {"level_spacing", resolvent.spacing}}},
        {"timedomain",
         {{"T", timedomain.T},
          {"T_recurrence", timedomain.T_recurrence},
          {"late_autocorrelation", timedomain.late_autocorrelation}}},
    };
}

FGRResult compute_gamma(const LinearizedSystem& sys, const ResolventOptions& ropts, const TimeDomainOptions& topts) {
    const RVec phi = sys.Q().cwiseProduct(sys.u_plus().cwiseAbs2());
    const SpectralMeasure m = measure_from_A(sys, phi);
    FGRResult out;
    out.lambda = sys.lambda();
    out.kappa = sys.kappa();
    out.energy = 2.0 * sys.kappa();
    out.resolvent = resolvent_fgr(m, out.energy, ropts);
    out.timedomain = time_domain_fgr(m, out.energy, topts);
    const double pref = 2.0 * sys.lambda() * sys.lambda();
    out.gamma_resolvent = pref * out.resolvent.value;
    out.gamma_timedomain = pref * out.timedomain.value;
    out.gamma = out.gamma_resolvent;
    return out;
}

nlohmann::json A1Result::to_json() const {
    return {{"gamma0", gamma0},
            {"gamma0_timedomain", gamma0_timedomain},
            {"s", s},
            {"values", values},
            {"eps_schedule", at_zero.eps},
            {"eps_values", at_zero.values}};
}

A1Result check_A1(const BoundStatePair& pair, const RadialGrid& grid, const std::vector<double>& s_values,
                  const ResolventOptions& opts) {
    if (!check_resonance_condition(pair))
        throw DomainError("resonance gap condition 2 e01 > |e0| fails; 2 e01 is not in the continuum of H0");
    const RVec phi = pair.phi0.cwiseProduct(pair.phi1.cwiseAbs2());
    const SpectralMeasure m = measure_from_H0(pair, grid, phi);
    const double x0 = 2.0 * pair.e01;
    A1Result r;
    r.at_zero = resolvent_fgr(m, x0, opts);
    r.gamma0 = r.at_zero.value;
    r.gamma0_timedomain = time_domain_fgr(m, x0).value;
    r.s = s_values;
    r.values.assign(s_values.size(), 0.0);
    ResolventOptions inner = opts;
    inner.jobs = 1;
    io::parallel_for(opts.jobs, s_values.size(),
                     [&](std::size_t i) { r.values[i] = resolvent_fgr(m, x0 + s_values[i], inner).value; });
    return r;
}

DecayProbe dispersive_decay_probe(const LinearizedSystem& sys, const RVec& phi, const DecayProbeOptions& opts) {
    const RadialGrid& grid = sys.grid();
    const RVec& a = sys.a_values();
    const RMat& Y = sys.a_vectors_y();
    const RVec c = Y.transpose() * grid.to_reduced(sys.project_X(phi));

    DecayProbe out;
    const double x = 2.0 * sys.kappa();
    double eps = opts.eps;
    if (opts.regularized_resolvent && eps <= 0.0) {
        const SpectralMeasure m = measure_from_A(sys, phi);
        eps = 8.0 * m.local_spacing(x);
    }
    Eigen::VectorXcd coef(a.size());
    std::vector<std::pair<double, double>> spectrum;  // (energy, weight)
    double wsum = 0.0;
    for (Eigen::Index j = 0; j < a.size(); ++j) {
        if (!sys.is_continuum(static_cast<int>(j))) {
            coef(j) = 0.0;
            continue;
        }
        coef(j) = opts.regularized_resolvent ? c(j) / cplx(a(j) - x, -eps) : cplx(c(j));
        wsum += std::norm(coef(j));
        spectrum.emplace_back(a(j), std::norm(coef(j)));
    }
    if (wsum == 0.0) {
        out.zero = true;
        return out;
    }

    // The fastest waves carrying a noticeable share of the weight come back
    // from the Dirichlet wall after 2 r_max / v with group velocity v <= 2k.
    // The probe stops before that.
    double acc = 0.0, e_fast = spectrum.back().first;
    for (const auto& [e, w] : spectrum) {
        acc += w;
        if (acc >= opts.weight_quantile * wsum) {
            e_fast = e;
            break;
        }
    }
    const double k = std::sqrt(std::max(e_fast - sys.continuum_edge(), 1e-6));
    out.T_roundtrip = grid.r_max() / k;
    double T = opts.T > 0.0 ? opts.T : out.T_roundtrip;
    if (T > out.T_roundtrip) {
        T = out.T_roundtrip;
        out.truncated = true;
    }

    const RVec bracket = (1.0 + grid.r().array().square()).pow(-opts.beta).matrix();
    const int ns = std::max(8, opts.samples);
    for (int i = 0; i < ns; ++i) {
        const double t = opts.t_min * std::pow(T / opts.t_min, static_cast<double>(i) / (ns - 1));
        Eigen::VectorXcd ct(a.size());
        for (Eigen::Index j = 0; j < a.size(); ++j) ct(j) = coef(j) * std::polar(1.0, -t * a(j));
        const RVec yr = Y * RVec(ct.real());
        const RVec yi = Y * RVec(ct.imag());
        const double ln = std::sqrt(((yr.array().square() + yi.array().square()) * bracket.array()).sum());
        out.t.push_back(t);
        out.local_norm.push_back(ln);
    }
    // Waves reflected from the wall show up as regrowth of the local norm;
    // the fit window ends at the last sample before it.
    double t_end = out.t.back(), running_min = out.local_norm.front();
    std::size_t i_min = 0;
    for (std::size_t i = 1; i < out.t.size(); ++i) {
        if (out.local_norm[i] < running_min) {
            running_min = out.local_norm[i];
            i_min = i;
        } else if (out.local_norm[i] > opts.regrowth_factor * running_min) {
            t_end = out.t[i_min];
            out.truncated = true;
            break;
        }
    }
    out.T_fit = t_end;
    FitOptions fo;
    fo.mode = FitMode::envelope;
    fo.bins = 30;
    fo.min_decades = opts.min_decades;
    out.fit = fit_decay(out.t, out.local_norm, opts.fit_from, t_end, fo);
    return out;
}

}  // namespace nlsfgr
