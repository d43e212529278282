#include "nlsfgr/normal_form.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "nlsfgr/errors.hpp"
#include "nlsfgr/fit.hpp"
#include "nlsfgr/frame.hpp"

namespace nlsfgr {

namespace {

constexpr double nan_value = std::numeric_limits<double>::quiet_NaN();

double japanese(double t) { return std::sqrt(1.0 + t * t); }

}  // namespace

nlohmann::json NormalFormParams::to_json() const {
    return {{"Gamma", Gamma},
            {"kappa", kappa},
            {"lambda", lambda},
            {"a20", a20},
            {"c0", c0},
            {"c1", c1},
            {"c2", c2},
            {"d21_re", d21_re},
            {"d21_im", d21_im},
            {"d1_im", d1_im},
            {"norm_phi20", phi20.norm()},
            {"norm_phi11", phi11.norm()},
            {"norm_phi02", phi02.norm()},
            {"norm_eta20", eta20.norm()}};
}

NormalFormParams build_params(const GroundState& gs, const LinearizedSystem& sys, const FGRResult& fgr,
                              const BuildParamsOptions& opts) {
    if (std::abs(gs.E - sys.E()) > 1e-12 * std::max(1.0, std::abs(gs.E)) || gs.lambda != sys.lambda() ||
        std::abs(fgr.kappa - sys.kappa()) > 1e-12 * std::max(1.0, sys.kappa())) {
        throw DomainError("ground state, linearization and FGR result belong to different (E, lambda)");
    }
    const RadialGrid& g = sys.grid();
    const RVec& Q = sys.Q();
    const RVec up = sys.u_plus();
    const RVec um = opts.drop_u_minus ? RVec::Zero(up.size()) : RVec(sys.u_minus());
    const double lam = sys.lambda();

    NormalFormParams p;
    p.Gamma = fgr.gamma;
    p.kappa = sys.kappa();
    p.lambda = lam;
    p.c0 = 1.0 / g.inner(Q, Q);
    p.c1 = 1.0 / g.inner(Q, gs.R);
    p.c2 = -p.c0 * lam * g.inner(RVec(Q.array().cube().matrix()), sys.u());
    p.a20 = a20_coefficient(sys, gs);
    p.d21_re = -fgr.gamma;
    p.d21_im = opts.d21_im;
    p.d1_im = opts.d1_im;
    p.phi20 = (lam * Q.array() * (up.array().square() + 2.0 * up.array() * um.array())).matrix();
    p.phi11 = (2.0 * lam * Q.array() * (up.array().square() + um.array().square() + up.array() * um.array())).matrix();
    p.phi02 = (lam * Q.array() * (um.array().square() + 2.0 * up.array() * um.array())).matrix();
    p.eta20 = -limiting_resolvent(sys, p.phi20, 2.0 * sys.kappa(), opts.resolvent).value;
    return p;
}

nlohmann::json B22Check::to_json() const {
    return {{"from_eta20", from_eta20}, {"from_gamma", from_gamma}, {"relative_difference", relative_difference}};
}

B22Check b22_cross_check(const NormalFormParams& p, const GroundState& gs, const RadialGrid& grid,
                         const LinearizedSystem& sys) {
    B22Check c;
    const RVec src = gs.Q.cwiseProduct(sys.u_plus().cwiseAbs2());
    c.from_eta20 = p.c1 * p.lambda * grid.inner(src, RVec(-p.eta20.imag()));
    c.from_gamma = 0.5 * p.c1 * p.Gamma;
    c.relative_difference = std::abs(c.from_eta20 - c.from_gamma) / std::abs(c.from_gamma);
    return c;
}

NFSeries nf_integrate(cplx q0, const NormalFormParams& p, const BForcing& b, const GForcing& g, double T,
                      const NFOptions& opts) {
    if (!(std::abs(q0) <= opts.eps0)) {
        std::ostringstream msg;
        msg << "|q0| = " << std::abs(q0) << " exceeds eps0 = " << opts.eps0;
        throw DomainError(msg.str());
    }
    if (!(T >= 0.0) || !(opts.dt > 0.0)) throw DomainError("normal form horizon and step must be positive");
    const cplx d21(p.d21_re, p.d21_im);
    auto rhs = [&](double t, cplx q) {
        cplx f = d21 * std::norm(q) * q;
        if (b && p.d1_im != 0.0) f += cplx(0.0, p.d1_im) * b(t) * q;
        if (g) f += g(t, q);
        return f;
    };

    NFSeries out;
    double t = 0.0, h = opts.dt, omega = std::arg(q0);
    cplx q = q0;
    auto record = [&]() {
        out.t.push_back(t);
        out.q.push_back(q);
        out.rho.push_back(std::abs(q));
        out.omega.push_back(omega);
    };
    record();
    long since_record = 0;
    while (t < T) {
        const bool last = t + h >= T;
        double step = last ? T - t : h;
        cplx next;
        int halvings = 0;
        for (;;) {
            const cplx k1 = rhs(t, q);
            const cplx k2 = rhs(t + 0.5 * step, q + 0.5 * step * k1);
            const cplx k3 = rhs(t + 0.5 * step, q + 0.5 * step * k2);
            const cplx k4 = rhs(t + step, q + step * k3);
            next = q + step / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
            const double scale = std::abs(q);
            if (scale == 0.0 || std::abs(next - q) <= opts.max_relative_change * scale) break;
            if (++halvings > opts.max_halvings) {
                std::ostringstream msg;
                msg << "normal-form step halving failed at t = " << t;
                throw ConvergenceError(msg.str(), {t, std::abs(q)});
            }
            step *= 0.5;
            ++out.rejected;
        }
        t = (step == T - t) ? T : t + step;
        if (std::abs(next) > 0.0) omega = unwrap_phase(std::arg(next), omega);
        q = next;
        ++out.steps;
        if (halvings == 0) h = std::min(2.0 * h, opts.dt);
        else h = step;
        if (std::abs(q) < opts.underflow) {
            out.underflow = true;
            record();
            return out;
        }
        if (++since_record >= opts.record_every || t >= T) {
            record();
            since_record = 0;
        }
    }
    if (out.t.back() != t) record();
    return out;
}

double ComparisonBracket::rho_minus(double t) const { return 1.0 / (m * std::sqrt(bracket_clock(t, eps, Gamma))); }
double ComparisonBracket::rho_plus(double t) const { return m / std::sqrt(bracket_clock(t, eps, Gamma)); }

ComparisonBracket comparison_bracket(double eps, double Gamma, double C1, double sigma, double m, double eps0) {
    if (!(m >= 1.0)) throw DomainError("bracket factor m must be at least 1");
    ComparisonBracket c{eps, Gamma, C1, sigma, m, eps0 > 0.0 ? eps0 : eps};
    const double rhs = C1 * std::pow(c.eps0, 2.0 * sigma);
    c.upper_ok = Gamma * (1.0 - 1.0 / (m * m)) * m * m * m >= rhs;
    c.lower_ok = Gamma * (m * m - 1.0) / (m * m * m) >= rhs;
    c.valid = c.upper_ok && c.lower_ok;
    return c;
}

double minimal_bracket_m(double eps, double Gamma, double C1, double sigma, double eps0, double tol) {
    if (C1 == 0.0) return 1.0;
    double lo = 1.0, hi = std::sqrt(3.0);
    if (!comparison_bracket(eps, Gamma, C1, sigma, hi, eps0).valid) return nan_value;
    while (hi - lo > tol) {
        const double mid = 0.5 * (lo + hi);
        (comparison_bracket(eps, Gamma, C1, sigma, mid, eps0).valid ? hi : lo) = mid;
    }
    return hi;
}

ScalarTrajectory example_trajectory(double Gamma, double eps, double r_start, double t0, double T) {
    auto f = [&](double t, double r) { return -Gamma * r * r * r - eps / ((1.0 + t) * (1.0 + t) * (1.0 + t)); };
    auto rk4 = [&](double t, double r, double h) {
        const double k1 = f(t, r);
        const double k2 = f(t + 0.5 * h, r + 0.5 * h * k1);
        const double k3 = f(t + 0.5 * h, r + 0.5 * h * k2);
        const double k4 = f(t + h, r + h * k3);
        return r + h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    };
    const double dir = T >= t0 ? 1.0 : -1.0;
    ScalarTrajectory tr;
    double t = t0, r = r_start;
    tr.t.push_back(t);
    tr.r.push_back(r);
    while (dir * (T - t) > 0.0) {
        // Steps proportional to 1 + t resolve every power-law regime; the
        // cubic term bounds them where r is large.
        double h = 2e-3 * (1.0 + t);
        h = std::min(h, 0.05 / (3.0 * Gamma * r * r + 1e-300));
        h = std::min(h, dir * (T - t));
        double next = rk4(t, r, dir * h);
        if (dir > 0.0 && next <= 0.0) {
            // Locate the zero within the step.
            double lo = 0.0, hi = h;
            for (int k = 0; k < 60; ++k) {
                const double mid = 0.5 * (lo + hi);
                (rk4(t, r, mid) > 0.0 ? lo : hi) = mid;
            }
            tr.extinct = true;
            tr.t_extinct = t + hi;
            tr.t.push_back(tr.t_extinct);
            tr.r.push_back(0.0);
            return tr;
        }
        t = (h == dir * (T - t)) ? T : t + dir * h;
        r = next;
        tr.t.push_back(t);
        tr.r.push_back(r);
    }
    return tr;
}

nlohmann::json ExampleFacts::to_json() const {
    nlohmann::json samples = nlohmann::json::array();
    for (std::size_t i = 0; i < r0_samples.size(); ++i) {
        samples.push_back({{"r0", r0_samples[i]},
                           {"extinction_time", std::isnan(extinction_time[i]) ? nlohmann::json(nullptr)
                                                                                 : nlohmann::json(extinction_time[i])},
                           {"final_ratio", final_ratio[i]},
                           {"late_integral", late_integral[i]}});
    }
    return {{"Gamma", Gamma},
            {"eps", eps},
            {"T", T},
            {"r0_critical", r0_critical},
            {"r0_critical_backward", r0_critical_backward},
            {"critical_exponent", critical_exponent},
            {"r1", r1},
            {"facts", {{"a", fact_a}, {"b", fact_b}, {"c", fact_c}, {"d", fact_d}, {"e", fact_e}}},
            {"samples", samples}};
}

ExampleFacts example_family(double Gamma, double eps, const std::vector<double>& r0_samples, double T) {
    if (!(Gamma > 0.0) || !(eps > 0.0)) throw DomainError("example family needs Gamma > 0 and eps > 0");
    if (!(T >= 1e4)) throw DomainError("example family horizon must reach t = 1e4 for the critical-branch fit");
    ExampleFacts f;
    f.Gamma = Gamma;
    f.eps = eps;
    f.T = T;

    // Critical branch by backward shooting from its t^-2 tail.
    const double Tb = 100.0 * T;
    const ScalarTrajectory crit = example_trajectory(Gamma, eps, eps / (2.0 * (1.0 + Tb) * (1.0 + Tb)), Tb, 0.0);
    f.r0_critical_backward = crit.r.back();
    {
        std::vector<double> t(crit.t.rbegin(), crit.t.rend()), r(crit.r.rbegin(), crit.r.rend());
        f.critical_exponent = fit_decay(t, r, 1e2, 1e4).exponent;
    }

    // Threshold by forward bisection: extinct below, alive at T above.
    auto alive = [&](double r0) { return !example_trajectory(Gamma, eps, r0, 0.0, T).extinct; };
    double lo = 0.0, hi = std::max(eps, 1e-3);
    int guard = 0;
    while (!alive(hi)) {
        lo = hi;
        hi *= 2.0;
        if (++guard > 200) throw DomainError("example family: no surviving initial value found");
    }
    for (int k = 0; k < 200 && hi - lo > 1e-13 * hi; ++k) {
        const double mid = 0.5 * (lo + hi);
        (alive(mid) ? hi : lo) = mid;
    }
    if (!(lo > 0.0) && alive(1e-300)) throw DomainError("example family: bisection does not bracket a threshold");
    f.r0_critical = 0.5 * (lo + hi);

    f.r0_samples = r0_samples;
    if (f.r0_samples.empty())
        for (double k : {0.25, 0.5, 0.9, 1.5, 2.0, 4.0, 8.0, 16.0}) f.r0_samples.push_back(k * f.r0_critical);
    std::sort(f.r0_samples.begin(), f.r0_samples.end());

    f.fact_a = true;
    bool d_ok = true, e_ok = true, any_below = false, any_above = false;
    for (double r0 : f.r0_samples) {
        const ScalarTrajectory tr = example_trajectory(Gamma, eps, r0, 0.0, T);
        for (std::size_t i = 0; i < tr.t.size(); ++i)
            if (tr.r[i] > (1.0 + 1e-10) / std::sqrt(1.0 / (r0 * r0) + 2.0 * Gamma * tr.t[i])) f.fact_a = false;
        f.extinction_time.push_back(tr.extinct ? tr.t_extinct : nan_value);
        f.final_ratio.push_back(tr.extinct ? 0.0 : tr.r.back() * std::sqrt(1.0 / (r0 * r0) + 2.0 * Gamma * T));
        double late = 0.0, r_start = 0.0;
        bool started = false;
        for (std::size_t i = 1; i < tr.t.size(); ++i) {
            if (tr.t[i] <= 0.1 * T) continue;
            if (!started) {
                r_start = tr.r[i - 1];
                started = true;
            }
            late += 0.5 * (tr.r[i] * tr.r[i] + tr.r[i - 1] * tr.r[i - 1]) * (tr.t[i] - tr.t[i - 1]);
        }
        f.late_integral.push_back(late);
        if (r0 < f.r0_critical) {
            any_below = true;
            d_ok = d_ok && tr.extinct;
        } else {
            any_above = true;
            // Non-integrable r^2: at least half of what the unforced decay
            // from the same value would accumulate over the last decade.
            const double free_late =
                std::log((1.0 / (r_start * r_start) + 2.0 * Gamma * 0.9 * T) * r_start * r_start) / (2.0 * Gamma);
            e_ok = e_ok && !tr.extinct && started && late >= 0.5 * free_late;
        }
    }
    f.fact_d = any_below && d_ok;
    f.fact_e = any_above && e_ok;

    // Fact b: beyond some r1 every sample decays at the unforced rate.
    f.r1 = nan_value;
    for (std::size_t i = f.r0_samples.size(); i-- > 0;) {
        if (f.final_ratio[i] >= 0.5) f.r1 = f.r0_samples[i];
        else break;
    }
    f.fact_b = !std::isnan(f.r1);
    f.fact_c = std::abs(f.critical_exponent + 2.0) <= 0.1 &&
               std::abs(f.r0_critical - f.r0_critical_backward) <= 1e-6 * f.r0_critical_backward;
    return f;
}

ContinuityCheck continuity_bound_check(double Gamma, double eps, double sigma, double delta0,
                                       const std::function<double(double)>& g1,
                                       const std::function<double(double)>& delta_g, double T, double dt) {
    NormalFormParams p;
    p.Gamma = Gamma;
    p.d21_re = -Gamma;
    NFOptions o;
    o.dt = dt;
    auto radial = [](const std::function<double(double)>& gt) {
        return [gt](double t, cplx q) { return std::abs(q) > 0.0 ? gt(t) * q / std::abs(q) : cplx(gt(t)); };
    };
    const NFSeries s1 = nf_integrate(eps, p, nullptr, radial(g1), T, o);
    const NFSeries s2 = nf_integrate(eps, p, nullptr, radial([&](double t) { return g1(t) + delta_g(t); }), T, o);
    if (s1.t.size() != s2.t.size()) throw ConvergenceError("continuity check: step sequences diverged");

    ContinuityCheck c;
    c.holds = true;
    c.min_margin = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < s1.t.size(); ++i) {
        const double t = s1.t[i];
        const double clock = bracket_clock(t, eps, Gamma);
        if (std::abs(delta_g(t)) > delta0 * std::pow(clock, -1.5 - sigma) * (1.0 + 1e-12))
            throw DomainError("delta_g exceeds delta0 {t}^(-3/2 - sigma)");
        const double d = std::abs(s2.rho[i] - s1.rho[i]);
        const double bound = delta0 * std::pow(eps, sigma) / (Gamma * sigma) * std::pow(clock, -0.5 * (1.0 + sigma));
        c.t.push_back(t);
        c.diff.push_back(d);
        c.bound.push_back(bound);
        if (d > bound) c.holds = false;
        if (d > 0.0) c.min_margin = std::min(c.min_margin, bound / d);
    }
    return c;
}

RadiationModel radiation_ode_scaffold(const std::function<double(double)>& xi_norm, double eps, double C, double K,
                                      const std::vector<double>& t_samples) {
    if (t_samples.empty() || !std::is_sorted(t_samples.begin(), t_samples.end()) || t_samples.front() < 0.0)
        throw DomainError("radiation scaffold needs ascending nonnegative sample times");
    auto source = [&](double t) {
        const double x = xi_norm(t);
        if (x > C * eps * std::pow(japanese(t), -1.5) * (1.0 + 1e-12) + 1e-300) {
            std::ostringstream msg;
            msg << "xi norm " << x << " at t = " << t << " exceeds C eps <t>^(-3/2)";
            throw DomainError(msg.str());
        }
        return K * eps * x * x;
    };
    const std::size_t n = t_samples.size();
    RadiationModel m;
    m.t = t_samples;
    m.a.assign(n, 0.0);
    m.g_norm.resize(n);
    m.envelope.resize(n);
    const double tl = t_samples.back();
    // closed-form tail of the bound: int_tl^inf <s>^-3 ds = 1 - tl/<tl>
    double acc = K * C * C * eps * eps * eps * (1.0 - tl / japanese(tl));
    m.a[n - 1] = acc;
    for (std::size_t i = n - 1; i-- > 0;) {
        // composite Simpson on [t_i, t_{i+1}]
        const int sub = 32;
        const double lo = t_samples[i], hi = t_samples[i + 1], h = (hi - lo) / sub;
        double s = source(lo) + source(hi);
        for (int k = 1; k < sub; ++k) s += (k % 2 ? 4.0 : 2.0) * source(lo + k * h);
        acc += s * h / 3.0;
        m.a[i] = acc;
    }
    m.class_A = true;
    for (std::size_t i = 0; i < n; ++i) {
        const double t = t_samples[i];
        m.g_norm[i] = source(t);
        m.envelope[i] = K * C * C * eps * eps * eps * (1.0 - t / japanese(t));
        const double cls = eps * std::pow(japanese(t), -2.0);
        if (std::abs(m.a[i]) > cls || m.g_norm[i] > cls) m.class_A = false;
    }
    return m;
}

}  // namespace nlsfgr
