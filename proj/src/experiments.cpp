#include "nlsfgr/experiments.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <filesystem>
#include <random>
#include <sstream>

#include "nlsfgr/errors.hpp"
#include "nlsfgr/evolution.hpp"
#include "nlsfgr/frame.hpp"
#include "nlsfgr/io.hpp"
#include "nlsfgr/normal_form.hpp"

namespace nlsfgr {

using nlohmann::json;

Setup prepare_setup(const RunConfig& cfg) {
    cfg.potential.validate();
    RadialGrid grid = build_grid(cfg.r_max, cfg.n);
    BoundStatePair pair = bound_states(cfg.potential, grid);
    GroundState gs = cfg.target == "mass" ? solve_for_mass(cfg.mass, cfg.lambda, pair, grid)
                                          : solve_ground_state(cfg.E, cfg.lambda, pair, grid);
    LinearizedSystem sys = build_linearization(gs, grid);
    return {std::move(grid), std::move(pair), std::move(gs), std::move(sys)};
}

CVec remove_Q_components(const CVec& f, const RVec& Q, const RadialGrid& grid) {
    const double QQ = grid.inner(Q, Q);
    const double re = grid.inner(Q, RVec(f.real())) / QQ;
    const double im = grid.inner(Q, RVec(f.imag())) / QQ;
    return f - cplx(re, im) * Q.cast<cplx>();
}

CVec continuum_bump(const LinearizedSystem& sys, double width, double norm, std::uint64_t seed) {
    const RadialGrid& g = sys.grid();
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> d;
    double c[8];
    for (double& x : c) x = d(rng);
    CVec f(g.size());
    for (int j = 0; j < g.size(); ++j) {
        const double r = g.r(j) / width, env = std::exp(-0.5 * r * r);
        f(j) = cplx((c[0] + c[1] * r + c[2] * r * r + c[3] * r * r * r) * env,
                    (c[4] + c[5] * r + c[6] * r * r + c[7] * r * r * r) * env);
    }
    CVec eta = project_continuum(sys, f, true);
    const double nrm = g.norm(eta);
    if (!(nrm > 0.0)) throw DomainError("continuum bump vanished after projection");
    return eta * (norm / nrm);
}

CVec radiation_profile(const LinearizedSystem& sys, double norm, double width, double momentum) {
    const RadialGrid& g = sys.grid();
    if (norm == 0.0) return CVec::Zero(g.size());
    CVec f(g.size());
    for (int j = 0; j < g.size(); ++j) {
        const double r = g.r(j);
        f(j) = std::exp(-0.5 * r * r / (width * width)) * std::exp(cplx(0.0, momentum * r));
    }
    CVec chi = remove_Q_components(project_continuum(sys, f, true), sys.Q(), g);
    return chi * (norm / g.norm(chi));
}

namespace {

void check_distance(const CVec& h, const RVec& Q, const RadialGrid& grid, double max_distance) {
    const double d = grid.norm(h) / grid.norm(Q);
    if (d > max_distance) {
        std::ostringstream msg;
        msg << "initial perturbation is " << d << " |Q| from the soliton, beyond frame.max_distance = "
            << max_distance;
        throw ConfigError(msg.str());
    }
}

}  // namespace

CVec prepare_resonance_data(const GroundState& gs, const LinearizedSystem& sys, cplx z0, const CVec& eta0,
                            double eta_bound, double max_distance) {
    const RadialGrid& g = sys.grid();
    const double bound = eta_bound * std::pow(std::abs(z0), 1.5);
    if (eta0.size() && g.norm(eta0) > bound * (1.0 + 1e-12)) {
        std::ostringstream msg;
        msg << "|eta0| = " << g.norm(eta0) << " exceeds " << eta_bound << " |z0|^(3/2) = " << bound;
        throw ConfigError(msg.str());
    }
    CVec h = z0 * sys.u_plus().cast<cplx>() + std::conj(z0) * sys.u_minus().cast<cplx>();
    if (eta0.size()) h += eta0;
    h = remove_Q_components(h, gs.Q, g);
    check_distance(h, gs.Q, g, max_distance);
    return gs.Q.cast<cplx>() + h;
}

CVec prepare_radiation_data(const GroundState& gs, const LinearizedSystem& sys, const CVec& chi, double a0,
                            double max_distance) {
    const RadialGrid& g = sys.grid();
    const CVec h = (a0 * gs.R).cast<cplx>() + chi;
    check_distance(h, gs.Q, g, max_distance);
    return gs.Q.cast<cplx>() + h;
}

CVec strip_discrete_mode(const CVec& psi, const GroundState& gs, const BoundStatePair& pair, const RadialGrid& grid,
                          double max_distance) {
    RenormOptions o;
    o.max_distance = max_distance;
    const RenormResult r = renormalize_E(psi, gs.E, gs.lambda, pair, grid, o, &gs.Q);
    const LinearizedSystem sys = build_linearization(r.gs, grid);
    // u and v are orthogonal to Q, so removing zeta keeps a = 0 and E fixed.
    const ZEta ze = split_h(r.h, sys);
    return (r.gs.Q.cast<cplx>() + r.h - ze.zeta) * std::exp(cplx(0.0, r.Theta));
}

CVec scenario_initial_data(const RunConfig& cfg, const Setup& st) {
    if (!cfg.evolve.initial.empty()) return read_checkpoint(cfg.evolve.initial, st.grid).lab();
    const ScenarioSettings& sc = cfg.scenario;
    if (sc.kind == ScenarioKind::resonance) {
        CVec eta0;
        if (sc.eta_scale > 0.0)
            eta0 = continuum_bump(st.sys, sc.eta_width, sc.eta_scale * std::pow(sc.eps, 1.5), sc.seed);
        return prepare_resonance_data(st.gs, st.sys, std::polar(sc.eps, sc.z_phase), eta0, sc.eta_bound,
                                      cfg.max_distance);
    }
    const CVec chi = radiation_profile(st.sys, sc.eps, sc.chi_width, sc.chi_momentum);
    const double a0 = sc.kind == ScenarioKind::branch_tracking ? sc.a0 : 0.0;
    const CVec psi0 = prepare_radiation_data(st.gs, st.sys, chi, a0, cfg.max_distance);
    // Off the branch, Q + a0 R also carries a discrete-mode component of
    // order a0^2 that would dominate E(t) for ~1/(Gamma |z|^2).
    return a0 != 0.0 ? strip_discrete_mode(psi0, st.gs, st.pair, st.grid, cfg.max_distance) : psi0;
}

std::vector<long> sample_steps(double T, double dt, double stride, double points_per_decade) {
    const long total = std::lround(T / dt);
    const double ratio = std::pow(10.0, 1.0 / points_per_decade) - 1.0;
    const long max_gap = std::max(1L, std::lround(stride / dt));
    std::vector<long> k = {0};
    while (k.back() < total) {
        const long cur = k.back();
        long gap = std::lround(ratio * cur);
        gap = std::clamp(gap, 1L, max_gap);
        k.push_back(std::min(total, cur + gap));
    }
    return k;
}

void Monitor::add(double time, double clock, double abs_z, double l4, double loc) {
    const double zt = std::sqrt(clock) * abs_z;
    const double lt = std::pow(clock, 0.75 - sigma) * l4;
    const double ct = std::pow(clock, 1.0 + 0.25 * sigma) * loc;
    t.push_back(time);
    z_term.push_back(zt);
    l4_term.push_back(lt);
    loc_term.push_back(ct);
    sup_z = std::max(sup_z, zt);
    sup_l4 = std::max(sup_l4, lt);
    sup_loc = std::max(sup_loc, ct);
    finite = finite && std::isfinite(zt) && std::isfinite(lt) && std::isfinite(ct);
}

json Monitor::to_json() const {
    return {{"sigma", sigma},
            {"sup_z", sup_z},
            {"sup_eta_L4", sup_l4},
            {"sup_eta_L2loc", sup_loc},
            {"M", sup_z + sup_l4 + sup_loc},
            {"finite", finite},
            {"series", {{"t", t}, {"z", z_term}, {"eta_L4", l4_term}, {"eta_L2loc", loc_term}}}};
}

json fit_or_error(const std::vector<double>& x, const std::vector<double>& y, double lo, double hi,
                  const FitOptions& opts) {
    try {
        return fit_decay(x, y, lo, hi, opts).to_json();
    } catch (const Error& e) {
        return {{"error", e.what()}, {"x_lo", lo}, {"x_hi", hi}};
    }
}

double envelope_factor(const std::vector<double>& clock, const std::vector<double>& abs_z, double lo, double hi) {
    double mx = 0.0, mn = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < clock.size(); ++i) {
        if (clock[i] < lo || clock[i] > hi) continue;
        const double r = abs_z[i] * std::sqrt(clock[i]);
        mx = std::max(mx, r);
        mn = std::min(mn, r);
    }
    if (!(mx > 0.0)) return std::numeric_limits<double>::infinity();
    return std::max(mx, 1.0 / mn);
}

void write_frame_csv(const std::string& path, const std::vector<FrameRow>& rows) {
    io::CsvWriter w(path, frame_columns);
    for (const FrameRow& r : rows)
        w.row({r.t, r.E, r.Theta, r.a, r.b, r.z.real(), r.z.imag(), std::abs(r.z), r.eta_l2loc, r.eta_l4, r.mass,
               r.energy});
}

namespace {

struct Snapshot {
    double t;
    double E;
    double Theta;
    CVec psi;  // stored gauge
};

double median(std::vector<double> v) {
    if (v.empty()) return std::numeric_limits<double>::quiet_NaN();
    std::nth_element(v.begin(), v.begin() + v.size() / 2, v.end());
    return v[v.size() / 2];
}

}  // namespace

RunRecord run_scenario(const RunConfig& cfg, const std::string& out_dir, const Progress& progress) {
    auto say = [&](const std::string& s) {
        if (progress) progress(s);
    };
    io::ensure_dir(out_dir);
    io::write_json(out_dir + "/config.json", cfg.resolved);

    Setup st = prepare_setup(cfg);
    const RadialGrid& grid = st.grid;
    cfg.cap.validate(grid.r_max());
    RunRecord rec;
    rec.kind = cfg.scenario.kind;
    rec.E_initial = st.gs.E;

    const CVec psi0 = scenario_initial_data(cfg, st);
    rec.eps = cfg.scenario.eps;

    Physics phys;
    phys.V = st.pair.V;
    phys.lambda = cfg.lambda;
    phys.cap = cfg.cap;
    phys.gauge_E0 = cfg.evolve.gauge ? st.gs.E : 0.0;
    const double dt = cfg.evolve.dt;
    const double bound = max_stable_dt(psi0, phys.V, phys.lambda);
    if (dt > bound) {
        std::ostringstream msg;
        msg << "evolve.dt = " << dt << " exceeds the accuracy bound " << bound;
        throw ConfigError(msg.str());
    }
    SplitStepper stepper(grid, phys, dt);
    FieldState state = make_state(psi0, 0.0, phys);
    const double mass0 = grid.norm(psi0) * grid.norm(psi0);

    RenormOptions ropts;
    ropts.tolerance = cfg.renorm_tolerance;
    ropts.max_distance = cfg.max_distance;
    FrameTracker tracker(st.pair, grid, st.gs, phys.gauge_E0, ropts);

    const std::vector<long> steps = sample_steps(cfg.evolve.T, dt, cfg.evolve.stride, cfg.evolve.points_per_decade);
    std::vector<Snapshot> snaps;
    snaps.reserve(steps.size());
    std::exception_ptr failure;
    long done = 0;
    say("evolving " + std::to_string(steps.back()) + " steps, " + std::to_string(steps.size()) + " samples");
    try {
        for (std::size_t i = 0; i < steps.size(); ++i) {
            stepper.advance(state, steps[i] - done);
            done = steps[i];
            state.t = done * dt;
            const auto s = tracker.observe(state.t, state.psi);
            rec.max_contraction = std::max(rec.max_contraction, s.contraction);
            snaps.push_back({state.t, s.E, s.Theta, state.psi});
            if (i % 200 == 0) {
                std::ostringstream msg;
                msg << "t = " << state.t << "  E = " << s.E;
                say(msg.str());
            }
        }
    } catch (const Error& e) {
        rec.complete = false;
        rec.failure = e.what();
        failure = std::current_exception();
        say(std::string("evolution stopped: ") + e.what());
    }
    rec.T_reached = snaps.empty() ? 0.0 : snaps.back().t;
    if (snaps.empty()) std::rethrow_exception(failure);

    // Fixed frame at E_final.
    const std::size_t n_final =
        std::max<std::size_t>(1, static_cast<std::size_t>(std::ceil(cfg.fits.final_fraction * snaps.size())));
    double E_sum = 0.0;
    for (std::size_t i = snaps.size() - n_final; i < snaps.size(); ++i) E_sum += snaps[i].E;
    rec.E_final = E_sum / n_final;
    say("building the frame at E_final");
    const GroundState gs_f = solve_ground_state(rec.E_final, cfg.lambda, st.pair, grid, {}, &st.gs.Q);
    const LinearizedSystem sys_f = build_linearization(gs_f, grid);
    ResolventOptions ro = cfg.resolvent;
    ro.jobs = cfg.jobs;
    FGRResult fgr;
    try {
        fgr = compute_gamma(sys_f, ro, cfg.timedomain);
        rec.Gamma = fgr.gamma;
        rec.fgr = fgr.to_json();
    } catch (const Error& e) {
        rec.fgr = {{"error", e.what()}};
    }
    rec.a20 = a20_coefficient(sys_f, gs_f);
    const double Gamma = rec.Gamma;
    auto clock = [&](double t) { return bracket_clock(t, rec.eps > 0.0 ? rec.eps : 1.0, Gamma); };

    rec.rows.resize(snaps.size());
    io::parallel_for(cfg.jobs, snaps.size(), [&](std::size_t i) {
        const Snapshot& s = snaps[i];
        FrameRow& row = rec.rows[i];
        row.t = s.t;
        row.E = s.E;
        row.Theta = s.Theta;
        const FrameDecomposition d = decompose_once(s.psi, gs_f, grid, 10.0);
        const ZEta ze = split_h(d.h, sys_f);
        row.a = d.a;
        row.z = ze.z;
        row.b = d.a - rec.a20 * 2.0 * std::real(ze.z * ze.z);
        const EtaNorms en = eta_norms(ze.eta, grid, cfg.beta);
        row.eta_l2loc = en.l2loc;
        row.eta_l4 = en.l4;
        const Conserved c = conserved_quantities(s.psi, phys.V, cfg.lambda, grid);
        row.mass = c.mass;
        row.energy = c.energy;
    });
    snaps.clear();
    snaps.shrink_to_fit();

    // Monitor and fits.
    Monitor mon;
    mon.sigma = cfg.monitor_sigma;
    std::vector<double> t, x_clock, x_bracket, abs_z, abs_b, abs_a, eta_loc, dE;
    for (const FrameRow& r : rec.rows) {
        mon.add(r.t, clock(r.t), std::abs(r.z), r.eta_l4, r.eta_l2loc);
        t.push_back(r.t);
        x_clock.push_back(clock(r.t));
        x_bracket.push_back(std::sqrt(1.0 + r.t * r.t));
        abs_z.push_back(std::abs(r.z));
        abs_b.push_back(std::abs(r.b));
        abs_a.push_back(std::abs(r.a));
        eta_loc.push_back(r.eta_l2loc);
        dE.push_back(std::abs(r.E - rec.E_final));
    }
    rec.monitor = mon.to_json();

    FitOptions raw, env;
    raw.bins = env.bins = cfg.fits.bins;
    raw.min_decades = env.min_decades = cfg.fits.min_decades;
    env.mode = FitMode::envelope;
    json fits;
    fits["kind"] = to_string(rec.kind);
    fits["eps"] = rec.eps;
    fits["Gamma"] = Gamma;
    fits["a20"] = rec.a20;
    fits["E_initial"] = rec.E_initial;
    fits["E_final"] = rec.E_final;
    fits["T"] = rec.T_reached;
    fits["complete"] = rec.complete;
    if (!rec.complete) fits["failure"] = rec.failure;
    fits["max_contraction"] = rec.max_contraction;

    const double t_hi = cfg.fits.end_fraction * rec.T_reached;
    // |E - E_final| on the <t> clock, envelope of the oscillating series
    FitOptions eopt = env;
    eopt.abscissa = "<t>";
    if (rec.kind == ScenarioKind::resonance) {
        const double eps = rec.eps;
        const double t_lo = cfg.fits.start_factor / (eps * eps);
        const double lo = clock(t_lo), hi = clock(t_hi);
        fits["window_t"] = {t_lo, t_hi};
        fits["window_clock"] = {lo, hi};
        FitOptions zopt = env;
        zopt.abscissa = "{t}";
        fits["z"] = fit_or_error(x_clock, abs_z, lo, hi, zopt);
        fits["b"] = fit_or_error(x_clock, abs_b, lo, hi, zopt);
        fits["eta_L2loc"] = fit_or_error(x_clock, eta_loc, lo, hi, zopt);
        fits["a"] = fit_or_error(x_clock, abs_a, lo, hi, zopt);
        fits["E"] = fit_or_error(x_bracket, dE, std::sqrt(1 + t_lo * t_lo), std::sqrt(1 + t_hi * t_hi), eopt);
        fits["z_envelope_factor"] = envelope_factor(x_clock, abs_z, lo, hi);

        // Reduced model from the same |z(0)| with the PDE's Gamma.
        NormalFormParams p;
        p.Gamma = Gamma;
        p.d21_re = -Gamma;
        p.d21_im = cfg.nf.d21_im;
        p.d1_im = cfg.nf.d1_im;
        NFOptions o;
        o.dt = std::max(cfg.nf.dt, rec.T_reached / 2e5);
        o.record_every = std::max(1L, std::lround(rec.T_reached / o.dt / 4000.0));
        const NFSeries s = nf_integrate(rec.rows.front().z, p, nullptr, nullptr, rec.T_reached, o);
        io::CsvWriter w(out_dir + "/nf.csv", {"t", "rho", "omega", "bracket_lo", "bracket_hi"});
        for (std::size_t i = 0; i < s.t.size(); ++i) {
            const double c = std::sqrt(clock(s.t[i]));
            w.row({s.t[i], s.rho[i], s.omega[i], 1.0 / (cfg.nf.m * c), cfg.nf.m / c});
        }
        double worst = 1.0;
        std::size_t j = 0;
        for (const FrameRow& r : rec.rows) {
            const double c = clock(r.t);
            if (c < lo || c > hi) continue;
            while (j + 1 < s.t.size() && s.t[j + 1] < r.t) ++j;
            if (j + 1 >= s.t.size()) break;
            const double f = (r.t - s.t[j]) / (s.t[j + 1] - s.t[j]);
            const double rho = (1 - f) * s.rho[j] + f * s.rho[j + 1];
            const double ratio = std::abs(r.z) / rho;
            worst = std::max({worst, ratio, 1.0 / ratio});
        }
        fits["nf_consistency_factor"] = worst;
    } else {
        const double t_lo = cfg.fits.start_time;
        fits["window_t"] = {t_lo, t_hi};
        FitOptions topt = raw;
        topt.abscissa = "t";
        fits["eta_L2loc"] = fit_or_error(t, eta_loc, t_lo, t_hi, topt);
        FitOptions aopt = env;
        aopt.abscissa = "t";
        fits["a"] = fit_or_error(t, abs_a, t_lo, t_hi, aopt);
        fits["E"] = fit_or_error(x_bracket, dE, std::sqrt(1 + t_lo * t_lo), std::sqrt(1 + t_hi * t_hi), eopt);
        fits["z"] = fit_or_error(t, abs_z, t_lo, t_hi, aopt);
    }
    // What the CAP and the finite horizon leave behind in the last tenth.
    std::vector<double> late_a, late_eta;
    for (const FrameRow& r : rec.rows)
        if (r.t >= 0.9 * rec.T_reached) {
            late_a.push_back(std::abs(r.a));
            late_eta.push_back(r.eta_l2loc);
        }
    fits["floor"] = {{"a", median(late_a)}, {"eta_L2loc", median(late_eta)}};
    rec.fits = fits;

    rec.cap = cap_diagnostic(state.lab(), mass0, grid, cfg.cap);
    write_frame_csv(out_dir + "/frame.csv", rec.rows);
    io::write_json(out_dir + "/fits.json", rec.fits);
    io::write_json(out_dir + "/monitor.json", rec.monitor);
    io::write_json(out_dir + "/cap.json", rec.cap);
    io::write_json(out_dir + "/fgr.json", rec.fgr);
    if (cfg.evolve.checkpoint && rec.complete) write_checkpoint(out_dir + "/checkpoint.bin", state, grid);
    if (failure) std::rethrow_exception(failure);
    return rec;
}

}  // namespace nlsfgr
