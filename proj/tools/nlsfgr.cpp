// Command-line driver: one subcommand per pipeline stage, all outputs under
// --out. Exit status 0 on success, 1 for invalid input, 2 for numerical failure.

#include <chrono>
#include <ctime>
#include <iomanip>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "nlsfgr/build_info.hpp"
#include "nlsfgr/config.hpp"
#include "nlsfgr/errors.hpp"
#include "nlsfgr/evolution.hpp"
#include "nlsfgr/experiments.hpp"
#include "nlsfgr/fgr.hpp"
#include "nlsfgr/frame.hpp"
#include "nlsfgr/io.hpp"
#include "nlsfgr/normal_form.hpp"

using namespace nlsfgr;
using nlohmann::json;

namespace {

std::string timestamp_dir() {
    const std::time_t now = std::time(nullptr);
    std::tm tm{};
    localtime_r(&now, &tm);
    std::ostringstream s;
    s << "runs/" << std::put_time(&tm, "%Y%m%d-%H%M%S");
    return s.str();
}

void log(const std::string& line) { std::cerr << "[nlsfgr] " << line << '\n'; }

void cmd_spectrum(const RunConfig& cfg, const std::string& out) {
    cfg.potential.validate();
    const RadialGrid grid = build_grid(cfg.r_max, cfg.n);
    const json report = spectrum_report(bound_states(cfg.potential, grid));
    io::write_json(out + "/spectrum.json", report);
    std::cout << report.dump(2) << '\n';
}

json ground_json(const GroundState& gs, const RadialGrid& grid) {
    return {{"E", gs.E},         {"lambda", gs.lambda},         {"mass", gs.mass(grid)},
            {"w", gs.w},         {"residual", gs.residual},     {"r_residual", gs.r_residual},
            {"iterations", gs.iterations}, {"mass_derivative", gs.mass_derivative(grid)}};
}

void cmd_ground(const RunConfig& cfg, const std::string& out) {
    cfg.potential.validate();
    const RadialGrid grid = build_grid(cfg.r_max, cfg.n);
    const BoundStatePair pair = bound_states(cfg.potential, grid);
    const GroundState gs = cfg.target == "mass" ? solve_for_mass(cfg.mass, cfg.lambda, pair, grid)
                                                : solve_ground_state(cfg.E, cfg.lambda, pair, grid);
    const json j = ground_json(gs, grid);
    io::write_json(out + "/ground.json", j);
    io::CsvWriter w(out + "/ground_state.csv", {"r", "Q", "R"});
    for (int k = 0; k < grid.size(); ++k) w.row({grid.r(k), gs.Q(k), gs.R(k)});
    if (!cfg.sweep.empty()) {
        const GroundStateBranch b = branch_sweep(cfg.lambda, cfg.sweep, pair, grid, cfg.jobs);
        write_branch(b, grid, out + "/branch.csv", out + "/branch.bin");
        log("branch: " + std::to_string(b.samples.size()) + " samples kept, " + std::to_string(b.dropped.size()) +
            " dropped");
    }
    std::cout << j.dump(2) << '\n';
}

void cmd_linearize(const RunConfig& cfg, const std::string& out) {
    const Setup st = prepare_setup(cfg);
    json j = st.sys.diagnostics(st.pair.e01);
    j["a20"] = a20_coefficient(st.sys, st.gs);
    j["ground"] = ground_json(st.gs, st.grid);
    io::write_json(out + "/linearization.json", j);
    io::CsvWriter w(out + "/modes.csv", {"r", "Q", "u", "v", "u_plus", "u_minus"});
    for (int k = 0; k < st.grid.size(); ++k)
        w.row({st.grid.r(k), st.gs.Q(k), st.sys.u()(k), st.sys.v()(k), st.sys.u_plus()(k), st.sys.u_minus()(k)});
    std::cout << j.dump(2) << '\n';
}

void cmd_fgr(const RunConfig& cfg, const std::string& out) {
    const Setup st = prepare_setup(cfg);
    ResolventOptions ro = cfg.resolvent;
    ro.jobs = cfg.jobs;
    const FGRResult f = compute_gamma(st.sys, ro, cfg.timedomain);
    json j = f.to_json();
    const NormalFormParams p = build_params(st.gs, st.sys, f, {ro, cfg.nf.d21_im, cfg.nf.d1_im, false});
    j["normal_form"] = p.to_json();
    j["b22"] = b22_cross_check(p, st.gs, st.grid, st.sys).to_json();
    try {
        j["A1"] = check_A1(st.pair, st.grid, cfg.a1_shifts, ro).to_json();
    } catch (const DomainError& e) {
        j["A1"] = {{"error", e.what()}};
    }
    io::write_json(out + "/fgr.json", j);
    std::cout << j.dump(2) << '\n';
}

void cmd_evolve(const RunConfig& cfg, const std::string& out) {
    const Setup st = prepare_setup(cfg);
    cfg.cap.validate(st.grid.r_max());
    const CVec psi0 = scenario_initial_data(cfg, st);
    Physics phys{st.pair.V, cfg.lambda, cfg.cap, cfg.evolve.gauge ? st.gs.E : 0.0};
    SplitStepper stepper(st.grid, phys, cfg.evolve.dt);
    FieldState state = make_state(psi0, 0.0, phys);
    const double mass0 = st.grid.norm(psi0) * st.grid.norm(psi0);
    io::CsvWriter w(out + "/trajectory.csv", {"t", "mass", "energy"});
    long done = 0;
    try {
        for (long k : sample_steps(cfg.evolve.T, cfg.evolve.dt, cfg.evolve.stride, cfg.evolve.points_per_decade)) {
            stepper.advance(state, k - done);
            done = k;
            state.t = k * cfg.evolve.dt;
            const Conserved c = conserved_quantities(state.psi, phys.V, phys.lambda, st.grid);
            w.row({state.t, c.mass, c.energy});
        }
    } catch (const IntegrationError& e) {
        FieldState last = state;
        last.t = e.last_good_time();
        last.psi = e.last_good_state();
        write_checkpoint(out + "/checkpoint_last_good.bin", last, st.grid);
        throw;
    }
    w.flush();
    if (cfg.evolve.checkpoint) write_checkpoint(out + "/checkpoint.bin", state, st.grid);
    io::write_json(out + "/cap.json", cap_diagnostic(state.lab(), mass0, st.grid, cfg.cap));
    log("reached t = " + io::format_double(state.t));
}

void cmd_decompose(const RunConfig& cfg, const std::string& out) {
    const std::string input = !cfg.decompose_input.empty() ? cfg.decompose_input : cfg.evolve.initial;
    if (input.empty()) throw ConfigError("decompose needs decompose.input (a checkpoint file)");
    const Setup st = prepare_setup(cfg);
    const FieldState state = read_checkpoint(input, st.grid);
    const CVec psi = state.lab();
    RenormOptions ro;
    ro.tolerance = cfg.renorm_tolerance;
    ro.max_distance = cfg.max_distance;
    const RenormResult r = renormalize_E(psi, st.gs.E, cfg.lambda, st.pair, st.grid, ro, &st.gs.Q);
    const LinearizedSystem sys = build_linearization(r.gs, st.grid);
    const ZEta ze = split_h(r.h, sys);
    const EtaNorms en = eta_norms(ze.eta, st.grid, cfg.beta);
    const Conserved c = conserved_quantities(psi, st.pair.V, cfg.lambda, st.grid);
    const json j = {{"t", state.t},
                    {"E", r.E},
                    {"Theta", r.Theta},
                    {"z", {ze.z.real(), ze.z.imag()}},
                    {"abs_z", std::abs(ze.z)},
                    {"eta_L2loc", en.l2loc},
                    {"eta_L4", en.l4},
                    {"mass", c.mass},
                    {"energy", c.energy},
                    {"renormalization",
                     {{"iterations", r.iterations},
                      {"contraction", r.contraction},
                      {"E_iterates", r.E_iterates},
                      {"a_iterates", r.a_iterates},
                      {"orthogonality_residual", r.orthogonality_residual},
                      {"reconstruction_residual", r.reconstruction_residual}}}};
    io::write_json(out + "/decomposition.json", j);
    std::cout << j.dump(2) << '\n';
}

void cmd_nf(const RunConfig& cfg, const std::string& out) {
    const NFSettings& s = cfg.nf;
    double Gamma = s.Gamma;
    if (Gamma <= 0.0) {
        const Setup st = prepare_setup(cfg);
        ResolventOptions ro = cfg.resolvent;
        ro.jobs = cfg.jobs;
        Gamma = compute_gamma(st.sys, ro, cfg.timedomain).gamma;
    }
    NormalFormParams p;
    p.Gamma = Gamma;
    p.d21_re = -Gamma;
    p.d21_im = s.d21_im;
    p.d1_im = s.d1_im;
    NFOptions o;
    o.dt = s.dt;
    o.record_every = std::max(1L, std::lround(s.T / s.dt / 4000.0));
    const NFSeries series = nf_integrate(s.eps, p, nullptr, nullptr, s.T, o);
    io::CsvWriter w(out + "/nf.csv", {"t", "rho", "omega", "bracket_lo", "bracket_hi"});
    for (std::size_t i = 0; i < series.t.size(); ++i) {
        const double c = std::sqrt(bracket_clock(series.t[i], s.eps, Gamma));
        w.row({series.t[i], series.rho[i], series.omega[i], 1.0 / (s.m * c), s.m / c});
    }
    const double m_min = minimal_bracket_m(s.eps, Gamma, s.C1, s.sigma);
    io::write_json(out + "/bracket.json", {{"Gamma", Gamma},
                                           {"eps", s.eps},
                                           {"C1", s.C1},
                                           {"sigma", s.sigma},
                                           {"minimal_m", std::isnan(m_min) ? json(nullptr) : json(m_min)}});
    const ExampleFacts f = example_family(s.example_Gamma, s.example_eps, s.example_samples, s.example_T);
    io::write_json(out + "/example_facts.json", f.to_json());
    json summary = f.to_json();
    summary.erase("samples");
    std::cout << summary.dump(2) << '\n';
}

void cmd_experiment(const RunConfig& cfg, const std::string& out) {
    const RunRecord rec = run_scenario(cfg, out, log);
    std::cout << rec.fits.dump(2) << '\n';
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Soliton dynamics with a resonant excited state: spectra, FGR rates, evolution and normal forms"};
    app.set_version_flag("--version",
                         std::string("nlsfgr ") + build::version + " (" + build::git_revision + ", " +
                             build::compiler + ", " + build::build_type + ")");
    std::string config_path, out_dir;
    std::vector<std::string> overrides;
    int jobs = 1;
    app.add_option("--config", config_path, "TOML or JSON configuration file");
    app.add_option("--set", overrides, "override a configuration value, key=value (repeatable)");
    app.add_option("--out", out_dir, "output directory (default ./runs/<timestamp>)");
    app.add_option("--jobs", jobs, "worker threads")->check(CLI::PositiveNumber);
    app.require_subcommand(1);

    using Handler = void (*)(const RunConfig&, const std::string&);
    const std::vector<std::tuple<std::string, std::string, Handler>> commands = {
        {"spectrum", "bound states of -Laplacian + V", cmd_spectrum},
        {"ground", "nonlinear ground state (and branch sweep)", cmd_ground},
        {"linearize", "linearization at the ground state", cmd_linearize},
        {"fgr", "Fermi golden rule constant, A1 check and B22 cross-check", cmd_fgr},
        {"evolve", "split-step evolution of the scenario data", cmd_evolve},
        {"decompose", "soliton frame of a checkpoint", cmd_decompose},
        {"nf", "normal-form integration and the scalar example", cmd_nf},
        {"experiment", "full scenario run with frames, fits and monitors", cmd_experiment},
    };
    for (const auto& [name, help, fn] : commands) {
        auto* sub = app.add_subcommand(name, help);
        // Global options may also follow the subcommand name.
        sub->fallthrough();
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::Success& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 1;
    }

    try {
        RunConfig cfg = parse_run_config(resolve_config(config_path, overrides));
        cfg.jobs = jobs;
        if (out_dir.empty()) out_dir = timestamp_dir();
        io::ensure_dir(out_dir);
        for (const auto& [name, help, fn] : commands) {
            if (!app.got_subcommand(name)) continue;
            if (name != "experiment") io::write_json(out_dir + "/config.json", cfg.resolved);
            fn(cfg, out_dir);
        }
        log("outputs in " + out_dir);
        return 0;
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return e.is_validation() ? 1 : 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    }
}
