#include "nlsfgr/evolution.hpp"

#include <cmath>
#include <mutex>
#include <sstream>

#include <fftw3.h>

#include "nlsfgr/errors.hpp"
#include "nlsfgr/io.hpp"

namespace nlsfgr {

namespace {

// FFTW planning is not thread safe; execution of distinct plans is.
std::mutex& planner_mutex() {
    static std::mutex m;
    return m;
}

bool all_finite(const CVec& v) { return v.allFinite(); }

}  // namespace

void CapSpec::validate(double r_max) const {
    if (!enabled) return;
    if (!(start_radius > 0.0 && start_radius < r_max)) {
        std::ostringstream msg;
        msg << "cap.start_radius = " << start_radius << " must lie in (0, r_max = " << r_max << ")";
        throw ConfigError(msg.str());
    }
    if (!(strength >= 0.0)) throw ConfigError("cap.strength must be nonnegative");
    if (!(power > 0.0)) throw ConfigError("cap.power must be positive");
}

RVec CapSpec::profile(const RadialGrid& grid) const {
    RVec W = RVec::Zero(grid.size());
    if (!enabled) return W;
    const double width = grid.r_max() - start_radius;
    for (int j = 0; j < grid.size(); ++j) {
        const double r = grid.r(j);
        if (r > start_radius) W(j) = strength * std::pow((r - start_radius) / width, power);
    }
    return W;
}

CVec FieldState::lab() const {
    if (gauge_E0 == 0.0) return psi;
    return psi * std::exp(cplx(0.0, -gauge_E0 * t));
}

FieldState make_state(const CVec& psi_lab, double t, const Physics& physics) {
    FieldState s;
    s.t = t;
    s.gauge_E0 = physics.gauge_E0;
    s.cap = physics.cap.enabled;
    s.psi = physics.gauge_E0 == 0.0 ? psi_lab : CVec(psi_lab * std::exp(cplx(0.0, physics.gauge_E0 * t)));
    return s;
}

Conserved conserved_quantities(const CVec& psi, const RVec& V, double lambda, const RadialGrid& grid) {
    const CVec y = grid.to_reduced(psi);
    const int n = grid.size();
    const double inv_dr2 = 1.0 / (grid.dr() * grid.dr());
    double kin = 0.0, pot = 0.0, quart = 0.0, mass = 0.0;
    for (int j = 0; j < n; ++j) {
        const double m2 = std::norm(y(j));
        mass += m2;
        kin += 2.0 * m2;
        if (j + 1 < n) kin -= 2.0 * std::real(std::conj(y(j)) * y(j + 1));
        pot += V(j) * m2;
        quart += m2 * std::norm(psi(j));
    }
    return {mass, 0.5 * kin * inv_dr2 + 0.5 * pot + 0.25 * lambda * quart};
}

double max_stable_dt(const CVec& psi, const RVec& V, double lambda) {
    const double m = (V.array() + lambda * psi.array().abs2()).abs().maxCoeff();
    return m > 0.0 ? 0.1 / m : std::numeric_limits<double>::infinity();
}

struct SplitStepper::Plan {
    fftw_plan dst = nullptr;
};

SplitStepper::SplitStepper(const RadialGrid& grid, const Physics& physics, double dt)
    : grid_(grid), physics_(physics), dt_(dt), plan_(std::make_unique<Plan>()) {
    const int n = grid_.size();
    if (!(dt > 0.0)) throw DomainError("time step must be positive");
    if (physics_.V.size() != n) throw DomainError("potential does not match the grid");
    physics_.cap.validate(grid_.r_max());

    inv_scale2_ = grid_.scale().cwiseAbs2().cwiseInverse();
    potential_phase_ = (physics_.V.array() - physics_.gauge_E0).matrix() * (0.5 * dt);
    const RVec W = physics_.cap.profile(grid_);
    cap_damp_.resize(n);
    cap_nl_time_.resize(n);
    for (int j = 0; j < n; ++j) {
        const double h = 0.5 * dt;
        cap_damp_(j) = std::exp(-W(j) * h);
        cap_nl_time_(j) = W(j) > 0.0 ? -std::expm1(-2.0 * W(j) * h) / (2.0 * W(j)) : h;
    }
    kinetic_factor_.resize(n);
    const double inv_dr2 = 1.0 / (grid_.dr() * grid_.dr());
    for (int k = 0; k < n; ++k) {
        const double mu = (2.0 - 2.0 * std::cos((k + 1) * pi / (n + 1))) * inv_dr2;
        kinetic_factor_(k) = std::exp(cplx(0.0, -mu * dt)) / (2.0 * (n + 1));
    }
    work_.resize(n);

    // Real and imaginary parts are two interleaved real sequences (stride 2).
    std::lock_guard<std::mutex> lock(planner_mutex());
    fftw_r2r_kind kind = FFTW_RODFT00;
    double* data = reinterpret_cast<double*>(work_.data());
    plan_->dst = fftw_plan_many_r2r(1, &n, 2, data, nullptr, 2, 1, data, nullptr, 2, 1, &kind, FFTW_ESTIMATE);
    if (!plan_->dst) throw Error("FFTW could not plan the sine transform");
}

SplitStepper::~SplitStepper() {
    if (plan_ && plan_->dst) {
        std::lock_guard<std::mutex> lock(planner_mutex());
        fftw_destroy_plan(plan_->dst);
    }
}

void SplitStepper::phase_half(CVec& y) const {
    const double lambda = physics_.lambda;
    for (int j = 0; j < y.size(); ++j) {
        const double rho = std::norm(y(j)) * inv_scale2_(j);
        const double phase = potential_phase_(j) + lambda * rho * cap_nl_time_(j);
        y(j) *= cap_damp_(j) * cplx(std::cos(phase), -std::sin(phase));
    }
}

void SplitStepper::kinetic(CVec& y) {
    work_ = y;
    fftw_execute(plan_->dst);
    work_.array() *= kinetic_factor_.array();
    fftw_execute(plan_->dst);
    y = work_;
}

void SplitStepper::step(FieldState& state) {
    CVec y = grid_.to_reduced(state.psi);
    phase_half(y);
    kinetic(y);
    phase_half(y);
    if (!all_finite(y)) {
        std::ostringstream msg;
        msg << "non-finite field after the step from t = " << state.t;
        throw IntegrationError(msg.str(), state.t, state.psi);
    }
    state.psi = grid_.from_reduced(y);
    state.t += dt_;
    state.dt = dt_;
    state.cap = physics_.cap.enabled;
    state.gauge_E0 = physics_.gauge_E0;
}

void SplitStepper::advance(FieldState& state, long nsteps, int check_every) {
    if (nsteps <= 0) return;
    CVec y = grid_.to_reduced(state.psi);
    CVec good = y;
    double t_good = state.t;
    for (long k = 1; k <= nsteps; ++k) {
        phase_half(y);
        kinetic(y);
        phase_half(y);
        if (k % check_every == 0 || k == nsteps) {
            if (!all_finite(y)) {
                std::ostringstream msg;
                msg << "non-finite field between t = " << t_good << " and t = " << state.t + k * dt_;
                throw IntegrationError(msg.str(), t_good, grid_.from_reduced(good));
            }
            good = y;
            t_good = state.t + k * dt_;
        }
    }
    state.psi = grid_.from_reduced(y);
    state.t += nsteps * dt_;
    state.dt = dt_;
    state.cap = physics_.cap.enabled;
    state.gauge_E0 = physics_.gauge_E0;
}

void evolve(SplitStepper& stepper, FieldState& state, double T, long stride, const Observer& observe) {
    const double dt = stepper.dt();
    if (T < 0.0) throw DomainError("evolution horizon must be nonnegative");
    if (stride < 1) throw DomainError("observer stride must be at least one step");
    const long nsteps = std::lround(T / dt);
    if (std::abs(nsteps * dt - T) > 1e-9 * std::max(T, dt)) {
        std::ostringstream msg;
        msg << "horizon T = " << T << " is not a whole number of steps dt = " << dt;
        throw DomainError(msg.str());
    }
    const Physics& ph = stepper.physics();
    if (dt > max_stable_dt(state.psi, ph.V, ph.lambda) * (1.0 + 1e-12)) {
        std::ostringstream msg;
        msg << "dt = " << dt << " exceeds the accuracy bound 0.1/max|V + lambda|psi|^2| = "
            << max_stable_dt(state.psi, ph.V, ph.lambda);
        throw DomainError(msg.str());
    }

    const double t0 = state.t;
    auto check_and_observe = [&]() {
        if (dt > 1.1 * max_stable_dt(state.psi, ph.V, ph.lambda)) {
            std::ostringstream msg;
            msg << "accuracy bound on dt violated at t = " << state.t;
            throw IntegrationError(msg.str(), state.t, state.psi);
        }
        if (observe) observe(state);
    };
    check_and_observe();
    long done = 0;
    while (done < nsteps) {
        const long block = std::min(stride, nsteps - done);
        stepper.advance(state, block);
        done += block;
        state.t = t0 + done * dt;  // no accumulated roundoff in t
        check_and_observe();
    }
}

void write_checkpoint(const std::string& path, const FieldState& state, const RadialGrid& grid) {
    io::ensure_parent_dir(path);
    io::BinaryWriter out(path);
    out.tag("NLSFGRC1");
    out.f64(state.t);
    out.u64(static_cast<std::uint64_t>(grid.size()));
    out.f64(grid.dr());
    out.f64(state.gauge_E0);
    out.f64_array(reinterpret_cast<const double*>(state.psi.data()), 2 * static_cast<std::size_t>(state.psi.size()));
}

FieldState read_checkpoint(const std::string& path, const RadialGrid& grid) {
    io::BinaryReader in(path);
    in.expect_tag("NLSFGRC1");
    FieldState s;
    s.t = in.f64();
    const auto n = in.u64();
    const double dr = in.f64();
    if (n != static_cast<std::uint64_t>(grid.size()) || std::abs(dr - grid.dr()) > 1e-12 * grid.dr()) {
        throw ConfigError("checkpoint " + path + " was written on a different grid");
    }
    s.gauge_E0 = in.f64();
    s.psi.resize(static_cast<Eigen::Index>(n));
    in.f64_array(reinterpret_cast<double*>(s.psi.data()), 2 * n);
    return s;
}

nlohmann::json cap_diagnostic(const CVec& psi, double mass0, const RadialGrid& grid, const CapSpec& cap) {
    nlohmann::json j;
    j["enabled"] = cap.enabled;
    if (!cap.enabled) return j;
    const RVec m = (psi.array().abs2() * grid.weights().array()).matrix();
    double inside_layer = 0.0;
    for (int k = 0; k < grid.size(); ++k)
        if (grid.r(k) > cap.start_radius) inside_layer += m(k);
    const double total = m.sum();
    const double absorbed = mass0 - total;
    j["start_radius"] = cap.start_radius;
    j["strength"] = cap.strength;
    j["power"] = cap.power;
    j["mass_absorbed"] = absorbed;
    j["mass_in_layer"] = inside_layer;
    j["layer_to_absorbed"] = absorbed > 0.0 ? inside_layer / absorbed : 0.0;
    return j;
}

}  // namespace nlsfgr
