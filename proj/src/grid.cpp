#include "nlsfgr/grid.hpp"

#include <cmath>

#include "nlsfgr/errors.hpp"

namespace nlsfgr {

PotentialShape parse_potential_shape(const std::string& name) {
    if (name == "gaussian_well") return PotentialShape::gaussian_well;
    if (name == "square_well") return PotentialShape::square_well;
    throw ConfigError("unknown potential shape '" + name + "' (expected gaussian_well or square_well)");
}

std::string to_string(PotentialShape shape) {
    return shape == PotentialShape::gaussian_well ? "gaussian_well" : "square_well";
}

double PotentialSpec::operator()(double r) const {
    switch (shape) {
        case PotentialShape::gaussian_well:
            return -depth * std::exp(-r * r / (2.0 * width * width));
        case PotentialShape::square_well:
            return r < width ? -depth : 0.0;
    }
    return 0.0;
}

void PotentialSpec::validate() const {
    if (!(depth > 0.0)) throw ConfigError("potential.depth must be positive");
    if (!(width > 0.0)) throw ConfigError("potential.width must be positive");
}

RadialGrid::RadialGrid(double r_max, int n) : r_max_(r_max), n_(n) {
    if (!(r_max > 0.0) || !std::isfinite(r_max))
        throw ConfigError("grid.r_max must be positive and finite");
    if (n < 16) throw ConfigError("grid.n must be at least 16 interior nodes");
    dr_ = r_max / (n + 1);
    r_.resize(n);
    for (int j = 0; j < n; ++j) r_(j) = (j + 1) * dr_;
    weights_ = 4.0 * pi * dr_ * r_.array().square();
    scale_ = weights_.cwiseSqrt();
}

double RadialGrid::inner(const RVec& f, const RVec& g) const {
    return (f.array() * g.array() * weights_.array()).sum();
}

cplx RadialGrid::inner(const CVec& f, const CVec& g) const {
    return (f.conjugate().array() * g.array() * weights_.array()).sum();
}

double RadialGrid::norm(const RVec& f) const { return std::sqrt(inner(f, f)); }

double RadialGrid::norm(const CVec& f) const {
    return std::sqrt((f.array().abs2() * weights_.array()).sum());
}

double RadialGrid::lp_norm(const CVec& f, double p) const {
    return std::pow((f.array().abs().pow(p) * weights_.array()).sum(), 1.0 / p);
}

double RadialGrid::local_norm(const CVec& f, double beta) const {
    const RVec bracket = (1.0 + r_.array().square()).pow(-beta);
    return std::sqrt((f.array().abs2() * bracket.array() * weights_.array()).sum());
}

namespace {

template <class Vec>
Vec laplacian_impl(const RadialGrid& g, const Vec& psi) {
    const int n = g.size();
    const double inv = 1.0 / (g.dr() * g.dr());
    Vec u = psi.cwiseProduct(g.r());
    Vec out(n);
    for (int j = 0; j < n; ++j) {
        const auto left = j > 0 ? u(j - 1) : typename Vec::Scalar(0);
        const auto right = j + 1 < n ? u(j + 1) : typename Vec::Scalar(0);
        out(j) = (left - 2.0 * u(j) + right) * inv / g.r(j);
    }
    return out;
}

}  // namespace

RVec RadialGrid::laplacian(const RVec& psi) const { return laplacian_impl(*this, psi); }
CVec RadialGrid::laplacian(const CVec& psi) const { return laplacian_impl(*this, psi); }

RVec RadialGrid::sample(const PotentialSpec& v) const {
    RVec out(n_);
    for (int j = 0; j < n_; ++j) out(j) = v(r_(j));
    return out;
}

RadialGrid build_grid(double r_max, int n) { return RadialGrid(r_max, n); }

int rebuild_decaying_tail(const RadialGrid& grid, RVec& y, const RVec& local_potential, double threshold) {
    const int n = grid.size();
    Eigen::Index peak;
    const double ymax = y.cwiseAbs().maxCoeff(&peak);
    int junction = -1;
    for (int j = static_cast<int>(peak); j < n; ++j) {
        if (std::abs(y(j)) < threshold * ymax) {
            junction = j;
            break;
        }
    }
    if (junction < 1 || junction >= n - 2) return -1;
    for (int j = junction; j < n; ++j)
        if (!(local_potential(j) > 0.0)) return -1;

    const double h2 = grid.dr() * grid.dr();
    RVec t(n);
    t(n - 1) = 1.0;
    double next = 0.0;  // value at the wall
    for (int j = n - 1; j > junction; --j) {
        const double prev = (2.0 + h2 * local_potential(j)) * t(j) - next;
        next = t(j);
        t(j - 1) = prev;
        if (std::abs(prev) > 1e150) {
            t.segment(j - 1, n - j + 1) *= 1e-150;
            next *= 1e-150;
        }
    }
    const double s = y(junction) / t(junction);
    for (int j = junction + 1; j < n; ++j) y(j) = s * t(j);
    return junction;
}

}  // namespace nlsfgr
