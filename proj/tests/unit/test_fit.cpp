#include <gtest/gtest.h>

#include <cmath>

#include "nlsfgr/errors.hpp"
#include "nlsfgr/fit.hpp"

using namespace nlsfgr;

namespace {

std::vector<double> log_grid(double lo, double hi, int n) {
    std::vector<double> t(n);
    for (int i = 0; i < n; ++i) t[i] = lo * std::pow(hi / lo, static_cast<double>(i) / (n - 1));
    return t;
}

}  // namespace

TEST(FitDecay, ExactPowerLaw) {
    const auto t = log_grid(1.0, 1e3, 200);
    std::vector<double> y;
    for (double x : t) y.push_back(3.0 * std::pow(x, -0.5));
    for (FitMode mode : {FitMode::raw, FitMode::mean, FitMode::envelope}) {
        const DecayFit f = fit_decay(t, y, 1.0, 1e3, {.mode = mode});
        EXPECT_NEAR(f.exponent, -0.5, 1e-12);
        EXPECT_NEAR(f.prefactor, 3.0, 1e-10);
        EXPECT_LT(f.rms_residual, 1e-12);
    }
}

TEST(FitDecay, BracketApproachesInverseSquareRootLate) {
    const double eps = 0.5, gamma = 1e-3;
    const auto t = log_grid(1.0, 1e9, 2000);
    std::vector<double> y;
    for (double x : t) y.push_back(std::pow(1.0 / (eps * eps) + 2 * gamma * x, -0.5));
    double prev = 0.0;
    for (double lo : {1e3, 1e5, 1e7}) {
        const double p = fit_decay(t, y, lo, 100 * lo).exponent;
        EXPECT_LT(p, prev);
        prev = p;
    }
    EXPECT_NEAR(prev, -0.5, 1e-3);
}

TEST(FitDecay, EnvelopeModeFollowsOscillationMaxima) {
    const auto t = log_grid(1.0, 1e3, 5000);
    std::vector<double> y;
    for (double x : t) y.push_back(std::pow(x, -1.0) * (1.0 + 0.9 * std::cos(3.0 * x)));
    const DecayFit env = fit_decay(t, y, 10.0, 1e3, {.mode = FitMode::envelope, .bins = 30});
    EXPECT_NEAR(env.exponent, -1.0, 0.03);
}

TEST(FitDecay, RefusesShortWindowsAndNonpositiveData) {
    const auto t = log_grid(1.0, 1e3, 50);
    std::vector<double> y(t.size(), 1.0);
    EXPECT_THROW(fit_decay(t, y, 10.0, 100.0), FitError);
    y[10] = 0.0;
    EXPECT_THROW(fit_decay(t, y, 1.0, 1e3), FitError);
}
