#include "nlsfgr/fit.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "nlsfgr/errors.hpp"

namespace nlsfgr {

double DecayFit::decades() const { return x_lo > 0.0 ? std::log10(x_hi / x_lo) : 0.0; }

nlohmann::json DecayFit::to_json() const {
    return {{"exponent", exponent}, {"prefactor", prefactor}, {"window", {x_lo, x_hi}},
            {"decades", decades()}, {"rms_residual", rms_residual}, {"points", points},
            {"mode", mode},         {"abscissa", abscissa}};
}

std::string to_string(FitMode mode) {
    switch (mode) {
        case FitMode::raw: return "raw";
        case FitMode::mean: return "mean";
        case FitMode::envelope: return "envelope";
    }
    return "raw";
}

DecayFit fit_decay(const std::vector<double>& x, const std::vector<double>& y, double x_lo, double x_hi,
                   const FitOptions& opts) {
    if (x.size() != y.size()) throw FitError("fit_decay: x and y lengths differ");
    if (!(x_lo > 0.0) || !(x_hi > x_lo)) throw FitError("fit_decay: window must satisfy 0 < lo < hi");
    const double decades = std::log10(x_hi / x_lo);
    if (decades < opts.min_decades) {
        std::ostringstream msg;
        msg << "fit window [" << x_lo << ", " << x_hi << "] spans " << decades << " decades, need "
            << opts.min_decades;
        throw FitError(msg.str());
    }

    std::vector<double> lx, ly;
    for (std::size_t i = 0; i < x.size(); ++i) {
        if (x[i] < x_lo || x[i] > x_hi) continue;
        if (!(y[i] > 0.0) || !std::isfinite(y[i])) {
            std::ostringstream msg;
            msg << "nonpositive or non-finite sample y = " << y[i] << " at x = " << x[i];
            throw FitError(msg.str());
        }
        lx.push_back(std::log(x[i]));
        ly.push_back(std::log(y[i]));
    }

    if (opts.mode != FitMode::raw) {
        const int nb = std::max(2, opts.bins);
        const double l0 = std::log(x_lo), width = (std::log(x_hi) - l0) / nb;
        std::vector<double> sx(nb, 0.0), sy(nb, 0.0), my(nb, -INFINITY), mx(nb, 0.0);
        std::vector<int> cnt(nb, 0);
        for (std::size_t i = 0; i < lx.size(); ++i) {
            const int b = std::clamp(static_cast<int>((lx[i] - l0) / width), 0, nb - 1);
            sx[b] += lx[i];
            sy[b] += ly[i];
            ++cnt[b];
            if (ly[i] > my[b]) {
                my[b] = ly[i];
                mx[b] = lx[i];
            }
        }
        lx.clear();
        ly.clear();
        for (int b = 0; b < nb; ++b) {
            if (cnt[b] == 0) continue;
            if (opts.mode == FitMode::mean) {
                lx.push_back(sx[b] / cnt[b]);
                ly.push_back(sy[b] / cnt[b]);
            } else {
                lx.push_back(mx[b]);
                ly.push_back(my[b]);
            }
        }
    }
    if (lx.size() < 3) throw FitError("fit_decay: fewer than 3 points in the window");

    const double m = static_cast<double>(lx.size());
    double mxv = 0.0, myv = 0.0;
    for (std::size_t i = 0; i < lx.size(); ++i) {
        mxv += lx[i];
        myv += ly[i];
    }
    mxv /= m;
    myv /= m;
    double sxx = 0.0, sxy = 0.0;
    for (std::size_t i = 0; i < lx.size(); ++i) {
        sxx += (lx[i] - mxv) * (lx[i] - mxv);
        sxy += (lx[i] - mxv) * (ly[i] - myv);
    }
    DecayFit fit;
    fit.exponent = sxy / sxx;
    const double intercept = myv - fit.exponent * mxv;
    fit.prefactor = std::exp(intercept);
    double ss = 0.0;
    for (std::size_t i = 0; i < lx.size(); ++i) {
        const double r = ly[i] - (intercept + fit.exponent * lx[i]);
        ss += r * r;
    }
    fit.rms_residual = std::sqrt(ss / m) / std::log(10.0);
    fit.x_lo = x_lo;
    fit.x_hi = x_hi;
    fit.points = static_cast<int>(lx.size());
    fit.mode = to_string(opts.mode);
    fit.abscissa = opts.abscissa;
    return fit;
}

}  // namespace nlsfgr
