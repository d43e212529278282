#pragma once

#include <string>
#include <vector>

#include <json.hpp>

namespace nlsfgr {

// Power-law fit y ~ C x^p over a window of the abscissa.
struct DecayFit {
    double exponent = 0.0;
    double prefactor = 0.0;
    double x_lo = 0.0;
    double x_hi = 0.0;
    double rms_residual = 0.0;  // in log10 y
    int points = 0;
    std::string mode;
    std::string abscissa;

    double decades() const;
    nlohmann::json to_json() const;
};

enum class FitMode {
    // every sample in the window enters the least-squares line
    raw,
    // log-uniform bins, geometric mean of y per bin
    mean,
    // log-uniform bins, maximum of y per bin; for oscillating series whose
    // decay is a statement about the envelope
    envelope,
};

struct FitOptions {
    FitMode mode = FitMode::raw;
    int bins = 40;
    double min_decades = 1.5;
    std::string abscissa = "t";
};

// Least-squares line in log-log over x in [x_lo, x_hi]. Refuses windows
// shorter than min_decades and nonpositive samples (FitError).
DecayFit fit_decay(const std::vector<double>& x, const std::vector<double>& y, double x_lo, double x_hi,
                   const FitOptions& opts = {});

std::string to_string(FitMode mode);

}  // namespace nlsfgr
