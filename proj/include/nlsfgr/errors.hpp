#pragma once

#include <stdexcept>
#include <string>
#include <vector>

#include "nlsfgr/types.hpp"

namespace nlsfgr {

// Every library failure derives from Error. The CLI maps validation
// problems to exit code 1 and numerical failures to exit code 2.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
    virtual bool is_validation() const { return false; }
};

class ValidationError : public Error {
public:
    using Error::Error;
    bool is_validation() const override { return true; }
};

class ConfigError : public ValidationError {
public:
    using ValidationError::ValidationError;
};

// Input outside the region where the requested object exists
// (wrong side of e0 for the sign of lambda, energy below the continuum edge...).
class DomainError : public ValidationError {
public:
    using ValidationError::ValidationError;
};

// Potential too shallow to carry the two bound states the model needs.
class SpectrumError : public ValidationError {
public:
    using ValidationError::ValidationError;
};

class SolveError : public Error {
public:
    using Error::Error;
};

class BranchError : public Error {
public:
    using Error::Error;
};

class SpectralError : public Error {
public:
    using Error::Error;
};

class NotPSDError : public Error {
public:
    using Error::Error;
};

class ConvergenceError : public Error {
public:
    ConvergenceError(const std::string& what, std::vector<double> diagnostics = {})
        : Error(what), diagnostics_(std::move(diagnostics)) {}
    const std::vector<double>& diagnostics() const { return diagnostics_; }

private:
    std::vector<double> diagnostics_;
};

class IntegrationError : public Error {
public:
    IntegrationError(const std::string& what, double t_last_good, CVec last_good)
        : Error(what), t_(t_last_good), psi_(std::move(last_good)) {}
    double last_good_time() const { return t_; }
    const CVec& last_good_state() const { return psi_; }

private:
    double t_;
    CVec psi_;
};

class FrameError : public Error {
public:
    using Error::Error;
};

class RenormError : public Error {
public:
    RenormError(const std::string& what, std::vector<double> iterates)
        : Error(what), iterates_(std::move(iterates)) {}
    const std::vector<double>& iterates() const { return iterates_; }

private:
    std::vector<double> iterates_;
};

class FitError : public Error {
public:
    using Error::Error;
};

}  // namespace nlsfgr
