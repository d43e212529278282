#pragma once

#include <complex>

#include <Eigen/Dense>

namespace nlsfgr {

using cplx = std::complex<double>;
using RVec = Eigen::VectorXd;
using CVec = Eigen::VectorXcd;
using RMat = Eigen::MatrixXd;

inline constexpr double pi = 3.14159265358979323846;

}  // namespace nlsfgr
