#pragma once

#include <cmath>
#include <complex>
#include <Eigen/Dense>

namespace ddisac {

using cplx = std::complex<double>;
using CVector = Eigen::VectorXcd;
using CMatrix = Eigen::MatrixXcd;
using RVector = Eigen::VectorXd;
using RMatrix = Eigen::MatrixXd;
using CDiagonal = Eigen::DiagonalMatrix<cplx, Eigen::Dynamic>;

inline constexpr double kPi = 3.14159265358979323846;
inline constexpr double kSpeedOfLight = 3.0e8;

// e^{-j 2 pi t}, with t reduced to [0,1) first so large phases stay accurate.
inline cplx unit_phasor(double t)
{
    t -= std::floor(t);
    return std::polar(1.0, -2.0 * kPi * t);
}

}  // namespace ddisac
