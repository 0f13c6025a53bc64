#pragma once

#include <Eigen/Dense>
#include <complex>

namespace ccf {

using cplx = std::complex<double>;
using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;
using CVec = Eigen::VectorXcd;
using CMat = Eigen::MatrixXcd;

inline constexpr cplx I{0.0, 1.0};

}  // namespace ccf
