#pragma once

#include <vector>

namespace ccf {

// Natural cubic spline through (x, y) with strictly increasing x.
class CubicSpline {
public:
    CubicSpline() = default;
    CubicSpline(std::vector<double> x, std::vector<double> y);

    double operator()(double t) const;
    double derivative(double t) const;

    double front() const { return x_.front(); }
    double back() const { return x_.back(); }
    const std::vector<double>& knots() const { return x_; }
    const std::vector<double>& values() const { return y_; }
    const std::vector<double>& second_derivatives() const { return m_; }

private:
    std::size_t segment(double t) const;

    std::vector<double> x_, y_, m_;
};

}  // namespace ccf
