#pragma once

#include "ccf/cubic_spline.hpp"
#include "ccf/quotes.hpp"

#include <vector>

namespace ccf {

struct KnotSelection {
    std::vector<std::size_t> indices;   // into the slice arrays, increasing in m
    bool fallback = false;              // fewer than four strict knots were found
};

KnotSelection select_knots(const OptionSlice& slice);

// Largest slope in [0, 2] such that every smaller right-wing slope keeps the linear wing
// w(m) = w_edge + slope * (m - m_edge), m >= m_edge, free of butterfly arbitrage.
double right_wing_slope_cap(double m_edge, double w_edge);
// Mirror image for the left wing; returns a non-positive bound.
double left_wing_slope_floor(double m_edge, double w_edge);
// Exact butterfly test for a right linear wing.
bool right_wing_arbitrage_free(double m_edge, double w_edge, double slope);

struct SurfacePoint {
    double total_variance;
    double bsiv;
    double otm_price;
};

class PreparedSurface {
public:
    PreparedSurface() = default;
    PreparedSurface(CubicSpline spline, double tau, double forward, double rate, double slope_low,
                    double slope_high);

    double total_variance(double m) const;
    SurfacePoint evaluate(double m) const;
    // Undiscounted OTM price divided by the forward.
    double normalized_otm_price(double m) const;

    double tau() const { return tau_; }
    double forward() const { return forward_; }
    double rate() const { return rate_; }
    double m_low() const { return spline_.front(); }
    double m_high() const { return spline_.back(); }
    double slope_low() const { return slope_low_; }
    double slope_high() const { return slope_high_; }
    double intercept_low() const { return c_low_; }
    double intercept_high() const { return c_high_; }
    const CubicSpline& spline() const { return spline_; }

    std::vector<std::size_t> knot_indices;
    bool fallback_knots = false;

private:
    CubicSpline spline_;
    double tau_ = 0.0, forward_ = 0.0, rate_ = 0.0;
    double slope_low_ = 0.0, slope_high_ = 0.0;
    double c_low_ = 0.0, c_high_ = 0.0;
};

PreparedSurface fit_surface(const OptionSlice& slice, const KnotSelection& knots);

SurfacePoint evaluate_surface(const PreparedSurface& surface, double m);

}  // namespace ccf
