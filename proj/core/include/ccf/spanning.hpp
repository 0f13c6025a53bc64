#pragma once

#include "ccf/dates.hpp"
#include "ccf/surface.hpp"
#include "ccf/types.hpp"

#include <span>
#include <vector>

namespace ccf {

struct SpanGrid {
    double m_low = -6.0;
    double m_high = 2.0;
    double dm = 1e-4;
};

// Option-implied return CCF from a prepared surface on a uniform log-moneyness grid.
std::vector<cplx> span_ccf(const PreparedSurface& surface, std::span<const double> u_grid,
                           const SpanGrid& grid = {});

// Same Riemann sum over explicit nodes m_j (increasing) with level OTM prices O_j;
// node j >= 1 carries weight m_j - m_{j-1}.
std::vector<cplx> span_ccf_nodes(std::span<const double> m, std::span<const double> otm_prices,
                                 std::span<const double> u_grid, double tau, double forward, double rate);

// Continuous complex logarithm along increasing u.
std::vector<cplx> log_ccf_unwrap(std::span<const cplx> phi);

// Summation nodes carrying the quote greeks used by the covariance sums.
struct CovarianceNodes {
    std::vector<double> m;
    std::vector<double> bsiv;
    std::vector<double> vega;
    std::vector<double> dm;
};

CovarianceNodes nodes_from_slice(const OptionSlice& slice);
CovarianceNodes nodes_from_surface(const PreparedSurface& surface, const SpanGrid& grid);

// Real 2q x 2q covariance block of the stacked [Re; Im] log-CCF errors, per unit noise scale.
Mat measurement_covariance(const CovarianceNodes& nodes, std::span<const double> u_grid, std::span<const cplx> phi,
                           double forward, double sigma_kappa_scale = 1.0);

// First-order covariance of the spanned log-CCF when each knot quote carries independent noise,
// propagated through the spline, its wings and the spanning sum.
Mat spline_covariance(const PreparedSurface& surface, std::span<const double> u_grid, std::span<const cplx> phi,
                      const SpanGrid& grid = {});

enum class CovarianceGrid { Quotes, Interpolated, Spline };

struct MeasurementOptions {
    SpanGrid grid;
    CovarianceGrid covariance_grid = CovarianceGrid::Spline;
};

struct CCFMeasurement {
    Date date{};
    std::vector<double> taus;
    std::vector<double> forwards;
    std::vector<double> rates;
    std::vector<double> u_grid;
    Vec y;                       // per tenor: [Re log phi(u_1..u_q), Im log phi(u_1..u_q)]
    std::vector<Mat> H_blocks;   // one 2q x 2q block per tenor
    Vec exogenous;               // observed exogenous factors (may be empty)

    std::size_t dim() const { return static_cast<std::size_t>(y.size()); }
    Mat H_full() const;
};

struct TenorInput {
    const OptionSlice* slice;
    const PreparedSurface* surface;
};

CCFMeasurement build_measurement(Date date, std::span<const TenorInput> tenors, std::span<const double> u_grid,
                                 const MeasurementOptions& options = {});

}  // namespace ccf
