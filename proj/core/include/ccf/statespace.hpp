#pragma once

#include "ccf/linalg.hpp"
#include "ccf/models.hpp"
#include "ccf/moments.hpp"
#include "ccf/riccati.hpp"
#include "ccf/spanning.hpp"

#include <vector>

namespace ccf {

// Measurements with their pseudo-inverted covariance blocks; independent of model parameters.
struct PanelBlock {
    Eigen::Index offset = 0;
    Eigen::Index size = 0;
    PseudoInverse pinv;
    Vec hinv_y;          // H~^- y_b
    double y_hinv_y = 0.0;
};

struct PreparedPanel {
    std::vector<CCFMeasurement> measurements;
    std::vector<std::vector<PanelBlock>> blocks;   // per date, per tenor
    std::vector<double> dt;                        // year fraction to the next date (last entry repeats)
    double sbar = 1e-7;
    std::vector<double> distinct_taus;

    std::size_t dates() const { return measurements.size(); }
};

struct PanelOptions {
    double sbar = 1e-7;
    double day_basis = 250.0;   // transition step = day gap / day_basis
};

PreparedPanel prepare_panel(std::vector<CCFMeasurement> measurements, const PanelOptions& options = {});

struct DateSystem {
    Vec d;                              // stacked [Re; Im] of alpha plus observed-state loadings
    Mat Z;                              // stacked [Re; Im] latent loadings
    ConditionalMomentCoeffs transition; // from this date to the next
};

struct SystemMatrices {
    std::vector<DateSystem> dates;
    ConditionalMomentCoeffs initial;    // transition used to set the stationary prior
};

struct SystemOptions {
    BuildOptions model;
    RiccatiOptions riccati;
};

SystemMatrices build_system(const ParameterVector& params, const PreparedPanel& panel,
                            const SystemOptions& options = {});

struct CollapsedObservation {
    Vec y_star;          // A* y
    Vec d_star;          // A* d
    Mat H_star;
    double gls_quad = 0.0;   // e' H^- e
    double log_det_H_star = 0.0;
};

// Collapses one observation; H_inv is the pseudo-inverse of the full covariance H.
CollapsedObservation collapse(const Vec& y, const Vec& d, const Mat& Z, const Mat& H_inv);

struct FilterStep {
    Vec predicted;
    Mat predicted_P;
    Vec filtered;
    Mat filtered_P;
    Vec omega;
    Mat G;
    double gls_quad = 0.0;
    double log_det_H_star = 0.0;
    double loglik = 0.0;
};

struct FilterRun {
    std::vector<FilterStep> steps;
    double loglik = 0.0;        // proportional quasi-log-likelihood
    double loglik_full = 0.0;   // adds -1/2 sum log|H~_t|, the full-dimensional Gaussian value
};

struct FilterOptions {
    double state_floor = 1e-10;
};

FilterRun kalman_pass(const PreparedPanel& panel, const SystemMatrices& system, double sigma_kappa,
                      const FilterOptions& options = {});

// Convenience: build the system and run the filter at params (sigma_kappa taken from params).
FilterRun run_filter(const ParameterVector& params, const PreparedPanel& panel, const SystemOptions& options = {},
                     const FilterOptions& filter = {});

}  // namespace ccf
