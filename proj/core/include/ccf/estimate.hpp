#pragma once

#include "ccf/optimize.hpp"
#include "ccf/parameters.hpp"
#include "ccf/statespace.hpp"

#include <functional>
#include <string>
#include <vector>

namespace ccf {

// Unconstrained coordinates for the free parameters of `params`.
Vec transform(const ParameterVector& params);
// Inverse of transform; fixed parameters are copied from `base`.
ParameterVector inverse_transform(const Vec& z, const ParameterVector& base);
// d theta / d z for each free parameter at z.
Vec transform_jacobian(const Vec& z, const ParameterVector& base);

// Smooth penalty that switches on only when the Feller or stationarity margin gets thin.
double admissibility_penalty(const ParameterVector& params);

struct EstimationOptions {
    SystemOptions system;
    FilterOptions filter;
    OptimizeOptions optimize;
    bool standard_errors = true;
    double hessian_step = 1e-4;
    double score_step = 1e-5;
    int starts = 1;                 // additional starts are jittered copies of theta0
    unsigned long long seed = 1;
};

struct SandwichResult {
    Mat covariance;                 // in the coordinates the contributions were differentiated in
    Mat hessian;                    // of the average contribution
    Mat scores;                     // T x n per-date scores
    bool ridge_applied = false;
};

// Per-date contributions l_t(z); A = Hessian of the average, B = average outer product of scores.
using ContributionFunction = std::function<Vec(const Vec&)>;
SandwichResult sandwich_covariance(const ContributionFunction& contributions, const Vec& z, double hessian_step,
                                   double score_step);

struct EstimationResult {
    ParameterVector theta_hat;
    ParameterVector theta_start;
    std::vector<std::string> names;         // free parameters, reporting order
    std::vector<double> standard_errors;    // natural units, aligned with names (NaN when not computed)
    double objective_start = 0.0;           // average log-likelihood
    double objective = 0.0;
    double loglik = 0.0;
    OptimizeResult optimizer;
    Mat scores;                             // per-date scores in transformed units
    std::vector<std::string> warnings;
    bool converged = false;
};

// Average quasi-log-likelihood per date (the maximized objective), -inf when the filter fails.
double average_loglik(const ParameterVector& params, const PreparedPanel& panel, const EstimationOptions& options);

EstimationResult qml_estimate(const PreparedPanel& panel, const ParameterVector& theta0,
                              const EstimationOptions& options = {});

// Fills standard errors for an already-estimated point.
void sandwich_se(EstimationResult& result, const PreparedPanel& panel, const EstimationOptions& options);

}  // namespace ccf
