#pragma once

#include "ccf/types.hpp"

#include <functional>
#include <string>
#include <vector>

namespace ccf {

// Objective to minimize; may return +inf for infeasible points.
using Objective = std::function<double(const Vec&)>;

struct OptimizeOptions {
    int bfgs_max_iter = 200;
    int simplex_max_iter = 3000;
    double gradient_step = 1e-5;
    double gradient_tol = 1e-6;
    double function_tol = 1e-10;
    double simplex_size = 0.05;
    double simplex_tol = 1e-8;
};

struct OptimizeResult {
    Vec x;
    double value = 0.0;
    int iterations = 0;
    int evaluations = 0;
    double gradient_norm = 0.0;
    bool converged = false;
    std::vector<std::string> log;
};

Vec numerical_gradient(const Objective& f, const Vec& x, double step);

OptimizeResult bfgs(const Objective& f, const Vec& x0, const OptimizeOptions& options = {});
OptimizeResult nelder_mead(const Objective& f, const Vec& x0, const OptimizeOptions& options = {});

// Quasi-Newton stage followed by simplex refinement from the best point found.
OptimizeResult minimize(const Objective& f, const Vec& x0, const OptimizeOptions& options = {});

}  // namespace ccf
