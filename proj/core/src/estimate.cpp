#include "ccf/estimate.hpp"

#include "ccf/errors.hpp"

#include <algorithm>
#include <cmath>
#include <fmt/format.h>
#include <limits>
#include <random>

namespace ccf {

namespace {

constexpr double kRhoClamp = 1.0 - 1e-8;
constexpr double kTiny = 1e-300;

double to_free(Domain domain, double x) {
    switch (domain) {
        case Domain::Positive:
        case Domain::NonNegative: return std::log(std::max(x, kTiny));
        case Domain::Correlation: return std::atanh(std::clamp(x, -kRhoClamp, kRhoClamp));
        case Domain::UnitInterval: return std::atanh(std::clamp(2.0 * x - 1.0, -kRhoClamp, kRhoClamp));
        case Domain::Unrestricted: return x;
    }
    return x;
}

double from_free(Domain domain, double z) {
    switch (domain) {
        case Domain::Positive:
        case Domain::NonNegative: return std::exp(z);
        case Domain::Correlation: return std::clamp(std::tanh(z), -kRhoClamp, kRhoClamp);
        case Domain::UnitInterval: return 0.5 * (1.0 + std::clamp(std::tanh(z), -kRhoClamp, kRhoClamp));
        case Domain::Unrestricted: return z;
    }
    return z;
}

double derivative(Domain domain, double z) {
    switch (domain) {
        case Domain::Positive:
        case Domain::NonNegative: return std::exp(z);
        case Domain::Correlation: return 1.0 - std::tanh(z) * std::tanh(z);
        case Domain::UnitInterval: return 0.5 * (1.0 - std::tanh(z) * std::tanh(z));
        case Domain::Unrestricted: return 1.0;
    }
    return 1.0;
}

double margin_penalty(double relative_margin) {
    constexpr double zone = 0.01, weight = 1e3;
    if (relative_margin >= zone) return 0.0;
    const double gap = zone - relative_margin;
    return weight * gap * gap;
}

std::vector<double> contributions(const ParameterVector& params, const PreparedPanel& panel,
                                  const EstimationOptions& options) {
    const FilterRun run = run_filter(params, panel, options.system, options.filter);
    std::vector<double> out;
    out.reserve(run.steps.size());
    for (const auto& s : run.steps) out.push_back(s.loglik);
    return out;
}

}  // namespace

Vec transform(const ParameterVector& params) {
    std::vector<double> z;
    const auto& specs = params.specs();
    for (std::size_t i = 0; i < specs.size(); ++i) {
        if (params.fixed_at(i)) continue;
        z.push_back(to_free(specs[i].domain, params.value_at(i)));
    }
    return Eigen::Map<Vec>(z.data(), static_cast<Eigen::Index>(z.size()));
}

ParameterVector inverse_transform(const Vec& z, const ParameterVector& base) {
    ParameterVector out = base;
    const auto& specs = base.specs();
    Eigen::Index k = 0;
    for (std::size_t i = 0; i < specs.size(); ++i) {
        if (base.fixed_at(i)) continue;
        if (k >= z.size()) throw InputError("inverse_transform: vector too short");
        out.set(specs[i].name, from_free(specs[i].domain, z(k++)));
    }
    if (k != z.size()) throw InputError("inverse_transform: vector too long");
    return out;
}

Vec transform_jacobian(const Vec& z, const ParameterVector& base) {
    Vec j(z.size());
    const auto& specs = base.specs();
    Eigen::Index k = 0;
    for (std::size_t i = 0; i < specs.size(); ++i) {
        if (base.fixed_at(i)) continue;
        j(k) = derivative(specs[i].domain, z(k));
        ++k;
    }
    return j;
}

double admissibility_penalty(const ParameterVector& p) {
    const double kappa = p["kappa"], vbar = p["vbar"], sigma = p["sigma"];
    double pen = margin_penalty((2.0 * kappa * vbar - sigma * sigma) / (2.0 * kappa * vbar));
    double drain = 0.0;
    switch (p.tag()) {
        case ModelTag::Svcdej:
        case ModelTag::SvcdejEx: drain = p["p_minus"] * p["delta"] * p["mu_v"]; break;
        case ModelTag::Svcj: drain = p["delta"] * p["mu_v"]; break;
        case ModelTag::Svcej: drain = p["delta_minus"] * p["mu_v"]; break;
    }
    pen += margin_penalty((kappa - drain) / kappa);
    return pen;
}

double average_loglik(const ParameterVector& params, const PreparedPanel& panel, const EstimationOptions& options) {
    try {
        if (!admissible(params)) return -std::numeric_limits<double>::infinity();
        const FilterRun run = run_filter(params, panel, options.system, options.filter);
        return run.loglik / static_cast<double>(panel.dates());
    } catch (const Error&) {
        return -std::numeric_limits<double>::infinity();
    }
}

SandwichResult sandwich_covariance(const ContributionFunction& contrib, const Vec& z, double hessian_step,
                                   double score_step) {
    const Eigen::Index n = z.size();
    SandwichResult res;
    auto avg = [&](const Vec& x) { return contrib(x).mean(); };

    Vec probe = z;
    const Vec base = contrib(z);
    const auto T = base.size();
    res.scores = Mat(T, n);
    for (Eigen::Index i = 0; i < n; ++i) {
        const double h = score_step * std::max(1.0, std::abs(z(i)));
        probe(i) = z(i) + h;
        const Vec up = contrib(probe);
        probe(i) = z(i) - h;
        const Vec dn = contrib(probe);
        probe(i) = z(i);
        res.scores.col(i) = (up - dn) / (2.0 * h);
    }

    res.hessian = Mat(n, n);
    const double f0 = base.mean();
    for (Eigen::Index i = 0; i < n; ++i) {
        const double hi = hessian_step * std::max(1.0, std::abs(z(i)));
        probe(i) = z(i) + hi;
        const double fp = avg(probe);
        probe(i) = z(i) - hi;
        const double fm = avg(probe);
        probe(i) = z(i);
        res.hessian(i, i) = (fp - 2.0 * f0 + fm) / (hi * hi);
        for (Eigen::Index j = 0; j < i; ++j) {
            const double hj = hessian_step * std::max(1.0, std::abs(z(j)));
            auto at = [&](double si, double sj) {
                probe(i) = z(i) + si * hi;
                probe(j) = z(j) + sj * hj;
                const double v = avg(probe);
                probe(i) = z(i);
                probe(j) = z(j);
                return v;
            };
            const double v = (at(1, 1) - at(1, -1) - at(-1, 1) + at(-1, -1)) / (4.0 * hi * hj);
            res.hessian(i, j) = v;
            res.hessian(j, i) = v;
        }
    }

    const Mat B = res.scores.transpose() * res.scores / static_cast<double>(T);
    Mat A = -res.hessian;   // curvature of the negative average
    Eigen::SelfAdjointEigenSolver<Mat> eig(A);
    const double top = std::max(eig.eigenvalues().cwiseAbs().maxCoeff(), 1e-300);
    if (eig.eigenvalues().minCoeff() <= 1e-10 * top) {
        A += (1e-8 * top - std::min(eig.eigenvalues().minCoeff(), 0.0)) * Mat::Identity(n, n);
        res.ridge_applied = true;
    }
    const Mat A_inv = A.ldlt().solve(Mat::Identity(n, n));
    res.covariance = A_inv * B * A_inv / static_cast<double>(T);
    return res;
}

void sandwich_se(EstimationResult& result, const PreparedPanel& panel, const EstimationOptions& options) {
    const ParameterVector base = result.theta_hat;
    const Vec z = transform(base);
    ContributionFunction contrib = [&](const Vec& x) {
        const auto c = contributions(inverse_transform(x, base), panel, options);
        return Vec(Eigen::Map<const Vec>(c.data(), static_cast<Eigen::Index>(c.size())));
    };
    SandwichResult s;
    try {
        s = sandwich_covariance(contrib, z, options.hessian_step, options.score_step);
    } catch (const Error& e) {
        result.warnings.push_back(fmt::format("standard errors unavailable: {}", e.what()));
        return;
    }
    if (s.ridge_applied) result.warnings.push_back("singular Hessian: ridge-regularized inverse used");
    const Vec jac = transform_jacobian(z, base);
    result.scores = s.scores;
    result.standard_errors.assign(result.names.size(), std::numeric_limits<double>::quiet_NaN());
    for (Eigen::Index i = 0; i < z.size(); ++i) {
        result.standard_errors[static_cast<std::size_t>(i)] = std::abs(jac(i)) * std::sqrt(std::max(s.covariance(i, i), 0.0));
    }
}

EstimationResult qml_estimate(const PreparedPanel& panel, const ParameterVector& theta0,
                              const EstimationOptions& options) {
    const auto adm = admissible(theta0);
    if (!adm) throw AdmissibilityError("qml_estimate: starting point not admissible", adm.violations);

    EstimationResult result;
    result.theta_start = theta0;
    result.names = theta0.free_names();
    result.objective_start = average_loglik(theta0, panel, options);
    if (!std::isfinite(result.objective_start)) {
        throw LikelihoodError("qml_estimate: likelihood not finite at the starting point", 0);
    }
    Objective objective = [&](const Vec& z) {
        const ParameterVector p = inverse_transform(z, theta0);
        const double ll = average_loglik(p, panel, options);
        if (!std::isfinite(ll)) return std::numeric_limits<double>::infinity();
        return -ll + admissibility_penalty(p);
    };

    const Vec z0 = transform(theta0);
    OptimizeResult best = minimize(objective, z0, options.optimize);
    std::mt19937_64 rng(options.seed);
    std::normal_distribution<double> jitter(0.0, 0.1);
    for (int s = 1; s < options.starts; ++s) {
        Vec zs = z0;
        for (Eigen::Index i = 0; i < zs.size(); ++i) zs(i) += jitter(rng);
        if (!std::isfinite(objective(zs))) continue;
        OptimizeResult r = minimize(objective, zs, options.optimize);
        if (r.value < best.value) best = std::move(r);
    }
    result.optimizer = best;
    result.converged = best.converged;
    result.theta_hat = inverse_transform(best.x, theta0);
    result.objective = average_loglik(result.theta_hat, panel, options);
    if (result.objective < result.objective_start) {
        result.theta_hat = theta0;
        result.objective = result.objective_start;
        result.warnings.push_back("optimizer did not improve on the starting point");
    }
    result.loglik = result.objective * static_cast<double>(panel.dates());
    if (!result.converged) result.warnings.push_back("optimizer stopped before meeting its tolerance");
    if (options.standard_errors) {
        sandwich_se(result, panel, options);
    } else {
        result.standard_errors.assign(result.names.size(), std::numeric_limits<double>::quiet_NaN());
    }
    return result;
}

}  // namespace ccf
