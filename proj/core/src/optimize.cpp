#include "ccf/optimize.hpp"

#include <algorithm>
#include <cmath>
#include <fmt/format.h>
#include <limits>
#include <numeric>

namespace ccf {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

struct Counted {
    const Objective& f;
    int calls = 0;
    double operator()(const Vec& x) {
        ++calls;
        double v;
        try {
            v = f(x);
        } catch (const std::exception&) {
            v = kInf;
        }
        return std::isfinite(v) ? v : kInf;
    }
};

}  // namespace

Vec numerical_gradient(const Objective& f, const Vec& x, double step) {
    Vec g(x.size());
    Vec xp = x;
    for (Eigen::Index i = 0; i < x.size(); ++i) {
        const double h = step * std::max(1.0, std::abs(x(i)));
        xp(i) = x(i) + h;
        const double fp = f(xp);
        xp(i) = x(i) - h;
        const double fm = f(xp);
        xp(i) = x(i);
        g(i) = (fp - fm) / (2.0 * h);
    }
    return g;
}

OptimizeResult bfgs(const Objective& objective, const Vec& x0, const OptimizeOptions& options) {
    Counted f{objective};
    const Eigen::Index n = x0.size();
    OptimizeResult res;
    res.x = x0;
    res.value = f(x0);
    if (!std::isfinite(res.value)) {
        res.log.push_back("bfgs: infeasible start");
        res.evaluations = f.calls;
        return res;
    }
    auto grad = [&](const Vec& x) { return numerical_gradient(std::ref(f), x, options.gradient_step); };
    Vec g = grad(res.x);
    Mat B = Mat::Identity(n, n);   // inverse Hessian approximation
    for (int it = 0; it < options.bfgs_max_iter; ++it) {
        res.iterations = it + 1;
        res.gradient_norm = g.lpNorm<Eigen::Infinity>();
        if (!g.allFinite()) {
            res.log.push_back(fmt::format("bfgs iter {}: non-finite gradient", it));
            break;
        }
        if (res.gradient_norm < options.gradient_tol) {
            res.converged = true;
            break;
        }
        Vec dir = -B * g;
        if (dir.dot(g) >= 0.0) {
            B.setIdentity();
            dir = -g;
        }
        double step = 1.0;
        const double max_move = dir.lpNorm<Eigen::Infinity>();
        if (max_move > 1.0) step = 1.0 / max_move;
        double f_new = kInf;
        Vec x_new;
        const double slope = dir.dot(g);
        for (int ls = 0; ls < 40; ++ls) {
            x_new = res.x + step * dir;
            f_new = f(x_new);
            if (f_new <= res.value + 1e-4 * step * slope) break;
            step *= 0.5;
        }
        if (!(f_new < res.value)) {
            res.log.push_back(fmt::format("bfgs iter {}: line search stalled", it));
            break;
        }
        const Vec g_new = grad(x_new);
        const Vec s = x_new - res.x;
        const Vec y = g_new - g;
        const double improvement = res.value - f_new;
        res.x = x_new;
        res.value = f_new;
        g = g_new;
        const double sy = s.dot(y);
        if (sy > 1e-12 * s.norm() * y.norm()) {
            const double rho = 1.0 / sy;
            const Mat I = Mat::Identity(n, n);
            B = (I - rho * s * y.transpose()) * B * (I - rho * y * s.transpose()) + rho * s * s.transpose();
        }
        res.log.push_back(fmt::format("bfgs iter {}: f = {:.12g}, |g| = {:.3g}", it, f_new, g.lpNorm<Eigen::Infinity>()));
        if (improvement < options.function_tol * std::max(1.0, std::abs(f_new))) {
            res.converged = true;
            break;
        }
    }
    res.gradient_norm = g.lpNorm<Eigen::Infinity>();
    res.evaluations = f.calls;
    return res;
}

OptimizeResult nelder_mead(const Objective& objective, const Vec& x0, const OptimizeOptions& options) {
    Counted f{objective};
    const Eigen::Index n = x0.size();
    std::vector<Vec> pts(static_cast<std::size_t>(n + 1), x0);
    std::vector<double> vals(static_cast<std::size_t>(n + 1));
    vals[0] = f(x0);
    for (Eigen::Index i = 0; i < n; ++i) {
        auto& p = pts[static_cast<std::size_t>(i + 1)];
        p(i) += options.simplex_size * std::max(1.0, std::abs(x0(i)));
        vals[static_cast<std::size_t>(i + 1)] = f(p);
    }
    std::vector<std::size_t> order(pts.size());
    OptimizeResult res;
    for (int it = 0; it < options.simplex_max_iter; ++it) {
        res.iterations = it + 1;
        std::iota(order.begin(), order.end(), 0);
        std::sort(order.begin(), order.end(), [&](auto a, auto b) { return vals[a] < vals[b]; });
        const std::size_t best = order.front(), worst = order.back(), second = order[order.size() - 2];
        double spread = 0.0;
        for (const auto& p : pts) spread = std::max(spread, (p - pts[best]).lpNorm<Eigen::Infinity>());
        const double fspread = vals[worst] - vals[best];
        if (spread < options.simplex_tol ||
            (std::isfinite(fspread) && fspread < options.function_tol * std::max(1.0, std::abs(vals[best])))) {
            res.converged = true;
            break;
        }
        Vec centroid = Vec::Zero(n);
        for (std::size_t k = 0; k + 1 < order.size(); ++k) centroid += pts[order[k]];
        centroid /= static_cast<double>(n);
        const Vec xr = centroid + (centroid - pts[worst]);
        const double fr = f(xr);
        if (fr < vals[best]) {
            const Vec xe = centroid + 2.0 * (centroid - pts[worst]);
            const double fe = f(xe);
            if (fe < fr) {
                pts[worst] = xe;
                vals[worst] = fe;
            } else {
                pts[worst] = xr;
                vals[worst] = fr;
            }
        } else if (fr < vals[second]) {
            pts[worst] = xr;
            vals[worst] = fr;
        } else {
            const bool outside = fr < vals[worst];
            const Vec xc = outside ? Vec(centroid + 0.5 * (xr - centroid)) : Vec(centroid + 0.5 * (pts[worst] - centroid));
            const double fc = f(xc);
            if (fc < (outside ? fr : vals[worst])) {
                pts[worst] = xc;
                vals[worst] = fc;
            } else {
                for (std::size_t k = 1; k < order.size(); ++k) {
                    auto& p = pts[order[k]];
                    p = pts[best] + 0.5 * (p - pts[best]);
                    vals[order[k]] = f(p);
                }
            }
        }
    }
    const auto best = static_cast<std::size_t>(std::min_element(vals.begin(), vals.end()) - vals.begin());
    res.x = pts[best];
    res.value = vals[best];
    res.evaluations = f.calls;
    res.log.push_back(fmt::format("simplex: {} iterations, f = {:.12g}", res.iterations, res.value));
    return res;
}

OptimizeResult minimize(const Objective& f, const Vec& x0, const OptimizeOptions& options) {
    OptimizeResult first = bfgs(f, x0, options);
    OptimizeResult second = nelder_mead(f, first.x, options);
    OptimizeResult out = second.value <= first.value ? second : first;
    out.iterations = first.iterations + second.iterations;
    out.evaluations = first.evaluations + second.evaluations;
    out.log = first.log;
    out.log.insert(out.log.end(), second.log.begin(), second.log.end());
    out.converged = second.converged || first.converged;
    Counted counted{f};
    out.gradient_norm = numerical_gradient(std::ref(counted), out.x, options.gradient_step).lpNorm<Eigen::Infinity>();
    out.evaluations += counted.calls;
    return out;
}

}  // namespace ccf
