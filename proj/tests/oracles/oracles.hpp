#pragma once

// Independent reference implementations used only by tests.

#include <algorithm>
#include <cmath>
#include <complex>
#include <functional>
#include <numbers>
#include <random>
#include <vector>

#include <Eigen/Dense>

namespace oracle {

using cplx = std::complex<double>;

struct HestonParams {
    double kappa, theta, sigma, rho;
};

// E[exp(i u log(F_T/F_t))] for Heston written on the forward; u may be complex.
inline cplx heston_cf(cplx u, double tau, double v, const HestonParams& p) {
    const cplx i(0.0, 1.0);
    const cplx a = p.kappa - p.rho * p.sigma * i * u;
    const cplx d = std::sqrt(a * a + p.sigma * p.sigma * (i * u + u * u));
    const cplx g = (a - d) / (a + d);
    const cplx e = std::exp(-d * tau);
    const cplx B = (a - d) / (p.sigma * p.sigma) * (1.0 - e) / (1.0 - g * e);
    const cplx A = p.kappa * p.theta / (p.sigma * p.sigma) * ((a - d) * tau - 2.0 * std::log((1.0 - g * e) / (1.0 - g)));
    return std::exp(A + B * v);
}

// Carr-Madan damped call transform, integrated by composite Simpson on [0, u_max].
inline double carr_madan_call(const std::function<cplx(cplx)>& cf_log_return, double forward, double strike, double tau,
                              double rate, double damping = 1.5, double u_max = 400.0, int panels = 40000) {
    const cplx i(0.0, 1.0);
    const double k = std::log(strike / forward);
    auto integrand = [&](double u) {
        const cplx arg = u - (damping + 1.0) * i;
        const cplx psi = cf_log_return(arg) / (damping * damping + damping - u * u + i * (2.0 * damping + 1.0) * u);
        return (std::exp(-i * u * k) * psi).real();
    };
    const double h = u_max / panels;
    double sum = integrand(0.0) + integrand(u_max);
    for (int j = 1; j < panels; ++j) sum += (j % 2 ? 4.0 : 2.0) * integrand(j * h);
    const double integral = sum * h / 3.0;
    return std::exp(-rate * tau) * forward * std::exp(-damping * k) / std::numbers::pi * integral;
}

inline double norm_cdf(double x) { return 0.5 * std::erfc(-x / std::numbers::sqrt2); }

inline double black(double forward, double strike, double tau, double rate, double vol, bool call) {
    const double s = vol * std::sqrt(tau);
    const double d1 = std::log(forward / strike) / s + 0.5 * s;
    const double d2 = d1 - s;
    const double df = std::exp(-rate * tau);
    return call ? df * (forward * norm_cdf(d1) - strike * norm_cdf(d2))
                : df * (strike * norm_cdf(-d2) - forward * norm_cdf(-d1));
}

// Plain bisection implied volatility.
inline double bisection_iv(double price, double forward, double strike, double tau, double rate, bool call) {
    double lo = 1e-9, hi = 10.0;
    for (int it = 0; it < 300; ++it) {
        const double mid = 0.5 * (lo + hi);
        (black(forward, strike, tau, rate, mid, call) > price ? hi : lo) = mid;
    }
    return 0.5 * (lo + hi);
}

// Durrleman's density-positivity function for total variance w with slope w1 and curvature w2 at m.
inline double durrleman(double m, double w, double w1, double w2) {
    const double a = 1.0 - m * w1 / (2.0 * w);
    return a * a - w1 * w1 / 4.0 * (1.0 / w + 0.25) + 0.5 * w2;
}

// Dense check that the linear wing w(m) = w_edge + slope (m - m_edge), m >= m_edge, has g >= 0.
inline bool linear_wing_scan(double m_edge, double w_edge, double slope, double m_max = 60.0, int points = 200000) {
    for (int j = 0; j <= points; ++j) {
        const double m = m_edge + (m_max - m_edge) * j / points;
        const double w = w_edge + slope * (m - m_edge);
        if (w <= 0.0 || durrleman(m, w, slope, 0.0) < -1e-12) return false;
    }
    return true;
}

// E[exp(i u X)] for X ~ N(mean, var) by Gauss-Hermite-free dense trapezoid quadrature of the density.
inline cplx gaussian_cf_quadrature(double u, double mean, double var, int points = 20001) {
    const double sd = std::sqrt(var);
    const double lo = mean - 12.0 * sd, hi = mean + 12.0 * sd;
    const double h = (hi - lo) / (points - 1);
    cplx sum = 0.0;
    for (int j = 0; j < points; ++j) {
        const double x = lo + j * h;
        const double w = (j == 0 || j == points - 1) ? 0.5 : 1.0;
        sum += w * std::exp(cplx(0.0, u * x)) * std::exp(-0.5 * (x - mean) * (x - mean) / var);
    }
    return sum * h / (sd * std::sqrt(2.0 * std::numbers::pi));
}

// Full-dimensional Kalman filter Gaussian log-likelihood without the 2 pi constant.
struct FullSystem {
    std::vector<Eigen::VectorXd> y, d;
    std::vector<Eigen::MatrixXd> Z, H;
    std::vector<Eigen::VectorXd> c;
    std::vector<Eigen::MatrixXd> T, Q0;
    std::vector<std::vector<Eigen::MatrixXd>> Q1;
    Eigen::VectorXd x0;
    Eigen::MatrixXd P0;
    double floor = 1e-10;
};

inline double full_kalman_loglik(const FullSystem& s) {
    Eigen::VectorXd x = s.x0;
    Eigen::MatrixXd P = s.P0;
    double ll = 0.0;
    for (std::size_t t = 0; t < s.y.size(); ++t) {
        const Eigen::VectorXd v = s.y[t] - s.d[t] - s.Z[t] * x;
        const Eigen::MatrixXd F = s.Z[t] * P * s.Z[t].transpose() + s.H[t];
        const Eigen::MatrixXd Fi = F.inverse();
        ll += -0.5 * (std::log(F.determinant()) + v.dot(Fi * v));
        const Eigen::MatrixXd K = P * s.Z[t].transpose() * Fi;
        x = x + K * v;
        P = P - K * s.Z[t] * P;
        for (Eigen::Index j = 0; j < x.size(); ++j) x(j) = std::max(x(j), s.floor);
        Eigen::MatrixXd Q = s.Q0[t];
        for (Eigen::Index j = 0; j < x.size(); ++j) Q += s.Q1[t][static_cast<std::size_t>(j)] * x(j);
        x = s.c[t] + s.T[t] * x;
        P = s.T[t] * P * s.T[t].transpose() + Q;
    }
    return ll;
}

// One-step Euler draws of the variance coordinate of a double-exponential co-jump model.
struct VarianceStepParams {
    double kappa, vbar, sigma, delta, p_minus, mu_v;
};

inline std::vector<double> euler_variance_draws(const VarianceStepParams& p, double v, double dt, std::size_t n,
                                                unsigned long long seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> z;
    std::uniform_real_distribution<double> u01(0.0, 1.0);
    std::exponential_distribution<double> jump(1.0 / p.mu_v);
    std::vector<double> out(n);
    for (auto& x : out) {
        double next = v + p.kappa * (p.vbar - v) * dt + p.sigma * std::sqrt(v * dt) * z(rng);
        if (u01(rng) < p.delta * v * dt && u01(rng) < p.p_minus) next += jump(rng);
        x = next;
    }
    return out;
}

}  // namespace oracle
