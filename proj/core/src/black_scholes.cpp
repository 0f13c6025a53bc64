#include "ccf/black_scholes.hpp"

#include "ccf/errors.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

namespace ccf {

double norm_cdf(double x) { return 0.5 * std::erfc(-x / std::numbers::sqrt2); }

double norm_pdf(double x) { return std::exp(-0.5 * x * x) / std::sqrt(2.0 * std::numbers::pi); }

double bs_price_normalized(double m, double total_variance, bool is_call) {
    const double k = std::exp(m);
    if (total_variance <= 0.0) {
        return is_call ? std::max(1.0 - k, 0.0) : std::max(k - 1.0, 0.0);
    }
    const double s = std::sqrt(total_variance);
    const double d1 = -m / s + 0.5 * s;
    const double d2 = d1 - s;
    if (is_call) return norm_cdf(d1) - k * norm_cdf(d2);
    return k * norm_cdf(-d2) - norm_cdf(-d1);
}

double bs_price(double forward, double strike, double tau, double rate, double sigma, bool is_call) {
    const double df = std::exp(-rate * tau);
    const double m = std::log(strike / forward);
    return df * forward * bs_price_normalized(m, sigma * sigma * tau, is_call);
}

double vega(double forward, double strike, double tau, double /*rate*/, double sigma) {
    const double w = sigma * sigma * tau;
    const double m = std::log(strike / forward);
    const double d_plus = -m / std::sqrt(w) + 0.5 * std::sqrt(w);
    return forward * std::sqrt(tau) * norm_pdf(d_plus);
}

double implied_vol(double price, double forward, double strike, double tau, double rate, bool is_call) {
    const double df = std::exp(-rate * tau);
    const double lower = df * (is_call ? std::max(forward - strike, 0.0) : std::max(strike - forward, 0.0));
    const double upper = df * (is_call ? forward : strike);
    if (!(price > lower)) {
        throw BoundsError("implied_vol: price " + std::to_string(price) + " at or below intrinsic bound " +
                              std::to_string(lower),
                          BoundSide::Lower);
    }
    if (!(price < upper)) {
        throw BoundsError("implied_vol: price " + std::to_string(price) + " at or above upper bound " +
                              std::to_string(upper),
                          BoundSide::Upper);
    }

    constexpr double tol = 1e-12;
    auto f = [&](double s) { return bs_price(forward, strike, tau, rate, s, is_call) - price; };

    double lo = 1e-8;
    double hi = 1.0;
    while (f(hi) < 0.0 && hi < 1e3) hi *= 2.0;
    if (f(lo) > 0.0) return lo;

    // Start from the Brenner-Subrahmanyam level, clipped into the bracket.
    double sigma = std::clamp(std::sqrt(2.0 * std::numbers::pi / tau) * price / (df * forward), 0.05, hi);
    double best = std::abs(f(sigma));
    int stalled = 0;
    for (int iter = 0; iter < 200; ++iter) {
        const double fs = f(sigma);
        if (std::abs(fs) < tol) return sigma;
        if (fs > 0.0) hi = std::min(hi, sigma);
        else lo = std::max(lo, sigma);
        if (hi - lo < 1e-15 * hi) return 0.5 * (lo + hi);

        double next = 0.5 * (lo + hi);
        if (stalled < 8) {
            const double v = df * vega(forward, strike, tau, rate, sigma);
            if (v > 0.0) {
                const double newton = sigma - fs / v;
                if (newton > lo && newton < hi) next = newton;
            }
        }
        const double fn = std::abs(f(next));
        if (fn < best) {
            best = fn;
            stalled = 0;
        } else {
            ++stalled;
        }
        sigma = next;
    }
    return sigma;
}

QuoteGreeks quote_greeks(double price, double forward, double strike, double tau, double rate, bool is_call) {
    QuoteGreeks g;
    g.bsiv = implied_vol(price, forward, strike, tau, rate, is_call);
    g.vega = vega(forward, strike, tau, rate, g.bsiv);
    g.total_variance = g.bsiv * g.bsiv * tau;
    return g;
}

}  // namespace ccf
