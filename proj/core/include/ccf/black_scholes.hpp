#pragma once

namespace ccf {

struct QuoteGreeks {
    double bsiv = 0.0;
    double vega = 0.0;
    double total_variance = 0.0;
};

double norm_cdf(double x);
double norm_pdf(double x);

// Discounted Black price of a European option on a forward.
double bs_price(double forward, double strike, double tau, double rate, double sigma, bool is_call);

// Black price written in total variance and log-moneyness m = log(K/F), scaled by 1/F.
double bs_price_normalized(double m, double total_variance, bool is_call);

// Implied volatility by safeguarded Newton iteration; throws BoundsError outside the no-arbitrage range.
double implied_vol(double price, double forward, double strike, double tau, double rate, bool is_call);

// Forward vega F*sqrt(tau)*phi(d+), as used for the observation-noise scale.
double vega(double forward, double strike, double tau, double rate, double sigma);

QuoteGreeks quote_greeks(double price, double forward, double strike, double tau, double rate, bool is_call);

}  // namespace ccf
