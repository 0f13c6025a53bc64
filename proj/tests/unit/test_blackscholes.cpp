#include "oracles/oracles.hpp"

#include "ccf/black_scholes.hpp"
#include "ccf/errors.hpp"

#include <doctest.h>

#include <cmath>
#include <numbers>

using namespace ccf;

TEST_CASE("zero volatility call collapses to discounted intrinsic") {
    CHECK(bs_price(100, 90, 0.5, 0.02, 1e-12, true) == doctest::Approx(std::exp(-0.01) * 10.0).epsilon(1e-14));
    CHECK(bs_price(100, 110, 0.5, 0.02, 1e-12, true) == doctest::Approx(0.0));
}

TEST_CASE("put-call parity") {
    const double c = bs_price(100, 95, 0.1, 0.01, 0.2, true);
    const double p = bs_price(100, 95, 0.1, 0.01, 0.2, false);
    CHECK(c - p == doctest::Approx(std::exp(-0.001) * 5.0).epsilon(1e-13));
}

TEST_CASE("ATM call equals the lognormal payoff integral") {
    // E[(F e^{X} - K)^+] with X ~ N(-s^2/2, s^2), integrated by composite Simpson.
    const double s = 0.2, F = 100, K = 100;
    const int n = 200000;
    const double lo = -12 * s, hi = 12 * s, h = (hi - lo) / n;
    auto f = [&](double z) {
        const double x = z - 0.5 * s * s;
        return std::max(F * std::exp(x) - K, 0.0) * std::exp(-0.5 * z * z / (s * s)) / (s * std::sqrt(2 * std::numbers::pi));
    };
    double sum = f(lo) + f(hi);
    for (int j = 1; j < n; ++j) sum += (j % 2 ? 4 : 2) * f(lo + j * h);
    CHECK(bs_price(F, K, 1.0, 0.0, s, true) == doctest::Approx(sum * h / 3).epsilon(1e-10));
}

TEST_CASE("normalized price agrees with the level price") {
    for (double m : {-0.4, -0.05, 0.0, 0.1, 0.3}) {
        const double w = 0.04 * 0.25;
        const bool call = m > 0;
        const double level = bs_price(100, 100 * std::exp(m), 0.25, 0.0, 0.2, call);
        CHECK(100 * bs_price_normalized(m, w, call) == doctest::Approx(level).epsilon(1e-12));
    }
}

TEST_CASE("implied volatility round trip") {
    for (double k : {70.0, 95.0, 100.0, 104.0, 140.0}) {
        for (bool call : {true, false}) {
            const double p = bs_price(100, k, 0.3, 0.02, 0.2, call);
            CHECK(implied_vol(p, 100, k, 0.3, 0.02, call) == doctest::Approx(0.2).epsilon(1e-8));
        }
    }
}

TEST_CASE("price at the intrinsic bound is rejected") {
    const double intrinsic = std::exp(-0.02 * 0.3) * 10.0;
    CHECK_THROWS_AS(implied_vol(intrinsic, 100, 90, 0.3, 0.02, true), BoundsError);
    CHECK_THROWS_AS(implied_vol(std::exp(-0.006) * 100.0, 100, 90, 0.3, 0.02, true), BoundsError);
    try {
        implied_vol(0.0, 100, 90, 0.3, 0.02, false);
        FAIL("expected BoundsError");
    } catch (const BoundsError& e) {
        CHECK(e.side() == BoundSide::Lower);
    }
}

TEST_CASE("deep out-of-the-money put near one tick matches bracketing search") {
    const double F = 100, K = 55, tau = 10.0 / 250;
    for (double price : {0.05, 0.01, 1e-4}) {
        const double iv = implied_vol(price, F, K, tau, 0.0, false);
        CHECK(iv == doctest::Approx(oracle::bisection_iv(price, F, K, tau, 0.0, false)).epsilon(1e-8));
    }
}

TEST_CASE("ATM vega and d+") {
    const double F = 100, tau = 0.25, s = 0.3;
    const double w = s * s * tau;
    CHECK(vega(F, F, tau, 0.0, s) == doctest::Approx(F * std::sqrt(tau) * norm_pdf(0.5 * std::sqrt(w))).epsilon(1e-14));
}

TEST_CASE("vega is non-negative across moneyness and volatility") {
    for (int i = 0; i < 10; ++i) {
        for (int j = 0; j < 10; ++j) {
            const double m = -1.0 + 0.2 * i, s = 0.05 + 0.1 * j;
            CHECK(vega(100, 100 * std::exp(m), 0.2, 0.01, s) >= 0.0);
        }
    }
}

TEST_CASE("vega matches a central difference of the price") {
    for (double k : {80.0, 100.0, 120.0}) {
        const double s = 0.25, h = 1e-6;
        const double fd = (bs_price(100, k, 0.5, 0.0, s + h, true) - bs_price(100, k, 0.5, 0.0, s - h, true)) / (2 * h);
        CHECK(vega(100, k, 0.5, 0.0, s) == doctest::Approx(fd).epsilon(1e-6));
    }
}

TEST_CASE("quote greeks bundle") {
    const double p = bs_price(100, 97, 0.1, 0.0, 0.22, false);
    const auto g = quote_greeks(p, 100, 97, 0.1, 0.0, false);
    CHECK(g.bsiv == doctest::Approx(0.22).epsilon(1e-9));
    CHECK(g.total_variance == doctest::Approx(0.22 * 0.22 * 0.1).epsilon(1e-8));
    CHECK(g.vega == doctest::Approx(vega(100, 97, 0.1, 0.0, 0.22)).epsilon(1e-8));
}
