#include "oracles/oracles.hpp"

#include "ccf/errors.hpp"
#include "ccf/models.hpp"
#include "ccf/moments.hpp"
#include "ccf/riccati.hpp"

#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>

using namespace ccf;

namespace {

ParameterVector reference_theta() { return ParameterVector(ModelTag::Svcdej); }

Vec state(double v) {
    Vec x(2);
    x << 0.0, v;
    return x;
}

bool listed(const Admissibility& a, const std::string& name) {
    return std::find(a.violations.begin(), a.violations.end(), name) != a.violations.end();
}

}  // namespace

TEST_CASE("zero tenor returns the initial condition") {
    const auto model = build_model(reference_theta());
    CVec b0 = CVec::Zero(2);
    b0(0) = I * 3.0;
    const std::vector<double> taus{0.0};
    const auto path = solve_riccati_path(model, b0, taus);
    CHECK(std::abs(path[0].alpha) == 0.0);
    CHECK(std::abs(path[0].beta(0) - I * 3.0) == 0.0);
    CHECK(std::abs(path[0].beta(1)) == 0.0);
}

TEST_CASE("return loading stays at iu for the co-jump model") {
    const auto coeffs = riccati_solve(build_model(reference_theta()), default_u_grid(), {0.04, 0.12, 0.24, 1.0});
    for (std::size_t iu = 0; iu < coeffs.u_grid().size(); ++iu) {
        for (std::size_t it = 0; it < coeffs.tau_grid().size(); ++it) {
            CHECK(std::abs(coeffs.beta(iu, it)(0) - I * coeffs.u_grid()[iu]) < 1e-13);
            CHECK(std::abs(coeffs.beta_tilde(iu, it)(0)) < 1e-13);
        }
    }
}

TEST_CASE("variance loading matches the closed-form Heston coefficient") {
    const oracle::HestonParams hp{8.0, 0.015, 0.45, -0.95};
    ParameterVector p = reference_theta();
    AffineModel m = build_model(p);
    m.jumps.clear();
    m.K1(0, 1) = -0.5;
    const std::vector<double> taus{10.0 / 250, 30.0 / 250, 60.0 / 250};
    const auto coeffs = riccati_solve(m, default_u_grid(), taus);
    double worst = 0.0;
    for (std::size_t iu = 0; iu < 20; ++iu) {
        for (std::size_t it = 0; it < taus.size(); ++it) {
            const double u = coeffs.u_grid()[iu];
            const cplx exact = std::log(oracle::heston_cf(u, taus[it], 0.02, hp) / oracle::heston_cf(u, taus[it], 0.01, hp)) / 0.01;
            worst = std::max(worst, std::abs(coeffs.beta(iu, it)(1) - exact));
        }
    }
    CHECK(worst < 1e-8);
}

TEST_CASE("characteristic function at zero is the discount factor") {
    const double r = 0.03, tau = 0.5;
    const auto coeffs = riccati_solve(build_model(reference_theta(), {.rate = r}), {0.0}, {tau});
    for (double v : {0.001, 0.015, 0.2}) {
        CHECK(std::abs(model_ccf(coeffs, state(v), 0.0, tau) - std::exp(-r * tau)) < 1e-13);
    }
}

TEST_CASE("log CCF is affine in the variance") {
    const double tau = 30.0 / 250;
    const auto coeffs = riccati_solve(build_model(reference_theta()), default_u_grid(), {tau});
    for (std::size_t iu = 0; iu < 20; ++iu) {
        const double u = coeffs.u_grid()[iu];
        const cplx gap = std::log(model_ccf(coeffs, state(0.03), u, tau) / model_ccf(coeffs, state(0.015), u, tau));
        CHECK(std::abs(gap - coeffs.beta(iu, 0)(1) * 0.015) < 1e-12);
    }
}

TEST_CASE("co-jump CCF agrees with an Euler Monte Carlo of the risk-neutral dynamics") {
    const auto p = reference_theta();
    const double tau = 10.0 / 250, u = 5.0, v0 = 0.015;
    const int steps = 40;
    const std::size_t paths = 1'000'000;
    const double dt = tau / steps;
    const double kappa = p["kappa"], vbar = p["vbar"], sigma = p["sigma"], rho = p["rho"], delta = p["delta"];
    const double pm = p["p_minus"], ep = p["eta_plus"], em = p["eta_minus"], mv = p["mu_v"];
    const double comp = (1 - pm) / (1 - ep) + pm / (1 + em) - 1;

    std::mt19937_64 rng(2024);
    std::normal_distribution<double> z;
    std::uniform_real_distribution<double> uni(0.0, 1.0);
    std::exponential_distribution<double> unit_exp(1.0);
    double re = 0, im = 0, re2 = 0, im2 = 0;
    for (std::size_t n = 0; n < paths; ++n) {
        double x = 0, v = v0;
        for (int s = 0; s < steps; ++s) {
            const double vp = std::max(v, 0.0);
            const double z1 = z(rng), z2 = rho * z1 + std::sqrt(1 - rho * rho) * z(rng);
            double jx = 0, jv = 0;
            if (uni(rng) < delta * vp * dt) {
                if (uni(rng) < pm) {
                    jx = -em * unit_exp(rng);
                    jv = mv * unit_exp(rng);
                } else {
                    jx = ep * unit_exp(rng);
                }
            }
            x += (-0.5 - comp * delta) * vp * dt + std::sqrt(vp * dt) * z1 + jx;
            v += kappa * (vbar - vp) * dt + sigma * std::sqrt(vp * dt) * z2 + jv;
        }
        const double c = std::cos(u * x), s = std::sin(u * x);
        re += c;
        im += s;
        re2 += c * c;
        im2 += s * s;
    }
    const double N = static_cast<double>(paths);
    re /= N;
    im /= N;
    const double se_re = std::sqrt((re2 / N - re * re) / N), se_im = std::sqrt((im2 / N - im * im) / N);
    const auto coeffs = riccati_solve(build_model(p), {u}, {tau});
    const cplx phi = model_ccf(coeffs, state(v0), u, tau);
    CHECK(std::abs(phi.real() - re) < 3 * se_re);
    CHECK(std::abs(phi.imag() - im) < 3 * se_im);
}

TEST_CASE("transition slope is the exponential of the effective mean reversion") {
    const auto p = reference_theta();
    const double dt = 1.0 / 250;
    const auto c = transition_coeffs(build_physical_model(p), dt, state(0.0));
    const double g1 = -p["kappa"] + p["p_minus"] * p["delta"] * p["mu_v"];
    CHECK(c.T(0, 0) == doctest::Approx(std::exp(g1 * dt)).epsilon(1e-12));
    const double g0 = p["kappa"] * p["vbar"];
    CHECK(c.c(0) == doctest::Approx(g0 * std::expm1(g1 * dt) / g1).epsilon(1e-10));
}

TEST_CASE("transition moments vanish continuously as dt shrinks") {
    const auto c = transition_coeffs(build_physical_model(reference_theta()), 1e-8, state(0.0));
    CHECK(std::abs(c.c(0)) < 1e-8);
    CHECK(std::abs(c.T(0, 0) - 1.0) < 1e-7);
    CHECK(std::abs(c.Q0(0, 0)) < 1e-9);
    CHECK(std::abs(c.Q1[0](0, 0)) < 1e-7);
}

TEST_CASE("closed-form and finite-difference moments agree") {
    const auto model = build_physical_model(reference_theta());
    const auto a = transition_coeffs(model, 1.0 / 250, state(0.0), {.method = MomentMethod::ClosedForm});
    const auto b = transition_coeffs(model, 1.0 / 250, state(0.0), {.method = MomentMethod::FiniteDifference});
    CHECK(a.c(0) == doctest::Approx(b.c(0)).epsilon(1e-6));
    CHECK(a.T(0, 0) == doctest::Approx(b.T(0, 0)).epsilon(1e-8));
    CHECK(a.Q0(0, 0) == doctest::Approx(b.Q0(0, 0)).epsilon(1e-4));
    CHECK(a.Q1[0](0, 0) == doctest::Approx(b.Q1[0](0, 0)).epsilon(1e-4));
}

TEST_CASE("one-step variance moments agree with Euler draws") {
    const auto p = reference_theta();
    const double dt = 1.0 / 250, v0 = 0.015;
    const auto c = transition_coeffs(build_physical_model(p), dt, state(v0));
    const auto draws = oracle::euler_variance_draws(
        {p["kappa"], p["vbar"], p["sigma"], p["delta"], p["p_minus"], p["mu_v"]}, v0, dt, 1'000'000, 99);
    double m1 = 0, m2 = 0, m4 = 0;
    for (double d : draws) m1 += d;
    m1 /= draws.size();
    for (double d : draws) {
        m2 += (d - m1) * (d - m1);
        m4 += std::pow(d - m1, 4);
    }
    m2 /= draws.size();
    m4 /= draws.size();
    const double mean = c.c(0) + c.T(0, 0) * v0;
    const double var = c.variance(Vec::Constant(1, v0))(0, 0);
    CHECK(std::abs(mean - m1) < 3 * std::sqrt(m2 / draws.size()));
    CHECK(std::abs(var - m2) < 3 * std::sqrt((m4 - m2 * m2) / draws.size()));
}

TEST_CASE("stationary moments are a fixed point of the recursion") {
    const auto c = transition_coeffs(build_physical_model(reference_theta()), 1.0 / 250, state(0.0));
    const auto s = stationary_moments(c);
    CHECK(s.mean(0) == doctest::Approx(c.c(0) + c.T(0, 0) * s.mean(0)).epsilon(1e-12));
    const double var = c.T(0, 0) * s.variance(0, 0) * c.T(0, 0) + c.variance(s.mean)(0, 0);
    CHECK(s.variance(0, 0) == doctest::Approx(var).epsilon(1e-10));
    CHECK(s.mean(0) == doctest::Approx(reference_theta()["kappa"] * 0.015 / (8.0 - 3.5)).epsilon(1e-10));
}

TEST_CASE("admissibility of the reference parameters") {
    CHECK(admissible(reference_theta()).ok);
}

TEST_CASE("zero vol-of-vol keeps the Feller condition") {
    auto p = reference_theta();
    p.set("sigma", 0.0);
    CHECK_FALSE(listed(admissible(p), "feller"));
}

TEST_CASE("slow mean reversion against jump push breaks stationarity") {
    auto p = reference_theta();
    p.set("kappa", 3.0);
    const auto a = admissible(p);
    CHECK_FALSE(a.ok);
    CHECK(listed(a, "stationarity"));
    CHECK_THROWS_AS(build_model(p), AdmissibilityError);
}

TEST_CASE("jump transform equals one at the origin") {
    for (auto tag : {ModelTag::Svcdej, ModelTag::Svcj, ModelTag::Svcej, ModelTag::SvcdejEx}) {
        const auto m = build_model(ParameterVector(tag));
        const std::vector<cplx> zero(static_cast<std::size_t>(m.dim_state), 0.0);
        for (const auto& j : m.jumps) CHECK(std::abs(j.transform(zero) - 1.0) < 1e-15);
    }
}

TEST_CASE("expected relative jump size") {
    CHECK(mean_relative_jump(reference_theta()) == doctest::Approx(0.3 / 0.98 + 0.7 / 1.05 - 1.0).epsilon(1e-15));
}

TEST_CASE("jump transform pole is reported") {
    const auto m = build_model(reference_theta());
    const std::vector<cplx> pole{1.0 / 0.02, 0.0};
    CHECK_THROWS_AS(m.jumps[0].transform(pole), PoleError);
}

TEST_CASE("extended model with inert exogenous loadings reduces to the base model") {
    ParameterVector ex(ModelTag::SvcdejEx);
    ex.set("gamma", 0.0);
    ex.set("q", 0.0);
    const std::vector<double> taus{10.0 / 250, 60.0 / 250};
    const auto a = riccati_solve(build_model(ex), default_u_grid(), taus);
    const auto b = riccati_solve(build_model(reference_theta()), default_u_grid(), taus);
    for (double v : {0.005, 0.04}) {
        Vec x3(3);
        x3 << 0.1, v, 2.5;
        for (double u : default_u_grid()) {
            for (double tau : taus) {
                CHECK(std::abs(model_ccf(a, x3, u, tau) - model_ccf(b, x3.head(2), u, tau)) < 1e-12);
            }
        }
    }
}

TEST_CASE("off-grid lookups throw") {
    const auto coeffs = riccati_solve(build_model(reference_theta()), {1.0, 2.0}, {0.1});
    CHECK_THROWS_AS(coeffs.u_index(1.5), LookupError);
    CHECK_THROWS_AS(coeffs.tau_index(0.2), LookupError);
}
