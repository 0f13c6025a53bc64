#include "ccf/errors.hpp"
#include "ccf/estimate.hpp"
#include "ccf/optimize.hpp"
#include "ccf/simulate.hpp"

#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

using namespace ccf;

namespace {

PreparedPanel small_panel(int dates, std::uint64_t seed) {
    SimConfig cfg;
    cfg.dates = dates;
    std::mt19937_64 rng(seed);
    const auto path = euler_simulate(cfg, rng);
    const auto market = synth_market(path, cfg, rng);
    auto built = build_panel(market, default_u_grid(), cfg.tenor_basis);
    return prepare_panel(std::move(built.measurements));
}

}  // namespace

TEST_CASE("correlation transform round trip") {
    ParameterVector p(ModelTag::Svcdej);
    p.set("rho", -0.95);
    const Vec z = transform(p);
    const auto names = p.free_names();
    const auto it = std::find(names.begin(), names.end(), "rho");
    REQUIRE(it != names.end());
    const auto k = std::distance(names.begin(), it);
    CHECK(z(k) == doctest::Approx(std::atanh(-0.95)).epsilon(1e-14));
    const ParameterVector back = inverse_transform(z, p);
    for (const auto& name : names) CHECK(back[name] == doctest::Approx(p[name]).epsilon(1e-12));
}

TEST_CASE("correlation at the boundary is clamped") {
    ParameterVector p(ModelTag::Svcdej);
    p.set("rho", -1.0);
    const ParameterVector back = inverse_transform(transform(p), p);
    CHECK(back["rho"] > -1.0);
    CHECK(back["rho"] == doctest::Approx(-1.0).epsilon(1e-7));
}

TEST_CASE("fixed parameters are not transformed") {
    ParameterVector p(ModelTag::Svcdej);
    const auto before = transform(p).size();
    p.fix("kappa");
    CHECK(transform(p).size() == before - 1);
    CHECK_THROWS_AS(inverse_transform(Vec::Zero(before), p), InputError);
}

TEST_CASE("transform jacobian matches finite differences") {
    const ParameterVector p(ModelTag::Svcdej);
    const Vec z = transform(p);
    const Vec jac = transform_jacobian(z, p);
    const auto names = p.free_names();
    const double h = 1e-6;
    for (Eigen::Index i = 0; i < z.size(); ++i) {
        Vec up = z, dn = z;
        up(i) += h;
        dn(i) -= h;
        const auto& name = names[static_cast<std::size_t>(i)];
        const double fd = (inverse_transform(up, p)[name] - inverse_transform(dn, p)[name]) / (2 * h);
        CHECK(jac(i) == doctest::Approx(fd).epsilon(1e-7));
    }
}

TEST_CASE("admissibility penalty is zero inside and grows near the Feller boundary") {
    ParameterVector p(ModelTag::Svcdej);
    CHECK(admissibility_penalty(p) == 0.0);
    const double feller = std::sqrt(2 * p["kappa"] * p["vbar"]);
    p.set("sigma", feller * 0.999);
    const double near = admissibility_penalty(p);
    p.set("sigma", feller * 0.9999);
    CHECK(near > 0.0);
    CHECK(admissibility_penalty(p) > near);
}

TEST_CASE("BFGS on the Rosenbrock function") {
    const Objective rosen = [](const Vec& x) {
        return 100 * std::pow(x(1) - x(0) * x(0), 2) + std::pow(1 - x(0), 2);
    };
    const auto r = bfgs(rosen, Vec{{-1.2, 1.0}}, {.bfgs_max_iter = 500});
    CHECK(r.x(0) == doctest::Approx(1.0).epsilon(1e-4));
    CHECK(r.x(1) == doctest::Approx(1.0).epsilon(1e-4));
}

TEST_CASE("simplex on a shifted quadratic") {
    const Objective f = [](const Vec& x) { return std::pow(x(0) - 2, 2) + 3 * std::pow(x(1) + 1, 2) + 0.5; };
    const auto r = nelder_mead(f, Vec{{0.0, 0.0}});
    CHECK(r.x(0) == doctest::Approx(2.0).epsilon(1e-4));
    CHECK(r.x(1) == doctest::Approx(-1.0).epsilon(1e-4));
    CHECK(r.value == doctest::Approx(0.5).epsilon(1e-8));
}

TEST_CASE("minimize rejects infeasible regions reported as infinity") {
    const Objective f = [](const Vec& x) {
        if (x(0) <= 0) return std::numeric_limits<double>::infinity();
        return x(0) - std::log(x(0));
    };
    const auto r = minimize(f, Vec{{3.0}});
    CHECK(r.x(0) == doctest::Approx(1.0).epsilon(1e-5));
}

TEST_CASE("numerical gradient of a quadratic") {
    const Objective f = [](const Vec& x) { return x.squaredNorm() + x(0) * x(1); };
    const Vec g = numerical_gradient(f, Vec{{1.0, 2.0}}, 1e-5);
    CHECK(g(0) == doctest::Approx(4.0).epsilon(1e-8));
    CHECK(g(1) == doctest::Approx(5.0).epsilon(1e-8));
}

TEST_CASE("sandwich of a diagonal quadratic returns the analytic standard errors") {
    // l_t(z) = -0.5 * a_i (z_i - c_{t,i})^2 with centred c: A = diag(a), B = diag(a^2 var(c)).
    const int T = 200;
    const Vec a{{2.0, 0.5, 8.0}};
    std::mt19937_64 rng(3);
    std::normal_distribution<double> n;
    Mat c(T, 3);
    for (int t = 0; t < T; ++t)
        for (int i = 0; i < 3; ++i) c(t, i) = n(rng);
    for (int i = 0; i < 3; ++i) c.col(i).array() -= c.col(i).mean();
    const auto contrib = [&](const Vec& z) {
        Vec out(T);
        for (int t = 0; t < T; ++t) {
            out(t) = 0;
            for (int i = 0; i < 3; ++i) out(t) -= 0.5 * a(i) * std::pow(z(i) - c(t, i), 2);
        }
        return out;
    };
    const auto s = sandwich_covariance(contrib, Vec::Zero(3), 1e-4, 1e-5);
    CHECK_FALSE(s.ridge_applied);
    for (int i = 0; i < 3; ++i) {
        const double var_c = c.col(i).squaredNorm() / T;
        CHECK(std::sqrt(s.covariance(i, i)) == doctest::Approx(std::sqrt(var_c / T)).epsilon(1e-5));
        CHECK(-s.hessian(i, i) == doctest::Approx(a(i)).epsilon(1e-6));
    }
}

TEST_CASE("sandwich for a misspecified Gaussian location matches the sample standard error") {
    // Working model N(mu, 2^2) for data with unit variance: the robust SE is sd/sqrt(T).
    const int T = 5000;
    std::mt19937_64 rng(11);
    std::normal_distribution<double> n(0.3, 1.0);
    Vec x(T);
    for (int t = 0; t < T; ++t) x(t) = n(rng);
    const double s0 = 2.0;
    const auto contrib = [&](const Vec& z) {
        return Vec((-0.5 * (x.array() - z(0)).square() / (s0 * s0)).matrix());
    };
    const double mean = x.mean();
    const double sd = std::sqrt((x.array() - mean).square().sum() / (T - 1));
    const auto s = sandwich_covariance(contrib, Vec{{mean}}, 1e-4, 1e-5);
    CHECK(std::sqrt(s.covariance(0, 0)) == doctest::Approx(sd / std::sqrt(T)).epsilon(0.05));
}

TEST_CASE("flat direction triggers the ridge") {
    const auto contrib = [](const Vec& z) { return Vec::Constant(10, -z(0) * z(0)); };
    const auto s = sandwich_covariance(contrib, Vec::Zero(2), 1e-4, 1e-5);
    CHECK(s.ridge_applied);
}

TEST_CASE("inadmissible starting point is rejected") {
    const auto panel = small_panel(5, 77);
    ParameterVector p(ModelTag::Svcdej);
    p.set("sigma", 2.0);
    CHECK_THROWS_AS(qml_estimate(panel, p), AdmissibilityError);
}

TEST_CASE("estimation from the truth improves the objective and ends at a stationary point") {
    const auto panel = small_panel(60, 4242);
    ParameterVector start(ModelTag::Svcdej);
    for (const auto& name : start.free_names()) {
        if (name != "sigma" && name != "kappa" && name != "vbar") start.fix(name);
    }
    EstimationOptions opts;
    const auto est = qml_estimate(panel, start, opts);
    CHECK(est.objective >= est.objective_start);
    CHECK(est.names.size() == 3);
    CHECK(est.loglik == doctest::Approx(est.objective * 60).epsilon(1e-12));

    const Objective neg = [&](const Vec& z) {
        const ParameterVector p = inverse_transform(z, est.theta_hat);
        return -average_loglik(p, panel, opts) + admissibility_penalty(p);
    };
    const Vec g = numerical_gradient(neg, transform(est.theta_hat), 1e-5);
    CHECK(g.cwiseAbs().maxCoeff() < 1e-3);

    for (double se : est.standard_errors) {
        CHECK(std::isfinite(se));
        CHECK(se > 0.0);
    }
    CHECK(est.scores.rows() == 60);
    CHECK(est.theta_hat["rho"] == start["rho"]);
}
