#include "oracles/oracles.hpp"

#include "ccf/errors.hpp"
#include "ccf/linalg.hpp"
#include "ccf/models.hpp"
#include "ccf/panel_io.hpp"
#include "ccf/simulate.hpp"
#include "ccf/statespace.hpp"

#include <doctest.h>

#include <random>
#include <sstream>

using namespace ccf;

namespace {

const Date kStart = parse_date("2003-04-01");

Mat random_matrix(int r, int c, std::mt19937_64& rng) {
    std::normal_distribution<double> n;
    return Mat::NullaryExpr(r, c, [&] { return n(rng); });
}

ConditionalMomentCoeffs affine_transition(double c, double T, double q0, double q1) {
    ConditionalMomentCoeffs tr;
    tr.dt = 1.0 / 250;
    tr.c = Vec::Constant(1, c);
    tr.T = Mat::Constant(1, 1, T);
    tr.Q0 = Mat::Constant(1, 1, q0);
    tr.Q1 = {Mat::Constant(1, 1, q1)};
    return tr;
}

CCFMeasurement bare_measurement(int t, Vec y, Mat Htilde) {
    CCFMeasurement m;
    m.date = kStart + std::chrono::days{t};
    m.taus = {0.1};
    m.forwards = {100.0};
    m.rates = {0.0};
    const auto q = y.size() / 2;
    for (Eigen::Index i = 0; i < q; ++i) m.u_grid.push_back(i + 1.0);
    m.y = std::move(y);
    m.H_blocks = {std::move(Htilde)};
    return m;
}

// Synthetic panel at the reference parameters with a given seed and length.
struct SimPanel {
    SimPath path;
    PreparedPanel panel;
};

SimPanel simulated_panel(int dates, std::uint64_t seed) {
    SimConfig cfg;
    cfg.dates = dates;
    std::mt19937_64 rng(seed);
    SimPanel out;
    out.path = euler_simulate(cfg, rng);
    const auto market = synth_market(out.path, cfg, rng);
    auto built = build_panel(market, default_u_grid(), cfg.tenor_basis);
    out.panel = prepare_panel(std::move(built.measurements));
    return out;
}

}  // namespace

TEST_CASE("pseudo-inverse of the identity") {
    const auto p = pseudo_inverse(Mat::Identity(4, 4), 1e-7);
    CHECK(p.rank == 4);
    CHECK(p.log_pseudo_det == doctest::Approx(0.0));
    CHECK((p.inverse - Mat::Identity(4, 4)).norm() < 1e-14);
}

TEST_CASE("pseudo-inverse of a rank-one matrix") {
    Vec v(4);
    v << 1.0, -2.0, 0.5, 3.0;
    const Mat H = v * v.transpose();
    const auto p = pseudo_inverse(H, 1e-7);
    CHECK(p.rank == 1);
    CHECK((p.inverse - H / std::pow(v.squaredNorm(), 2)).norm() < 1e-14);
    CHECK(p.log_pseudo_det == doctest::Approx(std::log(v.squaredNorm())));
}

TEST_CASE("Penrose identity on an ill-conditioned PSD matrix") {
    std::mt19937_64 rng(4);
    const Eigen::HouseholderQR<Mat> qr(random_matrix(8, 8, rng));
    const Mat Q = qr.householderQ();
    Vec ev(8);
    for (int i = 0; i < 8; ++i) ev(i) = std::pow(10.0, -10.0 * i / 7.0);
    const Mat H = Q * ev.asDiagonal() * Q.transpose();
    const auto p = pseudo_inverse(H, 1e-7);
    const Mat back = p.inverse * H * p.inverse;
    CHECK((back - p.inverse).norm() <= 1e-8 * p.inverse.norm());
    CHECK(p.rank == 5);   // singular values above 1e-7 * 8 * 1
}

TEST_CASE("all-degenerate blocks are rejected") {
    CHECK_THROWS_AS(pseudo_inverse(Mat::Zero(3, 3), 1e-7), DegenerateBlockError);
}

TEST_CASE("collapse of a square full-rank system") {
    std::mt19937_64 rng(2);
    const Mat Z = random_matrix(3, 3, rng);
    const Vec y = random_matrix(3, 1, rng), d = Vec::Zero(3);
    const auto c = collapse(y, d, Z, Mat::Identity(3, 3));
    CHECK((c.y_star - Z.lu().solve(y)).norm() < 1e-12);
    CHECK(c.gls_quad < 1e-20);
}

TEST_CASE("collapse of a two-equation one-factor system by hand") {
    Vec y(2), d(2);
    y << 1.0, 3.0;
    d << 0.5, -0.5;
    Mat Z(2, 1);
    Z << 2.0, 1.0;
    Mat Hi = Mat::Zero(2, 2);
    Hi(0, 0) = 1.0 / 0.5;
    Hi(1, 1) = 1.0 / 2.0;
    const double a = 2.0 * 2.0 / 0.5 + 1.0 * 1.0 / 2.0;
    const double ystar = (2.0 * 1.0 / 0.5 + 1.0 * 3.0 / 2.0) / a;
    const double dstar = (2.0 * 0.5 / 0.5 + 1.0 * -0.5 / 2.0) / a;
    const double xhat = ystar - dstar;
    const double e0 = (1.0 - 0.5) - 2.0 * xhat, e1 = (3.0 + 0.5) - 1.0 * xhat;
    const auto c = collapse(y, d, Z, Hi);
    CHECK(c.y_star(0) == doctest::Approx(ystar).epsilon(1e-14));
    CHECK(c.d_star(0) == doctest::Approx(dstar).epsilon(1e-14));
    CHECK(c.H_star(0, 0) == doctest::Approx(1.0 / a).epsilon(1e-14));
    CHECK(c.gls_quad == doctest::Approx(e0 * e0 / 0.5 + e1 * e1 / 2.0).epsilon(1e-13));
    CHECK(c.log_det_H_star == doctest::Approx(-std::log(a)));
}

TEST_CASE("collapse reports a rank deficiency") {
    Mat Z = Mat::Zero(4, 1);
    Vec y = Vec::Ones(4);
    CHECK_THROWS_AS(collapse(y, y, Z, Mat::Identity(4, 4)), RankError);
}

TEST_CASE("collapsed likelihood equals the full Kalman likelihood") {
    std::mt19937_64 rng(31);
    std::normal_distribution<double> n;
    const double sk = 0.5;
    const auto tr = affine_transition(0.002, 0.85, 1e-6, 3e-4);
    std::vector<CCFMeasurement> meas;
    SystemMatrices sys;
    oracle::FullSystem full;
    double v = 0.0133;
    for (int t = 0; t < 12; ++t) {
        const Mat A = random_matrix(6, 6, rng);
        const Mat Ht = A * A.transpose() / 6.0 + 0.1 * Mat::Identity(6, 6);
        DateSystem ds{random_matrix(6, 1, rng), random_matrix(6, 1, rng), tr};
        v = std::max(1e-4, tr.c(0) + tr.T(0, 0) * v + 0.01 * n(rng));
        const Vec y = ds.d + ds.Z * v + sk * Eigen::LLT<Mat>(Ht).matrixL().toDenseMatrix() * random_matrix(6, 1, rng);
        full.y.push_back(y);
        full.d.push_back(ds.d);
        full.Z.push_back(ds.Z);
        full.H.push_back(sk * sk * Ht);
        full.c.push_back(tr.c);
        full.T.push_back(tr.T);
        full.Q0.push_back(tr.Q0);
        full.Q1.push_back(tr.Q1);
        meas.push_back(bare_measurement(t, y, Ht));
        sys.dates.push_back(ds);
    }
    sys.initial = tr;
    const auto st = stationary_moments(tr);
    full.x0 = st.mean;
    full.P0 = st.variance;
    const auto panel = prepare_panel(std::move(meas), {.sbar = 1e-13});
    const auto run = kalman_pass(panel, sys, sk);
    CHECK(run.loglik_full == doctest::Approx(oracle::full_kalman_loglik(full)).epsilon(1e-12));
}

TEST_CASE("exact observations are tracked by the filter") {
    const auto tr = affine_transition(0.0015, 0.9, 1e-8, 1e-4);
    std::mt19937_64 rng(6);
    std::normal_distribution<double> n;
    std::vector<CCFMeasurement> meas;
    SystemMatrices sys;
    sys.initial = tr;
    std::vector<double> truth;
    double v = 0.015;
    Mat Z(4, 1);
    Z << -0.02, -0.08, -0.01, 0.03;
    const Vec d = Vec::Constant(4, -0.001);
    for (int t = 0; t < 200; ++t) {
        v = std::max(1e-4, tr.c(0) + tr.T(0, 0) * v + std::sqrt(tr.Q0(0, 0) + tr.Q1[0](0, 0) * v) * n(rng));
        truth.push_back(v);
        meas.push_back(bare_measurement(t, d + Z * v, Mat::Identity(4, 4)));
        sys.dates.push_back({d, Z, tr});
    }
    const auto run = kalman_pass(prepare_panel(std::move(meas)), sys, 1e-7);
    double worst = 0.0;
    for (int t = 0; t < 200; ++t) worst = std::max(worst, std::abs(run.steps[t].filtered(0) - truth[t]));
    CHECK(worst < 1e-4);
}

TEST_CASE("static state converges to the GLS estimate") {
    const auto still = affine_transition(0.0, 1.0, 0.0, 0.0);
    SystemMatrices sys;
    sys.initial = affine_transition(0.01, 0.5, 1e-4, 0.0);
    Mat Z(2, 1);
    Z << 1.0, 2.0;
    Vec y(2);
    y << 0.3, 0.5;
    std::vector<CCFMeasurement> meas;
    const int n = 400;
    for (int t = 0; t < n; ++t) {
        meas.push_back(bare_measurement(t, y, Mat::Identity(2, 2)));
        sys.dates.push_back({Vec::Zero(2), Z, still});
    }
    const double sk = 0.1;
    const auto run = kalman_pass(prepare_panel(std::move(meas)), sys, sk);
    const double gls = (1.0 * 0.3 + 2.0 * 0.5) / 5.0;
    const double hstar = sk * sk / 5.0;
    const double prior_mean = 0.01 / (1 - 0.5), prior = sys.initial.Q0(0, 0) / (1 - 0.25);
    const double precision = 1.0 / prior + n / hstar;
    CHECK(run.steps.back().filtered(0) == doctest::Approx((prior_mean / prior + n * gls / hstar) / precision).epsilon(1e-9));
    CHECK(run.steps.back().filtered_P(0, 0) == doctest::Approx(1.0 / precision).epsilon(1e-9));
    CHECK(run.steps.back().filtered(0) == doctest::Approx(gls).epsilon(0.05));
}

TEST_CASE("system loadings for the co-jump model") {
    auto sim = simulated_panel(3, 17);
    const ParameterVector theta(ModelTag::Svcdej);
    const auto sys = build_system(theta, sim.panel);
    const auto& m = sim.panel.measurements[0];
    const auto coeffs = riccati_solve(build_model(theta), m.u_grid, m.taus);
    const auto q = m.u_grid.size();
    for (std::size_t k = 0; k < m.taus.size(); ++k) {
        for (std::size_t i = 0; i < q; ++i) {
            const CVec bt = coeffs.beta_tilde(i, k);
            CHECK(std::abs(bt(0)) < 1e-13);
            CHECK(sys.dates[0].Z(k * 2 * q + i, 0) == doctest::Approx(bt(1).real()).epsilon(1e-12));
            CHECK(sys.dates[0].Z(k * 2 * q + q + i, 0) == doctest::Approx(bt(1).imag()).epsilon(1e-12));
            CHECK(sys.dates[0].d(k * 2 * q + i) == doctest::Approx(coeffs.alpha(i, k).real()).epsilon(1e-12));
        }
    }
}

TEST_CASE("zero argument rows carry only discounting") {
    CCFMeasurement m = bare_measurement(0, Vec::Zero(2), Mat::Identity(2, 2));
    m.u_grid = {0.0};
    m.rates = {0.04};
    auto m2 = m;
    m2.date = m.date + std::chrono::days{1};
    const auto panel = prepare_panel({m, m2});
    const auto sys = build_system(ParameterVector(ModelTag::Svcdej), panel);
    CHECK(sys.dates[0].d(0) == doctest::Approx(-0.04 * 0.1).epsilon(1e-14));
    CHECK(sys.dates[0].d(1) == doctest::Approx(0.0));
    CHECK(sys.dates[0].Z(0, 0) == 0.0);
}

TEST_CASE("observed exogenous factor shifts the intercept") {
    ParameterVector ex(ModelTag::SvcdejEx);
    std::vector<CCFMeasurement> meas;
    for (int t = 0; t < 2; ++t) {
        auto m = bare_measurement(t, Vec::Zero(4), Mat::Identity(4, 4));
        m.exogenous = Vec::Constant(1, 1.7);
        meas.push_back(m);
    }
    const auto panel = prepare_panel(meas);
    const auto sys = build_system(ex, panel);
    const auto coeffs = riccati_solve(build_model(ex), {1.0, 2.0}, {0.1});
    Vec x(3);
    x << std::log(100.0), 0.0, 1.7;
    for (std::size_t i = 0; i < 2; ++i) {
        const cplx brute = std::log(model_ccf(coeffs, x, i + 1.0, 0.1));
        CHECK(sys.dates[0].d(i) == doctest::Approx(brute.real()).epsilon(1e-12));
        CHECK(std::remainder(sys.dates[0].d(2 + i) - brute.imag(), 2 * M_PI) == doctest::Approx(0.0).epsilon(1e-12));
    }
}

TEST_CASE("likelihood prefers the true parameters over a perturbed vol-of-vol") {
    // sigma + 0.1 violates the Feller condition at the reference values, so the perturbation goes down.
    ParameterVector truth(ModelTag::Svcdej), perturbed = truth;
    perturbed.set("sigma", truth["sigma"] - 0.1);
    int wins = 0;
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        const auto sim = simulated_panel(30, 1000 + seed);
        const auto a = run_filter(truth, sim.panel);
        const auto b = run_filter(perturbed, sim.panel);
        for (const auto& s : a.steps) REQUIRE(std::isfinite(s.loglik));
        wins += a.loglik > b.loglik;
    }
    CHECK(wins >= 18);
}

TEST_CASE("filtered state tracks the simulated variance") {
    const auto sim = simulated_panel(120, 55);
    const auto run = run_filter(ParameterVector(ModelTag::Svcdej), sim.panel);
    double sa = 0, sb = 0, sab = 0, saa = 0, sbb = 0;
    const double n = static_cast<double>(run.steps.size());
    for (std::size_t t = 0; t < run.steps.size(); ++t) {
        const double a = std::sqrt(run.steps[t].filtered(0)), b = std::sqrt(sim.path.variance[t]);
        sa += a;
        sb += b;
        sab += a * b;
        saa += a * a;
        sbb += b * b;
    }
    const double corr = (sab - sa * sb / n) / std::sqrt((saa - sa * sa / n) * (sbb - sb * sb / n));
    CHECK(corr > 0.95);
}

TEST_CASE("panel and filter CSV round trip") {
    const auto sim = simulated_panel(3, 9);
    std::stringstream panel_csv, cov_csv;
    write_panel_csv(panel_csv, sim.panel.measurements);
    write_covariance_csv(cov_csv, sim.panel.measurements);
    const auto back = read_panel_csv(panel_csv, cov_csv);
    REQUIRE(back.size() == sim.panel.dates());
    for (std::size_t t = 0; t < back.size(); ++t) {
        CHECK((back[t].y - sim.panel.measurements[t].y).norm() == 0.0);
        CHECK((back[t].H_full() - sim.panel.measurements[t].H_full()).norm() <= 1e-12 * back[t].H_full().norm());
        CHECK(back[t].taus == sim.panel.measurements[t].taus);
    }
    const auto run = run_filter(ParameterVector(ModelTag::Svcdej), sim.panel);
    std::stringstream out;
    write_filter_csv(out, sim.panel, run);
    std::string header;
    std::getline(out, header);
    CHECK(header == "date,predicted_v,predicted_var,filtered_v,filtered_var,omega,G,gls_quad,log_det_H_star,loglik");
}
