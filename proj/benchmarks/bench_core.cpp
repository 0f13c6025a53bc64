#include "ccf/cos_pricer.hpp"
#include "ccf/linalg.hpp"
#include "ccf/models.hpp"
#include "ccf/riccati.hpp"
#include "ccf/simulate.hpp"
#include "ccf/spanning.hpp"
#include "ccf/statespace.hpp"
#include "ccf/surface.hpp"

#include <benchmark/benchmark.h>

#include <random>

using namespace ccf;

namespace {

const ParameterVector kTheta{ModelTag::Svcdej};

Vec reference_state() {
    Vec x(2);
    x << std::log(100.0), 0.015;
    return x;
}

struct Fixture {
    SyntheticMarket market;
    PreparedPanel panel;

    explicit Fixture(int dates) {
        SimConfig cfg;
        cfg.dates = dates;
        std::mt19937_64 rng(17);
        market = synth_market(euler_simulate(cfg, rng), cfg, rng);
        panel = prepare_panel(build_panel(market, default_u_grid(), cfg.tenor_basis).measurements);
    }
};

const Fixture& fixture() {
    static const Fixture f(40);
    return f;
}

void riccati_grid(benchmark::State& state) {
    const AffineModel model = build_model(kTheta);
    const std::vector<double> taus{10 / 250.0, 30 / 250.0, 60 / 250.0};
    for (auto _ : state) benchmark::DoNotOptimize(riccati_solve(model, default_u_grid(), taus));
}
BENCHMARK(riccati_grid)->Unit(benchmark::kMillisecond);

void cos_slice(benchmark::State& state) {
    const AffineModel model = build_model(kTheta);
    const CosPricer pricer(model, {30 / 250.0}, reference_state());
    std::vector<double> strikes;
    for (int i = -40; i <= 20; ++i) strikes.push_back(100.0 * (1.0 + 0.01 * i));
    for (auto _ : state) benchmark::DoNotOptimize(pricer.otm_prices(0, reference_state(), 100.0, strikes, 0.0));
}
BENCHMARK(cos_slice)->Unit(benchmark::kMicrosecond);

void span_date(benchmark::State& state) {
    const auto& f = fixture();
    SyntheticMarket one;
    one.slices.assign(f.market.slices.begin(), f.market.slices.begin() + 3);
    for (auto _ : state) benchmark::DoNotOptimize(build_panel(one, default_u_grid(), 250.0));
}
BENCHMARK(span_date)->Unit(benchmark::kMillisecond);

void covariance_block(benchmark::State& state) {
    const auto& s = fixture().market.slices.front();
    CovarianceNodes nodes;
    for (std::size_t i = 0; i < s.strike.size(); ++i) {
        nodes.m.push_back(std::log(s.strike[i] / s.forward));
        nodes.bsiv.push_back(s.bsiv[i]);
        nodes.vega.push_back(s.vega[i]);
        nodes.dm.push_back(i == 0 ? 0.0 : nodes.m[i] - nodes.m[i - 1]);
    }
    const auto u = default_u_grid();
    const std::vector<cplx> phi(u.size(), cplx(0.9, 0.1));
    for (auto _ : state) benchmark::DoNotOptimize(measurement_covariance(nodes, u, phi, s.forward));
}
BENCHMARK(covariance_block)->Unit(benchmark::kMicrosecond);

void spline_covariance_block(benchmark::State& state) {
    const auto& s = fixture().market.slices.front();
    std::vector<RawQuote> quotes;
    const Date expiry = s.date + std::chrono::days{s.calendar_days};
    for (std::size_t i = 0; i < s.strike.size(); ++i) {
        quotes.push_back({s.date, expiry, false, s.strike[i], s.put_noisy[i], s.put_noisy[i], std::nullopt, {}});
        quotes.push_back({s.date, expiry, true, s.strike[i], s.call_noisy[i], s.call_noisy[i], std::nullopt, {}});
    }
    RateCurve curve;
    curve.add(s.date, s.calendar_days, s.rate);
    SliceOptions options;
    options.day_count = 250.0;
    options.forward = s.forward;
    const OptionSlice slice = make_slice(quotes, curve, options);
    const PreparedSurface surface = fit_surface(slice, select_knots(slice));
    const auto u = default_u_grid();
    const auto phi = span_ccf(surface, u);
    for (auto _ : state) benchmark::DoNotOptimize(spline_covariance(surface, u, phi));
}
BENCHMARK(spline_covariance_block)->Unit(benchmark::kMillisecond);

void filter_pass(benchmark::State& state) {
    const auto& f = fixture();
    const SystemMatrices system = build_system(kTheta, f.panel);
    for (auto _ : state) benchmark::DoNotOptimize(kalman_pass(f.panel, system, kTheta["sigma_kappa"]));
}
BENCHMARK(filter_pass)->Unit(benchmark::kMillisecond);

void pseudo_inverse_block(benchmark::State& state) {
    const auto n = state.range(0);
    std::mt19937_64 rng(3);
    std::normal_distribution<double> z;
    const Mat a = Mat::NullaryExpr(n, n, [&] { return z(rng); });
    const Mat block = a * a.transpose();
    for (auto _ : state) benchmark::DoNotOptimize(pseudo_inverse(block, 1e-7));
}
BENCHMARK(pseudo_inverse_block)->Arg(40)->Arg(120)->Unit(benchmark::kMicrosecond);

}  // namespace

BENCHMARK_MAIN();
