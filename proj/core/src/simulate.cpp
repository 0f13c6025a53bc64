#include "ccf/simulate.hpp"

#include "ccf/black_scholes.hpp"
#include "ccf/errors.hpp"
#include "ccf/models.hpp"
#include "ccf/surface.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <fmt/format.h>
#include <mutex>
#include <optional>
#include <ostream>
#include <thread>

namespace ccf {

std::uint64_t derive_seed(std::uint64_t master, std::uint64_t counter) {
    std::uint64_t z = master + 0x9E3779B97F4A7C15ULL * (counter + 1);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

void SimConfig::validate() const {
    if (!(dt > 0.0)) throw ConfigError("simulation: dt must be positive");
    if (dates < 1) throw ConfigError("simulation: at least one date is required");
    if (substeps < 1) throw ConfigError("simulation: substeps must be at least 1");
    if (replications < 1) throw ConfigError("simulation: replications must be at least 1");
    if (tenor_days.empty()) throw ConfigError("simulation: tenor list is empty");
    for (int d : tenor_days) {
        if (d < 2) throw ConfigError(fmt::format("simulation: tenor of {} day(s) is below the two-day minimum", d));
    }
    if (!(forward0 > 0.0) || variance0 < 0.0) throw ConfigError("simulation: invalid initial state");
    if (!(strike_step > 0.0) || !(m_low_atm < 0.0) || !(m_high_atm > 0.0)) {
        throw ConfigError("simulation: invalid strike-grid rule");
    }
    const auto adm = admissible(theta);
    if (!adm) throw AdmissibilityError("simulation: inadmissible parameters", adm.violations);
}

Vec SimPath::state(std::size_t t) const {
    Vec x(exogenous.empty() ? 2 : 3);
    x(0) = log_forward.at(t);
    x(1) = variance.at(t);
    if (!exogenous.empty()) x(2) = exogenous.at(t);
    return x;
}

namespace {

using Normal = std::normal_distribution<double>;
using Uniform = std::uniform_real_distribution<double>;

double exp_draw(double mean, std::mt19937_64& rng) { return std::exponential_distribution<double>(1.0 / mean)(rng); }

Vec sample_jump(const ParameterVector& p, std::size_t component, int n, std::mt19937_64& rng) {
    Vec j = Vec::Zero(n);
    switch (p.tag()) {
        case ModelTag::Svcdej:
        case ModelTag::SvcdejEx:
            if (Uniform(0.0, 1.0)(rng) < p["p_minus"]) {
                j(0) = -exp_draw(p["eta_minus"], rng);
                j(1) = exp_draw(p["mu_v"], rng);
            } else {
                j(0) = exp_draw(p["eta_plus"], rng);
            }
            break;
        case ModelTag::Svcj:
            j(1) = exp_draw(p["mu_v"], rng);
            j(0) = Normal(p["mu_j"], p["sigma_j"])(rng);
            break;
        case ModelTag::Svcej:
            if (component == 0) {
                j(0) = -exp_draw(p["eta_minus"], rng);
                j(1) = exp_draw(p["mu_v"], rng);
            } else {
                j(0) = exp_draw(p["eta_plus"], rng);
            }
            break;
    }
    return j;
}

Vec correlated_normal(const Mat& cov, std::mt19937_64& rng) {
    const Eigen::Index n = cov.rows();
    Vec z(n);
    Normal normal;
    for (Eigen::Index i = 0; i < n; ++i) z(i) = normal(rng);
    Eigen::LDLT<Mat> ldlt(cov);
    const Vec scaled = ldlt.vectorD().cwiseMax(0.0).cwiseSqrt().cwiseProduct(z);
    const Vec lz = ldlt.matrixL() * scaled;
    return ldlt.transpositionsP().transpose() * lz;
}

}  // namespace

SimPath euler_simulate(const SimConfig& config, std::mt19937_64& rng) {
    config.validate();
    const ParameterVector& theta = config.theta;
    const AffineModel model = build_physical_model(theta);
    const int n = model.dim_state;
    const bool extended = theta.tag() == ModelTag::SvcdejEx;
    const bool separate_h = extended && model.K1(2, 2) == 0.0;
    const double h = config.dt / config.substeps;
    const double sqrt_h = std::sqrt(h);

    Vec x = Vec::Zero(n);
    x(0) = std::log(config.forward0);
    x(1) = config.variance0;
    if (extended) x(2) = config.exogenous0;

    SimPath path;
    auto record = [&](int t, int jumps) {
        path.dates.push_back(config.start + std::chrono::days{t});
        path.log_forward.push_back(x(0));
        path.variance.push_back(std::max(x(1), 0.0));
        if (extended) path.exogenous.push_back(std::max(x(2), 0.0));
        path.jumps.push_back(jumps);
    };
    record(0, 0);

    Normal normal;
    Uniform uniform(0.0, 1.0);
    for (int t = 1; t < config.dates; ++t) {
        int jumps = 0;
        for (int s = 0; s < config.substeps; ++s) {
            Vec xp = x;
            for (int k = 1; k < n; ++k) xp(k) = std::max(xp(k), 0.0);
            Vec dx = (model.K0 + model.K1 * xp) * h;
            Mat cov = model.H0;
            for (int k = 0; k < n; ++k) {
                if (xp(k) != 0.0 && k > 0) cov += model.H1[k] * xp(k);
            }
            dx += correlated_normal(cov, rng) * sqrt_h;
            for (std::size_t c = 0; c < model.jumps.size(); ++c) {
                const auto& comp = model.jumps[c];
                const double intensity = comp.l0 + comp.l1.dot(xp);
                if (uniform(rng) < intensity * h) {
                    dx += sample_jump(theta, c, n, rng);
                    ++jumps;
                }
            }
            if (separate_h) {
                const double hp = xp(2);
                dx(2) = theta["kappa_h"] * (theta["hbar"] - hp) * h + theta["sigma_h"] * std::sqrt(hp) * sqrt_h * normal(rng);
            }
            x += dx;
        }
        record(t, jumps);
    }
    return path;
}

std::vector<RawQuote> SyntheticMarket::quotes() const {
    std::vector<RawQuote> out;
    for (const auto& s : slices) {
        const Date expiry = s.date + std::chrono::days{s.calendar_days};
        for (std::size_t i = 0; i < s.strike.size(); ++i) {
            RawQuote put{s.date, expiry, false, s.strike[i], s.put_noisy[i], s.put_noisy[i], std::nullopt, {}};
            RawQuote call{s.date, expiry, true, s.strike[i], s.call_noisy[i], s.call_noisy[i], std::nullopt, {}};
            out.push_back(std::move(put));
            out.push_back(std::move(call));
        }
    }
    return out;
}

SyntheticMarket synth_market(const SimPath& path, const SimConfig& config, std::mt19937_64& rng, DiagnosticLog* log) {
    config.validate();
    const ParameterVector& theta = config.theta;
    const AffineModel model = build_model(theta, {.rate = 0.0});
    std::vector<double> taus;
    for (int d : config.tenor_days) taus.push_back(d / config.tenor_basis);

    Vec range_state = path.state(0);
    double vmax = *std::max_element(path.variance.begin(), path.variance.end());
    range_state(1) = config.range_variance > 0.0 ? config.range_variance : std::max(vmax, 4.0 * theta["vbar"]);
    if (!path.exogenous.empty()) range_state(2) = *std::max_element(path.exogenous.begin(), path.exogenous.end());
    const CosPricer pricer(model, taus, range_state, config.cos);
    std::optional<CosPricer> extended;

    const double sigma_kappa = theta["sigma_kappa"];
    SyntheticMarket market;
    market.path = path;
    market.tenor_days = config.tenor_days;
    Normal normal;
    for (std::size_t t = 0; t < path.dates.size(); ++t) {
        const Vec state = path.state(t);
        const double forward = std::exp(state(0));
        for (std::size_t j = 0; j < taus.size(); ++j) {
            const double tau = taus[j];
            SyntheticSlice s;
            s.date = path.dates[t];
            s.calendar_days = config.tenor_days[j];
            s.tau = tau;
            s.forward = forward;
            s.rate = config.rate;
            // Dates with almost no variance decay slowly in u; they use a longer expansion.
            const CosPricer* use = &pricer;
            const double atm_strike[] = {forward};
            double atm_price;
            try {
                atm_price = pricer.puts(j, state, forward, atm_strike, config.rate).front();
            } catch (const ExpansionError&) {
                if (!extended) {
                    CosOptions longer = config.cos;
                    longer.terms *= 8;
                    extended.emplace(model, taus, range_state, longer);
                }
                use = &*extended;
                atm_price = use->puts(j, state, forward, atm_strike, config.rate).front();
                if (log) log->add({format_date(s.date), static_cast<double>(s.calendar_days), "cos_extended", ""});
            }
            const double atm_vol = implied_vol(atm_price, forward, forward, tau, config.rate, false);
            const double m_lo = config.m_low_atm * atm_vol * std::sqrt(tau);
            const double m_hi = config.m_high_atm * atm_vol * std::sqrt(tau);
            const auto i_lo = static_cast<long>(std::ceil(std::expm1(m_lo) / config.strike_step - 1e-9));
            const auto i_hi = static_cast<long>(std::floor(std::expm1(m_hi) / config.strike_step + 1e-9));
            std::vector<double> strikes;
            for (long i = i_lo; i <= i_hi; ++i) {
                const double k = forward * (1.0 + i * config.strike_step);
                if (k > 0.0) strikes.push_back(k);
            }
            const auto puts = use->puts(j, state, forward, strikes, config.rate);
            const double disc = std::exp(-config.rate * tau);
            for (std::size_t i = 0; i < strikes.size(); ++i) {
                const double k = strikes[i];
                const double put = puts[i];
                const double call = std::max(put + disc * (forward - k), 0.0);
                const bool otm_call = k > forward;
                QuoteGreeks g;
                try {
                    g = quote_greeks(otm_call ? call : put, forward, k, tau, config.rate, otm_call);
                } catch (const BoundsError& e) {
                    if (log) log->add({format_date(s.date), static_cast<double>(s.calendar_days), "sim_iv_bounds",
                                       fmt::format("strike {:.4f}: {}", k, e.what())});
                    continue;
                }
                const double scale = sigma_kappa * g.bsiv * g.vega;
                double put_noisy = put + scale * normal(rng);
                double call_noisy = call + scale * normal(rng);
                for (double* p : {&put_noisy, &call_noisy}) {
                    if (*p <= 0.0) {
                        *p = config.tick;
                        ++market.floored;
                    }
                }
                s.strike.push_back(k);
                s.put.push_back(put);
                s.call.push_back(call);
                s.put_noisy.push_back(put_noisy);
                s.call_noisy.push_back(call_noisy);
                s.bsiv.push_back(g.bsiv);
                s.vega.push_back(g.vega);
            }
            market.slices.push_back(std::move(s));
        }
    }
    if (log && market.floored > 0) {
        log->add({"", 0.0, "tick_floor", fmt::format("{} noisy prices lifted to one tick", market.floored)});
    }
    return market;
}

PanelBuild build_panel(const SyntheticMarket& market, std::span<const double> u_grid, double day_count,
                       const MeasurementOptions& options, DiagnosticLog* log) {
    PanelBuild out;
    std::size_t i = 0;
    while (i < market.slices.size()) {
        const Date date = market.slices[i].date;
        std::vector<OptionSlice> slices;
        std::vector<PreparedSurface> surfaces;
        for (; i < market.slices.size() && market.slices[i].date == date; ++i) {
            const auto& s = market.slices[i];
            std::vector<RawQuote> quotes;
            const Date expiry = s.date + std::chrono::days{s.calendar_days};
            for (std::size_t k = 0; k < s.strike.size(); ++k) {
                quotes.push_back({s.date, expiry, false, s.strike[k], s.put_noisy[k], s.put_noisy[k], std::nullopt, {}});
                quotes.push_back({s.date, expiry, true, s.strike[k], s.call_noisy[k], s.call_noisy[k], std::nullopt, {}});
            }
            try {
                SliceOptions so;
                so.day_count = day_count;
                so.forward = s.forward;
                RateCurve curve;
                curve.add(s.date, s.calendar_days, s.rate);
                OptionSlice slice = make_slice(quotes, curve, so, log);
                const auto knots = select_knots(slice);
                surfaces.push_back(fit_surface(slice, knots));
                slices.push_back(std::move(slice));
            } catch (const Error& e) {
                ++out.dropped_slices;
                if (log) log->add({format_date(date), static_cast<double>(s.calendar_days), "slice_dropped", e.what()});
            }
        }
        if (slices.empty()) continue;
        std::vector<TenorInput> inputs;
        for (std::size_t k = 0; k < slices.size(); ++k) inputs.push_back({&slices[k], &surfaces[k]});
        try {
            out.measurements.push_back(build_measurement(date, inputs, u_grid, options));
        } catch (const Error& e) {
            out.dropped_slices += slices.size();
            if (log) log->add({format_date(date), 0.0, "date_dropped", e.what()});
        }
    }
    return out;
}

double rmspe(const std::vector<ParameterVector>& estimates, const ParameterVector& truth) {
    if (estimates.empty()) return std::numeric_limits<double>::quiet_NaN();
    double sum = 0.0;
    const auto names = truth.free_names();
    for (const auto& e : estimates) {
        for (const auto& n : names) {
            const double r = (e[n] - truth[n]) / truth[n];
            sum += r * r;
        }
    }
    return std::sqrt(sum / static_cast<double>(estimates.size()));
}

namespace {

double quantile(std::vector<double> v, double q) {
    std::sort(v.begin(), v.end());
    if (v.size() == 1) return v.front();
    const double pos = q * static_cast<double>(v.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(pos));
    const auto hi = std::min(lo + 1, v.size() - 1);
    return v[lo] + (pos - static_cast<double>(lo)) * (v[hi] - v[lo]);
}

ReplicationOutcome run_replication(const SimConfig& config, const MonteCarloOptions& options, int index) {
    ReplicationOutcome out;
    out.index = index;
    const auto start = std::chrono::steady_clock::now();
    try {
        std::mt19937_64 rng(derive_seed(config.seed, static_cast<std::uint64_t>(index)));
        const SimPath path = euler_simulate(config, rng);
        const SyntheticMarket market = synth_market(path, config, rng);
        PanelBuild built = build_panel(market, options.u_grid, config.tenor_basis, options.measurement);
        for (double sbar : options.sbar_levels) {
            if (!options.estimate) {
                out.estimates.push_back(config.theta);
                out.level_ok.push_back(true);
                continue;
            }
            try {
                const PreparedPanel panel = prepare_panel(built.measurements, {.sbar = sbar, .day_basis = 1.0 / config.dt});
                EstimationOptions est = options.estimation;
                est.standard_errors = false;
                const EstimationResult r = qml_estimate(panel, config.theta, est);
                out.estimates.push_back(r.theta_hat);
                out.level_ok.push_back(true);
            } catch (const Error& e) {
                out.estimates.push_back(config.theta);
                out.level_ok.push_back(false);
                out.error += fmt::format("[sbar {:g}] {} ", sbar, e.what());
            }
        }
        out.ok = true;
    } catch (const Error& e) {
        out.ok = false;
        out.error = e.what();
    }
    out.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return out;
}

}  // namespace

std::vector<LevelSummary> summarize(const std::vector<ReplicationOutcome>& reps, const SimConfig& config,
                                    const std::vector<double>& sbar_levels) {
    std::vector<LevelSummary> levels;
    const auto names = config.theta.free_names();
    for (std::size_t l = 0; l < sbar_levels.size(); ++l) {
        LevelSummary s;
        s.sbar = sbar_levels[l];
        std::vector<ParameterVector> good;
        for (const auto& r : reps) {
            if (r.ok && l < r.level_ok.size() && r.level_ok[l]) good.push_back(r.estimates[l]);
            else ++s.failed;
        }
        s.used = static_cast<int>(good.size());
        for (const auto& n : names) {
            ParameterSummary ps;
            ps.name = n;
            ps.true_value = config.theta[n];
            std::vector<double> v;
            for (const auto& g : good) v.push_back(g[n]);
            if (!v.empty()) {
                double mean = 0.0;
                for (double x : v) mean += x;
                mean /= static_cast<double>(v.size());
                double var = 0.0;
                for (double x : v) var += (x - mean) * (x - mean);
                ps.mean = mean;
                ps.sd = v.size() > 1 ? std::sqrt(var / static_cast<double>(v.size() - 1)) : 0.0;
                ps.q10 = quantile(v, 0.1);
                ps.q50 = quantile(v, 0.5);
                ps.q90 = quantile(v, 0.9);
            }
            s.parameters.push_back(ps);
        }
        s.rmspe = rmspe(good, config.theta);
        levels.push_back(std::move(s));
    }
    return levels;
}

MonteCarloResult monte_carlo(const SimConfig& config, const MonteCarloOptions& options) {
    config.validate();
    if (options.sbar_levels.empty()) throw ConfigError("monte_carlo: no threshold levels");
    MonteCarloResult result;
    result.replications.resize(static_cast<std::size_t>(config.replications));
    std::atomic<int> next{0};
    const unsigned workers = std::max(1u, std::min<unsigned>(options.threads, static_cast<unsigned>(config.replications)));
    auto work = [&] {
        for (int i = next++; i < config.replications; i = next++) {
            result.replications[static_cast<std::size_t>(i)] = run_replication(config, options, i);
        }
    };
    std::vector<std::jthread> pool;
    for (unsigned w = 1; w < workers; ++w) pool.emplace_back(work);
    work();
    pool.clear();
    result.levels = summarize(result.replications, config, options.sbar_levels);
    return result;
}

void write_table_csv(std::ostream& out, const MonteCarloResult& result) {
    if (result.levels.empty()) return;
    out << "sbar,statistic";
    for (const auto& p : result.levels.front().parameters) out << ',' << p.name;
    out << '\n';
    for (const auto& level : result.levels) {
        auto row = [&](const char* label, auto field) {
            out << fmt::format("{:g},{}", level.sbar, label);
            for (const auto& p : level.parameters) out << fmt::format(",{:.6g}", field(p));
            out << '\n';
        };
        row("true value", [](const ParameterSummary& p) { return p.true_value; });
        row("mean", [](const ParameterSummary& p) { return p.mean; });
        row("std dev", [](const ParameterSummary& p) { return p.sd; });
        row("q10", [](const ParameterSummary& p) { return p.q10; });
        row("q50", [](const ParameterSummary& p) { return p.q50; });
        row("q90", [](const ParameterSummary& p) { return p.q90; });
        out << fmt::format("{:g},rmspe,{:.6g}\n", level.sbar, level.rmspe);
        out << fmt::format("{:g},replications used,{}\n", level.sbar, level.used);
        out << fmt::format("{:g},replications failed,{}\n", level.sbar, level.failed);
    }
}

void write_path_csv(std::ostream& out, const SimPath& path) {
    out << "date,log_forward,variance" << (path.exogenous.empty() ? "" : ",exogenous") << ",jumps\n";
    for (std::size_t t = 0; t < path.dates.size(); ++t) {
        out << fmt::format("{},{:.17g},{:.17g}", format_date(path.dates[t]), path.log_forward[t], path.variance[t]);
        if (!path.exogenous.empty()) out << fmt::format(",{:.17g}", path.exogenous[t]);
        out << ',' << path.jumps[t] << '\n';
    }
}

}  // namespace ccf
