#include "commands.hpp"

#include "ccf/cos_pricer.hpp"
#include "ccf/errors.hpp"
#include "ccf/models.hpp"
#include "ccf/panel_io.hpp"
#include "ccf/simulate.hpp"
#include "ccf/statespace.hpp"
#include "ccf/surface.hpp"

#include <cmath>
#include <filesystem>
#include <fmt/format.h>
#include <fstream>
#include <map>
#include <sstream>

namespace ccf::cli {

namespace fs = std::filesystem;

namespace {

RunConfig load(const CommonFlags& flags) {
    RunConfig cfg = flags.config.empty() ? RunConfig{} : load_config(flags.config);
    if (!flags.out.empty()) cfg.output_directory = flags.out;
    if (flags.seed) cfg.simulation.seed = *flags.seed;
    cfg.simulation.theta = cfg.model;
    fs::create_directories(cfg.output_directory);
    return cfg;
}

std::ofstream open_out(const RunConfig& cfg, const std::string& name) {
    const fs::path p = fs::path(cfg.output_directory) / name;
    std::ofstream out(p);
    if (!out) throw InputError(fmt::format("cannot write '{}'", p.string()));
    return out;
}

std::ifstream open_in(const std::string& path, const char* what) {
    if (path.empty()) throw ConfigError(fmt::format("config does not name the {} file", what));
    std::ifstream in(path);
    if (!in) throw InputError(fmt::format("cannot open {} file '{}'", what, path));
    return in;
}

void write_diagnostics(const RunConfig& cfg, const DiagnosticLog& log) {
    auto out = open_out(cfg, "diagnostics.csv");
    out << "date,tenor_days,code,detail\n";
    for (const auto& d : log.entries()) {
        std::string detail = d.detail;
        for (char& c : detail) {
            if (c == ',' || c == '\n') c = ';';
        }
        out << fmt::format("{},{:g},{},{}\n", d.date, d.tenor_days, d.code, detail);
    }
}

PreparedPanel load_panel(const RunConfig& cfg) {
    const std::string panel_path =
        cfg.data.panel.empty() ? (fs::path(cfg.output_directory) / "panel.csv").string() : cfg.data.panel;
    const std::string cov_path =
        cfg.data.covariance.empty() ? (fs::path(cfg.output_directory) / "covariance.csv").string() : cfg.data.covariance;
    auto panel_in = open_in(panel_path, "panel");
    auto cov_in = open_in(cov_path, "covariance");
    auto measurements = read_panel_csv(panel_in, cov_in);
    return prepare_panel(std::move(measurements), {.sbar = cfg.filter.sbar, .day_basis = cfg.filter.day_basis});
}

std::map<Date, double> read_true_variance(const std::string& path) {
    auto in = open_in(path, "path");
    std::map<Date, double> out;
    std::string line;
    std::getline(in, line);
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::stringstream ss(line);
        std::string date, logf, var;
        std::getline(ss, date, ',');
        std::getline(ss, logf, ',');
        std::getline(ss, var, ',');
        out[parse_date(date)] = std::stod(var);
    }
    return out;
}

SystemOptions system_options(const RunConfig& cfg) {
    SystemOptions s = cfg.estimation.system;
    s.model.exogenous = cfg.exogenous;
    return s;
}

}  // namespace

int cmd_simulate(const CommonFlags& flags) {
    const RunConfig cfg = load(flags);
    cfg.simulation.validate();
    DiagnosticLog log;
    std::mt19937_64 rng(derive_seed(cfg.simulation.seed, 0));
    const SimPath path = euler_simulate(cfg.simulation, rng);
    const SyntheticMarket market = synth_market(path, cfg.simulation, rng, &log);
    {
        auto out = open_out(cfg, "quotes.csv");
        write_quotes_csv(out, market.quotes());
    }
    {
        auto out = open_out(cfg, "true_path.csv");
        write_path_csv(out, path);
    }
    write_diagnostics(cfg, log);
    fmt::print("simulated {} dates x {} tenors; {} prices floored at one tick\n", path.dates.size(),
               cfg.simulation.tenor_days.size(), market.floored);
    return 0;
}

int cmd_prep(const CommonFlags& flags) {
    const RunConfig cfg = load(flags);
    auto quotes_in = open_in(cfg.data.quotes, "quotes");
    const auto quotes = read_quotes_csv(quotes_in);
    if (quotes.empty()) throw InputError("quote file contains no quotes");
    RateCurve rates;
    if (!cfg.data.rates.empty()) {
        auto rates_in = open_in(cfg.data.rates, "rates");
        rates = read_rates_csv(rates_in);
    }
    DiagnosticLog log;
    const auto filtered = filter_quotes(quotes, cfg.data.filters, &log);
    std::map<Date, std::vector<OptionSlice>> by_date;
    SliceOptions so;
    so.day_count = cfg.data.day_count;
    for (const auto& [key, group] : group_slices(filtered)) {
        try {
            by_date[key.first].push_back(make_slice(group, rates, so, &log));
        } catch (const Error& e) {
            log.add({format_date(key.first), static_cast<double>(days_between(key.first, key.second)), "slice_failed",
                     e.what()});
        }
    }
    std::vector<CCFMeasurement> panel;
    for (auto& [date, slices] : by_date) {
        std::vector<std::size_t> pick(slices.size());
        for (std::size_t i = 0; i < pick.size(); ++i) pick[i] = i;
        if (!cfg.data.tenor_targets.empty()) pick = select_tenors(slices, cfg.data.tenor_targets);
        std::vector<const OptionSlice*> kept;
        std::vector<PreparedSurface> surfaces;
        surfaces.reserve(pick.size());
        for (std::size_t i : pick) {
            try {
                const auto knots = select_knots(slices[i]);
                if (knots.fallback) {
                    log.add({format_date(date), static_cast<double>(slices[i].calendar_days), "knot_fallback", ""});
                }
                surfaces.push_back(fit_surface(slices[i], knots));
                kept.push_back(&slices[i]);
            } catch (const Error& e) {
                log.add({format_date(date), static_cast<double>(slices[i].calendar_days), "surface_failed", e.what()});
            }
        }
        if (kept.empty()) continue;
        std::vector<TenorInput> inputs;
        for (std::size_t k = 0; k < kept.size(); ++k) inputs.push_back({kept[k], &surfaces[k]});
        try {
            panel.push_back(build_measurement(date, inputs, cfg.spanning.u_grid, cfg.spanning.measurement));
        } catch (const Error& e) {
            log.add({format_date(date), 0.0, "span_failed", e.what()});
        }
    }
    {
        auto out = open_out(cfg, "panel.csv");
        write_panel_csv(out, panel);
    }
    {
        auto out = open_out(cfg, "covariance.csv");
        write_covariance_csv(out, panel);
    }
    write_diagnostics(cfg, log);
    fmt::print("panel: {} dates from {} quotes ({} diagnostics)\n", panel.size(), quotes.size(), log.entries().size());
    return 0;
}

int cmd_filter(const CommonFlags& flags) {
    const RunConfig cfg = load(flags);
    const PreparedPanel panel = load_panel(cfg);
    const FilterRun run = run_filter(cfg.model, panel, system_options(cfg), cfg.estimation.filter);
    {
        auto out = open_out(cfg, "filter.csv");
        write_filter_csv(out, panel, run);
    }
    fmt::print("loglik {:.12g} over {} dates\n", run.loglik, panel.dates());
    if (!cfg.data.path.empty()) {
        const auto truth = read_true_variance(cfg.data.path);
        std::vector<double> a, b;
        for (std::size_t t = 0; t < run.steps.size(); ++t) {
            const auto it = truth.find(panel.measurements[t].date);
            if (it == truth.end()) continue;
            a.push_back(std::sqrt(std::max(run.steps[t].filtered(0), 0.0)));
            b.push_back(std::sqrt(it->second));
        }
        const auto n = static_cast<double>(a.size());
        double ma = 0, mb = 0;
        for (std::size_t i = 0; i < a.size(); ++i) {
            ma += a[i] / n;
            mb += b[i] / n;
        }
        double sab = 0, saa = 0, sbb = 0;
        for (std::size_t i = 0; i < a.size(); ++i) {
            sab += (a[i] - ma) * (b[i] - mb);
            saa += (a[i] - ma) * (a[i] - ma);
            sbb += (b[i] - mb) * (b[i] - mb);
        }
        fmt::print("correlation of filtered and true volatility: {:.4f}\n", sab / std::sqrt(saa * sbb));
    }
    return 0;
}

int cmd_estimate(const CommonFlags& flags, const EstimateFlags& extra) {
    RunConfig cfg = load(flags);
    const PreparedPanel panel = load_panel(cfg);
    ParameterVector start = cfg.model;
    if (!extra.start.empty()) {
        auto in = open_in(extra.start, "parameter");
        start = parse_parameters(in);
    }
    EstimationOptions opts = cfg.estimation;
    opts.system = system_options(cfg);
    const EstimationResult r = qml_estimate(panel, start, opts);
    {
        auto out = open_out(cfg, "estimates.csv");
        out << "parameter,estimate,std_error\n";
        for (std::size_t i = 0; i < r.names.size(); ++i) {
            out << fmt::format("{},{:.17g},{:.17g}\n", r.names[i], r.theta_hat[r.names[i]], r.standard_errors[i]);
        }
    }
    {
        auto out = open_out(cfg, "theta_hat.ini");
        write_parameters(out, r.theta_hat);
    }
    {
        auto out = open_out(cfg, "convergence.log");
        for (const auto& line : r.optimizer.log) out << line << '\n';
        for (const auto& w : r.warnings) out << "warning: " << w << '\n';
    }
    std::string summary = fmt::format(
        "model {}\ndates {}\nobjective at start {:.17g}\nobjective at estimate {:.17g}\niterations {}\n"
        "evaluations {}\ngradient norm {:.3g}\nconverged {}\n\n{:<14}{:>16}{:>16}\n",
        to_string(r.theta_hat.tag()), panel.dates(), r.objective_start, r.objective, r.optimizer.iterations,
        r.optimizer.evaluations, r.optimizer.gradient_norm, r.converged ? "yes" : "no", "parameter", "estimate",
        "std error");
    for (std::size_t i = 0; i < r.names.size(); ++i) {
        summary += fmt::format("{:<14}{:>16.6g}{:>16.4g}\n", r.names[i], r.theta_hat[r.names[i]], r.standard_errors[i]);
    }
    for (const auto& w : r.warnings) summary += "warning: " + w + "\n";
    {
        auto out = open_out(cfg, "summary.txt");
        out << summary;
    }
    fmt::print("{}", summary);
    return 0;
}

int cmd_montecarlo(const CommonFlags& flags) {
    const RunConfig cfg = load(flags);
    MonteCarloOptions opts;
    opts.sbar_levels = cfg.filter.sbar_levels;
    opts.u_grid = cfg.spanning.u_grid;
    opts.measurement = cfg.spanning.measurement;
    opts.estimation = cfg.estimation;
    opts.estimation.system = system_options(cfg);
    opts.threads = flags.threads;
    const MonteCarloResult result = monte_carlo(cfg.simulation, opts);
    {
        auto out = open_out(cfg, "table.csv");
        write_table_csv(out, result);
    }
    {
        auto out = open_out(cfg, "replications.csv");
        const auto names = cfg.model.free_names();
        out << "replication,sbar,ok";
        for (const auto& n : names) out << ',' << n;
        out << ",error\n";
        for (const auto& rep : result.replications) {
            for (std::size_t l = 0; l < opts.sbar_levels.size(); ++l) {
                const bool ok = rep.ok && l < rep.level_ok.size() && rep.level_ok[l];
                out << fmt::format("{},{:g},{}", rep.index, opts.sbar_levels[l], ok ? 1 : 0);
                for (const auto& n : names) {
                    out << (l < rep.estimates.size() ? fmt::format(",{:.10g}", rep.estimates[l][n]) : std::string(","));
                }
                std::string err = rep.error;
                for (char& c : err) {
                    if (c == ',' || c == '\n') c = ';';
                }
                out << ',' << err << '\n';
            }
        }
    }
    double seconds = 0.0;
    for (const auto& rep : result.replications) seconds += rep.seconds;
    fmt::print("{} replications, {:.1f} s of replication time\n", result.replications.size(), seconds);
    for (const auto& level : result.levels) {
        fmt::print("sbar {:g}: {} used, {} failed, RMSPE {:.4f}\n", level.sbar, level.used, level.failed, level.rmspe);
    }
    return 0;
}

int cmd_price(const CommonFlags& flags, const PriceFlags& price) {
    const RunConfig cfg = load(flags);
    const AffineModel model = build_model(cfg.model, {.rate = 0.0, .exogenous = cfg.exogenous});
    Vec state(model.dim_state);
    state(0) = std::log(price.forward);
    state(1) = price.variance;
    if (model.dim_state > 2) state(2) = price.exogenous;
    const auto prices = cos_price(model, state, price.forward, price.strikes, price.tau, price.rate, cfg.simulation.cos);
    fmt::print("strike,type,price\n");
    for (std::size_t i = 0; i < prices.size(); ++i) {
        fmt::print("{:.10g},{},{:.12g}\n", price.strikes[i], price.strikes[i] > price.forward ? "call" : "put", prices[i]);
    }
    return 0;
}

}  // namespace ccf::cli
