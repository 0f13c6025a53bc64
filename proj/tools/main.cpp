#include "commands.hpp"

#include "ccf/errors.hpp"

#include <CLI11.hpp>
#include <fmt/format.h>
#include <thread>

int main(int argc, char** argv) {
    using namespace ccf::cli;
    CLI::App app{"Option-implied CCF state-space toolkit"};
    app.require_subcommand(1);

    CommonFlags common;
    common.threads = std::max(1u, std::thread::hardware_concurrency());
    std::uint64_t seed = 0;
    auto add_common = [&](CLI::App* sub, bool needs_config = true) {
        auto* opt = sub->add_option("--config", common.config, "Run configuration (INI)");
        if (needs_config) opt->required()->check(CLI::ExistingFile);
        else opt->check(CLI::ExistingFile);
        sub->add_option("--out", common.out, "Output directory (overrides the config)");
        sub->add_option("--seed", seed, "Master seed (overrides the config)");
        sub->add_option("--threads", common.threads, "Worker threads")->check(CLI::PositiveNumber);
    };

    auto* simulate = app.add_subcommand("simulate", "Simulate a synthetic option market");
    add_common(simulate);
    auto* prep = app.add_subcommand("prep", "Quotes to measurement panel");
    add_common(prep);
    auto* filter = app.add_subcommand("filter", "Run the collapsed Kalman filter");
    add_common(filter);
    EstimateFlags est;
    auto* estimate = app.add_subcommand("estimate", "Quasi-maximum-likelihood estimation");
    add_common(estimate);
    estimate->add_option("--start", est.start, "Parameter file with the starting point")->check(CLI::ExistingFile);
    auto* montecarlo = app.add_subcommand("montecarlo", "Monte Carlo replication study");
    add_common(montecarlo);
    PriceFlags price;
    auto* pricer = app.add_subcommand("price", "COS prices of out-of-the-money options");
    add_common(pricer, false);
    pricer->add_option("--forward", price.forward)->check(CLI::PositiveNumber);
    pricer->add_option("--variance", price.variance)->check(CLI::NonNegativeNumber);
    pricer->add_option("--exogenous", price.exogenous);
    pricer->add_option("--tau", price.tau, "Tenor in years")->check(CLI::PositiveNumber);
    pricer->add_option("--rate", price.rate);
    pricer->add_option("--strikes", price.strikes, "Strikes")->required()->delimiter(',');

    CLI11_PARSE(app, argc, argv);
    for (auto* sub : app.get_subcommands()) {
        if (sub->get_option("--seed")->count() > 0) common.seed = seed;
    }

    try {
        if (*simulate) return cmd_simulate(common);
        if (*prep) return cmd_prep(common);
        if (*filter) return cmd_filter(common);
        if (*estimate) return cmd_estimate(common, est);
        if (*montecarlo) return cmd_montecarlo(common);
        if (*pricer) return cmd_price(common, price);
    } catch (const ccf::Error& e) {
        fmt::print(stderr, "error: {}\n", e.what());
        return 2;
    } catch (const std::exception& e) {
        fmt::print(stderr, "unexpected error: {}\n", e.what());
        return 3;
    }
    return 1;
}
