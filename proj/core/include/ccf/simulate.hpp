#pragma once

#include "ccf/cos_pricer.hpp"
#include "ccf/dates.hpp"
#include "ccf/diagnostics.hpp"
#include "ccf/estimate.hpp"
#include "ccf/parameters.hpp"
#include "ccf/quotes.hpp"
#include "ccf/spanning.hpp"

#include <cstdint>
#include <iosfwd>
#include <random>
#include <vector>

namespace ccf {

// Independent stream seeds from a master seed and a counter.
std::uint64_t derive_seed(std::uint64_t master, std::uint64_t counter);

struct SimConfig {
    ParameterVector theta{ModelTag::Svcdej};
    int dates = 500;
    double dt = 1.0 / 250.0;
    int substeps = 1;
    double forward0 = 100.0;
    double variance0 = 0.015;
    double exogenous0 = 1.0;             // starting level of the exogenous factor (extended model)
    std::vector<int> tenor_days{10, 30, 60};
    double tenor_basis = 250.0;          // tau = days / tenor_basis
    double strike_step = 0.01;           // fraction of the forward
    double m_low_atm = -10.0;            // in units of sigma_ATM * sqrt(tau)
    double m_high_atm = 4.0;
    double rate = 0.0;
    double tick = 0.05;
    Date start = Date{std::chrono::year{2000} / 1 / 3};
    std::uint64_t seed = 20240607;
    int replications = 1;
    CosOptions cos;
    // Truncation ranges use this variance level unless non-positive (then 4x the long-run mean).
    double range_variance = 0.0;

    void validate() const;
};

struct SimPath {
    std::vector<Date> dates;
    std::vector<double> log_forward;
    std::vector<double> variance;
    std::vector<double> exogenous;       // empty unless the model has an exogenous factor
    std::vector<int> jumps;              // jump events during the step ending at each date

    Vec state(std::size_t t) const;
};

// Full-truncation Euler scheme under the physical measure with Bernoulli-thinned jumps.
SimPath euler_simulate(const SimConfig& config, std::mt19937_64& rng);

struct SyntheticSlice {
    Date date{};
    int calendar_days = 0;
    double tau = 0.0;
    double forward = 0.0;
    double rate = 0.0;
    std::vector<double> strike;
    std::vector<double> put, call;               // noiseless
    std::vector<double> put_noisy, call_noisy;
    std::vector<double> bsiv, vega;              // of the noiseless OTM price
};

struct SyntheticMarket {
    SimPath path;
    std::vector<SyntheticSlice> slices;          // date-major, tenor-minor
    std::size_t floored = 0;                     // noisy prices lifted to one tick
    std::vector<int> tenor_days;

    std::vector<RawQuote> quotes() const;
};

SyntheticMarket synth_market(const SimPath& path, const SimConfig& config, std::mt19937_64& rng,
                             DiagnosticLog* log = nullptr);

struct PanelBuild {
    std::vector<CCFMeasurement> measurements;
    std::size_t dropped_slices = 0;
};

// Prep + spanning of a synthetic market with known forwards.
PanelBuild build_panel(const SyntheticMarket& market, std::span<const double> u_grid, double day_count,
                       const MeasurementOptions& options = {}, DiagnosticLog* log = nullptr);

struct MonteCarloOptions {
    std::vector<double> sbar_levels{1e-7};
    std::vector<double> u_grid = default_u_grid();
    MeasurementOptions measurement;
    EstimationOptions estimation;
    bool estimate = true;
    unsigned threads = 1;
};

struct ReplicationOutcome {
    int index = 0;
    bool ok = false;
    std::string error;
    std::vector<ParameterVector> estimates;      // one per sbar level
    std::vector<bool> level_ok;
    double seconds = 0.0;
};

struct ParameterSummary {
    std::string name;
    double true_value = 0.0;
    double mean = 0.0, sd = 0.0, q10 = 0.0, q50 = 0.0, q90 = 0.0;
};

struct LevelSummary {
    double sbar = 0.0;
    std::vector<ParameterSummary> parameters;
    double rmspe = 0.0;
    int used = 0;
    int failed = 0;
};

struct MonteCarloResult {
    std::vector<ReplicationOutcome> replications;
    std::vector<LevelSummary> levels;
};

double rmspe(const std::vector<ParameterVector>& estimates, const ParameterVector& truth);

// Simulate -> prep -> span -> estimate per replication; replications run in parallel.
MonteCarloResult monte_carlo(const SimConfig& config, const MonteCarloOptions& options);

std::vector<LevelSummary> summarize(const std::vector<ReplicationOutcome>& reps, const SimConfig& config,
                                    const std::vector<double>& sbar_levels);

void write_table_csv(std::ostream& out, const MonteCarloResult& result);
void write_path_csv(std::ostream& out, const SimPath& path);

}  // namespace ccf
