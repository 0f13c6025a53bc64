#pragma once

#include "ccf/estimate.hpp"
#include "ccf/parameters.hpp"
#include "ccf/quotes.hpp"
#include "ccf/simulate.hpp"
#include "ccf/spanning.hpp"

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace ccf {

struct DataSection {
    std::string quotes;
    std::string rates;
    std::string panel;
    std::string covariance;
    std::string path;                        // simulated true path, used by the filter command when present
    double day_count = 365.0;
    std::vector<int> tenor_targets;          // empty keeps every slice
    FilterRules filters;
};

struct SpanningSection {
    std::vector<double> u_grid = default_u_grid();
    MeasurementOptions measurement;
};

struct FilterSection {
    double sbar = 1e-7;
    std::vector<double> sbar_levels{1e-7};
    double day_basis = 250.0;
};

struct RunConfig {
    ParameterVector model{ModelTag::Svcdej};
    ExogenousTreatment exogenous = ExogenousTreatment::Frozen;
    DataSection data;
    SimConfig simulation;
    SpanningSection spanning;
    FilterSection filter;
    EstimationOptions estimation;
    std::string output_directory = ".";
};

// Sectioned key = value text (INI); unknown keys are rejected.
RunConfig parse_config(std::istream& in);
RunConfig load_config(const std::string& path);
void write_config(std::ostream& out, const RunConfig& config);

// Parameter file: a [model] section with tag, one key per parameter and an optional fixed = a,b list.
ParameterVector parse_parameters(std::istream& in);
void write_parameters(std::ostream& out, const ParameterVector& params);

}  // namespace ccf
