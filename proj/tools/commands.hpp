#pragma once

#include "ccf/config.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace ccf::cli {

struct CommonFlags {
    std::string config;
    std::string out;
    std::optional<std::uint64_t> seed;
    unsigned threads = 1;
};

struct PriceFlags {
    double forward = 100.0;
    double variance = 0.015;
    double exogenous = 1.0;
    double tau = 30.0 / 365.0;
    double rate = 0.0;
    std::vector<double> strikes;
};

struct EstimateFlags {
    std::string start;   // parameter file to resume from
};

int cmd_simulate(const CommonFlags& flags);
int cmd_prep(const CommonFlags& flags);
int cmd_filter(const CommonFlags& flags);
int cmd_estimate(const CommonFlags& flags, const EstimateFlags& extra);
int cmd_montecarlo(const CommonFlags& flags);
int cmd_price(const CommonFlags& flags, const PriceFlags& price);

}  // namespace ccf::cli
