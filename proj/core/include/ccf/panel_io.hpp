#pragma once

#include "ccf/spanning.hpp"
#include "ccf/statespace.hpp"

#include <iosfwd>
#include <vector>

namespace ccf {

// Panel file: date,tenor_index,tau,forward,rate,u,re_log_ccf,im_log_ccf,exogenous
void write_panel_csv(std::ostream& out, const std::vector<CCFMeasurement>& panel);
// Covariance sidecar: date,tenor_index,row,col,value (upper triangle of each block)
void write_covariance_csv(std::ostream& out, const std::vector<CCFMeasurement>& panel);

std::vector<CCFMeasurement> read_panel_csv(std::istream& panel, std::istream& covariance);

void write_filter_csv(std::ostream& out, const PreparedPanel& panel, const FilterRun& run);

}  // namespace ccf
