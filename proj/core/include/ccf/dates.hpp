#pragma once

#include <chrono>
#include <string>
#include <string_view>

namespace ccf {

using Date = std::chrono::sys_days;

// ISO yyyy-mm-dd.
Date parse_date(std::string_view text);
std::string format_date(Date d);

inline int days_between(Date from, Date to) { return static_cast<int>((to - from).count()); }

}  // namespace ccf
