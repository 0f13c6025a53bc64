#include "ccf/dates.hpp"

#include "ccf/errors.hpp"

#include <charconv>
#include <fmt/format.h>

namespace ccf {

Date parse_date(std::string_view text) {
    auto field = [&](std::size_t pos, std::size_t len) {
        int v = 0;
        const auto* first = text.data() + pos;
        const auto [ptr, ec] = std::from_chars(first, first + len, v);
        if (ec != std::errc{} || ptr != first + len) throw InputError(fmt::format("bad date '{}'", text));
        return v;
    };
    if (text.size() != 10 || text[4] != '-' || text[7] != '-') throw InputError(fmt::format("bad date '{}'", text));
    const std::chrono::year_month_day ymd{std::chrono::year{field(0, 4)},
                                          std::chrono::month{static_cast<unsigned>(field(5, 2))},
                                          std::chrono::day{static_cast<unsigned>(field(8, 2))}};
    if (!ymd.ok()) throw InputError(fmt::format("invalid calendar date '{}'", text));
    return Date{ymd};
}

std::string format_date(Date d) {
    const std::chrono::year_month_day ymd{d};
    return fmt::format("{:04d}-{:02d}-{:02d}", static_cast<int>(ymd.year()), static_cast<unsigned>(ymd.month()),
                       static_cast<unsigned>(ymd.day()));
}

}  // namespace ccf
