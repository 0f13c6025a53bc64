#pragma once

#include "ccf/dates.hpp"
#include "ccf/diagnostics.hpp"

#include <iosfwd>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace ccf {

struct RawQuote {
    Date quote_date;
    Date expiry_date;
    bool is_call = false;
    double strike = 0.0;
    double bid = 0.0;
    double ask = 0.0;
    std::optional<long> volume;
    std::string settlement_tag;

    double mid() const { return 0.5 * (bid + ask); }
    int calendar_days() const { return days_between(quote_date, expiry_date); }
};

struct FilterRules {
    double max_ask_bid_ratio = 10.0;
    int min_calendar_days = 2;
    int max_calendar_days = 365;
    std::vector<Date> early_closures;
};

// Drops zero-bid, wide, too short/long and early-closure quotes; logs slices that vanish entirely.
std::vector<RawQuote> filter_quotes(const std::vector<RawQuote>& panel, const FilterRules& rules,
                                    DiagnosticLog* log = nullptr);

// Zero-rate curve per date; linear in tenor, flat outside the quoted range.
class RateCurve {
public:
    void add(Date date, double tenor_days, double rate);
    double rate(Date date, double tenor_days) const;
    bool empty() const { return curves_.empty(); }

private:
    std::map<Date, std::vector<std::pair<double, double>>> curves_;
};

// Median of the parity-implied forwards from up to five strikes with the smallest |C - P|.
double extract_forward(std::span<const RawQuote> quotes, double rate, double tau);

struct OptionSlice {
    Date quote_date{};
    int calendar_days = 0;
    double tau = 0.0;
    double forward = 0.0;
    double rate = 0.0;
    std::vector<double> strike;
    std::vector<double> m;
    std::vector<double> mid;
    std::vector<double> other_mid;   // opposite-type mid at the same strike, NaN when absent
    std::vector<double> bsiv;
    std::vector<double> vega;
    std::vector<long> volume;
    std::vector<bool> is_call;
    bool has_volume = false;

    std::size_t size() const { return m.size(); }
    long total_volume() const;
};

struct SliceOptions {
    double day_count = 365.0;   // tenor = calendar days / day_count
    std::optional<double> forward;   // skips parity extraction when the forward is known
};

// Builds the OTM slice (puts for m <= 0, calls for m > 0) for one date and expiry.
OptionSlice make_slice(std::span<const RawQuote> quotes, const RateCurve& rates, const SliceOptions& options = {},
                       DiagnosticLog* log = nullptr);

// Groups a panel by (quote_date, expiry_date), ordered.
std::map<std::pair<Date, Date>, std::vector<RawQuote>> group_slices(const std::vector<RawQuote>& panel);

// Picks, per target, the slice closest from below, moving to the next shorter one while it has
// both larger volume and more OTM quotes. Returns indices into `slices` (sorted by tenor).
std::vector<std::size_t> select_tenors(const std::vector<OptionSlice>& slices, const std::vector<int>& target_days);

std::vector<RawQuote> read_quotes_csv(std::istream& in);
void write_quotes_csv(std::ostream& out, const std::vector<RawQuote>& quotes);
RateCurve read_rates_csv(std::istream& in);

}  // namespace ccf
