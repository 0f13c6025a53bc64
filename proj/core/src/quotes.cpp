#include "ccf/quotes.hpp"

#include "ccf/black_scholes.hpp"
#include "ccf/errors.hpp"

#include <algorithm>
#include <cmath>
#include <fmt/format.h>
#include <istream>
#include <limits>
#include <ostream>
#include <set>
#include <sstream>

namespace ccf {

std::vector<RawQuote> filter_quotes(const std::vector<RawQuote>& panel, const FilterRules& rules, DiagnosticLog* log) {
    const std::set<Date> closures(rules.early_closures.begin(), rules.early_closures.end());
    std::vector<RawQuote> out;
    out.reserve(panel.size());
    std::set<std::pair<Date, Date>> seen, kept;
    for (const auto& q : panel) {
        seen.insert({q.quote_date, q.expiry_date});
        if (!(q.bid > 0.0)) continue;
        if (!(q.ask / q.bid < rules.max_ask_bid_ratio)) continue;
        const int days = q.calendar_days();
        if (days < rules.min_calendar_days || days > rules.max_calendar_days) continue;
        if (closures.contains(q.quote_date)) continue;
        kept.insert({q.quote_date, q.expiry_date});
        out.push_back(q);
    }
    if (log) {
        for (const auto& key : seen) {
            if (!kept.contains(key)) {
                log->add({format_date(key.first), static_cast<double>(days_between(key.first, key.second)),
                          "slice_dropped", "no quotes survive filtering"});
            }
        }
    }
    return out;
}

void RateCurve::add(Date date, double tenor_days, double rate) {
    auto& c = curves_[date];
    c.emplace_back(tenor_days, rate);
    std::sort(c.begin(), c.end());
}

double RateCurve::rate(Date date, double tenor_days) const {
    if (curves_.empty()) return 0.0;
    auto it = curves_.upper_bound(date);
    if (it != curves_.begin()) --it;   // latest curve on or before the date, else the first one
    const auto& c = it->second;
    if (tenor_days <= c.front().first) return c.front().second;
    if (tenor_days >= c.back().first) return c.back().second;
    const auto hi = std::lower_bound(c.begin(), c.end(), std::make_pair(tenor_days, -std::numeric_limits<double>::infinity()));
    const auto lo = hi - 1;
    const double w = (tenor_days - lo->first) / (hi->first - lo->first);
    return lo->second + w * (hi->second - lo->second);
}

double extract_forward(std::span<const RawQuote> quotes, double rate, double tau) {
    std::map<double, std::pair<double, double>> pairs;   // strike -> (call, put)
    std::map<double, int> flags;
    for (const auto& q : quotes) {
        auto& p = pairs[q.strike];
        if (q.is_call) {
            p.first = q.mid();
            flags[q.strike] |= 1;
        } else {
            p.second = q.mid();
            flags[q.strike] |= 2;
        }
    }
    struct Pair {
        double gap, strike, call, put;
    };
    std::vector<Pair> both;
    for (const auto& [k, cp] : pairs) {
        if (flags[k] == 3) both.push_back({std::abs(cp.first - cp.second), k, cp.first, cp.second});
    }
    if (both.empty()) throw MissingForwardError("extract_forward: no strike with both call and put quotes");
    std::stable_sort(both.begin(), both.end(), [](const Pair& a, const Pair& b) { return a.gap < b.gap; });
    const std::size_t n = std::min<std::size_t>(5, both.size());
    std::vector<double> f(n);
    const double growth = std::exp(rate * tau);
    for (std::size_t i = 0; i < n; ++i) f[i] = both[i].strike + growth * (both[i].call - both[i].put);
    std::sort(f.begin(), f.end());
    return n % 2 == 1 ? f[n / 2] : 0.5 * (f[n / 2 - 1] + f[n / 2]);
}

long OptionSlice::total_volume() const {
    long s = 0;
    for (long v : volume) s += std::max(0L, v);
    return s;
}

OptionSlice make_slice(std::span<const RawQuote> quotes, const RateCurve& rates, const SliceOptions& options,
                       DiagnosticLog* log) {
    if (quotes.empty()) throw InputError("make_slice: empty quote set");
    OptionSlice s;
    s.quote_date = quotes.front().quote_date;
    s.calendar_days = quotes.front().calendar_days();
    s.tau = s.calendar_days / options.day_count;
    s.rate = rates.rate(s.quote_date, s.calendar_days);
    s.forward = options.forward ? *options.forward : extract_forward(quotes, s.rate, s.tau);

    struct Leg {
        double call = std::numeric_limits<double>::quiet_NaN();
        double put = std::numeric_limits<double>::quiet_NaN();
        long call_volume = 0, put_volume = 0;
        bool call_vol_known = false, put_vol_known = false;
    };
    std::map<double, Leg> legs;
    for (const auto& q : quotes) {
        auto& l = legs[q.strike];
        if (q.is_call) {
            l.call = q.mid();
            l.call_volume = q.volume.value_or(0);
            l.call_vol_known = q.volume.has_value();
        } else {
            l.put = q.mid();
            l.put_volume = q.volume.value_or(0);
            l.put_vol_known = q.volume.has_value();
        }
    }
    bool any_volume = false;
    for (const auto& [k, l] : legs) {
        const double m = std::log(k / s.forward);
        const bool call = m > 0.0;
        const double price = call ? l.call : l.put;
        if (std::isnan(price)) continue;
        try {
            const auto g = quote_greeks(price, s.forward, k, s.tau, s.rate, call);
            s.strike.push_back(k);
            s.m.push_back(m);
            s.mid.push_back(price);
            s.other_mid.push_back(call ? l.put : l.call);
            s.bsiv.push_back(g.bsiv);
            s.vega.push_back(g.vega);
            s.volume.push_back(call ? l.call_volume : l.put_volume);
            s.is_call.push_back(call);
            any_volume = any_volume || (call ? l.call_vol_known : l.put_vol_known);
        } catch (const BoundsError& e) {
            if (log) log->add({format_date(s.quote_date), static_cast<double>(s.calendar_days), "iv_bounds",
                               fmt::format("strike {}: {}", k, e.what())});
        }
    }
    s.has_volume = any_volume;
    return s;
}

std::map<std::pair<Date, Date>, std::vector<RawQuote>> group_slices(const std::vector<RawQuote>& panel) {
    std::map<std::pair<Date, Date>, std::vector<RawQuote>> out;
    for (const auto& q : panel) out[{q.quote_date, q.expiry_date}].push_back(q);
    return out;
}

std::vector<std::size_t> select_tenors(const std::vector<OptionSlice>& slices, const std::vector<int>& target_days) {
    std::vector<std::size_t> order(slices.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::sort(order.begin(), order.end(),
              [&](std::size_t a, std::size_t b) { return slices[a].calendar_days < slices[b].calendar_days; });
    std::vector<std::size_t> chosen;
    for (int target : target_days) {
        std::ptrdiff_t pos = -1;
        for (std::size_t i = 0; i < order.size(); ++i) {
            if (slices[order[i]].calendar_days <= target) pos = static_cast<std::ptrdiff_t>(i);
        }
        if (pos < 0) continue;
        while (pos > 0) {
            const auto& cur = slices[order[pos]];
            const auto& shorter = slices[order[pos - 1]];
            if (shorter.total_volume() > cur.total_volume() && shorter.size() > cur.size()) --pos;
            else break;
        }
        const std::size_t pick = order[pos];
        if (std::find(chosen.begin(), chosen.end(), pick) == chosen.end()) chosen.push_back(pick);
    }
    std::sort(chosen.begin(), chosen.end(),
              [&](std::size_t a, std::size_t b) { return slices[a].calendar_days < slices[b].calendar_days; });
    return chosen;
}

namespace {

std::vector<std::string> split_csv(const std::string& line) {
    std::vector<std::string> out;
    std::string cur;
    std::istringstream ss(line);
    while (std::getline(ss, cur, ',')) out.push_back(cur);
    if (!line.empty() && line.back() == ',') out.emplace_back();
    return out;
}

std::string trim(std::string s) {
    const auto b = s.find_first_not_of(" \t\r");
    const auto e = s.find_last_not_of(" \t\r");
    return b == std::string::npos ? std::string{} : s.substr(b, e - b + 1);
}

double to_double(const std::string& s, std::size_t line) {
    try {
        std::size_t used = 0;
        const double v = std::stod(s, &used);
        if (used != s.size()) throw std::invalid_argument(s);
        return v;
    } catch (const std::exception&) {
        throw InputError(fmt::format("line {}: cannot parse number '{}'", line, s));
    }
}

bool to_flag(const std::string& s, std::size_t line) {
    if (s == "1" || s == "true" || s == "C" || s == "c" || s == "call") return true;
    if (s == "0" || s == "false" || s == "P" || s == "p" || s == "put") return false;
    throw InputError(fmt::format("line {}: cannot parse option type '{}'", line, s));
}

}  // namespace

std::vector<RawQuote> read_quotes_csv(std::istream& in) {
    std::string line;
    std::vector<RawQuote> out;
    if (!std::getline(in, line)) throw InputError("quote file is empty");
    const auto header = split_csv(trim(line));
    const std::vector<std::string> expected{"quote_date", "expiry_date", "is_call", "strike", "bid", "ask", "volume"};
    if (header.size() < expected.size() || !std::equal(expected.begin(), expected.end(), header.begin())) {
        throw InputError("quote file header must be: quote_date,expiry_date,is_call,strike,bid,ask,volume");
    }
    const bool has_tag = header.size() > expected.size() && header[7] == "settlement_tag";
    std::size_t n = 1;
    while (std::getline(in, line)) {
        ++n;
        line = trim(line);
        if (line.empty()) continue;
        auto f = split_csv(line);
        if (f.size() < 7) throw InputError(fmt::format("line {}: expected 7 fields", n));
        RawQuote q;
        q.quote_date = parse_date(trim(f[0]));
        q.expiry_date = parse_date(trim(f[1]));
        q.is_call = to_flag(trim(f[2]), n);
        q.strike = to_double(trim(f[3]), n);
        q.bid = to_double(trim(f[4]), n);
        q.ask = to_double(trim(f[5]), n);
        const auto vol = trim(f[6]);
        if (!vol.empty()) q.volume = static_cast<long>(to_double(vol, n));
        if (has_tag && f.size() > 7) q.settlement_tag = trim(f[7]);
        if (q.bid < 0.0 || q.ask < q.bid) throw InputError(fmt::format("line {}: requires 0 <= bid <= ask", n));
        out.push_back(std::move(q));
    }
    return out;
}

void write_quotes_csv(std::ostream& out, const std::vector<RawQuote>& quotes) {
    out << "quote_date,expiry_date,is_call,strike,bid,ask,volume\n";
    for (const auto& q : quotes) {
        out << format_date(q.quote_date) << ',' << format_date(q.expiry_date) << ',' << (q.is_call ? 1 : 0) << ','
            << fmt::format("{:.17g},{:.17g},{:.17g},", q.strike, q.bid, q.ask);
        if (q.volume) out << *q.volume;
        out << '\n';
    }
}

RateCurve read_rates_csv(std::istream& in) {
    RateCurve curve;
    std::string line;
    if (!std::getline(in, line)) return curve;
    const auto header = split_csv(trim(line));
    if (header.size() < 3 || header[0] != "date" || header[1] != "tenor_days" || header[2] != "rate") {
        throw InputError("rates file header must be: date,tenor_days,rate");
    }
    std::size_t n = 1;
    while (std::getline(in, line)) {
        ++n;
        line = trim(line);
        if (line.empty()) continue;
        const auto f = split_csv(line);
        if (f.size() < 3) throw InputError(fmt::format("rates line {}: expected 3 fields", n));
        curve.add(parse_date(trim(f[0])), to_double(trim(f[1]), n), to_double(trim(f[2]), n));
    }
    return curve;
}

}  // namespace ccf
