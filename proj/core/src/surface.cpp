#include "ccf/surface.hpp"

#include "ccf/black_scholes.hpp"
#include "ccf/errors.hpp"

#include <algorithm>
#include <cmath>
#include <fmt/format.h>

namespace ccf {

namespace {

// Walks outward from the near-ATM quote of one wing. `order` lists slice indices from ATM outward;
// `price_falls` is true when the wing's own option price must strictly fall outward.
std::vector<std::size_t> walk_wing(const OptionSlice& s, const std::vector<std::size_t>& order, bool strict) {
    std::vector<std::size_t> out;
    if (order.empty()) return out;
    auto monotone = [&](std::size_t inner, std::size_t outer) {
        if (!(s.mid[outer] < s.mid[inner])) return false;
        const double a = s.other_mid[inner], b = s.other_mid[outer];
        if (std::isnan(a) || std::isnan(b)) return true;
        return b > a;
    };
    out.push_back(order.front());
    for (std::size_t k = 1; k < order.size(); ++k) {
        const std::size_t cand = order[k];
        if (!monotone(out.back(), cand)) continue;                  // against the last knot
        if (strict) {
            if (!monotone(order[k - 1], cand)) continue;            // against the adjacent quote
            if (s.has_volume && !(s.volume[cand] > 1)) continue;    // stale-price screen
        }
        out.push_back(cand);
    }
    return out;
}

KnotSelection collect(const OptionSlice& s, bool strict) {
    std::vector<std::size_t> puts, calls;
    for (std::size_t i = s.size(); i-- > 0;) {
        if (!s.is_call[i]) puts.push_back(i);
    }
    for (std::size_t i = 0; i < s.size(); ++i) {
        if (s.is_call[i]) calls.push_back(i);
    }
    KnotSelection k;
    auto a = walk_wing(s, puts, strict);
    auto b = walk_wing(s, calls, strict);
    k.indices.insert(k.indices.end(), a.begin(), a.end());
    k.indices.insert(k.indices.end(), b.begin(), b.end());
    std::sort(k.indices.begin(), k.indices.end());
    return k;
}

}  // namespace

KnotSelection select_knots(const OptionSlice& slice) {
    if (slice.size() == 0) throw SurfaceError("select_knots: empty slice");
    KnotSelection k = collect(slice, true);
    if (k.indices.size() < 4) {
        k = collect(slice, false);
        k.fallback = true;
    }
    return k;
}

bool right_wing_arbitrage_free(double m_edge, double w_edge, double slope) {
    if (slope <= 0.0) return true;
    if (slope >= 2.0 || !(w_edge > 0.0)) return false;
    // With x = w(m) and y = 1/x on (0, 1/w_edge], the Durrleman function of a linear wing is the
    // quadratic g(y) = c^2/4 y^2 + (2c - b^2)/4 y + (1/4 - b^2/16), c the wing intercept.
    const double b2 = slope * slope;
    const double c = w_edge - slope * m_edge;
    const double qa = 0.25 * c * c, qb = 0.25 * (2.0 * c - b2), qc = 0.25 - b2 / 16.0;
    auto g = [&](double y) { return (qa * y + qb) * y + qc; };
    const double y_edge = 1.0 / w_edge;
    if (g(y_edge) < 0.0) return false;
    if (qa > 0.0) {
        const double vertex = -qb / (2.0 * qa);
        if (vertex > 0.0 && vertex < y_edge && g(vertex) < 0.0) return false;
    }
    return true;
}

double right_wing_slope_cap(double m_edge, double w_edge) {
    constexpr double step = 1e-3;
    double ok = 0.0;
    double bad = 2.0;
    for (double b = step; b < 2.0; b += step) {
        if (!right_wing_arbitrage_free(m_edge, w_edge, b)) {
            bad = b;
            break;
        }
        ok = b;
    }
    if (bad >= 2.0) return 2.0;
    for (int i = 0; i < 60; ++i) {
        const double mid = 0.5 * (ok + bad);
        (right_wing_arbitrage_free(m_edge, w_edge, mid) ? ok : bad) = mid;
    }
    return ok;
}

double left_wing_slope_floor(double m_edge, double w_edge) { return -right_wing_slope_cap(-m_edge, w_edge); }

PreparedSurface::PreparedSurface(CubicSpline spline, double tau, double forward, double rate, double slope_low,
                                 double slope_high)
    : spline_(std::move(spline)), tau_(tau), forward_(forward), rate_(rate), slope_low_(slope_low),
      slope_high_(slope_high) {
    c_low_ = spline_.values().front() - slope_low_ * spline_.front();
    c_high_ = spline_.values().back() - slope_high_ * spline_.back();
}

double PreparedSurface::total_variance(double m) const {
    double w;
    if (m < spline_.front()) w = c_low_ + slope_low_ * m;
    else if (m > spline_.back()) w = c_high_ + slope_high_ * m;
    else w = spline_(m);
    if (!(w > 0.0)) throw ArbitrageError(fmt::format("non-positive total variance {} at m = {}", w, m), m);
    return w;
}

double PreparedSurface::normalized_otm_price(double m) const {
    return bs_price_normalized(m, total_variance(m), m > 0.0);
}

SurfacePoint PreparedSurface::evaluate(double m) const {
    const double w = total_variance(m);
    const double price = std::exp(-rate_ * tau_) * forward_ * bs_price_normalized(m, w, m > 0.0);
    return {w, std::sqrt(w / tau_), price};
}

PreparedSurface fit_surface(const OptionSlice& slice, const KnotSelection& knots) {
    if (knots.indices.size() < 4) throw SurfaceError("fit_surface: at least four knots required");
    std::vector<double> x, y;
    for (std::size_t i : knots.indices) {
        x.push_back(slice.m[i]);
        y.push_back(slice.bsiv[i] * slice.bsiv[i] * slice.tau);
    }
    CubicSpline spline(x, y);

    // Scan the interpolation range for non-positive total variance.
    for (std::size_t i = 0; i + 1 < x.size(); ++i) {
        for (int k = 0; k <= 32; ++k) {
            const double m = x[i] + (x[i + 1] - x[i]) * k / 32.0;
            if (!(spline(m) > 0.0)) {
                throw ArbitrageError(fmt::format("spline total variance non-positive at m = {}", m), m);
            }
        }
    }

    constexpr double shrink = 1e-10;
    const double w_lo = y.front(), w_hi = y.back();
    const double cap = std::min(right_wing_slope_cap(x.back(), w_hi), 2.0) - shrink;
    const double floor = std::max(left_wing_slope_floor(x.front(), w_lo), -2.0) + shrink;
    const double slope_high = std::clamp(spline.derivative(x.back()), 0.0, std::max(cap, 0.0));
    const double slope_low = std::clamp(spline.derivative(x.front()), std::min(floor, 0.0), 0.0);

    PreparedSurface ps(std::move(spline), slice.tau, slice.forward, slice.rate, slope_low, slope_high);
    ps.knot_indices = knots.indices;
    ps.fallback_knots = knots.fallback;
    return ps;
}

SurfacePoint evaluate_surface(const PreparedSurface& surface, double m) { return surface.evaluate(m); }

}  // namespace ccf
