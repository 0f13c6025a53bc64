#include "ccf/spanning.hpp"

#include "ccf/black_scholes.hpp"
#include "ccf/errors.hpp"
#include "ccf/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <fmt/format.h>
#include <map>
#include <numbers>

namespace ccf {

namespace {

bool is_arithmetic(std::span<const double> u) {
    if (u.size() < 3) return true;
    const double step = u[1] - u[0];
    for (std::size_t i = 2; i < u.size(); ++i) {
        if (std::abs(u[i] - u[i - 1] - step) > 1e-12 * std::max(1.0, std::abs(step))) return false;
    }
    return true;
}

// Accumulates sums[k] += a * exp(i u_k m) for all k.
class Accumulator {
public:
    explicit Accumulator(std::span<const double> u) : u_(u), sums_(u.size(), 0.0), arithmetic_(is_arithmetic(u)) {}

    void add(double m, double a) {
        if (a == 0.0) return;
        if (!arithmetic_) {
            for (std::size_t k = 0; k < u_.size(); ++k) sums_[k] += a * std::polar(1.0, u_[k] * m);
            return;
        }
        cplx z = a * std::polar(1.0, u_[0] * m);
        const cplx step = u_.size() > 1 ? std::polar(1.0, (u_[1] - u_[0]) * m) : cplx{1.0};
        for (std::size_t k = 0; k < u_.size(); ++k) {
            sums_[k] += z;
            z *= step;
        }
    }

    const std::vector<cplx>& sums() const { return sums_; }

private:
    std::span<const double> u_;
    std::vector<cplx> sums_;
    bool arithmetic_;
};

std::vector<cplx> finish(const std::vector<cplx>& sums, std::span<const double> u, double discount) {
    std::vector<cplx> out(u.size());
    for (std::size_t k = 0; k < u.size(); ++k) {
        const cplx ut = u[k] * u[k] + I * u[k];
        out[k] = discount * (1.0 - ut * sums[k]);
    }
    return out;
}

}  // namespace

std::vector<cplx> span_ccf(const PreparedSurface& surface, std::span<const double> u_grid, const SpanGrid& grid) {
    if (!(grid.dm > 0.0) || !(grid.m_high > grid.m_low)) throw InputError("span_ccf: invalid grid");
    const auto n = static_cast<std::size_t>(std::llround((grid.m_high - grid.m_low) / grid.dm)) + 1;
    Accumulator acc(u_grid);
    for (std::size_t j = 1; j < n; ++j) {
        const double m = grid.m_low + static_cast<double>(j) * grid.dm;
        double price;
        try {
            price = surface.normalized_otm_price(m);
        } catch (const Error& e) {
            throw SurfaceError(fmt::format("surface evaluation failed at m = {}, tau = {}: {}", m, surface.tau(), e.what()));
        }
        acc.add(m, std::exp(-m) * price * grid.dm);
    }
    return finish(acc.sums(), u_grid, std::exp(-surface.rate() * surface.tau()));
}

std::vector<cplx> span_ccf_nodes(std::span<const double> m, std::span<const double> otm_prices,
                                 std::span<const double> u_grid, double tau, double forward, double rate) {
    if (m.size() != otm_prices.size()) throw InputError("span_ccf_nodes: size mismatch");
    const double discount = std::exp(-rate * tau);
    Accumulator acc(u_grid);
    for (std::size_t j = 1; j < m.size(); ++j) {
        // Level prices enter through u_t = (u^2 + iu)/F; rescale to the discounted-normalized convention.
        const double normalized = otm_prices[j] / (forward * discount);
        acc.add(m[j], std::exp(-m[j]) * normalized * (m[j] - m[j - 1]));
    }
    return finish(acc.sums(), u_grid, discount);
}

std::vector<cplx> log_ccf_unwrap(std::span<const cplx> phi) {
    std::vector<cplx> out(phi.size());
    constexpr double two_pi = 2.0 * std::numbers::pi;
    for (std::size_t k = 0; k < phi.size(); ++k) {
        const double mod = std::abs(phi[k]);
        if (!(mod >= 1e-14)) {
            throw NearZeroModulusError(fmt::format("log_ccf_unwrap: |phi| = {:.3e} at position {}", mod, k));
        }
        double arg = std::arg(phi[k]);
        if (k > 0) arg += two_pi * std::round((out[k - 1].imag() - arg) / two_pi);
        out[k] = {std::log(mod), arg};
    }
    return out;
}

CovarianceNodes nodes_from_slice(const OptionSlice& s) {
    CovarianceNodes n;
    n.m = s.m;
    n.bsiv = s.bsiv;
    n.vega = s.vega;
    n.dm.assign(s.size(), 0.0);
    for (std::size_t j = 1; j < s.size(); ++j) n.dm[j] = s.m[j] - s.m[j - 1];
    return n;
}

CovarianceNodes nodes_from_surface(const PreparedSurface& ps, const SpanGrid& grid) {
    CovarianceNodes n;
    const auto count = static_cast<std::size_t>(std::llround((grid.m_high - grid.m_low) / grid.dm)) + 1;
    n.m.reserve(count);
    for (std::size_t j = 0; j < count; ++j) {
        const double m = grid.m_low + static_cast<double>(j) * grid.dm;
        const auto p = ps.evaluate(m);
        n.m.push_back(m);
        n.bsiv.push_back(p.bsiv);
        n.vega.push_back(vega(ps.forward(), ps.forward() * std::exp(m), ps.tau(), ps.rate(), p.bsiv));
        n.dm.push_back(j == 0 ? 0.0 : grid.dm);
    }
    return n;
}

Mat measurement_covariance(const CovarianceNodes& nodes, std::span<const double> u, std::span<const cplx> phi,
                           double forward, double scale) {
    const std::size_t q = u.size();
    if (phi.size() != q) throw InputError("measurement_covariance: phi and u sizes differ");
    for (const auto& p : phi) {
        if (!(std::abs(p) >= 1e-14)) throw NearZeroModulusError("measurement_covariance: |phi| below 1e-14");
    }

    // S(w) = sum_j exp((i w - 2) m_j) kappa_j^2 nu_j^2 dm_j^2 for every needed frequency w >= 0.
    std::map<long long, double> keyed;   // frequency rounded to 1e-9 -> exact value
    auto key = [](double w) { return std::llround(w * 1e9); };
    for (std::size_t k = 0; k < q; ++k) {
        for (std::size_t l = 0; l < q; ++l) {
            keyed[key(std::abs(u[k] - u[l]))] = std::abs(u[k] - u[l]);
            keyed[key(std::abs(u[k] + u[l]))] = std::abs(u[k] + u[l]);
        }
    }
    std::vector<double> freqs;
    for (const auto& [kk, w] : keyed) freqs.push_back(w);
    const bool integer = std::all_of(freqs.begin(), freqs.end(), [](double w) { return std::abs(w - std::round(w)) < 1e-12; });
    const long max_freq = integer && !freqs.empty() ? std::lround(freqs.back()) : 0;

    std::vector<cplx> s(freqs.size(), 0.0);
    std::vector<cplx> by_int(integer ? static_cast<std::size_t>(max_freq) + 1 : 0, 0.0);
    for (std::size_t j = 0; j < nodes.m.size(); ++j) {
        const double g = nodes.bsiv[j] * nodes.bsiv[j] * nodes.vega[j] * nodes.vega[j] * nodes.dm[j] * nodes.dm[j];
        if (g == 0.0) continue;
        const double a = g * std::exp(-2.0 * nodes.m[j]);
        if (integer) {
            const cplx step = std::polar(1.0, nodes.m[j]);
            cplx z = a;
            for (long w = 0; w <= max_freq; ++w) {
                by_int[static_cast<std::size_t>(w)] += z;
                z *= step;
            }
        } else {
            for (std::size_t f = 0; f < freqs.size(); ++f) s[f] += a * std::polar(1.0, freqs[f] * nodes.m[j]);
        }
    }
    auto S = [&](double w) -> cplx {
        const double aw = std::abs(w);
        cplx v;
        if (integer) {
            v = by_int[static_cast<std::size_t>(std::lround(aw))];
        } else {
            const auto it = std::lower_bound(freqs.begin(), freqs.end(), aw - 1e-9);
            v = s[static_cast<std::size_t>(it - freqs.begin())];
        }
        return w < 0.0 ? std::conj(v) : v;
    };

    CMat gamma(q, q), pseudo(q, q);
    std::vector<cplx> ut(q);
    for (std::size_t k = 0; k < q; ++k) ut[k] = (u[k] * u[k] + I * u[k]) / forward;
    for (std::size_t k = 0; k < q; ++k) {
        for (std::size_t l = 0; l < q; ++l) {
            gamma(k, l) = ut[k] * std::conj(ut[l]) * S(u[k] - u[l]) / (phi[k] * std::conj(phi[l]));
            pseudo(k, l) = ut[k] * ut[l] * S(u[k] + u[l]) / (phi[k] * phi[l]);
        }
    }
    const auto qi = static_cast<Eigen::Index>(q);
    Mat h(2 * qi, 2 * qi);
    h.topLeftCorner(qi, qi) = 0.5 * (gamma + pseudo).real();
    h.topRightCorner(qi, qi) = 0.5 * (pseudo - gamma).imag();
    h.bottomLeftCorner(qi, qi) = 0.5 * (gamma + pseudo).imag();
    h.bottomRightCorner(qi, qi) = 0.5 * (gamma - pseudo).real();
    return psd_clip(scale * scale * h);
}

Mat spline_covariance(const PreparedSurface& surface, std::span<const double> u, std::span<const cplx> phi,
                      const SpanGrid& grid) {
    const std::size_t q = u.size();
    if (phi.size() != q) throw InputError("spline_covariance: phi and u sizes differ");
    if (!(grid.dm > 0.0) || !(grid.m_high > grid.m_low)) throw InputError("spline_covariance: invalid grid");
    for (const auto& p : phi) {
        if (!(std::abs(p) >= 1e-14)) throw NearZeroModulusError("spline_covariance: |phi| below 1e-14");
    }
    const CubicSpline& spline = surface.spline();
    const std::vector<double>& x = spline.knots();
    const auto knots = static_cast<Eigen::Index>(x.size());
    const auto qi = static_cast<Eigen::Index>(q);

    // Sensitivities of the curvatures and end slopes to each knot value.
    Mat curvature(knots, knots);
    Vec slope_low(knots), slope_high(knots);
    for (Eigen::Index i = 0; i < knots; ++i) {
        std::vector<double> unit(x.size(), 0.0);
        unit[static_cast<std::size_t>(i)] = 1.0;
        const CubicSpline basis(x, unit);
        curvature.col(i) = Eigen::Map<const Vec>(basis.second_derivatives().data(), knots);
        slope_low(i) = basis.derivative(x.front());
        slope_high(i) = basis.derivative(x.back());
    }
    const bool low_free = surface.slope_low() == spline.derivative(x.front());
    const bool high_free = surface.slope_high() == spline.derivative(x.back());

    // Phase-weighted moments of the price sensitivity: four per segment, two per wing.
    CMat segment_sums = CMat::Zero(qi, 4 * (knots - 1));
    CMat wing_sums = CMat::Zero(qi, 4);
    const bool arithmetic = is_arithmetic(u);
    CVec phase(qi);
    const auto n = static_cast<std::size_t>(std::llround((grid.m_high - grid.m_low) / grid.dm)) + 1;
    for (std::size_t j = 1; j < n; ++j) {
        const double m = grid.m_low + static_cast<double>(j) * grid.dm;
        const double s = std::sqrt(surface.total_variance(m));
        const double d1 = -m / s + 0.5 * s;
        const double g = std::exp(-m - 0.5 * d1 * d1) / (2.0 * s * std::sqrt(2.0 * std::numbers::pi)) * grid.dm;
        if (!(g > 1e-300)) continue;
        if (arithmetic) {
            cplx z = std::polar(g, u[0] * m);
            const cplx step = q > 1 ? std::polar(1.0, (u[1] - u[0]) * m) : cplx{1.0};
            for (Eigen::Index k = 0; k < qi; ++k) {
                phase(k) = z;
                z *= step;
            }
        } else {
            for (Eigen::Index k = 0; k < qi; ++k) phase(k) = std::polar(g, u[static_cast<std::size_t>(k)] * m);
        }
        if (m < x.front()) {
            wing_sums.col(0) += phase;
            wing_sums.col(1) += (m - x.front()) * phase;
        } else if (m > x.back()) {
            wing_sums.col(2) += phase;
            wing_sums.col(3) += (m - x.back()) * phase;
        } else {
            const auto seg = static_cast<Eigen::Index>(
                std::min<std::ptrdiff_t>(std::upper_bound(x.begin(), x.end(), m) - x.begin() - 1, knots - 2));
            const double h = x[static_cast<std::size_t>(seg) + 1] - x[static_cast<std::size_t>(seg)];
            const double b = (m - x[static_cast<std::size_t>(seg)]) / h;
            const double a = 1.0 - b;
            segment_sums.col(4 * seg) += a * phase;
            segment_sums.col(4 * seg + 1) += b * phase;
            segment_sums.col(4 * seg + 2) += (a * a * a - a) * h * h / 6.0 * phase;
            segment_sums.col(4 * seg + 3) += (b * b * b - b) * h * h / 6.0 * phase;
        }
    }

    // d(spanning sum)/d(knot total variance).
    CMat coef = CMat::Zero(qi, knots);
    for (Eigen::Index seg = 0; seg + 1 < knots; ++seg) {
        coef.col(seg) += segment_sums.col(4 * seg);
        coef.col(seg + 1) += segment_sums.col(4 * seg + 1);
        coef += segment_sums.col(4 * seg + 2) * curvature.row(seg).cast<cplx>();
        coef += segment_sums.col(4 * seg + 3) * curvature.row(seg + 1).cast<cplx>();
    }
    coef.col(0) += wing_sums.col(0);
    coef.col(knots - 1) += wing_sums.col(2);
    if (low_free) coef += wing_sums.col(1) * slope_low.transpose().cast<cplx>();
    if (high_free) coef += wing_sums.col(3) * slope_high.transpose().cast<cplx>();

    // Unit price noise moves a knot's total variance by 2 w per unit of relative volatility error.
    const double discount = std::exp(-surface.rate() * surface.tau());
    for (Eigen::Index k = 0; k < qi; ++k) {
        const double uk = u[static_cast<std::size_t>(k)];
        coef.row(k) *= -discount * cplx(uk * uk, uk) / phi[static_cast<std::size_t>(k)];
    }
    for (Eigen::Index i = 0; i < knots; ++i) coef.col(i) *= 2.0 * spline.values()[static_cast<std::size_t>(i)];

    Mat stacked(2 * qi, knots);
    stacked.topRows(qi) = coef.real();
    stacked.bottomRows(qi) = coef.imag();
    return psd_clip(stacked * stacked.transpose());
}

Mat CCFMeasurement::H_full() const {
    const auto p = static_cast<Eigen::Index>(dim());
    Mat h = Mat::Zero(p, p);
    Eigen::Index off = 0;
    for (const auto& b : H_blocks) {
        h.block(off, off, b.rows(), b.cols()) = b;
        off += b.rows();
    }
    return h;
}

CCFMeasurement build_measurement(Date date, std::span<const TenorInput> tenors, std::span<const double> u_grid,
                                 const MeasurementOptions& options) {
    if (tenors.empty()) throw InputError("build_measurement: no tenors");
    const auto q = static_cast<Eigen::Index>(u_grid.size());
    CCFMeasurement out;
    out.date = date;
    out.u_grid.assign(u_grid.begin(), u_grid.end());
    out.y = Vec(2 * q * static_cast<Eigen::Index>(tenors.size()));
    Eigen::Index off = 0;
    for (const auto& t : tenors) {
        const auto& ps = *t.surface;
        std::vector<cplx> phi;
        try {
            phi = span_ccf(ps, u_grid, options.grid);
            const auto logs = log_ccf_unwrap(phi);
            for (Eigen::Index k = 0; k < q; ++k) {
                out.y(off + k) = logs[static_cast<std::size_t>(k)].real();
                out.y(off + q + k) = logs[static_cast<std::size_t>(k)].imag();
            }
            switch (options.covariance_grid) {
            case CovarianceGrid::Spline:
                out.H_blocks.push_back(spline_covariance(ps, u_grid, phi, options.grid));
                break;
            case CovarianceGrid::Quotes:
                out.H_blocks.push_back(measurement_covariance(nodes_from_slice(*t.slice), u_grid, phi, ps.forward()));
                break;
            case CovarianceGrid::Interpolated:
                out.H_blocks.push_back(
                    measurement_covariance(nodes_from_surface(ps, options.grid), u_grid, phi, ps.forward()));
                break;
            }
        } catch (const Error& e) {
            throw SurfaceError(fmt::format("tenor {:.6f}: {}", ps.tau(), e.what()));
        }
        out.taus.push_back(ps.tau());
        out.forwards.push_back(ps.forward());
        out.rates.push_back(ps.rate());
        off += 2 * q;
    }
    return out;
}

}  // namespace ccf
