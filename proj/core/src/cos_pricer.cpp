#include "ccf/cos_pricer.hpp"

#include "ccf/errors.hpp"

#include <algorithm>
#include <cmath>
#include <fmt/format.h>
#include <numbers>

namespace ccf {

namespace {

AffineModel undiscounted(AffineModel model) {
    model.rate = 0.0;
    return model;
}

double log_mgf(const AffineModel& model, const Vec& state, double s, double tau, const RiccatiOptions& opts) {
    CVec beta0 = CVec::Zero(model.dim_state);
    beta0(0) = s;
    const double taus[] = {tau};
    const auto path = solve_riccati_path(model, beta0, taus, opts);
    cplx value = path[0].alpha;
    for (int k = 1; k < model.dim_state; ++k) value += path[0].beta(k) * state(k);
    return value.real();
}

// Cosine coefficients of e^y and 1 on [c, d] relative to the expansion base a.
double chi(double w, double a, double c, double d) {
    const double ed = std::exp(d), ec = std::exp(c);
    return (std::cos(w * (d - a)) * ed - std::cos(w * (c - a)) * ec + w * std::sin(w * (d - a)) * ed -
            w * std::sin(w * (c - a)) * ec) /
           (1.0 + w * w);
}

double psi(double w, double a, double c, double d) {
    if (w == 0.0) return d - c;
    return (std::sin(w * (d - a)) - std::sin(w * (c - a))) / w;
}

}  // namespace

CosRange cumulant_range(const AffineModel& model_in, const Vec& state, double tau, double width,
                        const RiccatiOptions& riccati) {
    const AffineModel model = undiscounted(model_in);
    constexpr double h = 0.1;
    const double k0 = log_mgf(model, state, 0.0, tau, riccati);
    const double kp = log_mgf(model, state, h, tau, riccati), km = log_mgf(model, state, -h, tau, riccati);
    const double kp2 = log_mgf(model, state, 2 * h, tau, riccati), km2 = log_mgf(model, state, -2 * h, tau, riccati);
    const double c1 = (kp - km) / (2 * h);
    const double c2 = std::max((kp - 2 * k0 + km) / (h * h), 1e-12);
    const double c4 = std::max((kp2 - 4 * kp + 6 * k0 - 4 * km + km2) / std::pow(h, 4), 0.0);
    const double half = width * std::sqrt(c2 + std::sqrt(c4));
    return {c1 - half, c1 + half};
}

CosPricer::CosPricer(const AffineModel& model_in, std::vector<double> taus, const Vec& range_state,
                     const CosOptions& options)
    : taus_(std::move(taus)), options_(options), dim_(model_in.dim_state) {
    if (options.terms < 2) throw InputError("COS pricer needs at least two terms");
    const AffineModel model = undiscounted(model_in);
    for (double tau : taus_) {
        if (!(tau > 0.0)) throw InputError("COS pricer tenors must be positive");
        const CosRange r = cumulant_range(model, range_state, tau, options.width, options.riccati);
        ranges_.push_back(r);
        std::vector<cplx> alpha(static_cast<std::size_t>(options.terms));
        std::vector<CVec> beta(static_cast<std::size_t>(options.terms));
        const double taus_one[] = {tau};
        for (int k = 0; k < options.terms; ++k) {
            const double u = k * std::numbers::pi / (r.b - r.a);
            CVec b0 = CVec::Zero(dim_);
            b0(0) = cplx(0.0, u);
            const auto path = solve_riccati_path(model, b0, taus_one, options.riccati);
            alpha[static_cast<std::size_t>(k)] = path[0].alpha;
            CVec bt = path[0].beta;
            bt(0) -= cplx(0.0, u);
            beta[static_cast<std::size_t>(k)] = std::move(bt);
        }
        alpha_.push_back(std::move(alpha));
        beta_.push_back(std::move(beta));
    }
}

std::vector<double> CosPricer::puts(std::size_t tenor, const Vec& state, double forward,
                                    std::span<const double> strikes, double rate) const {
    if (tenor >= taus_.size()) throw LookupError("COS pricer: tenor index out of range");
    if (!(forward > 0.0)) throw InputError("COS pricer: forward must be positive");
    const CosRange r = ranges_[tenor];
    const double width = r.b - r.a;
    const int n = options_.terms;
    const double tau = taus_[tenor];

    // Characteristic function times the shift to the expansion base.
    std::vector<cplx> weights(static_cast<std::size_t>(n));
    for (int k = 0; k < n; ++k) {
        const auto kk = static_cast<std::size_t>(k);
        cplx e = alpha_[tenor][kk];
        for (int j = 1; j < dim_; ++j) e += beta_[tenor][kk](j) * state(j);
        const double u = k * std::numbers::pi / width;
        weights[kk] = std::exp(e - cplx(0.0, u * r.a));
    }
    const double tail = std::abs(weights.back());
    if (!(tail <= options_.tail_tol)) {
        throw ExpansionError(fmt::format("COS expansion not converged at tau = {:.6g}: |phi(u_N)| = {:.3g}", tau, tail));
    }
    weights[0] *= 0.5;

    std::vector<double> out;
    out.reserve(strikes.size());
    const double disc = std::exp(-rate * tau);
    for (double strike : strikes) {
        if (!(strike > 0.0)) throw InputError("COS pricer: strikes must be positive");
        const double x0 = std::log(forward / strike);
        const double a = x0 + r.a, b = x0 + r.b;
        if (a >= 0.0) {
            out.push_back(0.0);
            continue;
        }
        const double d = std::min(0.0, b);
        double sum = 0.0;
        for (int k = 0; k < n; ++k) {
            const double w = k * std::numbers::pi / width;
            const double vk = psi(w, a, a, d) - chi(w, a, a, d);
            sum += weights[static_cast<std::size_t>(k)].real() * vk;
        }
        out.push_back(std::max(disc * strike * 2.0 / width * sum, 0.0));
    }
    return out;
}

std::vector<double> CosPricer::calls(std::size_t tenor, const Vec& state, double forward,
                                     std::span<const double> strikes, double rate) const {
    auto p = puts(tenor, state, forward, strikes, rate);
    const double disc = std::exp(-rate * taus_[tenor]);
    for (std::size_t i = 0; i < p.size(); ++i) p[i] += disc * (forward - strikes[i]);
    return p;
}

std::vector<double> CosPricer::otm_prices(std::size_t tenor, const Vec& state, double forward,
                                          std::span<const double> strikes, double rate) const {
    auto p = puts(tenor, state, forward, strikes, rate);
    const double disc = std::exp(-rate * taus_[tenor]);
    for (std::size_t i = 0; i < p.size(); ++i) {
        if (strikes[i] > forward) p[i] = std::max(p[i] + disc * (forward - strikes[i]), 0.0);
    }
    return p;
}

std::vector<double> cos_price(const AffineModel& model, const Vec& state, double forward,
                              std::span<const double> strikes, double tau, double rate, const CosOptions& options) {
    const CosPricer pricer(model, {tau}, state, options);
    return pricer.otm_prices(0, state, forward, strikes, rate);
}

}  // namespace ccf
