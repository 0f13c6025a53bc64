#include "ccf/riccati.hpp"

#include "ccf/errors.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <fmt/format.h>

namespace ccf {

namespace {

constexpr int kMaxDim = 8;
using Work = std::array<cplx, kMaxDim + 1>;

// y[0] = alpha, y[1..n] = beta.
class RiccatiSystem {
public:
    explicit RiccatiSystem(const AffineModel& m) : m_(m), n_(m.dim_state) {
        if (n_ > kMaxDim) throw InputError("state dimension above supported maximum");
    }

    int size() const { return n_ + 1; }

    void rhs(const Work& y, Work& dy) const {
        const cplx* b = y.data() + 1;
        std::array<cplx, kMaxDim> jump_terms{};
        cplx alpha_jump = 0.0;
        for (const auto& j : m_.jumps) {
            const cplx chi = j.transform(std::span<const cplx>(b, n_)) - 1.0;
            alpha_jump += j.l0 * chi;
            for (int k = 0; k < n_; ++k) jump_terms[k] += j.l1(k) * chi;
        }
        cplx da = -m_.rate + alpha_jump;
        for (int k = 0; k < n_; ++k) da += m_.K0(k) * b[k];
        da += 0.5 * quad(m_.H0, b);
        dy[0] = da;
        for (int k = 0; k < n_; ++k) {
            cplx s = jump_terms[k];
            for (int l = 0; l < n_; ++l) s += m_.K1(l, k) * b[l];
            s += 0.5 * quad(m_.H1[k], b);
            dy[k + 1] = s;
        }
    }

private:
    cplx quad(const Mat& h, const cplx* b) const {
        cplx s = 0.0;
        for (int r = 0; r < n_; ++r) {
            if (b[r] == 0.0) continue;
            cplx row = 0.0;
            for (int c = 0; c < n_; ++c) row += h(r, c) * b[c];
            s += b[r] * row;
        }
        return s;
    }

    const AffineModel& m_;
    int n_;
};

// Dormand-Prince 5(4) tableau.
constexpr double c2 = 1.0 / 5, c3 = 3.0 / 10, c4 = 4.0 / 5, c5 = 8.0 / 9;
constexpr double a21 = 1.0 / 5;
constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187, a53 = 64448.0 / 6561, a54 = -212.0 / 729;
constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247, a64 = 49.0 / 176,
                 a65 = -5103.0 / 18656;
constexpr double b1 = 35.0 / 384, b3 = 500.0 / 1113, b4 = 125.0 / 192, b5 = -2187.0 / 6784, b6 = 11.0 / 84;
constexpr double e1 = 71.0 / 57600, e3 = -71.0 / 16695, e4 = 71.0 / 1920, e5 = -17253.0 / 339200,
                 e6 = 22.0 / 525, e7 = -1.0 / 40;

struct StepResult {
    Work y;
    Work k_end;
    double err;
};

StepResult dp_step(const RiccatiSystem& sys, const Work& y, const Work& k1, double h, const RiccatiOptions& opt) {
    const int n = sys.size();
    Work k2, k3, k4, k5, k6, k7, tmp;
    for (int i = 0; i < n; ++i) tmp[i] = y[i] + h * a21 * k1[i];
    sys.rhs(tmp, k2);
    for (int i = 0; i < n; ++i) tmp[i] = y[i] + h * (a31 * k1[i] + a32 * k2[i]);
    sys.rhs(tmp, k3);
    for (int i = 0; i < n; ++i) tmp[i] = y[i] + h * (a41 * k1[i] + a42 * k2[i] + a43 * k3[i]);
    sys.rhs(tmp, k4);
    for (int i = 0; i < n; ++i) tmp[i] = y[i] + h * (a51 * k1[i] + a52 * k2[i] + a53 * k3[i] + a54 * k4[i]);
    sys.rhs(tmp, k5);
    for (int i = 0; i < n; ++i)
        tmp[i] = y[i] + h * (a61 * k1[i] + a62 * k2[i] + a63 * k3[i] + a64 * k4[i] + a65 * k5[i]);
    sys.rhs(tmp, k6);
    StepResult r;
    for (int i = 0; i < n; ++i)
        r.y[i] = y[i] + h * (b1 * k1[i] + b3 * k3[i] + b4 * k4[i] + b5 * k5[i] + b6 * k6[i]);
    sys.rhs(r.y, k7);
    r.k_end = k7;
    double err = 0.0;
    for (int i = 0; i < n; ++i) {
        const cplx e = h * (e1 * k1[i] + e3 * k3[i] + e4 * k4[i] + e5 * k5[i] + e6 * k6[i] + e7 * k7[i]);
        const double scale = opt.atol + opt.rtol * std::max(std::abs(y[i]), std::abs(r.y[i]));
        err = std::max(err, std::abs(e) / scale);
    }
    r.err = err;
    return r;
}

bool finite(const Work& y, int n) {
    for (int i = 0; i < n; ++i) {
        if (!std::isfinite(y[i].real()) || !std::isfinite(y[i].imag())) return false;
    }
    return true;
}

}  // namespace

std::vector<RiccatiPoint> solve_riccati_path(const AffineModel& model, const CVec& beta0,
                                             std::span<const double> taus, const RiccatiOptions& opt) {
    const RiccatiSystem sys(model);
    const int n = sys.size();
    const double u = beta0.size() > 0 ? beta0(0).imag() : 0.0;

    for (std::size_t i = 0; i < taus.size(); ++i) {
        if (!(taus[i] >= 0.0) || (i > 0 && !(taus[i] > taus[i - 1]))) {
            throw InputError("riccati: tenors must be non-negative and strictly ascending");
        }
    }

    Work y{};
    y[0] = 0.0;
    for (int k = 0; k < model.dim_state; ++k) y[k + 1] = beta0(k);

    std::vector<RiccatiPoint> out;
    out.reserve(taus.size());
    double t = 0.0;
    Work k1;
    auto eval = [&](const Work& state, Work& d) {
        try {
            sys.rhs(state, d);
        } catch (const PoleError& e) {
            throw PoleError(fmt::format("{} at u = {}, tau = {}", e.what(), u, t));
        }
    };
    eval(y, k1);

    const bool fixed = opt.fixed_step > 0.0;
    double h = fixed ? opt.fixed_step : std::min(opt.max_step, 1e-3 * (taus.empty() ? 1.0 : taus.back()));
    if (!fixed) {
        double slope = 0.0;
        for (int i = 0; i < n; ++i) slope = std::max(slope, std::abs(k1[i]) / (opt.atol + opt.rtol * std::abs(y[i])));
        if (slope > 0.0) h = std::min(h, 0.01 / std::pow(slope, 0.2));
        h = std::max(h, 1e-10);
    }

    for (double target : taus) {
        while (t < target) {
            const double remaining = target - t;
            double step = std::min(h, remaining);
            bool last = step >= remaining * (1.0 - 1e-12);
            if (!fixed && remaining - step < 1e-3 * step) {
                step = remaining;
                last = true;
            }
            if (step < 1e-14 * std::max(1.0, target)) {
                throw RiccatiError(fmt::format("riccati: step size underflow at u = {}, tau = {}", u, target), u,
                                   target);
            }
            StepResult r;
            try {
                r = dp_step(sys, y, k1, step, opt);
            } catch (const PoleError& e) {
                throw PoleError(fmt::format("{} (u = {}, tau = {})", e.what(), u, target));
            }
            const bool ok = finite(r.y, n) && std::isfinite(r.err);
            if (fixed) {
                if (!ok) throw RiccatiError(fmt::format("riccati: non-finite state at u = {}, tau = {}", u, target), u, target);
                y = r.y;
                k1 = r.k_end;
                t = last ? target : t + step;
                continue;
            }
            if (ok && r.err <= 1.0) {
                y = r.y;
                k1 = r.k_end;
                t = last ? target : t + step;
                const double grow = r.err > 0.0 ? 0.9 * std::pow(r.err, -0.2) : 5.0;
                const double next = step * std::clamp(grow, 0.2, 5.0);
                h = std::min(opt.max_step, last ? std::max(h, next) : next);
            } else {
                const double shrink = ok ? std::max(0.2, 0.9 * std::pow(r.err, -0.25)) : 0.1;
                h = step * shrink;
            }
        }
        RiccatiPoint p;
        p.alpha = y[0];
        p.beta = CVec(model.dim_state);
        for (int k = 0; k < model.dim_state; ++k) p.beta(k) = y[k + 1];
        out.push_back(std::move(p));
    }
    return out;
}

CCFCoefficients::CCFCoefficients(std::vector<double> u_grid, std::vector<double> tau_grid, int dim_state)
    : u_(std::move(u_grid)), tau_(std::move(tau_grid)), dim_(dim_state) {
    alpha_.assign(u_.size() * tau_.size(), 0.0);
    beta_.assign(u_.size() * tau_.size(), CVec::Zero(dim_state));
}

CVec CCFCoefficients::beta_tilde(std::size_t iu, std::size_t it) const {
    CVec b = beta(iu, it);
    b(0) -= I * u_[iu];
    return b;
}

void CCFCoefficients::set(std::size_t iu, std::size_t it, const RiccatiPoint& point) {
    alpha_[iu * tau_.size() + it] = point.alpha;
    beta_[iu * tau_.size() + it] = point.beta;
}

namespace {
std::size_t find_on_grid(const std::vector<double>& grid, double x, const char* what) {
    for (std::size_t i = 0; i < grid.size(); ++i) {
        if (std::abs(grid[i] - x) <= 1e-12 * std::max(1.0, std::abs(x))) return i;
    }
    throw LookupError(fmt::format("{} = {} is not on the coefficient grid", what, x));
}
}  // namespace

std::size_t CCFCoefficients::u_index(double u) const { return find_on_grid(u_, u, "u"); }
std::size_t CCFCoefficients::tau_index(double tau) const { return find_on_grid(tau_, tau, "tau"); }

CCFCoefficients riccati_solve(const AffineModel& model, const std::vector<double>& u_grid,
                              const std::vector<double>& tau_grid, const RiccatiOptions& options) {
    CCFCoefficients out(u_grid, tau_grid, model.dim_state);
    for (std::size_t iu = 0; iu < u_grid.size(); ++iu) {
        CVec b0 = CVec::Zero(model.dim_state);
        b0(0) = I * u_grid[iu];
        const auto path = solve_riccati_path(model, b0, tau_grid, options);
        for (std::size_t it = 0; it < tau_grid.size(); ++it) out.set(iu, it, path[it]);
    }
    return out;
}

cplx model_ccf(const CCFCoefficients& coeffs, const Vec& state, double u, double tau) {
    const auto iu = coeffs.u_index(u);
    const auto it = coeffs.tau_index(tau);
    const CVec bt = coeffs.beta_tilde(iu, it);
    cplx s = coeffs.alpha(iu, it);
    for (int k = 0; k < coeffs.dim_state(); ++k) s += bt(k) * state(k);
    return std::exp(s);
}

std::vector<double> default_u_grid() {
    std::vector<double> u(20);
    for (int i = 0; i < 20; ++i) u[i] = i + 1.0;
    return u;
}

}  // namespace ccf
