#include "ccf/moments.hpp"

#include "ccf/errors.hpp"
#include "ccf/linalg.hpp"
#include "ccf/riccati.hpp"

#include <cmath>

namespace ccf {

Mat ConditionalMomentCoeffs::variance(const Vec& x) const {
    Mat v = Q0;
    for (std::size_t j = 0; j < Q1.size(); ++j) v += x(static_cast<Eigen::Index>(j)) * Q1[j];
    return v;
}

namespace {

// expm1(z)/z with the removable singularity filled in.
double phi1(double z) { return std::abs(z) < 1e-12 ? 1.0 + 0.5 * z : std::expm1(z) / z; }

ConditionalMomentCoeffs closed_form(const AffineModel& m, double dt, const Vec& state) {
    const int x = m.latent.front();
    const auto obs = m.observed();

    double k0 = m.K0(x), h0 = m.H0(x, x);
    for (int o : obs) {
        k0 += m.K1(x, o) * state(o);
        h0 += state(o) * m.H1[o](x, x);
    }
    const double k1 = m.K1(x, x);
    const double h1 = m.H1[x](x, x);

    double g0 = k0, g1 = k1, a0 = h0, a1 = h1;
    for (const auto& j : m.jumps) {
        double l0 = j.l0;
        for (int o : obs) l0 += j.l1(o) * state(o);
        g0 += l0 * j.mean(x);
        g1 += j.l1(x) * j.mean(x);
        a0 += l0 * j.second_moment(x, x);
        a1 += j.l1(x) * j.second_moment(x, x);
    }

    const double e = std::exp(g1 * dt);
    const double s1 = dt * phi1(g1 * dt);
    ConditionalMomentCoeffs out;
    out.dt = dt;
    out.c = Vec::Constant(1, g0 * s1);
    out.T = Mat::Constant(1, 1, e);
    out.Q0 = Mat::Constant(1, 1, a0 * dt * phi1(2.0 * g1 * dt) + 0.5 * a1 * g0 * s1 * s1);
    out.Q1 = {Mat::Constant(1, 1, a1 * e * s1)};
    if (out.Q0(0, 0) < 0.0) out.Q0(0, 0) = 0.0;
    return out;
}

ConditionalMomentCoeffs finite_difference(const AffineModel& m, double dt, const Vec& state, double h) {
    const int d = m.dim_latent();
    const int n = m.dim_state;
    const auto obs = m.observed();
    const double taus[] = {dt};
    RiccatiOptions tight;
    tight.rtol = 1e-14;
    tight.atol = 1e-300;

    // Cumulant coefficients (alpha, beta) at a transform argument placed on latent coordinates.
    auto solve = [&](const std::vector<double>& arg) {
        CVec b0 = CVec::Zero(n);
        for (int j = 0; j < d; ++j) b0(m.latent[j]) = I * arg[j];
        return solve_riccati_path(m, b0, taus, tight).front();
    };
    // Affine split of K(arg) = alpha + beta . X into the latent-free part and latent loadings.
    auto split = [&](const RiccatiPoint& p, cplx& base, CVec& load) {
        base = p.alpha;
        for (int o : obs) base += p.beta(o) * state(o);
        load = CVec(d);
        for (int j = 0; j < d; ++j) load(j) = p.beta(m.latent[j]);
    };

    ConditionalMomentCoeffs out;
    out.dt = dt;
    out.c = Vec::Zero(d);
    out.T = Mat::Zero(d, d);
    out.Q0 = Mat::Zero(d, d);
    out.Q1.assign(d, Mat::Zero(d, d));

    std::vector<cplx> base_plus(d), base_minus(d);
    std::vector<CVec> load_plus(d), load_minus(d);
    for (int j = 0; j < d; ++j) {
        std::vector<double> a(d, 0.0);
        a[j] = h;
        split(solve(a), base_plus[j], load_plus[j]);
        a[j] = -h;
        split(solve(a), base_minus[j], load_minus[j]);

        // mean = -i dK/du ; central difference.
        out.c(j) = ((base_plus[j] - base_minus[j]) / (2.0 * h) * -I).real();
        for (int l = 0; l < d; ++l) out.T(j, l) = ((load_plus[j](l) - load_minus[j](l)) / (2.0 * h) * -I).real();
        // variance = -d2K/du2 with K(0) = 0.
        out.Q0(j, j) = -((base_plus[j] + base_minus[j]) / (h * h)).real();
        for (int l = 0; l < d; ++l) out.Q1[l](j, j) = -((load_plus[j](l) + load_minus[j](l)) / (h * h)).real();
    }
    for (int j = 0; j < d; ++j) {
        for (int k = j + 1; k < d; ++k) {
            cplx bpp, bpm, bmp, bmm;
            CVec lpp, lpm, lmp, lmm;
            std::vector<double> a(d, 0.0);
            a[j] = h, a[k] = h;
            split(solve(a), bpp, lpp);
            a[j] = h, a[k] = -h;
            split(solve(a), bpm, lpm);
            a[j] = -h, a[k] = h;
            split(solve(a), bmp, lmp);
            a[j] = -h, a[k] = -h;
            split(solve(a), bmm, lmm);
            const double q0 = -((bpp - bpm - bmp + bmm) / (4.0 * h * h)).real();
            out.Q0(j, k) = out.Q0(k, j) = q0;
            for (int l = 0; l < d; ++l) {
                const double q1 = -((lpp(l) - lpm(l) - lmp(l) + lmm(l)) / (4.0 * h * h)).real();
                out.Q1[l](j, k) = out.Q1[l](k, j) = q1;
            }
        }
    }
    out.Q0 = psd_clip(out.Q0);
    return out;
}

}  // namespace

ConditionalMomentCoeffs transition_coeffs(const AffineModel& physical, double dt, const Vec& state,
                                          const MomentOptions& options) {
    if (!(dt > 0.0)) throw InputError("transition_coeffs: dt must be positive");
    if (physical.dim_latent() == 0) throw InputError("transition_coeffs: model has no latent coordinates");
    MomentMethod method = options.method;
    if (method == MomentMethod::Auto) {
        method = physical.dim_latent() == 1 ? MomentMethod::ClosedForm : MomentMethod::FiniteDifference;
    }
    if (method == MomentMethod::ClosedForm) {
        if (physical.dim_latent() != 1) throw InputError("closed-form moments require one latent coordinate");
        return closed_form(physical, dt, state);
    }
    AffineModel undiscounted = physical;
    undiscounted.rate = 0.0;
    return finite_difference(undiscounted, dt, state, options.fd_step);
}

StationaryMoments stationary_moments(const ConditionalMomentCoeffs& k) {
    const auto d = k.T.rows();
    StationaryMoments s;
    const Mat id = Mat::Identity(d, d);
    s.mean = (id - k.T).fullPivLu().solve(k.c);
    const Mat q = k.variance(s.mean);
    // vec(P) = (I - T kron T)^{-1} vec(Q)
    Mat kron(d * d, d * d);
    for (Eigen::Index i = 0; i < d; ++i)
        for (Eigen::Index j = 0; j < d; ++j) kron.block(i * d, j * d, d, d) = k.T(i, j) * k.T;
    const Mat lhs = Mat::Identity(d * d, d * d) - kron;
    const Vec vq = Eigen::Map<const Vec>(q.data(), d * d);
    const Vec vp = lhs.fullPivLu().solve(vq);
    s.variance = Eigen::Map<const Mat>(vp.data(), d, d);
    s.variance = 0.5 * (s.variance + s.variance.transpose());
    return s;
}

}  // namespace ccf
