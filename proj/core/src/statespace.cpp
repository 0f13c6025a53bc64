#include "ccf/statespace.hpp"

#include "ccf/errors.hpp"

#include <algorithm>
#include <cmath>
#include <fmt/format.h>
#include <set>

namespace ccf {

PreparedPanel prepare_panel(std::vector<CCFMeasurement> measurements, const PanelOptions& options) {
    if (measurements.empty()) throw InputError("prepare_panel: empty panel");
    PreparedPanel panel;
    panel.sbar = options.sbar;
    panel.measurements = std::move(measurements);
    std::set<double> taus;
    for (const auto& m : panel.measurements) {
        std::vector<PanelBlock> blocks;
        Eigen::Index off = 0;
        for (const auto& h : m.H_blocks) {
            PanelBlock b;
            b.offset = off;
            b.size = h.rows();
            b.pinv = pseudo_inverse(h, options.sbar);
            const Vec yb = m.y.segment(off, b.size);
            b.hinv_y = b.pinv.inverse * yb;
            b.y_hinv_y = yb.dot(b.hinv_y);
            blocks.push_back(std::move(b));
            off += h.rows();
        }
        panel.blocks.push_back(std::move(blocks));
        taus.insert(m.taus.begin(), m.taus.end());
    }
    panel.distinct_taus.assign(taus.begin(), taus.end());
    const std::size_t n = panel.measurements.size();
    panel.dt.assign(n, 1.0 / options.day_basis);
    for (std::size_t t = 0; t + 1 < n; ++t) {
        const int gap = days_between(panel.measurements[t].date, panel.measurements[t + 1].date);
        if (gap > 0) panel.dt[t] = gap / options.day_basis;
    }
    if (n > 1) panel.dt[n - 1] = panel.dt[n - 2];
    return panel;
}

namespace {

Vec state_vector(const AffineModel& model, const CCFMeasurement& m, double log_forward) {
    Vec x = Vec::Zero(model.dim_state);
    x(0) = log_forward;
    const auto obs = model.observed();
    Eigen::Index k = 0;
    for (int o : obs) {
        if (o == 0) continue;
        if (k < m.exogenous.size()) x(o) = m.exogenous(k++);
    }
    return x;
}

}  // namespace

SystemMatrices build_system(const ParameterVector& params, const PreparedPanel& panel, const SystemOptions& options) {
    BuildOptions undiscounted = options.model;
    undiscounted.rate = 0.0;   // discounting enters per tenor from the measurement rates
    const AffineModel model = build_model(params, undiscounted);
    const AffineModel physical = build_physical_model(params, options.model);
    const auto& u = panel.measurements.front().u_grid;
    const CCFCoefficients coeffs = riccati_solve(model, u, panel.distinct_taus, options.riccati);
    const auto q = static_cast<Eigen::Index>(u.size());
    const int d = model.dim_latent();
    const auto obs = model.observed();

    SystemMatrices sys;
    sys.dates.reserve(panel.dates());
    for (std::size_t t = 0; t < panel.dates(); ++t) {
        const auto& m = panel.measurements[t];
        if (static_cast<Eigen::Index>(m.u_grid.size()) != q) throw InputError("build_system: u grid differs across dates");
        DateSystem ds;
        const auto p = static_cast<Eigen::Index>(m.dim());
        ds.d = Vec(p);
        ds.Z = Mat(p, d);
        Vec state;
        for (std::size_t k = 0; k < m.taus.size(); ++k) {
            const std::size_t it = coeffs.tau_index(m.taus[k]);
            state = state_vector(model, m, std::log(m.forwards[k]));
            const Eigen::Index off = static_cast<Eigen::Index>(k) * 2 * q;
            for (Eigen::Index i = 0; i < q; ++i) {
                const CVec bt = coeffs.beta_tilde(static_cast<std::size_t>(i), it);
                cplx level = coeffs.alpha(static_cast<std::size_t>(i), it);
                for (int o : obs) level += bt(o) * state(o);
                level -= m.rates[k] * m.taus[k];
                ds.d(off + i) = level.real();
                ds.d(off + q + i) = level.imag();
                for (int j = 0; j < d; ++j) {
                    ds.Z(off + i, j) = bt(model.latent[j]).real();
                    ds.Z(off + q + i, j) = bt(model.latent[j]).imag();
                }
            }
        }
        if (state.size() == 0) state = state_vector(model, m, 0.0);
        ds.transition = transition_coeffs(physical, panel.dt[t], state);
        if (t == 0) sys.initial = ds.transition;
        sys.dates.push_back(std::move(ds));
    }
    return sys;
}

CollapsedObservation collapse(const Vec& y, const Vec& d, const Mat& Z, const Mat& H_inv) {
    const Mat HZ = H_inv * Z;
    const Mat A = Z.transpose() * HZ;
    Eigen::FullPivLU<Mat> lu(A);
    if (lu.rank() < Z.cols()) {
        throw RankError(fmt::format("collapse: rank(Z'H^-Z) = {} < {}", lu.rank(), Z.cols()), static_cast<int>(lu.rank()));
    }
    const Mat A_inv = lu.inverse();
    const Mat A_star = A_inv * HZ.transpose();
    CollapsedObservation c;
    c.y_star = A_star * y;
    c.d_star = A_star * d;
    c.H_star = A_inv;
    const Vec e = (y - d) - Z * (A_star * (y - d));
    c.gls_quad = e.dot(H_inv * e);
    c.log_det_H_star = std::log(A_inv.determinant());
    return c;
}

FilterRun kalman_pass(const PreparedPanel& panel, const SystemMatrices& system, double sigma_kappa,
                      const FilterOptions& options) {
    if (!(sigma_kappa > 0.0)) throw InputError("kalman_pass: sigma_kappa must be positive");
    const std::size_t n = panel.dates();
    if (system.dates.size() != n) throw InputError("kalman_pass: system and panel lengths differ");
    const Eigen::Index d = system.dates.front().Z.cols();
    const double s2 = sigma_kappa * sigma_kappa;
    const double log_s = std::log(sigma_kappa);

    const StationaryMoments prior = stationary_moments(system.initial);
    Vec x = prior.mean;
    Mat P = prior.variance;

    FilterRun run;
    run.steps.reserve(n);
    for (std::size_t t = 0; t < n; ++t) {
        const auto& ds = system.dates[t];
        // Accumulate Z'H~^-Z, Z'H~^-(y - d) and (y - d)'H~^-(y - d) block by block.
        Mat A = Mat::Zero(d, d);
        Vec b = Vec::Zero(d);
        double rr = 0.0, log_pdet = 0.0;
        int rank = 0;
        for (const auto& blk : panel.blocks[t]) {
            const auto db = ds.d.segment(blk.offset, blk.size);
            const auto Zb = ds.Z.middleRows(blk.offset, blk.size);
            const Mat& Hi = blk.pinv.inverse;
            const Vec Hd = Hi * db;
            const Mat HZ = Hi * Zb;
            A.noalias() += Zb.transpose() * HZ;
            b.noalias() += Zb.transpose() * blk.hinv_y - HZ.transpose() * db;
            rr += blk.y_hinv_y - 2.0 * db.dot(blk.hinv_y) + db.dot(Hd);
            log_pdet += blk.pinv.log_pseudo_det;
            rank += blk.pinv.rank;
        }
        Eigen::LDLT<Mat> a_ldlt(A);
        if (a_ldlt.info() != Eigen::Success || !(a_ldlt.vectorD().minCoeff() > 0.0)) {
            Eigen::FullPivLU<Mat> lu(A);
            throw RankError(fmt::format("date {}: rank(Z'H^-Z) = {} < {}", t, lu.rank(), d), static_cast<int>(lu.rank()));
        }
        const Vec y_centered = a_ldlt.solve(b);   // y* - d*
        const Mat A_inv = a_ldlt.solve(Mat::Identity(d, d));
        const Mat H_star = s2 * A_inv;
        const double log_det_A = a_ldlt.vectorD().array().log().sum();
        const double log_det_H_star = static_cast<double>(d) * std::log(s2) - log_det_A;
        const double gls = std::max(rr - b.dot(y_centered), 0.0) / s2;

        FilterStep step;
        step.predicted = x;
        step.predicted_P = P;
        step.omega = y_centered - x;
        step.G = P + H_star;
        Eigen::LLT<Mat> g_llt(step.G);
        if (g_llt.info() != Eigen::Success) {
            throw LikelihoodError(fmt::format("date {}: innovation variance not positive definite", t), t);
        }
        const Mat G_inv = g_llt.solve(Mat::Identity(d, d));
        const double log_det_G = 2.0 * g_llt.matrixL().toDenseMatrix().diagonal().array().log().sum();
        const Mat K = P * G_inv;
        x = x + K * step.omega;
        const Mat IK = Mat::Identity(d, d) - K;
        P = IK * P * IK.transpose() + K * H_star * K.transpose();
        P = 0.5 * (P + P.transpose());
        for (Eigen::Index j = 0; j < d; ++j) x(j) = std::max(x(j), options.state_floor);

        step.filtered = x;
        step.filtered_P = P;
        step.gls_quad = gls;
        step.log_det_H_star = log_det_H_star;
        step.loglik = 0.5 * (-log_det_G - step.omega.dot(G_inv * step.omega) - gls + log_det_H_star) -
                      static_cast<double>(rank) * log_s;
        if (!std::isfinite(step.loglik)) {
            throw LikelihoodError(fmt::format("non-finite likelihood contribution at date {}", t), t);
        }
        run.loglik += step.loglik;
        run.loglik_full += step.loglik - 0.5 * log_pdet;
        run.steps.push_back(std::move(step));

        // Predict with the transition variance evaluated at the (floored) filtered state.
        const auto& tr = ds.transition;
        const Mat Q = psd_clip(tr.variance(x));
        x = tr.c + tr.T * x;
        P = tr.T * P * tr.T.transpose() + Q;
    }
    return run;
}

FilterRun run_filter(const ParameterVector& params, const PreparedPanel& panel, const SystemOptions& options,
                     const FilterOptions& filter) {
    const auto sys = build_system(params, panel, options);
    return kalman_pass(panel, sys, params["sigma_kappa"], filter);
}

}  // namespace ccf
