#include "ccf/models.hpp"

#include "ccf/errors.hpp"

#include <algorithm>
#include <cmath>
#include <fmt/format.h>
#include <numeric>

namespace ccf {

std::vector<int> AffineModel::observed() const {
    std::vector<int> out;
    for (int j = 0; j < dim_state; ++j) {
        if (!is_latent(j)) out.push_back(j);
    }
    return out;
}

bool AffineModel::is_latent(int coordinate) const {
    return std::find(latent.begin(), latent.end(), coordinate) != latent.end();
}

cplx guarded_inverse(cplx denominator) {
    if (std::abs(denominator) < 1e-12) {
        throw PoleError(fmt::format("jump transform pole: |denominator| = {:.3e}", std::abs(denominator)));
    }
    return 1.0 / denominator;
}

namespace {

AffineModel empty_model(int n) {
    AffineModel m;
    m.dim_state = n;
    m.K0 = Vec::Zero(n);
    m.K1 = Mat::Zero(n, n);
    m.H0 = Mat::Zero(n, n);
    m.H1.assign(n, Mat::Zero(n, n));
    return m;
}

void add_variance_diffusion(AffineModel& m, int v, double sigma, double rho) {
    m.H1[v](0, 0) = 1.0;
    m.H1[v](0, v) = rho * sigma;
    m.H1[v](v, 0) = rho * sigma;
    m.H1[v](v, v) = sigma * sigma;
}

JumpComponent double_exponential_cojump(int n, double p_minus, double eta_plus, double eta_minus, double mu_v) {
    const double p_plus = 1.0 - p_minus;
    JumpComponent j;
    j.l1 = Vec::Zero(n);
    j.transform = [=](std::span<const cplx> b) {
        const cplx up = p_plus * guarded_inverse(1.0 - b[0] * eta_plus);
        const cplx down = p_minus * guarded_inverse((1.0 + b[0] * eta_minus) * (1.0 - b[1] * mu_v));
        return up + down;
    };
    j.mean = Vec::Zero(n);
    j.mean(0) = p_plus * eta_plus - p_minus * eta_minus;
    j.mean(1) = p_minus * mu_v;
    j.second_moment = Mat::Zero(n, n);
    j.second_moment(0, 0) = 2.0 * (p_plus * eta_plus * eta_plus + p_minus * eta_minus * eta_minus);
    j.second_moment(0, 1) = j.second_moment(1, 0) = -p_minus * eta_minus * mu_v;
    j.second_moment(1, 1) = 2.0 * p_minus * mu_v * mu_v;
    return j;
}

AffineModel svcdej(const ParameterVector& p, const BuildOptions& opt) {
    const bool ex = p.tag() == ModelTag::SvcdejEx;
    const int n = ex ? 3 : 2;
    AffineModel m = empty_model(n);
    m.latent = {1};
    m.rate = opt.rate;

    const double sigma = p["sigma"], kappa = p["kappa"], vbar = p["vbar"], rho = p["rho"];
    const double delta = p["delta"], mu = mean_relative_jump(p);

    m.K0(1) = kappa * vbar;
    m.K1(0, 1) = -0.5 - mu * delta;
    m.K1(1, 1) = -kappa;
    add_variance_diffusion(m, 1, sigma, rho);

    auto jump = double_exponential_cojump(n, p["p_minus"], p["eta_plus"], p["eta_minus"], p["mu_v"]);
    jump.l1(1) = delta;

    if (ex) {
        const double gamma = p["gamma"], q = p["q"];
        m.K1(0, 2) = -0.5 * q * q - mu * gamma;
        m.H1[2](0, 0) = q * q;
        jump.l1(2) = gamma;
        if (opt.exogenous == ExogenousTreatment::Dynamic) {
            const double sh = p["sigma_h"];
            m.K0(2) = p["kappa_h"] * p["hbar"];
            m.K1(2, 2) = -p["kappa_h"];
            m.H1[2](2, 2) = sh * sh;
        }
    }
    m.jumps.push_back(std::move(jump));
    return m;
}

AffineModel svcj(const ParameterVector& p, const BuildOptions& opt) {
    AffineModel m = empty_model(2);
    m.latent = {1};
    m.rate = opt.rate;
    const double sigma = p["sigma"], kappa = p["kappa"], vbar = p["vbar"], rho = p["rho"];
    const double delta = p["delta"], mu_j = p["mu_j"], sigma_j = p["sigma_j"], mu_v = p["mu_v"];
    const double mu = mean_relative_jump(p);

    m.K0(1) = kappa * vbar;
    m.K1(0, 1) = -0.5 - mu * delta;
    m.K1(1, 1) = -kappa;
    add_variance_diffusion(m, 1, sigma, rho);

    JumpComponent j;
    j.l1 = Vec::Zero(2);
    j.l1(1) = delta;
    j.transform = [=](std::span<const cplx> b) {
        return std::exp(b[0] * mu_j + 0.5 * b[0] * b[0] * sigma_j * sigma_j) * guarded_inverse(1.0 - b[1] * mu_v);
    };
    j.mean = Vec::Zero(2);
    j.mean << mu_j, mu_v;
    j.second_moment = Mat::Zero(2, 2);
    j.second_moment(0, 0) = mu_j * mu_j + sigma_j * sigma_j;
    j.second_moment(0, 1) = j.second_moment(1, 0) = mu_j * mu_v;
    j.second_moment(1, 1) = 2.0 * mu_v * mu_v;
    m.jumps.push_back(std::move(j));
    return m;
}

AffineModel svcej(const ParameterVector& p, const BuildOptions& opt) {
    AffineModel m = empty_model(2);
    m.latent = {1};
    m.rate = opt.rate;
    const double sigma = p["sigma"], kappa = p["kappa"], vbar = p["vbar"], rho = p["rho"];
    const double d_plus = p["delta_plus"], d_minus = p["delta_minus"];
    const double eta_plus = p["eta_plus"], eta_minus = p["eta_minus"], mu_v = p["mu_v"];
    const double mu_minus = -eta_minus / (1.0 + eta_minus);
    const double mu_plus = eta_plus / (1.0 - eta_plus);

    m.K0(0) = -mu_plus * d_plus;
    m.K0(1) = kappa * vbar;
    m.K1(0, 1) = -0.5 - mu_minus * d_minus;
    m.K1(1, 1) = -kappa;
    add_variance_diffusion(m, 1, sigma, rho);

    JumpComponent down;
    down.l1 = Vec::Zero(2);
    down.l1(1) = d_minus;
    down.transform = [=](std::span<const cplx> b) {
        return guarded_inverse((1.0 + b[0] * eta_minus) * (1.0 - b[1] * mu_v));
    };
    down.mean = Vec::Zero(2);
    down.mean << -eta_minus, mu_v;
    down.second_moment = Mat::Zero(2, 2);
    down.second_moment(0, 0) = 2.0 * eta_minus * eta_minus;
    down.second_moment(0, 1) = down.second_moment(1, 0) = -eta_minus * mu_v;
    down.second_moment(1, 1) = 2.0 * mu_v * mu_v;

    JumpComponent up;
    up.l0 = d_plus;
    up.l1 = Vec::Zero(2);
    up.transform = [=](std::span<const cplx> b) { return guarded_inverse(1.0 - b[0] * eta_plus); };
    up.mean = Vec::Zero(2);
    up.mean(0) = eta_plus;
    up.second_moment = Mat::Zero(2, 2);
    up.second_moment(0, 0) = 2.0 * eta_plus * eta_plus;

    m.jumps.push_back(std::move(down));
    m.jumps.push_back(std::move(up));
    return m;
}

}  // namespace

double mean_relative_jump(const ParameterVector& p) {
    switch (p.tag()) {
        case ModelTag::Svcdej:
        case ModelTag::SvcdejEx: {
            const double pm = p["p_minus"];
            return (1.0 - pm) / (1.0 - p["eta_plus"]) + pm / (1.0 + p["eta_minus"]) - 1.0;
        }
        case ModelTag::Svcj: return std::exp(p["mu_j"] + 0.5 * p["sigma_j"] * p["sigma_j"]) - 1.0;
        case ModelTag::Svcej: return -p["eta_minus"] / (1.0 + p["eta_minus"]);
    }
    return 0.0;
}

AffineModel build_model(const ParameterVector& params, const BuildOptions& options) {
    const auto adm = admissible(params);
    if (!adm) {
        std::string list;
        for (const auto& v : adm.violations) list += (list.empty() ? "" : ", ") + v;
        throw AdmissibilityError("inadmissible parameters: " + list, adm.violations);
    }
    switch (params.tag()) {
        case ModelTag::Svcdej:
        case ModelTag::SvcdejEx: return svcdej(params, options);
        case ModelTag::Svcj: return svcj(params, options);
        case ModelTag::Svcej: return svcej(params, options);
    }
    throw ConfigError("unsupported model tag");
}

AffineModel build_physical_model(const ParameterVector& params, const BuildOptions& options) {
    BuildOptions physical = options;
    physical.rate = 0.0;
    AffineModel m = build_model(params, physical);
    const double pi_v = params["pi_v"];
    for (int v : m.latent) m.K1(v, v) -= pi_v;
    return m;
}

}  // namespace ccf
