#pragma once

#include "ccf/affine_model.hpp"
#include "ccf/types.hpp"

#include <limits>
#include <span>
#include <vector>

namespace ccf {

struct RiccatiOptions {
    double rtol = 1e-10;
    double atol = 1e-10;
    double max_step = std::numeric_limits<double>::infinity();
    double fixed_step = 0.0;   // > 0 disables adaptivity and takes steps of this size
};

// alpha and beta at one tenor for one transform argument.
struct RiccatiPoint {
    cplx alpha;
    CVec beta;
};

// Integrates the generalized Riccati system from beta(0) = beta0, alpha(0) = 0 to each tenor.
// Tenors must be strictly positive and ascending. The reported u in errors is Im(beta0[0]).
std::vector<RiccatiPoint> solve_riccati_path(const AffineModel& model, const CVec& beta0,
                                             std::span<const double> taus, const RiccatiOptions& options = {});

class CCFCoefficients {
public:
    CCFCoefficients() = default;
    CCFCoefficients(std::vector<double> u_grid, std::vector<double> tau_grid, int dim_state);

    const std::vector<double>& u_grid() const { return u_; }
    const std::vector<double>& tau_grid() const { return tau_; }
    int dim_state() const { return dim_; }

    cplx alpha(std::size_t iu, std::size_t it) const { return alpha_[iu * tau_.size() + it]; }
    const CVec& beta(std::size_t iu, std::size_t it) const { return beta_[iu * tau_.size() + it]; }
    CVec beta_tilde(std::size_t iu, std::size_t it) const;

    void set(std::size_t iu, std::size_t it, const RiccatiPoint& point);

    // Grid indices for (u, tau); throws LookupError when off-grid.
    std::size_t u_index(double u) const;
    std::size_t tau_index(double tau) const;

private:
    std::vector<double> u_;
    std::vector<double> tau_;
    int dim_ = 0;
    std::vector<cplx> alpha_;
    std::vector<CVec> beta_;
};

CCFCoefficients riccati_solve(const AffineModel& model, const std::vector<double>& u_grid,
                              const std::vector<double>& tau_grid, const RiccatiOptions& options = {});

// Discounted return CCF exp(alpha + beta_tilde . X).
cplx model_ccf(const CCFCoefficients& coeffs, const Vec& state, double u, double tau);

std::vector<double> default_u_grid();

}  // namespace ccf
