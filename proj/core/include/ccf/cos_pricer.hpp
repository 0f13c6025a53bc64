#pragma once

#include "ccf/affine_model.hpp"
#include "ccf/riccati.hpp"
#include "ccf/types.hpp"

#include <span>
#include <vector>

namespace ccf {

struct CosOptions {
    double width = 12.0;       // truncation half-width in cumulant standard deviations
    int terms = 1024;
    double tail_tol = 1e-5;    // largest admissible |phi| at the last expansion term
    RiccatiOptions riccati;
};

struct CosRange {
    double a = 0.0;
    double b = 0.0;
};

// Truncation range for the log return over tau from the first, second and fourth cumulants.
CosRange cumulant_range(const AffineModel& model, const Vec& state, double tau, double width,
                        const RiccatiOptions& riccati = {});

// COS-method pricer for several tenors sharing one model; the Riccati solutions on the expansion
// grid are computed once, so pricing across dates only re-evaluates exp(alpha + beta . x).
class CosPricer {
public:
    // Truncation ranges are fixed per tenor from the cumulants at `range_state`.
    CosPricer(const AffineModel& model, std::vector<double> taus, const Vec& range_state, const CosOptions& options = {});

    std::size_t tenors() const { return taus_.size(); }
    double tau(std::size_t i) const { return taus_.at(i); }
    CosRange range(std::size_t i) const { return ranges_.at(i); }

    // Discounted European put prices.
    std::vector<double> puts(std::size_t tenor, const Vec& state, double forward, std::span<const double> strikes,
                             double rate) const;
    // Out-of-the-money prices: puts for K <= F, calls (via parity) above.
    std::vector<double> otm_prices(std::size_t tenor, const Vec& state, double forward, std::span<const double> strikes,
                                   double rate) const;
    std::vector<double> calls(std::size_t tenor, const Vec& state, double forward, std::span<const double> strikes,
                              double rate) const;

private:
    std::vector<double> taus_;
    std::vector<CosRange> ranges_;
    CosOptions options_;
    int dim_ = 0;
    // Per tenor, per term: alpha and beta at u_k.
    std::vector<std::vector<cplx>> alpha_;
    std::vector<std::vector<CVec>> beta_;
};

// One-shot OTM pricing at a single tenor; the model rate is ignored in favour of `rate`.
std::vector<double> cos_price(const AffineModel& model, const Vec& state, double forward,
                              std::span<const double> strikes, double tau, double rate, const CosOptions& options = {});

}  // namespace ccf
