#pragma once

#include "ccf/affine_model.hpp"
#include "ccf/types.hpp"

#include <vector>

namespace ccf {

struct ConditionalMomentCoeffs {
    Vec c;                  // intercept (observed-state effects absorbed)
    Mat T;                  // slope
    Mat Q0;
    std::vector<Mat> Q1;    // one matrix per latent coordinate
    double dt = 0.0;

    Mat variance(const Vec& x) const;
};

enum class MomentMethod { Auto, ClosedForm, FiniteDifference };

struct MomentOptions {
    MomentMethod method = MomentMethod::Auto;
    double fd_step = 1e-5;
};

// Conditional mean/variance of the latent block over dt under the supplied (physical) model.
// `state` supplies observed coordinates; latent entries are ignored.
ConditionalMomentCoeffs transition_coeffs(const AffineModel& physical, double dt, const Vec& state,
                                          const MomentOptions& options = {});

struct StationaryMoments {
    Vec mean;
    Mat variance;
};

// Fixed point of the affine mean/variance recursion.
StationaryMoments stationary_moments(const ConditionalMomentCoeffs& coeffs);

}  // namespace ccf
