#pragma once

#include "ccf/types.hpp"

#include <functional>
#include <span>
#include <vector>

namespace ccf {

// Moment generating function of a jump size vector at a complex argument.
using JumpTransform = std::function<cplx(std::span<const cplx>)>;

struct JumpComponent {
    double l0 = 0.0;
    Vec l1;
    JumpTransform transform;
    Vec mean;            // E[J]
    Mat second_moment;   // E[J J']
};

struct AffineModel {
    int dim_state = 0;
    std::vector<int> latent;   // indices of latent coordinates; coordinate 0 is the log forward
    Vec K0;
    Mat K1;
    Mat H0;
    std::vector<Mat> H1;       // one matrix per state coordinate
    std::vector<JumpComponent> jumps;
    double rate = 0.0;

    int dim_latent() const { return static_cast<int>(latent.size()); }
    std::vector<int> observed() const;
    bool is_latent(int coordinate) const;
};

// Throws PoleError when a jump-transform denominator is numerically zero.
cplx guarded_inverse(cplx denominator);

}  // namespace ccf
