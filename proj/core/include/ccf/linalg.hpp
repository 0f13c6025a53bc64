#pragma once

#include "ccf/types.hpp"

namespace ccf {

// Symmetrizes and clips negative eigenvalues at zero.
Mat psd_clip(const Mat& m);

struct PseudoInverse {
    Mat inverse;
    double log_pseudo_det = 0.0;
    int rank = 0;
};

// Moore-Penrose inverse of a symmetric PSD block with the relative cut
// tol = sbar * dim * max singular value (dim = 2q for a 2q x 2q block).
PseudoInverse pseudo_inverse(const Mat& block, double sbar);

}  // namespace ccf
