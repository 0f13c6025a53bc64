#include "ccf/linalg.hpp"

#include "ccf/errors.hpp"

#include <cmath>
#include <fmt/format.h>

namespace ccf {

Mat psd_clip(const Mat& m) {
    const Mat sym = 0.5 * (m + m.transpose());
    Eigen::SelfAdjointEigenSolver<Mat> es(sym);
    const Vec ev = es.eigenvalues().cwiseMax(0.0);
    return es.eigenvectors() * ev.asDiagonal() * es.eigenvectors().transpose();
}

PseudoInverse pseudo_inverse(const Mat& block, double sbar) {
    const Mat sym = 0.5 * (block + block.transpose());
    Eigen::JacobiSVD<Mat> svd(sym, Eigen::ComputeThinU | Eigen::ComputeThinV);
    const Vec& s = svd.singularValues();
    const double smax = s.size() > 0 ? s(0) : 0.0;
    const double tol = sbar * static_cast<double>(sym.rows()) * smax;

    PseudoInverse out;
    Vec inv_s = Vec::Zero(s.size());
    for (Eigen::Index i = 0; i < s.size(); ++i) {
        if (s(i) > tol && s(i) > 0.0) {
            inv_s(i) = 1.0 / s(i);
            out.log_pseudo_det += std::log(s(i));
            ++out.rank;
        }
    }
    if (out.rank == 0) {
        throw DegenerateBlockError(fmt::format("pseudo_inverse: all singular values below tolerance {:.3e}", tol));
    }
    out.inverse = svd.matrixV() * inv_s.asDiagonal() * svd.matrixU().transpose();
    out.inverse = 0.5 * (out.inverse + out.inverse.transpose());
    return out;
}

}  // namespace ccf
