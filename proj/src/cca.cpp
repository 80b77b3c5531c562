#include "slummap/cca.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace slummap {

namespace {

/// W with W' cov W = I on the range of cov. The block is first rescaled to
/// unit diagonal, then whitened with a pseudo-inverse square root that
/// drops eigenvalues at or below `cutoff` times the largest. The rescaling
/// makes W follow any per-column scaling exactly, even when cov is singular.
Eigen::MatrixXd whitener(const Eigen::MatrixXd& cov, double cutoff) {
    Eigen::VectorXd inv_scale(cov.rows());
    for (Eigen::Index i = 0; i < cov.rows(); ++i) inv_scale(i) = cov(i, i) > 0.0 ? 1.0 / std::sqrt(cov(i, i)) : 1.0;
    const Eigen::MatrixXd unit = inv_scale.asDiagonal() * cov * inv_scale.asDiagonal();

    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(unit);
    if (eig.info() != Eigen::Success) throw CcaDegenerate("covariance eigendecomposition failed");
    Eigen::VectorXd values = eig.eigenvalues();
    const double largest = values.maxCoeff();
    if (!(largest > 0.0)) throw CcaDegenerate("covariance block is zero");
    for (Eigen::Index i = 0; i < values.size(); ++i)
        values(i) = values(i) > cutoff * largest ? 1.0 / std::sqrt(values(i)) : 0.0;
    return inv_scale.asDiagonal() * eig.eigenvectors() * values.asDiagonal() * eig.eigenvectors().transpose();
}

// Exact test on raw values; centring can leave rounding residue.
bool has_variance(const Eigen::MatrixXd& block) {
    return ((block.rowwise() - block.row(0)).array() != 0.0).any();
}

}  // namespace

Eigen::MatrixXd one_hot(std::span<const std::uint8_t> labels, int classes) {
    Eigen::MatrixXd y = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(labels.size()), classes);
    for (std::size_t i = 0; i < labels.size(); ++i) {
        if (labels[i] >= classes) throw std::invalid_argument("label out of range for one-hot encoding");
        y(static_cast<Eigen::Index>(i), labels[i]) = 1.0;
    }
    return y;
}

CcaResult cca_fit_blocks(const Eigen::MatrixXd& x, const Eigen::MatrixXd& y, double cutoff) {
    const Eigen::Index n = x.rows();
    if (n < 2) throw std::invalid_argument("CCA needs at least two rows");
    if (y.rows() != n) throw std::invalid_argument("CCA blocks must have the same number of rows");
    if (x.cols() < 1 || y.cols() < 1) throw std::invalid_argument("CCA blocks need at least one column");

    const Eigen::MatrixXd xc = x.rowwise() - x.colwise().mean();
    const Eigen::MatrixXd yc = y.rowwise() - y.colwise().mean();
    if (!has_variance(x)) throw CcaDegenerate("feature block has no variance");
    if (!has_variance(y)) throw CcaDegenerate("label block has no variance");

    const double scale = 1.0 / static_cast<double>(n - 1);
    const Eigen::MatrixXd cxx = (xc.transpose() * xc) * scale;
    const Eigen::MatrixXd cyy = (yc.transpose() * yc) * scale;
    const Eigen::MatrixXd cxy = (xc.transpose() * yc) * scale;

    const Eigen::MatrixXd wx = whitener(cxx, cutoff);
    const Eigen::MatrixXd wy = whitener(cyy, cutoff);
    const Eigen::MatrixXd whitened = wx.transpose() * cxy * wy;  // d x q
    const Eigen::MatrixXd gram = whitened * whitened.transpose();

    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(gram);
    if (eig.info() != Eigen::Success) throw CcaDegenerate("cross-covariance eigendecomposition failed");

    // Eigen returns ascending eigenvalues; canonical pairs come from the top.
    const Eigen::Index d = x.cols();
    const Eigen::Index m = std::min(x.cols(), y.cols());
    CcaResult result;
    result.projections.resize(d, m);
    result.correlations.resize(static_cast<std::size_t>(m));
    for (Eigen::Index c = 0; c < m; ++c) {
        const Eigen::Index source = d - 1 - c;
        const double rho = std::sqrt(std::max(0.0, eig.eigenvalues()(source)));
        result.correlations[static_cast<std::size_t>(c)] = std::min(1.0, rho);

        Eigen::VectorXd a = wx * eig.eigenvectors().col(source);
        double orientation = a.dot(cxy.col(0));
        if (orientation == 0.0) {
            Eigen::Index largest = 0;
            a.cwiseAbs().maxCoeff(&largest);
            orientation = a(largest);
        }
        if (orientation < 0.0) a = -a;
        result.projections.col(c) = a;
    }
    return result;
}

CcaResult cca_fit(const Eigen::MatrixXd& x, const Eigen::MatrixXd& y_onehot, double cutoff) {
    if (y_onehot.cols() < 2) throw std::invalid_argument("one-hot block needs at least two classes");
    for (Eigen::Index r = 0; r < y_onehot.rows(); ++r) {
        const auto row = y_onehot.row(r);
        const bool indicator = ((row.array() == 0.0) || (row.array() == 1.0)).all() && row.sum() == 1.0;
        if (!indicator) throw std::invalid_argument("label block rows must be one-hot");
    }
    const Eigen::VectorXd present = y_onehot.colwise().sum();
    if ((present.array() > 0.0).count() < 2) throw CcaDegenerate("label block holds a single class");
    return cca_fit_blocks(x, y_onehot.leftCols(y_onehot.cols() - 1), cutoff);
}

}  // namespace slummap
