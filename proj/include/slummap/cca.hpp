#pragma once

#include <Eigen/Dense>

#include <optional>
#include <span>
#include <stdexcept>
#include <vector>

namespace slummap {

/// Raised when a block has no variance (all rows identical) or the label
/// block holds a single class.
class CcaDegenerate : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Relative eigenvalue cutoff for the auto-covariance blocks.
inline constexpr double kDefaultCutoff = 1e-9;

struct CcaResult {
    /// d x m; column c is the c-th canonical direction of the feature block,
    /// scaled so that a' Cxx a = 1 and oriented so that a' Cxy e0 >= 0.
    Eigen::MatrixXd projections;
    /// m values in [0, 1], non-increasing.
    std::vector<double> correlations;
};

/// Canonical correlation analysis of two blocks with n rows each. Both
/// blocks are centred internally. Each auto-covariance block is rescaled to
/// unit diagonal and whitened with its pseudo-inverse square root, dropping
/// eigen-directions whose eigenvalue is at most `cutoff` times the largest.
/// Redundant columns are absorbed this way; the correlations do not change
/// under an invertible linear transform of either block, and the directions
/// follow any per-column rescaling exactly. m = min(x.cols(), y.cols()).
CcaResult cca_fit_blocks(const Eigen::MatrixXd& x, const Eigen::MatrixXd& y, double cutoff = kDefaultCutoff);

/// CCA against one-hot class indicators (n x k). The last indicator column
/// is the complement of the others and is dropped, so m = min(d, k - 1).
CcaResult cca_fit(const Eigen::MatrixXd& x, const Eigen::MatrixXd& y_onehot, double cutoff = kDefaultCutoff);

/// One-hot encoding of binary labels (column 0 = class 0).
Eigen::MatrixXd one_hot(std::span<const std::uint8_t> labels, int classes = 2);

}  // namespace slummap
