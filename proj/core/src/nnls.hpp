#pragma once

#include <Eigen/Dense>

namespace qtrap::detail {

struct NnlsResult {
    Eigen::VectorXd x;
    double residual_norm = 0.0;
    int iterations = 0;
    bool converged = false;
};

/// Lawson-Hanson active-set solver for min ||Ax - b|| subject to x >= 0.
NnlsResult nnls(const Eigen::MatrixXd& a, const Eigen::VectorXd& b, int max_iterations = 0);

}  // namespace qtrap::detail
