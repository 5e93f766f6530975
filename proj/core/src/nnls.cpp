#include "nnls.hpp"

#include <cmath>
#include <limits>
#include <vector>

namespace qtrap::detail {

namespace {

// Least squares restricted to the passive columns; others are zero.
Eigen::VectorXd solve_passive(const Eigen::MatrixXd& a, const Eigen::VectorXd& b,
                              const std::vector<bool>& passive) {
    const Eigen::Index n = a.cols();
    std::vector<Eigen::Index> cols;
    for (Eigen::Index j = 0; j < n; ++j) {
        if (passive[j]) cols.push_back(j);
    }
    Eigen::VectorXd z = Eigen::VectorXd::Zero(n);
    if (cols.empty()) return z;
    Eigen::MatrixXd sub(a.rows(), static_cast<Eigen::Index>(cols.size()));
    for (std::size_t k = 0; k < cols.size(); ++k) sub.col(k) = a.col(cols[k]);
    const Eigen::VectorXd s = sub.completeOrthogonalDecomposition().solve(b);
    for (std::size_t k = 0; k < cols.size(); ++k) z[cols[k]] = s[k];
    return z;
}

}  // namespace

NnlsResult nnls(const Eigen::MatrixXd& a, const Eigen::VectorXd& b, int max_iterations) {
    const Eigen::Index n = a.cols();
    if (max_iterations <= 0) max_iterations = static_cast<int>(3 * n + 10);
    const double tol = 10.0 * std::numeric_limits<double>::epsilon() *
                       a.cwiseAbs().colwise().sum().maxCoeff() *
                       static_cast<double>(std::max(a.rows(), n));

    NnlsResult out;
    out.x = Eigen::VectorXd::Zero(n);
    std::vector<bool> passive(n, false);
    Eigen::VectorXd w = a.transpose() * (b - a * out.x);

    while (out.iterations < max_iterations) {
        Eigen::Index t = -1;
        double best = tol;
        for (Eigen::Index j = 0; j < n; ++j) {
            if (!passive[j] && w[j] > best) {
                best = w[j];
                t = j;
            }
        }
        if (t < 0) {
            out.converged = true;
            break;
        }
        passive[t] = true;

        Eigen::VectorXd z = solve_passive(a, b, passive);
        while (true) {
            ++out.iterations;
            bool feasible = true;
            for (Eigen::Index j = 0; j < n; ++j) {
                if (passive[j] && z[j] <= 0.0) feasible = false;
            }
            if (feasible) break;

            double step = std::numeric_limits<double>::infinity();
            for (Eigen::Index j = 0; j < n; ++j) {
                if (passive[j] && z[j] <= 0.0) {
                    step = std::min(step, out.x[j] / (out.x[j] - z[j]));
                }
            }
            out.x += step * (z - out.x);
            for (Eigen::Index j = 0; j < n; ++j) {
                if (passive[j] && std::abs(out.x[j]) <= tol) {
                    passive[j] = false;
                    out.x[j] = 0.0;
                }
            }
            z = solve_passive(a, b, passive);
            if (out.iterations >= max_iterations) break;
        }
        out.x = z;
        w = a.transpose() * (b - a * out.x);
    }
    for (Eigen::Index j = 0; j < n; ++j) {
        if (out.x[j] < 0.0) out.x[j] = 0.0;
    }
    out.residual_norm = (a * out.x - b).norm();
    return out;
}

}  // namespace qtrap::detail
