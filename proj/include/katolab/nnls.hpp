#pragma once

#include <Eigen/Dense>

namespace katolab {

struct NnlsResult {
    Eigen::VectorXd x;          ///< componentwise >= 0; inactive entries exactly 0
    double residual_norm = 0.0; ///< ||A x - b||_2
    int iterations = 0;         ///< outer iterations used
    bool converged = true;
    bool rank_warning = false;  ///< passive-set columns were rank deficient
};

/// Lawson-Hanson active-set solver for  min ||A x - b||  s.t.  x >= 0.
/// Deterministic: ties in the gradient selection break toward the lowest
/// column index.  Terminates when every active-set gradient component is
/// <= grad_tol.
NnlsResult nnls(const Eigen::MatrixXd& A, const Eigen::VectorXd& b, double grad_tol = 1e-10);

} // namespace katolab
