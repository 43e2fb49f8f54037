#include "katolab/nnls.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>
#include <vector>

namespace katolab {

NnlsResult nnls(const Eigen::MatrixXd& A, const Eigen::VectorXd& b, double grad_tol) {
    using Eigen::Index;
    const Index m = A.rows();
    const Index n = A.cols();
    if (b.size() != m)
        throw std::invalid_argument("nnls: right-hand side length does not match the matrix");
    if (!(grad_tol > 0.0))
        throw std::invalid_argument("nnls: gradient tolerance must be positive");

    NnlsResult out;
    out.x = Eigen::VectorXd::Zero(n);
    if (n == 0) {
        out.residual_norm = b.norm();
        return out;
    }

    std::vector<char> passive(static_cast<size_t>(n), 0);
    Eigen::VectorXd x = Eigen::VectorXd::Zero(n);
    Eigen::VectorXd resid = b;

    const int max_outer = static_cast<int>(3 * n) + 30;
    const int max_inner = static_cast<int>(3 * n) + 30;
    bool converged = false;

    for (int iter = 0; iter < max_outer; ++iter) {
        out.iterations = iter + 1;
        const Eigen::VectorXd grad = A.transpose() * resid;

        // most violating active coordinate; strict comparison keeps the
        // lowest index on ties, making the path deterministic
        Index best = -1;
        double best_grad = grad_tol;
        for (Index j = 0; j < n; ++j) {
            if (!passive[static_cast<size_t>(j)] && grad(j) > best_grad) {
                best_grad = grad(j);
                best = j;
            }
        }
        if (best < 0) {
            converged = true;
            break;
        }
        passive[static_cast<size_t>(best)] = 1;

        for (int inner = 0; inner < max_inner; ++inner) {
            std::vector<Index> P;
            for (Index j = 0; j < n; ++j)
                if (passive[static_cast<size_t>(j)]) P.push_back(j);
            if (P.empty()) break;

            Eigen::MatrixXd Ap(m, static_cast<Index>(P.size()));
            for (size_t k = 0; k < P.size(); ++k) Ap.col(static_cast<Index>(k)) = A.col(P[k]);

            Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(Ap);
            const Index p = static_cast<Index>(P.size());
            if (qr.rank() < p) {
                out.rank_warning = true;
            } else {
                const auto& R = qr.matrixR();
                const double r0 = std::abs(R(0, 0));
                for (Index k = 0; k < p; ++k)
                    if (std::abs(R(k, k)) < 1e-12 * r0) out.rank_warning = true;
            }
            const Eigen::VectorXd z = qr.solve(b);

            bool all_positive = true;
            for (Index k = 0; k < p; ++k)
                if (!(z(k) > 0.0)) {
                    all_positive = false;
                    break;
                }
            if (all_positive) {
                x.setZero();
                for (Index k = 0; k < p; ++k) x(P[static_cast<size_t>(k)]) = z(k);
                break;
            }

            // step toward z until the first passive coordinate hits zero
            double alpha = std::numeric_limits<double>::infinity();
            for (Index k = 0; k < p; ++k) {
                if (z(k) > 0.0) continue;
                const double xi = x(P[static_cast<size_t>(k)]);
                const double denom = xi - z(k);
                if (denom > 0.0) alpha = std::min(alpha, xi / denom);
            }
            if (!std::isfinite(alpha)) alpha = 0.0;
            for (Index k = 0; k < p; ++k) {
                const Index j = P[static_cast<size_t>(k)];
                x(j) += alpha * (z(k) - x(j));
            }
            const double xmax = x.cwiseAbs().maxCoeff();
            for (Index k = 0; k < p; ++k) {
                const Index j = P[static_cast<size_t>(k)];
                if (x(j) <= 1e-14 * std::max(1.0, xmax)) {
                    x(j) = 0.0;
                    passive[static_cast<size_t>(j)] = 0;
                }
            }
        }
        resid = b - A * x;
    }

    out.x = x;
    out.residual_norm = resid.norm();
    out.converged = converged;
    return out;
}

} // namespace katolab
