#include "katolab/spectral.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "katolab/constants.hpp"
#include "katolab/errors.hpp"

namespace katolab {

namespace {

double max_abs_entry(const Eigen::MatrixXcd& m) {
    double v = 0.0;
    for (Eigen::Index j = 0; j < m.cols(); ++j)
        for (Eigen::Index i = 0; i < m.rows(); ++i)
            v = std::max(v, std::abs(m(i, j)));
    return v;
}

void fix_phase(Eigen::Ref<Eigen::VectorXcd> v) {
    Eigen::Index imax = 0;
    double best = -1.0;
    for (Eigen::Index i = 0; i < v.size(); ++i) {
        double a = std::abs(v(i));
        if (a > best) {  // strict: lowest index wins ties
            best = a;
            imax = i;
        }
    }
    if (best <= 0.0) return;
    std::complex<double> rot = std::conj(v(imax)) / best;
    v *= rot;
    // the rotated pivot is |v(imax)| up to one rounding; make it exact
    v(imax) = std::complex<double>(std::abs(v(imax)), 0.0);
}

} // namespace

SpectralResult eigendecompose(const KernelMatrix& kernel) {
    const Eigen::MatrixXcd& A = kernel.matrix;
    if (A.rows() != A.cols())
        throw std::invalid_argument("kernel matrix must be square");
    if (A.rows() != kernel.grid.size())
        throw std::invalid_argument("kernel matrix size does not match its grid");

    const double scale = max_abs_entry(A);
    const double defect = hermiticity_defect(A);
    if (defect > 1e-12 * std::max(scale, 1e-300))
        throw integrity_error("matrix handed to the Hermitian eigensolver has Hermiticity "
                              "defect " + std::to_string(defect) + " > 1e-12 * " +
                              std::to_string(scale));

    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> solver(A);
    if (solver.info() != Eigen::Success)
        throw integrity_error("Hermitian eigendecomposition did not converge");

    const Eigen::Index n = A.rows();
    SpectralResult out;
    out.grid = kernel.grid;
    out.side = kernel.side;
    out.eigenvalues.resize(n);
    out.eigenvectors.resize(n, n);
    // solver returns ascending order; store descending
    for (Eigen::Index j = 0; j < n; ++j) {
        out.eigenvalues(j) = solver.eigenvalues()(n - 1 - j);
        out.eigenvectors.col(j) = solver.eigenvectors().col(n - 1 - j);
        fix_phase(out.eigenvectors.col(j));
    }
    return out;
}

int numerical_rank(const SpectralResult& spec, double rel_tol) {
    if (spec.eigenvalues.size() == 0) return 0;
    const double m = spec.eigenvalues.cwiseAbs().maxCoeff();
    if (m == 0.0) return 0;
    int rank = 0;
    for (Eigen::Index j = 0; j < spec.eigenvalues.size(); ++j)
        if (std::abs(spec.eigenvalues(j)) > rel_tol * m) ++rank;
    return rank;
}

PositivityReport positivity_check(const SpectralResult& spec, double rel_tol) {
    PositivityReport r;
    if (spec.eigenvalues.size() == 0) {
        r.positive = true;
        return r;
    }
    r.min_eigenvalue = spec.eigenvalues.minCoeff();
    r.max_abs_eigenvalue = spec.eigenvalues.cwiseAbs().maxCoeff();
    r.positive = r.min_eigenvalue >= -rel_tol * r.max_abs_eigenvalue;
    return r;
}

std::vector<Mode> signed_modes(const SpectralResult& spec, double rel_tol) {
    std::vector<Mode> modes;
    if (spec.eigenvalues.size() == 0) return modes;
    const double m = spec.eigenvalues.cwiseAbs().maxCoeff();
    if (m == 0.0) return modes;
    const Eigen::Index n = spec.eigenvalues.size();
    for (Eigen::Index j = 0; j < n; ++j) {
        const double lam = spec.eigenvalues(j);
        if (std::abs(lam) <= rel_tol * m) continue;
        Mode mode;
        mode.eigenvalue = lam;
        mode.sign = lam >= 0.0 ? 1 : -1;
        mode.values.resize(n);
        const double amp = std::sqrt(std::abs(lam));
        for (Eigen::Index i = 0; i < n; ++i)
            mode.values(i) = spec.eigenvectors(i, j) * amp /
                             std::sqrt(spec.grid.weights[static_cast<size_t>(i)]);
        modes.push_back(std::move(mode));
    }
    return modes;
}

std::vector<Mode> extract_modes(const SpectralResult& spec, double rel_tol) {
    PositivityReport p = positivity_check(spec, rel_tol);
    if (!p.positive)
        throw std::logic_error("mode extraction for a positive operator requested, but the "
                               "spectrum is indefinite (min eigenvalue " +
                               std::to_string(p.min_eigenvalue) + ")");
    return signed_modes(spec, rel_tol);
}

double diagonal_identity_residual(const SpectralResult& spec, const FunctionSpec& slope,
                                  const FunctionSpec& partner, double rel_tol) {
    const double br = partner.bracket();
    if (br == 0.0)
        throw std::domain_error("diagonal identity needs a partner with nonzero bracket");
    const std::vector<Mode> modes = signed_modes(spec, rel_tol);
    const Eigen::Index n = spec.eigenvalues.size();
    double resid = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) {
        double acc = 0.0;
        for (const Mode& m : modes)
            acc += static_cast<double>(m.sign) * std::norm(m.values(i));
        const double lhs = slope.derivative(spec.grid.nodes[static_cast<size_t>(i)]);
        resid = std::max(resid, std::abs(lhs - (2.0 * PI / br) * acc));
    }
    return resid;
}

double leading_eigenvalue_gap(const SpectralResult& a, const SpectralResult& b, int top) {
    if (top < 1) throw std::invalid_argument("eigenvalue comparison needs top >= 1");
    auto by_magnitude = [](const Eigen::VectorXd& ev) {
        std::vector<double> v(ev.data(), ev.data() + ev.size());
        std::sort(v.begin(), v.end(), [](double x, double y) {
            double ax = std::abs(x), ay = std::abs(y);
            if (ax != ay) return ax > ay;
            return x > y;  // deterministic tie-break
        });
        return v;
    };
    std::vector<double> va = by_magnitude(a.eigenvalues);
    std::vector<double> vb = by_magnitude(b.eigenvalues);
    const size_t count = std::min(static_cast<size_t>(top), std::min(va.size(), vb.size()));
    double gap = 0.0;
    for (size_t k = 0; k < count; ++k) gap = std::max(gap, std::abs(va[k] - vb[k]));
    return gap;
}

double duality_check(const FunctionSpec& g, const FunctionSpec& f, const Grid& grid,
                     int top) {
    SpectralResult pos = eigendecompose(assemble_position_kernel(g, f, grid));
    SpectralResult mom = eigendecompose(assemble_momentum_kernel(g, f, grid));
    return leading_eigenvalue_gap(pos, mom, top);
}

} // namespace katolab
