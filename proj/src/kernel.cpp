#include "katolab/kernel.hpp"

#include <cmath>
#include <stdexcept>
#include <vector>

#include "katolab/constants.hpp"
#include "katolab/errors.hpp"

namespace katolab {

namespace {

// One atom's contribution to the divided difference of w*tanh(a(x-t)),
// written so no intermediate overflows:
//   w a sinh(u) / (u cosh(p) cosh(q)),  u = p - q, p = a(x-t), q = a(y-t).
// With |u| <= |p| + |q| the exponent |u|-|p|-|q| is never positive, so the
// exponential form below stays in [0, 2] up to the correction factors.
double atom_divided_difference(const TanhAtom& a, double x, double y) {
    const double p = a.scale * (x - a.center);
    const double q = a.scale * (y - a.center);
    const double u = p - q;
    if (std::abs(u) < 1e-4) {
        // sinh(u)/u by series; cosh product cannot produce inf/inf here
        const double u2 = u * u;
        const double shr = 1.0 + u2 / 6.0 + u2 * u2 / 120.0;
        return a.weight * a.scale * shr / (std::cosh(p) * std::cosh(q));
    }
    const double au = std::abs(u), ap = std::abs(p), aq = std::abs(q);
    const double core = 2.0 * std::exp(au - ap - aq) / au;
    const double corr = (1.0 - std::exp(-2.0 * au)) /
                        ((1.0 + std::exp(-2.0 * ap)) * (1.0 + std::exp(-2.0 * aq)));
    return a.weight * a.scale * core * corr;
}

std::vector<std::complex<double>> lag_transforms(const FunctionSpec& f, const Grid& grid,
                                                 const char* role) {
    const int n = grid.size();
    std::vector<std::complex<double>> lag(static_cast<size_t>(n));
    if (f.is_mixture()) {
        for (int m = 0; m < n; ++m)
            lag[static_cast<size_t>(m)] =
                transform_of_derivative(f.atoms(), static_cast<double>(m) * grid.spacing);
        return lag;
    }
    for (int m = 0; m < n; ++m) {
        NumericTransform t = transform_of_derivative_numeric(
            f, static_cast<double>(m) * grid.spacing, f.sample_grid());
        if (t.truncated)
            throw truncation_error(std::string("sampled ") + role +
                                   " has non-decaying derivative at its sampling boundary; "
                                   "its transform would be truncation-dominated");
        lag[static_cast<size_t>(m)] = t.value;
    }
    return lag;
}

KernelMatrix assemble(const FunctionSpec& slope_factor, const FunctionSpec& transform_factor,
                      const Grid& grid, KernelSide side) {
    const int n = grid.size();
    // F[u'] at the lags m*h; on the momentum side the lag enters negated,
    // which for a real u' is the complex conjugate.
    std::vector<std::complex<double>> lag =
        lag_transforms(transform_factor, grid,
                       side == KernelSide::position ? "f" : "g");

    KernelMatrix out;
    out.grid = grid;
    out.side = side;
    out.matrix.resize(n, n);
    for (int i = 0; i < n; ++i) {
        const double xi = grid.nodes[static_cast<size_t>(i)];
        const double wi = grid.weights[static_cast<size_t>(i)];
        for (int j = i; j < n; ++j) {
            const double xj = grid.nodes[static_cast<size_t>(j)];
            const double sw = std::sqrt(wi * grid.weights[static_cast<size_t>(j)]);
            std::complex<double> t = lag[static_cast<size_t>(j - i)];
            if (side == KernelSide::momentum) t = std::conj(t);
            std::complex<double> v =
                sw * INV_SQRT_2PI * divided_difference(slope_factor, xi, xj) * t;
            if (i == j) v = std::complex<double>(v.real(), 0.0);
            out.matrix(i, j) = v;
            out.matrix(j, i) = std::conj(v);
        }
    }
    return out;
}

} // namespace

double divided_difference(const FunctionSpec& g, double x, double y) {
    if (!std::isfinite(x) || !std::isfinite(y))
        throw std::invalid_argument("divided difference requires finite arguments");
    if (g.is_sampled()) {
        if (std::abs(x - y) < 1e-4) return g.derivative(0.5 * (x + y));
        return (g.value(x) - g.value(y)) / (x - y);
    }
    if (x == y) return g.derivative(x);
    double acc = 0.0;
    for (const TanhAtom& a : g.atoms()) acc += atom_divided_difference(a, x, y);
    return acc;
}

std::complex<double> position_kernel_value(const FunctionSpec& g, const FunctionSpec& f,
                                           double x, double y) {
    return INV_SQRT_2PI * divided_difference(g, x, y) *
           transform_of_derivative(f.atoms(), y - x);
}

std::complex<double> momentum_kernel_value(const FunctionSpec& g, const FunctionSpec& f,
                                           double xi, double eta) {
    return INV_SQRT_2PI * divided_difference(f, xi, eta) *
           transform_of_derivative(g.atoms(), xi - eta);
}

KernelMatrix assemble_position_kernel(const FunctionSpec& g, const FunctionSpec& f,
                                      const Grid& grid) {
    return assemble(g, f, grid, KernelSide::position);
}

KernelMatrix assemble_momentum_kernel(const FunctionSpec& g, const FunctionSpec& f,
                                      const Grid& grid) {
    return assemble(f, g, grid, KernelSide::momentum);
}

double hermiticity_defect(const Eigen::MatrixXcd& m) {
    if (m.rows() != m.cols())
        throw std::invalid_argument("hermiticity defect of a non-square matrix");
    double defect = 0.0;
    for (Eigen::Index i = 0; i < m.rows(); ++i)
        for (Eigen::Index j = i; j < m.cols(); ++j)
            defect = std::max(defect, std::abs(m(i, j) - std::conj(m(j, i))));
    return defect;
}

} // namespace katolab
