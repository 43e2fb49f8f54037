#pragma once

#include <Eigen/Dense>
#include <complex>

#include "katolab/funcspec.hpp"
#include "katolab/grid.hpp"

namespace katolab {

enum class KernelSide {
    position,  ///< kernel of i[f(P), g(Q)] in the position representation
    momentum   ///< kernel of the same operator in the momentum representation
};

/// Symmetrically weighted Nystrom discretization of a commutator kernel.
/// matrix(i,j) = sqrt(w_i w_j) * K(x_i, x_j); Hermitian by construction
/// (upper triangle computed, lower triangle mirrored by conjugation,
/// diagonal imaginary parts set to exactly zero).
struct KernelMatrix {
    Grid grid;
    KernelSide side = KernelSide::position;
    Eigen::MatrixXcd matrix;
};

/// Stable divided difference (g(x) - g(y)) / (x - y), continued to the
/// diagonal by g'.  For mixtures each atom uses the cancellation-free
/// identity  w a (sinh u / u) / (cosh(a(x-t)) cosh(a(y-t))),  u = a(x-y),
/// with a short series for sinh u / u once |u| < 1e-4.  Sampled profiles
/// fall back to the direct quotient, switching to the interpolated slope
/// at the midpoint when |x - y| < 1e-4.
double divided_difference(const FunctionSpec& g, double x, double y);

/// Unweighted kernel value of i[f(P), g(Q)] at (x, y) in position
/// representation: (2 pi)^{-1/2} * dd(g; x, y) * F[f'](y - x).
/// Requires f to be a tanh mixture (closed-form transform).
std::complex<double> position_kernel_value(const FunctionSpec& g, const FunctionSpec& f,
                                           double x, double y);

/// Unweighted kernel value in momentum representation at (xi, eta):
/// (2 pi)^{-1/2} * dd(f; xi, eta) * F[g'](xi - eta).
std::complex<double> momentum_kernel_value(const FunctionSpec& g, const FunctionSpec& f,
                                           double xi, double eta);

/// Assemble the weighted position-side matrix on the grid.  Transforms are
/// precomputed at the lags m*h.  A sampled f uses the quadrature transform
/// and throws truncation_error if its derivative fails to decay at the
/// sampling boundary.
KernelMatrix assemble_position_kernel(const FunctionSpec& g, const FunctionSpec& f,
                                      const Grid& grid);

/// Assemble the weighted momentum-side matrix on the grid (roles of f and g
/// exchange; the transform lag enters with the opposite sign).
KernelMatrix assemble_momentum_kernel(const FunctionSpec& g, const FunctionSpec& f,
                                      const Grid& grid);

/// max_{i,j} |A(i,j) - conj(A(j,i))| — zero for assembled kernels.
double hermiticity_defect(const Eigen::MatrixXcd& m);

} // namespace katolab
