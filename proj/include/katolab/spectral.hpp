#pragma once

#include <Eigen/Dense>
#include <vector>

#include "katolab/kernel.hpp"

namespace katolab {

/// Spectrum and eigenvectors of a weighted kernel matrix.
/// Eigenvalues are sorted descending; each eigenvector's phase is fixed by
/// rotating its largest-magnitude component (lowest index on ties) to the
/// positive real axis, so results are reproducible bit for bit.
struct SpectralResult {
    Grid grid;
    KernelSide side = KernelSide::position;
    Eigen::VectorXd eigenvalues;   ///< descending
    Eigen::MatrixXcd eigenvectors; ///< column j pairs with eigenvalues[j]
};

/// A continuum eigenfunction recovered from a discrete eigenvector:
/// values[i] = v[i] * sqrt(|lambda|) / sqrt(w_i), so that the operator acts
/// as  sum_j sign_j (phi_j, .) phi_j.
struct Mode {
    Eigen::VectorXcd values;
    double eigenvalue = 0.0;
    int sign = 1;
};

/// Decompose a Hermitian kernel matrix.  Throws integrity_error when the
/// Hermiticity defect exceeds 1e-12 times the largest entry magnitude.
SpectralResult eigendecompose(const KernelMatrix& kernel);

/// Count of eigenvalues with |lambda| > rel_tol * max|lambda|.
int numerical_rank(const SpectralResult& spec, double rel_tol = 1e-8);

struct PositivityReport {
    bool positive = false;
    double min_eigenvalue = 0.0;
    double max_abs_eigenvalue = 0.0;
};

/// Positive semidefinite up to rel_tol * max|lambda|.
PositivityReport positivity_check(const SpectralResult& spec, double rel_tol = 1e-8);

/// Modes for all eigenvalues above the rank cutoff, with signs.
std::vector<Mode> signed_modes(const SpectralResult& spec, double rel_tol = 1e-8);

/// Modes of a positive operator.  Throws std::logic_error if the spectrum
/// is indefinite beyond tolerance.
std::vector<Mode> extract_modes(const SpectralResult& spec, double rel_tol = 1e-8);

/// Residual of the reconstruction identity
///   slope'(x) = (2 pi / [partner]) * sum_j sign_j |phi_j(x)|^2
/// evaluated at every node; [partner] is the partner function's bracket.
/// On the position side slope = g and partner = f, on the momentum side the
/// roles exchange.  Returns the max absolute residual.
double diagonal_identity_residual(const SpectralResult& spec, const FunctionSpec& slope,
                                  const FunctionSpec& partner, double rel_tol = 1e-8);

/// Largest difference between the two spectra over the `top` leading
/// eigenvalues, matched by descending |lambda| (value descending on ties).
double leading_eigenvalue_gap(const SpectralResult& a, const SpectralResult& b, int top = 10);

/// Assemble and decompose both representations and compare the leading
/// eigenvalues (matched by descending |lambda|).  Returns the largest gap
/// over the first `top` pairs.
double duality_check(const FunctionSpec& g, const FunctionSpec& f, const Grid& grid,
                     int top = 10);

} // namespace katolab
