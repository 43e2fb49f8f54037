#pragma once

#include <complex>
#include <span>
#include <vector>

namespace katolab {

/// Uniform symmetric quadrature grid on [-L, L] with trapezoid weights.
///
/// Nodes are mirrored exactly: node[n-1-i] == -node[i] bitwise and the
/// center node is exactly 0.0.  Interior weights equal the spacing, the two
/// end weights equal half the spacing.
struct Grid {
    double half_width = 0.0;          ///< L
    double spacing = 0.0;             ///< h = 2L/(n-1)
    std::vector<double> nodes;        ///< ascending, size n (odd)
    std::vector<double> weights;      ///< trapezoid weights, size n

    int size() const { return static_cast<int>(nodes.size()); }
    int center_index() const { return size() / 2; }
};

/// Build a grid with n nodes on [-half_width, half_width].
/// Requires half_width > 0 finite and n odd, n >= 3.
Grid make_grid(double half_width, int n);

/// Keep every stride-th node (endpoints preserved).  Requires stride >= 1,
/// (n-1) divisible by stride, and an odd node count for the result.
Grid subsample_grid(const Grid& grid, int stride);

/// Trapezoid quadrature with compensated (Kahan) summation.
double integrate(const Grid& grid, std::span<const double> samples);
std::complex<double> integrate(const Grid& grid,
                               std::span<const std::complex<double>> samples);

} // namespace katolab
