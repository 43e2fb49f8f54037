#include "katolab/grid.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace katolab {

Grid make_grid(double half_width, int n) {
    if (!std::isfinite(half_width) || half_width <= 0.0)
        throw std::invalid_argument("grid half-width must be positive and finite");
    if (n < 3)
        throw std::invalid_argument("grid needs at least 3 nodes, got " + std::to_string(n));
    if (n % 2 == 0)
        throw std::invalid_argument("grid node count must be odd, got " + std::to_string(n));

    Grid g;
    g.half_width = half_width;
    g.spacing = 2.0 * half_width / static_cast<double>(n - 1);
    g.nodes.resize(static_cast<size_t>(n));
    g.weights.assign(static_cast<size_t>(n), g.spacing);

    // Fill the lower half and mirror it so that nodes[n-1-i] == -nodes[i]
    // holds bitwise and the midpoint is exactly zero.
    const int mid = n / 2;
    for (int i = 0; i < mid; ++i) {
        double x = -half_width + g.spacing * static_cast<double>(i);
        g.nodes[static_cast<size_t>(i)] = x;
        g.nodes[static_cast<size_t>(n - 1 - i)] = -x;
    }
    g.nodes[static_cast<size_t>(mid)] = 0.0;
    g.weights.front() = 0.5 * g.spacing;
    g.weights.back() = 0.5 * g.spacing;
    return g;
}

Grid subsample_grid(const Grid& grid, int stride) {
    const int n = grid.size();
    if (stride < 1)
        throw std::invalid_argument("subsample stride must be >= 1");
    if (n < 3)
        throw std::invalid_argument("cannot subsample an empty grid");
    if ((n - 1) % stride != 0)
        throw std::invalid_argument("stride " + std::to_string(stride) +
                                    " does not divide the node count minus one (" +
                                    std::to_string(n - 1) + ")");
    const int m = (n - 1) / stride + 1;
    if (m % 2 == 0)
        throw std::invalid_argument("subsampling with stride " + std::to_string(stride) +
                                    " would produce an even node count " + std::to_string(m));
    if (m < 3)
        throw std::invalid_argument("subsampling with stride " + std::to_string(stride) +
                                    " leaves fewer than 3 nodes");
    Grid out = make_grid(grid.half_width, m);
    // Reuse the parent's node values so subsampled nodes match bitwise.
    for (int i = 0; i < m; ++i)
        out.nodes[static_cast<size_t>(i)] = grid.nodes[static_cast<size_t>(i * stride)];
    return out;
}

namespace {

template <typename T>
T kahan_weighted_sum(const Grid& grid, std::span<const T> samples) {
    if (static_cast<int>(samples.size()) != grid.size())
        throw std::invalid_argument("sample count " + std::to_string(samples.size()) +
                                    " does not match grid size " + std::to_string(grid.size()));
    T sum{};
    T carry{};
    for (size_t i = 0; i < samples.size(); ++i) {
        T term = grid.weights[i] * samples[i] - carry;
        T next = sum + term;
        carry = (next - sum) - term;
        sum = next;
    }
    return sum;
}

} // namespace

double integrate(const Grid& grid, std::span<const double> samples) {
    return kahan_weighted_sum<double>(grid, samples);
}

std::complex<double> integrate(const Grid& grid,
                               std::span<const std::complex<double>> samples) {
    return kahan_weighted_sum<std::complex<double>>(grid, samples);
}

} // namespace katolab
