#pragma once

#include <complex>
#include <vector>

#include "katolab/grid.hpp"

namespace katolab {

/// One bounded monotone building block w * tanh(a * (x - t)), w > 0, a > 0.
struct TanhAtom {
    double scale = 1.0;   ///< a
    double center = 0.0;  ///< t
    double weight = 1.0;  ///< w
};

/// A bounded nondecreasing function, either a finite positive combination of
/// tanh atoms plus a constant offset, or a sampled profile on a grid.
///
/// Mixtures carry closed forms for the derivative, the analytic continuation
/// into their pole-free strip, and the total variation; sampled profiles
/// interpolate linearly and only support real evaluation.
class FunctionSpec {
public:
    static FunctionSpec tanh_mixture(std::vector<TanhAtom> atoms, double offset = 0.0);

    /// values[i] ~ f(nodes[i]), slopes[i] ~ f'(nodes[i]) >= 0.
    static FunctionSpec sampled(Grid grid, std::vector<double> values,
                                std::vector<double> slopes);

    bool is_mixture() const { return kind_ == Kind::mixture; }
    bool is_sampled() const { return kind_ == Kind::sampled; }
    /// True for a mixture with no atoms (a constant function).
    bool is_constant() const { return kind_ == Kind::mixture && atoms_.empty(); }

    const std::vector<TanhAtom>& atoms() const;
    double offset() const { return offset_; }
    const Grid& sample_grid() const;

    double value(double x) const;
    double derivative(double x) const;

    /// f(+inf) - f(-inf); for sampled profiles the bracket across the grid.
    double bracket() const;

    /// Analytic continuation (mixtures only).  Throws pole_proximity_error
    /// when any atom satisfies a*|Im z| > pi/2 - 1e-6.
    std::complex<double> continue_analytic(std::complex<double> z) const;

    /// Half-width of the pole-free horizontal strip: min over atoms of
    /// pi/(2a).  +inf for a constant, throws std::logic_error for sampled.
    double strip_half_width() const;

private:
    enum class Kind { mixture, sampled };

    FunctionSpec() = default;

    Kind kind_ = Kind::mixture;
    std::vector<TanhAtom> atoms_;
    double offset_ = 0.0;
    Grid grid_;
    std::vector<double> values_;
    std::vector<double> slopes_;
};

/// Result of a transform evaluated by quadrature on a finite grid.
struct NumericTransform {
    std::complex<double> value;
    bool truncated = false;  ///< integrand did not decay at the boundary
};

/// Fourier transform of the derivative of a tanh mixture, with the
/// convention  F[u](k) = (2*pi)^(-1/2) * integral of u(x) e^{-ikx} dx.
/// Closed form per atom:  w e^{-ikt} * pi k / (a sinh(pi k / (2a))),
/// with the ratio replaced by its limit 2 when |k| < 1e-8.
std::complex<double> transform_of_derivative(const std::vector<TanhAtom>& atoms, double k);

/// Same closed form continued to complex k (used on the imaginary axis).
std::complex<double> transform_of_derivative(const std::vector<TanhAtom>& atoms,
                                             std::complex<double> k);

/// Quadrature fallback for arbitrary specs: integrates f'(x) e^{-ikx} on the
/// grid and flags the result when |f'| at either endpoint exceeds 1e-12.
NumericTransform transform_of_derivative_numeric(const FunctionSpec& f, double k,
                                                 const Grid& grid);

/// Default assembly grid for a pair of specs: L = max(20, 20/min scale +
/// max |center|) over all atoms of both mixtures, 801 nodes.  Sampled specs
/// contribute their own half-width.
Grid default_grid_for(const FunctionSpec& f, const FunctionSpec& g);

} // namespace katolab
