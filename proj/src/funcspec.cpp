#include "katolab/funcspec.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

#include "katolab/constants.hpp"
#include "katolab/errors.hpp"

namespace katolab {

namespace {

// Domain slop for sampled-profile evaluation: querying a hair past the last
// node (from accumulated rounding) is tolerated, anything further is an error.
double edge_slop(const Grid& g) { return 1e-12 * std::max(1.0, g.half_width); }

double interp(const Grid& g, const std::vector<double>& table, double x) {
    double lo = g.nodes.front(), hi = g.nodes.back();
    if (x < lo || x > hi) {
        if (x < lo - edge_slop(g) || x > hi + edge_slop(g))
            throw std::domain_error("evaluation point " + std::to_string(x) +
                                    " outside sampled domain [" + std::to_string(lo) +
                                    ", " + std::to_string(hi) + "]");
        x = std::clamp(x, lo, hi);
    }
    int idx = static_cast<int>(std::floor((x - lo) / g.spacing));
    idx = std::clamp(idx, 0, g.size() - 2);
    double theta = (x - g.nodes[static_cast<size_t>(idx)]) / g.spacing;
    theta = std::clamp(theta, 0.0, 1.0);
    double a = table[static_cast<size_t>(idx)];
    double b = table[static_cast<size_t>(idx) + 1];
    return a + theta * (b - a);
}

// tanh on the complex plane, stable away from the poles i*pi/2 + i*pi*Z.
// For Re u >= 0 use (1 - e^{-2u}) / (1 + e^{-2u}); the exponential never
// overflows there and underflow simply rounds the value to 1.
std::complex<double> tanh_stable(std::complex<double> u) {
    if (std::abs(u) < 1e-5) {
        // series avoids the 1 - e^{-2u} cancellation near the origin
        std::complex<double> u2 = u * u;
        return u * (1.0 - u2 * (1.0 / 3.0) + u2 * u2 * (2.0 / 15.0));
    }
    if (u.real() < 0.0) return -tanh_stable(-u);
    std::complex<double> e = std::exp(-2.0 * u);
    return (1.0 - e) / (1.0 + e);
}

} // namespace

FunctionSpec FunctionSpec::tanh_mixture(std::vector<TanhAtom> atoms, double offset) {
    for (size_t i = 0; i < atoms.size(); ++i) {
        const TanhAtom& a = atoms[i];
        if (!std::isfinite(a.scale) || a.scale <= 0.0)
            throw std::invalid_argument("atom " + std::to_string(i) +
                                        ": scale must be positive and finite");
        if (!std::isfinite(a.weight) || a.weight <= 0.0)
            throw std::invalid_argument("atom " + std::to_string(i) +
                                        ": weight must be positive and finite");
        if (!std::isfinite(a.center))
            throw std::invalid_argument("atom " + std::to_string(i) +
                                        ": center must be finite");
    }
    if (!std::isfinite(offset))
        throw std::invalid_argument("offset must be finite");
    FunctionSpec f;
    f.kind_ = Kind::mixture;
    f.atoms_ = std::move(atoms);
    f.offset_ = offset;
    return f;
}

FunctionSpec FunctionSpec::sampled(Grid grid, std::vector<double> values,
                                   std::vector<double> slopes) {
    const size_t n = static_cast<size_t>(grid.size());
    if (values.size() != n || slopes.size() != n)
        throw std::invalid_argument("sampled profile needs one value and one slope per node");
    for (size_t i = 0; i < n; ++i) {
        if (!std::isfinite(values[i]) || !std::isfinite(slopes[i]))
            throw std::invalid_argument("sampled profile contains a non-finite entry at node " +
                                        std::to_string(i));
        if (slopes[i] < 0.0)
            throw std::invalid_argument("sampled profile has negative slope at node " +
                                        std::to_string(i) + "; the profile must be nondecreasing");
    }
    FunctionSpec f;
    f.kind_ = Kind::sampled;
    f.grid_ = std::move(grid);
    f.values_ = std::move(values);
    f.slopes_ = std::move(slopes);
    return f;
}

const std::vector<TanhAtom>& FunctionSpec::atoms() const {
    if (kind_ != Kind::mixture)
        throw std::logic_error("atoms() is only available for tanh mixtures");
    return atoms_;
}

const Grid& FunctionSpec::sample_grid() const {
    if (kind_ != Kind::sampled)
        throw std::logic_error("sample_grid() is only available for sampled profiles");
    return grid_;
}

double FunctionSpec::value(double x) const {
    if (kind_ == Kind::sampled) return interp(grid_, values_, x);
    double acc = offset_;
    for (const TanhAtom& a : atoms_)
        acc += a.weight * std::tanh(a.scale * (x - a.center));
    return acc;
}

double FunctionSpec::derivative(double x) const {
    if (kind_ == Kind::sampled) return interp(grid_, slopes_, x);
    double acc = 0.0;
    for (const TanhAtom& a : atoms_) {
        double s = 1.0 / std::cosh(a.scale * (x - a.center));  // 0 on cosh overflow
        acc += a.weight * a.scale * s * s;
    }
    return acc;
}

double FunctionSpec::bracket() const {
    if (kind_ == Kind::sampled) return values_.back() - values_.front();
    double acc = 0.0;
    for (const TanhAtom& a : atoms_) acc += 2.0 * a.weight;
    return acc;
}

std::complex<double> FunctionSpec::continue_analytic(std::complex<double> z) const {
    if (kind_ != Kind::mixture)
        throw std::logic_error("analytic continuation requires a tanh mixture");
    const double y = std::abs(z.imag());
    std::complex<double> acc{offset_, 0.0};
    for (const TanhAtom& a : atoms_) {
        // nearest pole of tanh(a(z-t)) sits at Im z = pi/(2a)
        if (a.scale * y > PI / 2.0 - 1e-6)
            throw pole_proximity_error(
                "continuation point within the guard distance of a pole: scale " +
                std::to_string(a.scale) + " at |Im z| = " + std::to_string(y));
        acc += a.weight * tanh_stable(a.scale * (z - std::complex<double>(a.center, 0.0)));
    }
    return acc;
}

double FunctionSpec::strip_half_width() const {
    if (kind_ != Kind::mixture)
        throw std::logic_error("strip half-width requires a tanh mixture");
    double bound = std::numeric_limits<double>::infinity();
    for (const TanhAtom& a : atoms_) bound = std::min(bound, PI / (2.0 * a.scale));
    return bound;
}

std::complex<double> transform_of_derivative(const std::vector<TanhAtom>& atoms, double k) {
    std::complex<double> acc{0.0, 0.0};
    for (const TanhAtom& a : atoms) {
        double ratio;
        if (std::abs(k) < 1e-8) {
            ratio = 2.0;  // limit of pi*k / (a*sinh(pi*k/(2a)))
        } else {
            double arg = PI * k / (2.0 * a.scale);
            ratio = PI * k / (a.scale * std::sinh(arg));  // -> +0 when sinh overflows
        }
        acc += a.weight * ratio * std::polar(1.0, -k * a.center);
    }
    return INV_SQRT_2PI * acc;
}

std::complex<double> transform_of_derivative(const std::vector<TanhAtom>& atoms,
                                             std::complex<double> k) {
    std::complex<double> acc{0.0, 0.0};
    const std::complex<double> minus_i{0.0, -1.0};
    for (const TanhAtom& a : atoms) {
        std::complex<double> ratio;
        if (std::abs(k) < 1e-8) {
            ratio = 2.0;
        } else {
            std::complex<double> arg = PI * k / (2.0 * a.scale);
            ratio = PI * k / (a.scale * std::sinh(arg));
        }
        acc += a.weight * ratio * std::exp(minus_i * k * a.center);
    }
    return INV_SQRT_2PI * acc;
}

NumericTransform transform_of_derivative_numeric(const FunctionSpec& f, double k,
                                                 const Grid& grid) {
    const int n = grid.size();
    std::vector<std::complex<double>> integrand(static_cast<size_t>(n));
    double head = 0.0, tail = 0.0;
    for (int i = 0; i < n; ++i) {
        double d = f.derivative(grid.nodes[static_cast<size_t>(i)]);
        if (i == 0) head = d;
        if (i == n - 1) tail = d;
        integrand[static_cast<size_t>(i)] =
            d * std::polar(1.0, -k * grid.nodes[static_cast<size_t>(i)]);
    }
    NumericTransform out;
    out.value = INV_SQRT_2PI *
                integrate(grid, std::span<const std::complex<double>>(integrand));
    out.truncated = std::abs(head) > 1e-12 || std::abs(tail) > 1e-12;
    return out;
}

namespace {

void widen_for(const FunctionSpec& f, double& half_width) {
    if (f.is_sampled()) {
        half_width = std::max(half_width, f.sample_grid().half_width);
        return;
    }
    if (f.atoms().empty()) return;
    double min_scale = std::numeric_limits<double>::infinity();
    double max_center = 0.0;
    for (const TanhAtom& a : f.atoms()) {
        min_scale = std::min(min_scale, a.scale);
        max_center = std::max(max_center, std::abs(a.center));
    }
    half_width = std::max(half_width, 20.0 / min_scale + max_center);
}

} // namespace

Grid default_grid_for(const FunctionSpec& f, const FunctionSpec& g) {
    double half_width = 20.0;
    widen_for(f, half_width);
    widen_for(g, half_width);
    return make_grid(half_width, 801);
}

} // namespace katolab
