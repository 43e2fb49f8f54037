#include "katolab/katoclass.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

#include "katolab/constants.hpp"
#include "katolab/errors.hpp"

namespace katolab {

namespace {

struct TailFit {
    double rate = 0.0;      // decay rate of the samples, -slope of log fit
    double r_squared = 0.0;
};

TailFit fit_tail(const std::vector<double>& xs, const std::vector<double>& ys) {
    const size_t n = xs.size();
    double sx = 0.0, sy = 0.0;
    for (size_t i = 0; i < n; ++i) {
        sx += xs[i];
        sy += ys[i];
    }
    const double mx = sx / static_cast<double>(n);
    const double my = sy / static_cast<double>(n);
    double sxx = 0.0, sxy = 0.0, syy = 0.0;
    for (size_t i = 0; i < n; ++i) {
        const double dx = xs[i] - mx;
        const double dy = ys[i] - my;
        sxx += dx * dx;
        sxy += dx * dy;
        syy += dy * dy;
    }
    TailFit fit;
    if (sxx == 0.0) return fit;  // degenerate window
    const double slope = sxy / sxx;
    fit.rate = -slope;
    if (syy == 0.0) {
        fit.r_squared = 0.0;  // constant data carries no decay information
        return fit;
    }
    double ss_res = 0.0;
    const double intercept = my - slope * mx;
    for (size_t i = 0; i < n; ++i) {
        const double resid = ys[i] - (intercept + slope * xs[i]);
        ss_res += resid * resid;
    }
    fit.r_squared = 1.0 - ss_res / syy;
    return fit;
}

} // namespace

StripEstimate estimate_strip_from_partner(std::span<const double> samples, const Grid& grid,
                                          double lo_frac, double hi_frac) {
    if (static_cast<int>(samples.size()) != grid.size())
        throw std::invalid_argument("sample count does not match the grid");
    if (!(0.0 < lo_frac && lo_frac < hi_frac && hi_frac <= 1.0))
        throw std::invalid_argument("tail window fractions must satisfy 0 < lo < hi <= 1");

    const double L = grid.half_width;
    const double lo = lo_frac * L - 1e-12 * L;
    const double hi = hi_frac * L + 1e-12 * L;

    std::vector<double> xs_pos, ys_pos, xs_neg, ys_neg;
    for (int i = 0; i < grid.size(); ++i) {
        const double x = grid.nodes[static_cast<size_t>(i)];
        const double ax = std::abs(x);
        if (ax < lo || ax > hi) continue;
        const double v = samples[static_cast<size_t>(i)];
        if (!(v > 0.0))
            throw std::domain_error("tail window contains a non-positive sample at x = " +
                                    std::to_string(x) + "; cannot fit a decay rate");
        if (x > 0.0) {
            xs_pos.push_back(ax);
            ys_pos.push_back(std::log(v));
        } else {
            xs_neg.push_back(ax);
            ys_neg.push_back(std::log(v));
        }
    }
    if (xs_pos.size() < 3 || xs_neg.size() < 3)
        throw std::domain_error("tail windows hold fewer than 3 nodes per side; "
                                "widen the grid or the window");

    const TailFit fp = fit_tail(xs_pos, ys_pos);
    const TailFit fn = fit_tail(xs_neg, ys_neg);

    StripEstimate est;
    est.rate_positive = fp.rate;
    est.rate_negative = fn.rate;
    est.fit_quality = std::min(fp.r_squared, fn.r_squared);
    est.window_lo = lo_frac * L;
    est.window_hi = hi_frac * L;
    if (fp.rate < fn.rate) {
        est.limiting_side = '+';
        est.half_width = fp.rate / 2.0;
    } else if (fn.rate < fp.rate) {
        est.limiting_side = '-';
        est.half_width = fn.rate / 2.0;
    } else {
        est.limiting_side = '=';
        est.half_width = fp.rate / 2.0;
    }
    if (!(est.half_width > 0.0))
        throw unreliable_fit_error("tail samples do not decay (fitted rate " +
                                   std::to_string(2.0 * est.half_width) +
                                   "); no strip can be inferred");
    if (est.fit_quality < 0.999)
        throw unreliable_fit_error("tail is not a clean exponential: R^2 = " +
                                   std::to_string(est.fit_quality) +
                                   " < 0.999 (estimate would have been " +
                                   std::to_string(est.half_width) + ")");
    return est;
}

ExpMoment exp_moment(const FunctionSpec& f, double s, const Grid& grid) {
    if (!std::isfinite(s)) throw std::invalid_argument("moment parameter must be finite");
    const int n = grid.size();
    std::vector<double> w(static_cast<size_t>(n));
    std::vector<double> v(static_cast<size_t>(n));
    for (int i = 0; i < n; ++i) {
        const double x = grid.nodes[static_cast<size_t>(i)];
        w[static_cast<size_t>(i)] = f.derivative(x);
        v[static_cast<size_t>(i)] = w[static_cast<size_t>(i)] * std::exp(s * std::abs(x));
    }

    ExpMoment out;
    out.value = integrate(grid, std::span<const double>(v));

    // Euler-Maclaurin: the quadrature error of the split trapezoid rule is
    // driven by the jumps of the odd derivatives of w(x) e^{s|x|} at x = 0.
    if (n >= 5 && s != 0.0) {
        const size_t c = static_cast<size_t>(grid.center_index());
        const double h = grid.spacing;
        const double w0 = w[c];
        const double d2 = (-w[c + 2] + 16.0 * w[c + 1] - 30.0 * w[c] + 16.0 * w[c - 1] -
                           w[c - 2]) / (12.0 * h * h);
        const double d4 = (w[c + 2] - 4.0 * w[c + 1] + 6.0 * w[c] - 4.0 * w[c - 1] +
                           w[c - 2]) / (h * h * h * h);
        const double s2 = s * s;
        const double delta1 = -2.0 * s * w0;
        const double delta3 = -2.0 * (3.0 * s * d2 + s * s2 * w0);
        const double delta5 = -2.0 * (5.0 * s * d4 + 10.0 * s * s2 * d2 + s * s2 * s2 * w0);
        out.value += -(h * h / 12.0) * delta1 + (std::pow(h, 4) / 720.0) * delta3 -
                     (std::pow(h, 6) / 30240.0) * delta5;
    }

    // Divergence heuristic: the integrand should decay across the outer 10%
    // of the domain on both sides; if it grows, the untruncated moment is
    // dominated by the missing tail.
    const double mark = 0.9 * grid.half_width;
    int j_pos = n - 1, j_neg = 0;
    double best_pos = std::numeric_limits<double>::infinity();
    double best_neg = std::numeric_limits<double>::infinity();
    for (int i = 0; i < n; ++i) {
        const double x = grid.nodes[static_cast<size_t>(i)];
        if (std::abs(x - mark) < best_pos) {
            best_pos = std::abs(x - mark);
            j_pos = i;
        }
        if (std::abs(x + mark) < best_neg) {
            best_neg = std::abs(x + mark);
            j_neg = i;
        }
    }
    const size_t last = static_cast<size_t>(n - 1);
    out.divergent = v[last] > v[static_cast<size_t>(j_pos)] ||
                    v[0] > v[static_cast<size_t>(j_neg)];
    return out;
}

bool herglotz_grid_check(const FunctionSpec& g, double r, const Grid& grid, int levels) {
    if (!g.is_mixture())
        throw std::invalid_argument("Herglotz grid check requires a tanh mixture");
    if (!(r > 0.0) || !std::isfinite(r))
        throw std::invalid_argument("Herglotz level height must be positive and finite");
    if (levels < 1) throw std::invalid_argument("Herglotz check needs at least one level");
    const double bound = g.strip_half_width();
    if (!(r < bound - 1e-6))
        throw pole_proximity_error("requested level height " + std::to_string(r) +
                                   " reaches the pole bound " + std::to_string(bound));
    for (int m = 1; m <= levels; ++m) {
        const double y = r * static_cast<double>(m) / static_cast<double>(levels + 1);
        for (double x : grid.nodes) {
            for (double yy : {y, -y}) {
                const std::complex<double> v = g.continue_analytic({x, yy});
                if (yy * v.imag() < -1e-12) return false;
            }
        }
    }
    return true;
}

double strip_continuation_identity(const FunctionSpec& g, const FunctionSpec& f,
                                   const Grid& grid, double y) {
    if (!g.is_mixture() || !f.is_mixture() || g.atoms().size() != 1 || f.atoms().size() != 1)
        throw std::invalid_argument(
            "strip continuation identity is defined for single-atom pairs");
    const TanhAtom& ga = g.atoms()[0];
    const TanhAtom& fa = f.atoms()[0];
    if (std::abs(ga.scale * fa.scale - PI / 2.0) > 1e-9)
        throw std::invalid_argument("strip continuation identity requires the scale product "
                                    "a_g * a_f = pi/2, got " +
                                    std::to_string(ga.scale * fa.scale));
    const double bound = PI / (2.0 * ga.scale);
    if (!(std::abs(y) < bound - 1e-6))
        throw pole_proximity_error("continuation height " + std::to_string(y) +
                                   " reaches the pole bound " + std::to_string(bound));

    // rank-one mode of the pair: phi(z) = sqrt(w_g w_f a_g / pi)
    //                                     * e^{i z t_f} sech(a_g (z - t_g))
    const double amp2 = ga.weight * fa.weight * ga.scale / PI;

    double tform;  // F[f'](-2iy), real on the imaginary axis
    if (std::abs(y) < 1e-14) {
        tform = transform_of_derivative(f.atoms(), 0.0).real();
    } else {
        tform = transform_of_derivative(f.atoms(), std::complex<double>(0.0, -2.0 * y)).real();
    }

    double worst = 0.0;
    for (double x : grid.nodes) {
        double lhs;
        if (std::abs(y) < 1e-14) {
            lhs = INV_SQRT_2PI * g.derivative(x) * tform;
        } else {
            const std::complex<double> gz = g.continue_analytic({x, y});
            lhs = INV_SQRT_2PI * (gz.imag() / y) * tform;
        }
        const double p = ga.scale * (x - ga.center);
        const double q = ga.scale * y;
        // |sech(p + iq)|^2 = 2 / (cosh 2p + cos 2q)
        const double rhs = amp2 * std::exp(-2.0 * y * fa.center) *
                           2.0 / (std::cosh(2.0 * p) + std::cos(2.0 * q));
        worst = std::max(worst, std::abs(lhs - rhs));
    }
    return worst;
}

double plancherel_strip_check(double y, double s, const Grid& grid) {
    if (!(std::abs(y) < PI / 2.0 - 1e-6))
        throw pole_proximity_error("strip height |y| = " + std::to_string(std::abs(y)) +
                                   " reaches the mode's pole bound pi/2");
    if (!(std::abs(s) < 1.0 - 1e-6))
        throw pole_proximity_error("frequency shift |s| = " + std::to_string(std::abs(s)) +
                                   " reaches the transformed mode's pole bound 1");
    const int n = grid.size();
    std::vector<double> a(static_cast<size_t>(n)), b(static_cast<size_t>(n));
    for (int i = 0; i < n; ++i) {
        const double x = grid.nodes[static_cast<size_t>(i)];
        a[static_cast<size_t>(i)] = std::exp(2.0 * s * x) * (2.0 / PI) /
                                    (std::cosh(2.0 * x) + std::cos(2.0 * y));
        b[static_cast<size_t>(i)] = std::exp(-2.0 * y * x) /
                                    (std::cosh(PI * x) + std::cos(PI * s));
    }
    const double q1 = integrate(grid, std::span<const double>(a));
    const double q2 = integrate(grid, std::span<const double>(b));
    return std::abs(q1 - q2);
}

StripProductReport strip_product_report(const FunctionSpec& g, const FunctionSpec& f,
                                        const Grid& grid) {
    const int n = grid.size();
    std::vector<double> fw(static_cast<size_t>(n)), gw(static_cast<size_t>(n));
    for (int i = 0; i < n; ++i) {
        const double x = grid.nodes[static_cast<size_t>(i)];
        fw[static_cast<size_t>(i)] = f.derivative(x);
        gw[static_cast<size_t>(i)] = g.derivative(x);
    }
    const StripEstimate from_f = estimate_strip_from_partner(fw, grid);
    const StripEstimate from_g = estimate_strip_from_partner(gw, grid);

    StripProductReport rep;
    rep.r = from_f.half_width;
    rep.r_prime = from_g.half_width;
    // a tanh mixture cannot be analytic past its own nearest pole, whatever
    // the partner's tail suggests
    if (g.is_mixture()) rep.r = std::min(rep.r, g.strip_half_width());
    if (f.is_mixture()) rep.r_prime = std::min(rep.r_prime, f.strip_half_width());
    rep.product = rep.r * rep.r_prime;
    rep.gap_vs_half_pi = rep.product - PI / 2.0;
    rep.fit_quality_f = from_f.fit_quality;
    rep.fit_quality_g = from_g.fit_quality;
    return rep;
}

} // namespace katolab
