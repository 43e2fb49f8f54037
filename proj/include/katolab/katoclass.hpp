#pragma once

#include <span>

#include "katolab/funcspec.hpp"
#include "katolab/grid.hpp"

namespace katolab {

/// Exponential decay rate fitted on one pair of tail windows.
struct StripEstimate {
    double half_width = 0.0;   ///< min(rate+, rate-) / 2
    double rate_positive = 0.0;
    double rate_negative = 0.0;
    double fit_quality = 0.0;  ///< min of the two tail R^2 values
    char limiting_side = '=';  ///< '+', '-' or '=' for which tail limits
    double window_lo = 0.0;    ///< |x| window, absolute coordinates
    double window_hi = 0.0;
};

/// Fit log(samples) against |x| on the windows [lo_frac*L, hi_frac*L] of
/// each tail and read off the decay rate.  The samples are the PARTNER
/// function's derivative on the grid; the inferred analyticity strip of the
/// other factor has half-width rate/2.  Throws unreliable_fit_error when
/// min R^2 < 0.999, and std::domain_error when a window contains
/// non-positive samples or fewer than 3 points.
StripEstimate estimate_strip_from_partner(std::span<const double> samples, const Grid& grid,
                                          double lo_frac = 0.5, double hi_frac = 0.9);

struct ExpMoment {
    double value = 0.0;
    bool divergent = false;  ///< integrand still growing across the outer 10%
};

/// Truncated exponential moment  integral of f'(x) e^{s|x|} dx  over the
/// grid.  The kink of e^{s|x|} at 0 breaks the trapezoid rule's smoothness
/// assumption, so Euler-Maclaurin corrections built from the jump of the
/// odd derivatives at 0 are applied through order h^6.
ExpMoment exp_moment(const FunctionSpec& f, double s, const Grid& grid);

/// Verify  y * Im g(x + iy) >= -1e-12  at the levels y = +-r m/(levels+1),
/// m = 1..levels, across all grid nodes.  Requires a tanh mixture; throws
/// pole_proximity_error unless r < strip half-width - 1e-6.
bool herglotz_grid_check(const FunctionSpec& g, double r, const Grid& grid, int levels = 8);

/// For a single-atom pair with scale product pi/2 (rank one), the kernel
/// diagonal continues off the real axis:
///   (2 pi)^{-1/2} (Im g(x+iy)/y) F[f'](-2iy) = |phi(x+iy)|^2.
/// Returns the max absolute mismatch over the nodes.  y = 0 uses the limit
/// g'(x) F[f'](0).
double strip_continuation_identity(const FunctionSpec& g, const FunctionSpec& f,
                                   const Grid& grid, double y);

/// Plancherel consistency on a strip for the canonical mode phi = sech/sqrt(pi):
/// integral of |phi(x+iy)|^2 e^{2sx} dx  equals  integral of
/// |phihat(xi+is)|^2 e^{-2y xi} d xi.  Returns the absolute difference of
/// the two grid quadratures.  Requires |y| < pi/2 - 1e-6 and |s| < 1 - 1e-6.
double plancherel_strip_check(double y, double s, const Grid& grid);

/// Combined tail report for a pair: the strip of g estimated from f' decay
/// (capped by g's own pole bound when g is a mixture), the strip of f from
/// g' decay (capped by f's bound), and their product against pi/2.
struct StripProductReport {
    double r = 0.0;        ///< strip half-width of g
    double r_prime = 0.0;  ///< strip half-width of f
    double product = 0.0;
    double gap_vs_half_pi = 0.0;
    double fit_quality_f = 0.0;  ///< tail fit on f' (produces r)
    double fit_quality_g = 0.0;  ///< tail fit on g' (produces r_prime)
};

StripProductReport strip_product_report(const FunctionSpec& g, const FunctionSpec& f,
                                        const Grid& grid);

} // namespace katolab
