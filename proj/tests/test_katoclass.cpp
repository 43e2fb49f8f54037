#include <doctest.h>

#include <katolab/constants.hpp>
#include <katolab/errors.hpp>
#include <katolab/funcspec.hpp>
#include <katolab/grid.hpp>
#include <katolab/katoclass.hpp>

#include "oracles.hpp"

#include <cmath>
#include <stdexcept>
#include <vector>

using katolab::exp_moment;
using katolab::FunctionSpec;
using katolab::Grid;
using katolab::make_grid;
using katolab::PI;

namespace {

FunctionSpec kato_g() { return FunctionSpec::tanh_mixture({{1.0, 0.0, 1.0}}); }
FunctionSpec kato_f() { return FunctionSpec::tanh_mixture({{PI / 2.0, 0.0, 1.0}}); }

std::vector<double> slope_samples(const FunctionSpec& f, const Grid& g) {
    std::vector<double> out(g.nodes.size());
    for (size_t i = 0; i < out.size(); ++i) out[i] = f.derivative(g.nodes[i]);
    return out;
}

} // namespace

TEST_CASE("tail fit reads off exponential decay rates exactly") {
    const Grid grid = make_grid(20.0, 801);

    // f' = (pi/2) sech^2(pi x/2) decays like e^{-pi |x|}: rate pi, strip pi/2
    const auto fs = slope_samples(kato_f(), grid);
    const auto est_f = katolab::estimate_strip_from_partner(fs, grid);
    CHECK(std::abs(est_f.rate_positive - PI) <= 1e-9);
    CHECK(std::abs(est_f.rate_negative - PI) <= 1e-9);
    CHECK(std::abs(est_f.half_width - PI / 2.0) <= 1e-9);
    CHECK(est_f.fit_quality >= 0.999999);
    CHECK(est_f.window_lo == doctest::Approx(10.0).epsilon(1e-12));
    CHECK(est_f.window_hi == doctest::Approx(18.0).epsilon(1e-12));

    // g' = sech^2 x decays like e^{-2|x|}: rate 2, strip 1
    const auto gs = slope_samples(kato_g(), grid);
    const auto est_g = katolab::estimate_strip_from_partner(gs, grid);
    CHECK(std::abs(est_g.half_width - 1.0) <= 1e-9);
}

TEST_CASE("tail fit flags non-exponential or growing profiles") {
    const Grid grid = make_grid(20.0, 801);

    // Gaussian tails are too convex in log scale: R^2 = 0.9945 < 0.999
    std::vector<double> gauss(grid.nodes.size());
    for (size_t i = 0; i < gauss.size(); ++i)
        gauss[i] = std::exp(-0.1 * grid.nodes[i] * grid.nodes[i]);
    CHECK_THROWS_AS(katolab::estimate_strip_from_partner(gauss, grid),
                    katolab::unreliable_fit_error);

    // growing samples give a negative rate
    std::vector<double> grow(grid.nodes.size());
    for (size_t i = 0; i < grow.size(); ++i) grow[i] = std::exp(0.5 * std::abs(grid.nodes[i]));
    CHECK_THROWS_AS(katolab::estimate_strip_from_partner(grow, grid),
                    katolab::unreliable_fit_error);

    // non-positive samples in the window cannot be log-fitted
    // (node 700 sits at x = 15, inside the [10, 18] fit window)
    std::vector<double> touching(grid.nodes.size());
    for (size_t i = 0; i < touching.size(); ++i)
        touching[i] = std::exp(-std::abs(grid.nodes[i]));
    touching[700] = 0.0;
    CHECK_THROWS_AS(katolab::estimate_strip_from_partner(touching, grid),
                    std::domain_error);

    // a 5-node grid leaves fewer than 3 window points per side
    const Grid tiny = make_grid(1.0, 5);
    std::vector<double> few(5, 1.0);
    CHECK_THROWS_AS(katolab::estimate_strip_from_partner(few, tiny), std::domain_error);
}

TEST_CASE("asymmetric decay: the slower tail limits the strip") {
    const Grid grid = make_grid(20.0, 801);
    std::vector<double> skew(grid.nodes.size());
    for (size_t i = 0; i < skew.size(); ++i) {
        const double x = grid.nodes[i];
        skew[i] = (x >= 0.0) ? std::exp(-3.0 * x) : std::exp(1.5 * x);
    }
    const auto est = katolab::estimate_strip_from_partner(skew, grid);
    CHECK(std::abs(est.rate_positive - 3.0) <= 1e-10);
    CHECK(std::abs(est.rate_negative - 1.5) <= 1e-10);
    CHECK(std::abs(est.half_width - 0.75) <= 1e-10);
    CHECK(est.limiting_side == '-');
}

TEST_CASE("exponential moments match frozen 50-digit references") {
    // moments of g' = sech^2 against e^{s|x|} on the L=20, n=801 window
    const Grid grid = make_grid(20.0, 801);
    const FunctionSpec g = kato_g();

    const auto m0 = exp_moment(g, 0.0, grid);
    CHECK_FALSE(m0.divergent);
    CHECK(std::abs(m0.value - 2.0) <= 1e-14);

    const auto mh = exp_moment(g, 0.5, grid);
    CHECK_FALSE(mh.divergent);
    CHECK(std::abs(mh.value - 2.9749909887982230235) <= 1e-11);

    const auto m1 = exp_moment(g, 1.0, grid);
    CHECK_FALSE(m1.divergent);
    CHECK(std::abs(m1.value - 5.141592637100564259) <= 1e-10);
    // the window-truncated s=1 moment sits 1.65e-8 below its limit pi + 2
    CHECK(std::abs(m1.value - (PI + 2.0)) <= 2e-8);
    CHECK(std::abs(m1.value - (PI + 2.0)) >= 1e-8);
}

TEST_CASE("exponential moments agree with an adaptive Simpson oracle") {
    const Grid grid = make_grid(20.0, 801);
    const FunctionSpec g = kato_g();
    for (double s : {0.0, 0.3, 0.5, 1.0, 1.5}) {
        const auto m = exp_moment(g, s, grid);
        // integrate the halves separately: the oracle must respect the kink
        const double right = oracle::integrate(
            [&](double x) { return g.derivative(x) * std::exp(s * x); }, 0.0, 20.0, 5e-14);
        const double left = oracle::integrate(
            [&](double x) { return g.derivative(x) * std::exp(-s * x); }, -20.0, 0.0,
            5e-14);
        CAPTURE(s);
        CHECK_FALSE(m.divergent);
        // Kink corrections cancel the non-smoothness at 0; the remaining
        // trapezoid error is the window-edge term (h^2/12) d/dx[g'(x)e^{sx}]
        // at x = +-20, which only rises above 1e-9 once s > 1 (about 3.8e-8
        // at s = 1.5).
        CHECK(std::abs(m.value - (left + right)) <= (s <= 1.0 ? 1e-9 : 1e-7));
    }
}

TEST_CASE("divergence flag trips exactly when the integrand grows outward") {
    const Grid grid = make_grid(20.0, 801);
    const FunctionSpec g = kato_g();
    // sech^2 decays like e^{-2|x|}: moments converge for s < 2, diverge after
    CHECK_FALSE(exp_moment(g, 1.0, grid).divergent);
    CHECK_FALSE(exp_moment(g, 1.9, grid).divergent);
    CHECK(exp_moment(g, 2.0, grid).divergent);
    CHECK(exp_moment(g, 2.5, grid).divergent);
    CHECK(exp_moment(g, 4.0, grid).divergent);
}

TEST_CASE("herglotz grid check: positive inside the strip, guarded at the pole") {
    const Grid grid = make_grid(20.0, 801);
    const FunctionSpec g = kato_g();

    CHECK(katolab::herglotz_grid_check(g, 1.4, grid));
    CHECK(katolab::herglotz_grid_check(g, PI / 2.0 - 0.01, grid));

    // requesting a strip at or beyond the pole must be refused, not "passed"
    CHECK_THROWS_AS(katolab::herglotz_grid_check(g, PI / 2.0, grid),
                    katolab::pole_proximity_error);
    CHECK_THROWS_AS(katolab::herglotz_grid_check(g, PI / 2.0 + 0.1, grid),
                    katolab::pole_proximity_error);

    // two-atom mixture: the steeper atom halves the safe strip
    const FunctionSpec mix = FunctionSpec::tanh_mixture({{1.0, 0.0, 1.0}, {PI, 1.0, 0.2}});
    CHECK(katolab::herglotz_grid_check(mix, 0.45, grid));
    CHECK_THROWS_AS(katolab::herglotz_grid_check(mix, 0.5, grid),
                    katolab::pole_proximity_error);

    // sampled profiles have no continuation
    std::vector<double> v(grid.nodes.size()), sl(grid.nodes.size());
    for (size_t i = 0; i < v.size(); ++i) {
        v[i] = std::tanh(grid.nodes[i]);
        const double c = std::cosh(grid.nodes[i]);
        sl[i] = 1.0 / (c * c);
    }
    const FunctionSpec tab = FunctionSpec::sampled(grid, v, sl);
    CHECK_THROWS_AS(katolab::herglotz_grid_check(tab, 0.5, grid), std::invalid_argument);
}

TEST_CASE("strip continuation identity for the canonical pair") {
    const Grid grid = make_grid(20.0, 801);
    // frozen reference for the left side at y = 0.3, x = 0:
    // (2 pi)^{-1/2} (Im tanh(iy)/y) F[f'](-2iy) = 0.34876861392916103166
    // (the identity then equals |phi(x+iy)|^2); residual at machine scale
    CHECK(katolab::strip_continuation_identity(kato_g(), kato_f(), grid, 0.3) <= 1e-12);
    CHECK(katolab::strip_continuation_identity(kato_g(), kato_f(), grid, -0.45) <= 1e-12);
    // y = 0 degenerates to the diagonal identity at zero lag
    CHECK(katolab::strip_continuation_identity(kato_g(), kato_f(), grid, 0.0) <= 1e-13);

    // general single-atom borderline pair, off-center on both sides
    const FunctionSpec g2 = FunctionSpec::tanh_mixture({{2.0, -1.0, 0.75}});
    const FunctionSpec f2 = FunctionSpec::tanh_mixture({{PI / 4.0, 0.3, 0.8}});
    CHECK(katolab::strip_continuation_identity(g2, f2, grid, 0.5) <= 1e-12);

    // guards: y too close to the g pole; non-borderline pairs refused
    CHECK_THROWS_AS(katolab::strip_continuation_identity(kato_g(), kato_f(), grid,
                                                         PI / 2.0 - 1e-7),
                    katolab::pole_proximity_error);
    const FunctionSpec f_bad = FunctionSpec::tanh_mixture({{1.0, 0.0, 1.0}});
    CHECK_THROWS_AS(katolab::strip_continuation_identity(kato_g(), f_bad, grid, 0.3),
                    std::invalid_argument);
}

TEST_CASE("plancherel consistency between the two strip quadratures") {
    const Grid grid = make_grid(20.0, 801);
    // (0.3, 0.4) is truncation-limited at about 4e-11 regardless of node
    // count; the other strips decay fast enough to stay near rounding level
    CHECK(katolab::plancherel_strip_check(0.3, 0.4, grid) <= 1e-9);
    CHECK(katolab::plancherel_strip_check(0.7, 0.2, grid) <= 1e-12);
    CHECK(katolab::plancherel_strip_check(0.0, 0.0, grid) <= 1e-12);
    CHECK(katolab::plancherel_strip_check(-0.5, -0.3, grid) <= 1e-11);

    CHECK_THROWS_AS(katolab::plancherel_strip_check(PI / 2.0, 0.0, grid),
                    katolab::pole_proximity_error);
    CHECK_THROWS_AS(katolab::plancherel_strip_check(0.0, 1.0, grid),
                    katolab::pole_proximity_error);
}

TEST_CASE("strip product report: pi/2 on the borderline, pi/4 for the rank-3 pair") {
    const Grid grid = make_grid(20.0, 801);

    const auto kato = katolab::strip_product_report(kato_g(), kato_f(), grid);
    CHECK(std::abs(kato.r - PI / 2.0) <= 1e-9);
    CHECK(std::abs(kato.r_prime - 1.0) <= 1e-9);
    CHECK(std::abs(kato.product - PI / 2.0) <= 1e-8);
    CHECK(std::abs(kato.gap_vs_half_pi) <= 1e-8);
    CHECK(kato.fit_quality_f >= 0.999);
    CHECK(kato.fit_quality_g >= 0.999);

    const FunctionSpec f3 =
        FunctionSpec::tanh_mixture({{PI / 2.0, 0.0, 1.0}, {PI, 0.0, 0.1}});
    const auto r3 = katolab::strip_product_report(kato_g(), f3, grid);
    // f3's pole bound pi/(2 pi) = 1/2 caps the f strip estimate
    CHECK(std::abs(r3.r - PI / 2.0) <= 1e-9);
    CHECK(std::abs(r3.r_prime - 0.5) <= 1e-6);
    CHECK(std::abs(r3.product - PI / 4.0) <= 1e-6);
}
