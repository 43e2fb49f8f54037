// Acceptance gate for the laboratory: nine end-to-end criteria, each printed
// as a single PASS/FAIL line with its key measurements.  Exit code 0 only if
// every criterion passes.
#include <katolab/constants.hpp>
#include <katolab/funcspec.hpp>
#include <katolab/grid.hpp>
#include <katolab/katoclass.hpp>
#include <katolab/kernel.hpp>
#include <katolab/measurefit.hpp>
#include <katolab/spectral.hpp>

#include "oracles.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <complex>
#include <cstdio>
#include <cstring>
#include <functional>
#include <optional>
#include <random>
#include <string>
#include <utility>
#include <vector>

using namespace katolab;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
    return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::string num(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.3g", v);
    return std::string(buf);
}

struct Criterion {
    bool pass = false;
    std::string text;
};

double second_largest_abs(const Eigen::VectorXd& ev) {
    if (ev.size() < 2) return 0.0;
    std::vector<double> mags(static_cast<std::size_t>(ev.size()));
    for (Eigen::Index i = 0; i < ev.size(); ++i) mags[static_cast<std::size_t>(i)] = std::abs(ev(i));
    std::sort(mags.begin(), mags.end(), std::greater<double>());
    return mags[1];
}

double overlap_with(const Eigen::VectorXcd& u, const Eigen::VectorXd& v) {
    const double nu = u.norm();
    const double nv = v.norm();
    if (nu == 0.0 || nv == 0.0) return 0.0;
    return std::abs((u.adjoint() * v.cast<std::complex<double>>())(0)) / (nu * nv);
}

bool bitwise_equal(const Eigen::MatrixXcd& a, const Eigen::MatrixXcd& b) {
    if (a.rows() != b.rows() || a.cols() != b.cols()) return false;
    return std::memcmp(a.data(), b.data(),
                       sizeof(std::complex<double>) * static_cast<std::size_t>(a.size())) == 0;
}

FunctionSpec random_mixture(std::mt19937& rng, int atoms_lo, int atoms_hi, double scale_lo,
                            double scale_hi) {
    std::uniform_int_distribution<int> atom_count(atoms_lo, atoms_hi);
    std::uniform_real_distribution<double> scale(scale_lo, scale_hi);
    std::uniform_real_distribution<double> center(-2.0, 2.0);
    std::uniform_real_distribution<double> weight(0.2, 1.5);
    std::vector<TanhAtom> atoms;
    const int m = atom_count(rng);
    atoms.reserve(static_cast<std::size_t>(m));
    for (int i = 0; i < m; ++i) atoms.push_back({scale(rng), center(rng), weight(rng)});
    return FunctionSpec::tanh_mixture(std::move(atoms));
}

FunctionSpec with_offset(const FunctionSpec& s, double c) {
    return FunctionSpec::tanh_mixture(s.atoms(), s.offset() + c);
}

FunctionSpec shifted_centers(const FunctionSpec& s, double dt) {
    std::vector<TanhAtom> atoms = s.atoms();
    for (TanhAtom& a : atoms) a.center += dt;
    return FunctionSpec::tanh_mixture(std::move(atoms), s.offset());
}

FunctionSpec dilated(const FunctionSpec& s, double lam) {
    std::vector<TanhAtom> atoms = s.atoms();
    for (TanhAtom& a : atoms) {
        a.scale *= lam;
        a.center /= lam;
    }
    return FunctionSpec::tanh_mixture(std::move(atoms), s.offset());
}

Criterion guarded(const std::function<Criterion()>& fn) {
    try {
        return fn();
    } catch (const std::exception& e) {
        return {false, std::string("unexpected exception: ") + e.what()};
    }
}

} // namespace

int main() {
    const Grid ref = make_grid(20.0, 801);
    const FunctionSpec g1 = FunctionSpec::tanh_mixture({{1.0, 0.0, 1.0}});
    const FunctionSpec f1 = FunctionSpec::tanh_mixture({{PI / 2.0, 0.0, 1.0}});
    const FunctionSpec f3 =
        FunctionSpec::tanh_mixture({{PI / 2.0, 0.0, 1.0}, {PI, 0.0, 0.1}});

    std::optional<SpectralResult> pos1, pos3, mom1, mom3;
    std::vector<Criterion> results;

    // 1: rank-one reproduction --------------------------------------------
    results.push_back(guarded([&]() -> Criterion {
        const auto t0 = Clock::now();
        pos1 = eigendecompose(assemble_position_kernel(g1, f1, ref));
        const int rank = numerical_rank(*pos1, 1e-8);
        const double top = pos1->eigenvalues(0);
        const double top_err = std::abs(top - 2.0 / PI);
        const double second = second_largest_abs(pos1->eigenvalues);

        Eigen::VectorXd target(ref.size());
        for (int i = 0; i < ref.size(); ++i)
            target(i) = std::sqrt(ref.weights[static_cast<std::size_t>(i)]) /
                        (std::cosh(ref.nodes[static_cast<std::size_t>(i)]) * std::sqrt(PI));
        const double overlap = overlap_with(pos1->eigenvectors.col(0), target);
        const double elapsed = seconds_since(t0);

        const bool pass = rank == 1 && top_err <= 1e-6 && second <= 1e-8 * (2.0 / PI) &&
                          overlap >= 0.99999 && elapsed <= 10.0;
        return {pass, "rank-one reproduction: rank " + std::to_string(rank) +
                          ", |top - 2/pi| " + num(top_err) + ", residual spectrum " +
                          num(second) + ", sech overlap defect " + num(1.0 - overlap) +
                          ", " + num(elapsed) + " s"};
    }));

    // 2: rank-three reproduction ------------------------------------------
    results.push_back(guarded([&]() -> Criterion {
        const auto t0 = Clock::now();
        pos3 = eigendecompose(assemble_position_kernel(g1, f3, ref));
        const int rank = numerical_rank(*pos3, 1e-8);
        const double min_eig = pos3->eigenvalues(pos3->eigenvalues.size() - 1);
        const double expected_min = 0.1 / (2.0 * PI) * (2.0 - PI);
        const double min_err = std::abs(min_eig - expected_min);

        const int n = ref.size();
        std::vector<double> cross_v(static_cast<std::size_t>(n));
        std::vector<double> s2_v(static_cast<std::size_t>(n));
        std::vector<double> s1_v(static_cast<std::size_t>(n));
        for (int i = 0; i < n; ++i) {
            const double x = ref.nodes[static_cast<std::size_t>(i)];
            const double sech = 1.0 / std::cosh(x);
            cross_v[static_cast<std::size_t>(i)] = sech * std::sinh(0.5 * x) * sech;
            s2_v[static_cast<std::size_t>(i)] = sech * sech;
            s1_v[static_cast<std::size_t>(i)] = std::exp(-x) * sech * sech;
        }
        const double cross = std::abs(integrate(ref, std::span<const double>(cross_v)));
        const double s2 = integrate(ref, std::span<const double>(s2_v));
        const double s1 = integrate(ref, std::span<const double>(s1_v));
        const double lam_minus_err = std::abs((s2 - s1) - (2.0 - PI));
        const double lam_plus_err = std::abs((s2 + s1) - (2.0 + PI));
        const double elapsed = seconds_since(t0);

        const bool pass = rank == 3 && min_err <= 1e-5 && cross <= 1e-10 &&
                          lam_minus_err <= 1e-8 && lam_plus_err <= 1e-8 && elapsed <= 10.0;
        return {pass, "rank-three reproduction: rank " + std::to_string(rank) +
                          ", |min + 0.018169| " + num(min_err) + ", <sech,phi-> " +
                          num(cross) + ", lambda-/+ quadrature errors " +
                          num(lam_minus_err) + "/" + num(lam_plus_err) + ", " +
                          num(elapsed) + " s"};
    }));

    // 3: diagonal identities on both configurations ------------------------
    results.push_back(guarded([&]() -> Criterion {
        mom1 = eigendecompose(assemble_momentum_kernel(g1, f1, ref));
        mom3 = eigendecompose(assemble_momentum_kernel(g1, f3, ref));
        const double d1p = diagonal_identity_residual(pos1.value(), g1, f1, 1e-8);
        const double d1m = diagonal_identity_residual(mom1.value(), f1, g1, 1e-8);
        const double d3p = diagonal_identity_residual(pos3.value(), g1, f3, 1e-8);
        const double d3m = diagonal_identity_residual(mom3.value(), f3, g1, 1e-8);
        const double worst = std::max(std::max(d1p, d1m), std::max(d3p, d3m));
        return {worst <= 1e-6,
                "diagonal identities: residuals " + num(d1p) + "/" + num(d1m) +
                    " (rank one), " + num(d3p) + "/" + num(d3m) + " (rank three), bound 1e-6"};
    }));

    // 4: Fourier duality of the two representations ------------------------
    results.push_back(guarded([&]() -> Criterion {
        const double gap1 = leading_eigenvalue_gap(pos1.value(), mom1.value(), 10);
        const double gap3 = leading_eigenvalue_gap(pos3.value(), mom3.value(), 10);
        return {gap1 <= 1e-6 && gap3 <= 1e-6,
                "Fourier duality: top-10 spectrum gaps " + num(gap1) + " (rank one), " +
                    num(gap3) + " (rank three), bound 1e-6"};
    }));

    // 5: strip products ----------------------------------------------------
    results.push_back(guarded([&]() -> Criterion {
        const StripProductReport rep1 = strip_product_report(g1, f1, ref);
        const StripProductReport rep3 = strip_product_report(g1, f3, ref);
        const double err1 = std::abs(rep1.product - PI / 2.0) / (PI / 2.0);
        const double err3 = std::abs(rep3.product - PI / 4.0) / (PI / 4.0);
        const double worst_fit = std::min(std::min(rep1.fit_quality_f, rep1.fit_quality_g),
                                          std::min(rep3.fit_quality_f, rep3.fit_quality_g));
        const bool pass = err1 <= 0.05 && err3 <= 0.05 && worst_fit >= 0.999;
        return {pass, "strip products: " + num(rep1.product) + " vs pi/2 (rel err " +
                          num(err1) + "), " + num(rep3.product) + " vs pi/4 (rel err " +
                          num(err3) + "), worst tail-fit R^2 " + num(worst_fit)};
    }));

    // 6: exponential moments against the independent oracle -----------------
    results.push_back(guarded([&]() -> Criterion {
        double worst = 0.0;
        bool spurious_divergence = false;
        for (double s : {0.0, 0.5, 1.0}) {
            const ExpMoment m = exp_moment(g1, s, ref);
            auto integrand = [s](double x) {
                return static_cast<double>(oracle::sech2_cf(x)) * std::exp(s * std::abs(x));
            };
            const double oracle_value =
                oracle::integrate(integrand, -ref.half_width, 0.0, 1e-12) +
                oracle::integrate(integrand, 0.0, ref.half_width, 1e-12);
            worst = std::max(worst, std::abs(m.value - oracle_value));
            spurious_divergence = spurious_divergence || m.divergent;
        }
        const bool flagged = exp_moment(g1, 2.5, ref).divergent;
        const bool pass = worst <= 1e-8 && !spurious_divergence && flagged;
        return {pass, "exponential moments: worst |value - oracle| " + num(worst) +
                          " (bound 1e-8), divergence flag at s=2.5: " +
                          (flagged ? "raised" : "missing")};
    }));

    // 7: Herglotz property inside pole-safe strips --------------------------
    results.push_back(guarded([&]() -> Criterion {
        bool all_ok = herglotz_grid_check(g1, PI / 2.0 - 0.01, ref, 8);
        int mixtures_passed = 0;
        for (unsigned seed = 0; seed < 10; ++seed) {
            std::mt19937 rng(900u + seed);
            const FunctionSpec mix = random_mixture(rng, 3, 3, 0.5, 2.5);
            const double r = 0.99 * mix.strip_half_width();
            if (herglotz_grid_check(mix, r, ref, 8)) ++mixtures_passed;
        }
        all_ok = all_ok && mixtures_passed == 10;
        return {all_ok, "Herglotz property: tanh at r = pi/2 - 0.01 and " +
                            std::to_string(mixtures_passed) +
                            "/10 random 3-atom mixtures at 0.99 of their strips"};
    }));

    // 8: measure fitting ----------------------------------------------------
    results.push_back(guarded([&]() -> Criterion {
        const MeasureFitResult single = fit_measure(g1, 1.0, ref, 4);
        double main_mass = 0.0, main_center = 1e300, stray = 0.0;
        for (const MeasureAtom& a : single.measure.atoms) {
            if (a.mass > main_mass) {
                stray += main_mass;
                main_mass = a.mass;
                main_center = a.center;
            } else {
                stray += a.mass;
            }
        }
        const bool single_ok = std::abs(main_mass - 1.0) <= 1e-6 && main_center == 0.0 &&
                               stray <= 1e-6 && single.residual <= 1e-8;

        const FunctionSpec g2 = FunctionSpec::tanh_mixture(
            {{1.0, 1.0, 0.6}, {1.0, -1.0, 0.4}});
        const MeasureFitResult pair = fit_measure(g2, 1.0, ref, 4);
        double m_plus = 0.0, m_minus = 0.0, stray2 = 0.0;
        for (const MeasureAtom& a : pair.measure.atoms) {
            if (std::abs(a.center - 1.0) < 1e-9)
                m_plus = a.mass;
            else if (std::abs(a.center + 1.0) < 1e-9)
                m_minus = a.mass;
            else
                stray2 += a.mass;
        }
        const bool pair_ok = std::abs(m_plus - 0.6) <= 1e-4 &&
                             std::abs(m_minus - 0.4) <= 1e-4 && stray2 <= 1e-4;
        return {single_ok && pair_ok,
                "measure fitting: single atom mass err " + num(std::abs(main_mass - 1.0)) +
                    ", slope residual " + num(single.residual) + "; two-atom mass errs " +
                    num(std::abs(m_plus - 0.6)) + "/" + num(std::abs(m_minus - 0.4)) +
                    ", stray " + num(stray2)};
    }));

    // 9: randomized property suite ------------------------------------------
    results.push_back(guarded([&]() -> Criterion {
        const auto t0 = Clock::now();
        const Grid grid = make_grid(20.0, 401);
        const Grid wide = make_grid(40.0, 401);

        bool shifts_bitwise = true;
        bool dilation_bitwise = true;
        double worst_herm = 0.0;
        double worst_trace = 0.0;
        double worst_translation = 0.0;
        double min_mass = 1e300;

        for (unsigned seed = 101; seed <= 120; ++seed) {
            std::mt19937 rng(seed);
            const FunctionSpec g = random_mixture(rng, 1, 3, 0.6, 2.2);
            const FunctionSpec f = random_mixture(rng, 1, 3, 0.6, 2.2);

            const KernelMatrix pos = assemble_position_kernel(g, f, grid);
            const KernelMatrix mom = assemble_momentum_kernel(g, f, grid);
            worst_herm = std::max(worst_herm, hermiticity_defect(pos.matrix));
            worst_herm = std::max(worst_herm, hermiticity_defect(mom.matrix));

            const FunctionSpec g_off = with_offset(g, 0.37);
            const FunctionSpec f_off = with_offset(f, -1.25);
            shifts_bitwise =
                shifts_bitwise &&
                bitwise_equal(pos.matrix,
                              assemble_position_kernel(g_off, f_off, grid).matrix) &&
                bitwise_equal(mom.matrix,
                              assemble_momentum_kernel(g_off, f_off, grid).matrix);

            const SpectralResult spec = eigendecompose(pos);
            const double trace_resid =
                std::abs(spec.eigenvalues.sum() - pos.matrix.trace().real()) /
                (grid.size() * pos.matrix.cwiseAbs().maxCoeff());
            worst_trace = std::max(worst_trace, trace_resid);

            dilation_bitwise =
                dilation_bitwise &&
                bitwise_equal(
                    assemble_position_kernel(dilated(g, 2.0), dilated(f, 0.5), grid).matrix,
                    assemble_position_kernel(g, f, wide).matrix);

            const SpectralResult g_shift = eigendecompose(
                assemble_position_kernel(shifted_centers(g, 0.75), f, grid));
            const SpectralResult f_shift = eigendecompose(
                assemble_position_kernel(g, shifted_centers(f, 0.75), grid));
            worst_translation =
                std::max(worst_translation, leading_eigenvalue_gap(spec, g_shift, 10));
            worst_translation =
                std::max(worst_translation, leading_eigenvalue_gap(spec, f_shift, 10));

            const MeasureFitResult fit = fit_measure(g, 1.0, grid, 4);
            for (const MeasureAtom& a : fit.measure.atoms)
                min_mass = std::min(min_mass, a.mass);
            if (fit.measure.atoms.empty()) min_mass = std::min(min_mass, 0.0);
        }
        const double elapsed = seconds_since(t0);

        const bool pass = shifts_bitwise && dilation_bitwise && worst_herm <= 1e-12 &&
                          worst_trace <= 1e-10 && worst_translation <= 1e-6 &&
                          min_mass >= 0.0 && elapsed <= 300.0;
        return {pass, std::string("property suite over 20 pairs: constant shift ") +
                          (shifts_bitwise ? "bitwise" : "BROKEN") + ", dilation " +
                          (dilation_bitwise ? "bitwise" : "BROKEN") +
                          ", hermiticity defect " + num(worst_herm) +
                          ", trace residual " + num(worst_trace) + ", translation gap " +
                          num(worst_translation) + ", min fitted mass " + num(min_mass) +
                          ", " + num(elapsed) + " s"};
    }));

    bool all = true;
    for (std::size_t i = 0; i < results.size(); ++i) {
        all = all && results[i].pass;
        std::printf("%s criterion %zu: %s\n", results[i].pass ? "PASS" : "FAIL", i + 1,
                    results[i].text.c_str());
    }
    return all ? 0 : 1;
}
