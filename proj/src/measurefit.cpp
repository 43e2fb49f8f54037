#include "katolab/measurefit.hpp"

#include <cmath>
#include <stdexcept>

#include "katolab/nnls.hpp"

namespace katolab {

MeasureFitResult fit_measure(const FunctionSpec& g, double r_hat, const Grid& atom_grid,
                             const Grid& sample_grid) {
    if (!(r_hat > 0.0) || !std::isfinite(r_hat))
        throw std::invalid_argument("atom scale r_hat must be positive and finite");

    const int ns = sample_grid.size();
    const int na = atom_grid.size();

    // rows: sqrt(w_i) * r_hat * sech^2(r_hat (x_i - t_k)); rhs: sqrt(w_i) g'(x_i)
    Eigen::MatrixXd D(ns, na);
    Eigen::VectorXd rhs(ns);
    for (int i = 0; i < ns; ++i) {
        const double x = sample_grid.nodes[static_cast<size_t>(i)];
        const double sw = std::sqrt(sample_grid.weights[static_cast<size_t>(i)]);
        rhs(i) = sw * g.derivative(x);
        for (int k = 0; k < na; ++k) {
            const double u = r_hat * (x - atom_grid.nodes[static_cast<size_t>(k)]);
            const double s = 1.0 / std::cosh(u);
            D(i, k) = sw * r_hat * s * s;
        }
    }

    const NnlsResult sol = nnls(D, rhs, 1e-10);

    MeasureFitResult out;
    out.measure.scale = r_hat;
    out.conditioning_warning = sol.rank_warning || !sol.converged;
    out.nnls_iterations = sol.iterations;
    for (int k = 0; k < na; ++k)
        if (sol.x(k) > 0.0)
            out.measure.atoms.push_back({atom_grid.nodes[static_cast<size_t>(k)], sol.x(k)});

    // weighted RMS of the slope misfit; rows already carry sqrt(w)
    double wsum = 0.0;
    for (double w : sample_grid.weights) wsum += w;
    out.residual = sol.residual_norm / std::sqrt(wsum);

    // offset: weighted mean of g minus the fitted mixture (the slope fit is
    // blind to constants)
    double acc = 0.0;
    for (int i = 0; i < ns; ++i) {
        const double x = sample_grid.nodes[static_cast<size_t>(i)];
        double mix = 0.0;
        for (const MeasureAtom& a : out.measure.atoms)
            mix += a.mass * std::tanh(r_hat * (x - a.center));
        acc += sample_grid.weights[static_cast<size_t>(i)] * (g.value(x) - mix);
    }
    out.measure.offset = acc / wsum;
    return out;
}

MeasureFitResult fit_measure(const FunctionSpec& g, double r_hat, const Grid& sample_grid,
                             int atom_stride) {
    return fit_measure(g, r_hat, subsample_grid(sample_grid, atom_stride), sample_grid);
}

FunctionSpec reconstruct(const DiscreteMeasure& measure) {
    std::vector<TanhAtom> atoms;
    atoms.reserve(measure.atoms.size());
    for (const MeasureAtom& a : measure.atoms)
        atoms.push_back({measure.scale, a.center, a.mass});
    return FunctionSpec::tanh_mixture(std::move(atoms), measure.offset);
}

} // namespace katolab
