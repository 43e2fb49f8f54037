#pragma once

#include <vector>

#include "katolab/funcspec.hpp"
#include "katolab/grid.hpp"

namespace katolab {

struct MeasureAtom {
    double center = 0.0;
    double mass = 0.0;  ///< > 0 for retained atoms
};

/// Nonnegative discrete measure recovered from a monotone profile:
///   g(x) ~ offset + sum_k mass_k * tanh(scale * (x - center_k)).
struct DiscreteMeasure {
    double scale = 1.0;  ///< shared atom scale r-hat used in the fit
    std::vector<MeasureAtom> atoms;
    double offset = 0.0;
};

struct MeasureFitResult {
    DiscreteMeasure measure;
    double residual = 0.0;  ///< weighted RMS misfit of g' on the sample grid
    bool conditioning_warning = false;
    int nnls_iterations = 0;
};

/// Fit g' by nonnegative masses on tanh-atom slopes of a common scale r_hat
/// centered at the atom-grid nodes, weighting rows by sqrt of the sample
/// grid's quadrature weights.  The offset is recovered afterwards as the
/// weighted mean of g minus the reconstructed mixture.
MeasureFitResult fit_measure(const FunctionSpec& g, double r_hat, const Grid& atom_grid,
                             const Grid& sample_grid);

/// Convenience overload: atoms live on the sample grid thinned by `stride`
/// (default 4).
MeasureFitResult fit_measure(const FunctionSpec& g, double r_hat, const Grid& sample_grid,
                             int atom_stride = 4);

/// Build the tanh mixture described by a fitted measure.
FunctionSpec reconstruct(const DiscreteMeasure& measure);

} // namespace katolab
