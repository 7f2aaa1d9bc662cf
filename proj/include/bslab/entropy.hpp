#ifndef BSLAB_ENTROPY_HPP
#define BSLAB_ENTROPY_HPP

#include <optional>

#include "bslab/coupling.hpp"
#include "bslab/grid.hpp"
#include "bslab/sampling.hpp"

namespace bslab {

class DiscretePathMeasure;

/// Extended-real entropy value; +infinity is an explicit flag, never a
/// sentinel float.
struct Entropy {
    double value = 0.0;
    bool infinite = false;

    static Entropy finite(double v) { return {v, false}; }
    static Entropy infinity() { return {0.0, true}; }
};

/// Entropy with an optional two-term decomposition. When both terms are
/// present, total = endpoint_term + conditional_term (to 1e-10).
struct EntropyReport {
    Entropy total;
    std::optional<double> endpoint_term;
    std::optional<double> conditional_term;
};

/// Relative entropy sum mu_i log(mu_i / nu_i), with 0 log 0 = 0; infinite
/// when mu charges a nu-null cell. Grids must match.
Entropy kl_divergence(const GridMeasure& mu, const GridMeasure& nu);

/// H(vol | bridge midpoint law) on a compact flat geometry: minus the
/// normalised-volume integral of log of the bridge density
/// p_{1/2}(x,z) p_{1/2}(z,y) / p_1(x,y), by midpoint quadrature with
/// `quadrature_cells` points per axis.
double bridge_midpoint_entropy(const FlatGeometry& g, const Point& x, const Point& y,
                               int quadrature_cells = 256,
                               const HeatKernelParams& params = {});

/// Closed-form KL between N(0, 1/4 I) and the standard Brownian bridge
/// midpoint law N((x+y)/2, 1/4 I). The shipped form is |x+y|^2 / 2, the one
/// selected by the quadrature oracle; see gaussian_bridge_entropy_candidates
/// for both printed candidates.
double gaussian_bridge_entropy(const Point& x, const Point& y);

/// Both closed-form candidates for the Gaussian bridge entropy. They
/// coincide exactly when <x, y> = 0.
struct GaussianBridgeCandidates {
    double half_sum_norm_sq;   // |x+y|^2 / 2 (shipped)
    double half_diff_norm_sq;  // |x-y|^2 / 2
};
GaussianBridgeCandidates gaussian_bridge_entropy_candidates(const Point& x,
                                                            const Point& y);

/// Glued-bridge candidate entropy decomposition for a grid-supported
/// coupling: endpoint term H(pi | R01) with R01 cells from the time-1 heat
/// kernel, plus the pi-average of bridge midpoint entropies over cell
/// centres.
EntropyReport candidate_entropy_bound(const Coupling& pi, const FlatGeometry& g,
                                      int quadrature_cells = 256,
                                      const HeatKernelParams& params = {});

/// Core of candidate_entropy_bound with explicit endpoint reference masses
/// and per-pair conditional values (both indexed like the coupling's pair
/// masses). Infinite when pi charges a reference-null pair.
EntropyReport candidate_entropy_bound_from_parts(
    const Coupling& pi, const std::vector<double>& endpoint_reference,
    const std::vector<double>& conditional_values);

/// Exact relative entropy of a factorised discrete path measure with respect
/// to its reference chain, decomposed as initial-law term plus conditional
/// term (computed per starting cell).
EntropyReport path_measure_entropy(const DiscretePathMeasure& m);

/// One half of the ensemble average of the time-integrated squared field
/// along paths (trapezoid in time; an undefined trailing slice hands its
/// weight to the previous one).
double kinetic_energy_estimate(const PathEnsemble& e, const VelocityField& v);

}  // namespace bslab

#endif  // BSLAB_ENTROPY_HPP
