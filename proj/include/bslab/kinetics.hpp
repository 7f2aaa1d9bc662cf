#ifndef BSLAB_KINETICS_HPP
#define BSLAB_KINETICS_HPP

#include <vector>

#include "bslab/grid.hpp"
#include "bslab/sampling.hpp"

namespace bslab {

/// Boundary-occupation summary: per-time rates of the epsilon-tube scaled by
/// 1/(2 epsilon), plus the implied surface weights per boundary face.
struct LocalTimeEstimate {
    double epsilon = 0.0;
    std::vector<double> times;
    std::vector<double> occupation_rate;  // one per time

    struct Face {
        int axis;
        int side;  // 0 = lower face, 1 = upper face
        double weight;
    };
    std::vector<Face> surface_weights;  // normalised over faces

    /// Time-integrated rate (trapezoid): the local-time analogue of E[L_1].
    double integrated_rate() const;
};

/// Conditional mean forward increment per (time, cell): average of
/// log_map(X_t, X_{t+h}) / h over the paths in the cell, h one grid step.
/// Paths within exclusion_radius of the boundary are skipped (stopping-time
/// guard), as are cut-locus failures; cells with fewer than 10 samples are
/// flagged empty. exclusion_radius < 0 selects the default 2 sqrt(h).
VelocityField estimate_forward_velocity(const PathEnsemble& e,
                                        const std::vector<int>& bins,
                                        double exclusion_radius = -1.0);

/// Pathwise time reversal: positions reversed, grid times reflected
/// about 1/2. Involutive.
PathEnsemble reverse_ensemble(const PathEnsemble& e);

/// Backward velocity via the reversal identity: minus the forward velocity
/// of the reversed ensemble read at mirrored time indices.
VelocityField estimate_backward_velocity(const PathEnsemble& e,
                                         const std::vector<int>& bins,
                                         double exclusion_radius = -1.0);

/// Cellwise half-sum of forward and backward fields; a cell empty in either
/// input stays empty.
VelocityField current_velocity(const VelocityField& forward,
                               const VelocityField& backward);

/// Epsilon-tube boundary occupation, requires epsilon < (min side)/4.
LocalTimeEstimate estimate_local_time(const PathEnsemble& e, double epsilon);

/// Weak-form continuity residual per time against a fixed family of smooth
/// test functions (Fourier modes on periodic geometries, Neumann cosine
/// modes on boxes), normalised by the gradient norms of the test functions.
/// One histogram per field time is required; entries are reported at
/// interior times (first and last stay zero).
std::vector<double> continuity_residual(const std::vector<GridMeasure>& histograms,
                                        const VelocityField& v);

/// Same residual for an analytic velocity field sampled on the histogram
/// grid (controls for the estimator-based checks).
std::vector<double> continuity_residual_analytic(
    const std::vector<GridMeasure>& histograms, const TimeGrid& times,
    const std::function<Point(const Point&)>& field);

}  // namespace bslab

#endif  // BSLAB_KINETICS_HPP
