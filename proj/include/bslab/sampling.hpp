#ifndef BSLAB_SAMPLING_HPP
#define BSLAB_SAMPLING_HPP

#include <cstdint>
#include <optional>

#include "bslab/coupling.hpp"
#include "bslab/grid.hpp"

namespace bslab {

/// One time-gridded path.
struct PathSample {
    TimeGrid grid;
    FlatGeometry geometry;
    std::vector<double> positions;  // grid.size() * dim, time-major

    Point at(std::size_t t_index) const;
};

/// Weighted collection of paths on a shared grid; the empirical stand-in for
/// a path measure. Positions are stored flat: path-major, then time, then
/// axis.
struct PathEnsemble {
    TimeGrid grid;
    FlatGeometry geometry;
    std::size_t n_paths = 0;
    std::vector<double> positions;  // n_paths * grid.size() * dim
    std::vector<double> weights;    // nonnegative, sum 1
    std::uint64_t seed = 0;

    PathEnsemble(TimeGrid g, FlatGeometry geom, std::size_t n);

    int dim() const { return geometry.dim(); }
    double* path_data(std::size_t path) {
        return positions.data() + path * grid.size() * dim();
    }
    const double* path_data(std::size_t path) const {
        return positions.data() + path * grid.size() * dim();
    }
    double coord(std::size_t path, std::size_t t_index, int axis) const {
        return positions[(path * grid.size() + t_index) * dim() + axis];
    }
    Point point(std::size_t path, std::size_t t_index) const;
};

/// Reflected (or wrapped, or free) Brownian path started at x0: exact
/// wrapped/folded Gaussian increments with variance dt per axis.
PathSample sample_reflected_bm(const FlatGeometry& g, const Point& x0,
                               const TimeGrid& grid, std::uint64_t seed);

/// Bridge pinned to x at t0 and y at t1 (both grid times). The winding or
/// reflection image of y is drawn with heat-kernel weights, then a free
/// Gaussian bridge is sampled in the covering space and wrapped/folded.
/// Positions at grid times outside [t0, t1] are held at the nearer endpoint.
PathSample sample_bridge(const FlatGeometry& g, const Point& x, const Point& y,
                         double t0, double t1, const TimeGrid& grid,
                         std::uint64_t seed);

/// Candidate construction: draw (x, y) from pi and z from the normalised
/// volume, then glue bridge(x -> z) on [0, 1/2] with bridge(z -> y) on
/// [1/2, 1]. The grid must contain t = 1/2.
PathEnsemble build_candidate(const FlatGeometry& g, const Coupling& pi,
                             std::size_t n_paths, const TimeGrid& grid,
                             std::uint64_t seed);

/// Same construction on the quotient geometry of q (box quotients).
PathEnsemble build_candidate(const QuotientMap& q, const Coupling& pi,
                             std::size_t n_paths, const TimeGrid& grid,
                             std::uint64_t seed);

/// Euclidean variant with the midpoint drawn from N(0, 1/4 I).
PathEnsemble build_gaussian_candidate(int dim, const Coupling& pi,
                                      std::size_t n_paths, const TimeGrid& grid,
                                      std::uint64_t seed);

/// Pathwise fold of a covering-torus ensemble onto the box quotient; weights
/// are unchanged.
PathEnsemble fold_ensemble(const PathEnsemble& e, const QuotientMap& q);

/// Weighted cell frequencies of the ensemble at a grid time. Exact grid
/// times only; no interpolation.
GridMeasure marginal_histogram(const PathEnsemble& e, double t,
                               const std::vector<int>& cells_per_axis);

/// Ensemble of independent reflected BM paths. Starts at x0 when given,
/// otherwise at uniform (compact) or N(0, 1/4 I) (Euclidean) initial points.
PathEnsemble bm_ensemble(const FlatGeometry& g, const std::optional<Point>& x0,
                         const TimeGrid& grid, std::size_t n_paths,
                         std::uint64_t seed);

/// Brownian ensemble with a constant drift (periodic or Euclidean
/// geometries); used as a known-velocity control.
PathEnsemble constant_drift_ensemble(const FlatGeometry& g, const Point& drift,
                                     const std::optional<Point>& x0,
                                     const TimeGrid& grid, std::size_t n_paths,
                                     std::uint64_t seed);

/// Weighted endpoint-pair cell frequencies over pair cells of `grid` (size
/// n_cells^2, row-major).
std::vector<double> endpoint_pair_histogram(const PathEnsemble& e,
                                            const SpatialGrid& grid);

}  // namespace bslab

#endif  // BSLAB_SAMPLING_HPP
