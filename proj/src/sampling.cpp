#include "bslab/sampling.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "bslab/errors.hpp"

namespace bslab {

namespace {

double fold_line(double x, double length) {
    double u = std::fmod(x, 2.0 * length);
    if (u < 0.0) u += 2.0 * length;
    return u > length ? 2.0 * length - u : u;
}

double wrap_line(double x, double length) {
    double u = std::fmod(x, length);
    if (u < 0.0) u += length;
    if (u >= length) u -= length;
    return u;
}

double store_coordinate(double unfolded, const FlatGeometry& g, int axis) {
    switch (g.kind()) {
        case GeometryKind::Circle:
        case GeometryKind::Torus:
            return wrap_line(unfolded, g.length(axis));
        case GeometryKind::Interval:
        case GeometryKind::Box:
            return fold_line(unfolded, g.length(axis));
        case GeometryKind::EuclideanGaussian:
            return unfolded;
    }
    return unfolded;
}

// Draw the covering-space representative of the bridge target: y + kL on
// periodic axes, +-y + 2kL on reflecting axes, y itself on Euclidean axes.
// Weights are the free Gaussian kernel over the elapsed time.
double draw_target_image(double x, double y, double elapsed, const FlatGeometry& g,
                         int axis, Rng& rng) {
    if (g.kind() == GeometryKind::EuclideanGaussian) return y;
    const double length = g.length(axis);
    const bool is_periodic = g.periodic();
    const double period = is_periodic ? length : 2.0 * length;
    const int K = image_count(elapsed, period, {});

    // Two families for reflecting axes, one for periodic ones.
    const int families = is_periodic ? 1 : 2;
    const int count = (2 * K + 1) * families;
    double weights_sum = 0.0;
    std::vector<double> cumulative(count);
    std::vector<double> images(count);
    int idx = 0;
    for (int k = -K; k <= K; ++k) {
        for (int f = 0; f < families; ++f) {
            const double base = (f == 0) ? y : -y;
            const double image = base + k * period;
            const double d = image - x;
            weights_sum += std::exp(-d * d / (2.0 * elapsed));
            images[idx] = image;
            cumulative[idx] = weights_sum;
            ++idx;
        }
    }
    const double u = rng.uniform() * weights_sum;
    const auto it = std::lower_bound(cumulative.begin(), cumulative.end(), u);
    std::size_t chosen = static_cast<std::size_t>(it - cumulative.begin());
    if (chosen >= images.size()) chosen = images.size() - 1;
    return images[chosen];
}

// Fill positions[i0..i1] (time-major, stride = dim) with an exact bridge from
// x at grid time i0 to y at grid time i1.
void fill_bridge(double* positions, int stride, const FlatGeometry& g, const Point& x,
                 const Point& y, const TimeGrid& grid, std::size_t i0, std::size_t i1,
                 Rng& rng) {
    const int dim = g.dim();
    for (int a = 0; a < dim; ++a) {
        const double elapsed = grid.time(i1) - grid.time(i0);
        const double target = draw_target_image(x[a], y[a], elapsed, g, a, rng);
        double current = x[a];
        double s = grid.time(i0);
        positions[i0 * stride + a] = store_coordinate(x[a], g, a);
        for (std::size_t i = i0 + 1; i < i1; ++i) {
            const double r = grid.time(i);
            const double remaining = grid.time(i1) - s;
            const double step = r - s;
            const double mean = current + step / remaining * (target - current);
            const double var = step * (grid.time(i1) - r) / remaining;
            current = mean + std::sqrt(var) * rng.normal();
            positions[i * stride + a] = store_coordinate(current, g, a);
            s = r;
        }
        // Pin the far endpoint exactly in stored coordinates.
        positions[i1 * stride + a] = store_coordinate(y[a], g, a);
    }
}

void check_point(const FlatGeometry& g, const Point& x, const char* where) {
    if (!g.contains(x))
        throw std::invalid_argument(std::string(where) + ": point not valid for geometry");
}

}  // namespace

PathEnsemble::PathEnsemble(TimeGrid g, FlatGeometry geom, std::size_t n)
    : grid(std::move(g)), geometry(std::move(geom)), n_paths(n) {
    positions.assign(n_paths * grid.size() * geometry.dim(), 0.0);
    weights.assign(n_paths, n_paths > 0 ? 1.0 / static_cast<double>(n_paths) : 0.0);
}

Point PathEnsemble::point(std::size_t path, std::size_t t_index) const {
    Point x(dim());
    for (int a = 0; a < dim(); ++a) x[a] = coord(path, t_index, a);
    return x;
}

Point PathSample::at(std::size_t t_index) const {
    const int dim = geometry.dim();
    Point x(dim);
    for (int a = 0; a < dim; ++a) x[a] = positions[t_index * dim + a];
    return x;
}

PathSample sample_reflected_bm(const FlatGeometry& g, const Point& x0,
                               const TimeGrid& grid, std::uint64_t seed) {
    check_point(g, x0, "sample_reflected_bm");
    PathSample path{grid, g, std::vector<double>(grid.size() * g.dim())};
    Rng rng(seed);
    const int dim = g.dim();
    std::vector<double> unfolded(x0);
    for (int a = 0; a < dim; ++a) path.positions[a] = store_coordinate(x0[a], g, a);
    for (std::size_t i = 1; i < grid.size(); ++i) {
        const double sd = std::sqrt(grid.dt(i - 1));
        for (int a = 0; a < dim; ++a) {
            unfolded[a] += sd * rng.normal();
            path.positions[i * dim + a] = store_coordinate(unfolded[a], g, a);
        }
    }
    return path;
}

PathSample sample_bridge(const FlatGeometry& g, const Point& x, const Point& y,
                         double t0, double t1, const TimeGrid& grid,
                         std::uint64_t seed) {
    if (!(t0 < t1)) throw std::domain_error("sample_bridge: need t0 < t1");
    check_point(g, x, "sample_bridge");
    check_point(g, y, "sample_bridge");
    const auto i0 = grid.index_of(t0);
    const auto i1 = grid.index_of(t1);
    if (!i0 || !i1)
        throw std::invalid_argument("sample_bridge: t0 and t1 must be grid times");
    PathSample path{grid, g, std::vector<double>(grid.size() * g.dim())};
    Rng rng(seed);
    fill_bridge(path.positions.data(), g.dim(), g, x, y, grid, *i0, *i1, rng);
    for (std::size_t i = 0; i < *i0; ++i)
        for (int a = 0; a < g.dim(); ++a)
            path.positions[i * g.dim() + a] = store_coordinate(x[a], g, a);
    for (std::size_t i = *i1 + 1; i < grid.size(); ++i)
        for (int a = 0; a < g.dim(); ++a)
            path.positions[i * g.dim() + a] = store_coordinate(y[a], g, a);
    return path;
}

namespace {

PathEnsemble glued_candidate(const FlatGeometry& g, const Coupling& pi,
                             std::size_t n_paths, const TimeGrid& grid,
                             std::uint64_t seed, bool gaussian_midpoint) {
    const auto mid = grid.index_of(0.5);
    if (!mid)
        throw ConfigError("build_candidate: time grid must contain t = 1/2");
    PathEnsemble ensemble(grid, g, n_paths);
    ensemble.seed = seed;
    const int dim = g.dim();
    for (std::size_t p = 0; p < n_paths; ++p) {
        Rng rng(derive_stream(seed, p));
        auto [x, y] = pi.sample(rng);
        Point z(dim);
        if (gaussian_midpoint) {
            for (int a = 0; a < dim; ++a) z[a] = 0.5 * rng.normal();
        } else {
            for (int a = 0; a < dim; ++a) z[a] = rng.uniform(0.0, g.length(a));
        }
        double* data = ensemble.path_data(p);
        fill_bridge(data, dim, g, x, z, grid, 0, *mid, rng);
        fill_bridge(data, dim, g, z, y, grid, *mid, grid.size() - 1, rng);
    }
    return ensemble;
}

}  // namespace

PathEnsemble build_candidate(const FlatGeometry& g, const Coupling& pi,
                             std::size_t n_paths, const TimeGrid& grid,
                             std::uint64_t seed) {
    if (!g.compact())
        throw UnsupportedGeometryError(
            "build_candidate: use build_gaussian_candidate on Euclidean space");
    return glued_candidate(g, pi, n_paths, grid, seed, false);
}

PathEnsemble build_candidate(const QuotientMap& q, const Coupling& pi,
                             std::size_t n_paths, const TimeGrid& grid,
                             std::uint64_t seed) {
    if (q.quotient_kind() != QuotientKind::Box)
        throw UnsupportedGeometryError("build_candidate: only box quotients supported");
    return glued_candidate(q.quotient(), pi, n_paths, grid, seed, false);
}

PathEnsemble build_gaussian_candidate(int dim, const Coupling& pi,
                                      std::size_t n_paths, const TimeGrid& grid,
                                      std::uint64_t seed) {
    return glued_candidate(FlatGeometry::euclidean_gaussian(dim), pi, n_paths, grid,
                           seed, true);
}

PathEnsemble fold_ensemble(const PathEnsemble& e, const QuotientMap& q) {
    if (e.geometry != q.covering())
        throw GridMismatchError("fold_ensemble: ensemble is not on the covering torus");
    if (q.quotient_kind() != QuotientKind::Box)
        throw UnsupportedGeometryError("fold_ensemble: only box quotients supported");
    PathEnsemble folded(e.grid, q.quotient(), e.n_paths);
    folded.weights = e.weights;
    folded.seed = e.seed;
    const int dim = e.dim();
    for (std::size_t i = 0; i < e.positions.size(); i += dim) {
        for (int a = 0; a < dim; ++a) {
            const double wrapped = wrap_line(e.positions[i + a], q.covering().length(a));
            const double half = q.covering().length(a) / 2.0;
            folded.positions[i + a] =
                wrapped > half ? q.covering().length(a) - wrapped : wrapped;
        }
    }
    return folded;
}

GridMeasure marginal_histogram(const PathEnsemble& e, double t,
                               const std::vector<int>& cells_per_axis) {
    const auto idx = e.grid.index_of(t);
    if (!idx)
        throw std::invalid_argument(
            "marginal_histogram: t is not a grid time (no interpolation)");
    SpatialGrid grid(e.geometry, cells_per_axis);
    std::vector<double> masses(grid.n_cells(), 0.0);
    Point x(e.dim());
    for (std::size_t p = 0; p < e.n_paths; ++p) {
        for (int a = 0; a < e.dim(); ++a) x[a] = e.coord(p, *idx, a);
        masses[grid.locate(x)] += e.weights[p];
    }
    return GridMeasure(std::move(grid), std::move(masses));
}

PathEnsemble bm_ensemble(const FlatGeometry& g, const std::optional<Point>& x0,
                         const TimeGrid& grid, std::size_t n_paths,
                         std::uint64_t seed) {
    PathEnsemble ensemble(grid, g, n_paths);
    ensemble.seed = seed;
    const int dim = g.dim();
    for (std::size_t p = 0; p < n_paths; ++p) {
        Rng rng(derive_stream(seed, p));
        std::vector<double> unfolded(dim);
        if (x0) {
            unfolded = *x0;
        } else if (g.compact()) {
            for (int a = 0; a < dim; ++a) unfolded[a] = rng.uniform(0.0, g.length(a));
        } else {
            for (int a = 0; a < dim; ++a) unfolded[a] = 0.5 * rng.normal();
        }
        double* data = ensemble.path_data(p);
        for (int a = 0; a < dim; ++a) data[a] = store_coordinate(unfolded[a], g, a);
        for (std::size_t i = 1; i < grid.size(); ++i) {
            const double sd = std::sqrt(grid.dt(i - 1));
            for (int a = 0; a < dim; ++a) {
                unfolded[a] += sd * rng.normal();
                data[i * dim + a] = store_coordinate(unfolded[a], g, a);
            }
        }
    }
    return ensemble;
}

PathEnsemble constant_drift_ensemble(const FlatGeometry& g, const Point& drift,
                                     const std::optional<Point>& x0,
                                     const TimeGrid& grid, std::size_t n_paths,
                                     std::uint64_t seed) {
    if (g.has_boundary())
        throw UnsupportedGeometryError(
            "constant_drift_ensemble: constant drift is incompatible with reflection");
    PathEnsemble ensemble(grid, g, n_paths);
    ensemble.seed = seed;
    const int dim = g.dim();
    for (std::size_t p = 0; p < n_paths; ++p) {
        Rng rng(derive_stream(seed, p));
        std::vector<double> unfolded(dim);
        if (x0) {
            unfolded = *x0;
        } else if (g.compact()) {
            for (int a = 0; a < dim; ++a) unfolded[a] = rng.uniform(0.0, g.length(a));
        } else {
            for (int a = 0; a < dim; ++a) unfolded[a] = 0.5 * rng.normal();
        }
        double* data = ensemble.path_data(p);
        for (int a = 0; a < dim; ++a) data[a] = store_coordinate(unfolded[a], g, a);
        for (std::size_t i = 1; i < grid.size(); ++i) {
            const double dt = grid.dt(i - 1);
            const double sd = std::sqrt(dt);
            for (int a = 0; a < dim; ++a) {
                unfolded[a] += drift[a] * dt + sd * rng.normal();
                data[i * dim + a] = store_coordinate(unfolded[a], g, a);
            }
        }
    }
    return ensemble;
}

std::vector<double> endpoint_pair_histogram(const PathEnsemble& e,
                                            const SpatialGrid& grid) {
    if (grid.geometry() != e.geometry)
        throw GridMismatchError("endpoint_pair_histogram: grid geometry mismatch");
    const std::size_t n = grid.n_cells();
    std::vector<double> masses(n * n, 0.0);
    const std::size_t last = e.grid.size() - 1;
    for (std::size_t p = 0; p < e.n_paths; ++p) {
        const std::size_t i = grid.locate(e.point(p, 0));
        const std::size_t j = grid.locate(e.point(p, last));
        masses[i * n + j] += e.weights[p];
    }
    return masses;
}

}  // namespace bslab
