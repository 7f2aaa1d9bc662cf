#include "bslab/grid.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace bslab {

TimeGrid::TimeGrid(std::vector<double> times) : times_(std::move(times)) {
    if (times_.size() < 2) throw std::invalid_argument("TimeGrid: need at least two times");
    if (times_.front() != 0.0 || times_.back() != 1.0)
        throw std::invalid_argument("TimeGrid: must include t=0 and t=1");
    for (std::size_t i = 1; i < times_.size(); ++i)
        if (!(times_[i] > times_[i - 1]))
            throw std::invalid_argument("TimeGrid: times must be strictly increasing");
}

TimeGrid TimeGrid::uniform(int n_steps) {
    if (n_steps < 1) throw std::invalid_argument("TimeGrid: need at least one step");
    std::vector<double> times(n_steps + 1);
    for (int i = 0; i <= n_steps; ++i)
        times[i] = static_cast<double>(i) / static_cast<double>(n_steps);
    times.back() = 1.0;
    return TimeGrid(std::move(times));
}

std::optional<std::size_t> TimeGrid::index_of(double t, double tol) const {
    auto it = std::lower_bound(times_.begin(), times_.end(), t - tol);
    if (it == times_.end() || std::abs(*it - t) > tol) return std::nullopt;
    return static_cast<std::size_t>(it - times_.begin());
}

SpatialGrid::SpatialGrid(FlatGeometry geometry, std::vector<int> cells_per_axis)
    : geometry_(std::move(geometry)), cells_(std::move(cells_per_axis)) {
    if (!geometry_.compact())
        throw UnsupportedGeometryError("SpatialGrid: geometry must be compact");
    if (static_cast<int>(cells_.size()) != geometry_.dim())
        throw std::invalid_argument("SpatialGrid: need one cell count per axis");
    n_cells_ = 1;
    for (int m : cells_) {
        if (m < 1) throw std::invalid_argument("SpatialGrid: cell counts must be positive");
        n_cells_ *= static_cast<std::size_t>(m);
    }
}

double SpatialGrid::cell_volume() const {
    double v = 1.0;
    for (int a = 0; a < geometry_.dim(); ++a) v *= cell_width(a);
    return v;
}

Point SpatialGrid::center(std::size_t flat_index) const {
    std::vector<int> idx = unflatten(flat_index);
    Point x(geometry_.dim());
    for (int a = 0; a < geometry_.dim(); ++a)
        x[a] = (idx[a] + 0.5) * cell_width(a);
    return x;
}

std::size_t SpatialGrid::flatten(const std::vector<int>& multi_index) const {
    std::size_t flat = 0;
    for (int a = geometry_.dim() - 1; a >= 0; --a)
        flat = flat * cells_[a] + static_cast<std::size_t>(multi_index[a]);
    return flat;
}

std::vector<int> SpatialGrid::unflatten(std::size_t flat_index) const {
    std::vector<int> idx(geometry_.dim());
    for (int a = 0; a < geometry_.dim(); ++a) {
        idx[a] = static_cast<int>(flat_index % cells_[a]);
        flat_index /= cells_[a];
    }
    return idx;
}

std::size_t SpatialGrid::locate(const Point& x) const {
    if (static_cast<int>(x.size()) != geometry_.dim())
        throw std::invalid_argument("SpatialGrid::locate: dimension mismatch");
    std::vector<int> idx(geometry_.dim());
    for (int a = 0; a < geometry_.dim(); ++a) {
        double u = x[a];
        const double length = geometry_.length(a);
        if (geometry_.periodic()) {
            u = std::fmod(u, length);
            if (u < 0.0) u += length;
            if (u >= length) u -= length;
        } else {
            if (u < 0.0 || u > length)
                throw std::invalid_argument("SpatialGrid::locate: point outside domain");
        }
        int k = static_cast<int>(u / cell_width(a));
        if (k >= cells_[a]) k = cells_[a] - 1;  // u == length on a bounded axis
        idx[a] = k;
    }
    return flatten(idx);
}

GridMeasure::GridMeasure(SpatialGrid g, std::vector<double> m)
    : grid(std::move(g)), masses(std::move(m)) {
    if (masses.size() != grid.n_cells())
        throw std::invalid_argument("GridMeasure: one mass per cell required");
}

GridMeasure GridMeasure::uniform(SpatialGrid g) {
    const std::size_t n = g.n_cells();
    return GridMeasure(std::move(g), std::vector<double>(n, 1.0 / static_cast<double>(n)));
}

double GridMeasure::total() const {
    double s = 0.0;
    for (double m : masses) s += m;
    return s;
}

void GridMeasure::validate() const {
    for (double m : masses)
        if (m < 0.0) throw std::invalid_argument("GridMeasure: negative mass");
    if (std::abs(total() - 1.0) > 1e-9)
        throw std::invalid_argument("GridMeasure: masses must sum to one");
}

VelocityField VelocityField::zeros(TimeGrid times, const SpatialGrid& grid) {
    VelocityField f{std::move(times), {}, grid, {}, {}, {}, {}};
    const std::size_t n = grid.n_cells();
    f.sites.reserve(n);
    for (std::size_t k = 0; k < n; ++k) f.sites.push_back(grid.center(k));
    const std::size_t nt = f.times.size();
    f.values.assign(nt, std::vector<Point>(n, Point(grid.geometry().dim(), 0.0)));
    f.empty.assign(nt, std::vector<bool>(n, false));
    f.counts.assign(nt, std::vector<int>(n, 0));
    f.boundary_site.assign(n, false);
    return f;
}

}  // namespace bslab
