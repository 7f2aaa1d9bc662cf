#ifndef BSLAB_GRID_HPP
#define BSLAB_GRID_HPP

#include <cstddef>
#include <optional>
#include <vector>

#include "bslab/geometry.hpp"

namespace bslab {

/// Strictly increasing times in [0,1] including both endpoints.
class TimeGrid {
public:
    explicit TimeGrid(std::vector<double> times);

    /// n_steps uniform steps: times i / n_steps.
    static TimeGrid uniform(int n_steps);

    const std::vector<double>& times() const { return times_; }
    std::size_t size() const { return times_.size(); }
    double time(std::size_t i) const { return times_.at(i); }
    double dt(std::size_t i) const { return times_.at(i + 1) - times_.at(i); }

    /// Index of t on the grid; nullopt if t is not a grid time (within tol).
    std::optional<std::size_t> index_of(double t, double tol = 1e-12) const;

    bool operator==(const TimeGrid& other) const { return times_ == other.times_; }
    bool operator!=(const TimeGrid& other) const { return !(*this == other); }

private:
    std::vector<double> times_;
};

/// Uniform cell-centred partition of a compact flat geometry. Cells are
/// axis-aligned boxes, flattened row-major (axis 0 fastest).
class SpatialGrid {
public:
    SpatialGrid(FlatGeometry geometry, std::vector<int> cells_per_axis);

    const FlatGeometry& geometry() const { return geometry_; }
    const std::vector<int>& cells_per_axis() const { return cells_; }
    std::size_t n_cells() const { return n_cells_; }
    double cell_width(int axis) const {
        return geometry_.length(axis) / cells_[axis];
    }
    /// Lebesgue volume of one cell.
    double cell_volume() const;

    Point center(std::size_t flat_index) const;
    std::size_t flatten(const std::vector<int>& multi_index) const;
    std::vector<int> unflatten(std::size_t flat_index) const;

    /// Cell containing x; periodic axes wrap, bounded axes clamp boundary
    /// points into the adjacent cell.
    std::size_t locate(const Point& x) const;

    bool operator==(const SpatialGrid& other) const {
        return geometry_ == other.geometry_ && cells_ == other.cells_;
    }
    bool operator!=(const SpatialGrid& other) const { return !(*this == other); }

private:
    FlatGeometry geometry_;
    std::vector<int> cells_;
    std::size_t n_cells_;
};

/// Probability masses on the cells of a SpatialGrid (nonnegative, sum 1).
struct GridMeasure {
    SpatialGrid grid;
    std::vector<double> masses;

    GridMeasure(SpatialGrid g, std::vector<double> m);

    static GridMeasure uniform(SpatialGrid g);

    double total() const;
    void validate() const;
};

/// Vector field sampled at a set of sites for each time of a grid. Sites are
/// usually the cell centres of a SpatialGrid; entries with fewer samples than
/// the estimator's floor are flagged empty. `boundary_site` marks sites on
/// the geometry boundary (impermeability bookkeeping).
struct VelocityField {
    TimeGrid times;
    std::vector<Point> sites;
    std::optional<SpatialGrid> site_grid;  // set when sites are cell centres
    // values[t][site] is a dim-vector; empty[t][site] true when unpopulated.
    std::vector<std::vector<Point>> values;
    std::vector<std::vector<bool>> empty;
    std::vector<std::vector<int>> counts;
    std::vector<bool> boundary_site;

    int dim() const { return sites.empty() ? 0 : static_cast<int>(sites[0].size()); }
    std::size_t n_sites() const { return sites.size(); }

    static VelocityField zeros(TimeGrid times, const SpatialGrid& grid);
};

}  // namespace bslab

#endif  // BSLAB_GRID_HPP
