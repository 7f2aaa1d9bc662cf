#ifndef BSLAB_COUPLING_HPP
#define BSLAB_COUPLING_HPP

#include <functional>
#include <memory>
#include <utility>
#include <vector>

#include "bslab/grid.hpp"
#include "bslab/rng.hpp"

namespace bslab {

class QuotientMap;

/// Probability measure on M x M. Either grid-supported (pair masses over the
/// cells of a marginal SpatialGrid, row-major (i,j) -> i * n + j) or backed
/// by a pair sampler. Exact marginal accessors exist in grid form only.
class Coupling {
public:
    using PairSampler = std::function<std::pair<Point, Point>(Rng&)>;

    static Coupling grid(SpatialGrid marginal_grid, std::vector<double> pair_masses);
    static Coupling sampler(FlatGeometry geometry, PairSampler sample_pair);

    /// Product of uniforms on the grid.
    static Coupling independent_uniform(SpatialGrid marginal_grid);
    /// Identity coupling: mass 1/n on each diagonal cell pair.
    static Coupling diagonal(SpatialGrid marginal_grid);
    /// (1-epsilon) * wrapped-Gaussian diagonal blur + epsilon * uniform, on a
    /// periodic grid. Circulant, hence both marginals exactly uniform.
    static Coupling lazy_grid(SpatialGrid marginal_grid, double epsilon,
                              double blur_variance);
    /// Continuous counterpart of lazy_grid on a periodic geometry.
    static Coupling lazy_sampler(FlatGeometry geometry, double epsilon,
                                 double blur_sd);
    /// Independent N(0, 1/4 I) x N(0, 1/4 I) pairs on Euclidean space.
    static Coupling gaussian_product(int dim);

    bool is_grid() const { return grid_.has_value(); }
    const FlatGeometry& geometry() const { return geometry_; }
    const SpatialGrid& marginal_grid() const;
    const std::vector<double>& pair_masses() const;
    double pair_mass(std::size_t i, std::size_t j) const;

    std::vector<double> first_marginal() const;
    std::vector<double> second_marginal() const;

    /// Draw a pair; grid couplings sample a cell pair and then uniform
    /// positions within the two cells.
    std::pair<Point, Point> sample(Rng& rng) const;

    /// Coupling with masses pi(j, i).
    Coupling transpose() const;

private:
    Coupling(FlatGeometry geometry, std::optional<SpatialGrid> grid,
             std::vector<double> masses, PairSampler sampler);

    FlatGeometry geometry_;
    std::optional<SpatialGrid> grid_;
    std::vector<double> masses_;       // grid form
    std::vector<double> cumulative_;   // grid form sampling
    PairSampler sampler_;              // sampler form
};

/// Lift a grid coupling on a box quotient to the covering torus:
/// pi(a, b) = pi~(fold a, fold b) / |G|^2 on the doubled grid. Preserves
/// uniform marginals, pushes forward to pi~ cell-exactly, and preserves
/// relative entropy against the product of uniforms.
Coupling lift_coupling(const QuotientMap& q, const Coupling& quotient_coupling);

}  // namespace bslab

#endif  // BSLAB_COUPLING_HPP
