#include "bslab/coupling.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace bslab {

Coupling::Coupling(FlatGeometry geometry, std::optional<SpatialGrid> grid,
                   std::vector<double> masses, PairSampler sampler)
    : geometry_(std::move(geometry)),
      grid_(std::move(grid)),
      masses_(std::move(masses)),
      sampler_(std::move(sampler)) {
    if (grid_) {
        const std::size_t n = grid_->n_cells();
        if (masses_.size() != n * n)
            throw std::invalid_argument("Coupling: need n^2 pair masses");
        double total = 0.0;
        for (double m : masses_) {
            if (m < 0.0) throw std::invalid_argument("Coupling: negative mass");
            total += m;
        }
        if (std::abs(total - 1.0) > 1e-9)
            throw std::invalid_argument("Coupling: masses must sum to one");
        cumulative_.resize(masses_.size());
        std::partial_sum(masses_.begin(), masses_.end(), cumulative_.begin());
        cumulative_.back() = 1.0;
    }
}

Coupling Coupling::grid(SpatialGrid marginal_grid, std::vector<double> pair_masses) {
    FlatGeometry geom = marginal_grid.geometry();
    return Coupling(std::move(geom), std::move(marginal_grid), std::move(pair_masses),
                    nullptr);
}

Coupling Coupling::sampler(FlatGeometry geometry, PairSampler sample_pair) {
    return Coupling(std::move(geometry), std::nullopt, {}, std::move(sample_pair));
}

Coupling Coupling::independent_uniform(SpatialGrid marginal_grid) {
    const std::size_t n = marginal_grid.n_cells();
    std::vector<double> masses(n * n, 1.0 / static_cast<double>(n * n));
    return grid(std::move(marginal_grid), std::move(masses));
}

Coupling Coupling::diagonal(SpatialGrid marginal_grid) {
    const std::size_t n = marginal_grid.n_cells();
    std::vector<double> masses(n * n, 0.0);
    for (std::size_t i = 0; i < n; ++i) masses[i * n + i] = 1.0 / static_cast<double>(n);
    return grid(std::move(marginal_grid), std::move(masses));
}

Coupling Coupling::lazy_grid(SpatialGrid marginal_grid, double epsilon,
                             double blur_variance) {
    if (!marginal_grid.geometry().periodic())
        throw UnsupportedGeometryError("lazy_grid: needs a periodic geometry");
    if (epsilon < 0.0 || epsilon > 1.0)
        throw std::invalid_argument("lazy_grid: epsilon in [0,1] required");
    const FlatGeometry& g = marginal_grid.geometry();
    const std::size_t n = marginal_grid.n_cells();

    // Per-axis cell-averaged wrapped-Gaussian blur; symmetric and
    // row-stochastic, so the tensorised blur is doubly stochastic. Rows are
    // renormalised to absorb the image-tail truncation.
    std::vector<std::vector<double>> axis_blur(g.dim());
    for (int a = 0; a < g.dim(); ++a) {
        const int m = marginal_grid.cells_per_axis()[a];
        axis_blur[a].resize(static_cast<std::size_t>(m) * m);
        for (int i = 0; i < m; ++i) {
            double row = 0.0;
            for (int j = 0; j < m; ++j) {
                const double k = cell_averaged_kernel_1d(i, j, m, g.length(a), true,
                                                         blur_variance);
                axis_blur[a][static_cast<std::size_t>(i) * m + j] = k;
                row += k;
            }
            for (int j = 0; j < m; ++j)
                axis_blur[a][static_cast<std::size_t>(i) * m + j] /= row;
        }
    }

    std::vector<double> masses(n * n);
    const double uniform_pair = 1.0 / static_cast<double>(n * n);
    for (std::size_t i = 0; i < n; ++i) {
        const std::vector<int> mi = marginal_grid.unflatten(i);
        for (std::size_t j = 0; j < n; ++j) {
            const std::vector<int> mj = marginal_grid.unflatten(j);
            double blur = 1.0;
            for (int a = 0; a < g.dim(); ++a) {
                const int m = marginal_grid.cells_per_axis()[a];
                blur *= axis_blur[a][static_cast<std::size_t>(mi[a]) * m + mj[a]];
            }
            masses[i * n + j] = (1.0 - epsilon) * blur / static_cast<double>(n) +
                                epsilon * uniform_pair;
        }
    }
    return grid(std::move(marginal_grid), std::move(masses));
}

Coupling Coupling::lazy_sampler(FlatGeometry geometry, double epsilon, double blur_sd) {
    if (!geometry.periodic())
        throw UnsupportedGeometryError("lazy_sampler: needs a periodic geometry");
    FlatGeometry g = geometry;
    auto draw = [g, epsilon, blur_sd](Rng& rng) {
        Point x(g.dim()), y(g.dim());
        for (int a = 0; a < g.dim(); ++a) x[a] = rng.uniform(0.0, g.length(a));
        if (rng.uniform() < epsilon) {
            for (int a = 0; a < g.dim(); ++a) y[a] = rng.uniform(0.0, g.length(a));
        } else {
            for (int a = 0; a < g.dim(); ++a) y[a] = x[a] + blur_sd * rng.normal();
            y = wrap(y, g);
        }
        return std::make_pair(x, y);
    };
    return sampler(std::move(geometry), draw);
}

Coupling Coupling::gaussian_product(int dim) {
    auto draw = [dim](Rng& rng) {
        Point x(dim), y(dim);
        for (int a = 0; a < dim; ++a) x[a] = 0.5 * rng.normal();
        for (int a = 0; a < dim; ++a) y[a] = 0.5 * rng.normal();
        return std::make_pair(x, y);
    };
    return sampler(FlatGeometry::euclidean_gaussian(dim), draw);
}

const SpatialGrid& Coupling::marginal_grid() const {
    if (!grid_) throw std::logic_error("Coupling: sampler-backed coupling has no grid");
    return *grid_;
}

const std::vector<double>& Coupling::pair_masses() const {
    if (!grid_) throw std::logic_error("Coupling: sampler-backed coupling has no masses");
    return masses_;
}

double Coupling::pair_mass(std::size_t i, std::size_t j) const {
    return pair_masses()[i * marginal_grid().n_cells() + j];
}

std::vector<double> Coupling::first_marginal() const {
    const std::size_t n = marginal_grid().n_cells();
    std::vector<double> marginal(n, 0.0);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) marginal[i] += masses_[i * n + j];
    return marginal;
}

std::vector<double> Coupling::second_marginal() const {
    const std::size_t n = marginal_grid().n_cells();
    std::vector<double> marginal(n, 0.0);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) marginal[j] += masses_[i * n + j];
    return marginal;
}

std::pair<Point, Point> Coupling::sample(Rng& rng) const {
    if (!grid_) return sampler_(rng);
    const double u = rng.uniform();
    const auto it = std::lower_bound(cumulative_.begin(), cumulative_.end(), u);
    std::size_t flat = static_cast<std::size_t>(it - cumulative_.begin());
    if (flat >= masses_.size()) flat = masses_.size() - 1;
    const std::size_t n = grid_->n_cells();
    const std::size_t i = flat / n;
    const std::size_t j = flat % n;
    Point x = grid_->center(i);
    Point y = grid_->center(j);
    for (int a = 0; a < geometry_.dim(); ++a) {
        const double w = grid_->cell_width(a);
        x[a] += rng.uniform(-0.5 * w, 0.5 * w);
        y[a] += rng.uniform(-0.5 * w, 0.5 * w);
    }
    return {x, y};
}

Coupling Coupling::transpose() const {
    const std::size_t n = marginal_grid().n_cells();
    std::vector<double> t(n * n);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) t[j * n + i] = masses_[i * n + j];
    return grid(marginal_grid(), std::move(t));
}

Coupling lift_coupling(const QuotientMap& q, const Coupling& quotient_coupling) {
    if (!quotient_coupling.is_grid())
        throw UnsupportedGeometryError("lift_coupling: coupling must be grid-supported");
    if (q.quotient_kind() != QuotientKind::Box)
        throw UnsupportedGeometryError("lift_coupling: only box quotients supported");
    const SpatialGrid& qgrid = quotient_coupling.marginal_grid();
    if (qgrid.geometry() != q.quotient())
        throw GridMismatchError("lift_coupling: coupling grid is not on the quotient");

    const std::size_t nq = qgrid.n_cells();
    const double uniform = 1.0 / static_cast<double>(nq);
    const auto check_uniform = [&](const std::vector<double>& marginal) {
        for (double m : marginal)
            if (std::abs(m - uniform) > 1e-9)
                throw ConstraintViolationError(
                    "lift_coupling: both marginals must be uniform on the quotient");
    };
    check_uniform(quotient_coupling.first_marginal());
    check_uniform(quotient_coupling.second_marginal());

    std::vector<int> covering_cells(qgrid.cells_per_axis());
    for (int& m : covering_cells) m *= 2;
    SpatialGrid cgrid(q.covering(), covering_cells);

    // fold maps covering cell centres onto quotient cell centres exactly.
    const std::size_t nc = cgrid.n_cells();
    std::vector<std::size_t> folded(nc);
    for (std::size_t a = 0; a < nc; ++a) folded[a] = qgrid.locate(fold(cgrid.center(a), q));

    const double group_sq = static_cast<double>(q.group().size()) *
                            static_cast<double>(q.group().size());
    std::vector<double> masses(nc * nc);
    for (std::size_t a = 0; a < nc; ++a)
        for (std::size_t b = 0; b < nc; ++b)
            masses[a * nc + b] =
                quotient_coupling.pair_mass(folded[a], folded[b]) / group_sq;
    return Coupling::grid(std::move(cgrid), std::move(masses));
}

}  // namespace bslab
