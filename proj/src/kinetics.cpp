#include "bslab/kinetics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "bslab/errors.hpp"

namespace bslab {

namespace {

constexpr int kMinSamplesPerCell = 10;

double boundary_distance(const FlatGeometry& g, const double* x) {
    double d = std::numeric_limits<double>::infinity();
    for (int a = 0; a < g.dim(); ++a) d = std::min({d, x[a], g.length(a) - x[a]});
    return d;
}

}  // namespace

double LocalTimeEstimate::integrated_rate() const {
    double total = 0.0;
    for (std::size_t i = 0; i + 1 < times.size(); ++i)
        total += 0.5 * (occupation_rate[i] + occupation_rate[i + 1]) *
                 (times[i + 1] - times[i]);
    return total;
}

VelocityField estimate_forward_velocity(const PathEnsemble& e,
                                        const std::vector<int>& bins,
                                        double exclusion_radius) {
    if (e.grid.size() < 2)
        throw std::invalid_argument("estimate_forward_velocity: need at least 2 times");
    SpatialGrid grid(e.geometry, bins);
    VelocityField field = VelocityField::zeros(e.grid, grid);
    const int dim = e.dim();
    const std::size_t nt = e.grid.size();
    const std::size_t nc = grid.n_cells();

    if (e.geometry.has_boundary()) {
        for (std::size_t s = 0; s < nc; ++s) {
            const Point c = grid.center(s);
            field.boundary_site[s] =
                boundary_distance(e.geometry, c.data()) < grid.cell_width(0);
        }
    }

    std::vector<std::vector<Point>> sums(nt, std::vector<Point>(nc, Point(dim, 0.0)));
    std::vector<std::vector<double>> mass(nt, std::vector<double>(nc, 0.0));
    std::vector<std::vector<int>> counts(nt, std::vector<int>(nc, 0));

    Point x(dim), y(dim), increment(dim);
    for (std::size_t p = 0; p < e.n_paths; ++p) {
        const double w = e.weights[p];
        for (std::size_t i = 0; i + 1 < nt; ++i) {
            const double h = e.grid.dt(i);
            const double guard =
                exclusion_radius < 0.0 ? 2.0 * std::sqrt(h) : exclusion_radius;
            for (int a = 0; a < dim; ++a) {
                x[a] = e.coord(p, i, a);
                y[a] = e.coord(p, i + 1, a);
            }
            if (e.geometry.has_boundary() &&
                boundary_distance(e.geometry, x.data()) < guard)
                continue;
            if (!log_map_checked(x, y, e.geometry, increment)) continue;  // cut locus
            const std::size_t cell = grid.locate(x);
            for (int a = 0; a < dim; ++a) sums[i][cell][a] += w * increment[a] / h;
            mass[i][cell] += w;
            counts[i][cell] += 1;
        }
    }

    bool any = false;
    for (std::size_t i = 0; i < nt; ++i) {
        for (std::size_t c = 0; c < nc; ++c) {
            field.counts[i][c] = counts[i][c];
            if (i + 1 == nt || counts[i][c] < kMinSamplesPerCell) {
                field.empty[i][c] = true;
                continue;
            }
            any = true;
            for (int a = 0; a < dim; ++a)
                field.values[i][c][a] = sums[i][c][a] / mass[i][c];
        }
    }
    if (!any)
        throw InsufficientDataError(
            "estimate_forward_velocity: no cell reached the sample floor");
    return field;
}

PathEnsemble reverse_ensemble(const PathEnsemble& e) {
    const std::size_t nt = e.grid.size();
    std::vector<double> reflected(nt);
    for (std::size_t i = 0; i < nt; ++i) reflected[i] = 1.0 - e.grid.time(nt - 1 - i);
    reflected.front() = 0.0;
    reflected.back() = 1.0;
    PathEnsemble out(TimeGrid(std::move(reflected)), e.geometry, e.n_paths);
    out.weights = e.weights;
    out.seed = e.seed;
    const int dim = e.dim();
    for (std::size_t p = 0; p < e.n_paths; ++p) {
        double* dst = out.path_data(p);
        const double* src = e.path_data(p);
        for (std::size_t i = 0; i < nt; ++i)
            for (int a = 0; a < dim; ++a)
                dst[i * dim + a] = src[(nt - 1 - i) * dim + a];
    }
    return out;
}

VelocityField estimate_backward_velocity(const PathEnsemble& e,
                                         const std::vector<int>& bins,
                                         double exclusion_radius) {
    const PathEnsemble reversed = reverse_ensemble(e);
    const VelocityField fwd =
        estimate_forward_velocity(reversed, bins, exclusion_radius);
    VelocityField field = fwd;
    field.times = e.grid;
    const std::size_t nt = e.grid.size();
    for (std::size_t i = 0; i < nt; ++i) {
        const std::size_t mirror = nt - 1 - i;
        field.values[i] = fwd.values[mirror];
        field.empty[i] = fwd.empty[mirror];
        field.counts[i] = fwd.counts[mirror];
        for (auto& v : field.values[i])
            for (double& c : v) c = -c;
    }
    return field;
}

VelocityField current_velocity(const VelocityField& forward,
                               const VelocityField& backward) {
    if (forward.times != backward.times || forward.sites != backward.sites)
        throw GridMismatchError("current_velocity: fields live on different grids");
    VelocityField out = forward;
    for (std::size_t i = 0; i < forward.values.size(); ++i) {
        for (std::size_t c = 0; c < forward.n_sites(); ++c) {
            if (forward.empty[i][c] || backward.empty[i][c]) {
                out.empty[i][c] = true;
                for (double& v : out.values[i][c]) v = 0.0;
                continue;
            }
            out.empty[i][c] = false;
            for (std::size_t a = 0; a < out.values[i][c].size(); ++a)
                out.values[i][c][a] =
                    0.5 * (forward.values[i][c][a] + backward.values[i][c][a]);
            out.counts[i][c] = std::min(forward.counts[i][c], backward.counts[i][c]);
        }
    }
    return out;
}

LocalTimeEstimate estimate_local_time(const PathEnsemble& e, double epsilon) {
    if (!e.geometry.has_boundary())
        throw UnsupportedGeometryError("estimate_local_time: geometry has no boundary");
    double min_side = std::numeric_limits<double>::infinity();
    for (double length : e.geometry.lengths()) min_side = std::min(min_side, length);
    if (!(epsilon > 0.0) || epsilon >= min_side / 4.0)
        throw std::invalid_argument(
            "estimate_local_time: need 0 < epsilon < min side / 4");

    const std::size_t nt = e.grid.size();
    const int dim = e.dim();
    LocalTimeEstimate out;
    out.epsilon = epsilon;
    out.times = e.grid.times();
    out.occupation_rate.assign(nt, 0.0);
    std::vector<std::vector<double>> face_mass(dim, std::vector<double>(2, 0.0));

    for (std::size_t p = 0; p < e.n_paths; ++p) {
        const double w = e.weights[p];
        for (std::size_t i = 0; i < nt; ++i) {
            bool in_tube = false;
            for (int a = 0; a < dim; ++a) {
                const double xa = e.coord(p, i, a);
                if (xa < epsilon) {
                    face_mass[a][0] += w;
                    in_tube = true;
                }
                if (e.geometry.length(a) - xa < epsilon) {
                    face_mass[a][1] += w;
                    in_tube = true;
                }
            }
            if (in_tube) out.occupation_rate[i] += w;
        }
    }
    for (double& r : out.occupation_rate) r /= 2.0 * epsilon;

    double face_total = 0.0;
    for (int a = 0; a < dim; ++a) face_total += face_mass[a][0] + face_mass[a][1];
    for (int a = 0; a < dim; ++a)
        for (int side = 0; side < 2; ++side)
            out.surface_weights.push_back(
                {a, side, face_total > 0.0 ? face_mass[a][side] / face_total : 0.0});
    return out;
}

namespace {

struct TestFunction {
    std::function<double(const Point&)> value;
    std::function<Point(const Point&)> gradient;
    double gradient_norm;  // L2(vol) norm of the gradient
};

std::vector<TestFunction> test_family(const FlatGeometry& g) {
    std::vector<TestFunction> family;
    const bool is_periodic = g.periodic();
    for (int axis = 0; axis < g.dim(); ++axis) {
        const double L = g.length(axis);
        for (int k = 1; k <= 3; ++k) {
            if (is_periodic) {
                const double omega = 2.0 * M_PI * k / L;
                family.push_back(
                    {[axis, omega](const Point& x) { return std::cos(omega * x[axis]); },
                     [axis, omega](const Point& x) {
                         Point grad(x.size(), 0.0);
                         grad[axis] = -omega * std::sin(omega * x[axis]);
                         return grad;
                     },
                     omega / std::sqrt(2.0)});
                family.push_back(
                    {[axis, omega](const Point& x) { return std::sin(omega * x[axis]); },
                     [axis, omega](const Point& x) {
                         Point grad(x.size(), 0.0);
                         grad[axis] = omega * std::cos(omega * x[axis]);
                         return grad;
                     },
                     omega / std::sqrt(2.0)});
            } else {
                // Neumann cosine modes: zero normal derivative at the walls.
                const double omega = M_PI * k / L;
                family.push_back(
                    {[axis, omega](const Point& x) { return std::cos(omega * x[axis]); },
                     [axis, omega](const Point& x) {
                         Point grad(x.size(), 0.0);
                         grad[axis] = -omega * std::sin(omega * x[axis]);
                         return grad;
                     },
                     omega / std::sqrt(2.0)});
            }
        }
    }
    return family;
}

std::vector<double> continuity_residual_impl(
    const std::vector<GridMeasure>& histograms, const TimeGrid& times,
    const std::function<const Point*(std::size_t t, std::size_t cell)>& velocity_at) {
    const std::size_t nt = times.size();
    if (histograms.size() != nt)
        throw GridMismatchError("continuity_residual: one histogram per time required");
    for (std::size_t i = 1; i < nt; ++i)
        if (histograms[i].grid != histograms[0].grid)
            throw GridMismatchError("continuity_residual: histogram grids differ");

    const SpatialGrid& grid = histograms[0].grid;
    const auto family = test_family(grid.geometry());
    const std::size_t nc = grid.n_cells();

    std::vector<std::vector<double>> f_values(family.size(), std::vector<double>(nc));
    std::vector<std::vector<Point>> f_grads(family.size());
    for (std::size_t fi = 0; fi < family.size(); ++fi) {
        f_grads[fi].resize(nc);
        for (std::size_t c = 0; c < nc; ++c) {
            const Point x = grid.center(c);
            f_values[fi][c] = family[fi].value(x);
            f_grads[fi][c] = family[fi].gradient(x);
        }
    }

    std::vector<double> residual(nt, 0.0);
    for (std::size_t i = 1; i + 1 < nt; ++i) {
        const double dt = times.time(i + 1) - times.time(i - 1);
        double worst = 0.0;
        for (std::size_t fi = 0; fi < family.size(); ++fi) {
            double mu_next = 0.0, mu_prev = 0.0, transport = 0.0;
            for (std::size_t c = 0; c < nc; ++c) {
                mu_next += histograms[i + 1].masses[c] * f_values[fi][c];
                mu_prev += histograms[i - 1].masses[c] * f_values[fi][c];
                const Point* v = velocity_at(i, c);
                if (!v) continue;
                double dot = 0.0;
                for (std::size_t a = 0; a < v->size(); ++a)
                    dot += f_grads[fi][c][a] * (*v)[a];
                transport += histograms[i].masses[c] * dot;
            }
            const double r = std::abs((mu_next - mu_prev) / dt - transport) /
                             family[fi].gradient_norm;
            worst = std::max(worst, r);
        }
        residual[i] = worst;
    }
    return residual;
}

}  // namespace

std::vector<double> continuity_residual(const std::vector<GridMeasure>& histograms,
                                        const VelocityField& v) {
    if (!v.site_grid || histograms.empty() || *v.site_grid != histograms[0].grid)
        throw GridMismatchError("continuity_residual: field and histogram grids differ");
    return continuity_residual_impl(
        histograms, v.times, [&v](std::size_t t, std::size_t cell) -> const Point* {
            if (v.empty[t][cell]) return nullptr;
            return &v.values[t][cell];
        });
}

std::vector<double> continuity_residual_analytic(
    const std::vector<GridMeasure>& histograms, const TimeGrid& times,
    const std::function<Point(const Point&)>& field) {
    if (histograms.empty())
        throw GridMismatchError("continuity_residual: no histograms");
    const SpatialGrid& grid = histograms[0].grid;
    std::vector<Point> sampled(grid.n_cells());
    for (std::size_t c = 0; c < grid.n_cells(); ++c) sampled[c] = field(grid.center(c));
    return continuity_residual_impl(
        histograms, times, [&sampled](std::size_t, std::size_t cell) -> const Point* {
            return &sampled[cell];
        });
}

}  // namespace bslab
