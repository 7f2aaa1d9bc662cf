#include "bslab/entropy.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "bslab/errors.hpp"
#include "bslab/solver.hpp"

namespace bslab {

Entropy kl_divergence(const GridMeasure& mu, const GridMeasure& nu) {
    if (mu.grid != nu.grid)
        throw GridMismatchError("kl_divergence: measures live on different grids");
    double h = 0.0;
    for (std::size_t i = 0; i < mu.masses.size(); ++i) {
        const double m = mu.masses[i];
        if (m <= 0.0) continue;
        if (nu.masses[i] <= 0.0) return Entropy::infinity();
        h += m * std::log(m / nu.masses[i]);
    }
    return Entropy::finite(std::max(h, 0.0));
}

double bridge_midpoint_entropy(const FlatGeometry& g, const Point& x, const Point& y,
                               int quadrature_cells, const HeatKernelParams& params) {
    if (!g.compact())
        throw UnsupportedGeometryError(
            "bridge_midpoint_entropy: use gaussian_bridge_entropy on Euclidean space");
    const double volume = g.lebesgue_volume();
    const double p1 = heat_kernel(g, 1.0, x, y, params);
    SpatialGrid quad(g, std::vector<int>(g.dim(), quadrature_cells));
    const double cell_fraction = quad.cell_volume() / volume;
    double h = 0.0;
    for (std::size_t q = 0; q < quad.n_cells(); ++q) {
        const Point z = quad.center(q);
        const double density = volume * heat_kernel(g, 0.5, x, z, params) *
                               heat_kernel(g, 0.5, z, y, params) / p1;
        h -= cell_fraction * std::log(density);
    }
    return h;
}

double gaussian_bridge_entropy(const Point& x, const Point& y) {
    if (x.size() != y.size())
        throw std::invalid_argument("gaussian_bridge_entropy: dimension mismatch");
    double sum_sq = 0.0;
    for (std::size_t a = 0; a < x.size(); ++a) {
        const double s = x[a] + y[a];
        sum_sq += s * s;
    }
    return 0.5 * sum_sq;
}

GaussianBridgeCandidates gaussian_bridge_entropy_candidates(const Point& x,
                                                            const Point& y) {
    if (x.size() != y.size())
        throw std::invalid_argument("gaussian_bridge_entropy: dimension mismatch");
    double sum_sq = 0.0, diff_sq = 0.0;
    for (std::size_t a = 0; a < x.size(); ++a) {
        sum_sq += (x[a] + y[a]) * (x[a] + y[a]);
        diff_sq += (x[a] - y[a]) * (x[a] - y[a]);
    }
    return {0.5 * sum_sq, 0.5 * diff_sq};
}

EntropyReport candidate_entropy_bound_from_parts(
    const Coupling& pi, const std::vector<double>& endpoint_reference,
    const std::vector<double>& conditional_values) {
    const auto& masses = pi.pair_masses();
    if (endpoint_reference.size() != masses.size() ||
        conditional_values.size() != masses.size())
        throw std::invalid_argument("candidate_entropy_bound: part size mismatch");

    EntropyReport report;
    double endpoint = 0.0, conditional = 0.0;
    for (std::size_t k = 0; k < masses.size(); ++k) {
        if (masses[k] <= 0.0) continue;
        if (endpoint_reference[k] <= 0.0) {
            report.total = Entropy::infinity();
            return report;
        }
        endpoint += masses[k] * std::log(masses[k] / endpoint_reference[k]);
        conditional += masses[k] * conditional_values[k];
    }
    report.endpoint_term = endpoint;
    report.conditional_term = conditional;
    report.total = Entropy::finite(endpoint + conditional);
    return report;
}

EntropyReport candidate_entropy_bound(const Coupling& pi, const FlatGeometry& g,
                                      int quadrature_cells,
                                      const HeatKernelParams& params) {
    if (!pi.is_grid())
        throw std::invalid_argument(
            "candidate_entropy_bound: sampler-backed couplings are unsupported");
    const SpatialGrid& grid = pi.marginal_grid();
    if (grid.geometry() != g)
        throw GridMismatchError("candidate_entropy_bound: coupling grid mismatch");
    const std::size_t n = grid.n_cells();
    const double volume = g.lebesgue_volume();

    // Endpoint reference: cell masses of the time-1 kernel with a uniform
    // start, R01(i, j) = (1/n) * P1(i -> j), via the exact cell averages.
    std::vector<double> r01(n * n);
    {
        std::vector<std::vector<double>> axis(g.dim());
        for (int a = 0; a < g.dim(); ++a) {
            const int m = grid.cells_per_axis()[a];
            axis[a].resize(static_cast<std::size_t>(m) * m);
            for (int i = 0; i < m; ++i)
                for (int j = 0; j < m; ++j)
                    axis[a][static_cast<std::size_t>(i) * m + j] = cell_averaged_kernel_1d(
                        i, j, m, g.length(a), g.periodic(), 1.0, params);
        }
        for (std::size_t i = 0; i < n; ++i) {
            const auto mi = grid.unflatten(i);
            for (std::size_t j = 0; j < n; ++j) {
                const auto mj = grid.unflatten(j);
                double v = 1.0;
                for (int a = 0; a < g.dim(); ++a)
                    v *= axis[a][static_cast<std::size_t>(mi[a]) *
                                     grid.cells_per_axis()[a] +
                                 mj[a]];
                r01[i * n + j] = v / static_cast<double>(n);
            }
        }
    }

    // Conditional values: bridge midpoint entropies between cell centres.
    // cond(i,j) = log p1(ci,cj) - log V - S_i - S_j with
    // S_i = (1/V) int log p_half(ci, z) dz by midpoint quadrature.
    SpatialGrid quad(g, std::vector<int>(g.dim(), quadrature_cells));
    const double cell_fraction = quad.cell_volume() / volume;
    std::vector<double> log_mean(n, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        const Point ci = grid.center(i);
        double s = 0.0;
        for (std::size_t q = 0; q < quad.n_cells(); ++q)
            s += std::log(heat_kernel(g, 0.5, ci, quad.center(q), params));
        log_mean[i] = cell_fraction * s;
    }
    std::vector<double> conditional(n * n);
    for (std::size_t i = 0; i < n; ++i) {
        const Point ci = grid.center(i);
        for (std::size_t j = 0; j < n; ++j) {
            const double p1 = heat_kernel(g, 1.0, ci, grid.center(j), params);
            conditional[i * n + j] =
                std::log(p1) - std::log(volume) - log_mean[i] - log_mean[j];
        }
    }
    return candidate_entropy_bound_from_parts(pi, r01, conditional);
}

EntropyReport path_measure_entropy(const DiscretePathMeasure& m) {
    const auto& ref = m.reference();
    const std::size_t n = m.n_cells();
    const std::size_t T = m.n_steps();
    const double log_z = m.log_partition();

    const std::vector<double> q0 = m.marginal(0);
    double initial = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        if (q0[i] <= 0.0) continue;
        initial += q0[i] * std::log(q0[i] / ref.initial_law[i]);
    }

    // Conditional term per starting cell. The per-start normaliser zeta_i is
    // recovered from the endpoint-free bridge messages:
    //   zeta_i = a_0(i) * sum_j G_0(i, j) a-weighted w(i, j).
    const auto bridge = m.bridge_messages();
    const std::vector<double>& log_w = m.log_endpoint_weight();
    const std::vector<double> endpoint = m.endpoint_law();

    double conditional = 0.0;
    std::vector<std::vector<double>> cond_marginals(T + 1);
    for (std::size_t t = 0; t <= T; ++t)
        cond_marginals[t] = m.conditional_marginal_given_start(t);

    for (std::size_t i = 0; i < n; ++i) {
        if (q0[i] <= 0.0) continue;
        double zeta_raw = 0.0;
        for (std::size_t j = 0; j < n; ++j) {
            const double w = std::exp(log_w[i * n + j]);
            if (w > 0.0) zeta_raw += bridge.matrices[0][i * n + j] * w;
        }
        const double log_zeta =
            std::log(zeta_raw) + bridge.log_scale[0] + m.log_potential(0)[i];

        double expectation = m.log_potential(0)[i];
        for (std::size_t t = 1; t <= T; ++t) {
            const auto& la = m.log_potential(t);
            for (std::size_t k = 0; k < n; ++k) {
                const double p = cond_marginals[t][i * n + k];
                if (p > 0.0) expectation += p * la[k];
            }
        }
        for (std::size_t j = 0; j < n; ++j) {
            const double pj = cond_marginals[T][i * n + j];
            if (pj > 0.0) expectation += pj * log_w[i * n + j];
        }
        conditional += q0[i] * (expectation - log_zeta);
    }

    // Total via the global expectations (independent summation order).
    double total = -log_z;
    for (std::size_t t = 0; t <= T; ++t) {
        const std::vector<double> qt = m.marginal(t);
        const auto& la = m.log_potential(t);
        for (std::size_t k = 0; k < n; ++k)
            if (qt[k] > 0.0) total += qt[k] * la[k];
    }
    for (std::size_t k = 0; k < n * n; ++k)
        if (endpoint[k] > 0.0) total += endpoint[k] * log_w[k];

    EntropyReport report;
    report.total = Entropy::finite(std::max(total, 0.0));
    report.endpoint_term = initial;
    report.conditional_term = conditional;
    return report;
}

double kinetic_energy_estimate(const PathEnsemble& e, const VelocityField& v) {
    if (v.times != e.grid)
        throw GridMismatchError("kinetic_energy_estimate: time grids differ");
    if (!v.site_grid)
        throw GridMismatchError("kinetic_energy_estimate: field has no spatial grid");
    const SpatialGrid& grid = *v.site_grid;
    if (grid.geometry() != e.geometry)
        throw GridMismatchError("kinetic_energy_estimate: geometry mismatch");

    const std::size_t nt = e.grid.size();
    // Trapezoid weights; a fully-empty slice donates its weight to its
    // predecessor (the forward estimator leaves the final slice empty).
    std::vector<double> weight(nt, 0.0);
    for (std::size_t i = 0; i < nt; ++i) {
        const double left = i > 0 ? e.grid.time(i) - e.grid.time(i - 1) : 0.0;
        const double right = i + 1 < nt ? e.grid.time(i + 1) - e.grid.time(i) : 0.0;
        weight[i] = 0.5 * (left + right);
    }
    std::vector<bool> defined(nt, false);
    for (std::size_t i = 0; i < nt; ++i)
        for (std::size_t s = 0; s < v.n_sites(); ++s)
            if (!v.empty[i][s]) {
                defined[i] = true;
                break;
            }
    for (std::size_t i = nt; i-- > 0;) {
        if (!defined[i]) {
            if (i > 0)
                weight[i - 1] += weight[i];
            else if (i + 1 < nt)
                weight[i + 1] += weight[i];
            weight[i] = 0.0;
        }
    }

    const int dim = e.dim();
    double energy = 0.0;
    Point x(dim);
    for (std::size_t p = 0; p < e.n_paths; ++p) {
        double path_integral = 0.0;
        for (std::size_t i = 0; i < nt; ++i) {
            if (weight[i] == 0.0) continue;
            for (int a = 0; a < dim; ++a) x[a] = e.coord(p, i, a);
            const std::size_t cell = grid.locate(x);
            if (v.empty[i][cell]) continue;
            double norm_sq = 0.0;
            for (int a = 0; a < dim; ++a) norm_sq += v.values[i][cell][a] * v.values[i][cell][a];
            path_integral += weight[i] * norm_sq;
        }
        energy += e.weights[p] * path_integral;
    }
    return 0.5 * energy;
}

}  // namespace bslab
