#include "bslab/solver.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "bslab/errors.hpp"
#include "bslab/stats.hpp"

namespace bslab {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

// C = A * B for n x n row-major matrices.
void matmul(const std::vector<double>& A, const std::vector<double>& B,
            std::vector<double>& C, std::size_t n) {
    C.assign(n * n, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        const double* a_row = A.data() + i * n;
        double* c_row = C.data() + i * n;
        for (std::size_t k = 0; k < n; ++k) {
            const double a = a_row[k];
            if (a == 0.0) continue;
            const double* b_row = B.data() + k * n;
            for (std::size_t j = 0; j < n; ++j) c_row[j] += a * b_row[j];
        }
    }
}

// Rescale M to max entry 1; returns log of the applied scale (or -inf for a
// zero matrix, which is left untouched).
double normalise_scale(std::vector<double>& M) {
    double peak = 0.0;
    for (double v : M) peak = std::max(peak, v);
    if (peak <= 0.0) return kNegInf;
    for (double& v : M) v /= peak;
    return std::log(peak);
}

std::vector<double> exp_of(const std::vector<double>& log_values) {
    std::vector<double> out(log_values.size());
    for (std::size_t i = 0; i < log_values.size(); ++i)
        out[i] = std::exp(log_values[i]);
    return out;
}

void check_law(const std::vector<double>& law, std::size_t n, const char* what) {
    if (law.size() != n) throw std::invalid_argument(std::string(what) + ": wrong size");
    double total = 0.0;
    for (double v : law) {
        if (v < 0.0) throw std::invalid_argument(std::string(what) + ": negative mass");
        total += v;
    }
    if (std::abs(total - 1.0) > 1e-9)
        throw std::invalid_argument(std::string(what) + ": must sum to one");
}

}  // namespace

void ReferenceChain::validate() const {
    const std::size_t n = n_cells();
    check_law(initial_law, n, "ReferenceChain initial law");
    if (kernels.size() != n_steps())
        throw std::invalid_argument("ReferenceChain: need one kernel per step");
    for (const auto& K : kernels) {
        if (K.size() != n * n)
            throw std::invalid_argument("ReferenceChain: kernel size mismatch");
        for (std::size_t i = 0; i < n; ++i) {
            double row = 0.0;
            for (std::size_t j = 0; j < n; ++j) {
                if (K[i * n + j] < 0.0)
                    throw std::invalid_argument("ReferenceChain: negative kernel entry");
                row += K[i * n + j];
            }
            if (std::abs(row - 1.0) > 1e-12)
                throw std::invalid_argument("ReferenceChain: kernel row not stochastic");
        }
    }
}

ReferenceChain discretize_reference(const FlatGeometry& g,
                                    const std::vector<int>& cells_per_axis,
                                    const TimeGrid& times,
                                    const HeatKernelParams& params) {
    SpatialGrid grid(g, cells_per_axis);
    const std::size_t n = grid.n_cells();
    ReferenceChain chain{grid, times, std::vector<double>(n, 1.0 / n), {}};

    for (std::size_t step = 0; step + 1 < times.size(); ++step) {
        const double dt = times.dt(step);
        // Per-axis factors, then tensor product over the flattened cells.
        std::vector<std::vector<double>> axis(g.dim());
        for (int a = 0; a < g.dim(); ++a) {
            const int m = cells_per_axis[a];
            axis[a].resize(static_cast<std::size_t>(m) * m);
            for (int i = 0; i < m; ++i)
                for (int j = 0; j < m; ++j)
                    axis[a][static_cast<std::size_t>(i) * m + j] = cell_averaged_kernel_1d(
                        i, j, m, g.length(a), g.periodic(), dt, params);
        }
        std::vector<double> K(n * n);
        for (std::size_t i = 0; i < n; ++i) {
            const auto mi = grid.unflatten(i);
            for (std::size_t j = 0; j < n; ++j) {
                const auto mj = grid.unflatten(j);
                double v = 1.0;
                for (int a = 0; a < g.dim(); ++a)
                    v *= axis[a][static_cast<std::size_t>(mi[a]) * cells_per_axis[a] +
                                 mj[a]];
                K[i * n + j] = v;
            }
        }
        // Symmetrise away closed-form roundoff, then fix the row sums (the
        // image-tail truncation leaves a ~1e-13 deficit).
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = i + 1; j < n; ++j) {
                const double s = 0.5 * (K[i * n + j] + K[j * n + i]);
                K[i * n + j] = s;
                K[j * n + i] = s;
            }
        for (std::size_t i = 0; i < n; ++i) {
            double row = 0.0;
            for (std::size_t j = 0; j < n; ++j) row += K[i * n + j];
            for (std::size_t j = 0; j < n; ++j) K[i * n + j] /= row;
        }
        chain.kernels.push_back(std::move(K));
    }
    chain.validate();
    return chain;
}

void DiscreteBSProblem::validate() const {
    if (!reference) throw std::invalid_argument("DiscreteBSProblem: missing reference");
    reference->validate();
    const std::size_t n = reference->n_cells();
    for (const auto& [t, mu] : marginal_targets) {
        if (t >= reference->times.size())
            throw std::invalid_argument("DiscreteBSProblem: constraint time off grid");
        check_law(mu, n, "DiscreteBSProblem marginal target");
    }
    check_law(endpoint_coupling, n * n, "DiscreteBSProblem endpoint coupling");
}

// ---------------------------------------------------------------------------
// DiscretePathMeasure
// ---------------------------------------------------------------------------

DiscretePathMeasure::DiscretePathMeasure(std::shared_ptr<const ReferenceChain> reference)
    : reference_(std::move(reference)) {
    if (!reference_) throw std::invalid_argument("DiscretePathMeasure: null reference");
    const std::size_t n = reference_->n_cells();
    log_w_.assign(n * n, 0.0);
    log_a_.assign(reference_->times.size(), std::vector<double>(n, 0.0));
}

const std::vector<double>& DiscretePathMeasure::log_potential(std::size_t t) const {
    return log_a_.at(t);
}

void DiscretePathMeasure::set_log_endpoint_weight(std::vector<double> log_w) {
    const std::size_t n = n_cells();
    if (log_w.size() != n * n)
        throw std::invalid_argument("set_log_endpoint_weight: wrong size");
    log_w_ = std::move(log_w);
    messages_valid_ = false;
}

void DiscretePathMeasure::set_log_potential(std::size_t t, std::vector<double> log_a) {
    if (log_a.size() != n_cells())
        throw std::invalid_argument("set_log_potential: wrong size");
    log_a_.at(t) = std::move(log_a);
    messages_valid_ = false;
}

void DiscretePathMeasure::rebuild_messages() const {
    if (messages_valid_) return;
    const std::size_t n = n_cells();
    const std::size_t T = n_steps();

    std::vector<std::vector<double>> a(T + 1);
    for (std::size_t t = 0; t <= T; ++t) a[t] = exp_of(log_a_[t]);

    forward_.assign(T + 1, {});
    forward_log_scale_.assign(T + 1, 0.0);
    forward_[0].assign(n * n, 0.0);
    for (std::size_t i = 0; i < n; ++i)
        forward_[0][i * n + i] = reference_->initial_law[i] * a[0][i];
    forward_log_scale_[0] = normalise_scale(forward_[0]);
    std::vector<double> tmp;
    for (std::size_t t = 0; t < T; ++t) {
        matmul(forward_[t], reference_->kernels[t], tmp, n);
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t k = 0; k < n; ++k) tmp[i * n + k] *= a[t + 1][k];
        forward_[t + 1] = tmp;
        forward_log_scale_[t + 1] =
            forward_log_scale_[t] + normalise_scale(forward_[t + 1]);
    }

    backward_.assign(T + 1, {});
    backward_log_scale_.assign(T + 1, 0.0);
    backward_[T].assign(n * n, 0.0);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t k = 0; k < n; ++k)
            backward_[T][k * n + i] = std::exp(log_w_[i * n + k]);
    backward_log_scale_[T] = normalise_scale(backward_[T]);
    for (std::size_t t = T; t-- > 0;) {
        std::vector<double> scaled = backward_[t + 1];
        for (std::size_t l = 0; l < n; ++l)
            for (std::size_t i = 0; i < n; ++i) scaled[l * n + i] *= a[t + 1][l];
        matmul(reference_->kernels[t], scaled, backward_[t], n);
        backward_log_scale_[t] =
            backward_log_scale_[t + 1] + normalise_scale(backward_[t]);
    }

    double z = 0.0;
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t k = 0; k < n; ++k)
            z += forward_[0][i * n + k] * backward_[0][k * n + i];
    if (!(z > 0.0))
        throw NumericalFailureError("DiscretePathMeasure: zero total mass");
    log_z_ = std::log(z) + forward_log_scale_[0] + backward_log_scale_[0];
    messages_valid_ = true;
}

std::vector<double> DiscretePathMeasure::marginal(std::size_t t) const {
    rebuild_messages();
    const std::size_t n = n_cells();
    std::vector<double> q(n, 0.0);
    double total = 0.0;
    for (std::size_t k = 0; k < n; ++k) {
        double s = 0.0;
        for (std::size_t i = 0; i < n; ++i)
            s += forward_.at(t)[i * n + k] * backward_.at(t)[k * n + i];
        q[k] = s;
        total += s;
    }
    if (!(total > 0.0))
        throw NumericalFailureError("DiscretePathMeasure: zero mass at marginal");
    for (double& v : q) v /= total;
    return q;
}

std::vector<double> DiscretePathMeasure::endpoint_law() const {
    rebuild_messages();
    const std::size_t n = n_cells();
    const std::size_t T = n_steps();
    std::vector<double> law(n * n);
    double total = 0.0;
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) {
            const double v = forward_[T][i * n + j] * backward_[T][j * n + i];
            law[i * n + j] = v;
            total += v;
        }
    if (!(total > 0.0))
        throw NumericalFailureError("DiscretePathMeasure: zero endpoint mass");
    for (double& v : law) v /= total;
    return law;
}

double DiscretePathMeasure::log_partition() const {
    rebuild_messages();
    return log_z_;
}

std::vector<double> DiscretePathMeasure::conditional_marginal_given_start(
    std::size_t t) const {
    rebuild_messages();
    const std::size_t n = n_cells();
    std::vector<double> M(n * n, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        double row = 0.0;
        for (std::size_t k = 0; k < n; ++k) {
            const double v = forward_.at(t)[i * n + k] * backward_.at(t)[k * n + i];
            M[i * n + k] = v;
            row += v;
        }
        if (row > 0.0)
            for (std::size_t k = 0; k < n; ++k) M[i * n + k] /= row;
    }
    return M;
}

DiscretePathMeasure::BridgeMessages DiscretePathMeasure::bridge_messages() const {
    const std::size_t n = n_cells();
    const std::size_t T = n_steps();
    BridgeMessages msg;
    msg.matrices.assign(T + 1, {});
    msg.log_scale.assign(T + 1, 0.0);
    msg.matrices[T].assign(n * n, 0.0);
    for (std::size_t k = 0; k < n; ++k) msg.matrices[T][k * n + k] = 1.0;
    for (std::size_t t = T; t-- > 0;) {
        std::vector<double> scaled = msg.matrices[t + 1];
        const std::vector<double> a = exp_of(log_a_[t + 1]);
        for (std::size_t l = 0; l < n; ++l)
            for (std::size_t j = 0; j < n; ++j) scaled[l * n + j] *= a[l];
        matmul(reference_->kernels[t], scaled, msg.matrices[t], n);
        msg.log_scale[t] = msg.log_scale[t + 1] + normalise_scale(msg.matrices[t]);
    }
    return msg;
}

// ---------------------------------------------------------------------------
// Projections
// ---------------------------------------------------------------------------

namespace {

// log(target/current) update shared by both projection kinds.
void scale_in_log_domain(std::vector<double>& log_weight,
                         const std::vector<double>& current,
                         const std::vector<double>& target, const char* what) {
    for (std::size_t k = 0; k < target.size(); ++k) {
        if (target[k] > 0.0) {
            if (!(current[k] > 0.0))
                throw InfeasibleError(std::string(what) +
                                      ": target charges a zero-mass cell");
            log_weight[k] += std::log(target[k]) - std::log(current[k]);
        } else {
            log_weight[k] = kNegInf;
        }
    }
}

}  // namespace

DiscretePathMeasure project_marginal(const DiscretePathMeasure& m, std::size_t t,
                                     const std::vector<double>& mu) {
    check_law(mu, m.n_cells(), "project_marginal target");
    const std::vector<double> current = m.marginal(t);
    DiscretePathMeasure out = m;
    std::vector<double> log_a = m.log_potential(t);
    scale_in_log_domain(log_a, current, mu, "project_marginal");
    out.set_log_potential(t, std::move(log_a));
    return out;
}

DiscretePathMeasure project_endpoints(const DiscretePathMeasure& m,
                                      const std::vector<double>& pi) {
    check_law(pi, m.n_cells() * m.n_cells(), "project_endpoints target");
    const std::vector<double> current = m.endpoint_law();
    DiscretePathMeasure out = m;
    std::vector<double> log_w = m.log_endpoint_weight();
    scale_in_log_domain(log_w, current, pi, "project_endpoints");
    out.set_log_endpoint_weight(std::move(log_w));
    return out;
}

// ---------------------------------------------------------------------------
// IPFP
// ---------------------------------------------------------------------------

std::pair<DiscretePathMeasure, SolveDiagnostics> solve_ipfp(const DiscreteBSProblem& p) {
    p.validate();
    DiscretePathMeasure m(p.reference);
    SolveDiagnostics diag;

    std::vector<std::size_t> constraint_times;
    for (const auto& [t, mu] : p.marginal_targets) constraint_times.push_back(t);
    std::sort(constraint_times.begin(), constraint_times.end());

    for (int sweep = 1; sweep <= p.max_sweeps; ++sweep) {
        m = project_endpoints(m, p.endpoint_coupling);
        for (std::size_t t : constraint_times)
            m = project_marginal(m, t, p.marginal_targets.at(t));

        double residual = total_variation(m.endpoint_law(), p.endpoint_coupling);
        for (std::size_t t : constraint_times)
            residual = std::max(residual,
                                total_variation(m.marginal(t), p.marginal_targets.at(t)));

        diag.sweeps = sweep;
        diag.residual_history.push_back(residual);
        diag.entropy_history.push_back(path_measure_entropy(m).total.value);
        if (residual < p.tolerance) {
            diag.converged = true;
            break;
        }
    }
    return {std::move(m), std::move(diag)};
}

// ---------------------------------------------------------------------------
// Path sampling
// ---------------------------------------------------------------------------

PathEnsemble sample_paths(const DiscretePathMeasure& m, std::size_t n_paths,
                          std::uint64_t seed) {
    const auto& ref = m.reference();
    const std::size_t n = m.n_cells();
    const std::size_t T = m.n_steps();

    const std::vector<double> endpoint = m.endpoint_law();  // throws if degenerate
    std::vector<double> endpoint_cdf(endpoint.size());
    double acc = 0.0;
    for (std::size_t k = 0; k < endpoint.size(); ++k) {
        acc += endpoint[k];
        endpoint_cdf[k] = acc;
    }
    endpoint_cdf.back() = 1.0;

    const auto bridge = m.bridge_messages();
    std::vector<std::vector<double>> a(T + 1);
    for (std::size_t t = 0; t <= T; ++t) a[t] = exp_of(m.log_potential(t));

    PathEnsemble ensemble(ref.times, ref.grid.geometry(), n_paths);
    ensemble.seed = seed;
    const int dim = ref.grid.geometry().dim();
    std::vector<double> step_weights(n);

    for (std::size_t path = 0; path < n_paths; ++path) {
        Rng rng(derive_stream(seed, path));
        const double u = rng.uniform();
        const auto it = std::lower_bound(endpoint_cdf.begin(), endpoint_cdf.end(), u);
        std::size_t flat = static_cast<std::size_t>(it - endpoint_cdf.begin());
        if (flat >= endpoint.size()) flat = endpoint.size() - 1;
        const std::size_t z0 = flat / n;
        const std::size_t zT = flat % n;

        std::size_t current = z0;
        double* data = ensemble.path_data(path);
        const Point start = ref.grid.center(current);
        for (int ax = 0; ax < dim; ++ax) data[ax] = start[ax];
        for (std::size_t t = 0; t < T; ++t) {
            if (t + 1 == T) {
                current = zT;
            } else {
                const std::vector<double>& K = ref.kernels[t];
                const std::vector<double>& G = bridge.matrices[t + 1];
                double total = 0.0;
                for (std::size_t l = 0; l < n; ++l) {
                    const double w = K[current * n + l] * a[t + 1][l] * G[l * n + zT];
                    total += w;
                    step_weights[l] = total;
                }
                if (!(total > 0.0))
                    throw NumericalFailureError("sample_paths: dead transition row");
                const double draw = rng.uniform() * total;
                const auto pos =
                    std::lower_bound(step_weights.begin(), step_weights.end(), draw);
                current = std::min<std::size_t>(
                    static_cast<std::size_t>(pos - step_weights.begin()), n - 1);
            }
            const Point x = ref.grid.center(current);
            for (int ax = 0; ax < dim; ++ax) data[(t + 1) * dim + ax] = x[ax];
        }
    }
    return ensemble;
}

// ---------------------------------------------------------------------------
// Candidate bound
// ---------------------------------------------------------------------------

EntropyReport discrete_candidate_bound(const DiscreteBSProblem& p) {
    p.validate();
    const auto& ref = *p.reference;
    const std::size_t n = ref.n_cells();
    const std::size_t T = ref.n_steps();
    const auto mid_opt = ref.times.index_of(0.5);
    if (!mid_opt)
        throw ConfigError("discrete_candidate_bound: grid must contain t = 1/2");
    const std::size_t mid = *mid_opt;

    std::vector<double> mid_target(n, 1.0 / static_cast<double>(n));
    if (auto it = p.marginal_targets.find(mid); it != p.marginal_targets.end())
        mid_target = it->second;

    // Propagators 0 -> mid, mid -> T.
    std::vector<double> B1(n * n, 0.0), B2(n * n, 0.0), tmp;
    for (std::size_t i = 0; i < n; ++i) B1[i * n + i] = 1.0;
    for (std::size_t t = 0; t < mid; ++t) {
        matmul(B1, ref.kernels[t], tmp, n);
        B1.swap(tmp);
    }
    for (std::size_t i = 0; i < n; ++i) B2[i * n + i] = 1.0;
    for (std::size_t t = mid; t < T; ++t) {
        matmul(B2, ref.kernels[t], tmp, n);
        B2.swap(tmp);
    }
    std::vector<double> B;
    matmul(B1, B2, B, n);

    // Endpoint term H(pi | R_{0T}).
    double endpoint = 0.0;
    bool infinite = false;
    for (std::size_t i = 0; i < n && !infinite; ++i)
        for (std::size_t j = 0; j < n; ++j) {
            const double mass = p.endpoint_coupling[i * n + j];
            if (mass <= 0.0) continue;
            const double r01 = ref.initial_law[i] * B[i * n + j];
            if (!(r01 > 0.0)) {
                infinite = true;
                break;
            }
            endpoint += mass * std::log(mass / r01);
        }

    // Conditional term: pi-average of H(mid target | discrete bridge law).
    double conditional = 0.0;
    for (std::size_t i = 0; i < n && !infinite; ++i)
        for (std::size_t j = 0; j < n; ++j) {
            const double mass = p.endpoint_coupling[i * n + j];
            if (mass <= 0.0) continue;
            const double denom = B[i * n + j];
            double h = 0.0;
            for (std::size_t k = 0; k < n; ++k) {
                if (mid_target[k] <= 0.0) continue;
                const double bridge = B1[i * n + k] * B2[k * n + j] / denom;
                if (!(bridge > 0.0)) {
                    infinite = true;
                    break;
                }
                h += mid_target[k] * std::log(mid_target[k] / bridge);
            }
            conditional += mass * h;
            if (infinite) break;
        }

    EntropyReport report;
    if (infinite) {
        report.total = Entropy::infinity();
        return report;
    }
    report.endpoint_term = endpoint;
    report.conditional_term = conditional;
    report.total = Entropy::finite(endpoint + conditional);
    return report;
}

}  // namespace bslab
