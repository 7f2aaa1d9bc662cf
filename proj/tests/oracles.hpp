// Independent oracles used by the test suites: direct path enumeration for
// entropies of factorised measures, and a projected-gradient minimiser over
// the constraint polytope. Both deliberately avoid the message-passing and
// scaling machinery of the library.
#ifndef BSLAB_TESTS_ORACLES_HPP
#define BSLAB_TESTS_ORACLES_HPP

#include <cmath>
#include <cstddef>
#include <map>
#include <stdexcept>
#include <vector>

#include "bslab/solver.hpp"

namespace bslab::oracles {

struct EnumeratedEntropy {
    double total = 0.0;
    double initial = 0.0;
    double conditional = 0.0;
};

inline std::size_t path_count(std::size_t n, std::size_t T) {
    std::size_t count = 1;
    for (std::size_t t = 0; t <= T; ++t) count *= n;
    return count;
}

inline std::vector<std::size_t> decode_path(std::size_t code, std::size_t n,
                                            std::size_t T) {
    std::vector<std::size_t> z(T + 1);
    for (std::size_t t = 0; t <= T; ++t) {
        z[t] = code % n;
        code /= n;
    }
    return z;
}

/// Reference probability of one enumerated path.
inline double reference_path_prob(const ReferenceChain& ref,
                                  const std::vector<std::size_t>& z) {
    const std::size_t n = ref.n_cells();
    double p = ref.initial_law[z[0]];
    for (std::size_t t = 0; t + 1 < z.size(); ++t)
        p *= ref.kernels[t][z[t] * n + z[t + 1]];
    return p;
}

/// Entropy of the measure r(z) w(z0,zT) prod_t a_t(z_t) / Z by enumeration,
/// with its chain-rule split into initial and conditional terms.
inline EnumeratedEntropy brute_force_entropy(
    const ReferenceChain& ref, const std::vector<double>& log_w,
    const std::vector<std::vector<double>>& log_a) {
    const std::size_t n = ref.n_cells();
    const std::size_t T = ref.n_steps();
    const std::size_t P = path_count(n, T);

    std::vector<double> q(P), r(P);
    double z_total = 0.0;
    for (std::size_t code = 0; code < P; ++code) {
        const auto z = decode_path(code, n, T);
        double logdens = log_w[z[0] * n + z[T]];
        for (std::size_t t = 0; t <= T; ++t) logdens += log_a[t][z[t]];
        r[code] = reference_path_prob(ref, z);
        q[code] = r[code] * std::exp(logdens);
        z_total += q[code];
    }
    for (double& v : q) v /= z_total;

    EnumeratedEntropy out;
    std::vector<double> q0(n, 0.0);
    for (std::size_t code = 0; code < P; ++code)
        q0[decode_path(code, n, T)[0]] += q[code];
    for (std::size_t code = 0; code < P; ++code)
        if (q[code] > 0.0) out.total += q[code] * std::log(q[code] / r[code]);
    for (std::size_t i = 0; i < n; ++i)
        if (q0[i] > 0.0) out.initial += q0[i] * std::log(q0[i] / ref.initial_law[i]);
    // conditional: sum_i q0(i) H(Q^i | R^i) by restricting the enumeration.
    for (std::size_t code = 0; code < P; ++code) {
        if (q[code] <= 0.0) continue;
        const auto z = decode_path(code, n, T);
        const double qi = q[code] / q0[z[0]];
        const double ri = r[code] / ref.initial_law[z[0]];
        out.conditional += q0[z[0]] * qi * std::log(qi / ri);
    }
    return out;
}

/// Minimise sum q log(q/r) over the polytope {q >= 0, sum q = 1,
/// marginals at the given times, endpoint pairs} by projected gradient
/// descent on the path probabilities. Targets must be strictly positive so
/// the product start point is interior.
inline double brute_force_min_entropy(
    const ReferenceChain& ref,
    const std::map<std::size_t, std::vector<double>>& marginal_targets,
    const std::vector<double>& endpoint_coupling, int iterations = 5000) {
    const std::size_t n = ref.n_cells();
    const std::size_t T = ref.n_steps();
    const std::size_t P = path_count(n, T);

    // Constraint matrix rows: one per (t, cell), then one per endpoint pair,
    // then total mass.
    std::vector<std::vector<double>> A;
    std::vector<double> b;
    for (const auto& [t, mu] : marginal_targets) {
        for (std::size_t k = 0; k < n; ++k) {
            std::vector<double> row(P, 0.0);
            for (std::size_t code = 0; code < P; ++code)
                if (decode_path(code, n, T)[t] == k) row[code] = 1.0;
            A.push_back(std::move(row));
            b.push_back(mu[k]);
        }
    }
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) {
            std::vector<double> row(P, 0.0);
            for (std::size_t code = 0; code < P; ++code) {
                const auto z = decode_path(code, n, T);
                if (z[0] == i && z[T] == j) row[code] = 1.0;
            }
            A.push_back(std::move(row));
            b.push_back(endpoint_coupling[i * n + j]);
        }
    {
        A.push_back(std::vector<double>(P, 1.0));
        b.push_back(1.0);
    }
    const std::size_t R = A.size();

    // (A A^T + ridge I)^{-1} by Gauss-Jordan.
    std::vector<double> gram(R * R, 0.0);
    for (std::size_t r1 = 0; r1 < R; ++r1)
        for (std::size_t r2 = 0; r2 < R; ++r2) {
            double s = 0.0;
            for (std::size_t p = 0; p < P; ++p) s += A[r1][p] * A[r2][p];
            gram[r1 * R + r2] = s;
        }
    for (std::size_t r = 0; r < R; ++r) gram[r * R + r] += 1e-12;
    std::vector<double> inv(R * R, 0.0);
    for (std::size_t r = 0; r < R; ++r) inv[r * R + r] = 1.0;
    for (std::size_t col = 0; col < R; ++col) {
        std::size_t pivot = col;
        for (std::size_t r = col + 1; r < R; ++r)
            if (std::abs(gram[r * R + col]) > std::abs(gram[pivot * R + col])) pivot = r;
        for (std::size_t c = 0; c < R; ++c) {
            std::swap(gram[col * R + c], gram[pivot * R + c]);
            std::swap(inv[col * R + c], inv[pivot * R + c]);
        }
        const double d = gram[col * R + col];
        for (std::size_t c = 0; c < R; ++c) {
            gram[col * R + c] /= d;
            inv[col * R + c] /= d;
        }
        for (std::size_t r = 0; r < R; ++r) {
            if (r == col) continue;
            const double f = gram[r * R + col];
            if (f == 0.0) continue;
            for (std::size_t c = 0; c < R; ++c) {
                gram[r * R + c] -= f * gram[col * R + c];
                inv[r * R + c] -= f * inv[col * R + c];
            }
        }
    }

    auto project_to_null_space = [&](std::vector<double>& v) {
        std::vector<double> av(R, 0.0);
        for (std::size_t r = 0; r < R; ++r)
            for (std::size_t p = 0; p < P; ++p) av[r] += A[r][p] * v[p];
        std::vector<double> lam(R, 0.0);
        for (std::size_t r1 = 0; r1 < R; ++r1)
            for (std::size_t r2 = 0; r2 < R; ++r2) lam[r1] += inv[r1 * R + r2] * av[r2];
        for (std::size_t p = 0; p < P; ++p)
            for (std::size_t r = 0; r < R; ++r) v[p] -= A[r][p] * lam[r];
    };

    // Pull a point back onto {A q = b}; counters the drift the ridge in the
    // gram inverse would otherwise accumulate.
    auto project_to_affine = [&](std::vector<double>& v) {
        std::vector<double> residual(R, 0.0);
        for (std::size_t r = 0; r < R; ++r) {
            double s = -b[r];
            for (std::size_t p = 0; p < P; ++p) s += A[r][p] * v[p];
            residual[r] = s;
        }
        std::vector<double> lam(R, 0.0);
        for (std::size_t r1 = 0; r1 < R; ++r1)
            for (std::size_t r2 = 0; r2 < R; ++r2)
                lam[r1] += inv[r1 * R + r2] * residual[r2];
        for (std::size_t p = 0; p < P; ++p)
            for (std::size_t r = 0; r < R; ++r) v[p] -= A[r][p] * lam[r];
    };

    // Interior feasible start: product of the target laws (uniform at
    // unconstrained interior times).
    std::vector<double> q(P);
    for (std::size_t code = 0; code < P; ++code) {
        const auto z = decode_path(code, n, T);
        double mass = endpoint_coupling[z[0] * n + z[T]];
        for (std::size_t t = 1; t < T; ++t) {
            const auto it = marginal_targets.find(t);
            mass *= (it != marginal_targets.end()) ? it->second[z[t]]
                                                   : 1.0 / static_cast<double>(n);
        }
        q[code] = mass;
        if (!(mass > 0.0))
            throw std::invalid_argument("brute_force_min_entropy: needs interior start");
    }

    std::vector<double> r(P);
    for (std::size_t code = 0; code < P; ++code)
        r[code] = reference_path_prob(ref, decode_path(code, n, T));

    auto objective = [&](const std::vector<double>& x) {
        double f = 0.0;
        for (std::size_t p = 0; p < P; ++p)
            if (x[p] > 0.0) f += x[p] * std::log(x[p] / r[p]);
        return f;
    };

    // Gauss-Jordan solve of a small dense system (destroys its inputs).
    auto solve_small = [R](std::vector<double> M, std::vector<double> rhs) {
        for (std::size_t col = 0; col < R; ++col) {
            std::size_t pivot = col;
            for (std::size_t rr = col + 1; rr < R; ++rr)
                if (std::abs(M[rr * R + col]) > std::abs(M[pivot * R + col])) pivot = rr;
            for (std::size_t c = 0; c < R; ++c) std::swap(M[col * R + c], M[pivot * R + c]);
            std::swap(rhs[col], rhs[pivot]);
            const double d = M[col * R + col];
            for (std::size_t c = 0; c < R; ++c) M[col * R + c] /= d;
            rhs[col] /= d;
            for (std::size_t rr = 0; rr < R; ++rr) {
                if (rr == col) continue;
                const double f = M[rr * R + col];
                if (f == 0.0) continue;
                for (std::size_t c = 0; c < R; ++c) M[rr * R + c] -= f * M[col * R + c];
                rhs[rr] -= f * rhs[col];
            }
        }
        return rhs;
    };

    double step = 1.0;
    double f_current = objective(q);
    std::vector<double> grad(P), direction(P), trial(P);
    for (int it = 0; it < iterations; ++it) {
        for (std::size_t p = 0; p < P; ++p) grad[p] = std::log(q[p] / r[p]) + 1.0;
        // Affine-scaled (projected Newton) direction: d = Q (grad - A^T lam)
        // with (A Q A^T) lam = A Q grad, Q = diag(q); then A d = 0.
        std::vector<double> weighted_gram(R * R, 0.0), rhs(R, 0.0);
        for (std::size_t r1 = 0; r1 < R; ++r1)
            for (std::size_t p = 0; p < P; ++p) {
                const double aq = A[r1][p] * q[p];
                rhs[r1] += aq * grad[p];
                for (std::size_t r2 = r1; r2 < R; ++r2)
                    weighted_gram[r1 * R + r2] += aq * A[r2][p];
            }
        for (std::size_t r1 = 0; r1 < R; ++r1)
            for (std::size_t r2 = 0; r2 < r1; ++r2)
                weighted_gram[r1 * R + r2] = weighted_gram[r2 * R + r1];
        for (std::size_t rr = 0; rr < R; ++rr) weighted_gram[rr * R + rr] += 1e-13;
        const std::vector<double> lam = solve_small(weighted_gram, rhs);
        double decrement = 0.0;
        for (std::size_t p = 0; p < P; ++p) {
            double residual = grad[p];
            for (std::size_t rr = 0; rr < R; ++rr) residual -= A[rr][p] * lam[rr];
            direction[p] = q[p] * residual;
            decrement += grad[p] * direction[p];
        }
        if (decrement < 1e-20) break;
        bool moved = false;
        while (step > 1e-18) {
            bool positive = true;
            for (std::size_t p = 0; p < P; ++p) {
                trial[p] = q[p] - step * direction[p];
                if (trial[p] <= 0.0) {
                    positive = false;
                    break;
                }
            }
            if (positive) {
                const double f_trial = objective(trial);
                if (f_trial <= f_current - 1e-4 * step * decrement) {
                    q.swap(trial);
                    f_current = f_trial;
                    step = std::min(step * 2.0, 1.0);
                    moved = true;
                    break;
                }
            }
            step *= 0.5;
        }
        if (!moved) break;
        if (it % 16 == 15) project_to_affine(q);  // drain ridge drift
    }
    project_to_affine(q);
    return objective(q);
}

}  // namespace bslab::oracles

#endif  // BSLAB_TESTS_ORACLES_HPP
