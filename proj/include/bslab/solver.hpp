#ifndef BSLAB_SOLVER_HPP
#define BSLAB_SOLVER_HPP

#include <map>
#include <memory>
#include <vector>

#include "bslab/entropy.hpp"
#include "bslab/grid.hpp"
#include "bslab/sampling.hpp"

namespace bslab {

/// Reference Markov chain on a space-time grid: initial law plus one
/// row-stochastic transition matrix per time step.
struct ReferenceChain {
    SpatialGrid grid;
    TimeGrid times;
    std::vector<double> initial_law;             // N, sums to 1
    std::vector<std::vector<double>> kernels;    // T matrices, N*N row-major

    std::size_t n_cells() const { return grid.n_cells(); }
    std::size_t n_steps() const { return times.size() - 1; }
    void validate() const;
};

/// Cell-averaged heat-kernel transition matrices (tensorised across axes)
/// with the uniform initial law. Rows sum to one to 1e-12 and the matrices
/// are symmetric, so the uniform law is reversible for them.
ReferenceChain discretize_reference(const FlatGeometry& g,
                                    const std::vector<int>& cells_per_axis,
                                    const TimeGrid& times,
                                    const HeatKernelParams& params = {});

/// Discretised entropy-minimisation problem: marginal targets on a subset of
/// grid times plus an endpoint-pair target.
struct DiscreteBSProblem {
    std::shared_ptr<const ReferenceChain> reference;
    std::map<std::size_t, std::vector<double>> marginal_targets;  // time index -> law
    std::vector<double> endpoint_coupling;                        // N*N, sums to 1
    double tolerance = 1e-8;
    int max_sweeps = 500;

    void validate() const;
};

/// Factorised Markov representation of a path measure absolutely continuous
/// with respect to a reference chain:
///   dQ/dR  proportional to  w(z_0, z_T) * prod_t a_t(z_t),
/// held in log domain. Forward/backward message matrices are cached and
/// rebuilt when potentials change.
class DiscretePathMeasure {
public:
    explicit DiscretePathMeasure(std::shared_ptr<const ReferenceChain> reference);

    const ReferenceChain& reference() const { return *reference_; }
    std::size_t n_cells() const { return reference_->n_cells(); }
    std::size_t n_steps() const { return reference_->n_steps(); }

    /// log w over endpoint pairs (N*N); -inf marks killed pairs.
    const std::vector<double>& log_endpoint_weight() const { return log_w_; }
    /// log a_t over cells; -inf marks killed cells.
    const std::vector<double>& log_potential(std::size_t t) const;

    void set_log_endpoint_weight(std::vector<double> log_w);
    void set_log_potential(std::size_t t, std::vector<double> log_a);

    /// Time-t cell law of the measure.
    std::vector<double> marginal(std::size_t t) const;
    /// Endpoint pair law (N*N).
    std::vector<double> endpoint_law() const;
    /// log of the normalising constant Z = E_R[w prod a].
    double log_partition() const;

    /// Marginal law of the conditional measure given the starting cell:
    /// P(z_t = k | z_0 = i), as an N*N matrix indexed (i, k).
    std::vector<double> conditional_marginal_given_start(std::size_t t) const;

    /// Backward messages without the endpoint weight, used for conditional
    /// path sampling: G_t(k, j) = sum over futures from (t, k) to z_T = j.
    /// Returned per time with a log scale factor per matrix.
    struct BridgeMessages {
        std::vector<std::vector<double>> matrices;  // T+1 of N*N
        std::vector<double> log_scale;
    };
    BridgeMessages bridge_messages() const;

private:
    void rebuild_messages() const;

    std::shared_ptr<const ReferenceChain> reference_;
    std::vector<double> log_w_;
    std::vector<std::vector<double>> log_a_;

    // caches (rebuilt lazily)
    mutable bool messages_valid_ = false;
    mutable std::vector<std::vector<double>> forward_;   // Phi_t (i,k)
    mutable std::vector<double> forward_log_scale_;
    mutable std::vector<std::vector<double>> backward_;  // H_t (k,i)
    mutable std::vector<double> backward_log_scale_;
    mutable double log_z_ = 0.0;
};

/// I-projection onto {Q : Q_t = mu}: multiplies a_t cellwise by mu / Q_t
/// (0/0 -> 0). Throws InfeasibleError when mu charges a cell with Q_t = 0.
DiscretePathMeasure project_marginal(const DiscretePathMeasure& m, std::size_t t,
                                     const std::vector<double>& mu);

/// I-projection onto {Q : Q_{0T} = pi} by endpoint-weight scaling.
DiscretePathMeasure project_endpoints(const DiscretePathMeasure& m,
                                      const std::vector<double>& pi);

struct SolveDiagnostics {
    int sweeps = 0;
    bool converged = false;
    std::vector<double> residual_history;  // max TV over constraints, per sweep
    std::vector<double> entropy_history;   // H(Q|R) per sweep
};

/// Cyclic I-projections: endpoints first, then marginal constraints in
/// increasing time, until the max constraint residual falls below tolerance
/// or the sweep budget is exhausted. Non-convergence is reported in the
/// diagnostics, not thrown.
std::pair<DiscretePathMeasure, SolveDiagnostics> solve_ipfp(const DiscreteBSProblem& p);

/// Forward sampling of cell paths (mapped to cell centres) from the measure.
PathEnsemble sample_paths(const DiscretePathMeasure& m, std::size_t n_paths,
                          std::uint64_t seed);

/// Entropy of the discrete glued-bridge candidate for the problem's endpoint
/// coupling and mid-time marginal target: H(pi | R_{0T}) plus the pi-average
/// of H(mu_mid | discrete bridge law). An upper bound for the converged
/// entropy whenever the candidate is feasible.
EntropyReport discrete_candidate_bound(const DiscreteBSProblem& p);

}  // namespace bslab

#endif  // BSLAB_SOLVER_HPP
