#pragma once

#include "fmdp/basis.hpp"
#include "fmdp/model.hpp"
#include "fmdp/rng.hpp"

#include <cstdint>
#include <optional>
#include <vector>

namespace fmdp {

struct PlannerConfig {
    /// Target accuracy; iteration stops when ||w_{t+1} - w_t||_inf <= epsilon (1 - gamma).
    double epsilon = 0.1;
    /// Failure probability used by the sample-size formula.
    double delta = 0.1;
    std::optional<std::size_t> n1_override;
    /// Use every state of the space exactly once instead of sampling.
    bool exhaustive = false;
    std::size_t max_iters = 10000;
    /// Multiplier c_s in N1 = c_s m^2 / eps^2 ln(m / delta).
    double sample_constant = 1.0;
    std::uint64_t seed = 0;
    Normalization scheme = Normalization::global;

    /// Throws ConfigError on out-of-range fields.
    void check() const;
};

struct PlannerResult {
    WeightVector weights;
    std::size_t iterations = 0;
    /// Last ||w_{t+1} - w_t||_inf.
    double residual = 0.0;
    bool converged = false;
    std::size_t num_samples = 0;
    /// Residual after every iteration, in order.
    std::vector<double> residuals;
};

/// N1 for the given space and config (before any exhaustive override).
std::size_t sample_size(const VariableSpace& space, const PlannerConfig& config);

/// N1 i.i.d. uniform states (duplicates kept), or all states in index order
/// when config.exhaustive is set or the sample-size formula reaches the
/// joint size without an override.
std::vector<StateAssignment> sample_states(const VariableSpace& space,
                                           const PlannerConfig& config, Rng& rng);

/// r(x, a) + gamma sum_k w_k E[h_k | x, a]
double q_value(const FmdpSpec& model, const BasisSet& basis, const WeightVector& w,
               std::span<const int> x, Action a);

/// max_a q_value(model, basis, w, x, a)
double backup_state(const FmdpSpec& model, const BasisSet& basis, const WeightVector& w,
                    std::span<const int> x);

/// One approximate value iteration step on the projection's sample.
WeightVector avi_iterate(const FmdpSpec& model, const BasisSet& basis,
                         const ProjectionOnSample& proj, const WeightVector& w);

/// Expected next-step features and rewards on a fixed sample. Both are
/// independent of the weights, so one table serves every AVI iteration.
class SampledBackup {
public:
    SampledBackup(const FmdpSpec& model, const BasisSet& basis,
                  const std::vector<StateAssignment>& states);

    /// Vector of max_a (r_a + gamma E_a w) over the sample.
    Eigen::VectorXd backup(const WeightVector& w) const;

private:
    double gamma_;
    /// Per action: N1 x K matrix of E[h_k | x_s, a].
    std::vector<Eigen::MatrixXd> expected_features_;
    /// Per action: N1 rewards.
    std::vector<Eigen::VectorXd> rewards_;
};

/// Factored value iteration from w0 (zero unless given) on a freshly drawn sample.
PlannerResult solve(const FmdpSpec& model, const BasisSet& basis, const PlannerConfig& config,
                    const std::optional<WeightVector>& warm_start = std::nullopt);

/// Same, reusing an already built projection.
PlannerResult solve(const FmdpSpec& model, const BasisSet& basis,
                    const ProjectionOnSample& proj, const PlannerConfig& config,
                    const std::optional<WeightVector>& warm_start = std::nullopt);

} // namespace fmdp
