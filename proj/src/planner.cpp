#include "fmdp/planner.hpp"
#include "fmdp/errors.hpp"
#include "fmdp/theory.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace fmdp {

void PlannerConfig::check() const {
    if (!(epsilon > 0.0))
        throw ConfigError("planner epsilon must be positive");
    if (!(delta > 0.0 && delta < 1.0))
        throw ConfigError("planner delta must lie in (0, 1)");
    if (max_iters < 1)
        throw ConfigError("planner max_iters must be at least 1");
    if (!(sample_constant > 0.0))
        throw ConfigError("sample constant must be positive");
    if (n1_override && *n1_override == 0)
        throw ConfigError("sample size N1 must be positive");
}

namespace {

double formula_sample_size(const VariableSpace& space, const PlannerConfig& config) {
    const double m = static_cast<double>(space.num_variables());
    return std::ceil(config.sample_constant * m * m / (config.epsilon * config.epsilon) *
                     std::log(m / config.delta));
}

std::vector<StateAssignment> all_states(const VariableSpace& space) {
    std::vector<StateAssignment> states;
    const auto n = space.joint_size();
    states.reserve(static_cast<std::size_t>(n));
    for (StateIndex s = 0; s < n; ++s)
        states.push_back(space.state_at(s));
    return states;
}

} // namespace

std::size_t sample_size(const VariableSpace& space, const PlannerConfig& config) {
    config.check();
    if (config.n1_override)
        return *config.n1_override;
    const double n = static_cast<double>(space.joint_size());
    const auto size = static_cast<std::size_t>(std::min(n, formula_sample_size(space, config)));
    if (size == 0)
        throw ConfigError("sample size N1 evaluated to zero");
    return size;
}

std::vector<StateAssignment> sample_states(const VariableSpace& space,
                                           const PlannerConfig& config, Rng& rng) {
    config.check();
    // When the formula asks for at least every state, N1 i.i.d. draws would
    // still miss about a third of them; enumerate instead.
    if (config.exhaustive ||
        (!config.n1_override &&
         formula_sample_size(space, config) >= static_cast<double>(space.joint_size())))
        return all_states(space);
    const auto n1 = sample_size(space, config);
    std::vector<StateAssignment> states;
    states.reserve(n1);
    StateAssignment x(space.num_variables());
    for (std::size_t s = 0; s < n1; ++s) {
        for (std::size_t i = 0; i < x.size(); ++i)
            x[i] = std::uniform_int_distribution<int>(0, space.size(i) - 1)(rng);
        states.push_back(x);
    }
    return states;
}

double q_value(const FmdpSpec& model, const BasisSet& basis, const WeightVector& w,
               std::span<const int> x, Action a) {
    double future = 0.0;
    for (std::size_t k = 0; k < basis.size(); ++k) {
        const double wk = w[static_cast<Eigen::Index>(k)];
        if (wk != 0.0)
            future += wk * expected_local_value(model, x, a, basis.functions[k]);
    }
    return reward(model, x, a) + model.gamma * future;
}

double backup_state(const FmdpSpec& model, const BasisSet& basis, const WeightVector& w,
                    std::span<const int> x) {
    double best = -std::numeric_limits<double>::infinity();
    for (Action a = 0; a < model.num_actions; ++a)
        best = std::max(best, q_value(model, basis, w, x, a));
    return best;
}

WeightVector avi_iterate(const FmdpSpec& model, const BasisSet& basis,
                         const ProjectionOnSample& proj, const WeightVector& w) {
    Eigen::VectorXd v(static_cast<Eigen::Index>(proj.num_samples()));
    for (std::size_t s = 0; s < proj.num_samples(); ++s)
        v[static_cast<Eigen::Index>(s)] = backup_state(model, basis, w, proj.states[s]);
    return project(proj, v);
}

SampledBackup::SampledBackup(const FmdpSpec& model, const BasisSet& basis,
                             const std::vector<StateAssignment>& states)
    : gamma_(model.gamma) {
    const auto n1 = static_cast<Eigen::Index>(states.size());
    const auto k = static_cast<Eigen::Index>(basis.size());
    expected_features_.assign(model.num_actions, Eigen::MatrixXd(n1, k));
    rewards_.assign(model.num_actions, Eigen::VectorXd(n1));
    for (Action a = 0; a < model.num_actions; ++a)
        for (Eigen::Index s = 0; s < n1; ++s) {
            const auto& x = states[static_cast<std::size_t>(s)];
            rewards_[a][s] = reward(model, x, a);
            for (Eigen::Index c = 0; c < k; ++c)
                expected_features_[a](s, c) =
                    expected_local_value(model, x, a, basis.functions[static_cast<std::size_t>(c)]);
        }
}

Eigen::VectorXd SampledBackup::backup(const WeightVector& w) const {
    Eigen::VectorXd best = rewards_[0] + gamma_ * (expected_features_[0] * w);
    for (std::size_t a = 1; a < rewards_.size(); ++a)
        best = best.cwiseMax(rewards_[a] + gamma_ * (expected_features_[a] * w));
    return best;
}

PlannerResult solve(const FmdpSpec& model, const BasisSet& basis, const PlannerConfig& config,
                    const std::optional<WeightVector>& warm_start) {
    config.check();
    auto rng = make_stream(config.seed, Stream::planner);
    auto proj = build_projection(basis, model.space, sample_states(model.space, config, rng),
                                 config.scheme);
    return solve(model, basis, proj, config, warm_start);
}

PlannerResult solve(const FmdpSpec& model, const BasisSet& basis,
                    const ProjectionOnSample& proj, const PlannerConfig& config,
                    const std::optional<WeightVector>& warm_start) {
    config.check();
    const auto k = static_cast<Eigen::Index>(basis.size());
    WeightVector w = warm_start ? *warm_start : WeightVector::Zero(k);
    if (w.size() != k)
        throw ConfigError("warm-start weight vector has " + std::to_string(w.size()) +
                          " entries, basis has " + std::to_string(k));

    const SampledBackup backup(model, basis, proj.states);
    const double stop = config.epsilon * (1.0 - model.gamma);
    const double blowup = 1e6 * v0_bound(std::max(max_reward_sum(model), 1.0), model.gamma);

    PlannerResult result;
    result.num_samples = proj.num_samples();
    for (std::size_t it = 0; it < config.max_iters; ++it) {
        WeightVector next = proj.projection * backup.backup(w);
        const double residual = (next - w).cwiseAbs().maxCoeff();
        w = std::move(next);
        result.iterations = it + 1;
        result.residual = residual;
        result.residuals.push_back(residual);
        if (!std::isfinite(residual) || residual > blowup)
            throw NonConvergenceError("planner residual " + std::to_string(residual) +
                                      " exceeds divergence bound after " +
                                      std::to_string(it + 1) + " iterations");
        if (residual <= stop) {
            result.converged = true;
            break;
        }
    }
    result.weights = std::move(w);
    return result;
}

} // namespace fmdp
