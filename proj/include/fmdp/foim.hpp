#pragma once

#include "fmdp/basis.hpp"
#include "fmdp/environment.hpp"
#include "fmdp/model.hpp"
#include "fmdp/planner.hpp"

#include <json.hpp>

#include <cstdint>
#include <optional>
#include <vector>

namespace fmdp {

/// A base model extended with the garden-of-Eden value x_E, appended as the
/// last value of every variable.
struct GoeSpec {
    FmdpSpec base;
    /// Augmented space; transitions hold the initial (all fake experience)
    /// learner model, rewards are the base factors (0 at x_E) followed by one
    /// R'_i per variable.
    FmdpSpec augmented;
    /// Base basis extended with 0 at x_E, followed by one x_E indicator per variable.
    BasisSet basis;
    double r_e = 0.0;

    int goe_value(std::size_t var) const { return base.space.size(var); }
    bool is_goe(std::span<const int> x) const;
};

GoeSpec goe_augment(const FmdpSpec& base, const BasisSet& basis, double r_e);

/// The true dynamics on the augmented space: rows with real parents keep their
/// distribution (no mass on x_E), rows with an x_E parent are absorbing at x_E.
FmdpSpec augment_true_model(const GoeSpec& goe);

/// Visit and transition counts per (factor, parent row, action) over the
/// augmented space, seeded with one fake transition to x_E each.
class CountsModel {
public:
    CountsModel() = default;
    /// All counts at their initial values: VisitCount 1, TransitionCount(x_E) 1.
    explicit CountsModel(const GoeSpec& goe);

    /// Records a real transition x -a-> y (base-space states). Throws
    /// ContractError if either contains x_E.
    void observe(std::span<const int> x, Action a, std::span<const int> y);

    std::uint64_t visit_count(std::size_t factor, Action a, std::size_t row) const {
        return visits_[factor][a][row];
    }
    std::uint64_t transition_count(std::size_t factor, Action a, std::size_t row,
                                   std::size_t y) const {
        return transitions_[factor][a][row * outcomes_[factor] + y];
    }
    /// VisitCount - 1: the number of real observations of the component.
    std::uint64_t real_visits(std::size_t factor, Action a, std::size_t row) const {
        return visit_count(factor, a, row) - 1;
    }
    /// Row index of x[parents_i] in the augmented space.
    std::size_t row_of(std::size_t factor, std::span<const int> x) const;
    bool is_real_row(std::size_t factor, std::size_t row) const;

    std::size_t num_factors() const { return visits_.size(); }
    std::size_t num_actions() const { return num_actions_; }
    std::size_t num_rows(std::size_t factor) const { return visits_[factor][0].size(); }
    std::size_t num_outcomes(std::size_t factor) const { return outcomes_[factor]; }

    /// Sum of all VisitCount entries.
    std::uint64_t total_visits() const;
    /// Number of (factor, real parent row, action) components.
    std::size_t num_real_components() const;
    /// Components whose real visits reach the threshold.
    std::size_t num_known(std::uint64_t threshold) const;

    /// Learner model: every row is TransitionCount / VisitCount.
    FmdpSpec current_model(const GoeSpec& goe) const;
    /// Writes TransitionCount / VisitCount of one component into a model's table.
    void write_row(FmdpSpec& model, std::size_t factor, Action a, std::size_t row) const;

    /// Sets raw counts (checkpoint restore). Throws ContractError on shape or
    /// conservation violations.
    void restore(std::vector<std::vector<std::vector<std::uint64_t>>> visits,
                 std::vector<std::vector<std::vector<std::uint64_t>>> transitions);
    const auto& raw_visits() const { return visits_; }
    const auto& raw_transitions() const { return transitions_; }

private:
    VariableSpace base_space_;
    VariableSpace augmented_space_;
    std::vector<Scope> parents_;
    std::vector<std::size_t> outcomes_;
    std::size_t num_actions_ = 0;
    /// [factor][action][row]
    std::vector<std::vector<std::vector<std::uint64_t>>> visits_;
    /// [factor][action][row * outcomes + y]
    std::vector<std::vector<std::vector<std::uint64_t>>> transitions_;
};

inline CountsModel init_counts(const GoeSpec& goe) { return CountsModel(goe); }

/// Base-space model using the empirical row (real counts only) for every
/// component with at least `threshold` real visits, the true row elsewhere.
FmdpSpec known_state_fmdp(const FmdpSpec& true_model, const CountsModel& counts,
                          std::uint64_t threshold);

/// Greedy action under q_value; ties go to the lowest index.
Action select_action(const FmdpSpec& model, const BasisSet& basis, const WeightVector& w,
                     std::span<const int> x);

struct FoimConfig {
    double epsilon = 0.1;
    double delta = 0.1;
    /// Multiplier c in the R_E formula.
    double c_re = 1.0;
    /// Use this R_E instead of the formula.
    std::optional<double> r_e_override;
    /// Multiplier C in the known-component threshold.
    double c_kb = 1.0;
    std::size_t replan_every = 1;
    bool warm_start = true;
    PlannerConfig planner;
    std::uint64_t seed = 0;

    void check() const;
};

struct StepRecord {
    std::uint64_t t = 0;
    StateAssignment state;
    Action action = 0;
    StateAssignment next_state;
    /// For each factor i: whether (x[parents_i], a) was known before this step.
    std::vector<bool> known;
    /// Number of plans computed so far; identifies the weight vector in use.
    std::uint64_t weights_id = 0;
    /// Iterations of the plan made at this step (0 if no replanning happened).
    std::size_t planner_iterations = 0;
    /// Q of the chosen action under the learner model and current weights.
    double q_model = 0.0;
    /// Fraction of real components known after the update.
    double known_fraction = 0.0;
};

/// The FOIM learner: greedy with respect to an optimistically initialized model.
class FoimAgent {
public:
    FoimAgent(const FmdpSpec& base, const BasisSet& basis, FoimConfig config);

    const FoimConfig& config() const { return config_; }
    const GoeSpec& goe() const { return goe_; }
    const CountsModel& counts() const { return counts_; }
    const WeightVector& weights() const { return weights_; }
    std::uint64_t time() const { return t_; }
    double r_e() const { return goe_.r_e; }
    std::uint64_t known_threshold() const { return known_threshold_; }
    std::uint64_t plans() const { return plans_; }
    double known_fraction() const;

    /// Solves the current learner model, warm-started if configured.
    const PlannerResult& plan();
    /// Q of every action at x under the current learner model and weights.
    std::vector<double> q_values(std::span<const int> x) const;
    Action select(std::span<const int> x) const;
    void observe(std::span<const int> x, Action a, std::span<const int> y);

    /// One interaction step: replan when due, act greedily, observe.
    StepRecord step(Environment& env);

    nlohmann::json checkpoint() const;
    /// Rebuilds an agent from a checkpoint. Throws ConfigError on a format mismatch.
    static FoimAgent restore(const FmdpSpec& base, const BasisSet& basis,
                             const nlohmann::json& checkpoint);

private:
    FoimConfig config_;
    GoeSpec goe_;
    CountsModel counts_;
    FmdpSpec model_;
    std::optional<ProjectionOnSample> fixed_projection_;
    WeightVector weights_;
    PlannerResult last_plan_;
    Rng planner_rng_;
    std::uint64_t t_ = 0;
    std::uint64_t plans_ = 0;
    std::uint64_t known_threshold_ = 0;
    std::size_t known_ = 0;
};

} // namespace fmdp
