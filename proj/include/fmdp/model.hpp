#pragma once

#include "fmdp/space.hpp"

#include <span>
#include <string>
#include <vector>

namespace fmdp {

/// Conditional distribution P_i(y_i | x[parents], a) of one state variable.
///
/// tables[a] holds one row per parent assignment (mixed radix over the parent
/// scope), each row a distribution over the target's values, stored
/// contiguously: tables[a][row * outcomes + y].
struct TransitionFactor {
    std::size_t target = 0;
    Scope parents;
    int outcomes = 0;
    std::vector<std::vector<double>> tables;

    std::span<const double> row(Action a, std::size_t parent_row) const {
        return {tables[a].data() + parent_row * static_cast<std::size_t>(outcomes),
                static_cast<std::size_t>(outcomes)};
    }
    std::span<double> row(Action a, std::size_t parent_row) {
        return {tables[a].data() + parent_row * static_cast<std::size_t>(outcomes),
                static_cast<std::size_t>(outcomes)};
    }
    std::size_t num_rows() const {
        return tables.empty() || outcomes == 0 ? 0 : tables.front().size() / outcomes;
    }

    bool operator==(const TransitionFactor&) const = default;
};

/// Local reward R_j(x[scope], a); tables[a] is indexed by the local assignment.
struct RewardFactor {
    Scope scope;
    std::vector<std::vector<double>> tables;

    bool operator==(const RewardFactor&) const = default;
};

/// A factored MDP. Immutable once built; every query is a pure read.
struct FmdpSpec {
    VariableSpace space;
    std::size_t num_actions = 0;
    /// Declared bound m_f on every transition and reward scope.
    std::size_t scope_bound = 0;
    /// Exactly one factor per variable, transitions[i].target == i.
    std::vector<TransitionFactor> transitions;
    std::vector<RewardFactor> rewards;
    double gamma = 0.9;
    /// Upper bound on each reward factor entry.
    double r_max = 1.0;
    StateAssignment start;

    std::size_t num_variables() const { return space.num_variables(); }

    bool operator==(const FmdpSpec&) const = default;
};

/// Throws ModelError when table shapes, scopes or factor targets are inconsistent.
/// Numerical invariants are reported by validate_model instead.
void check_structure(const FmdpSpec& model);

/// Max over transition factors of |X[parents]| (the N_f of the complexity bounds).
std::size_t factor_rows_bound(const FmdpSpec& model);

/// Sum over reward factors of their largest entry; an upper bound on R(x, a).
double max_reward_sum(const FmdpSpec& model);

/// Product over variables of P_i(y_i | x[parents_i], a).
double transition_prob(const FmdpSpec& model, std::span<const int> x, Action a,
                       std::span<const int> y);

/// E[h(y[C]) | x, a] where C = h.scope, summing only over the scoped
/// successor components.
double expected_local_value(const FmdpSpec& model, std::span<const int> x, Action a,
                            const LocalTable& h);

/// Sum over reward factors of R_j(x[Z_j], a).
double reward(const FmdpSpec& model, std::span<const int> x, Action a);

struct Violation {
    enum class Kind {
        structure,
        row_sum,
        negative_probability,
        scope_bound,
        gamma_range,
        reward_range,
        start_state,
    };
    Kind kind;
    /// Transition or reward factor index, when applicable.
    std::size_t factor = 0;
    Action action = 0;
    std::size_t row = 0;
    double value = 0.0;
    std::string message;
};

std::string to_string(Violation::Kind kind);

/// Checks every model invariant, returning all violations (empty = valid).
/// Rows must sum to 1 within row_tolerance.
std::vector<Violation> validate_model(const FmdpSpec& model, double row_tolerance = 1e-12);

} // namespace fmdp
