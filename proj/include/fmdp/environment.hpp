#pragma once

#include "fmdp/model.hpp"
#include "fmdp/rng.hpp"

#include <cstdint>
#include <string>

namespace fmdp {

/// Draws each successor component independently from its factor row.
StateAssignment sample_next(const FmdpSpec& model, std::span<const int> x, Action a, Rng& rng);

/// A ground-truth FMDP being interacted with. The agent sees structure and
/// rewards through model(); only the probability tables are meant to be hidden.
class Environment {
public:
    Environment(FmdpSpec model, std::uint64_t seed);

    const FmdpSpec& model() const { return model_; }
    const StateAssignment& state() const { return state_; }

    /// Samples the successor of the current state under a and moves there.
    const StateAssignment& step(Action a);

    /// Textual rng state, for checkpoints.
    std::string rng_state() const;
    /// Resumes from a saved state and rng_state(). Throws InvalidStateError or ConfigError.
    void restore(StateAssignment state, const std::string& rng_state);

private:
    FmdpSpec model_;
    StateAssignment state_;
    Rng rng_;
};

/// Chain of m variables with n values each; variable i depends on i-1 and itself.
///
/// Action 1 ("advance") raises variable 0, and raises variable i when variable
/// i-1 is at its top value. Action 0 ("retreat") lowers variable 0, and lowers
/// variable i when variable i-1 is at 0. Each variable that would move stays
/// put instead with probability p_slip. Reward 1 while the last variable is at
/// its top value.
FmdpSpec make_chain(std::size_t m, int n, double p_slip, double gamma = 0.9);

/// Ring of m machines (0 = down, 1 = up). Machine i depends on machines i-1 and i.
/// Actions 0..m-1 reboot that machine (up with probability p_fix); action m is a
/// no-op. An up machine fails with probability p_fail, or 1-(1-p_fail)^2 when its
/// predecessor is down; a down machine stays down unless rebooted. Reward 1 per
/// machine that is up.
FmdpSpec make_sysadmin_ring(std::size_t m, double p_fail, double p_fix, double gamma = 0.9);

/// Random model: parent scopes of size 1..m_f, Dirichlet(1) rows, between 1 and
/// m reward factors with uniform [0, 1] entries. A pure function of its arguments.
FmdpSpec make_random_fmdp(std::size_t m, int n, std::size_t m_f, std::size_t num_actions,
                          std::uint64_t seed, double gamma = 0.9);

} // namespace fmdp
