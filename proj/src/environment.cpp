#include "fmdp/environment.hpp"
#include "fmdp/errors.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

namespace fmdp {

StateAssignment sample_next(const FmdpSpec& model, std::span<const int> x, Action a, Rng& rng) {
    StateAssignment y(model.num_variables());
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    for (const auto& f : model.transitions) {
        const auto row = f.row(a, f.parents.local_index(model.space, x));
        const double u = unit(rng);
        double cumulative = 0.0;
        int pick = -1;
        for (std::size_t v = 0; v < row.size(); ++v) {
            if (row[v] <= 0.0)
                continue;
            pick = static_cast<int>(v);
            cumulative += row[v];
            if (u < cumulative)
                break;
        }
        if (pick < 0)
            throw ModelError("transition row with no positive entry");
        y[f.target] = pick;
    }
    return y;
}

Environment::Environment(FmdpSpec model, std::uint64_t seed)
    : model_(std::move(model)), state_(model_.start), rng_(make_stream(seed, Stream::environment)) {
    check_structure(model_);
    model_.space.check(state_);
}

const StateAssignment& Environment::step(Action a) {
    if (a >= model_.num_actions)
        throw ModelError("action " + std::to_string(a) + " out of range");
    state_ = sample_next(model_, state_, a, rng_);
    return state_;
}

std::string Environment::rng_state() const {
    std::ostringstream out;
    out << rng_;
    return out.str();
}

void Environment::restore(StateAssignment state, const std::string& rng_state) {
    model_.space.check(state);
    std::istringstream in(rng_state);
    Rng rng;
    in >> rng;
    if (!in)
        throw ConfigError("malformed environment rng state");
    state_ = std::move(state);
    rng_ = rng;
}

namespace {

TransitionFactor empty_factor(const VariableSpace& space, std::size_t target, Scope parents,
                              std::size_t num_actions) {
    TransitionFactor f;
    f.target = target;
    f.outcomes = space.size(target);
    f.parents = std::move(parents);
    f.tables.assign(num_actions, std::vector<double>(f.parents.local_size(space) *
                                                         static_cast<std::size_t>(f.outcomes),
                                                     0.0));
    return f;
}

// Row that moves from `from` to `to` with probability 1 - p_slip, else stays.
void set_move(std::span<double> row, int from, int to, double p_slip) {
    row[static_cast<std::size_t>(to)] += 1.0 - p_slip;
    row[static_cast<std::size_t>(from)] += p_slip;
}

} // namespace

FmdpSpec make_chain(std::size_t m, int n, double p_slip, double gamma) {
    if (m < 1 || n < 2 || !(p_slip >= 0.0 && p_slip < 1.0))
        throw ConfigError("make_chain requires m >= 1, n >= 2, p_slip in [0, 1)");
    FmdpSpec model;
    model.space = VariableSpace(std::vector<int>(m, n));
    model.num_actions = 2;
    model.scope_bound = m >= 2 ? 2 : 1;
    model.gamma = gamma;
    model.r_max = 1.0;
    model.start = StateAssignment(m, 0);
    const int top = n - 1;

    for (std::size_t i = 0; i < m; ++i) {
        Scope parents = i == 0 ? Scope{0} : Scope{i - 1, i};
        auto f = empty_factor(model.space, i, parents, model.num_actions);
        for (std::size_t row = 0; row < f.num_rows(); ++row) {
            const auto values = f.parents.local_values(model.space, row);
            const int self = values.back();
            const int prev = i == 0 ? -1 : values.front();
            const bool lower = i == 0 || prev == 0;
            const bool raise = i == 0 || prev == top;
            set_move(f.row(0, row), self, lower ? std::max(self - 1, 0) : self, p_slip);
            set_move(f.row(1, row), self, raise ? std::min(self + 1, top) : self, p_slip);
        }
        model.transitions.push_back(std::move(f));
    }

    RewardFactor goal;
    goal.scope = Scope{m - 1};
    std::vector<double> table(static_cast<std::size_t>(n), 0.0);
    table.back() = 1.0;
    goal.tables.assign(model.num_actions, table);
    model.rewards.push_back(std::move(goal));
    return model;
}

FmdpSpec make_sysadmin_ring(std::size_t m, double p_fail, double p_fix, double gamma) {
    if (m < 2 || !(p_fail >= 0.0 && p_fail <= 1.0) || !(p_fix >= 0.0 && p_fix <= 1.0))
        throw ConfigError("make_sysadmin_ring requires m >= 2 and probabilities in [0, 1]");
    FmdpSpec model;
    model.space = VariableSpace(std::vector<int>(m, 2));
    model.num_actions = m + 1;
    model.scope_bound = 2;
    model.gamma = gamma;
    model.r_max = 1.0;
    model.start = StateAssignment(m, 1);
    const double p_fail_hit = 1.0 - (1.0 - p_fail) * (1.0 - p_fail);

    for (std::size_t i = 0; i < m; ++i) {
        const std::size_t prev = (i + m - 1) % m;
        auto f = empty_factor(model.space, i, Scope{prev, i}, model.num_actions);
        for (std::size_t row = 0; row < f.num_rows(); ++row) {
            const auto values = f.parents.local_values(model.space, row);
            // Scope is sorted, so the predecessor comes first except for machine 0.
            const int self = prev < i ? values[1] : values[0];
            const int before = prev < i ? values[0] : values[1];
            for (Action a = 0; a < model.num_actions; ++a) {
                auto r = f.row(a, row);
                double up;
                if (a == i)
                    up = p_fix;
                else if (self == 1)
                    up = 1.0 - (before == 1 ? p_fail : p_fail_hit);
                else
                    up = 0.0;
                r[1] = up;
                r[0] = 1.0 - up;
            }
        }
        model.transitions.push_back(std::move(f));

        RewardFactor working;
        working.scope = Scope{i};
        working.tables.assign(model.num_actions, std::vector<double>{0.0, 1.0});
        model.rewards.push_back(std::move(working));
    }
    return model;
}

FmdpSpec make_random_fmdp(std::size_t m, int n, std::size_t m_f, std::size_t num_actions,
                          std::uint64_t seed, double gamma) {
    if (m < 1 || n < 1 || m_f < 1 || m_f > m || num_actions < 1)
        throw ConfigError("make_random_fmdp requires 1 <= m_f <= m, n >= 1, |A| >= 1");
    auto rng = make_stream(seed, Stream::generator);
    std::exponential_distribution<double> exponential(1.0);
    std::uniform_real_distribution<double> unit(0.0, 1.0);

    std::vector<std::size_t> all(m);
    std::iota(all.begin(), all.end(), std::size_t{0});
    auto random_scope = [&] {
        const auto size = std::uniform_int_distribution<std::size_t>(1, m_f)(rng);
        auto pool = all;
        for (std::size_t p = 0; p < size; ++p)
            std::swap(pool[p], pool[std::uniform_int_distribution<std::size_t>(p, m - 1)(rng)]);
        return Scope(std::vector<std::size_t>(pool.begin(), pool.begin() + static_cast<long>(size)));
    };

    FmdpSpec model;
    model.space = VariableSpace(std::vector<int>(m, n));
    model.num_actions = num_actions;
    model.scope_bound = m_f;
    model.gamma = gamma;
    model.r_max = 1.0;

    for (std::size_t i = 0; i < m; ++i) {
        auto f = empty_factor(model.space, i, random_scope(), num_actions);
        for (Action a = 0; a < num_actions; ++a)
            for (std::size_t row = 0; row < f.num_rows(); ++row) {
                auto r = f.row(a, row);
                double total = 0.0;
                for (auto& p : r)
                    total += (p = exponential(rng));
                for (auto& p : r)
                    p /= total;
            }
        model.transitions.push_back(std::move(f));
    }

    const auto num_rewards = std::uniform_int_distribution<std::size_t>(1, m)(rng);
    for (std::size_t j = 0; j < num_rewards; ++j) {
        RewardFactor rf;
        rf.scope = random_scope();
        rf.tables.assign(num_actions, std::vector<double>(rf.scope.local_size(model.space)));
        for (auto& t : rf.tables)
            for (auto& v : t)
                v = unit(rng);
        model.rewards.push_back(std::move(rf));
    }

    model.start.resize(m);
    for (std::size_t i = 0; i < m; ++i)
        model.start[i] = std::uniform_int_distribution<int>(0, n - 1)(rng);
    return model;
}

} // namespace fmdp
