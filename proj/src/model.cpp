#include "fmdp/model.hpp"
#include "fmdp/errors.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace fmdp {

void check_structure(const FmdpSpec& model) {
    const auto& space = model.space;
    const auto m = space.num_variables();
    if (m == 0)
        throw ModelError("model has no variables");
    if (model.num_actions == 0)
        throw ModelError("model has no actions");
    if (model.transitions.size() != m)
        throw ModelError("expected " + std::to_string(m) + " transition factors, got " +
                         std::to_string(model.transitions.size()));
    for (std::size_t i = 0; i < m; ++i) {
        const auto& f = model.transitions[i];
        if (f.target != i)
            throw ModelError("transition factor " + std::to_string(i) + " targets variable " +
                             std::to_string(f.target));
        f.parents.check(space);
        if (f.outcomes != space.size(i))
            throw ModelError("transition factor " + std::to_string(i) + " has " +
                             std::to_string(f.outcomes) + " outcomes, variable has " +
                             std::to_string(space.size(i)));
        if (f.tables.size() != model.num_actions)
            throw ModelError("transition factor " + std::to_string(i) +
                             " lacks a table for every action");
        const auto expected = f.parents.local_size(space) * static_cast<std::size_t>(f.outcomes);
        for (const auto& t : f.tables)
            if (t.size() != expected)
                throw ModelError("transition factor " + std::to_string(i) +
                                 " table has wrong size");
    }
    for (std::size_t j = 0; j < model.rewards.size(); ++j) {
        const auto& r = model.rewards[j];
        r.scope.check(space);
        if (r.tables.size() != model.num_actions)
            throw ModelError("reward factor " + std::to_string(j) +
                             " lacks a table for every action");
        for (const auto& t : r.tables)
            if (t.size() != r.scope.local_size(space))
                throw ModelError("reward factor " + std::to_string(j) + " table has wrong size");
    }
}

std::size_t factor_rows_bound(const FmdpSpec& model) {
    std::size_t nf = 1;
    for (const auto& f : model.transitions)
        nf = std::max(nf, f.parents.local_size(model.space));
    return nf;
}

double max_reward_sum(const FmdpSpec& model) {
    double total = 0.0;
    for (const auto& r : model.rewards) {
        double best = 0.0;
        for (const auto& t : r.tables)
            for (double v : t)
                best = std::max(best, v);
        total += best;
    }
    return total;
}

double transition_prob(const FmdpSpec& model, std::span<const int> x, Action a,
                       std::span<const int> y) {
    model.space.check(x);
    model.space.check(y);
    double p = 1.0;
    for (const auto& f : model.transitions) {
        p *= f.row(a, f.parents.local_index(model.space, x))[static_cast<std::size_t>(y[f.target])];
        if (p == 0.0)
            break;
    }
    return p;
}

double expected_local_value(const FmdpSpec& model, std::span<const int> x, Action a,
                            const LocalTable& h) {
    const auto& space = model.space;
    const auto& vars = h.scope.indices();
    const std::size_t k = vars.size();
    if (k == 0)
        return h.values[0];

    // rows[p] = P_{vars[p]}( . | x[parents], a)
    std::vector<std::span<const double>> rows(k);
    for (std::size_t p = 0; p < k; ++p) {
        const auto& f = model.transitions[vars[p]];
        rows[p] = f.row(a, f.parents.local_index(space, x));
    }

    // Odometer over X[C]; digit 0 is least significant, matching Scope::local_index.
    std::vector<int> digit(k, 0);
    double total = 0.0;
    for (std::size_t local = 0; local < h.values.size(); ++local) {
        if (h.values[local] != 0.0) {
            double p = rows[0][static_cast<std::size_t>(digit[0])];
            for (std::size_t q = 1; q < k && p != 0.0; ++q)
                p *= rows[q][static_cast<std::size_t>(digit[q])];
            total += p * h.values[local];
        }
        for (std::size_t q = 0; q < k; ++q) {
            if (++digit[q] < space.size(vars[q]))
                break;
            digit[q] = 0;
        }
    }
    return total;
}

double reward(const FmdpSpec& model, std::span<const int> x, Action a) {
    double r = 0.0;
    for (const auto& f : model.rewards)
        r += f.tables[a][f.scope.local_index(model.space, x)];
    return r;
}

std::string to_string(Violation::Kind kind) {
    switch (kind) {
    case Violation::Kind::structure: return "structure";
    case Violation::Kind::row_sum: return "row-sum";
    case Violation::Kind::negative_probability: return "negative-probability";
    case Violation::Kind::scope_bound: return "scope-bound";
    case Violation::Kind::gamma_range: return "gamma-range";
    case Violation::Kind::reward_range: return "reward-range";
    case Violation::Kind::start_state: return "start-state";
    }
    return "unknown";
}

namespace {

std::string format_number(double v) {
    std::ostringstream os;
    os.precision(12);
    os << std::showpoint << v;
    auto s = os.str();
    // trim trailing zeros but keep one digit after the point
    auto dot = s.find('.');
    if (dot != std::string::npos && s.find('e') == std::string::npos) {
        auto last = s.find_last_not_of('0');
        s.erase(std::max(last, dot + 1) + 1);
    }
    return s;
}

} // namespace

std::vector<Violation> validate_model(const FmdpSpec& model, double row_tolerance) {
    using Kind = Violation::Kind;
    std::vector<Violation> out;
    try {
        check_structure(model);
    } catch (const ModelError& e) {
        out.push_back({Kind::structure, 0, 0, 0, 0.0, e.what()});
        return out;
    }
    if (!(model.gamma >= 0.0 && model.gamma < 1.0))
        out.push_back({Kind::gamma_range, 0, 0, 0, model.gamma,
                       "discount " + format_number(model.gamma) + " not in [0, 1)"});

    for (std::size_t i = 0; i < model.transitions.size(); ++i) {
        const auto& f = model.transitions[i];
        if (f.parents.size() > model.scope_bound)
            out.push_back({Kind::scope_bound, i, 0, 0, static_cast<double>(f.parents.size()),
                           "scope bound exceeded: transition factor " + std::to_string(i) +
                               " has " + std::to_string(f.parents.size()) + " parents, bound is " +
                               std::to_string(model.scope_bound)});
        for (Action a = 0; a < model.num_actions; ++a) {
            for (std::size_t row = 0; row < f.num_rows(); ++row) {
                auto probs = f.row(a, row);
                double sum = 0.0;
                bool negative = false;
                for (double p : probs) {
                    sum += p;
                    negative = negative || p < 0.0 || !std::isfinite(p);
                }
                if (negative)
                    out.push_back({Kind::negative_probability, i, a, row, sum,
                                   "transition factor " + std::to_string(i) + " action " +
                                       std::to_string(a) + " row " + std::to_string(row) +
                                       " has a negative or non-finite entry"});
                if (!(std::abs(sum - 1.0) <= row_tolerance))
                    out.push_back({Kind::row_sum, i, a, row, sum,
                                   "transition factor " + std::to_string(i) + " action " +
                                       std::to_string(a) + " row " + std::to_string(row) +
                                       ": row sum = " + format_number(sum)});
            }
        }
    }

    for (std::size_t j = 0; j < model.rewards.size(); ++j) {
        const auto& r = model.rewards[j];
        if (r.scope.size() > model.scope_bound)
            out.push_back({Kind::scope_bound, j, 0, 0, static_cast<double>(r.scope.size()),
                           "scope bound exceeded: reward factor " + std::to_string(j) + " has " +
                               std::to_string(r.scope.size()) + " variables, bound is " +
                               std::to_string(model.scope_bound)});
        for (Action a = 0; a < model.num_actions; ++a)
            for (std::size_t row = 0; row < r.tables[a].size(); ++row) {
                double v = r.tables[a][row];
                if (!(v >= 0.0 && v <= model.r_max))
                    out.push_back({Kind::reward_range, j, a, row, v,
                                   "reward factor " + std::to_string(j) + " entry " +
                                       format_number(v) + " outside [0, R_max = " +
                                       format_number(model.r_max) + "]"});
            }
    }

    if (!model.space.contains(model.start))
        out.push_back({Kind::start_state, 0, 0, 0, 0.0, "start state is not a valid assignment"});
    return out;
}

} // namespace fmdp
