#include "fmdp/foim.hpp"
#include "fmdp/errors.hpp"
#include "fmdp/theory.hpp"

#include <algorithm>
#include <limits>
#include <sstream>

namespace fmdp {

bool GoeSpec::is_goe(std::span<const int> x) const {
    for (std::size_t i = 0; i < x.size(); ++i)
        if (x[i] == goe_value(i))
            return true;
    return false;
}

namespace {

bool all_real(const VariableSpace& base, const Scope& scope, std::span<const int> local) {
    for (std::size_t p = 0; p < scope.size(); ++p)
        if (local[p] >= base.size(scope[p]))
            return false;
    return true;
}

// Table over the augmented scope: source values on real assignments, 0 at any x_E.
std::vector<double> extend_table(const VariableSpace& base, const VariableSpace& augmented,
                                 const Scope& scope, const std::vector<double>& source) {
    std::vector<double> out(scope.local_size(augmented), 0.0);
    for (std::size_t l = 0; l < out.size(); ++l) {
        const auto values = scope.local_values(augmented, l);
        if (all_real(base, scope, values))
            out[l] = source[scope.index_of_values(base, values)];
    }
    return out;
}

std::vector<int> augmented_sizes(const VariableSpace& base) {
    auto sizes = base.sizes();
    for (auto& s : sizes)
        ++s;
    return sizes;
}

void set_point_mass(std::span<double> row, std::size_t at) {
    std::fill(row.begin(), row.end(), 0.0);
    row[at] = 1.0;
}

} // namespace

GoeSpec goe_augment(const FmdpSpec& base, const BasisSet& basis, double r_e) {
    if (!(r_e > 0.0))
        throw ConfigError("R_E must be positive");
    check_structure(base);
    basis.check(base.space);

    GoeSpec goe;
    goe.base = base;
    goe.r_e = r_e;
    const VariableSpace aug(augmented_sizes(base.space));

    FmdpSpec& m = goe.augmented;
    m.space = aug;
    m.num_actions = base.num_actions;
    m.scope_bound = base.scope_bound;
    m.gamma = base.gamma;
    m.r_max = std::max(base.r_max, r_e);
    m.start = base.start;

    for (const auto& f : base.transitions) {
        TransitionFactor g;
        g.target = f.target;
        g.parents = f.parents;
        g.outcomes = aug.size(f.target);
        g.tables.assign(base.num_actions,
                        std::vector<double>(g.parents.local_size(aug) *
                                                static_cast<std::size_t>(g.outcomes),
                                            0.0));
        for (Action a = 0; a < base.num_actions; ++a)
            for (std::size_t row = 0; row < g.num_rows(); ++row)
                set_point_mass(g.row(a, row), static_cast<std::size_t>(g.outcomes - 1));
        m.transitions.push_back(std::move(g));
    }

    for (const auto& rf : base.rewards) {
        RewardFactor g;
        g.scope = rf.scope;
        for (const auto& table : rf.tables)
            g.tables.push_back(extend_table(base.space, aug, rf.scope, table));
        m.rewards.push_back(std::move(g));
    }
    for (std::size_t i = 0; i < base.num_variables(); ++i) {
        RewardFactor goe_reward;
        goe_reward.scope = Scope{i};
        std::vector<double> table(static_cast<std::size_t>(aug.size(i)), 0.0);
        table.back() = r_e;
        goe_reward.tables.assign(base.num_actions, table);
        m.rewards.push_back(std::move(goe_reward));
    }

    goe.basis.has_constant = basis.has_constant;
    for (const auto& h : basis.functions)
        goe.basis.functions.emplace_back(h.scope,
                                         extend_table(base.space, aug, h.scope, h.values));
    for (std::size_t i = 0; i < base.num_variables(); ++i) {
        std::vector<double> indicator(static_cast<std::size_t>(aug.size(i)), 0.0);
        indicator.back() = 1.0;
        goe.basis.functions.emplace_back(Scope{i}, std::move(indicator));
    }
    return goe;
}

FmdpSpec augment_true_model(const GoeSpec& goe) {
    FmdpSpec m = goe.augmented;
    const auto& base = goe.base;
    for (std::size_t i = 0; i < m.transitions.size(); ++i) {
        auto& g = m.transitions[i];
        const auto& f = base.transitions[i];
        for (std::size_t row = 0; row < g.num_rows(); ++row) {
            const auto values = g.parents.local_values(m.space, row);
            if (!all_real(base.space, g.parents, values))
                continue;
            const auto base_row = f.parents.index_of_values(base.space, values);
            for (Action a = 0; a < m.num_actions; ++a) {
                auto dst = g.row(a, row);
                const auto src = f.row(a, base_row);
                std::fill(dst.begin(), dst.end(), 0.0);
                std::copy(src.begin(), src.end(), dst.begin());
            }
        }
    }
    return m;
}

CountsModel::CountsModel(const GoeSpec& goe)
    : base_space_(goe.base.space), augmented_space_(goe.augmented.space),
      num_actions_(goe.augmented.num_actions) {
    for (const auto& f : goe.augmented.transitions) {
        parents_.push_back(f.parents);
        const auto outcomes = static_cast<std::size_t>(f.outcomes);
        outcomes_.push_back(outcomes);
        const auto rows = f.parents.local_size(augmented_space_);
        visits_.emplace_back(num_actions_, std::vector<std::uint64_t>(rows, 1));
        std::vector<std::uint64_t> counts(rows * outcomes, 0);
        for (std::size_t row = 0; row < rows; ++row)
            counts[row * outcomes + outcomes - 1] = 1;
        transitions_.emplace_back(num_actions_, counts);
    }
}

std::size_t CountsModel::row_of(std::size_t factor, std::span<const int> x) const {
    return parents_[factor].local_index(augmented_space_, x);
}

bool CountsModel::is_real_row(std::size_t factor, std::size_t row) const {
    return all_real(base_space_, parents_[factor],
                    parents_[factor].local_values(augmented_space_, row));
}

void CountsModel::observe(std::span<const int> x, Action a, std::span<const int> y) {
    auto check_real = [&](std::span<const int> s, const char* what) {
        if (base_space_.contains(s))
            return;
        if (augmented_space_.contains(s))
            throw ContractError(std::string(what) + " " + to_string(s) +
                                " contains the garden-of-Eden value");
        base_space_.check(s);
    };
    check_real(x, "observed state");
    check_real(y, "observed successor");
    if (a >= num_actions_)
        throw ContractError("action " + std::to_string(a) + " out of range");
    for (std::size_t i = 0; i < parents_.size(); ++i) {
        const auto row = row_of(i, x);
        ++visits_[i][a][row];
        ++transitions_[i][a][row * outcomes_[i] + static_cast<std::size_t>(y[i])];
    }
}

std::uint64_t CountsModel::total_visits() const {
    std::uint64_t total = 0;
    for (const auto& per_action : visits_)
        for (const auto& rows : per_action)
            for (auto v : rows)
                total += v;
    return total;
}

std::size_t CountsModel::num_real_components() const {
    std::size_t total = 0;
    for (std::size_t i = 0; i < parents_.size(); ++i)
        total += parents_[i].local_size(base_space_) * num_actions_;
    return total;
}

std::size_t CountsModel::num_known(std::uint64_t threshold) const {
    std::size_t known = 0;
    for (std::size_t i = 0; i < parents_.size(); ++i)
        for (std::size_t row = 0; row < num_rows(i); ++row) {
            if (!is_real_row(i, row))
                continue;
            for (Action a = 0; a < num_actions_; ++a)
                if (real_visits(i, a, row) >= threshold)
                    ++known;
        }
    return known;
}

void CountsModel::write_row(FmdpSpec& model, std::size_t factor, Action a,
                            std::size_t row) const {
    auto dst = model.transitions[factor].row(a, row);
    const double visits = static_cast<double>(visit_count(factor, a, row));
    for (std::size_t y = 0; y < dst.size(); ++y)
        dst[y] = static_cast<double>(transition_count(factor, a, row, y)) / visits;
}

FmdpSpec CountsModel::current_model(const GoeSpec& goe) const {
    FmdpSpec m = goe.augmented;
    for (std::size_t i = 0; i < parents_.size(); ++i)
        for (Action a = 0; a < num_actions_; ++a)
            for (std::size_t row = 0; row < num_rows(i); ++row)
                write_row(m, i, a, row);
    return m;
}

void CountsModel::restore(std::vector<std::vector<std::vector<std::uint64_t>>> visits,
                          std::vector<std::vector<std::vector<std::uint64_t>>> transitions) {
    if (visits.size() != visits_.size() || transitions.size() != transitions_.size())
        throw ContractError("count tables have the wrong number of factors");
    for (std::size_t i = 0; i < visits_.size(); ++i) {
        if (visits[i].size() != num_actions_ || transitions[i].size() != num_actions_)
            throw ContractError("count tables have the wrong number of actions");
        for (Action a = 0; a < num_actions_; ++a) {
            const auto rows = visits_[i][a].size();
            const auto outcomes = outcomes_[i];
            if (visits[i][a].size() != rows || transitions[i][a].size() != rows * outcomes)
                throw ContractError("count table of factor " + std::to_string(i) +
                                    " has the wrong shape");
            for (std::size_t row = 0; row < rows; ++row) {
                std::uint64_t sum = 0;
                for (std::size_t y = 0; y < outcomes; ++y)
                    sum += transitions[i][a][row * outcomes + y];
                if (visits[i][a][row] < 1 || sum != visits[i][a][row] ||
                    transitions[i][a][row * outcomes + outcomes - 1] != 1)
                    throw ContractError("counts of factor " + std::to_string(i) + ", action " +
                                        std::to_string(a) + ", row " + std::to_string(row) +
                                        " violate conservation");
                if (!is_real_row(i, row) && visits[i][a][row] != 1)
                    throw ContractError("garden-of-Eden row has real visits");
            }
        }
    }
    visits_ = std::move(visits);
    transitions_ = std::move(transitions);
}

FmdpSpec known_state_fmdp(const FmdpSpec& true_model, const CountsModel& counts,
                          std::uint64_t threshold) {
    FmdpSpec m = true_model;
    if (counts.num_factors() != m.transitions.size())
        throw ContractError("counts do not match the model's factors");
    std::vector<int> sizes = m.space.sizes();
    for (auto& s : sizes)
        ++s;
    const VariableSpace augmented(sizes);
    const auto required = std::max<std::uint64_t>(threshold, 1);
    for (std::size_t i = 0; i < m.transitions.size(); ++i) {
        auto& f = m.transitions[i];
        for (std::size_t row = 0; row < f.num_rows(); ++row) {
            const auto values = f.parents.local_values(m.space, row);
            const auto aug_row = f.parents.index_of_values(augmented, values);
            for (Action a = 0; a < m.num_actions; ++a) {
                const auto k = counts.real_visits(i, a, aug_row);
                if (k < required)
                    continue;
                auto dst = f.row(a, row);
                for (std::size_t y = 0; y < dst.size(); ++y)
                    dst[y] = static_cast<double>(counts.transition_count(i, a, aug_row, y)) /
                             static_cast<double>(k);
            }
        }
    }
    return m;
}

Action select_action(const FmdpSpec& model, const BasisSet& basis, const WeightVector& w,
                     std::span<const int> x) {
    Action best = 0;
    double best_q = -std::numeric_limits<double>::infinity();
    for (Action a = 0; a < model.num_actions; ++a) {
        const double q = q_value(model, basis, w, x, a);
        if (q > best_q) {
            best_q = q;
            best = a;
        }
    }
    return best;
}

void FoimConfig::check() const {
    if (!(epsilon > 0.0 && epsilon < 1.0))
        throw ConfigError("epsilon must lie in (0, 1)");
    if (!(delta > 0.0 && delta < 1.0))
        throw ConfigError("delta must lie in (0, 1)");
    if (!(c_re > 0.0))
        throw ConfigError("R_E multiplier must be positive");
    if (r_e_override && !(*r_e_override > 0.0))
        throw ConfigError("R_E override must be positive");
    if (!(c_kb > 0.0))
        throw ConfigError("known-threshold multiplier must be positive");
    if (replan_every < 1)
        throw ConfigError("replan_every must be at least 1");
    planner.check();
}

FoimAgent::FoimAgent(const FmdpSpec& base, const BasisSet& basis, FoimConfig config)
    : config_(std::move(config)), planner_rng_(make_stream(config_.seed, Stream::planner)) {
    config_.check();
    check_structure(base);
    const auto m = base.num_variables();
    const auto n_f = factor_rows_bound(base);
    const double r_e_value =
        config_.r_e_override
            ? *config_.r_e_override
            : fmdp::r_e(config_.c_re, config_.epsilon, config_.delta, m, n_f, base.num_actions,
                  base.r_max, base.gamma);
    goe_ = goe_augment(base, basis, r_e_value);
    counts_ = CountsModel(goe_);
    model_ = counts_.current_model(goe_);
    known_threshold_ = fmdp::known_threshold(config_.epsilon, config_.delta, m, n_f,
                                             base.num_actions, config_.c_kb);
    known_ = counts_.num_known(known_threshold_);
    weights_ = WeightVector::Zero(static_cast<Eigen::Index>(goe_.basis.size()));
    if (config_.planner.exhaustive)
        fixed_projection_ = build_projection(
            goe_.basis, goe_.augmented.space,
            sample_states(goe_.augmented.space, config_.planner, planner_rng_),
            config_.planner.scheme);
}

double FoimAgent::known_fraction() const {
    return static_cast<double>(known_) / static_cast<double>(counts_.num_real_components());
}

const PlannerResult& FoimAgent::plan() {
    std::optional<WeightVector> start;
    if (config_.warm_start)
        start = weights_;
    if (fixed_projection_) {
        last_plan_ = solve(model_, goe_.basis, *fixed_projection_, config_.planner, start);
    } else {
        const auto proj = build_projection(
            goe_.basis, goe_.augmented.space,
            sample_states(goe_.augmented.space, config_.planner, planner_rng_),
            config_.planner.scheme);
        last_plan_ = solve(model_, goe_.basis, proj, config_.planner, start);
    }
    if (!last_plan_.converged)
        throw NonConvergenceError("planner stopped after " +
                                  std::to_string(last_plan_.iterations) +
                                  " iterations with residual " +
                                  std::to_string(last_plan_.residual));
    weights_ = last_plan_.weights;
    ++plans_;
    return last_plan_;
}

std::vector<double> FoimAgent::q_values(std::span<const int> x) const {
    std::vector<double> q(model_.num_actions);
    for (Action a = 0; a < q.size(); ++a)
        q[a] = q_value(model_, goe_.basis, weights_, x, a);
    return q;
}

Action FoimAgent::select(std::span<const int> x) const {
    return select_action(model_, goe_.basis, weights_, x);
}

void FoimAgent::observe(std::span<const int> x, Action a, std::span<const int> y) {
    counts_.observe(x, a, y);
    for (std::size_t i = 0; i < counts_.num_factors(); ++i) {
        const auto row = counts_.row_of(i, x);
        counts_.write_row(model_, i, a, row);
        if (counts_.real_visits(i, a, row) == known_threshold_)
            ++known_;
    }
}

StepRecord FoimAgent::step(Environment& env) {
    StepRecord rec;
    rec.t = t_;
    if (t_ % config_.replan_every == 0)
        rec.planner_iterations = plan().iterations;
    rec.weights_id = plans_;
    rec.state = env.state();
    rec.action = select(rec.state);
    rec.q_model = q_value(model_, goe_.basis, weights_, rec.state, rec.action);
    for (std::size_t i = 0; i < counts_.num_factors(); ++i)
        rec.known.push_back(counts_.real_visits(i, rec.action, counts_.row_of(i, rec.state)) >=
                            known_threshold_);
    rec.next_state = env.step(rec.action);
    observe(rec.state, rec.action, rec.next_state);
    rec.known_fraction = known_fraction();
    ++t_;
    return rec;
}

namespace {

constexpr const char* checkpoint_format = "foim-checkpoint";
constexpr int checkpoint_version = 1;

const char* scheme_name(Normalization s) {
    return s == Normalization::global ? "global" : "per-feature";
}

Normalization scheme_from(const std::string& name) {
    if (name == "global")
        return Normalization::global;
    if (name == "per-feature")
        return Normalization::per_feature;
    throw ConfigError("unknown normalization scheme '" + name + "'");
}

nlohmann::json config_to_json(const FoimConfig& c) {
    nlohmann::json planner = {
        {"epsilon", c.planner.epsilon},
        {"delta", c.planner.delta},
        {"n1", c.planner.n1_override ? nlohmann::json(*c.planner.n1_override) : nullptr},
        {"exhaustive", c.planner.exhaustive},
        {"max_iters", c.planner.max_iters},
        {"sample_constant", c.planner.sample_constant},
        {"seed", c.planner.seed},
        {"scheme", scheme_name(c.planner.scheme)},
    };
    return {
        {"epsilon", c.epsilon},
        {"delta", c.delta},
        {"c_re", c.c_re},
        {"r_e_override", c.r_e_override ? nlohmann::json(*c.r_e_override) : nullptr},
        {"c_kb", c.c_kb},
        {"replan_every", c.replan_every},
        {"warm_start", c.warm_start},
        {"seed", c.seed},
        {"planner", planner},
    };
}

FoimConfig config_from_json(const nlohmann::json& j) {
    FoimConfig c;
    c.epsilon = j.at("epsilon").get<double>();
    c.delta = j.at("delta").get<double>();
    c.c_re = j.at("c_re").get<double>();
    if (!j.at("r_e_override").is_null())
        c.r_e_override = j.at("r_e_override").get<double>();
    c.c_kb = j.at("c_kb").get<double>();
    c.replan_every = j.at("replan_every").get<std::size_t>();
    c.warm_start = j.at("warm_start").get<bool>();
    c.seed = j.at("seed").get<std::uint64_t>();
    const auto& p = j.at("planner");
    c.planner.epsilon = p.at("epsilon").get<double>();
    c.planner.delta = p.at("delta").get<double>();
    if (!p.at("n1").is_null())
        c.planner.n1_override = p.at("n1").get<std::size_t>();
    c.planner.exhaustive = p.at("exhaustive").get<bool>();
    c.planner.max_iters = p.at("max_iters").get<std::size_t>();
    c.planner.sample_constant = p.at("sample_constant").get<double>();
    c.planner.seed = p.at("seed").get<std::uint64_t>();
    c.planner.scheme = scheme_from(p.at("scheme").get<std::string>());
    return c;
}

} // namespace

nlohmann::json FoimAgent::checkpoint() const {
    std::ostringstream rng_state;
    rng_state << planner_rng_;
    return {
        {"format", checkpoint_format},
        {"version", checkpoint_version},
        {"config", config_to_json(config_)},
        {"t", t_},
        {"plans", plans_},
        {"r_e", goe_.r_e},
        {"visits", counts_.raw_visits()},
        {"transitions", counts_.raw_transitions()},
        {"weights", std::vector<double>(weights_.data(), weights_.data() + weights_.size())},
        {"planner_rng", rng_state.str()},
    };
}

FoimAgent FoimAgent::restore(const FmdpSpec& base, const BasisSet& basis,
                             const nlohmann::json& checkpoint) {
    try {
        if (checkpoint.at("format").get<std::string>() != checkpoint_format ||
            checkpoint.at("version").get<int>() != checkpoint_version)
            throw ConfigError("unsupported checkpoint format or version");
        FoimAgent agent(base, basis, config_from_json(checkpoint.at("config")));
        if (agent.r_e() != checkpoint.at("r_e").get<double>())
            throw ConfigError("checkpoint R_E does not match the model and config");
        agent.counts_.restore(
            checkpoint.at("visits").get<std::vector<std::vector<std::vector<std::uint64_t>>>>(),
            checkpoint.at("transitions")
                .get<std::vector<std::vector<std::vector<std::uint64_t>>>>());
        agent.model_ = agent.counts_.current_model(agent.goe_);
        agent.known_ = agent.counts_.num_known(agent.known_threshold_);
        const auto weights = checkpoint.at("weights").get<std::vector<double>>();
        if (weights.size() != agent.goe_.basis.size())
            throw ConfigError("checkpoint weights do not match the basis");
        agent.weights_ = Eigen::Map<const WeightVector>(weights.data(),
                                                        static_cast<Eigen::Index>(weights.size()));
        agent.t_ = checkpoint.at("t").get<std::uint64_t>();
        agent.plans_ = checkpoint.at("plans").get<std::uint64_t>();
        std::istringstream rng_state(checkpoint.at("planner_rng").get<std::string>());
        rng_state >> agent.planner_rng_;
        if (!rng_state)
            throw ConfigError("checkpoint planner rng state is malformed");
        return agent;
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("malformed checkpoint: ") + e.what());
    }
}

} // namespace fmdp
