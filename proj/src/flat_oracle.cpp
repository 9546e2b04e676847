#include "fmdp/flat_oracle.hpp"
#include "fmdp/errors.hpp"
#include "fmdp/format_util.hpp"

#include <cmath>
#include <limits>
#include <ostream>

namespace fmdp {

void check_oracle_size(const VariableSpace& space) {
    if (space.joint_size() > max_oracle_states)
        throw OracleTooLargeError("flat oracle supports at most " +
                                  std::to_string(max_oracle_states) + " states, model has " +
                                  std::to_string(space.joint_size()));
}

Eigen::MatrixXd extension_matrix(const VariableSpace& space, const Scope& scope) {
    check_oracle_size(space);
    const auto n = static_cast<Eigen::Index>(space.joint_size());
    const auto local = static_cast<Eigen::Index>(scope.local_size(space));
    std::vector<std::vector<int>> local_values;
    for (Eigen::Index l = 0; l < local; ++l)
        local_values.push_back(scope.local_values(space, static_cast<std::size_t>(l)));
    Eigen::MatrixXd ext = Eigen::MatrixXd::Zero(n, local);
    for (Eigen::Index u = 0; u < n; ++u) {
        const auto x = space.state_at(static_cast<StateIndex>(u));
        for (Eigen::Index l = 0; l < local; ++l) {
            const auto& values = local_values[static_cast<std::size_t>(l)];
            bool match = true;
            for (std::size_t p = 0; p < scope.size() && match; ++p)
                match = x[scope[p]] == values[p];
            if (match)
                ext(u, l) = 1.0;
        }
    }
    return ext;
}

Eigen::RowVectorXd kronecker(const Eigen::RowVectorXd& lhs, const Eigen::RowVectorXd& rhs) {
    Eigen::RowVectorXd out(lhs.size() * rhs.size());
    for (Eigen::Index i = 0; i < lhs.size(); ++i)
        out.segment(i * rhs.size(), rhs.size()) = lhs[i] * rhs;
    return out;
}

FlatMdp flatten(const FmdpSpec& model) {
    check_structure(model);
    check_oracle_size(model.space);
    const auto& space = model.space;
    const auto n = static_cast<Eigen::Index>(space.joint_size());

    FlatMdp flat;
    flat.num_states = static_cast<std::size_t>(n);
    flat.gamma = model.gamma;
    flat.transitions.assign(model.num_actions, Eigen::MatrixXd::Zero(n, n));
    flat.rewards.assign(model.num_actions, Eigen::VectorXd::Zero(n));

    // Each joint row is the Kronecker product of the factor rows, with
    // variable 0 innermost (least significant).
    for (Action a = 0; a < model.num_actions; ++a)
        for (Eigen::Index x = 0; x < n; ++x) {
            const auto state = space.state_at(static_cast<StateIndex>(x));
            Eigen::RowVectorXd joint = Eigen::RowVectorXd::Ones(1);
            for (const auto& f : model.transitions) {
                const auto row = f.row(a, f.parents.local_index(space, state));
                Eigen::RowVectorXd factor(static_cast<Eigen::Index>(row.size()));
                for (std::size_t y = 0; y < row.size(); ++y)
                    factor[static_cast<Eigen::Index>(y)] = row[y];
                joint = kronecker(factor, joint);
            }
            flat.transitions[a].row(x) = joint;
        }

    // r^a = sum_j ext(Z_j) r_j^a
    for (const auto& rf : model.rewards) {
        const auto ext = extension_matrix(space, rf.scope);
        for (Action a = 0; a < model.num_actions; ++a)
            flat.rewards[a] += ext * Eigen::Map<const Eigen::VectorXd>(
                                         rf.tables[a].data(),
                                         static_cast<Eigen::Index>(rf.tables[a].size()));
    }
    return flat;
}

Eigen::MatrixXd feature_matrix(const BasisSet& basis, const VariableSpace& space) {
    check_oracle_size(space);
    const auto n = static_cast<Eigen::Index>(space.joint_size());
    Eigen::MatrixXd h(n, static_cast<Eigen::Index>(basis.size()));
    for (std::size_t k = 0; k < basis.size(); ++k) {
        const auto& f = basis.functions[k];
        h.col(static_cast<Eigen::Index>(k)) =
            extension_matrix(space, f.scope) *
            Eigen::Map<const Eigen::VectorXd>(f.values.data(),
                                              static_cast<Eigen::Index>(f.values.size()));
    }
    return h;
}

Eigen::MatrixXd global_projection(const Eigen::MatrixXd& features) {
    const Eigen::MatrixXd gram = features * features.transpose();
    return features.transpose() / inf_norm(gram);
}

Eigen::MatrixXd flat_q(const FlatMdp& flat, const Eigen::VectorXd& v) {
    Eigen::MatrixXd q(static_cast<Eigen::Index>(flat.num_states),
                      static_cast<Eigen::Index>(flat.num_actions()));
    for (std::size_t a = 0; a < flat.num_actions(); ++a)
        q.col(static_cast<Eigen::Index>(a)) =
            flat.rewards[a] + flat.gamma * (flat.transitions[a] * v);
    return q;
}

Eigen::VectorXd flat_backup(const FlatMdp& flat, const Eigen::VectorXd& v) {
    return flat_q(flat, v).rowwise().maxCoeff();
}

namespace {

// Residual threshold guaranteeing distance tol to the fixed point of a
// gamma-contraction.
double stopping_residual(double tol, double gamma) {
    return gamma > 0.0 ? tol * (1.0 - gamma) / gamma : std::numeric_limits<double>::infinity();
}

void check_projection(const Eigen::MatrixXd& features, const Eigen::MatrixXd& projection) {
    const double norm = inf_norm(features * projection);
    if (norm > 1.0 + 1e-12)
        throw ContractError("||HG||_inf = " + std::to_string(norm) + " exceeds 1");
}

} // namespace

Eigen::VectorXd exact_vi(const FlatMdp& flat, double tol, std::size_t max_iters) {
    if (!(tol > 0.0))
        throw ConfigError("exact_vi tolerance must be positive");
    const double stop = stopping_residual(tol, flat.gamma);
    Eigen::VectorXd v = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(flat.num_states));
    for (std::size_t it = 0; it < max_iters; ++it) {
        Eigen::VectorXd next = flat_backup(flat, v);
        const double residual = (next - v).cwiseAbs().maxCoeff();
        v = std::move(next);
        if (residual <= stop)
            return v;
    }
    throw NonConvergenceError("exact_vi did not reach tolerance");
}

WeightVector exact_avi_fixed_point(const FlatMdp& flat, const Eigen::MatrixXd& features,
                                   const Eigen::MatrixXd& projection, double tol,
                                   std::size_t max_iters) {
    check_projection(features, projection);
    const double stop = stopping_residual(tol, flat.gamma);
    WeightVector w = WeightVector::Zero(features.cols());
    for (std::size_t it = 0; it < max_iters; ++it) {
        WeightVector next = projection * flat_backup(flat, features * w);
        const double residual = (features * (next - w)).cwiseAbs().maxCoeff();
        w = std::move(next);
        if (residual <= stop)
            return w;
    }
    throw NonConvergenceError("exact AVI did not reach tolerance");
}

Eigen::VectorXd approx_policy_value(const FlatMdp& flat, const Eigen::MatrixXd& features,
                                    const Eigen::MatrixXd& projection,
                                    const Eigen::MatrixXd& policy, double tol,
                                    std::size_t max_iters) {
    check_projection(features, projection);
    const auto n = static_cast<Eigen::Index>(flat.num_states);
    if (policy.rows() != n || policy.cols() != static_cast<Eigen::Index>(flat.num_actions()))
        throw ContractError("policy must be an N x |A| matrix");
    for (Eigen::Index x = 0; x < n; ++x) {
        if ((policy.row(x).array() < 0.0).any() || std::abs(policy.row(x).sum() - 1.0) > 1e-9)
            throw ContractError("policy row " + std::to_string(x) + " is not a distribution");
    }
    const Eigen::MatrixXd hg = features * projection;
    const double stop = stopping_residual(tol, flat.gamma);
    Eigen::VectorXd v = Eigen::VectorXd::Zero(n);
    for (std::size_t it = 0; it < max_iters; ++it) {
        const Eigen::MatrixXd q = flat_q(flat, v);
        Eigen::VectorXd next = hg * (q.cwiseProduct(policy).rowwise().sum());
        const double residual = (next - v).cwiseAbs().maxCoeff();
        v = std::move(next);
        if (residual <= stop)
            return v;
    }
    throw NonConvergenceError("approximate policy evaluation did not reach tolerance");
}

Eigen::MatrixXd l1_model_distance(const FlatMdp& lhs, const FlatMdp& rhs) {
    if (lhs.num_states != rhs.num_states || lhs.num_actions() != rhs.num_actions())
        throw ContractError("l1_model_distance: models have different shapes");
    Eigen::MatrixXd d(static_cast<Eigen::Index>(lhs.num_states),
                      static_cast<Eigen::Index>(lhs.num_actions()));
    for (std::size_t a = 0; a < lhs.num_actions(); ++a)
        d.col(static_cast<Eigen::Index>(a)) =
            (lhs.transitions[a] - rhs.transitions[a]).cwiseAbs().rowwise().sum();
    return d;
}

void write_flat(std::ostream& out, const FlatMdp& flat) {
    out << "flat-mdp 1\n";
    out << "states " << flat.num_states << '\n';
    out << "actions " << flat.num_actions() << '\n';
    out << "gamma " << format_real(flat.gamma) << '\n';
    const auto n = static_cast<Eigen::Index>(flat.num_states);
    for (std::size_t a = 0; a < flat.num_actions(); ++a) {
        out << "action " << a << '\n';
        out << "reward";
        for (Eigen::Index x = 0; x < n; ++x)
            out << ' ' << format_real(flat.rewards[a][x]);
        out << '\n';
        for (Eigen::Index x = 0; x < n; ++x) {
            for (Eigen::Index y = 0; y < n; ++y)
                out << (y ? " " : "") << format_real(flat.transitions[a](x, y));
            out << '\n';
        }
    }
}

} // namespace fmdp
