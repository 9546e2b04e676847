#pragma once

#include "fmdp/basis.hpp"
#include "fmdp/environment.hpp"
#include "fmdp/flat_oracle.hpp"
#include "fmdp/model.hpp"

#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>
#include <string>

namespace fmdp::testing {

/// One state, one action, reward r, constant basis.
inline FmdpSpec single_state(double r, double gamma) {
    FmdpSpec m;
    m.space = VariableSpace({1});
    m.num_actions = 1;
    m.scope_bound = 1;
    m.gamma = gamma;
    m.r_max = std::max(1.0, r);
    m.start = {0};
    TransitionFactor f;
    f.target = 0;
    f.parents = Scope{0};
    f.outcomes = 1;
    f.tables = {{1.0}};
    m.transitions.push_back(f);
    m.rewards.push_back({Scope{0}, {{r}}});
    return m;
}

/// K random nonnegative local-scope functions with scopes of size <= max_scope,
/// every function with at least one positive entry.
inline BasisSet random_basis(const VariableSpace& space, std::size_t k, std::size_t max_scope,
                             std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    BasisSet basis;
    const auto m = space.num_variables();
    for (std::size_t j = 0; j < k; ++j) {
        const auto size = std::uniform_int_distribution<std::size_t>(0, std::min(max_scope, m))(rng);
        std::vector<std::size_t> pool(m);
        for (std::size_t i = 0; i < m; ++i)
            pool[i] = i;
        std::shuffle(pool.begin(), pool.end(), rng);
        Scope scope(std::vector<std::size_t>(pool.begin(), pool.begin() + static_cast<long>(size)));
        std::vector<double> values(scope.local_size(space));
        for (auto& v : values)
            v = unit(rng) < 0.3 ? 0.0 : unit(rng);
        values[std::uniform_int_distribution<std::size_t>(0, values.size() - 1)(rng)] += 0.5;
        basis.functions.emplace_back(std::move(scope), std::move(values));
    }
    return basis;
}

/// Flat state value vector of a weight vector.
inline Eigen::VectorXd flat_values(const BasisSet& basis, const VariableSpace& space,
                                   const WeightVector& w) {
    return feature_matrix(basis, space) * w;
}

/// Random stochastic N x |A| policy.
inline Eigen::MatrixXd random_policy(std::size_t states, std::size_t actions, std::mt19937_64& rng) {
    std::exponential_distribution<double> exponential(1.0);
    Eigen::MatrixXd pi(static_cast<Eigen::Index>(states), static_cast<Eigen::Index>(actions));
    for (Eigen::Index x = 0; x < pi.rows(); ++x) {
        for (Eigen::Index a = 0; a < pi.cols(); ++a)
            pi(x, a) = exponential(rng);
        pi.row(x) /= pi.row(x).sum();
    }
    return pi;
}

/// Mixes every transition row with a random distribution so that its L1
/// distance from the original is at most max_l1.
inline FlatMdp perturb_rows(FlatMdp flat, double max_l1, std::mt19937_64& rng) {
    std::exponential_distribution<double> exponential(1.0);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    const auto n = static_cast<Eigen::Index>(flat.num_states);
    for (auto& p : flat.transitions)
        for (Eigen::Index x = 0; x < n; ++x) {
            Eigen::RowVectorXd target(n);
            for (Eigen::Index y = 0; y < n; ++y)
                target[y] = exponential(rng);
            target /= target.sum();
            // ||p - target||_1 <= 2, so mixing weight max_l1 / 2 keeps the row within max_l1.
            const double lambda = 0.5 * max_l1 * unit(rng);
            p.row(x) = (1.0 - lambda) * p.row(x) + lambda * target;
        }
    return flat;
}

/// Fresh empty directory under the system temp dir.
inline std::filesystem::path scratch_dir(const std::string& name) {
    auto dir = std::filesystem::temp_directory_path() / ("fmdp-test-" + name);
    std::filesystem::remove_all(dir);
    std::filesystem::create_directories(dir);
    return dir;
}

inline std::string read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
}

inline void write_text(const std::filesystem::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    out << text;
}

} // namespace fmdp::testing
