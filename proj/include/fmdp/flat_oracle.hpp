#pragma once

#include "fmdp/basis.hpp"
#include "fmdp/model.hpp"

#include <Eigen/Dense>

#include <iosfwd>
#include <vector>

// Brute-force ground truth for small models. Everything here works on dense
// N x N matrices built through Kronecker products and explicit extension
// matrices, independently of the factored code paths it is used to check.

namespace fmdp {

/// Largest flattened model accepted. Dense storage needs |A| N^2 doubles.
inline constexpr StateIndex max_oracle_states = 4096;

struct FlatMdp {
    std::size_t num_states = 0;
    double gamma = 0.0;
    /// Per action, P^a with P^a(x, y) = P(y | x, a).
    std::vector<Eigen::MatrixXd> transitions;
    /// Per action, r^a(x) = R(x, a).
    std::vector<Eigen::VectorXd> rewards;

    std::size_t num_actions() const { return transitions.size(); }
};

/// Throws OracleTooLargeError when the space exceeds max_oracle_states.
void check_oracle_size(const VariableSpace& space);

/// 0/1 matrix of size N x |X[scope]| with entry (u, l) = [u[scope] == l].
Eigen::MatrixXd extension_matrix(const VariableSpace& space, const Scope& scope);

/// Kronecker product of two row vectors; lhs varies slowest.
Eigen::RowVectorXd kronecker(const Eigen::RowVectorXd& lhs, const Eigen::RowVectorXd& rhs);

FlatMdp flatten(const FmdpSpec& model);

/// N x K matrix H = sum_k ext(C_k) h_k e_k^T over all states.
Eigen::MatrixXd feature_matrix(const BasisSet& basis, const VariableSpace& space);

/// G = H^T / ||H H^T||_inf computed from the explicit N x N product.
Eigen::MatrixXd global_projection(const Eigen::MatrixXd& features);

/// Q^a = r^a + gamma P^a v, one column per action.
Eigen::MatrixXd flat_q(const FlatMdp& flat, const Eigen::VectorXd& v);

/// max_a (r^a + gamma P^a v)
Eigen::VectorXd flat_backup(const FlatMdp& flat, const Eigen::VectorXd& v);

/// Value iteration from zero until ||v - v*||_inf <= tol is guaranteed.
Eigen::VectorXd exact_vi(const FlatMdp& flat, double tol, std::size_t max_iters = 1000000);

/// Fixed point w of w = G max_a (r^a + gamma P^a H w) over all states.
/// Stops when ||H(w_{t+1} - w_t)||_inf <= tol (1 - gamma) / gamma.
/// Throws ContractError unless ||HG||_inf <= 1 + 1e-12.
WeightVector exact_avi_fixed_point(const FlatMdp& flat, const Eigen::MatrixXd& features,
                                   const Eigen::MatrixXd& projection, double tol,
                                   std::size_t max_iters = 1000000);

/// Fixed point of v = HG sum_a pi(., a) (r^a + gamma P^a v). policy is N x |A|.
Eigen::VectorXd approx_policy_value(const FlatMdp& flat, const Eigen::MatrixXd& features,
                                    const Eigen::MatrixXd& projection,
                                    const Eigen::MatrixXd& policy, double tol,
                                    std::size_t max_iters = 1000000);

/// N x |A| table of sum_y |P_a(y|x) - P_b(y|x)|.
Eigen::MatrixXd l1_model_distance(const FlatMdp& lhs, const FlatMdp& rhs);

/// Plain-text export: header, then per action a reward line and N matrix rows.
void write_flat(std::ostream& out, const FlatMdp& flat);

} // namespace fmdp
