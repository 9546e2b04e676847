#pragma once

#include "fmdp/space.hpp"

#include <Eigen/Dense>

#include <vector>

namespace fmdp {

using WeightVector = Eigen::VectorXd;

/// K local-scope, nonnegative basis functions. V(x) = sum_k w_k h_k(x[C_k]).
struct BasisSet {
    std::vector<LocalTable> functions;
    /// True when one of the functions is the constant 1 (empty scope).
    bool has_constant = false;

    std::size_t size() const { return functions.size(); }

    /// Throws DegenerateBasisError / ModelError on an invalid basis
    /// (empty set, negative entries, identically-zero function, bad table shape).
    void check(const VariableSpace& space) const;

    bool operator==(const BasisSet&) const = default;
};

/// Per-variable value indicators for every (variable, value) pair plus the constant.
BasisSet default_basis(const VariableSpace& space);
/// One indicator per joint state over the full scope. K = N; desk scale only.
BasisSet joint_indicator_basis(const VariableSpace& space);
/// Only the constant function 1.
BasisSet constant_basis();

Eigen::VectorXd feature_vector(const BasisSet& basis, const VariableSpace& space,
                               std::span<const int> x);
double value_at(const BasisSet& basis, const WeightVector& w, const VariableSpace& space,
                std::span<const int> x);

enum class Normalization {
    /// G = H^T / ||H H^T||_inf
    global,
    /// Per-feature rows G_k = H^T_k / ||(H^T H)_{k,*}||_1, then a global rescale
    /// if ||HG||_inf still exceeds 1.
    per_feature,
};

/// Feature matrix and normalized projection restricted to a state sample.
struct ProjectionOnSample {
    std::vector<StateAssignment> states;
    /// N1 x K
    Eigen::MatrixXd features;
    /// K x N1
    Eigen::MatrixXd projection;
    Normalization scheme = Normalization::global;
    /// Divisor applied to row k of H^T.
    Eigen::VectorXd row_scale;
    /// ||features * projection||_inf after normalization.
    double hg_norm = 0.0;

    std::size_t num_samples() const { return states.size(); }
};

ProjectionOnSample build_projection(const BasisSet& basis, const VariableSpace& space,
                                    std::vector<StateAssignment> sample,
                                    Normalization scheme = Normalization::global);

/// w = G v
WeightVector project(const ProjectionOnSample& proj, const Eigen::VectorXd& v_on_sample);

/// Induced infinity norm (max absolute row sum) of a dense matrix.
double inf_norm(const Eigen::MatrixXd& m);

} // namespace fmdp
