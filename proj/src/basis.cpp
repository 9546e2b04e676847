#include "fmdp/basis.hpp"
#include "fmdp/errors.hpp"

#include <cmath>

namespace fmdp {

void BasisSet::check(const VariableSpace& space) const {
    if (functions.empty())
        throw DegenerateBasisError("basis set is empty");
    for (std::size_t k = 0; k < functions.size(); ++k) {
        const auto& h = functions[k];
        h.check(space);
        bool nonzero = false;
        for (double v : h.values) {
            if (!(v >= 0.0) || !std::isfinite(v))
                throw DegenerateBasisError("basis function " + std::to_string(k) +
                                           " has a negative or non-finite value");
            nonzero = nonzero || v > 0.0;
        }
        if (!nonzero)
            throw DegenerateBasisError("basis function " + std::to_string(k) +
                                       " is identically zero");
    }
}

BasisSet default_basis(const VariableSpace& space) {
    BasisSet basis;
    for (std::size_t i = 0; i < space.num_variables(); ++i)
        for (int v = 0; v < space.size(i); ++v) {
            std::vector<double> table(static_cast<std::size_t>(space.size(i)), 0.0);
            table[static_cast<std::size_t>(v)] = 1.0;
            basis.functions.emplace_back(Scope{i}, std::move(table));
        }
    basis.functions.emplace_back(Scope{}, std::vector<double>{1.0});
    basis.has_constant = true;
    return basis;
}

BasisSet joint_indicator_basis(const VariableSpace& space) {
    BasisSet basis;
    const auto n = static_cast<std::size_t>(space.joint_size());
    auto all = Scope::all(space.num_variables());
    basis.functions.reserve(n);
    for (std::size_t s = 0; s < n; ++s) {
        std::vector<double> table(n, 0.0);
        table[s] = 1.0;
        basis.functions.emplace_back(all, std::move(table));
    }
    return basis;
}

BasisSet constant_basis() {
    BasisSet basis;
    basis.functions.emplace_back(Scope{}, std::vector<double>{1.0});
    basis.has_constant = true;
    return basis;
}

Eigen::VectorXd feature_vector(const BasisSet& basis, const VariableSpace& space,
                               std::span<const int> x) {
    space.check(x);
    Eigen::VectorXd phi(static_cast<Eigen::Index>(basis.size()));
    for (std::size_t k = 0; k < basis.size(); ++k)
        phi[static_cast<Eigen::Index>(k)] = basis.functions[k].at(space, x);
    return phi;
}

double value_at(const BasisSet& basis, const WeightVector& w, const VariableSpace& space,
                std::span<const int> x) {
    space.check(x);
    double v = 0.0;
    for (std::size_t k = 0; k < basis.size(); ++k)
        v += w[static_cast<Eigen::Index>(k)] * basis.functions[k].at(space, x);
    return v;
}

double inf_norm(const Eigen::MatrixXd& m) {
    if (m.size() == 0)
        return 0.0;
    return m.cwiseAbs().rowwise().sum().maxCoeff();
}

ProjectionOnSample build_projection(const BasisSet& basis, const VariableSpace& space,
                                    std::vector<StateAssignment> sample, Normalization scheme) {
    if (sample.empty())
        throw DegenerateBasisError("cannot build a projection on an empty sample");
    basis.check(space);

    ProjectionOnSample proj;
    proj.scheme = scheme;
    const auto n1 = static_cast<Eigen::Index>(sample.size());
    const auto k = static_cast<Eigen::Index>(basis.size());
    proj.features.resize(n1, k);
    for (Eigen::Index s = 0; s < n1; ++s)
        proj.features.row(s) = feature_vector(basis, space, sample[static_cast<std::size_t>(s)]);

    const Eigen::VectorXd column_sums = proj.features.colwise().sum().transpose();
    for (Eigen::Index c = 0; c < k; ++c)
        if (!(column_sums[c] > 0.0))
            throw DegenerateBasisError("basis function " + std::to_string(c) +
                                       " is zero on every sampled state");

    // All entries of H are nonnegative, so every product below is too and
    // absolute row sums reduce to plain matrix-vector products.
    const Eigen::VectorXd feature_row_sums = proj.features.rowwise().sum();
    switch (scheme) {
    case Normalization::global: {
        // ||H H^T||_inf = max_x sum_k H_xk colsum_k
        const double norm = (proj.features * column_sums).maxCoeff();
        proj.row_scale = Eigen::VectorXd::Constant(k, norm);
        break;
    }
    case Normalization::per_feature: {
        // ||(H^T H)_{k,*}||_1 = sum_y H_yk rowsum_y
        proj.row_scale = proj.features.transpose() * feature_row_sums;
        break;
    }
    }
    proj.projection = proj.row_scale.cwiseInverse().asDiagonal() * proj.features.transpose();

    auto hg_norm = [&] {
        const Eigen::VectorXd g_row_sums = proj.projection.rowwise().sum();
        return (proj.features * g_row_sums).maxCoeff();
    };
    proj.hg_norm = hg_norm();
    if (scheme == Normalization::per_feature && proj.hg_norm > 1.0) {
        proj.projection /= proj.hg_norm;
        proj.row_scale *= proj.hg_norm;
        proj.hg_norm = hg_norm();
    }
    proj.states = std::move(sample);
    return proj;
}

WeightVector project(const ProjectionOnSample& proj, const Eigen::VectorXd& v_on_sample) {
    if (v_on_sample.size() != proj.projection.cols())
        throw ContractError("value vector length " + std::to_string(v_on_sample.size()) +
                            " does not match sample size " +
                            std::to_string(proj.projection.cols()));
    return proj.projection * v_on_sample;
}

} // namespace fmdp
