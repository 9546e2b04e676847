#include "fmdp/space.hpp"
#include "fmdp/errors.hpp"

#include <algorithm>
#include <sstream>

namespace fmdp {

VariableSpace::VariableSpace(std::vector<int> sizes) : sizes_(std::move(sizes)) {
    if (sizes_.empty())
        throw ModelError("variable space needs at least one variable");
    joint_size_ = 1;
    for (std::size_t i = 0; i < sizes_.size(); ++i) {
        if (sizes_[i] < 1)
            throw ModelError("variable " + std::to_string(i) + " has empty domain");
        joint_size_ *= static_cast<StateIndex>(sizes_[i]);
        if (joint_size_ > max_joint_size)
            throw ModelError("joint state space exceeds 2^40 states");
    }
}

int VariableSpace::max_size() const {
    return sizes_.empty() ? 0 : *std::max_element(sizes_.begin(), sizes_.end());
}

bool VariableSpace::contains(std::span<const int> x) const {
    if (x.size() != sizes_.size())
        return false;
    for (std::size_t i = 0; i < x.size(); ++i)
        if (x[i] < 0 || x[i] >= sizes_[i])
            return false;
    return true;
}

void VariableSpace::check(std::span<const int> x) const {
    if (x.size() != sizes_.size())
        throw InvalidStateError("state has " + std::to_string(x.size()) +
                                " components, expected " + std::to_string(sizes_.size()));
    for (std::size_t i = 0; i < x.size(); ++i)
        if (x[i] < 0 || x[i] >= sizes_[i])
            throw InvalidStateError("component " + std::to_string(i) + " = " +
                                    std::to_string(x[i]) + " out of range [0, " +
                                    std::to_string(sizes_[i]) + ")");
}

StateIndex VariableSpace::index_of(std::span<const int> x) const {
    check(x);
    StateIndex index = 0;
    for (std::size_t i = sizes_.size(); i-- > 0;)
        index = index * static_cast<StateIndex>(sizes_[i]) + static_cast<StateIndex>(x[i]);
    return index;
}

StateAssignment VariableSpace::state_at(StateIndex index) const {
    if (index >= joint_size_)
        throw InvalidStateError("state index " + std::to_string(index) + " out of range");
    StateAssignment x(sizes_.size());
    for (std::size_t i = 0; i < sizes_.size(); ++i) {
        x[i] = static_cast<int>(index % static_cast<StateIndex>(sizes_[i]));
        index /= static_cast<StateIndex>(sizes_[i]);
    }
    return x;
}

Scope::Scope(std::vector<std::size_t> indices) : indices_(std::move(indices)) {
    std::sort(indices_.begin(), indices_.end());
    if (std::adjacent_find(indices_.begin(), indices_.end()) != indices_.end())
        throw ModelError("scope contains a duplicate variable index");
}

Scope Scope::all(std::size_t num_variables) {
    std::vector<std::size_t> idx(num_variables);
    for (std::size_t i = 0; i < num_variables; ++i)
        idx[i] = i;
    return Scope(std::move(idx));
}

bool Scope::contains(std::size_t var) const {
    return std::binary_search(indices_.begin(), indices_.end(), var);
}

void Scope::check(const VariableSpace& space) const {
    if (!indices_.empty() && indices_.back() >= space.num_variables())
        throw ModelError("scope references variable " + std::to_string(indices_.back()) +
                         " but the space has " + std::to_string(space.num_variables()));
}

std::size_t Scope::local_size(const VariableSpace& space) const {
    std::size_t n = 1;
    for (auto i : indices_)
        n *= static_cast<std::size_t>(space.size(i));
    return n;
}

std::size_t Scope::local_index(const VariableSpace& space, std::span<const int> x) const {
    std::size_t index = 0;
    for (std::size_t p = indices_.size(); p-- > 0;)
        index = index * static_cast<std::size_t>(space.size(indices_[p])) +
                static_cast<std::size_t>(x[indices_[p]]);
    return index;
}

std::size_t Scope::index_of_values(const VariableSpace& space,
                                   std::span<const int> values) const {
    std::size_t index = 0;
    for (std::size_t p = indices_.size(); p-- > 0;)
        index = index * static_cast<std::size_t>(space.size(indices_[p])) +
                static_cast<std::size_t>(values[p]);
    return index;
}

std::vector<int> Scope::local_values(const VariableSpace& space, std::size_t local) const {
    std::vector<int> values(indices_.size());
    for (std::size_t p = 0; p < indices_.size(); ++p) {
        auto n = static_cast<std::size_t>(space.size(indices_[p]));
        values[p] = static_cast<int>(local % n);
        local /= n;
    }
    return values;
}

void LocalTable::check(const VariableSpace& space) const {
    scope.check(space);
    if (values.size() != scope.local_size(space))
        throw ModelError("local table has " + std::to_string(values.size()) +
                         " entries, scope requires " +
                         std::to_string(scope.local_size(space)));
}

std::string to_string(std::span<const int> x) {
    std::ostringstream os;
    os << '(';
    for (std::size_t i = 0; i < x.size(); ++i)
        os << (i ? "," : "") << x[i];
    os << ')';
    return os.str();
}

} // namespace fmdp
