#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace fmdp {

using StateIndex = std::uint64_t;
using Action = std::size_t;

/// One value per state variable.
using StateAssignment = std::vector<int>;

/// Product of m finite variable domains. Flat indexing is mixed radix with
/// variable 0 as the least significant digit.
class VariableSpace {
public:
    /// Largest joint space accepted (2^40 states).
    static constexpr StateIndex max_joint_size = StateIndex{1} << 40;

    VariableSpace() = default;
    explicit VariableSpace(std::vector<int> sizes);

    std::size_t num_variables() const { return sizes_.size(); }
    int size(std::size_t var) const { return sizes_[var]; }
    const std::vector<int>& sizes() const { return sizes_; }
    int max_size() const;
    StateIndex joint_size() const { return joint_size_; }

    bool contains(std::span<const int> x) const;
    /// Throws InvalidStateError unless contains(x).
    void check(std::span<const int> x) const;

    StateIndex index_of(std::span<const int> x) const;
    StateAssignment state_at(StateIndex index) const;

    bool operator==(const VariableSpace&) const = default;

private:
    std::vector<int> sizes_;
    StateIndex joint_size_ = 0;
};

inline StateIndex state_index(std::span<const int> x, const VariableSpace& space) {
    return space.index_of(x);
}

inline StateAssignment index_state(StateIndex index, const VariableSpace& space) {
    return space.state_at(index);
}

/// Strictly increasing list of variable indices.
class Scope {
public:
    Scope() = default;
    /// Sorts and rejects duplicates (ModelError).
    Scope(std::vector<std::size_t> indices);
    Scope(std::initializer_list<std::size_t> indices)
        : Scope(std::vector<std::size_t>(indices)) {}

    static Scope all(std::size_t num_variables);

    const std::vector<std::size_t>& indices() const { return indices_; }
    std::size_t size() const { return indices_.size(); }
    bool empty() const { return indices_.empty(); }
    bool contains(std::size_t var) const;
    std::size_t operator[](std::size_t pos) const { return indices_[pos]; }

    /// Throws ModelError if an index is out of range for the space.
    void check(const VariableSpace& space) const;

    /// Number of joint assignments of the scoped variables.
    std::size_t local_size(const VariableSpace& space) const;
    /// Mixed-radix index of x[scope]; the first scope variable is least significant.
    std::size_t local_index(const VariableSpace& space, std::span<const int> x) const;
    /// Inverse of local_values: index of the scoped variables' values.
    std::size_t index_of_values(const VariableSpace& space, std::span<const int> values) const;
    /// Values of the scoped variables for a local index.
    std::vector<int> local_values(const VariableSpace& space, std::size_t local) const;

    bool operator==(const Scope&) const = default;

private:
    std::vector<std::size_t> indices_;
};

/// Dense table of a local-scope function over X[scope].
struct LocalTable {
    Scope scope;
    std::vector<double> values;

    LocalTable() = default;
    LocalTable(Scope scope, std::vector<double> values)
        : scope(std::move(scope)), values(std::move(values)) {}

    /// Value at x[scope] for a full assignment x (the extension of the table).
    double at(const VariableSpace& space, std::span<const int> x) const {
        return values[scope.local_index(space, x)];
    }

    void check(const VariableSpace& space) const;

    bool operator==(const LocalTable&) const = default;
};

inline double extend_lookup(const LocalTable& f, const VariableSpace& space,
                            std::span<const int> x) {
    space.check(x);
    return f.at(space, x);
}

std::string to_string(std::span<const int> x);

} // namespace fmdp
