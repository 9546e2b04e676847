#pragma once

#include "fmdp/basis.hpp"
#include "fmdp/model.hpp"

#include <optional>
#include <string>
#include <string_view>
#include <vector>

// Line-oriented text format for factored MDPs. '#' starts a comment.
//
//   fmdp 1
//   gamma 0.9
//   rmax 1
//   scope-bound 2
//   variables
//     pos 3
//     door 2
//   end
//   actions
//     left
//     right
//   end
//   start 0 1
//   transition pos parents pos door
//     action left
//       0 0 : 1 0 0          # parent values, then P(y | row)
//       ...
//     end
//     ...
//   end
//   reward scope pos
//     action left
//       0 : 0
//       ...
//     end
//   end
//   basis scope door         # optional, repeatable; empty scope = constant
//     0 : 1
//     1 : 0
//   end
//
// Scopes may be listed in any order; rows always give values in increasing
// variable-index order. Every variable needs exactly one transition block and
// every block needs a row for each parent assignment and action.

namespace fmdp {

struct FmdpDocument {
    FmdpSpec model;
    std::vector<std::string> variable_names;
    std::vector<std::string> action_names;
    std::optional<BasisSet> basis;

    bool operator==(const FmdpDocument&) const = default;
};

enum class ParseCategory {
    syntax,
    /// Undeclared name or out-of-range value.
    reference,
    /// Row not summing to 1 within 1e-9, or a negative entry.
    probability,
    scope_bound,
    duplicate,
    /// Discount, reward or start state outside the allowed range.
    range,
};

std::string to_string(ParseCategory category);

struct ParseError {
    std::size_t line = 0;
    std::size_t column = 0;
    ParseCategory category = ParseCategory::syntax;
    std::string message;
};

/// "line:column: category: message"
std::string to_string(const ParseError& error);

struct ParseResult {
    std::optional<FmdpDocument> document;
    std::vector<ParseError> errors;

    bool ok() const { return document.has_value(); }
};

/// Tolerance on transition row sums accepted by the parser.
inline constexpr double row_sum_tolerance = 1e-9;

ParseResult parse_fmdp(std::string_view text);

/// Parses a file; throws ModelError listing every error on failure.
FmdpDocument load_fmdp(const std::string& path);

/// Renders a document with round-trip-exact numbers. Missing names default to
/// x<i> and a<j>.
std::string emit_fmdp(const FmdpDocument& doc);

/// Document around a bare model, with default names and no basis.
FmdpDocument make_document(FmdpSpec model);

} // namespace fmdp
