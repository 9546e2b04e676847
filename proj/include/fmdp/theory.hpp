#pragma once

#include <cstddef>
#include <cstdint>

// Constants from the FOIM sample-complexity analysis. All logarithms are natural.
// Hidden Theta-constants (c, C_kb) are explicit arguments.

namespace fmdp {

/// Garden-of-Eden reward
///   R_E = c m R_max^2 / ((1-gamma)^4 eps) * ln(m N_f |A| / ((1-gamma) eps delta)).
/// Throws FormulaDomainError when the log argument is <= 1.
double r_e(double c, double epsilon, double delta, std::size_t m, std::size_t n_f,
           std::size_t num_actions, double r_max, double gamma);

/// L1 concentration radius numerator: sqrt(2 (ln(1/delta1) + n ln 2)).
double beta(double delta1, double n);

/// Visits after which a component counts as known:
///   ceil(C m^2 / eps^2 * ln(m^2 N_f |A| / (delta eps))).
std::uint64_t known_threshold(double epsilon, double delta, std::size_t m, std::size_t n_f,
                              std::size_t num_actions, double c_kb);

/// Universal bound on AVI value functions: (3-gamma)/(1-gamma) * R_max/(1-gamma).
double v0_bound(double r_max, double gamma);

/// (r_e / (1-gamma)) ln(1 / (eps (1-gamma))); diagnostic only.
double epsilon_horizon(double epsilon, double gamma, double r_e);

} // namespace fmdp
