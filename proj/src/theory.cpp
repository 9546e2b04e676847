#include "fmdp/theory.hpp"
#include "fmdp/errors.hpp"

#include <cmath>
#include <string>

namespace fmdp {

namespace {

double checked_log(double argument, const char* what) {
    if (!(argument > 1.0))
        throw FormulaDomainError(std::string(what) + ": log argument " +
                                 std::to_string(argument) + " is not greater than 1");
    return std::log(argument);
}

void check_gamma(double gamma) {
    if (!(gamma >= 0.0 && gamma < 1.0))
        throw FormulaDomainError("discount must lie in [0, 1)");
}

} // namespace

double r_e(double c, double epsilon, double delta, std::size_t m, std::size_t n_f,
           std::size_t num_actions, double r_max, double gamma) {
    check_gamma(gamma);
    if (!(c > 0.0 && epsilon > 0.0 && delta > 0.0 && r_max > 0.0) || m == 0 || n_f == 0 ||
        num_actions == 0)
        throw FormulaDomainError("R_E: all arguments must be positive");
    const double md = static_cast<double>(m);
    const double horizon = 1.0 - gamma;
    const double log_term =
        checked_log(md * static_cast<double>(n_f) * static_cast<double>(num_actions) /
                        (horizon * epsilon * delta),
                    "R_E");
    return c * md * r_max * r_max / (std::pow(horizon, 4) * epsilon) * log_term;
}

double beta(double delta1, double n) {
    if (!(delta1 > 0.0 && delta1 < 1.0))
        throw FormulaDomainError("beta: delta1 must lie in (0, 1)");
    return std::sqrt(2.0 * (std::log(1.0 / delta1) + n * std::log(2.0)));
}

std::uint64_t known_threshold(double epsilon, double delta, std::size_t m, std::size_t n_f,
                              std::size_t num_actions, double c_kb) {
    if (!(epsilon > 0.0 && delta > 0.0 && c_kb > 0.0) || m == 0 || n_f == 0 || num_actions == 0)
        throw FormulaDomainError("known threshold: all arguments must be positive");
    const double md = static_cast<double>(m);
    const double log_term = checked_log(
        md * md * static_cast<double>(n_f) * static_cast<double>(num_actions) / (delta * epsilon),
        "known threshold");
    return static_cast<std::uint64_t>(std::ceil(c_kb * md * md / (epsilon * epsilon) * log_term));
}

double v0_bound(double r_max, double gamma) {
    check_gamma(gamma);
    const double v_max = r_max / (1.0 - gamma);
    return (3.0 - gamma) / (1.0 - gamma) * v_max;
}

double epsilon_horizon(double epsilon, double gamma, double r_e) {
    check_gamma(gamma);
    const double scale = epsilon * (1.0 - gamma);
    if (!(scale > 0.0 && scale < 1.0))
        throw FormulaDomainError("epsilon horizon requires 0 < eps (1 - gamma) < 1");
    return r_e / (1.0 - gamma) * std::log(1.0 / scale);
}

} // namespace fmdp
