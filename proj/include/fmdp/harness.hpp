#pragma once

#include "fmdp/basis.hpp"
#include "fmdp/environment.hpp"
#include "fmdp/fmdp_format.hpp"
#include "fmdp/foim.hpp"
#include "fmdp/model.hpp"

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace fmdp {

/// Process exit codes of the command-line tool.
enum ExitCode : int {
    exit_ok = 0,
    exit_usage = 1,
    exit_validation = 2,
    exit_nonconvergence = 3,
    exit_oracle_too_large = 4,
};

/// One CSV row per interaction step.
struct MetricsRow {
    std::uint64_t t = 0;
    StateIndex state = 0;
    Action action = 0;
    double q_foim = 0.0;
    /// Present with oracle metrics only.
    std::optional<double> q_avi;
    std::optional<bool> near_optimal;
    double known_fraction = 0.0;
    /// Max over real (x, a) of the L1 distance between learner and true
    /// successor distributions; absent when the augmented space is too large.
    std::optional<double> max_l1_error;
    std::size_t planner_iterations = 0;
};

struct RunSummary {
    std::uint64_t steps = 0;
    std::uint64_t mistakes = 0;
    /// First step after whose update every real component was known.
    std::optional<std::uint64_t> all_known_step;
    std::uint64_t mistakes_after_all_known = 0;
    double final_known_fraction = 0.0;
    double r_e = 0.0;
    std::uint64_t known_threshold = 0;
    std::uint64_t plans = 0;
};

struct LearnOptions {
    FoimConfig foim;
    std::uint64_t steps = 0;
    /// Seed of the environment stream.
    std::uint64_t env_seed = 0;
    bool oracle_metrics = false;
    /// Tolerance of the near-optimality flag; defaults to foim.epsilon.
    std::optional<double> mistake_epsilon;
};

/// Stable CSV header for the given column set.
std::string metrics_header(bool oracle_metrics);
std::string metrics_line(const MetricsRow& row, bool oracle_metrics);

/// Reference weights for metrics: exact AVI fixed point on the augmented true
/// model with the augmented basis and the global projection over all states.
WeightVector reference_avi_weights(const GoeSpec& goe, double tol = 1e-6);

/// Max over real (x, a) of sum_y |P_learner(y|x,a) - P_true(y|x,a)| on the
/// augmented space.
double max_l1_model_error(const FmdpSpec& learner, const FmdpSpec& augmented_truth,
                          const VariableSpace& base);

/// Drives an agent against an environment for options.steps steps, passing
/// every row to sink.
RunSummary run_learning(FoimAgent& agent, Environment& env, const LearnOptions& options,
                        const std::function<void(const MetricsRow&)>& sink);

/// Entry point of the command-line tool. Subcommands: validate, gen, plan,
/// learn, oracle. Output files go to --out, else $FMDP_OUT_DIR, else ".".
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

} // namespace fmdp
