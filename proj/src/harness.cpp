#include "fmdp/harness.hpp"
#include "fmdp/errors.hpp"
#include "fmdp/flat_oracle.hpp"
#include "fmdp/format_util.hpp"
#include "fmdp/planner.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

namespace fmdp {

std::string metrics_header(bool oracle_metrics) {
    std::string h = "t,state,action,q_foim";
    if (oracle_metrics)
        h += ",q_avi,near_optimal";
    h += ",known_fraction,max_l1_error,planner_iterations";
    return h;
}

std::string metrics_line(const MetricsRow& row, bool oracle_metrics) {
    std::string s = std::to_string(row.t) + "," + std::to_string(row.state) + "," +
                    std::to_string(row.action) + "," + format_real(row.q_foim);
    if (oracle_metrics) {
        s += "," + (row.q_avi ? format_real(*row.q_avi) : std::string());
        s += "," + (row.near_optimal ? std::string(*row.near_optimal ? "1" : "0") : std::string());
    }
    s += "," + format_real(row.known_fraction);
    s += "," + (row.max_l1_error ? format_real(*row.max_l1_error) : std::string());
    s += "," + std::to_string(row.planner_iterations);
    return s;
}

WeightVector reference_avi_weights(const GoeSpec& goe, double tol) {
    const auto truth = augment_true_model(goe);
    const auto flat = flatten(truth);
    const auto features = feature_matrix(goe.basis, truth.space);
    return exact_avi_fixed_point(flat, features, global_projection(features), tol);
}

namespace {

// sum_y |prod_i p_i(y_i) - prod_i q_i(y_i)| by enumeration of the joint successor space.
double joint_l1(const FmdpSpec& lhs, const FmdpSpec& rhs, std::span<const int> x, Action a) {
    const auto& space = lhs.space;
    const auto m = space.num_variables();
    std::vector<std::span<const double>> p(m), q(m);
    for (std::size_t i = 0; i < m; ++i) {
        const auto& f = lhs.transitions[i];
        const auto& g = rhs.transitions[i];
        p[i] = f.row(a, f.parents.local_index(space, x));
        q[i] = g.row(a, g.parents.local_index(space, x));
    }
    std::vector<int> y(m, 0);
    double total = 0.0;
    for (StateIndex s = 0; s < space.joint_size(); ++s) {
        double pp = 1.0, qq = 1.0;
        for (std::size_t i = 0; i < m; ++i) {
            pp *= p[i][static_cast<std::size_t>(y[i])];
            qq *= q[i][static_cast<std::size_t>(y[i])];
        }
        total += std::abs(pp - qq);
        for (std::size_t i = 0; i < m; ++i) {
            if (++y[i] < space.size(i))
                break;
            y[i] = 0;
        }
    }
    return total;
}

} // namespace

double max_l1_model_error(const FmdpSpec& learner, const FmdpSpec& augmented_truth,
                          const VariableSpace& base) {
    double worst = 0.0;
    for (StateIndex s = 0; s < base.joint_size(); ++s) {
        const auto x = base.state_at(s);
        for (Action a = 0; a < learner.num_actions; ++a)
            worst = std::max(worst, joint_l1(learner, augmented_truth, x, a));
    }
    return worst;
}

RunSummary run_learning(FoimAgent& agent, Environment& env, const LearnOptions& options,
                        const std::function<void(const MetricsRow&)>& sink) {
    const auto& goe = agent.goe();
    const auto& base = goe.base.space;
    const double tolerance = options.mistake_epsilon.value_or(agent.config().epsilon);

    RunSummary summary;
    summary.r_e = agent.r_e();
    summary.known_threshold = agent.known_threshold();

    std::optional<FmdpSpec> truth;
    std::optional<WeightVector> reference;
    if (options.oracle_metrics) {
        try {
            reference = reference_avi_weights(goe);
        } catch (const OracleTooLargeError& e) {
            throw OracleTooLargeError(std::string(e.what()) +
                                      "; rerun without --oracle-metrics");
        }
    }

    // Per real (x, a) L1 errors, refreshed for the states whose rows change.
    const bool track_l1 = goe.augmented.space.joint_size() <= max_oracle_states;
    std::vector<double> l1;
    if (track_l1 || reference)
        truth = augment_true_model(goe);
    if (track_l1) {
        l1.assign(static_cast<std::size_t>(base.joint_size()) * goe.base.num_actions, 0.0);
        const auto learner = agent.counts().current_model(goe);
        for (StateIndex s = 0; s < base.joint_size(); ++s) {
            const auto x = base.state_at(s);
            for (Action a = 0; a < goe.base.num_actions; ++a)
                l1[s * goe.base.num_actions + a] = joint_l1(learner, *truth, x, a);
        }
    }
    const auto& counts = agent.counts();
    FmdpSpec learner;

    for (std::uint64_t step = 0; step < options.steps; ++step) {
        const auto rec = agent.step(env);
        MetricsRow row;
        row.t = rec.t;
        row.state = base.index_of(rec.state);
        row.action = rec.action;
        row.q_foim = rec.q_model;
        row.known_fraction = rec.known_fraction;
        row.planner_iterations = rec.planner_iterations;
        if (reference) {
            const double q_ref = q_value(*truth, goe.basis, *reference, rec.state, rec.action);
            row.q_avi = q_ref;
            row.near_optimal = rec.q_model >= q_ref - tolerance;
            if (!*row.near_optimal) {
                ++summary.mistakes;
                if (summary.all_known_step)
                    ++summary.mistakes_after_all_known;
            }
        }
        if (track_l1) {
            learner = counts.current_model(goe);
            std::vector<std::size_t> rows(counts.num_factors());
            for (std::size_t i = 0; i < rows.size(); ++i)
                rows[i] = counts.row_of(i, rec.state);
            double worst = 0.0;
            for (StateIndex s = 0; s < base.joint_size(); ++s) {
                const auto x = base.state_at(s);
                bool touched = false;
                for (std::size_t i = 0; i < rows.size() && !touched; ++i)
                    touched = counts.row_of(i, x) == rows[i];
                auto& cell = l1[s * goe.base.num_actions + rec.action];
                if (touched)
                    cell = joint_l1(learner, *truth, x, rec.action);
                for (Action a = 0; a < goe.base.num_actions; ++a)
                    worst = std::max(worst, l1[s * goe.base.num_actions + a]);
            }
            row.max_l1_error = worst;
        }
        if (!summary.all_known_step && rec.known_fraction >= 1.0)
            summary.all_known_step = rec.t;
        sink(row);
        ++summary.steps;
    }
    summary.final_known_fraction = agent.known_fraction();
    summary.plans = agent.plans();
    return summary;
}

namespace {

namespace fs = std::filesystem;

struct CommonOptions {
    std::string out_dir;
    std::uint64_t seed = 0;
    std::optional<double> gamma_override;
    std::string basis = "auto";
};

fs::path output_dir(const CommonOptions& common) {
    fs::path dir = common.out_dir;
    if (dir.empty()) {
        const char* env = std::getenv("FMDP_OUT_DIR");
        dir = env && *env ? env : ".";
    }
    fs::create_directories(dir);
    return dir;
}

void write_file(const fs::path& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    if (!out)
        throw ConfigError("cannot write " + path.string());
    out << content;
}

FmdpDocument load_model(const std::string& path, const CommonOptions& common) {
    auto doc = load_fmdp(path);
    if (common.gamma_override) {
        const double g = *common.gamma_override;
        if (!(g >= 0.0 && g < 1.0))
            throw ConfigError("--gamma-override must lie in [0, 1)");
        doc.model.gamma = g;
    }
    return doc;
}

BasisSet choose_basis(const FmdpDocument& doc, const std::string& name) {
    const auto& space = doc.model.space;
    if (name == "auto")
        return doc.basis ? *doc.basis : default_basis(space);
    if (name == "file") {
        if (!doc.basis)
            throw ConfigError("--basis file: the model declares no basis");
        return *doc.basis;
    }
    if (name == "default")
        return default_basis(space);
    if (name == "joint")
        return joint_indicator_basis(space);
    if (name == "constant")
        return constant_basis();
    throw ConfigError("unknown basis '" + name + "'");
}

Normalization scheme_of(const std::string& name) {
    if (name == "global")
        return Normalization::global;
    if (name == "per-feature")
        return Normalization::per_feature;
    throw ConfigError("unknown normalization scheme '" + name + "'");
}

std::string render_weights(const WeightVector& w) {
    std::string s = "weights " + std::to_string(w.size()) + "\n";
    for (Eigen::Index k = 0; k < w.size(); ++k)
        s += format_real(w[k]) + "\n";
    return s;
}

std::string render_values(const Eigen::VectorXd& v) {
    std::string s = "values " + std::to_string(v.size()) + "\n";
    for (Eigen::Index x = 0; x < v.size(); ++x)
        s += std::to_string(x) + " " + format_real(v[x]) + "\n";
    return s;
}

struct PlanFlags {
    double epsilon = 0.1;
    double delta = 0.1;
    std::optional<std::size_t> n1;
    bool exhaustive = false;
    std::string scheme = "global";
    std::size_t max_iters = 10000;

    PlannerConfig config(std::uint64_t seed) const {
        PlannerConfig c;
        c.epsilon = epsilon;
        c.delta = delta;
        c.n1_override = n1;
        c.exhaustive = exhaustive;
        c.scheme = scheme_of(scheme);
        c.max_iters = max_iters;
        c.seed = seed;
        return c;
    }
};

void add_common(CLI::App* cmd, CommonOptions& common, bool with_basis) {
    cmd->add_option("--out", common.out_dir, "Output directory (default $FMDP_OUT_DIR or .)");
    cmd->add_option("--seed", common.seed, "Random seed");
    cmd->add_option("--gamma-override", common.gamma_override, "Replace the model discount");
    if (with_basis)
        cmd->add_option("--basis", common.basis, "auto|file|default|joint|constant")
            ->capture_default_str();
}

void add_planner(CLI::App* cmd, PlanFlags& plan) {
    cmd->add_option("--epsilon", plan.epsilon, "Accuracy target")->capture_default_str();
    cmd->add_option("--delta", plan.delta, "Failure probability")->capture_default_str();
    cmd->add_option("--n1", plan.n1, "Override the planner sample size");
    cmd->add_flag("--exhaustive", plan.exhaustive, "Plan on every state instead of a sample");
    cmd->add_option("--scheme", plan.scheme, "Projection normalization: global|per-feature")
        ->capture_default_str();
    cmd->add_option("--max-iters", plan.max_iters, "Planner iteration cap")
        ->capture_default_str();
}

int cmd_validate(const std::string& path, std::ostream& out, std::ostream& err) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        err << "error: cannot open " << path << "\n";
        return exit_validation;
    }
    std::ostringstream buffer;
    buffer << in.rdbuf();
    const auto result = parse_fmdp(buffer.str());
    if (!result.ok()) {
        for (const auto& e : result.errors)
            err << path << ":" << to_string(e) << "\n";
        return exit_validation;
    }
    const auto& m = result.document->model;
    out << "valid: " << m.num_variables() << " variables, " << m.num_actions << " actions, "
        << m.space.joint_size() << " states, " << m.transitions.size()
        << " transition factors, " << m.rewards.size() << " reward factors, basis "
        << (result.document->basis ? std::to_string(result.document->basis->size()) : "none")
        << "\n";
    return exit_ok;
}

} // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
    CLI::App app{"Factored MDP planning and FOIM learning"};
    app.require_subcommand(1);

    std::string model_path;
    CommonOptions common;
    PlanFlags plan_flags;

    auto* validate = app.add_subcommand("validate", "Parse and validate a model file");
    validate->add_option("model", model_path, "Model file")->required();

    std::string gen_kind;
    std::size_t gen_m = 3, gen_mf = 2, gen_actions = 2;
    int gen_n = 2;
    double p_slip = 0.1, p_fail = 0.05, p_fix = 0.9;
    bool gen_basis = false;
    std::string gen_name;
    auto* gen = app.add_subcommand("gen", "Write a generated benchmark model");
    gen->add_option("kind", gen_kind, "chain|sysadmin|random")
        ->required()
        ->check(CLI::IsMember({"chain", "sysadmin", "random"}));
    gen->add_option("--m", gen_m, "Number of variables")->capture_default_str();
    gen->add_option("--n", gen_n, "Values per variable (chain, random)")->capture_default_str();
    gen->add_option("--p-slip", p_slip, "Chain slip probability")->capture_default_str();
    gen->add_option("--p-fail", p_fail, "Sysadmin failure probability")->capture_default_str();
    gen->add_option("--p-fix", p_fix, "Sysadmin reboot success probability")
        ->capture_default_str();
    gen->add_option("--m-f", gen_mf, "Random: scope bound")->capture_default_str();
    gen->add_option("--actions", gen_actions, "Random: number of actions")
        ->capture_default_str();
    gen->add_flag("--with-basis", gen_basis, "Also write the default indicator basis");
    gen->add_option("--name", gen_name, "Output file name (default <kind>.fmdp)");
    add_common(gen, common, false);

    auto* plan = app.add_subcommand("plan", "Run factored value iteration");
    plan->add_option("model", model_path, "Model file")->required();
    add_common(plan, common, true);
    add_planner(plan, plan_flags);

    std::uint64_t steps = 1000;
    double c_re = 1.0, c_kb = 1.0;
    std::optional<double> r_e_override;
    std::size_t replan_every = 1;
    bool warm_start = true;
    bool oracle_metrics = false;
    bool write_checkpoint = false;
    std::string resume_path;
    auto* learn = app.add_subcommand("learn", "Run the FOIM learner against the model");
    learn->add_option("model", model_path, "Model file (the hidden true environment)")
        ->required();
    add_common(learn, common, true);
    add_planner(learn, plan_flags);
    learn->add_option("--steps", steps, "Interaction steps")->capture_default_str();
    learn->add_option("--c-re", c_re, "Multiplier of the R_E formula")->capture_default_str();
    learn->add_option("--r-e", r_e_override, "Use this R_E instead of the formula");
    learn->add_option("--c-kb", c_kb, "Multiplier of the known threshold")
        ->capture_default_str();
    learn->add_option("--replan-every", replan_every, "Steps between plans")
        ->capture_default_str();
    learn->add_option("--warm-start", warm_start, "Start each plan from the last weights")
        ->capture_default_str();
    learn->add_flag("--oracle-metrics", oracle_metrics,
                    "Add Q of the reference AVI solution and the near-optimality flag");
    learn->add_flag("--checkpoint", write_checkpoint, "Write checkpoint.json after the run");
    learn->add_option("--resume", resume_path, "Continue from a checkpoint.json");

    std::string oracle_mode;
    double oracle_tol = 1e-9;
    auto* oracle = app.add_subcommand("oracle", "Brute-force solvers on the flattened model");
    oracle->add_option("mode", oracle_mode, "vi|avi|flatten")
        ->required()
        ->check(CLI::IsMember({"vi", "avi", "flatten"}));
    oracle->add_option("model", model_path, "Model file")->required();
    oracle->add_option("--tol", oracle_tol, "Distance to the fixed point")->capture_default_str();
    add_common(oracle, common, true);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? exit_ok : exit_usage;
    }

    try {
        if (*validate)
            return cmd_validate(model_path, out, err);

        if (*gen) {
            const double gamma = common.gamma_override.value_or(0.9);
            FmdpSpec model;
            if (gen_kind == "chain")
                model = make_chain(gen_m, gen_n, p_slip, gamma);
            else if (gen_kind == "sysadmin")
                model = make_sysadmin_ring(gen_m, p_fail, p_fix, gamma);
            else
                model = make_random_fmdp(gen_m, gen_n, gen_mf, gen_actions, common.seed, gamma);
            auto doc = make_document(std::move(model));
            if (gen_basis)
                doc.basis = default_basis(doc.model.space);
            const auto path = output_dir(common) / (gen_name.empty() ? gen_kind + ".fmdp" : gen_name);
            write_file(path, emit_fmdp(doc));
            out << path.string() << "\n";
            return exit_ok;
        }

        if (*plan) {
            const auto doc = load_model(model_path, common);
            const auto basis = choose_basis(doc, common.basis);
            const auto config = plan_flags.config(common.seed);
            const auto result = solve(doc.model, basis, config);
            const double start_value =
                value_at(basis, result.weights, doc.model.space, doc.model.start);
            std::ostringstream report;
            report << "iterations " << result.iterations << "\n"
                   << "residual " << format_real(result.residual) << "\n"
                   << "converged " << (result.converged ? "true" : "false") << "\n"
                   << "samples " << result.num_samples << "\n"
                   << "features " << basis.size() << "\n"
                   << "start-value " << format_real(start_value) << "\n";
            const auto dir = output_dir(common);
            write_file(dir / "weights.txt", render_weights(result.weights));
            write_file(dir / "plan-report.txt", report.str());
            out << report.str();
            if (!result.converged) {
                err << "error: planner did not converge within " << config.max_iters
                    << " iterations\n";
                return exit_nonconvergence;
            }
            return exit_ok;
        }

        if (*learn) {
            const auto doc = load_model(model_path, common);
            const auto basis = choose_basis(doc, common.basis);
            LearnOptions options;
            options.steps = steps;
            options.env_seed = common.seed;
            options.oracle_metrics = oracle_metrics;
            FoimConfig& foim = options.foim;
            foim.epsilon = plan_flags.epsilon;
            foim.delta = plan_flags.delta;
            foim.c_re = c_re;
            foim.r_e_override = r_e_override;
            foim.c_kb = c_kb;
            foim.replan_every = replan_every;
            foim.warm_start = warm_start;
            foim.seed = common.seed;
            foim.planner = plan_flags.config(common.seed);

            Environment env(doc.model, options.env_seed);
            std::optional<FoimAgent> agent;
            if (!resume_path.empty()) {
                std::ifstream in(resume_path, std::ios::binary);
                if (!in)
                    throw ConfigError("cannot open " + resume_path);
                nlohmann::json saved;
                try {
                    saved = nlohmann::json::parse(in);
                    if (saved.at("format") != "fmdp-learn-checkpoint")
                        throw ConfigError(resume_path + " is not a learn checkpoint");
                    agent.emplace(FoimAgent::restore(doc.model, basis, saved.at("agent")));
                    env.restore(saved.at("environment").at("state").get<StateAssignment>(),
                                saved.at("environment").at("rng").get<std::string>());
                } catch (const nlohmann::json::exception& e) {
                    throw ConfigError("malformed checkpoint " + resume_path + ": " + e.what());
                }
                options.foim = agent->config();
            } else {
                agent.emplace(doc.model, basis, foim);
            }

            const auto dir = output_dir(common);
            std::ofstream csv(dir / "metrics.csv", std::ios::binary);
            if (!csv)
                throw ConfigError("cannot write " + (dir / "metrics.csv").string());
            csv << metrics_header(oracle_metrics) << "\n";
            const auto started = std::chrono::steady_clock::now();
            const auto summary = run_learning(*agent, env, options, [&](const MetricsRow& row) {
                csv << metrics_line(row, oracle_metrics) << "\n";
            });
            const std::chrono::duration<double> elapsed =
                std::chrono::steady_clock::now() - started;

            std::ostringstream report;
            report << "steps " << summary.steps << "\n"
                   << "r-e " << format_real(summary.r_e) << "\n"
                   << "known-threshold " << summary.known_threshold << "\n"
                   << "plans " << summary.plans << "\n"
                   << "final-known-fraction " << format_real(summary.final_known_fraction)
                   << "\n"
                   << "all-known-step "
                   << (summary.all_known_step ? std::to_string(*summary.all_known_step)
                                              : std::string("none"))
                   << "\n";
            if (oracle_metrics)
                report << "mistakes " << summary.mistakes << "\n"
                       << "mistakes-after-all-known " << summary.mistakes_after_all_known
                       << "\n";
            write_file(dir / "summary.txt", report.str());
            if (write_checkpoint) {
                nlohmann::json saved = {
                    {"format", "fmdp-learn-checkpoint"},
                    {"version", 1},
                    {"agent", agent->checkpoint()},
                    {"environment", {{"state", env.state()}, {"rng", env.rng_state()}}},
                };
                write_file(dir / "checkpoint.json", saved.dump(1) + "\n");
            }
            out << report.str();
            err << "wall-time " << format_real(elapsed.count()) << " s\n";
            return exit_ok;
        }

        if (*oracle) {
            const auto doc = load_model(model_path, common);
            const auto dir = output_dir(common);
            const auto flat = flatten(doc.model);
            if (oracle_mode == "flatten") {
                std::ostringstream text;
                write_flat(text, flat);
                write_file(dir / "flat.txt", text.str());
            } else if (oracle_mode == "vi") {
                const auto v = exact_vi(flat, oracle_tol);
                write_file(dir / "vi-values.txt", render_values(v));
                out << "start-value "
                    << format_real(v[static_cast<Eigen::Index>(doc.model.space.index_of(doc.model.start))])
                    << "\n";
            } else {
                const auto basis = choose_basis(doc, common.basis);
                const auto features = feature_matrix(basis, doc.model.space);
                const auto w =
                    exact_avi_fixed_point(flat, features, global_projection(features), oracle_tol);
                const Eigen::VectorXd v = features * w;
                write_file(dir / "avi-weights.txt", render_weights(w));
                write_file(dir / "avi-values.txt", render_values(v));
                out << "start-value "
                    << format_real(v[static_cast<Eigen::Index>(doc.model.space.index_of(doc.model.start))])
                    << "\n";
            }
            return exit_ok;
        }
    } catch (const NonConvergenceError& e) {
        err << "error: " << e.what() << "\n";
        return exit_nonconvergence;
    } catch (const OracleTooLargeError& e) {
        err << "error: " << e.what() << "\n";
        return exit_oracle_too_large;
    } catch (const ConfigError& e) {
        err << "error: " << e.what() << "\n";
        return exit_usage;
    } catch (const FormulaDomainError& e) {
        err << "error: " << e.what() << "\n";
        return exit_usage;
    } catch (const Error& e) {
        err << "error: " << e.what() << "\n";
        return exit_validation;
    } catch (const fs::filesystem_error& e) {
        err << "error: " << e.what() << "\n";
        return exit_usage;
    }
    return exit_usage;
}

} // namespace fmdp
