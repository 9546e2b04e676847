#include "support.hpp"

#include "fmdp/fmdp_format.hpp"
#include "fmdp/foim.hpp"
#include "fmdp/harness.hpp"
#include "fmdp/theory.hpp"

#include <doctest.h>

#include <cstdlib>

using namespace fmdp;
using namespace fmdp::testing;
namespace fs = std::filesystem;

namespace {

struct Run {
    int code = -1;
    std::string out;
    std::string err;
};

Run cli(std::vector<std::string> args) {
    args.insert(args.begin(), "fmdp-cli");
    std::vector<const char*> argv;
    for (const auto& a : args)
        argv.push_back(a.c_str());
    std::ostringstream out, err;
    Run r;
    r.code = run_cli(static_cast<int>(argv.size()), argv.data(), out, err);
    r.out = out.str();
    r.err = err.str();
    return r;
}

std::vector<std::string> lines_of(const std::string& text) {
    std::vector<std::string> lines;
    std::istringstream in(text);
    for (std::string line; std::getline(in, line);)
        lines.push_back(line);
    return lines;
}

std::vector<double> read_weights(const fs::path& path) {
    std::istringstream in(read_file(path));
    std::string head;
    std::size_t k = 0;
    in >> head >> k;
    std::vector<double> w(k);
    for (auto& v : w)
        in >> v;
    return w;
}

std::vector<double> read_values(const fs::path& path) {
    std::istringstream in(read_file(path));
    std::string head;
    std::size_t n = 0;
    in >> head >> n;
    std::vector<double> v(n);
    for (std::size_t i = 0; i < n; ++i) {
        std::size_t index = 0;
        in >> index >> v[i];
        REQUIRE(index == i);
    }
    return v;
}

std::string write_model(const fs::path& dir, const std::string& name, const FmdpSpec& model) {
    const auto path = dir / name;
    write_text(path, emit_fmdp(make_document(model)));
    return path.string();
}

} // namespace

TEST_CASE("usage errors") {
    CHECK(cli({}).code == exit_usage);
    CHECK(cli({"--help"}).code == exit_ok);
    CHECK(cli({"bogus"}).code == exit_usage);
    CHECK(cli({"plan"}).code == exit_usage);
    const auto dir = scratch_dir("cli-usage");
    const auto model = write_model(dir, "m.fmdp", make_chain(2, 2, 0.1));
    CHECK(cli({"plan", model, "--epsilon", "0", "--out", dir.string()}).code == exit_usage);
    CHECK(cli({"plan", model, "--scheme", "bogus", "--out", dir.string()}).code == exit_usage);
    CHECK(cli({"plan", model, "--basis", "file", "--out", dir.string()}).code == exit_usage);
    CHECK(cli({"plan", model, "--gamma-override", "1.5", "--out", dir.string()}).code == exit_usage);
    CHECK(cli({"learn", model, "--replan-every", "0", "--out", dir.string()}).code == exit_usage);
}

TEST_CASE("validate") {
    const auto dir = scratch_dir("cli-validate");
    const auto good = write_model(dir, "good.fmdp", make_chain(3, 2, 0.1));
    const auto ok = cli({"validate", good});
    CHECK(ok.code == exit_ok);
    CHECK(ok.out.rfind("valid", 0) == 0);

    auto text = read_file(good);
    const auto at = text.find(": 0.9 0.1");
    REQUIRE(at != std::string::npos);
    text.replace(at, 9, ": 0.9 0.2");
    write_text(dir / "bad.fmdp", text);
    const auto bad = cli({"validate", (dir / "bad.fmdp").string()});
    CHECK(bad.code == exit_validation);
    CHECK(bad.err.find("probability") != std::string::npos);
    CHECK(cli({"validate", (dir / "missing.fmdp").string()}).code == exit_validation);
    CHECK(cli({"plan", (dir / "bad.fmdp").string(), "--out", dir.string()}).code == exit_validation);
}

TEST_CASE("gen") {
    const auto dir = scratch_dir("cli-gen");
    for (const auto& kind : {"chain", "sysadmin", "random"}) {
        const auto r = cli({"gen", kind, "--m", "3", "--out", dir.string()});
        REQUIRE(r.code == exit_ok);
        const auto path = dir / (std::string(kind) + ".fmdp");
        CHECK(fs::exists(path));
        CHECK(cli({"validate", path.string()}).code == exit_ok);
    }
    CHECK(load_fmdp((dir / "chain.fmdp").string()).model == make_chain(3, 2, 0.1));
    REQUIRE(cli({"gen", "chain", "--with-basis", "--name", "b.fmdp", "--gamma-override", "0.8",
                 "--out", dir.string()})
                .code == exit_ok);
    const auto doc = load_fmdp((dir / "b.fmdp").string());
    CHECK(doc.model.gamma == 0.8);
    REQUIRE(doc.basis.has_value());
    CHECK(doc.basis->size() == default_basis(doc.model.space).size());
    CHECK(cli({"gen", "chain", "--n", "1", "--out", dir.string()}).code == exit_usage);
}

TEST_CASE("plan") {
    const auto dir = scratch_dir("cli-plan");
    SUBCASE("single state") {
        const auto model = write_model(dir, "one.fmdp", single_state(1.0, 0.5));
        const auto r = cli({"plan", model, "--basis", "constant", "--epsilon", "1e-8", "--out", dir.string()});
        REQUIRE(r.code == exit_ok);
        const auto w = read_weights(dir / "weights.txt");
        REQUIRE(w.size() == 1);
        CHECK(w[0] == doctest::Approx(2.0).epsilon(1e-6));
        const auto report = lines_of(read_file(dir / "plan-report.txt"));
        CHECK(report[2] == "converged true");
        CHECK(report[3] == "samples 1");
        CHECK(report[5].rfind("start-value 1.99999", 0) == 0);
        CHECK(r.out == read_file(dir / "plan-report.txt"));
    }
    SUBCASE("joint basis matches the oracle") {
        const auto model = write_model(dir, "r.fmdp", make_random_fmdp(3, 2, 2, 2, 4));
        REQUIRE(cli({"plan", model, "--basis", "joint", "--exhaustive", "--epsilon", "1e-8",
                     "--out", dir.string()})
                    .code == exit_ok);
        REQUIRE(cli({"oracle", "vi", model, "--out", dir.string()}).code == exit_ok);
        const auto w = read_weights(dir / "weights.txt");
        const auto v = read_values(dir / "vi-values.txt");
        REQUIRE(w.size() == v.size());
        for (std::size_t i = 0; i < w.size(); ++i)
            CHECK(std::abs(w[i] - v[i]) <= 1e-6);
    }
    SUBCASE("iteration cap") {
        const auto model = write_model(dir, "r.fmdp", make_random_fmdp(3, 2, 2, 2, 4));
        const auto r = cli({"plan", model, "--max-iters", "2", "--epsilon", "1e-6", "--out", dir.string()});
        CHECK(r.code == exit_nonconvergence);
        CHECK(lines_of(read_file(dir / "plan-report.txt"))[2] == "converged false");
    }
    SUBCASE("repeatable") {
        const auto model = write_model(dir, "r.fmdp", make_random_fmdp(4, 3, 2, 3, 8));
        const std::vector<std::string> args{"plan", model, "--seed", "3", "--n1", "40", "--out", dir.string()};
        REQUIRE(cli(args).code == exit_ok);
        const auto first = read_file(dir / "weights.txt");
        REQUIRE(cli(args).code == exit_ok);
        CHECK(read_file(dir / "weights.txt") == first);
    }
}

TEST_CASE("oracle") {
    const auto dir = scratch_dir("cli-oracle");
    SUBCASE("single state value") {
        const auto model = write_model(dir, "one.fmdp", single_state(1.0, 0.5));
        const auto r = cli({"oracle", "vi", model, "--out", dir.string()});
        REQUIRE(r.code == exit_ok);
        CHECK(r.out.rfind("start-value 1.99999999", 0) == 0);
        const auto v = read_values(dir / "vi-values.txt");
        REQUIRE(v.size() == 1);
        CHECK(std::abs(v[0] - 2.0) <= 1e-9);
    }
    SUBCASE("flatten of a deterministic model is a permutation") {
        FmdpSpec model;
        model.space = VariableSpace({2, 2});
        model.num_actions = 1;
        model.scope_bound = 1;
        model.start = {0, 0};
        model.transitions.push_back({0, Scope{0}, 2, {{0, 1, 1, 0}}});
        model.transitions.push_back({1, Scope{1}, 2, {{1, 0, 0, 1}}});
        model.rewards.push_back({Scope{0}, {{0.0, 1.0}}});
        const auto path = write_model(dir, "perm.fmdp", model);
        REQUIRE(cli({"oracle", "flatten", path, "--out", dir.string()}).code == exit_ok);
        CHECK(read_file(dir / "flat.txt") == "flat-mdp 1\nstates 4\nactions 1\ngamma 0.9\n"
                                             "action 0\nreward 0 1 0 1\n"
                                             "0 1 0 0\n1 0 0 0\n0 0 0 1\n0 0 1 0\n");
    }
    SUBCASE("avi with joint indicators equals vi") {
        const auto model = write_model(dir, "r.fmdp", make_random_fmdp(3, 2, 2, 3, 2));
        REQUIRE(cli({"oracle", "vi", model, "--tol", "1e-10", "--out", dir.string()}).code == exit_ok);
        REQUIRE(cli({"oracle", "avi", model, "--basis", "joint", "--tol", "1e-10", "--out", dir.string()}).code == exit_ok);
        const auto vi = read_values(dir / "vi-values.txt");
        const auto avi = read_values(dir / "avi-values.txt");
        REQUIRE(vi.size() == avi.size());
        for (std::size_t i = 0; i < vi.size(); ++i)
            CHECK(std::abs(vi[i] - avi[i]) <= 1e-9);
    }
    SUBCASE("too large") {
        const auto model = write_model(dir, "big.fmdp", make_random_fmdp(13, 2, 1, 1, 0));
        const auto r = cli({"oracle", "vi", model, "--out", dir.string()});
        CHECK(r.code == exit_oracle_too_large);
        const auto big = write_model(dir, "big12.fmdp", make_random_fmdp(12, 2, 1, 1, 0));
        const auto learn = cli({"learn", big, "--steps", "1", "--oracle-metrics", "--out", dir.string()});
        CHECK(learn.code == exit_oracle_too_large);
        CHECK(learn.err.find("--oracle-metrics") != std::string::npos);
    }
}

TEST_CASE("learn") {
    const auto dir = scratch_dir("cli-learn");
    const auto model = write_model(dir, "chain.fmdp", make_chain(2, 2, 0.1));
    SUBCASE("zero steps writes only the header") {
        REQUIRE(cli({"learn", model, "--steps", "0", "--out", dir.string()}).code == exit_ok);
        CHECK(read_file(dir / "metrics.csv") ==
              "t,state,action,q_foim,known_fraction,max_l1_error,planner_iterations\n");
        REQUIRE(cli({"learn", model, "--steps", "0", "--oracle-metrics", "--out", dir.string()}).code == exit_ok);
        CHECK(read_file(dir / "metrics.csv") ==
              "t,state,action,q_foim,q_avi,near_optimal,known_fraction,max_l1_error,planner_iterations\n");
    }
    SUBCASE("rows are consistent with an in-process replay") {
        const std::vector<std::string> args{"learn", model, "--steps", "300", "--exhaustive",
                                            "--c-kb", "0.002", "--seed", "7", "--oracle-metrics",
                                            "--out", dir.string()};
        REQUIRE(cli(args).code == exit_ok);
        const auto rows = lines_of(read_file(dir / "metrics.csv"));
        REQUIRE(rows.size() == 301);

        const auto base = make_chain(2, 2, 0.1);
        FoimConfig config;
        config.planner.exhaustive = true;
        config.planner.seed = 7;
        config.c_kb = 0.002;
        config.seed = 7;
        FoimAgent agent(base, default_basis(base.space), config);
        Environment env(base, 7);
        const auto threshold = known_threshold(0.1, 0.1, 2, 4, 2, 0.002);
        REQUIRE(agent.known_threshold() == threshold);
        double last_fraction = 0.0;
        std::size_t mistakes = 0;
        for (std::size_t t = 0; t < 300; ++t) {
            const auto rec = agent.step(env);
            const auto& counts = agent.counts();
            std::size_t known = 0, total = 0;
            for (std::size_t i = 0; i < counts.num_factors(); ++i)
                for (Action a = 0; a < counts.num_actions(); ++a)
                    for (std::size_t row = 0; row < counts.num_rows(i); ++row)
                        if (counts.is_real_row(i, row)) {
                            ++total;
                            known += counts.real_visits(i, a, row) >= threshold;
                        }
            std::vector<std::string> cells;
            std::istringstream line(rows[t + 1]);
            for (std::string cell; std::getline(line, cell, ',');)
                cells.push_back(cell);
            REQUIRE(cells.size() == 9);
            CHECK(cells[0] == std::to_string(t));
            CHECK(cells[1] == std::to_string(base.space.index_of(rec.state)));
            CHECK(cells[2] == std::to_string(rec.action));
            const double fraction = std::stod(cells[6]);
            CHECK(fraction == doctest::Approx(static_cast<double>(known) / static_cast<double>(total)));
            CHECK(fraction >= last_fraction);
            last_fraction = fraction;
            mistakes += cells[5] == "0";
        }
        CHECK(last_fraction == 1.0);
        const auto summary = read_file(dir / "summary.txt");
        CHECK(summary.find("final-known-fraction 1\n") != std::string::npos);
        CHECK(summary.find("mistakes " + std::to_string(mistakes) + "\n") != std::string::npos);
    }
    SUBCASE("byte-identical reruns") {
        const std::vector<std::string> args{"learn", model, "--steps", "200", "--seed", "4",
                                            "--oracle-metrics", "--out", dir.string()};
        REQUIRE(cli(args).code == exit_ok);
        const auto csv = read_file(dir / "metrics.csv");
        const auto summary = read_file(dir / "summary.txt");
        REQUIRE(cli(args).code == exit_ok);
        CHECK(read_file(dir / "metrics.csv") == csv);
        CHECK(read_file(dir / "summary.txt") == summary);
    }
    SUBCASE("resume continues the same run") {
        const auto full = dir / "full";
        const auto half = dir / "half";
        REQUIRE(cli({"learn", model, "--steps", "60", "--seed", "2", "--out", full.string()}).code == exit_ok);
        REQUIRE(cli({"learn", model, "--steps", "30", "--seed", "2", "--checkpoint", "--out", half.string()}).code == exit_ok);
        REQUIRE(cli({"learn", model, "--steps", "30", "--seed", "2", "--resume",
                     (half / "checkpoint.json").string(), "--out", half.string()})
                    .code == exit_ok);
        const auto whole = lines_of(read_file(full / "metrics.csv"));
        const auto tail = lines_of(read_file(half / "metrics.csv"));
        REQUIRE(tail.size() == 31);
        for (std::size_t i = 1; i <= 30; ++i)
            CHECK(tail[i] == whole[30 + i]);
        write_text(dir / "junk.json", "{}");
        CHECK(cli({"learn", model, "--resume", (dir / "junk.json").string(), "--out", dir.string()}).code ==
              exit_usage);
    }
}

TEST_CASE("output directory from the environment") {
    const auto dir = scratch_dir("cli-env-out");
    REQUIRE(setenv("FMDP_OUT_DIR", dir.string().c_str(), 1) == 0);
    const auto r = cli({"gen", "chain", "--m", "2"});
    unsetenv("FMDP_OUT_DIR");
    REQUIRE(r.code == exit_ok);
    CHECK(fs::exists(dir / "chain.fmdp"));
}
