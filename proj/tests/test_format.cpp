#include "support.hpp"

#include "fmdp/errors.hpp"
#include "fmdp/fmdp_format.hpp"

#include <doctest.h>

using namespace fmdp;
using namespace fmdp::testing;

namespace {

const char* const minimal = R"(fmdp 1
gamma 0.5
scope-bound 1
variables
  s 1
end
actions
  stay
end
start 0
transition s parents s
  action stay
    0 : 1
  end
end
reward scope s
  action stay
    0 : 1
  end
end
)";

const char* const two_vars = R"(# two doors
fmdp 1
gamma 0.9
rmax 2
scope-bound 2
variables
  pos 3
  door 2
end
actions
  left
  right
end
start 0 1
transition pos parents door pos
  action left
    0 0 : 1 0 0
    1 0 : 1 0 0
    2 0 : 0.5 0.5 0
    0 1 : 1 0 0
    1 1 : 1 0 0
    2 1 : 0 1 0
  end
  action right
    0 0 : 0 1 0
    1 0 : 0 0.25 0.75
    2 0 : 0 0 1
    0 1 : 0 1 0
    1 1 : 0 0 1
    2 1 : 0 0 1
  end
end
transition door parents door
  action left
    0 : 0.9 0.1
    1 : 0 1
  end
  action right
    0 : 0.9 0.1
    1 : 0 1
  end
end
reward scope pos
  action left
    0 : 0
    1 : 0
    2 : 2
  end
  action right
    0 : 0
    1 : 0
    2 : 1.5
  end
end
basis scope door
  0 : 1
  1 : 0
end
basis scope
  : 1
end
)";

std::string replace_once(std::string text, const std::string& from, const std::string& to) {
    const auto at = text.find(from);
    REQUIRE(at != std::string::npos);
    return text.replace(at, from.size(), to);
}

std::vector<ParseCategory> categories(const ParseResult& r) {
    std::vector<ParseCategory> out;
    for (const auto& e : r.errors)
        out.push_back(e.category);
    return out;
}

} // namespace

TEST_CASE("minimal document") {
    const auto r = parse_fmdp(minimal);
    REQUIRE(r.ok());
    CHECK(r.errors.empty());
    const auto& m = r.document->model;
    CHECK(m.num_variables() == 1);
    CHECK(m.num_actions == 1);
    CHECK(m.gamma == 0.5);
    CHECK(m.r_max == 1.0);
    CHECK(reward(m, std::vector<int>{0}, 0) == 1.0);
    CHECK(r.document->variable_names == std::vector<std::string>{"s"});
    CHECK(r.document->action_names == std::vector<std::string>{"stay"});
    CHECK_FALSE(r.document->basis.has_value());
}

TEST_CASE("two-variable document") {
    const auto r = parse_fmdp(two_vars);
    REQUIRE(r.ok());
    const auto& m = r.document->model;
    CHECK(validate_model(m).empty());
    CHECK(m.space.sizes() == std::vector<int>{3, 2});
    CHECK(m.r_max == 2.0);
    CHECK(m.start == StateAssignment{0, 1});
    // Scope listed as "door pos" is stored sorted; rows give pos then door.
    CHECK(m.transitions[0].parents == Scope{0, 1});
    CHECK(transition_prob(m, std::vector<int>{1, 0}, 1, std::vector<int>{2, 1}) == doctest::Approx(0.75 * 0.1));
    CHECK(transition_prob(m, std::vector<int>{2, 0}, 0, std::vector<int>{1, 0}) == doctest::Approx(0.5 * 0.9));
    CHECK(reward(m, std::vector<int>{2, 1}, 1) == 1.5);
    REQUIRE(r.document->basis.has_value());
    const auto& basis = *r.document->basis;
    REQUIRE(basis.size() == 2);
    CHECK(basis.has_constant);
    CHECK(basis.functions[0].scope == Scope{1});
    CHECK(basis.functions[0].values == std::vector<double>{1.0, 0.0});
}

TEST_CASE("round trip") {
    SUBCASE("hand-written document") {
        const auto first = parse_fmdp(two_vars);
        REQUIRE(first.ok());
        const auto text = emit_fmdp(*first.document);
        const auto second = parse_fmdp(text);
        REQUIRE(second.ok());
        CHECK(*second.document == *first.document);
        CHECK(emit_fmdp(*second.document) == text);
    }
    SUBCASE("random models keep every bit") {
        for (std::uint64_t seed = 0; seed < 30; ++seed) {
            auto doc = make_document(make_random_fmdp(1 + seed % 4, 2 + static_cast<int>(seed % 3),
                                                      1 + seed % 2 % (1 + seed % 4), 1 + seed % 3, seed));
            if (seed % 2)
                doc.basis = default_basis(doc.model.space);
            const auto parsed = parse_fmdp(emit_fmdp(doc));
            REQUIRE(parsed.ok());
            CHECK(*parsed.document == doc);
        }
    }
    SUBCASE("generated benchmarks") {
        for (const auto& model : {make_chain(3, 3, 0.1), make_sysadmin_ring(3, 0.05, 0.9)}) {
            const auto doc = make_document(model);
            const auto parsed = parse_fmdp(emit_fmdp(doc));
            REQUIRE(parsed.ok());
            CHECK(parsed.document->model == model);
        }
    }
}

TEST_CASE("probability errors") {
    const auto text = replace_once(two_vars, "    2 0 : 0.5 0.5 0\n", "    2 0 : 0.5 0.4 0\n");
    const auto r = parse_fmdp(text);
    CHECK_FALSE(r.ok());
    REQUIRE(r.errors.size() == 1);
    const auto& e = r.errors[0];
    CHECK(e.category == ParseCategory::probability);
    CHECK(e.line == 19);
    CHECK(e.message.find("pos") != std::string::npos);
    CHECK(e.message.find("left") != std::string::npos);
    CHECK(e.message.find("(2,0)") != std::string::npos);
    CHECK(e.message.find("0.9") != std::string::npos);
    CHECK(to_string(e).rfind("19:", 0) == 0);

    const auto negative = parse_fmdp(replace_once(two_vars, "    0 : 0.9 0.1\n", "    0 : 1.1 -0.1\n"));
    CHECK(categories(negative) == std::vector<ParseCategory>{ParseCategory::probability});

    const auto tolerated = parse_fmdp(replace_once(two_vars, "    0 : 0.9 0.1\n", "    0 : 0.9 0.1000000000001\n"));
    CHECK(tolerated.ok());
}

TEST_CASE("error categories") {
    SUBCASE("syntax") {
        const auto r = parse_fmdp(replace_once(two_vars, "gamma 0.9", "gamma"));
        REQUIRE_FALSE(r.ok());
        CHECK(r.errors[0].category == ParseCategory::syntax);
        CHECK(r.errors[0].line == 3);
        CHECK(r.errors[0].column >= 1);
    }
    SUBCASE("bad header") {
        const auto r = parse_fmdp(replace_once(minimal, "fmdp 1", "fmdp 2"));
        REQUIRE_FALSE(r.ok());
        CHECK(r.errors[0].line == 1);
    }
    SUBCASE("undeclared variable") {
        const auto r = parse_fmdp(replace_once(two_vars, "reward scope pos", "reward scope wall"));
        REQUIRE_FALSE(r.ok());
        CHECK(r.errors[0].category == ParseCategory::reference);
        CHECK(r.errors[0].message.find("wall") != std::string::npos);
    }
    SUBCASE("undeclared action") {
        const auto r = parse_fmdp(replace_once(two_vars, "  action right\n    0 : 0\n", "  action jump\n    0 : 0\n"));
        REQUIRE_FALSE(r.ok());
        CHECK(r.errors[0].category == ParseCategory::reference);
    }
    SUBCASE("value out of range") {
        const auto r = parse_fmdp(replace_once(two_vars, "start 0 1", "start 0 2"));
        REQUIRE_FALSE(r.ok());
        CHECK(r.errors[0].line == 14);
    }
    SUBCASE("scope bound") {
        const auto r = parse_fmdp(replace_once(two_vars, "scope-bound 2", "scope-bound 1"));
        REQUIRE_FALSE(r.ok());
        CHECK(categories(r) == std::vector<ParseCategory>{ParseCategory::scope_bound});
        CHECK(to_string(ParseCategory::scope_bound) == "scope-bound");
    }
    SUBCASE("duplicate variable") {
        const auto r = parse_fmdp(replace_once(two_vars, "  door 2\n", "  door 2\n  pos 2\n"));
        REQUIRE_FALSE(r.ok());
        CHECK(r.errors[0].category == ParseCategory::duplicate);
        CHECK(r.errors[0].line == 9);
    }
    SUBCASE("duplicate row") {
        const auto r = parse_fmdp(replace_once(two_vars, "    1 : 0 1\n", "    0 : 0.9 0.1\n"));
        REQUIRE_FALSE(r.ok());
        CHECK(categories(r).front() == ParseCategory::duplicate);
    }
    SUBCASE("missing transition") {
        auto text = std::string(two_vars);
        const auto from = text.find("transition door");
        const auto to = text.find("reward scope");
        text.erase(from, to - from);
        const auto r = parse_fmdp(text);
        REQUIRE_FALSE(r.ok());
        CHECK(r.errors[0].message.find("door") != std::string::npos);
    }
    SUBCASE("reward above rmax") {
        const auto r = parse_fmdp(replace_once(two_vars, "    2 : 2\n", "    2 : 2.5\n"));
        REQUIRE_FALSE(r.ok());
        CHECK(categories(r) == std::vector<ParseCategory>{ParseCategory::range});
    }
    SUBCASE("discount out of range") {
        const auto r = parse_fmdp(replace_once(two_vars, "gamma 0.9", "gamma 1"));
        REQUIRE_FALSE(r.ok());
        CHECK(r.errors[0].category == ParseCategory::range);
    }
    SUBCASE("several errors are reported together") {
        auto text = replace_once(two_vars, "    2 0 : 0.5 0.5 0\n", "    2 0 : 0.5 0.4 0\n");
        text = replace_once(text, "    1 : 0 1\n  end\n  action right", "    1 : 0 0.5\n  end\n  action right");
        const auto r = parse_fmdp(text);
        CHECK(r.errors.size() == 2);
    }
}

TEST_CASE("load_fmdp") {
    const auto dir = scratch_dir("format");
    write_text(dir / "ok.fmdp", two_vars);
    CHECK(load_fmdp((dir / "ok.fmdp").string()).model.num_variables() == 2);
    write_text(dir / "bad.fmdp", replace_once(two_vars, "gamma 0.9", "gamma x"));
    CHECK_THROWS_AS(load_fmdp((dir / "bad.fmdp").string()), ModelError);
    CHECK_THROWS(load_fmdp((dir / "missing.fmdp").string()));
}
