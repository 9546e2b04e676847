#include "fmdp/fmdp_format.hpp"
#include "fmdp/errors.hpp"
#include "fmdp/format_util.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>

namespace fmdp {

std::string to_string(ParseCategory category) {
    switch (category) {
    case ParseCategory::syntax: return "syntax";
    case ParseCategory::reference: return "reference";
    case ParseCategory::probability: return "probability";
    case ParseCategory::scope_bound: return "scope-bound";
    case ParseCategory::duplicate: return "duplicate";
    case ParseCategory::range: return "range";
    }
    return "unknown";
}

std::string to_string(const ParseError& error) {
    return std::to_string(error.line) + ":" + std::to_string(error.column) + ": " +
           to_string(error.category) + ": " + error.message;
}

namespace {

struct Token {
    std::string_view text;
    std::size_t column;
};

struct Line {
    std::size_t number;
    std::vector<Token> tokens;

    std::string_view keyword() const { return tokens.front().text; }
    std::size_t end_column() const {
        return tokens.back().column + tokens.back().text.size();
    }
};

std::vector<Line> tokenize(std::string_view text) {
    std::vector<Line> lines;
    std::size_t number = 0;
    std::size_t start = 0;
    while (start <= text.size()) {
        auto stop = text.find('\n', start);
        if (stop == std::string_view::npos)
            stop = text.size();
        ++number;
        auto raw = text.substr(start, stop - start);
        if (auto hash = raw.find('#'); hash != std::string_view::npos)
            raw = raw.substr(0, hash);
        Line line{number, {}};
        std::size_t i = 0;
        while (i < raw.size()) {
            const char c = raw[i];
            if (c == ' ' || c == '\t' || c == '\r') {
                ++i;
            } else if (c == ':') {
                line.tokens.push_back({raw.substr(i, 1), i + 1});
                ++i;
            } else {
                std::size_t j = i;
                while (j < raw.size() && raw[j] != ' ' && raw[j] != '\t' && raw[j] != '\r' &&
                       raw[j] != ':')
                    ++j;
                line.tokens.push_back({raw.substr(i, j - i), i + 1});
                i = j;
            }
        }
        if (!line.tokens.empty())
            lines.push_back(std::move(line));
        start = stop + 1;
    }
    return lines;
}

std::optional<double> to_double(std::string_view s) {
    double v = 0.0;
    const auto* end = s.data() + s.size();
    auto [p, ec] = std::from_chars(s.data(), end, v);
    if (ec != std::errc() || p != end)
        return std::nullopt;
    return v;
}

std::optional<long long> to_integer(std::string_view s) {
    long long v = 0;
    const auto* end = s.data() + s.size();
    auto [p, ec] = std::from_chars(s.data(), end, v);
    if (ec != std::errc() || p != end)
        return std::nullopt;
    return v;
}

std::string quote(std::string_view s) { return "'" + std::string(s) + "'"; }

// A table being filled row by row: one table per action (or a single one for
// basis functions), rows indexed by local assignment.
struct TableDraft {
    Scope scope;
    std::size_t width = 1;
    std::vector<std::vector<double>> tables;
    std::vector<std::vector<std::size_t>> row_lines; // 0 = missing
};

class Parser {
public:
    explicit Parser(std::string_view text) : lines_(tokenize(text)) {}

    ParseResult run();

private:
    void error(const Line& line, std::size_t column, ParseCategory category, std::string message) {
        errors_.push_back({line.number, column, category, std::move(message)});
    }
    void error(const Line& line, const Token& token, ParseCategory category, std::string message) {
        error(line, token.column, category, std::move(message));
    }

    bool at_end() const { return pos_ >= lines_.size(); }
    bool expect_arity(const Line& line, std::size_t n);
    std::optional<double> number(const Line& line, const Token& token);
    std::optional<long long> integer(const Line& line, const Token& token);

    void parse_header();
    void parse_scalar(const Line& line);
    void parse_variables(const Line& head);
    void parse_actions(const Line& head);
    void parse_start(const Line& line);
    void parse_transition(const Line& head);
    void parse_reward(const Line& head);
    void parse_basis(const Line& head);
    bool require_declarations(const Line& line);
    /// Checks "<keyword> ... <marker> ..." with the marker at position `at`;
    /// skips the block on failure.
    bool block_head(const Line& head, std::size_t at, std::string_view marker,
                    const char* usage);

    std::optional<std::size_t> variable(const Line& line, const Token& token);
    std::optional<Scope> scope(const Line& line, std::size_t first);
    VariableSpace space() const { return VariableSpace(sizes_); }

    /// Reads "values : numbers" into one table of the draft.
    void parse_row(const Line& line, TableDraft& draft, std::size_t table);
    /// Consumes lines up to the matching "end"; returns false at end of input.
    bool parse_action_blocks(const Line& head, TableDraft& draft);
    void report_missing_rows(const Line& head, const TableDraft& draft, const std::string& what);
    void skip_block();

    std::vector<Line> lines_;
    std::size_t pos_ = 0;
    std::vector<ParseError> errors_;

    std::vector<std::string> var_names_;
    std::vector<int> sizes_;
    std::vector<std::string> action_names_;
    bool have_variables_ = false;
    bool have_actions_ = false;
    std::map<std::string, std::size_t> seen_keywords_;
    std::optional<double> gamma_;
    std::optional<double> r_max_;
    std::optional<std::size_t> scope_bound_;
    std::optional<StateAssignment> start_;
    std::size_t start_line_ = 0;

    struct Placed {
        TableDraft draft;
        std::size_t line;
        std::size_t column;
    };
    std::map<std::size_t, Placed> transitions_;
    std::vector<Placed> rewards_;
    std::vector<Placed> basis_;
};

bool Parser::expect_arity(const Line& line, std::size_t n) {
    if (line.tokens.size() == n)
        return true;
    if (line.tokens.size() > n)
        error(line, line.tokens[n], ParseCategory::syntax,
              "unexpected " + quote(line.tokens[n].text) + " after " + quote(line.keyword()));
    else
        error(line, line.end_column(), ParseCategory::syntax,
              quote(line.keyword()) + " expects " + std::to_string(n - 1) + " argument(s)");
    return false;
}

std::optional<double> Parser::number(const Line& line, const Token& token) {
    auto v = to_double(token.text);
    if (!v || !std::isfinite(*v)) {
        error(line, token, ParseCategory::syntax, "expected a number, got " + quote(token.text));
        return std::nullopt;
    }
    return v;
}

std::optional<long long> Parser::integer(const Line& line, const Token& token) {
    auto v = to_integer(token.text);
    if (!v)
        error(line, token, ParseCategory::syntax, "expected an integer, got " + quote(token.text));
    return v;
}

void Parser::parse_header() {
    if (at_end()) {
        errors_.push_back({1, 1, ParseCategory::syntax, "empty document"});
        return;
    }
    const auto& line = lines_[pos_];
    if (line.keyword() != "fmdp") {
        error(line, line.tokens.front(), ParseCategory::syntax,
              "document must start with 'fmdp 1'");
        return;
    }
    ++pos_;
    if (expect_arity(line, 2) && line.tokens[1].text != "1")
        error(line, line.tokens[1], ParseCategory::syntax,
              "unsupported format version " + quote(line.tokens[1].text));
}

void Parser::parse_scalar(const Line& line) {
    const auto key = line.keyword();
    if (!expect_arity(line, 2))
        return;
    const auto& arg = line.tokens[1];
    if (key == "scope-bound") {
        auto v = integer(line, arg);
        if (v && *v < 1)
            error(line, arg, ParseCategory::range, "scope-bound must be at least 1");
        else if (v)
            scope_bound_ = static_cast<std::size_t>(*v);
        return;
    }
    auto v = number(line, arg);
    if (!v)
        return;
    if (key == "gamma") {
        if (!(*v >= 0.0 && *v < 1.0))
            error(line, arg, ParseCategory::range, "gamma " + format_real(*v) + " not in [0, 1)");
        gamma_ = *v;
    } else {
        if (*v < 0.0)
            error(line, arg, ParseCategory::range, "rmax must be nonnegative");
        r_max_ = *v;
    }
}

void Parser::parse_variables(const Line& head) {
    expect_arity(head, 1);
    have_variables_ = true;
    while (!at_end()) {
        const auto& line = lines_[pos_++];
        if (line.keyword() == "end") {
            expect_arity(line, 1);
            if (var_names_.empty())
                error(line, line.tokens.front(), ParseCategory::syntax, "no variables declared");
            return;
        }
        if (!expect_arity(line, 2))
            continue;
        const std::string name(line.tokens[0].text);
        if (std::find(var_names_.begin(), var_names_.end(), name) != var_names_.end()) {
            error(line, line.tokens[0], ParseCategory::duplicate,
                  "variable " + quote(name) + " declared twice");
            continue;
        }
        auto size = integer(line, line.tokens[1]);
        if (!size)
            continue;
        if (*size < 1 || *size > (1 << 20)) {
            error(line, line.tokens[1], ParseCategory::range,
                  "variable size must be between 1 and 2^20");
            continue;
        }
        var_names_.push_back(name);
        sizes_.push_back(static_cast<int>(*size));
    }
    error(head, head.tokens.front(), ParseCategory::syntax, "'variables' block is not closed");
}

void Parser::parse_actions(const Line& head) {
    expect_arity(head, 1);
    have_actions_ = true;
    while (!at_end()) {
        const auto& line = lines_[pos_++];
        if (line.keyword() == "end") {
            expect_arity(line, 1);
            if (action_names_.empty())
                error(line, line.tokens.front(), ParseCategory::syntax, "no actions declared");
            return;
        }
        if (!expect_arity(line, 1))
            continue;
        const std::string name(line.tokens[0].text);
        if (std::find(action_names_.begin(), action_names_.end(), name) != action_names_.end())
            error(line, line.tokens[0], ParseCategory::duplicate,
                  "action " + quote(name) + " declared twice");
        else
            action_names_.push_back(name);
    }
    error(head, head.tokens.front(), ParseCategory::syntax, "'actions' block is not closed");
}

bool Parser::require_declarations(const Line& line) {
    if (have_variables_ && have_actions_ && !var_names_.empty() && !action_names_.empty())
        return true;
    error(line, line.tokens.front(), ParseCategory::reference,
          quote(line.keyword()) + " before variables and actions are declared");
    return false;
}

bool Parser::block_head(const Line& head, std::size_t at, std::string_view marker,
                        const char* usage) {
    bool ok = require_declarations(head);
    if (ok && (head.tokens.size() <= at || head.tokens[at].text != marker)) {
        error(head, head.tokens.size() <= at ? head.end_column() : head.tokens[at].column,
              ParseCategory::syntax, std::string("expected '") + usage + "'");
        ok = false;
    }
    if (!ok)
        skip_block();
    return ok;
}

void Parser::parse_start(const Line& line) {
    if (!require_declarations(line))
        return;
    if (!expect_arity(line, sizes_.size() + 1))
        return;
    StateAssignment x;
    for (std::size_t i = 0; i < sizes_.size(); ++i) {
        const auto& token = line.tokens[i + 1];
        auto v = integer(line, token);
        if (!v)
            return;
        if (*v < 0 || *v >= sizes_[i]) {
            error(line, token, ParseCategory::range,
                  "start value " + std::string(token.text) + " out of range for variable " +
                      quote(var_names_[i]));
            return;
        }
        x.push_back(static_cast<int>(*v));
    }
    start_ = std::move(x);
    start_line_ = line.number;
}

std::optional<std::size_t> Parser::variable(const Line& line, const Token& token) {
    auto it = std::find(var_names_.begin(), var_names_.end(), token.text);
    if (it == var_names_.end()) {
        error(line, token, ParseCategory::reference,
              "undeclared variable " + quote(token.text));
        return std::nullopt;
    }
    return static_cast<std::size_t>(it - var_names_.begin());
}

std::optional<Scope> Parser::scope(const Line& line, std::size_t first) {
    std::vector<std::size_t> vars;
    bool ok = true;
    for (std::size_t t = first; t < line.tokens.size(); ++t) {
        auto v = variable(line, line.tokens[t]);
        if (!v) {
            ok = false;
            continue;
        }
        if (std::find(vars.begin(), vars.end(), *v) != vars.end()) {
            error(line, line.tokens[t], ParseCategory::duplicate,
                  "variable " + quote(line.tokens[t].text) + " listed twice in scope");
            ok = false;
            continue;
        }
        vars.push_back(*v);
    }
    if (!ok)
        return std::nullopt;
    return Scope(std::move(vars));
}

void Parser::parse_row(const Line& line, TableDraft& draft, std::size_t table) {
    const auto k = draft.scope.size();
    const auto colon = std::find_if(line.tokens.begin(), line.tokens.end(),
                                    [](const Token& t) { return t.text == ":"; });
    if (colon == line.tokens.end()) {
        error(line, line.tokens.front(), ParseCategory::syntax, "row needs ':' after the values");
        return;
    }
    const auto num_values = static_cast<std::size_t>(colon - line.tokens.begin());
    const auto num_entries = line.tokens.size() - num_values - 1;
    if (num_values != k) {
        error(line, line.tokens.front(), ParseCategory::syntax,
              "row gives " + std::to_string(num_values) + " value(s), scope has " +
                  std::to_string(k));
        return;
    }
    if (num_entries != draft.width) {
        error(line, colon->column, ParseCategory::syntax,
              "row has " + std::to_string(num_entries) + " entries, expected " +
                  std::to_string(draft.width));
        return;
    }
    std::vector<int> values(k);
    for (std::size_t p = 0; p < k; ++p) {
        const auto& token = line.tokens[p];
        auto v = integer(line, token);
        if (!v)
            return;
        const auto var = draft.scope[p];
        if (*v < 0 || *v >= sizes_[var]) {
            error(line, token, ParseCategory::reference,
                  "value " + std::string(token.text) + " out of range for variable " +
                      quote(var_names_[var]));
            return;
        }
        values[p] = static_cast<int>(*v);
    }
    std::vector<double> entries;
    for (std::size_t e = 0; e < num_entries; ++e) {
        auto v = number(line, line.tokens[num_values + 1 + e]);
        if (!v)
            return;
        entries.push_back(*v);
    }

    // Local index of the values, first scope variable least significant.
    std::size_t local = 0;
    for (std::size_t p = k; p-- > 0;)
        local = local * static_cast<std::size_t>(sizes_[draft.scope[p]]) +
                static_cast<std::size_t>(values[p]);
    auto& seen = draft.row_lines[table][local];
    if (seen != 0) {
        error(line, line.tokens.front(), ParseCategory::duplicate,
              "row " + to_string(values) + " already given on line " + std::to_string(seen));
        return;
    }
    seen = line.number;
    std::copy(entries.begin(), entries.end(),
              draft.tables[table].begin() + static_cast<long>(local * draft.width));
}

void Parser::skip_block() {
    int depth = 1;
    while (!at_end() && depth > 0) {
        const auto& line = lines_[pos_++];
        if (line.keyword() == "end")
            --depth;
        else if (line.keyword() == "action")
            ++depth;
    }
}

bool Parser::parse_action_blocks(const Line& head, TableDraft& draft) {
    std::vector<bool> done(action_names_.size(), false);
    while (!at_end()) {
        const auto& line = lines_[pos_++];
        if (line.keyword() == "end") {
            expect_arity(line, 1);
            return true;
        }
        if (line.keyword() != "action") {
            error(line, line.tokens.front(), ParseCategory::syntax,
                  "expected 'action <name>' or 'end', got " + quote(line.keyword()));
            continue;
        }
        if (!expect_arity(line, 2)) {
            skip_block();
            continue;
        }
        const auto& name = line.tokens[1];
        auto it = std::find(action_names_.begin(), action_names_.end(), name.text);
        if (it == action_names_.end()) {
            error(line, name, ParseCategory::reference, "undeclared action " + quote(name.text));
            skip_block();
            continue;
        }
        const auto a = static_cast<std::size_t>(it - action_names_.begin());
        if (done[a]) {
            error(line, name, ParseCategory::duplicate,
                  "action " + quote(name.text) + " given twice in this block");
            skip_block();
            continue;
        }
        done[a] = true;
        bool closed = false;
        while (!at_end()) {
            const auto& row = lines_[pos_++];
            if (row.keyword() == "end") {
                expect_arity(row, 1);
                closed = true;
                break;
            }
            parse_row(row, draft, a);
        }
        if (!closed)
            error(line, line.tokens.front(), ParseCategory::syntax,
                  "'action' block is not closed");
    }
    error(head, head.tokens.front(), ParseCategory::syntax,
          quote(head.keyword()) + " block is not closed");
    return false;
}

void Parser::report_missing_rows(const Line& head, const TableDraft& draft,
                                 const std::string& what) {
    const auto sp = space();
    for (std::size_t t = 0; t < draft.tables.size(); ++t) {
        std::size_t missing = 0;
        std::size_t first = 0;
        for (std::size_t r = 0; r < draft.row_lines[t].size(); ++r)
            if (draft.row_lines[t][r] == 0 && missing++ == 0)
                first = r;
        if (missing == 0)
            continue;
        std::string message = what;
        if (draft.tables.size() > 1 || what.rfind("basis", 0) != 0)
            message += " action " + quote(action_names_[t]);
        message += " is missing " + std::to_string(missing) + " row(s), first " +
                   to_string(draft.scope.local_values(sp, first));
        error(head, head.tokens.front(), ParseCategory::syntax, std::move(message));
    }
}

void Parser::parse_transition(const Line& head) {
    // transition <var> parents <vars...>
    if (!block_head(head, 2, "parents", "transition <variable> parents <variables...>"))
        return;
    auto target = variable(head, head.tokens[1]);
    auto parents = scope(head, 3);
    if (!target || !parents) {
        skip_block();
        return;
    }
    TableDraft draft;
    draft.scope = *parents;
    draft.width = static_cast<std::size_t>(sizes_[*target]);
    const auto rows = draft.scope.local_size(space());
    draft.tables.assign(action_names_.size(), std::vector<double>(rows * draft.width, 0.0));
    draft.row_lines.assign(action_names_.size(), std::vector<std::size_t>(rows, 0));
    if (!parse_action_blocks(head, draft))
        return;

    const std::string what = "transition of " + quote(var_names_[*target]);
    if (transitions_.count(*target)) {
        error(head, head.tokens[1], ParseCategory::duplicate,
              what + " already declared on line " +
                  std::to_string(transitions_.at(*target).line));
        return;
    }
    report_missing_rows(head, draft, what);
    const auto sp = space();
    for (std::size_t a = 0; a < draft.tables.size(); ++a)
        for (std::size_t r = 0; r < rows; ++r) {
            const auto line_number = draft.row_lines[a][r];
            if (line_number == 0)
                continue;
            double sum = 0.0;
            bool negative = false;
            for (std::size_t y = 0; y < draft.width; ++y) {
                const double p = draft.tables[a][r * draft.width + y];
                sum += p;
                negative = negative || p < 0.0;
            }
            const auto where = what + " action " + quote(action_names_[a]) + " row " +
                               to_string(draft.scope.local_values(sp, r));
            if (negative)
                errors_.push_back({line_number, 1, ParseCategory::probability,
                                   where + " has a negative entry"});
            else if (!(std::abs(sum - 1.0) <= row_sum_tolerance))
                errors_.push_back({line_number, 1, ParseCategory::probability,
                                   where + " sums to " + format_real(sum)});
        }
    transitions_.emplace(*target, Placed{std::move(draft), head.number, head.tokens[1].column});
}

void Parser::parse_reward(const Line& head) {
    // reward scope <vars...>
    if (!block_head(head, 1, "scope", "reward scope <variables...>"))
        return;
    auto sc = scope(head, 2);
    if (!sc) {
        skip_block();
        return;
    }
    TableDraft draft;
    draft.scope = *sc;
    const auto rows = draft.scope.local_size(space());
    draft.tables.assign(action_names_.size(), std::vector<double>(rows, 0.0));
    draft.row_lines.assign(action_names_.size(), std::vector<std::size_t>(rows, 0));
    if (!parse_action_blocks(head, draft))
        return;
    report_missing_rows(head, draft, "reward factor " + std::to_string(rewards_.size()));
    rewards_.push_back({std::move(draft), head.number, head.tokens.front().column});
}

void Parser::parse_basis(const Line& head) {
    // basis scope <vars...>
    if (!block_head(head, 1, "scope", "basis scope <variables...>"))
        return;
    auto sc = scope(head, 2);
    if (!sc) {
        skip_block();
        return;
    }
    TableDraft draft;
    draft.scope = *sc;
    const auto rows = draft.scope.local_size(space());
    draft.tables.assign(1, std::vector<double>(rows, 0.0));
    draft.row_lines.assign(1, std::vector<std::size_t>(rows, 0));
    bool closed = false;
    while (!at_end()) {
        const auto& line = lines_[pos_++];
        if (line.keyword() == "end") {
            expect_arity(line, 1);
            closed = true;
            break;
        }
        parse_row(line, draft, 0);
    }
    if (!closed) {
        error(head, head.tokens.front(), ParseCategory::syntax, "'basis' block is not closed");
        return;
    }
    report_missing_rows(head, draft, "basis function " + std::to_string(basis_.size()));
    basis_.push_back({std::move(draft), head.number, head.tokens.front().column});
}

ParseResult Parser::run() {
    parse_header();
    if (!errors_.empty())
        return {std::nullopt, std::move(errors_)};

    while (!at_end()) {
        const auto& line = lines_[pos_++];
        const auto key = line.keyword();
        const bool unique = key == "gamma" || key == "rmax" || key == "scope-bound" ||
                            key == "variables" || key == "actions" || key == "start";
        if (unique) {
            const std::string k(key);
            if (seen_keywords_.count(k)) {
                error(line, line.tokens.front(), ParseCategory::duplicate,
                      quote(key) + " already given on line " +
                          std::to_string(seen_keywords_[k]));
                if (key == "variables" || key == "actions")
                    skip_block();
                continue;
            }
            seen_keywords_[k] = line.number;
        }
        if (key == "gamma" || key == "rmax" || key == "scope-bound")
            parse_scalar(line);
        else if (key == "variables")
            parse_variables(line);
        else if (key == "actions")
            parse_actions(line);
        else if (key == "start")
            parse_start(line);
        else if (key == "transition")
            parse_transition(line);
        else if (key == "reward")
            parse_reward(line);
        else if (key == "basis")
            parse_basis(line);
        else
            error(line, line.tokens.front(), ParseCategory::syntax,
                  "unknown keyword " + quote(key));
    }

    const std::size_t last_line = lines_.empty() ? 1 : lines_.back().number;
    auto missing = [&](const char* what) {
        errors_.push_back({last_line, 1, ParseCategory::syntax,
                           std::string("missing '") + what + "' declaration"});
    };
    if (!gamma_ && !seen_keywords_.count("gamma"))
        missing("gamma");
    if (!scope_bound_ && !seen_keywords_.count("scope-bound"))
        missing("scope-bound");
    if (!have_variables_)
        missing("variables");
    if (!have_actions_)
        missing("actions");
    if (!start_ && !seen_keywords_.count("start"))
        missing("start");
    for (std::size_t i = 0; have_variables_ && i < var_names_.size(); ++i)
        if (!transitions_.count(i))
            errors_.push_back({last_line, 1, ParseCategory::syntax,
                               "no transition block for variable " + quote(var_names_[i])});

    if (scope_bound_) {
        for (const auto& [target, placed] : transitions_)
            if (placed.draft.scope.size() > *scope_bound_)
                errors_.push_back({placed.line, placed.column, ParseCategory::scope_bound,
                                   "transition of " + quote(var_names_[target]) + " has " +
                                       std::to_string(placed.draft.scope.size()) +
                                       " parents, scope-bound is " +
                                       std::to_string(*scope_bound_)});
        for (std::size_t j = 0; j < rewards_.size(); ++j)
            if (rewards_[j].draft.scope.size() > *scope_bound_)
                errors_.push_back({rewards_[j].line, rewards_[j].column,
                                   ParseCategory::scope_bound,
                                   "reward factor " + std::to_string(j) + " has " +
                                       std::to_string(rewards_[j].draft.scope.size()) +
                                       " variables, scope-bound is " +
                                       std::to_string(*scope_bound_)});
    }

    const double r_max = r_max_.value_or(1.0);
    for (std::size_t j = 0; j < rewards_.size(); ++j)
        for (std::size_t a = 0; a < rewards_[j].draft.tables.size(); ++a)
            for (std::size_t r = 0; r < rewards_[j].draft.tables[a].size(); ++r) {
                const double v = rewards_[j].draft.tables[a][r];
                const auto line_number = rewards_[j].draft.row_lines[a][r];
                if (line_number != 0 && !(v >= 0.0 && v <= r_max))
                    errors_.push_back({line_number, 1, ParseCategory::range,
                                       "reward " + format_real(v) + " outside [0, rmax = " +
                                           format_real(r_max) + "]"});
            }

    if (!errors_.empty())
        return {std::nullopt, std::move(errors_)};

    FmdpDocument doc;
    doc.variable_names = var_names_;
    doc.action_names = action_names_;
    auto& m = doc.model;
    m.space = space();
    m.num_actions = action_names_.size();
    m.scope_bound = *scope_bound_;
    m.gamma = *gamma_;
    m.r_max = r_max;
    m.start = *start_;
    for (auto& [target, placed] : transitions_) {
        TransitionFactor f;
        f.target = target;
        f.parents = placed.draft.scope;
        f.outcomes = sizes_[target];
        f.tables = std::move(placed.draft.tables);
        m.transitions.push_back(std::move(f));
    }
    for (auto& placed : rewards_)
        m.rewards.push_back({placed.draft.scope, std::move(placed.draft.tables)});
    if (!basis_.empty()) {
        BasisSet basis;
        for (auto& placed : basis_) {
            auto& values = placed.draft.tables.front();
            if (placed.draft.scope.empty() && values.front() == 1.0)
                basis.has_constant = true;
            basis.functions.emplace_back(placed.draft.scope, std::move(values));
        }
        try {
            basis.check(m.space);
        } catch (const Error& e) {
            errors_.push_back({basis_.front().line, 1, ParseCategory::range, e.what()});
        }
        doc.basis = std::move(basis);
    }

    // Anything the checks above missed surfaces here rather than downstream.
    for (const auto& v : validate_model(m, row_sum_tolerance))
        errors_.push_back({1, 1,
                           v.kind == Violation::Kind::scope_bound ? ParseCategory::scope_bound
                           : v.kind == Violation::Kind::row_sum ||
                                   v.kind == Violation::Kind::negative_probability
                               ? ParseCategory::probability
                               : ParseCategory::range,
                           v.message});
    if (!errors_.empty())
        return {std::nullopt, std::move(errors_)};
    return {std::move(doc), {}};
}

void emit_table_row(std::ostringstream& out, const char* indent, const std::vector<int>& values,
                    std::span<const double> entries) {
    out << indent;
    for (int v : values)
        out << v << ' ';
    out << ':';
    for (double e : entries)
        out << ' ' << format_exact(e);
    out << '\n';
}

} // namespace

ParseResult parse_fmdp(std::string_view text) { return Parser(text).run(); }

FmdpDocument load_fmdp(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw ModelError("cannot open " + path);
    std::ostringstream buffer;
    buffer << in.rdbuf();
    auto result = parse_fmdp(buffer.str());
    if (result.ok())
        return std::move(*result.document);
    std::string message = path + ": invalid model";
    for (const auto& e : result.errors)
        message += "\n" + path + ":" + to_string(e);
    throw ModelError(message);
}

FmdpDocument make_document(FmdpSpec model) {
    FmdpDocument doc;
    for (std::size_t i = 0; i < model.num_variables(); ++i)
        doc.variable_names.push_back("x" + std::to_string(i));
    for (std::size_t a = 0; a < model.num_actions; ++a)
        doc.action_names.push_back("a" + std::to_string(a));
    doc.model = std::move(model);
    return doc;
}

std::string emit_fmdp(const FmdpDocument& doc) {
    const auto& m = doc.model;
    check_structure(m);
    auto var = [&](std::size_t i) {
        return i < doc.variable_names.size() ? doc.variable_names[i] : "x" + std::to_string(i);
    };
    auto act = [&](std::size_t a) {
        return a < doc.action_names.size() ? doc.action_names[a] : "a" + std::to_string(a);
    };
    auto scope_list = [&](const Scope& s) {
        std::string out;
        for (auto v : s.indices())
            out += " " + var(v);
        return out;
    };

    std::ostringstream out;
    out << "fmdp 1\n";
    out << "gamma " << format_exact(m.gamma) << '\n';
    out << "rmax " << format_exact(m.r_max) << '\n';
    out << "scope-bound " << m.scope_bound << '\n';
    out << "variables\n";
    for (std::size_t i = 0; i < m.num_variables(); ++i)
        out << "  " << var(i) << ' ' << m.space.size(i) << '\n';
    out << "end\nactions\n";
    for (std::size_t a = 0; a < m.num_actions; ++a)
        out << "  " << act(a) << '\n';
    out << "end\nstart";
    for (int v : m.start)
        out << ' ' << v;
    out << '\n';

    for (const auto& f : m.transitions) {
        out << "transition " << var(f.target) << " parents" << scope_list(f.parents) << '\n';
        for (Action a = 0; a < m.num_actions; ++a) {
            out << "  action " << act(a) << '\n';
            for (std::size_t r = 0; r < f.num_rows(); ++r)
                emit_table_row(out, "    ", f.parents.local_values(m.space, r), f.row(a, r));
            out << "  end\n";
        }
        out << "end\n";
    }
    for (const auto& rf : m.rewards) {
        out << "reward scope" << scope_list(rf.scope) << '\n';
        for (Action a = 0; a < m.num_actions; ++a) {
            out << "  action " << act(a) << '\n';
            for (std::size_t r = 0; r < rf.tables[a].size(); ++r)
                emit_table_row(out, "    ", rf.scope.local_values(m.space, r),
                               std::span<const double>(&rf.tables[a][r], 1));
            out << "  end\n";
        }
        out << "end\n";
    }
    if (doc.basis)
        for (const auto& h : doc.basis->functions) {
            out << "basis scope" << scope_list(h.scope) << '\n';
            for (std::size_t r = 0; r < h.values.size(); ++r)
                emit_table_row(out, "  ", h.scope.local_values(m.space, r),
                               std::span<const double>(&h.values[r], 1));
            out << "end\n";
        }
    return out.str();
}

} // namespace fmdp
