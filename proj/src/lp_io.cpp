#include "flexplan/lp_io.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <sstream>
#include <vector>

namespace flexplan {

namespace {

std::string format_number(double v) {
    if (v == std::floor(v) && std::abs(v) < 1e15) {
        char buf[32];
        std::snprintf(buf, sizeof(buf), "%.0f", v);
        return buf;
    }
    char buf[40];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
    (void)ec;
    return std::string(buf, ptr);
}

void append_terms(std::string& out, const std::vector<std::pair<std::string, double>>& terms) {
    bool first = true;
    for (const auto& [name, coef] : terms) {
        if (first) {
            if (coef < 0) out += "- ";
            first = false;
        } else {
            out += coef < 0 ? " - " : " + ";
        }
        double a = std::abs(coef);
        if (a != 1.0) {
            out += format_number(a);
            out += ' ';
        }
        out += name;
    }
    if (first) out += "0";
}

}  // namespace

std::string write_lp(const MilpModel& model) {
    const int n = model.num_variables();
    std::vector<int> var_order(n);
    for (int j = 0; j < n; ++j) var_order[j] = j;
    std::sort(var_order.begin(), var_order.end(), [&](int a, int b) {
        return model.variable(a).name < model.variable(b).name;
    });
    std::vector<int> rank(n);
    for (int k = 0; k < n; ++k) rank[var_order[k]] = k;

    std::string out;
    out += "\\ generated by flexplan\n";
    out += "Minimize\n obj: ";
    {
        std::vector<std::pair<std::string, double>> terms;
        for (int k = 0; k < n; ++k) {
            const MilpVariable& v = model.variable(var_order[k]);
            if (v.obj != 0.0) terms.emplace_back(v.name, v.obj);
        }
        append_terms(out, terms);
    }
    out += "\nSubject To\n";
    std::vector<int> row_order(model.num_constraints());
    for (int i = 0; i < model.num_constraints(); ++i) row_order[i] = i;
    std::sort(row_order.begin(), row_order.end(), [&](int a, int b) {
        return model.constraint(a).name < model.constraint(b).name;
    });
    for (int i : row_order) {
        const MilpConstraint& c = model.constraint(i);
        out += ' ';
        out += c.name;
        out += ": ";
        std::vector<std::pair<std::string, double>> terms;
        for (const auto& [col, coef] : c.terms)
            terms.emplace_back(model.variable(col).name, coef);
        std::sort(terms.begin(), terms.end(),
                  [](const auto& a, const auto& b) { return a.first < b.first; });
        append_terms(out, terms);
        switch (c.sense) {
            case RowSense::LessEqual: out += " <= "; break;
            case RowSense::GreaterEqual: out += " >= "; break;
            case RowSense::Equal: out += " = "; break;
        }
        out += format_number(c.rhs);
        out += '\n';
    }
    out += "Bounds\n";
    for (int k = 0; k < n; ++k) {
        const MilpVariable& v = model.variable(var_order[k]);
        out += ' ';
        if (!std::isfinite(v.lb) && !std::isfinite(v.ub)) {
            out += v.name + " free";
        } else if (v.lb == v.ub) {
            out += v.name + " = " + format_number(v.lb);
        } else {
            out += std::isfinite(v.lb) ? format_number(v.lb) : std::string("-inf");
            out += " <= " + v.name + " <= ";
            out += std::isfinite(v.ub) ? format_number(v.ub) : std::string("inf");
        }
        out += '\n';
    }
    std::string generals, binaries;
    for (int k = 0; k < n; ++k) {
        const MilpVariable& v = model.variable(var_order[k]);
        if (v.kind == VarKind::Integer) generals += ' ' + v.name + '\n';
        if (v.kind == VarKind::Binary) binaries += ' ' + v.name + '\n';
    }
    if (!generals.empty()) out += "Generals\n" + generals;
    if (!binaries.empty()) out += "Binaries\n" + binaries;
    out += "End\n";
    return out;
}

// ---------------------------------------------------------------------------
// Reader.
// ---------------------------------------------------------------------------

namespace {

struct Token {
    std::string text;
    int line = 0;
};

bool is_name_start(char c) { return std::isalpha(static_cast<unsigned char>(c)) || c == '_'; }
bool is_name_char(char c) {
    return std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '.';
}

std::vector<Token> tokenize(const std::string& text) {
    std::vector<Token> toks;
    int line = 1;
    size_t i = 0;
    while (i < text.size()) {
        char c = text[i];
        if (c == '\n') {
            ++line;
            ++i;
            continue;
        }
        if (std::isspace(static_cast<unsigned char>(c))) {
            ++i;
            continue;
        }
        if (c == '\\') {  // comment to end of line
            while (i < text.size() && text[i] != '\n') ++i;
            continue;
        }
        if (is_name_start(c)) {
            size_t j = i;
            while (j < text.size() && is_name_char(text[j])) ++j;
            std::string word = text.substr(i, j - i);
            // name ending with ':' is a label
            if (j < text.size() && text[j] == ':') {
                toks.push_back({word + ":", line});
                i = j + 1;
            } else {
                toks.push_back({word, line});
                i = j;
            }
            continue;
        }
        if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') {
            size_t j = i;
            while (j < text.size() &&
                   (std::isdigit(static_cast<unsigned char>(text[j])) || text[j] == '.' ||
                    text[j] == 'e' || text[j] == 'E' ||
                    ((text[j] == '+' || text[j] == '-') &&
                     (text[j - 1] == 'e' || text[j - 1] == 'E'))))
                ++j;
            toks.push_back({text.substr(i, j - i), line});
            i = j;
            continue;
        }
        if (c == '<' || c == '>') {
            if (i + 1 < text.size() && text[i + 1] == '=') {
                toks.push_back({std::string(1, c) + "=", line});
                i += 2;
            } else {
                toks.push_back({std::string(1, c), line});
                ++i;
            }
            continue;
        }
        if (c == '=' || c == '+' || c == '-') {
            toks.push_back({std::string(1, c), line});
            ++i;
            continue;
        }
        throw std::runtime_error("lp parse: unexpected character '" + std::string(1, c) +
                                 "' at line " + std::to_string(line));
    }
    return toks;
}

bool is_number(const std::string& s) {
    if (s.empty()) return false;
    char c = s[0];
    return std::isdigit(static_cast<unsigned char>(c)) || c == '.';
}

bool keyword_is(const std::string& tok, const char* kw) {
    if (tok.size() != std::strlen(kw)) return false;
    for (size_t i = 0; i < tok.size(); ++i)
        if (std::tolower(static_cast<unsigned char>(tok[i])) != std::tolower(kw[i])) return false;
    return true;
}

struct ParsedVar {
    double lb = 0.0;
    double ub = kInf;
    bool bounded = false;  // saw an explicit Bounds entry
    VarKind kind = VarKind::Continuous;
    double obj = 0.0;
};

}  // namespace

MilpModel read_lp(const std::string& text) {
    std::vector<Token> toks = tokenize(text);
    size_t pos = 0;
    auto peek = [&]() -> const Token& {
        static Token eof{"", -1};
        return pos < toks.size() ? toks[pos] : eof;
    };
    auto next = [&]() -> Token {
        if (pos >= toks.size()) throw std::runtime_error("lp parse: unexpected end of input");
        return toks[pos++];
    };
    auto fail = [](const Token& t, const std::string& msg) -> double {
        throw std::runtime_error("lp parse line " + std::to_string(t.line) + ": " + msg);
    };
    auto parse_value = [&](Token t) -> double {
        if (keyword_is(t.text, "inf") || keyword_is(t.text, "infinity")) return kInf;
        try {
            return std::stod(t.text);
        } catch (...) {
            return fail(t, "expected number, got '" + t.text + "'");
        }
    };

    std::vector<std::string> var_names;
    std::map<std::string, int> var_index;
    std::vector<ParsedVar> vars;
    auto var_of = [&](const std::string& name) {
        auto it = var_index.find(name);
        if (it != var_index.end()) return it->second;
        int id = static_cast<int>(vars.size());
        var_index.emplace(name, id);
        var_names.push_back(name);
        vars.push_back({});
        return id;
    };

    // (terms, sense, rhs, name)
    struct Row {
        std::string name;
        std::vector<std::pair<int, double>> terms;
        RowSense sense;
        double rhs;
    };
    std::vector<Row> rows;

    if (!keyword_is(next().text, "minimize"))
        throw std::runtime_error("lp parse: expected 'Minimize'");

    // Linear expression until a sense token or section keyword.
    auto parse_expr = [&](std::vector<std::pair<int, double>>& terms) {
        double sign = 1.0;
        bool have_sign = false;
        while (pos < toks.size()) {
            const Token& t = peek();
            if (t.text == "+" || t.text == "-") {
                if (have_sign && t.text == "-") sign = -sign;
                if (!have_sign) sign = (t.text == "-") ? -1.0 : 1.0;
                have_sign = true;
                ++pos;
                continue;
            }
            if (is_number(t.text)) {
                Token num = next();
                double coef = sign * parse_value(num);
                if (pos < toks.size() && is_name_start(peek().text[0]) &&
                    !keyword_is(peek().text, "subject") && !keyword_is(peek().text, "bounds") &&
                    !keyword_is(peek().text, "generals") && !keyword_is(peek().text, "binaries") &&
                    !keyword_is(peek().text, "end") && !keyword_is(peek().text, "inf")) {
                    Token name = next();
                    terms.emplace_back(var_of(name.text), coef);
                } else if (coef != 0.0) {
                    fail(num, "constant term not supported");
                }
                sign = 1.0;
                have_sign = false;
                continue;
            }
            if (is_name_start(t.text[0]) && t.text.back() != ':') {
                if (keyword_is(t.text, "subject") || keyword_is(t.text, "bounds") ||
                    keyword_is(t.text, "generals") || keyword_is(t.text, "binaries") ||
                    keyword_is(t.text, "end"))
                    break;
                Token name = next();
                terms.emplace_back(var_of(name.text), sign);
                sign = 1.0;
                have_sign = false;
                continue;
            }
            break;
        }
    };

    // Objective (optional label).
    std::vector<std::pair<int, double>> obj_terms;
    if (pos < toks.size() && peek().text.back() == ':') ++pos;
    parse_expr(obj_terms);
    for (const auto& [j, c] : obj_terms) vars[j].obj += c;

    Token st = next();
    if (!keyword_is(st.text, "subject")) fail(st, "expected 'Subject To'");
    Token to = next();
    if (!keyword_is(to.text, "to")) fail(to, "expected 'Subject To'");

    int anon = 0;
    while (pos < toks.size() && !keyword_is(peek().text, "bounds") &&
           !keyword_is(peek().text, "generals") && !keyword_is(peek().text, "binaries") &&
           !keyword_is(peek().text, "end")) {
        Row row;
        if (peek().text.back() == ':') {
            row.name = next().text;
            row.name.pop_back();
        } else {
            row.name = "c" + std::to_string(anon++);
        }
        parse_expr(row.terms);
        Token op = next();
        if (op.text == "<=" || op.text == "<")
            row.sense = RowSense::LessEqual;
        else if (op.text == ">=" || op.text == ">")
            row.sense = RowSense::GreaterEqual;
        else if (op.text == "=")
            row.sense = RowSense::Equal;
        else
            fail(op, "expected constraint sense, got '" + op.text + "'");
        double sign = 1.0;
        Token rv = next();
        if (rv.text == "-") {
            sign = -1.0;
            rv = next();
        } else if (rv.text == "+") {
            rv = next();
        }
        row.rhs = sign * parse_value(rv);
        rows.push_back(std::move(row));
    }

    if (pos < toks.size() && keyword_is(peek().text, "bounds")) {
        ++pos;
        while (pos < toks.size() && !keyword_is(peek().text, "generals") &&
               !keyword_is(peek().text, "binaries") && !keyword_is(peek().text, "end")) {
            // Forms: "lb <= x <= ub", "x free", "x = v", "x <= ub", "x >= lb"
            Token t = next();
            double sign = 1.0;
            if (t.text == "-") {
                sign = -1.0;
                t = next();
            }
            if (is_number(t.text) || keyword_is(t.text, "inf")) {
                double lb = sign * parse_value(t);
                Token op = next();
                if (op.text != "<=" && op.text != "<") fail(op, "expected '<=' in bound");
                Token name = next();
                int j = var_of(name.text);
                vars[j].lb = lb;
                vars[j].bounded = true;
                if (pos < toks.size() && (peek().text == "<=" || peek().text == "<")) {
                    ++pos;
                    double s2 = 1.0;
                    Token ub = next();
                    if (ub.text == "-") {
                        s2 = -1.0;
                        ub = next();
                    }
                    vars[j].ub = s2 * parse_value(ub);
                }
            } else {
                int j = var_of(t.text);
                Token op = next();
                if (keyword_is(op.text, "free")) {
                    vars[j].lb = -kInf;
                    vars[j].ub = kInf;
                    vars[j].bounded = true;
                } else if (op.text == "=") {
                    double s2 = 1.0;
                    Token v = next();
                    if (v.text == "-") {
                        s2 = -1.0;
                        v = next();
                    }
                    double val = s2 * parse_value(v);
                    vars[j].lb = vars[j].ub = val;
                    vars[j].bounded = true;
                } else if (op.text == "<=" || op.text == "<") {
                    double s2 = 1.0;
                    Token v = next();
                    if (v.text == "-") {
                        s2 = -1.0;
                        v = next();
                    }
                    vars[j].ub = s2 * parse_value(v);
                    vars[j].bounded = true;
                } else if (op.text == ">=" || op.text == ">") {
                    double s2 = 1.0;
                    Token v = next();
                    if (v.text == "-") {
                        s2 = -1.0;
                        v = next();
                    }
                    vars[j].lb = s2 * parse_value(v);
                    vars[j].bounded = true;
                } else {
                    fail(op, "bad bound line near '" + op.text + "'");
                }
            }
        }
    }
    while (pos < toks.size() && !keyword_is(peek().text, "end")) {
        Token sec = next();
        VarKind kind;
        if (keyword_is(sec.text, "generals"))
            kind = VarKind::Integer;
        else if (keyword_is(sec.text, "binaries"))
            kind = VarKind::Binary;
        else {
            fail(sec, "unexpected section '" + sec.text + "'");
            break;
        }
        while (pos < toks.size() && !keyword_is(peek().text, "generals") &&
               !keyword_is(peek().text, "binaries") && !keyword_is(peek().text, "end")) {
            int j = var_of(next().text);
            vars[j].kind = kind;
            if (kind == VarKind::Binary && !vars[j].bounded) {
                vars[j].lb = 0.0;
                vars[j].ub = 1.0;
            }
        }
    }

    MilpModel model;
    for (size_t j = 0; j < vars.size(); ++j)
        model.add_variable(var_names[j], vars[j].lb, vars[j].ub, vars[j].kind, vars[j].obj);
    for (const Row& r : rows) model.add_constraint(r.name, r.sense, r.rhs, r.terms);
    return model;
}

}  // namespace flexplan
