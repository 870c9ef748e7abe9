#pragma once

#include <cctype>
#include <cmath>
#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "evoproc/errors.hpp"

namespace evoproc {

/// Variable bindings available to coefficient expressions.
struct ExprEnv {
    double t = 0.0;   // time
    double x = 0.0;   // space
    double s = 0.0;   // scalar state (reaction argument)
    double eps = 0.0; // family parameter
};

using Expr = std::function<double(const ExprEnv&)>;

/// Recursive-descent parser for the coefficient grammar:
///   expr    := term (('+' | '-') term)*
///   term    := unary (('*' | '/') unary)*
///   unary   := '-' unary | primary
///   primary := NUMBER | VAR | FUNC '(' expr (',' expr)* ')' | '(' expr ')'
/// with variables t, x, s, eps, constants pi, e, and functions
/// sin, cos, exp, tanh, sqrt, abs, pow(a, b), min(a, b), max(a, b).
/// Errors carry the byte offset of the offending token.
class ExprParser {
public:
    static Expr parse(const std::string& text) {
        ExprParser p(text);
        Expr e = p.parse_expr();
        p.skip_ws();
        if (p.pos_ != text.size())
            throw ConfigError("unexpected trailing input in expression '" + text + "'",
                              static_cast<std::ptrdiff_t>(p.pos_));
        return e;
    }

private:
    explicit ExprParser(const std::string& text) : text_(text) {}

    void skip_ws() {
        while (pos_ < text_.size() && std::isspace(static_cast<unsigned char>(text_[pos_]))) ++pos_;
    }

    bool eat(char c) {
        skip_ws();
        if (pos_ < text_.size() && text_[pos_] == c) {
            ++pos_;
            return true;
        }
        return false;
    }

    [[noreturn]] void fail(const std::string& msg) {
        throw ConfigError(msg + " in expression '" + text_ + "'",
                          static_cast<std::ptrdiff_t>(pos_));
    }

    Expr parse_expr() {
        Expr lhs = parse_term();
        for (;;) {
            if (eat('+')) {
                Expr rhs = parse_term();
                lhs = [lhs, rhs](const ExprEnv& e) { return lhs(e) + rhs(e); };
            } else if (eat('-')) {
                Expr rhs = parse_term();
                lhs = [lhs, rhs](const ExprEnv& e) { return lhs(e) - rhs(e); };
            } else {
                return lhs;
            }
        }
    }

    Expr parse_term() {
        Expr lhs = parse_unary();
        for (;;) {
            if (eat('*')) {
                Expr rhs = parse_unary();
                lhs = [lhs, rhs](const ExprEnv& e) { return lhs(e) * rhs(e); };
            } else if (eat('/')) {
                Expr rhs = parse_unary();
                lhs = [lhs, rhs](const ExprEnv& e) { return lhs(e) / rhs(e); };
            } else {
                return lhs;
            }
        }
    }

    Expr parse_unary() {
        if (eat('-')) {
            Expr inner = parse_unary();
            return [inner](const ExprEnv& e) { return -inner(e); };
        }
        return parse_primary();
    }

    Expr parse_primary() {
        skip_ws();
        if (pos_ >= text_.size()) fail("unexpected end of expression");
        const char c = text_[pos_];
        if (c == '(') {
            ++pos_;
            Expr inner = parse_expr();
            if (!eat(')')) fail("missing ')'");
            return inner;
        }
        if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') return parse_number();
        if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') return parse_ident();
        fail("unexpected character");
    }

    Expr parse_number() {
        const std::size_t start = pos_;
        std::size_t consumed = 0;
        double v = 0.0;
        try {
            v = std::stod(text_.substr(start), &consumed);
        } catch (const std::exception&) {
            fail("malformed number");
        }
        pos_ = start + consumed;
        return [v](const ExprEnv&) { return v; };
    }

    Expr parse_ident() {
        const std::size_t start = pos_;
        while (pos_ < text_.size() &&
               (std::isalnum(static_cast<unsigned char>(text_[pos_])) || text_[pos_] == '_'))
            ++pos_;
        const std::string name = text_.substr(start, pos_ - start);
        skip_ws();
        if (pos_ < text_.size() && text_[pos_] == '(') {
            ++pos_;
            std::vector<Expr> args;
            args.push_back(parse_expr());
            while (eat(',')) args.push_back(parse_expr());
            if (!eat(')')) fail("missing ')' after arguments of " + name);
            return make_call(name, args, start);
        }
        if (name == "t") return [](const ExprEnv& e) { return e.t; };
        if (name == "x") return [](const ExprEnv& e) { return e.x; };
        if (name == "s") return [](const ExprEnv& e) { return e.s; };
        if (name == "eps") return [](const ExprEnv& e) { return e.eps; };
        if (name == "pi") return [](const ExprEnv&) { return M_PI; };
        if (name == "e") return [](const ExprEnv&) { return M_E; };
        pos_ = start;
        fail("unknown identifier '" + name + "'");
    }

    Expr make_call(const std::string& name, const std::vector<Expr>& args, std::size_t at) {
        auto need = [&](std::size_t n) {
            if (args.size() != n) {
                pos_ = at;
                fail("wrong argument count for " + name);
            }
        };
        if (name == "sin") {
            need(1);
            auto a = args[0];
            return [a](const ExprEnv& e) { return std::sin(a(e)); };
        }
        if (name == "cos") {
            need(1);
            auto a = args[0];
            return [a](const ExprEnv& e) { return std::cos(a(e)); };
        }
        if (name == "exp") {
            need(1);
            auto a = args[0];
            return [a](const ExprEnv& e) { return std::exp(a(e)); };
        }
        if (name == "tanh") {
            need(1);
            auto a = args[0];
            return [a](const ExprEnv& e) { return std::tanh(a(e)); };
        }
        if (name == "sqrt") {
            need(1);
            auto a = args[0];
            return [a](const ExprEnv& e) { return std::sqrt(a(e)); };
        }
        if (name == "abs") {
            need(1);
            auto a = args[0];
            return [a](const ExprEnv& e) { return std::abs(a(e)); };
        }
        if (name == "pow") {
            need(2);
            auto a = args[0], b = args[1];
            return [a, b](const ExprEnv& e) { return std::pow(a(e), b(e)); };
        }
        if (name == "min") {
            need(2);
            auto a = args[0], b = args[1];
            return [a, b](const ExprEnv& e) { return std::min(a(e), b(e)); };
        }
        if (name == "max") {
            need(2);
            auto a = args[0], b = args[1];
            return [a, b](const ExprEnv& e) { return std::max(a(e), b(e)); };
        }
        pos_ = at;
        fail("unknown function '" + name + "'");
    }

    const std::string& text_;
    std::size_t pos_ = 0;
};

} // namespace evoproc
