#pragma once

// User-supplied rate laws. Grammar (whitespace between tokens is ignored):
//
//   expr   := term (('+' | '-') term)*
//   term   := factor (('*' | '/') factor)*
//   factor := base ('^' unsigned-int)?
//   base   := number | ident | '(' expr ')' | func '(' expr ')' | '-' base
//   func   := 'exp' | 'max0'
//   ident  := [a-zA-Z_][a-zA-Z0-9_]*
//
// max0 is the smooth positive part zeta_plus; its width comes from the
// evaluation context.

#include <cctype>
#include <cmath>
#include <cstdio>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "porecat/errors.hpp"
#include "porecat/model/polynomial.hpp"
#include "porecat/model/smooth.hpp"

namespace porecat {

enum class ExprKind { number, variable, add, sub, mul, div, pow, neg, exp, max0, max0_slope };

struct ExprNode {
    ExprKind kind = ExprKind::number;
    double value = 0.0;   // number
    std::string name;     // variable
    int exponent = 0;     // pow
    std::shared_ptr<const ExprNode> lhs;
    std::shared_ptr<const ExprNode> rhs;
};

using ExprPtr = std::shared_ptr<const ExprNode>;

using Bindings = std::map<std::string, double, std::less<>>;

inline constexpr double default_max0_width = 1e-6;

namespace detail {

inline ExprPtr make_number(double v) {
    auto n = std::make_shared<ExprNode>();
    n->kind = ExprKind::number;
    n->value = v;
    return n;
}
inline ExprPtr make_variable(std::string name) {
    auto n = std::make_shared<ExprNode>();
    n->kind = ExprKind::variable;
    n->name = std::move(name);
    return n;
}
inline ExprPtr make_unary(ExprKind k, ExprPtr a) {
    auto n = std::make_shared<ExprNode>();
    n->kind = k;
    n->lhs = std::move(a);
    return n;
}
inline ExprPtr make_binary(ExprKind k, ExprPtr a, ExprPtr b) {
    auto n = std::make_shared<ExprNode>();
    n->kind = k;
    n->lhs = std::move(a);
    n->rhs = std::move(b);
    return n;
}
inline ExprPtr make_pow(ExprPtr a, int e) {
    auto n = std::make_shared<ExprNode>();
    n->kind = ExprKind::pow;
    n->lhs = std::move(a);
    n->exponent = e;
    return n;
}

class Parser {
public:
    explicit Parser(std::string_view text) : text_(text) {}

    ExprPtr parse() {
        ExprPtr e = expr();
        skip_ws();
        if (pos_ != text_.size()) fail("unexpected character '" + std::string(1, text_[pos_]) + "'",
                                       "operator or end of input");
        return e;
    }

private:
    [[noreturn]] void fail(const std::string& what, const std::string& expected) const {
        throw ParseError("syntax error: " + what + " (expected " + expected + ")", pos_, expected);
    }

    void skip_ws() {
        while (pos_ < text_.size() && std::isspace(static_cast<unsigned char>(text_[pos_]))) ++pos_;
    }
    bool peek(char c) {
        skip_ws();
        return pos_ < text_.size() && text_[pos_] == c;
    }

    ExprPtr expr() {
        ExprPtr lhs = term();
        while (true) {
            if (peek('+')) {
                ++pos_;
                lhs = make_binary(ExprKind::add, lhs, term());
            } else if (peek('-')) {
                ++pos_;
                lhs = make_binary(ExprKind::sub, lhs, term());
            } else {
                return lhs;
            }
        }
    }

    ExprPtr term() {
        ExprPtr lhs = factor();
        while (true) {
            if (peek('*')) {
                ++pos_;
                lhs = make_binary(ExprKind::mul, lhs, factor());
            } else if (peek('/')) {
                ++pos_;
                lhs = make_binary(ExprKind::div, lhs, factor());
            } else {
                return lhs;
            }
        }
    }

    ExprPtr factor() {
        ExprPtr b = base();
        if (peek('^')) {
            ++pos_;
            skip_ws();
            const std::size_t start = pos_;
            while (pos_ < text_.size() && std::isdigit(static_cast<unsigned char>(text_[pos_]))) ++pos_;
            if (start == pos_) fail("missing exponent", "unsigned integer");
            const std::string digits(text_.substr(start, pos_ - start));
            if (digits.size() > 6) {
                pos_ = start;
                fail("exponent too large", "unsigned integer below 10^6");
            }
            b = make_pow(b, std::stoi(digits));
        }
        return b;
    }

    ExprPtr base() {
        skip_ws();
        if (pos_ >= text_.size()) fail("unexpected end of input", "number, identifier, '(' or '-'");
        const char c = text_[pos_];
        if (c == '-') {
            ++pos_;
            return make_unary(ExprKind::neg, base());
        }
        if (c == '(') {
            ++pos_;
            ExprPtr e = expr();
            if (!peek(')')) fail("unbalanced parenthesis", "')'");
            ++pos_;
            return e;
        }
        if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') return number();
        if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
            const std::size_t start = pos_;
            while (pos_ < text_.size() &&
                   (std::isalnum(static_cast<unsigned char>(text_[pos_])) || text_[pos_] == '_'))
                ++pos_;
            std::string name(text_.substr(start, pos_ - start));
            if (peek('(')) {
                ExprKind k;
                if (name == "exp") k = ExprKind::exp;
                else if (name == "max0") k = ExprKind::max0;
                else {
                    pos_ = start;
                    fail("unknown function '" + name + "'", "one of exp, max0");
                }
                ++pos_;
                ExprPtr arg = expr();
                if (!peek(')')) fail("unbalanced parenthesis", "')'");
                ++pos_;
                return make_unary(k, arg);
            }
            return make_variable(std::move(name));
        }
        fail(std::string("unexpected character '") + c + "'", "number, identifier, '(' or '-'");
    }

    ExprPtr number() {
        const std::size_t start = pos_;
        auto digits = [&] {
            std::size_t n = 0;
            while (pos_ < text_.size() && std::isdigit(static_cast<unsigned char>(text_[pos_]))) {
                ++pos_;
                ++n;
            }
            return n;
        };
        std::size_t n = digits();
        if (pos_ < text_.size() && text_[pos_] == '.') {
            ++pos_;
            n += digits();
        }
        if (n == 0) {
            pos_ = start;
            fail("malformed number", "digit");
        }
        if (pos_ < text_.size() && (text_[pos_] == 'e' || text_[pos_] == 'E')) {
            const std::size_t save = pos_;
            ++pos_;
            if (pos_ < text_.size() && (text_[pos_] == '+' || text_[pos_] == '-')) ++pos_;
            if (digits() == 0) pos_ = save;  // 'e' starts the next token
        }
        return make_number(std::stod(std::string(text_.substr(start, pos_ - start))));
    }

    std::string_view text_;
    std::size_t pos_ = 0;
};

inline std::string format_number(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

} // namespace detail

/// Parsed rate expression. Immutable and cheap to copy (shared AST).
class RateExpr {
public:
    RateExpr() : root_(detail::make_number(0.0)) {}
    explicit RateExpr(ExprPtr root) : root_(std::move(root)) {}

    static RateExpr parse(std::string_view text) { return RateExpr(detail::Parser(text).parse()); }

    const ExprNode& root() const { return *root_; }
    ExprPtr root_ptr() const { return root_; }

    /// Evaluates with every identifier looked up in `b`.
    double evaluate(const Bindings& b, double max0_width = default_max0_width) const {
        return eval(*root_, b, max0_width);
    }

    /// Fully parenthesized text that re-parses to a structurally equal tree.
    std::string to_string() const { return print(*root_); }

    std::set<std::string> identifiers() const {
        std::set<std::string> out;
        collect(*root_, out);
        return out;
    }

    /// Symbolic partial derivative. The result may contain the internal
    /// max0_slope node, which has no textual form.
    RateExpr derivative(std::string_view var) const { return RateExpr(diff(root_, var)); }

    /// Converts to a polynomial in `vars`, treating every other identifier
    /// as a constant from `constants`. Empty when the expression is not a
    /// polynomial (division by a variable, exp or max0 of a variable).
    std::optional<Polynomial> to_polynomial(std::span<const std::string> vars,
                                            const Bindings& constants) const {
        return poly(*root_, vars, constants);
    }

    friend bool operator==(const RateExpr& a, const RateExpr& b) { return equal(*a.root_, *b.root_); }

private:
    static double eval(const ExprNode& n, const Bindings& b, double w) {
        switch (n.kind) {
        case ExprKind::number: return n.value;
        case ExprKind::variable: {
            auto it = b.find(n.name);
            PORECAT_REQUIRE(it != b.end(), ConfigError, "rate expression: unbound identifier '" + n.name + "'");
            return it->second;
        }
        case ExprKind::add: return eval(*n.lhs, b, w) + eval(*n.rhs, b, w);
        case ExprKind::sub: return eval(*n.lhs, b, w) - eval(*n.rhs, b, w);
        case ExprKind::mul: return eval(*n.lhs, b, w) * eval(*n.rhs, b, w);
        case ExprKind::div: return eval(*n.lhs, b, w) / eval(*n.rhs, b, w);
        case ExprKind::pow: return std::pow(eval(*n.lhs, b, w), n.exponent);
        case ExprKind::neg: return -eval(*n.lhs, b, w);
        case ExprKind::exp: return std::exp(eval(*n.lhs, b, w));
        case ExprKind::max0: return zeta_plus(eval(*n.lhs, b, w), w);
        case ExprKind::max0_slope: return zeta_plus_derivative(eval(*n.lhs, b, w), w);
        }
        return 0.0;
    }

    static std::string print(const ExprNode& n) {
        auto bin = [&](const char* op) { return "(" + print(*n.lhs) + " " + op + " " + print(*n.rhs) + ")"; };
        switch (n.kind) {
        case ExprKind::number: return detail::format_number(n.value);
        case ExprKind::variable: return n.name;
        case ExprKind::add: return bin("+");
        case ExprKind::sub: return bin("-");
        case ExprKind::mul: return bin("*");
        case ExprKind::div: return bin("/");
        case ExprKind::pow: return "(" + print(*n.lhs) + "^" + std::to_string(n.exponent) + ")";
        case ExprKind::neg: return "(-" + print(*n.lhs) + ")";
        case ExprKind::exp: return "exp(" + print(*n.lhs) + ")";
        case ExprKind::max0: return "max0(" + print(*n.lhs) + ")";
        case ExprKind::max0_slope: return "max0_slope(" + print(*n.lhs) + ")";
        }
        return {};
    }

    static void collect(const ExprNode& n, std::set<std::string>& out) {
        if (n.kind == ExprKind::variable) out.insert(n.name);
        if (n.lhs) collect(*n.lhs, out);
        if (n.rhs) collect(*n.rhs, out);
    }

    static bool equal(const ExprNode& a, const ExprNode& b) {
        if (a.kind != b.kind) return false;
        switch (a.kind) {
        case ExprKind::number: return a.value == b.value;
        case ExprKind::variable: return a.name == b.name;
        case ExprKind::pow: return a.exponent == b.exponent && equal(*a.lhs, *b.lhs);
        default: break;
        }
        if (!equal(*a.lhs, *b.lhs)) return false;
        return !a.rhs || equal(*a.rhs, *b.rhs);
    }

    static bool is_num(const ExprPtr& p, double v) { return p->kind == ExprKind::number && p->value == v; }

    static ExprPtr add(ExprPtr a, ExprPtr b) {
        if (is_num(a, 0.0)) return b;
        if (is_num(b, 0.0)) return a;
        return detail::make_binary(ExprKind::add, a, b);
    }
    static ExprPtr sub(ExprPtr a, ExprPtr b) {
        if (is_num(b, 0.0)) return a;
        if (is_num(a, 0.0)) return detail::make_unary(ExprKind::neg, b);
        return detail::make_binary(ExprKind::sub, a, b);
    }
    static ExprPtr mul(ExprPtr a, ExprPtr b) {
        if (is_num(a, 0.0) || is_num(b, 0.0)) return detail::make_number(0.0);
        if (is_num(a, 1.0)) return b;
        if (is_num(b, 1.0)) return a;
        return detail::make_binary(ExprKind::mul, a, b);
    }

    static ExprPtr diff(const ExprPtr& p, std::string_view x) {
        const ExprNode& n = *p;
        switch (n.kind) {
        case ExprKind::number: return detail::make_number(0.0);
        case ExprKind::variable: return detail::make_number(n.name == x ? 1.0 : 0.0);
        case ExprKind::add: return add(diff(n.lhs, x), diff(n.rhs, x));
        case ExprKind::sub: return sub(diff(n.lhs, x), diff(n.rhs, x));
        case ExprKind::mul: return add(mul(diff(n.lhs, x), n.rhs), mul(n.lhs, diff(n.rhs, x)));
        case ExprKind::div: {
            ExprPtr num = sub(mul(diff(n.lhs, x), n.rhs), mul(n.lhs, diff(n.rhs, x)));
            if (is_num(num, 0.0)) return num;
            return detail::make_binary(ExprKind::div, num, detail::make_pow(n.rhs, 2));
        }
        case ExprKind::pow: {
            if (n.exponent == 0) return detail::make_number(0.0);
            ExprPtr outer = n.exponent == 1 ? detail::make_number(1.0)
                                            : mul(detail::make_number(n.exponent),
                                                  n.exponent == 2 ? n.lhs : detail::make_pow(n.lhs, n.exponent - 1));
            return mul(outer, diff(n.lhs, x));
        }
        case ExprKind::neg: {
            ExprPtr d = diff(n.lhs, x);
            return is_num(d, 0.0) ? d : detail::make_unary(ExprKind::neg, d);
        }
        case ExprKind::exp: return mul(p, diff(n.lhs, x));
        case ExprKind::max0:
            return mul(detail::make_unary(ExprKind::max0_slope, n.lhs), diff(n.lhs, x));
        case ExprKind::max0_slope:
            throw ConfigError("rate expression: second derivative of max0 is not supported");
        }
        return detail::make_number(0.0);
    }

    static std::optional<Polynomial> poly(const ExprNode& n, std::span<const std::string> vars,
                                          const Bindings& constants) {
        const int nv = static_cast<int>(vars.size());
        auto both = [&](auto&& fn) -> std::optional<Polynomial> {
            auto a = poly(*n.lhs, vars, constants);
            if (!a) return std::nullopt;
            auto b = poly(*n.rhs, vars, constants);
            if (!b) return std::nullopt;
            return fn(*a, *b);
        };
        switch (n.kind) {
        case ExprKind::number: return Polynomial::constant(nv, n.value);
        case ExprKind::variable: {
            for (int i = 0; i < nv; ++i)
                if (vars[static_cast<std::size_t>(i)] == n.name) return Polynomial::variable(nv, i);
            auto it = constants.find(n.name);
            if (it == constants.end()) return std::nullopt;
            return Polynomial::constant(nv, it->second);
        }
        case ExprKind::add: return both([](const Polynomial& a, const Polynomial& b) { return a + b; });
        case ExprKind::sub: return both([](const Polynomial& a, const Polynomial& b) { return a - b; });
        case ExprKind::mul: return both([](const Polynomial& a, const Polynomial& b) { return a * b; });
        case ExprKind::div: {
            auto a = poly(*n.lhs, vars, constants);
            auto b = poly(*n.rhs, vars, constants);
            if (!a || !b || !b->is_constant() || b->constant_term() == 0.0) return std::nullopt;
            return *a * (1.0 / b->constant_term());
        }
        case ExprKind::pow: {
            auto a = poly(*n.lhs, vars, constants);
            if (!a) return std::nullopt;
            Polynomial r = Polynomial::constant(nv, 1.0);
            for (int k = 0; k < n.exponent; ++k) r = r * *a;
            return r;
        }
        case ExprKind::neg: {
            auto a = poly(*n.lhs, vars, constants);
            if (!a) return std::nullopt;
            return *a * -1.0;
        }
        case ExprKind::exp:
        case ExprKind::max0:
        case ExprKind::max0_slope: {
            auto a = poly(*n.lhs, vars, constants);
            if (!a || !a->is_constant()) return std::nullopt;
            const double v = a->constant_term();
            const double r = n.kind == ExprKind::exp    ? std::exp(v)
                             : n.kind == ExprKind::max0 ? zeta_plus(v, default_max0_width)
                                                        : zeta_plus_derivative(v, default_max0_width);
            return Polynomial::constant(nv, r);
        }
        }
        return std::nullopt;
    }

    ExprPtr root_;
};

/// A RateExpr with identifiers resolved to argument slots and constants
/// folded in, for evaluation inside time loops.
class CompiledExpr {
public:
    CompiledExpr() = default;
    CompiledExpr(const RateExpr& expr, std::span<const std::string> args, const Bindings& constants,
                 double max0_width = default_max0_width)
        : width_(max0_width) {
        root_ = compile(expr.root(), args, constants);
    }

    double operator()(std::span<const double> args) const { return root_ ? eval(*root_, args) : 0.0; }

private:
    struct Node {
        ExprKind kind;
        double value = 0.0;
        int slot = -1;
        int exponent = 0;
        std::unique_ptr<Node> lhs, rhs;
    };

    static std::unique_ptr<Node> compile(const ExprNode& n, std::span<const std::string> args,
                                         const Bindings& constants) {
        auto out = std::make_unique<Node>();
        out->kind = n.kind;
        out->value = n.value;
        out->exponent = n.exponent;
        if (n.kind == ExprKind::variable) {
            for (std::size_t i = 0; i < args.size(); ++i)
                if (args[i] == n.name) out->slot = static_cast<int>(i);
            if (out->slot < 0) {
                auto it = constants.find(n.name);
                PORECAT_REQUIRE(it != constants.end(), ConfigError,
                                "rate expression: unbound identifier '" + n.name + "'");
                out->kind = ExprKind::number;
                out->value = it->second;
            }
        }
        if (n.lhs) out->lhs = compile(*n.lhs, args, constants);
        if (n.rhs) out->rhs = compile(*n.rhs, args, constants);
        return out;
    }

    double eval(const Node& n, std::span<const double> a) const {
        switch (n.kind) {
        case ExprKind::number: return n.value;
        case ExprKind::variable: return a[static_cast<std::size_t>(n.slot)];
        case ExprKind::add: return eval(*n.lhs, a) + eval(*n.rhs, a);
        case ExprKind::sub: return eval(*n.lhs, a) - eval(*n.rhs, a);
        case ExprKind::mul: return eval(*n.lhs, a) * eval(*n.rhs, a);
        case ExprKind::div: return eval(*n.lhs, a) / eval(*n.rhs, a);
        case ExprKind::pow: return std::pow(eval(*n.lhs, a), n.exponent);
        case ExprKind::neg: return -eval(*n.lhs, a);
        case ExprKind::exp: return std::exp(eval(*n.lhs, a));
        case ExprKind::max0: return zeta_plus(eval(*n.lhs, a), width_);
        case ExprKind::max0_slope: return zeta_plus_derivative(eval(*n.lhs, a), width_);
        }
        return 0.0;
    }

    std::shared_ptr<Node> root_;
    double width_ = default_max0_width;
};

} // namespace porecat
