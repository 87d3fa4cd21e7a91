#pragma once

/*
 * Arithmetic expressions over the coordinates (x1, x2).
 *
 *   expr    ::= term { ("+" | "-") term }
 *   term    ::= unary { ("*" | "/") unary }
 *   unary   ::= "-" unary | "+" unary | power
 *   power   ::= primary [ "^" unary ]          (right associative)
 *   primary ::= number | "x1" | "x2" | "pi"
 *             | ("sin" | "cos" | "exp" | "abs") "(" expr ")"
 *             | "(" expr ")"
 *
 * Evaluation is templated on the scalar so the same tree yields exact
 * first derivatives through forward-mode dual numbers.
 */

#include "thickjunction/error.hpp"

#include <array>
#include <cctype>
#include <charconv>
#include <cmath>
#include <memory>
#include <numbers>
#include <string>
#include <string_view>
#include <system_error>

namespace tj {

/// Value and gradient with respect to (x1, x2).
struct Dual {
    double v = 0.0;
    double d1 = 0.0;
    double d2 = 0.0;

    Dual() = default;
    Dual(double value) : v(value) {}
    Dual(double value, double g1, double g2) : v(value), d1(g1), d2(g2) {}

    friend Dual operator+(const Dual& a, const Dual& b) { return {a.v + b.v, a.d1 + b.d1, a.d2 + b.d2}; }
    friend Dual operator-(const Dual& a, const Dual& b) { return {a.v - b.v, a.d1 - b.d1, a.d2 - b.d2}; }
    friend Dual operator-(const Dual& a) { return {-a.v, -a.d1, -a.d2}; }
    friend Dual operator*(const Dual& a, const Dual& b) {
        return {a.v * b.v, a.d1 * b.v + a.v * b.d1, a.d2 * b.v + a.v * b.d2};
    }
    friend Dual operator/(const Dual& a, const Dual& b) {
        const double q = a.v / b.v;
        return {q, (a.d1 - q * b.d1) / b.v, (a.d2 - q * b.d2) / b.v};
    }
};

namespace detail {

inline Dual chain(const Dual& a, double value, double slope) { return {value, slope * a.d1, slope * a.d2}; }

inline double fn_sin(double a) { return std::sin(a); }
inline double fn_cos(double a) { return std::cos(a); }
inline double fn_exp(double a) { return std::exp(a); }
inline double fn_abs(double a) { return std::abs(a); }
inline double fn_pow(double a, double b) { return std::pow(a, b); }

inline Dual fn_sin(const Dual& a) { return chain(a, std::sin(a.v), std::cos(a.v)); }
inline Dual fn_cos(const Dual& a) { return chain(a, std::cos(a.v), -std::sin(a.v)); }
inline Dual fn_exp(const Dual& a) {
    const double e = std::exp(a.v);
    return chain(a, e, e);
}
inline Dual fn_abs(const Dual& a) {
    const double s = a.v > 0.0 ? 1.0 : (a.v < 0.0 ? -1.0 : 0.0);
    return chain(a, std::abs(a.v), s);
}
inline Dual fn_pow(const Dual& a, const Dual& b) {
    const double p = std::pow(a.v, b.v);
    if (b.d1 == 0.0 && b.d2 == 0.0) {
        // constant exponent: valid for negative bases with integral exponents
        return chain(a, p, b.v == 0.0 ? 0.0 : b.v * std::pow(a.v, b.v - 1.0));
    }
    const double la = std::log(a.v);
    return {p, p * (b.d1 * la + b.v * a.d1 / a.v), p * (b.d2 * la + b.v * a.d2 / a.v)};
}

}  // namespace detail

class Expression {
public:
    enum class Kind { Constant, VarX1, VarX2, Add, Sub, Mul, Div, Pow, Neg, Sin, Cos, Exp, Abs };

    struct Node {
        Kind kind = Kind::Constant;
        double value = 0.0;
        std::unique_ptr<Node> lhs;
        std::unique_ptr<Node> rhs;
    };

    /// The constant zero.
    Expression() : root_(make_constant(0.0)) {}

    static Expression constant(double c) { return Expression(make_constant(c)); }

    /// Parses `text`; throws ParseError on syntax errors and unknown identifiers.
    static Expression parse(std::string_view text) {
        Parser p{text, 0};
        auto node = p.expression();
        p.skip_ws();
        if (p.pos != text.size()) throw ParseError("unexpected '" + std::string(1, text[p.pos]) + "'", p.pos);
        return Expression(std::shared_ptr<const Node>(std::move(node)));
    }

    template <class T>
    T evaluate(const T& x1, const T& x2) const {
        return eval<T>(*root_, x1, x2);
    }

    double operator()(double x1, double x2) const { return eval<double>(*root_, x1, x2); }

    /// Value and exact partial derivatives at (x1, x2).
    Dual gradient(double x1, double x2) const { return eval<Dual>(*root_, Dual(x1, 1.0, 0.0), Dual(x2, 0.0, 1.0)); }

    /// Central-difference ∂/∂x1 with step `rel_step * (1 + |x1|)`.
    double d_dx1_central(double x1, double x2, double rel_step = 1e-6) const {
        const double s = rel_step * (1.0 + std::abs(x1));
        return ((*this)(x1 + s, x2) - (*this)(x1 - s, x2)) / (2.0 * s);
    }

    bool depends_on_x1() const { return uses(*root_, Kind::VarX1); }
    bool depends_on_x2() const { return uses(*root_, Kind::VarX2); }
    bool is_constant() const { return !depends_on_x1() && !depends_on_x2(); }

    /// Fully parenthesised text that re-parses to an equivalent tree.
    std::string unparse() const { return unparse(*root_); }

    const Node& root() const { return *root_; }

private:
    explicit Expression(std::shared_ptr<const Node> root) : root_(std::move(root)) {}

    static std::shared_ptr<const Node> make_constant(double c) {
        auto n = std::make_shared<Node>();
        n->value = c;
        return n;
    }

    template <class T>
    static T eval(const Node& n, const T& x1, const T& x2) {
        using namespace detail;
        switch (n.kind) {
            case Kind::Constant: return T(n.value);
            case Kind::VarX1: return x1;
            case Kind::VarX2: return x2;
            case Kind::Add: return eval<T>(*n.lhs, x1, x2) + eval<T>(*n.rhs, x1, x2);
            case Kind::Sub: return eval<T>(*n.lhs, x1, x2) - eval<T>(*n.rhs, x1, x2);
            case Kind::Mul: return eval<T>(*n.lhs, x1, x2) * eval<T>(*n.rhs, x1, x2);
            case Kind::Div: return eval<T>(*n.lhs, x1, x2) / eval<T>(*n.rhs, x1, x2);
            case Kind::Pow: return fn_pow(eval<T>(*n.lhs, x1, x2), eval<T>(*n.rhs, x1, x2));
            case Kind::Neg: return -eval<T>(*n.lhs, x1, x2);
            case Kind::Sin: return fn_sin(eval<T>(*n.lhs, x1, x2));
            case Kind::Cos: return fn_cos(eval<T>(*n.lhs, x1, x2));
            case Kind::Exp: return fn_exp(eval<T>(*n.lhs, x1, x2));
            case Kind::Abs: return fn_abs(eval<T>(*n.lhs, x1, x2));
        }
        return T(0.0);
    }

    static bool uses(const Node& n, Kind var) {
        if (n.kind == var) return true;
        return (n.lhs && uses(*n.lhs, var)) || (n.rhs && uses(*n.rhs, var));
    }

    static std::string format_number(double v) {
        std::array<char, 64> buf{};
        auto [end, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), v);
        std::string s(buf.data(), end);
        return v < 0.0 ? "(" + s + ")" : s;
    }

    static std::string unparse(const Node& n) {
        switch (n.kind) {
            case Kind::Constant: return format_number(n.value);
            case Kind::VarX1: return "x1";
            case Kind::VarX2: return "x2";
            case Kind::Add: return "(" + unparse(*n.lhs) + "+" + unparse(*n.rhs) + ")";
            case Kind::Sub: return "(" + unparse(*n.lhs) + "-" + unparse(*n.rhs) + ")";
            case Kind::Mul: return "(" + unparse(*n.lhs) + "*" + unparse(*n.rhs) + ")";
            case Kind::Div: return "(" + unparse(*n.lhs) + "/" + unparse(*n.rhs) + ")";
            case Kind::Pow: return "(" + unparse(*n.lhs) + "^" + unparse(*n.rhs) + ")";
            case Kind::Neg: return "(-" + unparse(*n.lhs) + ")";
            case Kind::Sin: return "sin(" + unparse(*n.lhs) + ")";
            case Kind::Cos: return "cos(" + unparse(*n.lhs) + ")";
            case Kind::Exp: return "exp(" + unparse(*n.lhs) + ")";
            case Kind::Abs: return "abs(" + unparse(*n.lhs) + ")";
        }
        return "0";
    }

    struct Parser {
        std::string_view s;
        std::size_t pos;

        using Ptr = std::unique_ptr<Node>;

        static Ptr binary(Kind k, Ptr a, Ptr b) {
            auto n = std::make_unique<Node>();
            n->kind = k;
            n->lhs = std::move(a);
            n->rhs = std::move(b);
            return n;
        }
        static Ptr unary(Kind k, Ptr a) { return binary(k, std::move(a), nullptr); }

        void skip_ws() {
            while (pos < s.size() && std::isspace(static_cast<unsigned char>(s[pos]))) ++pos;
        }
        char peek() {
            skip_ws();
            return pos < s.size() ? s[pos] : '\0';
        }

        Ptr expression() {
            Ptr lhs = term();
            for (char c = peek(); c == '+' || c == '-'; c = peek()) {
                ++pos;
                lhs = binary(c == '+' ? Kind::Add : Kind::Sub, std::move(lhs), term());
            }
            return lhs;
        }

        Ptr term() {
            Ptr lhs = signed_factor();
            for (char c = peek(); c == '*' || c == '/'; c = peek()) {
                ++pos;
                lhs = binary(c == '*' ? Kind::Mul : Kind::Div, std::move(lhs), signed_factor());
            }
            return lhs;
        }

        Ptr signed_factor() {
            const char c = peek();
            if (c == '-') {
                ++pos;
                return unary(Kind::Neg, signed_factor());
            }
            if (c == '+') {
                ++pos;
                return signed_factor();
            }
            Ptr base = primary();
            if (peek() == '^') {
                ++pos;
                return binary(Kind::Pow, std::move(base), signed_factor());
            }
            return base;
        }

        Ptr primary() {
            const char c = peek();
            if (c == '\0') throw ParseError("unexpected end of expression", pos);
            if (c == '(') {
                ++pos;
                Ptr inner = expression();
                if (peek() != ')') throw ParseError("expected ')'", pos);
                ++pos;
                return inner;
            }
            if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') return number();
            if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') return identifier();
            throw ParseError("unexpected '" + std::string(1, c) + "'", pos);
        }

        Ptr number() {
            const std::size_t start = pos;
            double v = 0.0;
            auto [ptr, ec] = std::from_chars(s.data() + pos, s.data() + s.size(), v);
            if (ec != std::errc()) throw ParseError("malformed number", start);
            pos = static_cast<std::size_t>(ptr - s.data());
            auto n = std::make_unique<Node>();
            n->value = v;
            return n;
        }

        Ptr identifier() {
            const std::size_t start = pos;
            while (pos < s.size() && (std::isalnum(static_cast<unsigned char>(s[pos])) || s[pos] == '_')) ++pos;
            const std::string_view id = s.substr(start, pos - start);
            if (id == "x1" || id == "x2") {
                auto n = std::make_unique<Node>();
                n->kind = id == "x1" ? Kind::VarX1 : Kind::VarX2;
                return n;
            }
            if (id == "pi") {
                auto n = std::make_unique<Node>();
                n->value = std::numbers::pi;
                return n;
            }
            Kind fn;
            if (id == "sin") fn = Kind::Sin;
            else if (id == "cos") fn = Kind::Cos;
            else if (id == "exp") fn = Kind::Exp;
            else if (id == "abs") fn = Kind::Abs;
            else throw ParseError("unknown identifier '" + std::string(id) + "'", start);
            if (peek() != '(') throw ParseError("expected '(' after " + std::string(id), pos);
            ++pos;
            Ptr arg = expression();
            if (peek() != ')') throw ParseError("expected ')'", pos);
            ++pos;
            return unary(fn, std::move(arg));
        }
    };

    std::shared_ptr<const Node> root_;
};

}  // namespace tj
