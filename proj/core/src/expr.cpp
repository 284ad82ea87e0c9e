#include "ergo/expr.hpp"

#include "ergo/numerics.hpp"

#include <cctype>
#include <cmath>
#include <cstdlib>
#include <utility>
#include <vector>

namespace ergo {
namespace detail {

enum class Op { add, sub, mul, div, pow_ };
enum class Fn { exp_, log_, sqrt_, abs_, pow_, min_, max_, gamma_ };

struct ExprNode {
    enum class Kind { number, variable, unary_neg, binary, call } kind;
    double number = 0.0;
    Op op = Op::add;
    Fn fn = Fn::exp_;
    std::shared_ptr<const ExprNode> lhs, rhs;

    static std::shared_ptr<const ExprNode> num(double v) {
        auto n = std::make_shared<ExprNode>();
        n->kind = Kind::number;
        n->number = v;
        return n;
    }
    static std::shared_ptr<const ExprNode> var() {
        auto n = std::make_shared<ExprNode>();
        n->kind = Kind::variable;
        return n;
    }
    static std::shared_ptr<const ExprNode> neg(std::shared_ptr<const ExprNode> c) {
        auto n = std::make_shared<ExprNode>();
        n->kind = Kind::unary_neg;
        n->lhs = std::move(c);
        return n;
    }
    static std::shared_ptr<const ExprNode> bin(Op op, std::shared_ptr<const ExprNode> l,
                                               std::shared_ptr<const ExprNode> r) {
        auto n = std::make_shared<ExprNode>();
        n->kind = Kind::binary;
        n->op = op;
        n->lhs = std::move(l);
        n->rhs = std::move(r);
        return n;
    }
    static std::shared_ptr<const ExprNode> call(Fn fn, std::shared_ptr<const ExprNode> l,
                                                std::shared_ptr<const ExprNode> r = nullptr) {
        auto n = std::make_shared<ExprNode>();
        n->kind = Kind::call;
        n->fn = fn;
        n->lhs = std::move(l);
        n->rhs = std::move(r);
        return n;
    }
};

namespace {

double eval(const ExprNode& n, double x) {
    switch (n.kind) {
        case ExprNode::Kind::number: return n.number;
        case ExprNode::Kind::variable: return x;
        case ExprNode::Kind::unary_neg: return -eval(*n.lhs, x);
        case ExprNode::Kind::binary: {
            const double a = eval(*n.lhs, x);
            const double b = eval(*n.rhs, x);
            switch (n.op) {
                case Op::add: return a + b;
                case Op::sub: return a - b;
                case Op::mul: return a * b;
                case Op::div: return a / b;
                case Op::pow_: return std::pow(a, b);
            }
            return 0.0;
        }
        case ExprNode::Kind::call: {
            const double a = eval(*n.lhs, x);
            switch (n.fn) {
                case Fn::exp_: return std::exp(a);
                case Fn::log_: return std::log(a);
                case Fn::sqrt_: return std::sqrt(a);
                case Fn::abs_: return std::abs(a);
                case Fn::gamma_: return gamma_fn(a);
                case Fn::pow_: return std::pow(a, eval(*n.rhs, x));
                case Fn::min_: return std::min(a, eval(*n.rhs, x));
                case Fn::max_: return std::max(a, eval(*n.rhs, x));
            }
            return 0.0;
        }
    }
    return 0.0;
}

const char* fn_name(Fn f) {
    switch (f) {
        case Fn::exp_: return "exp";
        case Fn::log_: return "log";
        case Fn::sqrt_: return "sqrt";
        case Fn::abs_: return "abs";
        case Fn::pow_: return "pow";
        case Fn::min_: return "min";
        case Fn::max_: return "max";
        case Fn::gamma_: return "gamma";
    }
    return "?";
}

int precedence(const ExprNode& n) {
    switch (n.kind) {
        case ExprNode::Kind::binary:
            switch (n.op) {
                case Op::add:
                case Op::sub: return 1;
                case Op::mul:
                case Op::div: return 2;
                case Op::pow_: return 3;
            }
            return 1;
        case ExprNode::Kind::unary_neg: return 1;
        default: return 4;
    }
}

void print(const ExprNode& n, const std::string& var, std::string& out);

void print_child(const ExprNode& child, int parent_prec, bool tight, const std::string& var,
                 std::string& out) {
    const bool parens = precedence(child) < parent_prec || (tight && precedence(child) == parent_prec);
    if (parens) out += '(';
    print(child, var, out);
    if (parens) out += ')';
}

void print(const ExprNode& n, const std::string& var, std::string& out) {
    char buf[48];
    switch (n.kind) {
        case ExprNode::Kind::number:
            std::snprintf(buf, sizeof buf, "%.17g", n.number);
            out += buf;
            return;
        case ExprNode::Kind::variable:
            out += var;
            return;
        case ExprNode::Kind::unary_neg:
            out += '-';
            print_child(*n.lhs, 2, false, var, out);
            return;
        case ExprNode::Kind::binary: {
            const int p = precedence(n);
            const char* sym = n.op == Op::add   ? "+"
                              : n.op == Op::sub ? "-"
                              : n.op == Op::mul ? "*"
                              : n.op == Op::div ? "/"
                                                : "^";
            // ^ is right associative, the rest left
            const bool right_assoc = n.op == Op::pow_;
            print_child(*n.lhs, p, right_assoc, var, out);
            out += sym;
            print_child(*n.rhs, p, !right_assoc, var, out);
            return;
        }
        case ExprNode::Kind::call:
            out += fn_name(n.fn);
            out += '(';
            print(*n.lhs, var, out);
            if (n.rhs) {
                out += ',';
                print(*n.rhs, var, out);
            }
            out += ')';
            return;
    }
}

class Parser {
public:
    Parser(std::string_view text, std::string_view var) : s_(text), var_(var) {}

    std::shared_ptr<const ExprNode> run() {
        auto e = expression();
        skip_ws();
        if (pos_ != s_.size()) fail("unexpected trailing input");
        return e;
    }

private:
    std::string_view s_;
    std::string_view var_;
    std::size_t pos_ = 0;

    [[noreturn]] void fail(const std::string& msg) const { throw ExprError(msg, pos_); }

    void skip_ws() {
        while (pos_ < s_.size() && std::isspace(static_cast<unsigned char>(s_[pos_]))) ++pos_;
    }
    char peek() {
        skip_ws();
        return pos_ < s_.size() ? s_[pos_] : '\0';
    }
    bool consume(char c) {
        if (peek() == c) {
            ++pos_;
            return true;
        }
        return false;
    }

    std::shared_ptr<const ExprNode> expression() {
        auto lhs = term();
        for (;;) {
            if (consume('+'))
                lhs = ExprNode::bin(Op::add, lhs, term());
            else if (consume('-'))
                lhs = ExprNode::bin(Op::sub, lhs, term());
            else
                return lhs;
        }
    }

    std::shared_ptr<const ExprNode> term() {
        auto lhs = unary();
        for (;;) {
            if (consume('*'))
                lhs = ExprNode::bin(Op::mul, lhs, unary());
            else if (consume('/'))
                lhs = ExprNode::bin(Op::div, lhs, unary());
            else
                return lhs;
        }
    }

    std::shared_ptr<const ExprNode> unary() {
        if (consume('-')) return ExprNode::neg(unary());
        if (consume('+')) return unary();
        return power();
    }

    std::shared_ptr<const ExprNode> power() {
        auto base = primary();
        if (consume('^')) return ExprNode::bin(Op::pow_, base, unary());  // right assoc
        return base;
    }

    std::shared_ptr<const ExprNode> primary() {
        const char c = peek();
        if (c == '(') {
            ++pos_;
            auto e = expression();
            if (!consume(')')) fail("expected ')'");
            return e;
        }
        if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') return number();
        if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') return identifier();
        if (c == '\0') fail("unexpected end of input");
        fail(std::string("unexpected character '") + c + "'");
    }

    std::shared_ptr<const ExprNode> number() {
        skip_ws();
        const char* begin = s_.data() + pos_;
        char* end = nullptr;
        const double v = std::strtod(begin, &end);
        if (end == begin) fail("malformed number");
        if (!std::isfinite(v)) fail("numeric literal out of range");
        pos_ += static_cast<std::size_t>(end - begin);
        return ExprNode::num(v);
    }

    std::shared_ptr<const ExprNode> identifier() {
        skip_ws();
        const std::size_t start = pos_;
        while (pos_ < s_.size() &&
               (std::isalnum(static_cast<unsigned char>(s_[pos_])) || s_[pos_] == '_'))
            ++pos_;
        const std::string_view name = s_.substr(start, pos_ - start);
        if (name == var_) return ExprNode::var();

        struct FnEntry {
            std::string_view name;
            Fn fn;
            int arity;
        };
        static constexpr FnEntry fns[] = {
            {"exp", Fn::exp_, 1}, {"log", Fn::log_, 1},   {"sqrt", Fn::sqrt_, 1},
            {"abs", Fn::abs_, 1}, {"pow", Fn::pow_, 2},   {"min", Fn::min_, 2},
            {"max", Fn::max_, 2}, {"gamma", Fn::gamma_, 1}};
        for (const auto& e : fns) {
            if (name == e.name) {
                const std::size_t at = start;
                if (!consume('(')) throw ExprError("expected '(' after function name", pos_);
                auto a = expression();
                std::shared_ptr<const ExprNode> b;
                if (consume(',')) {
                    b = expression();
                    if (e.arity != 2)
                        throw ExprError(std::string(name) + " takes 1 argument", at);
                } else if (e.arity == 2) {
                    throw ExprError(std::string(name) + " takes 2 arguments", at);
                }
                if (!consume(')')) fail("expected ')'");
                return ExprNode::call(e.fn, a, b);
            }
        }
        throw ExprError("unknown identifier '" + std::string(name) + "' (free variable is '" +
                            std::string(var_) + "')",
                        start);
    }
};

} // namespace
} // namespace detail

double RateFunction::operator()(double arg) const {
    if (!root_) throw std::logic_error("RateFunction: evaluating an empty expression");
    return detail::eval(*root_, arg);
}

std::string RateFunction::unparse() const {
    if (!root_) return {};
    std::string out;
    detail::print(*root_, var_, out);
    return out;
}

RateFunction parse_rate_expr(std::string_view text, std::string_view var) {
    detail::Parser p(text, var);
    RateFunction rf;
    rf.root_ = p.run();
    rf.text_ = std::string(text);
    rf.var_ = std::string(var);
    return rf;
}

} // namespace ergo
