#include "expression.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <numbers>

namespace mcre::cli {

struct Expression::Node {
    enum class Kind { kNumber, kX, kY, kNegate, kBinary, kCall };
    Kind kind = Kind::kNumber;
    double value = 0.0;
    std::size_t index = 0;
    std::string op;  // binary operator or function name
    std::vector<std::shared_ptr<const Node>> args;
};

namespace {

using NodePtr = std::shared_ptr<const Expression::Node>;
using Kind = Expression::Node::Kind;

class Parser {
public:
    explicit Parser(const std::string& s) : s_(s) {}

    NodePtr parse() {
        NodePtr n = comparison();
        skip();
        if (pos_ != s_.size()) fail("unexpected '" + std::string(1, s_[pos_]) + "'");
        return n;
    }

    std::size_t x_arity = 0;
    std::size_t y_arity = 0;

private:
    [[noreturn]] void fail(const std::string& what) const {
        throw ExpressionError(what + " at position " + std::to_string(pos_ + 1) + " in \"" + s_ + "\"", pos_);
    }

    void skip() {
        while (pos_ < s_.size() && std::isspace(static_cast<unsigned char>(s_[pos_]))) ++pos_;
    }

    bool accept(const char* tok) {
        skip();
        const std::string t(tok);
        if (s_.compare(pos_, t.size(), t) == 0) {
            pos_ += t.size();
            return true;
        }
        return false;
    }

    static NodePtr binary(std::string op, NodePtr a, NodePtr b) {
        auto n = std::make_shared<Expression::Node>();
        n->kind = Kind::kBinary;
        n->op = std::move(op);
        n->args = {std::move(a), std::move(b)};
        return n;
    }

    NodePtr comparison() {
        NodePtr left = additive();
        for (;;) {
            std::string op;
            if (accept("<=")) op = "<=";
            else if (accept(">=")) op = ">=";
            else if (accept("==")) op = "==";
            else if (accept("!=")) op = "!=";
            else if (accept("<")) op = "<";
            else if (accept(">")) op = ">";
            else return left;
            left = binary(op, left, additive());
        }
    }

    NodePtr additive() {
        NodePtr left = term();
        for (;;) {
            if (accept("+")) left = binary("+", left, term());
            else if (accept("-")) left = binary("-", left, term());
            else return left;
        }
    }

    NodePtr term() {
        NodePtr left = unary();
        for (;;) {
            if (accept("*")) left = binary("*", left, unary());
            else if (accept("/")) left = binary("/", left, unary());
            else return left;
        }
    }

    NodePtr unary() {
        if (accept("-")) {
            auto n = std::make_shared<Expression::Node>();
            n->kind = Kind::kNegate;
            n->args = {unary()};
            return n;
        }
        if (accept("+")) return unary();
        return power();
    }

    // Right associative; binds tighter than unary minus on its left: -x^2 == -(x^2).
    NodePtr power() {
        NodePtr base = primary();
        if (accept("^")) return binary("^", base, unary());
        return base;
    }

    NodePtr primary() {
        skip();
        if (pos_ >= s_.size()) fail("unexpected end of expression");
        const char c = s_[pos_];
        if (c == '(') {
            ++pos_;
            NodePtr n = comparison();
            if (!accept(")")) fail("expected ')'");
            return n;
        }
        if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') return number();
        if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') return identifier();
        fail("unexpected '" + std::string(1, c) + "'");
    }

    NodePtr number() {
        const char* begin = s_.c_str() + pos_;
        char* end = nullptr;
        const double v = std::strtod(begin, &end);
        if (end == begin) fail("malformed number");
        pos_ += static_cast<std::size_t>(end - begin);
        auto n = std::make_shared<Expression::Node>();
        n->value = v;
        return n;
    }

    NodePtr identifier() {
        const std::size_t start = pos_;
        while (pos_ < s_.size() && (std::isalnum(static_cast<unsigned char>(s_[pos_])) || s_[pos_] == '_')) ++pos_;
        const std::string name = s_.substr(start, pos_ - start);
        auto n = std::make_shared<Expression::Node>();
        if (name == "pi" || name == "e") {
            n->value = name == "pi" ? std::numbers::pi : std::numbers::e;
            return n;
        }
        if ((name[0] == 'x' || name[0] == 'y') && variable_index(name, n->index)) {
            n->kind = name[0] == 'x' ? Kind::kX : Kind::kY;
            auto& arity = name[0] == 'x' ? x_arity : y_arity;
            arity = std::max(arity, n->index + 1);
            return n;
        }
        static const std::vector<std::pair<std::string, std::pair<std::size_t, std::size_t>>> functions{
            {"exp", {1, 1}}, {"log", {1, 1}},       {"sqrt", {1, 1}},  {"abs", {1, 1}},
            {"sin", {1, 1}}, {"cos", {1, 1}},       {"tanh", {1, 1}},  {"pow", {2, 2}},
            {"min", {1, 64}}, {"max", {1, 64}},     {"indicator", {1, 1}}, {"ind", {1, 1}}};
        auto it = std::find_if(functions.begin(), functions.end(), [&](const auto& f) { return f.first == name; });
        if (it == functions.end()) {
            pos_ = start;
            fail("unknown name '" + name + "'");
        }
        if (!accept("(")) fail("expected '(' after " + name);
        n->kind = Kind::kCall;
        n->op = name == "ind" ? "indicator" : name;
        if (!accept(")")) {
            do n->args.push_back(comparison());
            while (accept(","));
            if (!accept(")")) fail("expected ')' to close " + name);
        }
        const auto [lo, hi] = it->second;
        if (n->args.size() < lo || n->args.size() > hi) fail(name + " takes " + std::to_string(lo) + (lo == hi ? "" : " or more") + " argument(s)");
        return n;
    }

    // x, x1, x2, ... map to 0, 0, 1, ...
    static bool variable_index(const std::string& name, std::size_t& index) {
        if (name.size() == 1) {
            index = 0;
            return true;
        }
        for (std::size_t i = 1; i < name.size(); ++i)
            if (!std::isdigit(static_cast<unsigned char>(name[i]))) return false;
        const unsigned long v = std::stoul(name.substr(1));
        if (v == 0) return false;
        index = v - 1;
        return true;
    }

    const std::string& s_;
    std::size_t pos_ = 0;
};

double eval(const Expression::Node& n, std::span<const double> x, std::span<const double> y) {
    switch (n.kind) {
        case Kind::kNumber: return n.value;
        case Kind::kX:
            if (n.index >= x.size()) throw ExpressionError("x" + std::to_string(n.index + 1) + " is not available", 0);
            return x[n.index];
        case Kind::kY:
            if (n.index >= y.size()) throw ExpressionError("y" + std::to_string(n.index + 1) + " is not available", 0);
            return y[n.index];
        case Kind::kNegate: return -eval(*n.args[0], x, y);
        case Kind::kBinary: {
            const double a = eval(*n.args[0], x, y), b = eval(*n.args[1], x, y);
            switch (n.op[0]) {
                case '+': return a + b;
                case '-': return a - b;
                case '*': return a * b;
                case '/': return a / b;
                case '^': return std::pow(a, b);
                case '<': return (n.op.size() == 2 ? a <= b : a < b) ? 1.0 : 0.0;
                case '>': return (n.op.size() == 2 ? a >= b : a > b) ? 1.0 : 0.0;
                case '=': return a == b ? 1.0 : 0.0;
                case '!': return a != b ? 1.0 : 0.0;
            }
            return std::nan("");
        }
        case Kind::kCall: {
            std::vector<double> v;
            v.reserve(n.args.size());
            for (const auto& a : n.args) v.push_back(eval(*a, x, y));
            const std::string& f = n.op;
            if (f == "exp") return std::exp(v[0]);
            if (f == "log") return std::log(v[0]);
            if (f == "sqrt") return std::sqrt(v[0]);
            if (f == "abs") return std::abs(v[0]);
            if (f == "sin") return std::sin(v[0]);
            if (f == "cos") return std::cos(v[0]);
            if (f == "tanh") return std::tanh(v[0]);
            if (f == "pow") return std::pow(v[0], v[1]);
            if (f == "min") return *std::min_element(v.begin(), v.end());
            if (f == "max") return *std::max_element(v.begin(), v.end());
            if (f == "indicator") return v[0] != 0.0 ? 1.0 : 0.0;
            return std::nan("");
        }
    }
    return std::nan("");
}

}  // namespace

Expression Expression::parse(const std::string& source) {
    Parser p(source);
    Expression e;
    e.root_ = p.parse();
    e.source_ = source;
    e.x_arity_ = p.x_arity;
    e.y_arity_ = p.y_arity;
    return e;
}

double Expression::operator()(std::span<const double> x, std::span<const double> y) const {
    if (!root_) return std::nan("");
    return eval(*root_, x, y);
}

}  // namespace mcre::cli
