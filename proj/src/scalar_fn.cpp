#include "mattrace/scalar_fn.hpp"

#include <cctype>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <limits>
#include <sstream>

namespace mattrace {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

std::string format_double(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    // trim to the shortest representation that round-trips
    for (int prec = 1; prec < 17; ++prec) {
        char shorter[32];
        std::snprintf(shorter, sizeof(shorter), "%.*g", prec, v);
        if (std::strtod(shorter, nullptr) == v) return shorter;
    }
    return buf;
}

} // namespace

Interval Interval::all() { return Interval{-kInf, kInf, false, false}; }
Interval Interval::positive() { return Interval{0.0, kInf, false, false}; }
Interval Interval::nonnegative() { return Interval{0.0, kInf, true, false}; }

Interval Interval::make(double lo, double hi, bool lo_closed, bool hi_closed) {
    if (std::isnan(lo) || std::isnan(hi) || lo > hi)
        fail(ErrorCode::invalid_argument, "interval endpoints must satisfy lo <= hi");
    if ((lo_closed && !std::isfinite(lo)) || (hi_closed && !std::isfinite(hi)))
        fail(ErrorCode::invalid_argument, "closed interval endpoints must be finite");
    return Interval{lo, hi, lo_closed, hi_closed};
}

bool Interval::contains(double x) const {
    if (x < lo || (x == lo && !lo_closed)) return false;
    if (x > hi || (x == hi && !hi_closed)) return false;
    return true;
}

std::string Interval::to_string() const {
    std::ostringstream os;
    os << (lo_closed ? '[' : '(') << format_double(lo) << ", " << format_double(hi)
       << (hi_closed ? ']' : ')');
    return os.str();
}

Interval parse_interval(std::string_view text) {
    auto trim = [](std::string_view s) {
        while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
        while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
        return s;
    };
    text = trim(text);
    if (text == "pos") return Interval::positive();
    if (text == "nonneg") return Interval::nonnegative();
    if (text == "real" || text == "all") return Interval::all();
    if (text.size() < 3 || (text.front() != '(' && text.front() != '[') ||
        (text.back() != ')' && text.back() != ']'))
        fail(ErrorCode::parse, "bad interval '" + std::string(text) +
                                   "': expected pos, nonneg, real or (a,b) syntax");
    const bool lo_closed = text.front() == '[';
    const bool hi_closed = text.back() == ']';
    std::string_view body = text.substr(1, text.size() - 2);
    const auto comma = body.find(',');
    if (comma == std::string_view::npos)
        fail(ErrorCode::parse, "bad interval '" + std::string(text) + "': missing comma");
    auto endpoint = [&](std::string_view s) -> double {
        s = trim(s);
        if (s == "inf" || s == "+inf" || s == "oo") return kInf;
        if (s == "-inf" || s == "-oo") return -kInf;
        char* end = nullptr;
        std::string copy(s);
        const double v = std::strtod(copy.c_str(), &end);
        if (end != copy.c_str() + copy.size() || copy.empty())
            fail(ErrorCode::parse, "bad interval endpoint '" + copy + "'");
        return v;
    };
    return Interval::make(endpoint(body.substr(0, comma)), endpoint(body.substr(comma + 1)),
                          lo_closed, hi_closed);
}

namespace detail {
namespace {

double ipow(double base, long long e) {
    if (e < 0) {
        if (base == 0.0) fail(ErrorCode::domain, "0 raised to a negative power");
        return 1.0 / ipow(base, -e);
    }
    double result = 1.0;
    double acc = base;
    while (e > 0) {
        if (e & 1) result *= acc;
        acc *= acc;
        e >>= 1;
    }
    return result;
}

double eval_node(const Expr& e, std::span<const double> point) {
    switch (e.kind) {
        case NodeKind::constant: return e.value;
        case NodeKind::variable: return point[static_cast<std::size_t>(e.var - 1)];
        case NodeKind::add: return eval_node(*e.a, point) + eval_node(*e.b, point);
        case NodeKind::sub: return eval_node(*e.a, point) - eval_node(*e.b, point);
        case NodeKind::mul: return eval_node(*e.a, point) * eval_node(*e.b, point);
        case NodeKind::div: {
            const double num = eval_node(*e.a, point);
            const double den = eval_node(*e.b, point);
            if (den == 0.0) fail(ErrorCode::domain, "division by zero");
            return num / den;
        }
        case NodeKind::int_pow: return ipow(eval_node(*e.a, point), e.exponent);
        case NodeKind::real_pow: {
            const double base = eval_node(*e.a, point);
            if (base < 0.0)
                fail(ErrorCode::domain, "negative base of non-integer power");
            if (base == 0.0 && e.value <= 0.0)
                fail(ErrorCode::domain, "0 raised to a non-positive real power");
            return std::pow(base, e.value);
        }
        case NodeKind::exp: return std::exp(eval_node(*e.a, point));
        case NodeKind::log: {
            const double arg = eval_node(*e.a, point);
            if (arg <= 0.0) fail(ErrorCode::domain, "log of a non-positive value");
            return std::log(arg);
        }
    }
    fail(ErrorCode::numeric, "unreachable expression node");
}

ExprPtr node(Expr e) { return std::make_shared<const Expr>(std::move(e)); }

ExprPtr constant(double v) {
    Expr e{};
    e.kind = NodeKind::constant;
    e.value = v;
    return node(std::move(e));
}

ExprPtr variable(int index) {
    Expr e{};
    e.kind = NodeKind::variable;
    e.var = index;
    return node(std::move(e));
}

bool is_const(const ExprPtr& e) { return e->kind == NodeKind::constant; }

// Folds operations whose operands are all constants, provided evaluation
// succeeds and stays finite; anything else is kept verbatim so that domain
// errors surface at eval time rather than silently disappearing.
ExprPtr fold(Expr e) {
    const bool foldable =
        (!e.a || is_const(e.a)) && (!e.b || is_const(e.b)) && e.kind != NodeKind::constant &&
        e.kind != NodeKind::variable;
    if (foldable) {
        try {
            const double v = eval_node(e, {});
            if (std::isfinite(v)) return constant(v);
        } catch (const Error&) {
            // keep the node; evaluation will report the domain problem
        }
    }
    return node(std::move(e));
}

ExprPtr binary(NodeKind kind, ExprPtr a, ExprPtr b) {
    Expr e{};
    e.kind = kind;
    e.a = std::move(a);
    e.b = std::move(b);
    return fold(std::move(e));
}

ExprPtr add(ExprPtr a, ExprPtr b) { return binary(NodeKind::add, std::move(a), std::move(b)); }
ExprPtr sub(ExprPtr a, ExprPtr b) { return binary(NodeKind::sub, std::move(a), std::move(b)); }
ExprPtr mul(ExprPtr a, ExprPtr b) { return binary(NodeKind::mul, std::move(a), std::move(b)); }
ExprPtr quotient(ExprPtr a, ExprPtr b) { return binary(NodeKind::div, std::move(a), std::move(b)); }

ExprPtr int_power(ExprPtr base, long long k) {
    Expr e{};
    e.kind = NodeKind::int_pow;
    e.exponent = k;
    e.a = std::move(base);
    return fold(std::move(e));
}

ExprPtr real_power(ExprPtr base, double a) {
    Expr e{};
    e.kind = NodeKind::real_pow;
    e.value = a;
    e.a = std::move(base);
    return fold(std::move(e));
}

ExprPtr exp_of(ExprPtr a) {
    Expr e{};
    e.kind = NodeKind::exp;
    e.a = std::move(a);
    return fold(std::move(e));
}

ExprPtr log_of(ExprPtr a) {
    Expr e{};
    e.kind = NodeKind::log;
    e.a = std::move(a);
    return fold(std::move(e));
}

ExprPtr differentiate(const ExprPtr& e, int k) {
    switch (e->kind) {
        case NodeKind::constant: return constant(0.0);
        case NodeKind::variable: return constant(e->var == k ? 1.0 : 0.0);
        case NodeKind::add: return add(differentiate(e->a, k), differentiate(e->b, k));
        case NodeKind::sub: return sub(differentiate(e->a, k), differentiate(e->b, k));
        case NodeKind::mul:
            return add(mul(differentiate(e->a, k), e->b), mul(e->a, differentiate(e->b, k)));
        case NodeKind::div:
            // (u'v - uv') / v^2
            return quotient(sub(mul(differentiate(e->a, k), e->b),
                                mul(e->a, differentiate(e->b, k))),
                            int_power(e->b, 2));
        case NodeKind::int_pow:
            if (e->exponent == 0) return constant(0.0);
            return mul(mul(constant(static_cast<double>(e->exponent)),
                           int_power(e->a, e->exponent - 1)),
                       differentiate(e->a, k));
        case NodeKind::real_pow:
            if (e->value == 0.0) return constant(0.0);
            return mul(mul(constant(e->value), real_power(e->a, e->value - 1.0)),
                       differentiate(e->a, k));
        case NodeKind::exp: return mul(exp_of(e->a), differentiate(e->a, k));
        case NodeKind::log: return quotient(differentiate(e->a, k), e->a);
    }
    fail(ErrorCode::numeric, "unreachable expression node");
}

// precedence levels for printing: additive 1, multiplicative 2, power 3, atom 4
int precedence(const Expr& e) {
    switch (e.kind) {
        case NodeKind::add:
        case NodeKind::sub: return 1;
        case NodeKind::mul:
        case NodeKind::div: return 2;
        case NodeKind::int_pow:
        case NodeKind::real_pow: return 3;
        default: return 4;
    }
}

void print(const Expr& e, std::ostream& os, int parent_prec) {
    const int prec = precedence(e);
    const bool parens = prec < parent_prec;
    if (parens) os << '(';
    switch (e.kind) {
        case NodeKind::constant: os << format_double(e.value); break;
        case NodeKind::variable: os << 'x' << e.var; break;
        case NodeKind::add:
            print(*e.a, os, 1);
            os << " + ";
            print(*e.b, os, 2);
            break;
        case NodeKind::sub:
            print(*e.a, os, 1);
            os << " - ";
            print(*e.b, os, 2);
            break;
        case NodeKind::mul:
            print(*e.a, os, 2);
            os << " * ";
            print(*e.b, os, 3);
            break;
        case NodeKind::div:
            print(*e.a, os, 2);
            os << " / ";
            print(*e.b, os, 3);
            break;
        case NodeKind::int_pow:
            print(*e.a, os, 4);
            os << '^' << e.exponent;
            break;
        case NodeKind::real_pow: {
            print(*e.a, os, 4);
            os << '^';
            const std::string s = format_double(e.value);
            if (s.find_first_of("+-eE.") != std::string::npos)
                os << '(' << s << ')';
            else
                os << s;
            break;
        }
        case NodeKind::exp:
            os << "exp(";
            print(*e.a, os, 1);
            os << ')';
            break;
        case NodeKind::log:
            os << "log(";
            print(*e.a, os, 1);
            os << ')';
            break;
    }
    if (parens) os << ')';
}

void collect_vars(const Expr& e, int& max_var) {
    if (e.kind == NodeKind::variable && e.var > max_var) max_var = e.var;
    if (e.a) collect_vars(*e.a, max_var);
    if (e.b) collect_vars(*e.b, max_var);
}

// --- parser -----------------------------------------------------------------

struct Parser {
    std::string_view text;
    std::size_t pos = 0;
    int arity;

    [[noreturn]] void error(std::size_t at, const std::string& msg) const {
        fail(ErrorCode::parse, "parse error at position " + std::to_string(at) + ": " + msg);
    }

    void skip_ws() {
        while (pos < text.size() && std::isspace(static_cast<unsigned char>(text[pos]))) ++pos;
    }

    bool eat(char c) {
        skip_ws();
        if (pos < text.size() && text[pos] == c) {
            ++pos;
            return true;
        }
        return false;
    }

    char peek() {
        skip_ws();
        return pos < text.size() ? text[pos] : '\0';
    }

    ExprPtr parse_expression() {
        ExprPtr lhs = parse_term();
        for (;;) {
            if (eat('+'))
                lhs = add(std::move(lhs), parse_term());
            else if (eat('-'))
                lhs = sub(std::move(lhs), parse_term());
            else
                return lhs;
        }
    }

    ExprPtr parse_term() {
        ExprPtr lhs = parse_unary();
        for (;;) {
            if (eat('*'))
                lhs = mul(std::move(lhs), parse_unary());
            else if (eat('/'))
                lhs = quotient(std::move(lhs), parse_unary());
            else
                return lhs;
        }
    }

    ExprPtr parse_unary() {
        if (eat('-')) return sub(constant(0.0), parse_unary());
        if (eat('+')) return parse_unary();
        return parse_power();
    }

    ExprPtr parse_power() {
        ExprPtr base = parse_atom();
        skip_ws();
        if (!eat('^')) return base;
        const std::size_t at = pos;
        ExprPtr exponent = parse_unary(); // right-associative, unary binds to the exponent
        if (exponent->kind != NodeKind::constant)
            error(at, "exponent must be a constant");
        const double v = exponent->value;
        if (std::floor(v) == v && std::abs(v) <= 1e9)
            return int_power(std::move(base), static_cast<long long>(v));
        return real_power(std::move(base), v);
    }

    ExprPtr parse_atom() {
        skip_ws();
        if (pos >= text.size()) error(pos, "unexpected end of input");
        const char c = text[pos];
        if (c == '(') {
            ++pos;
            ExprPtr inner = parse_expression();
            if (!eat(')')) error(pos, "expected ')'");
            return inner;
        }
        if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') return parse_number();
        if (std::isalpha(static_cast<unsigned char>(c))) return parse_identifier();
        error(pos, std::string("unexpected character '") + c + "'");
    }

    ExprPtr parse_number() {
        const std::string tail(text.substr(pos));
        char* end = nullptr;
        const double v = std::strtod(tail.c_str(), &end);
        if (end == tail.c_str()) error(pos, "malformed number");
        pos += static_cast<std::size_t>(end - tail.c_str());
        return constant(v);
    }

    ExprPtr parse_identifier() {
        const std::size_t start = pos;
        while (pos < text.size() && std::isalnum(static_cast<unsigned char>(text[pos]))) ++pos;
        const std::string_view name = text.substr(start, pos - start);
        if (name == "exp" || name == "log") {
            if (!eat('(')) error(pos, "expected '(' after " + std::string(name));
            ExprPtr arg = parse_expression();
            if (!eat(')')) error(pos, "expected ')'");
            return name == "exp" ? exp_of(std::move(arg)) : log_of(std::move(arg));
        }
        if (name.size() >= 2 && name[0] == 'x') {
            int index = 0;
            for (std::size_t i = 1; i < name.size(); ++i) {
                if (!std::isdigit(static_cast<unsigned char>(name[i])))
                    error(start, "unknown identifier '" + std::string(name) + "'");
                index = index * 10 + (name[i] - '0');
                if (index > 1000) error(start, "variable index too large");
            }
            if (index < 1) error(start, "variable indices start at x1");
            if (index > arity)
                error(start, "variable x" + std::to_string(index) + " exceeds arity " +
                                 std::to_string(arity));
            return variable(index);
        }
        error(start, "unknown identifier '" + std::string(name) + "'");
    }
};

} // namespace
} // namespace detail

ScalarFunction::ScalarFunction(int arity, detail::ExprPtr root, std::vector<Interval> domain)
    : arity_(arity), root_(std::move(root)), domain_(std::move(domain)) {
    if (arity_ < 1) fail(ErrorCode::invalid_argument, "arity must be at least 1");
    if (!root_) fail(ErrorCode::invalid_argument, "null expression");
    if (domain_.size() != static_cast<std::size_t>(arity_))
        fail(ErrorCode::invalid_argument, "domain must have exactly one interval per variable");
    int max_var = 0;
    detail::collect_vars(*root_, max_var);
    if (max_var > arity_)
        fail(ErrorCode::invalid_argument, "expression references variables beyond arity");
}

const Interval& ScalarFunction::domain(int k) const {
    if (k < 1 || k > arity_) fail(ErrorCode::invalid_argument, "domain index out of range");
    return domain_[static_cast<std::size_t>(k - 1)];
}

ScalarFunction ScalarFunction::with_domain(int k, Interval iv) const {
    if (k < 1 || k > arity_) fail(ErrorCode::invalid_argument, "domain index out of range");
    std::vector<Interval> d = domain_;
    d[static_cast<std::size_t>(k - 1)] = iv;
    return ScalarFunction(arity_, root_, std::move(d));
}

ScalarFunction ScalarFunction::with_domain(std::vector<Interval> domain) const {
    return ScalarFunction(arity_, root_, std::move(domain));
}

double ScalarFunction::eval(std::span<const double> point) const {
    if (point.size() != static_cast<std::size_t>(arity_))
        fail(ErrorCode::dimension, "point has " + std::to_string(point.size()) +
                                       " coordinates, function arity is " + std::to_string(arity_));
    for (int k = 0; k < arity_; ++k) {
        const double x = point[static_cast<std::size_t>(k)];
        if (!domain_[static_cast<std::size_t>(k)].contains(x))
            fail(ErrorCode::domain, "x" + std::to_string(k + 1) + " = " + std::to_string(x) +
                                        " outside domain " +
                                        domain_[static_cast<std::size_t>(k)].to_string());
    }
    const double v = detail::eval_node(*root_, point);
    if (!std::isfinite(v)) fail(ErrorCode::numeric, "expression evaluated to a non-finite value");
    return v;
}

ScalarFunction ScalarFunction::partial(int k) const {
    if (k < 1 || k > arity_) fail(ErrorCode::invalid_argument, "partial index out of range");
    return ScalarFunction(arity_, detail::differentiate(root_, k), domain_);
}

std::string ScalarFunction::to_string() const {
    std::ostringstream os;
    detail::print(*root_, os, 0);
    return os.str();
}

ScalarFunction parse_function(std::string_view text, int arity) {
    if (arity < 1) fail(ErrorCode::invalid_argument, "arity must be at least 1");
    detail::Parser parser{text, 0, arity};
    detail::ExprPtr root = parser.parse_expression();
    parser.skip_ws();
    if (parser.pos != text.size())
        parser.error(parser.pos, "trailing input");
    return ScalarFunction(arity, std::move(root),
                          std::vector<Interval>(static_cast<std::size_t>(arity), Interval::all()));
}

} // namespace mattrace
