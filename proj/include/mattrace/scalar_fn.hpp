#ifndef MATTRACE_SCALAR_FN_HPP
#define MATTRACE_SCALAR_FN_HPP

#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "mattrace/errors.hpp"

namespace mattrace {

// One axis of a function domain. Endpoints may be infinite; closed endpoints
// must be finite.
struct Interval {
    double lo;
    double hi;
    bool lo_closed;
    bool hi_closed;

    static Interval all();         // (-inf, inf)
    static Interval positive();    // (0, inf)
    static Interval nonnegative(); // [0, inf)
    static Interval make(double lo, double hi, bool lo_closed, bool hi_closed);

    bool contains(double x) const;
    std::string to_string() const;
};

// "pos", "nonneg", "real" or explicit "(a,b]" syntax with inf endpoints.
Interval parse_interval(std::string_view text);

namespace detail {

struct Expr;
using ExprPtr = std::shared_ptr<const Expr>;

enum class NodeKind { constant, variable, add, sub, mul, div, int_pow, real_pow, exp, log };

struct Expr {
    NodeKind kind;
    double value = 0.0;    // constant value, or real_pow exponent
    long long exponent = 0; // int_pow exponent
    int var = 0;           // variable index, 1-based
    ExprPtr a;
    ExprPtr b;
};

} // namespace detail

// Immutable expression tree for f : R^m -> R over the closed differentiable
// grammar {constant, x1..xm, +, -, *, /, integer power, constant real power,
// exp, log}. Safe to share across threads once constructed.
class ScalarFunction {
public:
    ScalarFunction(int arity, detail::ExprPtr root, std::vector<Interval> domain);

    int arity() const { return arity_; }

    // 1-based, matching the variable naming x1..xm
    const Interval& domain(int k) const;
    ScalarFunction with_domain(int k, Interval iv) const;
    ScalarFunction with_domain(std::vector<Interval> domain) const;

    // Errors with ErrorCode::domain when the point leaves the domain box or an
    // operation is undefined there (log of a nonpositive value, division by
    // zero); ErrorCode::numeric when the result overflows to non-finite.
    double eval(std::span<const double> point) const;

    // Exact symbolic partial derivative with respect to x_k; same arity and domain.
    ScalarFunction partial(int k) const;

    std::string to_string() const;

    const detail::ExprPtr& root() const { return root_; }

private:
    int arity_;
    detail::ExprPtr root_;
    std::vector<Interval> domain_;
};

// Recursive-descent parser for the grammar documented in the README. Reports
// syntax errors, unknown identifiers and out-of-arity variables with the
// 0-based character position. Domain defaults to (-inf, inf)^arity.
ScalarFunction parse_function(std::string_view text, int arity);

} // namespace mattrace

#endif
