#ifndef MATTRACE_ERRORS_HPP
#define MATTRACE_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace mattrace {

enum class ErrorCode {
    invalid_argument = 1,
    parse,        // malformed expression / file syntax
    domain,       // point or eigenvalue outside a function's domain
    dimension,    // mismatched matrix / vector sizes
    cap_exceeded, // dense or Kronecker size guard tripped
    numeric,      // non-finite result, eigensolver non-convergence
    infeasible,   // inconsistent constraint set
    io,           // missing / unreadable file
    precondition, // documented restriction violated (e.g. gradient with truncated spectrum)
};

class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& what) : std::runtime_error(what), code_(code) {}
    ErrorCode code() const noexcept { return code_; }

private:
    ErrorCode code_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& msg) { throw Error(code, msg); }

} // namespace mattrace

#endif
