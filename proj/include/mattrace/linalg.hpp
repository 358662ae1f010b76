#ifndef MATTRACE_LINALG_HPP
#define MATTRACE_LINALG_HPP

#include <Eigen/Dense>
#include <iosfwd>
#include <string>

#include "mattrace/scalar_fn.hpp"

namespace mattrace {

// Dense real symmetric matrix. Entries are symmetrized exactly on
// construction ((A + A^T)/2) and checked finite.
class SymMatrix {
public:
    explicit SymMatrix(Eigen::MatrixXd m);

    static SymMatrix zero(int n);
    static SymMatrix identity(int n);

    int dim() const { return static_cast<int>(m_.rows()); }
    double operator()(int i, int j) const { return m_(i, j); }
    const Eigen::MatrixXd& mat() const { return m_; }

    // ‖·‖_max, the largest absolute entry
    double max_abs() const;

private:
    Eigen::MatrixXd m_;
};

// Eigendecomposition of a SymMatrix: ascending eigenvalues, orthogonal
// eigenvector matrix, column j paired with eigenvalue j. Deterministic for a
// fixed input; each column is normalized so its first nonzero component is
// positive.
struct Spectrum {
    Eigen::VectorXd eigenvalues;
    Eigen::MatrixXd vectors;
};

Spectrum eig_sym(const SymMatrix& M);

inline constexpr long long kKronCap = 4096;

// Kronecker product with a product-dimension guard (ErrorCode::cap_exceeded).
Eigen::MatrixXd kron(const Eigen::MatrixXd& A, const Eigen::MatrixXd& B,
                     long long cap = kKronCap);

// Loewner comparison outcome of (A, B).
enum class Ordering { succeeds, precedes, equal, incomparable };

double default_psd_tol(const SymMatrix& A, const SymMatrix& B);

// succeeds iff lambda_min(A-B) >= -tol, precedes iff lambda_min(B-A) >= -tol,
// equal when both hold.
Ordering psd_order(const SymMatrix& A, const SymMatrix& B, double tol);
Ordering psd_order(const SymMatrix& A, const SymMatrix& B);

const char* ordering_name(Ordering o);

// Single-variable matrix function V diag(f(lambda_j)) V^T. Errors name the
// offending eigenvalue when one falls outside f's domain.
SymMatrix matfun_single(const ScalarFunction& f, const SymMatrix& M);

// Text format: first line "n", then n rows of n whitespace-separated decimals.
SymMatrix read_matrix(std::istream& in, const std::string& source_name);
SymMatrix read_matrix_file(const std::string& path);
void write_matrix(std::ostream& out, const SymMatrix& M);

} // namespace mattrace

#endif
