#ifndef MATTRACE_TENSOR_EXT_HPP
#define MATTRACE_TENSOR_EXT_HPP

#include <vector>

#include "mattrace/linalg.hpp"

namespace mattrace {

inline constexpr long long kDenseCap = 512;

// Ordered argument (M_1, ..., M_m), all real symmetric of one dimension.
class MatrixTuple {
public:
    explicit MatrixTuple(std::vector<SymMatrix> mats);

    int arity() const { return static_cast<int>(mats_.size()); }
    int dim() const { return mats_.front().dim(); }
    const SymMatrix& at(int l) const { return mats_[static_cast<std::size_t>(l)]; } // 0-based
    const std::vector<SymMatrix>& mats() const { return mats_; }

private:
    std::vector<SymMatrix> mats_;
};

// Tuple values M_l(t) at a point together with the rates dM_l/dt there.
struct DerivativeInput {
    MatrixTuple tuple;
    std::vector<SymMatrix> rates;

    DerivativeInput(MatrixTuple t, std::vector<SymMatrix> r);
};

// Dense n^m x n^m evaluation of f at the tuple: (kron of V_l) * diag of
// f over the eigenvalue grid * (kron of V_l)^T. The diagonal is ordered
// lexicographically with the first index slowest. Test oracle; guarded by
// dense_cap on n^m.
Eigen::MatrixXd matfun_multi_dense(const ScalarFunction& f, const MatrixTuple& T,
                                   long long dense_cap = kDenseCap);

// tr f(M_1,...,M_m) as the m-fold eigenvalue sum; O(n^m) scalar evaluations
// plus m eigendecompositions, summed in the same fixed lexicographic order.
double trace_matfun_multi(const ScalarFunction& f, const MatrixTuple& T);

// Specialization M_1 = ... = M_m = L with a single eigendecomposition.
double trace_matfun_diag(const ScalarFunction& f, const SymMatrix& L);

// d/dt tr f((M_l(t))) evaluated through the eigenbasis reduction
//   sum_k sum_{j_1..j_m} (partial_k f)(lambda grid) * [V_k^T dM_k/dt V_k]_{j_k j_k}.
double trace_matfun_derivative(const ScalarFunction& f, const DerivativeInput& D);

} // namespace mattrace

#endif
