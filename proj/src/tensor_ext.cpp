#include "mattrace/tensor_ext.hpp"

#include <cmath>

namespace mattrace {

namespace {

// n^m with overflow saturation for cap checks
long long power_dim(int n, int m) {
    long long p = 1;
    for (int i = 0; i < m; ++i) {
        if (p > (1LL << 40) / n) return 1LL << 40;
        p *= n;
    }
    return p;
}

void check_arity(const ScalarFunction& f, const MatrixTuple& T, const char* op) {
    if (f.arity() != T.arity())
        fail(ErrorCode::invalid_argument,
             std::string(op) + ": function arity " + std::to_string(f.arity()) +
                 " does not match tuple arity " + std::to_string(T.arity()));
}

void check_spectrum_in_domain(const ScalarFunction& f, int k, const Eigen::VectorXd& lambda) {
    const Interval& iv = f.domain(k);
    for (Eigen::Index j = 0; j < lambda.size(); ++j)
        if (!iv.contains(lambda(j)))
            fail(ErrorCode::domain, "eigenvalue " + std::to_string(lambda(j)) + " of argument " +
                                        std::to_string(k) + " outside domain " + iv.to_string());
}

// Walks the multi-index grid (j_1..j_m), j_1 slowest, invoking fn with the
// current eigenvalue point and index vector.
template <typename Fn>
void for_each_multi_index(const std::vector<Eigen::VectorXd>& lambdas, Fn&& fn) {
    const int m = static_cast<int>(lambdas.size());
    const int n = static_cast<int>(lambdas.front().size());
    std::vector<int> idx(static_cast<std::size_t>(m), 0);
    std::vector<double> point(static_cast<std::size_t>(m));
    for (int l = 0; l < m; ++l) point[static_cast<std::size_t>(l)] = lambdas[static_cast<std::size_t>(l)](0);
    for (;;) {
        fn(point, idx);
        int l = m - 1;
        for (; l >= 0; --l) {
            if (++idx[static_cast<std::size_t>(l)] < n) {
                point[static_cast<std::size_t>(l)] =
                    lambdas[static_cast<std::size_t>(l)](idx[static_cast<std::size_t>(l)]);
                break;
            }
            idx[static_cast<std::size_t>(l)] = 0;
            point[static_cast<std::size_t>(l)] = lambdas[static_cast<std::size_t>(l)](0);
        }
        if (l < 0) return;
    }
}

} // namespace

MatrixTuple::MatrixTuple(std::vector<SymMatrix> mats) : mats_(std::move(mats)) {
    if (mats_.empty()) fail(ErrorCode::invalid_argument, "matrix tuple must have arity >= 1");
    const int n = mats_.front().dim();
    for (const SymMatrix& m : mats_)
        if (m.dim() != n)
            fail(ErrorCode::dimension, "matrix tuple entries must share one dimension");
}

DerivativeInput::DerivativeInput(MatrixTuple t, std::vector<SymMatrix> r)
    : tuple(std::move(t)), rates(std::move(r)) {
    if (rates.size() != static_cast<std::size_t>(tuple.arity()))
        fail(ErrorCode::dimension, "need one rate matrix per tuple entry");
    for (const SymMatrix& m : rates)
        if (m.dim() != tuple.dim())
            fail(ErrorCode::dimension, "rate matrix dimension does not match tuple");
}

Eigen::MatrixXd matfun_multi_dense(const ScalarFunction& f, const MatrixTuple& T,
                                   long long dense_cap) {
    check_arity(f, T, "matfun_multi_dense");
    const int m = T.arity();
    const int n = T.dim();
    const long long N = power_dim(n, m);
    if (N > dense_cap)
        fail(ErrorCode::cap_exceeded, "dense construction size " + std::to_string(n) + "^" +
                                          std::to_string(m) + " exceeds cap " +
                                          std::to_string(dense_cap));

    std::vector<Eigen::VectorXd> lambdas;
    Eigen::MatrixXd P = Eigen::MatrixXd::Identity(1, 1);
    for (int l = 0; l < m; ++l) {
        const Spectrum s = eig_sym(T.at(l));
        check_spectrum_in_domain(f, l + 1, s.eigenvalues);
        lambdas.push_back(s.eigenvalues);
        P = kron(P, s.vectors, N);
    }

    Eigen::VectorXd diag(N);
    long long slot = 0;
    for_each_multi_index(lambdas, [&](const std::vector<double>& point, const std::vector<int>&) {
        diag(slot++) = f.eval(point);
    });
    return P * diag.asDiagonal() * P.transpose();
}

double trace_matfun_multi(const ScalarFunction& f, const MatrixTuple& T) {
    check_arity(f, T, "trace_matfun_multi");
    std::vector<Eigen::VectorXd> lambdas;
    for (int l = 0; l < T.arity(); ++l) {
        const Spectrum s = eig_sym(T.at(l));
        check_spectrum_in_domain(f, l + 1, s.eigenvalues);
        lambdas.push_back(s.eigenvalues);
    }
    double sum = 0.0;
    for_each_multi_index(lambdas, [&](const std::vector<double>& point, const std::vector<int>&) {
        sum += f.eval(point);
    });
    return sum;
}

double trace_matfun_diag(const ScalarFunction& f, const SymMatrix& L) {
    const Spectrum s = eig_sym(L);
    for (int k = 1; k <= f.arity(); ++k) check_spectrum_in_domain(f, k, s.eigenvalues);
    std::vector<Eigen::VectorXd> lambdas(static_cast<std::size_t>(f.arity()), s.eigenvalues);
    double sum = 0.0;
    for_each_multi_index(lambdas, [&](const std::vector<double>& point, const std::vector<int>&) {
        sum += f.eval(point);
    });
    return sum;
}

double trace_matfun_derivative(const ScalarFunction& f, const DerivativeInput& D) {
    check_arity(f, D.tuple, "trace_matfun_derivative");
    const int m = D.tuple.arity();

    std::vector<Eigen::VectorXd> lambdas;
    std::vector<Eigen::VectorXd> rate_diag; // [V_k^T R_k V_k]_{jj}
    for (int l = 0; l < m; ++l) {
        const Spectrum s = eig_sym(D.tuple.at(l));
        check_spectrum_in_domain(f, l + 1, s.eigenvalues);
        lambdas.push_back(s.eigenvalues);
        const Eigen::MatrixXd conj =
            s.vectors.transpose() * D.rates[static_cast<std::size_t>(l)].mat() * s.vectors;
        rate_diag.push_back(conj.diagonal());
    }

    double sum = 0.0;
    for (int k = 0; k < m; ++k) {
        const ScalarFunction df = f.partial(k + 1);
        for_each_multi_index(lambdas,
                             [&](const std::vector<double>& point, const std::vector<int>& idx) {
                                 sum += df.eval(point) *
                                        rate_diag[static_cast<std::size_t>(k)](
                                            idx[static_cast<std::size_t>(k)]);
                             });
    }
    return sum;
}

} // namespace mattrace
