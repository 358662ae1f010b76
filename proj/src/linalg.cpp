#include "mattrace/linalg.hpp"

#include <cmath>
#include <fstream>
#include <iomanip>
#include <istream>
#include <ostream>
#include <sstream>

namespace mattrace {

SymMatrix::SymMatrix(Eigen::MatrixXd m) {
    if (m.rows() != m.cols())
        fail(ErrorCode::dimension, "symmetric matrix must be square, got " +
                                       std::to_string(m.rows()) + "x" + std::to_string(m.cols()));
    if (m.rows() == 0) fail(ErrorCode::invalid_argument, "matrix dimension must be positive");
    if (!m.allFinite()) fail(ErrorCode::invalid_argument, "matrix entries must be finite");
    m_ = (m + m.transpose()) / 2.0;
}

SymMatrix SymMatrix::zero(int n) { return SymMatrix(Eigen::MatrixXd::Zero(n, n)); }
SymMatrix SymMatrix::identity(int n) { return SymMatrix(Eigen::MatrixXd::Identity(n, n)); }

double SymMatrix::max_abs() const { return m_.cwiseAbs().maxCoeff(); }

Spectrum eig_sym(const SymMatrix& M) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(M.mat());
    if (solver.info() != Eigen::Success)
        fail(ErrorCode::numeric, "symmetric eigensolver did not converge for dimension " +
                                     std::to_string(M.dim()));
    Spectrum s{solver.eigenvalues(), solver.eigenvectors()};
    // sign convention: first nonzero component of each eigenvector positive
    for (int j = 0; j < s.vectors.cols(); ++j) {
        for (int i = 0; i < s.vectors.rows(); ++i) {
            const double v = s.vectors(i, j);
            if (v != 0.0) {
                if (v < 0.0) s.vectors.col(j) = -s.vectors.col(j);
                break;
            }
        }
    }
    return s;
}

Eigen::MatrixXd kron(const Eigen::MatrixXd& A, const Eigen::MatrixXd& B, long long cap) {
    const long long rows = static_cast<long long>(A.rows()) * B.rows();
    const long long cols = static_cast<long long>(A.cols()) * B.cols();
    if (rows > cap || cols > cap)
        fail(ErrorCode::cap_exceeded, "Kronecker product dimension " + std::to_string(rows) + "x" +
                                          std::to_string(cols) + " exceeds cap " +
                                          std::to_string(cap));
    Eigen::MatrixXd out(rows, cols);
    for (Eigen::Index i = 0; i < A.rows(); ++i)
        for (Eigen::Index j = 0; j < A.cols(); ++j)
            out.block(i * B.rows(), j * B.cols(), B.rows(), B.cols()) = A(i, j) * B;
    return out;
}

double default_psd_tol(const SymMatrix& A, const SymMatrix& B) {
    return 1e-9 * std::max(1.0, A.max_abs() + B.max_abs());
}

Ordering psd_order(const SymMatrix& A, const SymMatrix& B, double tol) {
    if (A.dim() != B.dim())
        fail(ErrorCode::dimension, "psd_order dimensions differ: " + std::to_string(A.dim()) +
                                       " vs " + std::to_string(B.dim()));
    const SymMatrix diff(A.mat() - B.mat());
    const Spectrum sp = eig_sym(diff);
    const double lambda_min = sp.eigenvalues(0);
    const double lambda_max = sp.eigenvalues(diff.dim() - 1);
    const bool succeeds = lambda_min >= -tol;
    const bool precedes = -lambda_max >= -tol; // lambda_min(B-A) = -lambda_max(A-B)
    if (succeeds && precedes) return Ordering::equal;
    if (succeeds) return Ordering::succeeds;
    if (precedes) return Ordering::precedes;
    return Ordering::incomparable;
}

Ordering psd_order(const SymMatrix& A, const SymMatrix& B) {
    return psd_order(A, B, default_psd_tol(A, B));
}

const char* ordering_name(Ordering o) {
    switch (o) {
        case Ordering::succeeds: return "succeeds";
        case Ordering::precedes: return "precedes";
        case Ordering::equal: return "equal";
        case Ordering::incomparable: return "incomparable";
    }
    return "?";
}

SymMatrix matfun_single(const ScalarFunction& f, const SymMatrix& M) {
    if (f.arity() != 1)
        fail(ErrorCode::invalid_argument, "matfun_single requires a function of one variable");
    const Spectrum s = eig_sym(M);
    Eigen::VectorXd fl(M.dim());
    for (int j = 0; j < M.dim(); ++j) {
        const double lambda = s.eigenvalues(j);
        if (!f.domain(1).contains(lambda))
            fail(ErrorCode::domain, "eigenvalue " + std::to_string(lambda) + " outside domain " +
                                        f.domain(1).to_string());
        const double x = lambda;
        fl(j) = f.eval({&x, 1});
    }
    return SymMatrix(s.vectors * fl.asDiagonal() * s.vectors.transpose());
}

SymMatrix read_matrix(std::istream& in, const std::string& source_name) {
    auto err = [&](int line, const std::string& msg) {
        fail(ErrorCode::parse, source_name + ":" + std::to_string(line) + ": " + msg);
    };
    std::string line;
    if (!std::getline(in, line)) err(1, "missing dimension header");
    int n = 0;
    {
        std::istringstream hs(line);
        if (!(hs >> n) || n < 1) err(1, "dimension header must be a positive integer");
        std::string extra;
        if (hs >> extra) err(1, "unexpected token '" + extra + "' after dimension");
    }
    Eigen::MatrixXd m(n, n);
    for (int i = 0; i < n; ++i) {
        if (!std::getline(in, line)) err(2 + i, "missing matrix row");
        std::istringstream rs(line);
        for (int j = 0; j < n; ++j) {
            double v;
            if (!(rs >> v)) err(2 + i, "row has fewer than " + std::to_string(n) + " entries");
            m(i, j) = v;
        }
        std::string extra;
        if (rs >> extra) err(2 + i, "row has more than " + std::to_string(n) + " entries");
    }
    if (!m.allFinite()) fail(ErrorCode::parse, source_name + ": matrix entries must be finite");
    return SymMatrix(std::move(m));
}

SymMatrix read_matrix_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) fail(ErrorCode::io, "cannot open matrix file '" + path + "'");
    return read_matrix(in, path);
}

void write_matrix(std::ostream& out, const SymMatrix& M) {
    out << M.dim() << '\n';
    out << std::setprecision(17);
    for (int i = 0; i < M.dim(); ++i) {
        for (int j = 0; j < M.dim(); ++j) out << (j ? " " : "") << M(i, j);
        out << '\n';
    }
}

} // namespace mattrace
