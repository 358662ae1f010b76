#include "mattrace/graph.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <iomanip>
#include <istream>
#include <ostream>
#include <set>
#include <sstream>
#include <thread>

namespace mattrace {

namespace {

void validate_edge(int n, int i, int j) {
    if (i < 0 || i >= n || j < 0 || j >= n)
        fail(ErrorCode::invalid_argument, "edge endpoint out of range: {" + std::to_string(i) +
                                              "," + std::to_string(j) + "} with n = " +
                                              std::to_string(n));
    if (i == j) fail(ErrorCode::invalid_argument, "self-loop {" + std::to_string(i) + "," +
                                                      std::to_string(j) + "} not allowed");
}

int thread_count_from_env() {
    const char* env = std::getenv("MATTRACE_THREADS");
    if (!env) return 1;
    const int k = std::atoi(env);
    return k > 1 ? k : 1;
}

// Per-position coefficients c_k[j] = sum over multi-indices with j_k = j of
// (partial_k f) at the eigenvalue grid. The gradient of every edge is then
// sum_k sum_j c_k[j] * u_j^2 with u = V^T (e_a - e_b).
std::vector<Eigen::VectorXd> partial_coefficients(const ScalarFunction& f,
                                                  const Eigen::VectorXd& lambda) {
    const int m = f.arity();
    const int n = static_cast<int>(lambda.size());
    std::vector<Eigen::VectorXd> coeff(static_cast<std::size_t>(m),
                                       Eigen::VectorXd::Zero(n));
    std::vector<int> idx(static_cast<std::size_t>(m), 0);
    std::vector<double> point(static_cast<std::size_t>(m), lambda(0));
    for (int k = 0; k < m; ++k) {
        const ScalarFunction df = f.partial(k + 1);
        std::fill(idx.begin(), idx.end(), 0);
        std::fill(point.begin(), point.end(), lambda(0));
        for (;;) {
            coeff[static_cast<std::size_t>(k)](idx[static_cast<std::size_t>(k)]) += df.eval(point);
            int l = m - 1;
            for (; l >= 0; --l) {
                if (++idx[static_cast<std::size_t>(l)] < n) {
                    point[static_cast<std::size_t>(l)] = lambda(idx[static_cast<std::size_t>(l)]);
                    break;
                }
                idx[static_cast<std::size_t>(l)] = 0;
                point[static_cast<std::size_t>(l)] = lambda(0);
            }
            if (l < 0) break;
        }
    }
    return coeff;
}

} // namespace

WeightedGraph::WeightedGraph(int vertex_count, std::vector<std::pair<int, int>> edges,
                             std::vector<double> weights)
    : n_(vertex_count), edges_(std::move(edges)), weights_(std::move(weights)) {
    if (n_ < 1) fail(ErrorCode::invalid_argument, "graph needs at least one vertex");
    if (edges_.size() != weights_.size())
        fail(ErrorCode::invalid_argument, "edge and weight counts differ");
    std::set<std::pair<int, int>> seen;
    for (const auto& [i, j] : edges_) {
        validate_edge(n_, i, j);
        if (!seen.insert({std::min(i, j), std::max(i, j)}).second)
            fail(ErrorCode::invalid_argument,
                 "duplicate edge {" + std::to_string(i) + "," + std::to_string(j) + "}");
    }
    for (double w : weights_) {
        if (!std::isfinite(w)) fail(ErrorCode::invalid_argument, "edge weights must be finite");
        if (w < 0.0) fail(ErrorCode::invalid_argument, "edge weights must be nonnegative, got " +
                                                           std::to_string(w));
    }
}

WeightedGraph WeightedGraph::with_weights(std::vector<double> w) const {
    if (w.size() != weights_.size())
        fail(ErrorCode::invalid_argument, "weight vector length does not match edge count");
    return WeightedGraph(n_, edges_, std::move(w));
}

SymMatrix edge_basis(int n, int i, int j) {
    validate_edge(n, i, j);
    Eigen::MatrixXd w = Eigen::MatrixXd::Zero(n, n);
    w(i, i) = 1.0;
    w(j, j) = 1.0;
    w(i, j) = -1.0;
    w(j, i) = -1.0;
    return SymMatrix(std::move(w));
}

SymMatrix laplacian(const WeightedGraph& g) {
    Eigen::MatrixXd L = Eigen::MatrixXd::Zero(g.vertex_count(), g.vertex_count());
    for (int e = 0; e < g.edge_count(); ++e) {
        const auto [i, j] = g.edge(e);
        const double w = g.weight(e);
        L(i, i) += w;
        L(j, j) += w;
        L(i, j) -= w;
        L(j, i) -= w;
    }
    return SymMatrix(std::move(L));
}

double spectral_objective(const SpectralObjective& obj, const WeightedGraph& g) {
    const SymMatrix L = laplacian(g);
    const Spectrum s = eig_sym(L);
    const int n = L.dim();
    if (obj.exclude_smallest < 0)
        fail(ErrorCode::invalid_argument, "exclude_smallest must be nonnegative");
    if (obj.exclude_smallest >= n)
        fail(ErrorCode::invalid_argument, "exclude_smallest = " +
                                              std::to_string(obj.exclude_smallest) +
                                              " leaves no eigenvalues (n = " + std::to_string(n) +
                                              ")");
    const Eigen::VectorXd retained = s.eigenvalues.tail(n - obj.exclude_smallest);

    const int m = obj.f.arity();
    for (int k = 1; k <= m; ++k) {
        const Interval& iv = obj.f.domain(k);
        for (Eigen::Index j = 0; j < retained.size(); ++j)
            if (!iv.contains(retained(j)))
                fail(ErrorCode::domain,
                     "retained eigenvalue " + std::to_string(retained(j)) + " outside domain " +
                         iv.to_string() + " of variable x" + std::to_string(k) +
                         "; if f is singular at the Laplacian zero mode, drop it with "
                         "exclude_smallest");
    }

    std::vector<int> idx(static_cast<std::size_t>(m), 0);
    std::vector<double> point(static_cast<std::size_t>(m), retained(0));
    const int r = static_cast<int>(retained.size());
    double sum = 0.0;
    for (;;) {
        try {
            sum += obj.f.eval(point);
        } catch (const Error& e) {
            if (e.code() == ErrorCode::domain)
                fail(ErrorCode::domain,
                     std::string(e.what()) +
                         "; if f is singular at the Laplacian zero mode, drop it with "
                         "exclude_smallest");
            throw;
        }
        int l = m - 1;
        for (; l >= 0; --l) {
            if (++idx[static_cast<std::size_t>(l)] < r) {
                point[static_cast<std::size_t>(l)] = retained(idx[static_cast<std::size_t>(l)]);
                break;
            }
            idx[static_cast<std::size_t>(l)] = 0;
            point[static_cast<std::size_t>(l)] = retained(0);
        }
        if (l < 0) break;
    }
    return sum;
}

std::vector<double> spectral_gradient(const SpectralObjective& obj, const WeightedGraph& g) {
    if (obj.exclude_smallest != 0)
        fail(ErrorCode::precondition,
             "analytic gradient requires exclude_smallest = 0; the truncated objective has no "
             "gradient formula here");
    const SymMatrix L = laplacian(g);
    const Spectrum s = eig_sym(L);
    const int m = obj.f.arity();
    const int n = L.dim();
    for (int k = 1; k <= m; ++k) {
        const Interval& iv = obj.f.domain(k);
        for (int j = 0; j < n; ++j)
            if (!iv.contains(s.eigenvalues(j)))
                fail(ErrorCode::domain, "eigenvalue " + std::to_string(s.eigenvalues(j)) +
                                            " outside domain " + iv.to_string() +
                                            " of variable x" + std::to_string(k));
    }

    const std::vector<Eigen::VectorXd> coeff = partial_coefficients(obj.f, s.eigenvalues);

    std::vector<double> grad(static_cast<std::size_t>(g.edge_count()), 0.0);
    auto edge_value = [&](int e) {
        const auto [a, b] = g.edge(e);
        double total = 0.0;
        for (int k = 0; k < m; ++k) {
            double acc = 0.0;
            for (int j = 0; j < n; ++j) {
                const double u = s.vectors(a, j) - s.vectors(b, j);
                acc += coeff[static_cast<std::size_t>(k)](j) * u * u;
            }
            total += acc;
        }
        return total;
    };

    const int threads = std::min(thread_count_from_env(), g.edge_count());
    if (threads > 1) {
        std::vector<std::thread> pool;
        pool.reserve(static_cast<std::size_t>(threads));
        for (int t = 0; t < threads; ++t)
            pool.emplace_back([&, t] {
                for (int e = t; e < g.edge_count(); e += threads)
                    grad[static_cast<std::size_t>(e)] = edge_value(e);
            });
        for (auto& th : pool) th.join();
    } else {
        for (int e = 0; e < g.edge_count(); ++e) grad[static_cast<std::size_t>(e)] = edge_value(e);
    }
    return grad;
}

WeightedGraph read_graph(std::istream& in, const std::string& source_name) {
    auto err = [&](int line, const std::string& msg) {
        fail(ErrorCode::parse, source_name + ":" + std::to_string(line) + ": " + msg);
    };
    std::string line;
    if (!std::getline(in, line)) err(1, "missing header line 'n m'");
    int n = 0, m = 0;
    {
        std::istringstream hs(line);
        if (!(hs >> n >> m) || n < 1 || m < 0) err(1, "header must be 'n m' with n >= 1, m >= 0");
        std::string extra;
        if (hs >> extra) err(1, "unexpected token '" + extra + "' after header");
    }
    std::vector<std::pair<int, int>> edges;
    std::vector<double> weights;
    std::set<std::pair<int, int>> seen;
    for (int e = 0; e < m; ++e) {
        const int lineno = 2 + e;
        if (!std::getline(in, line)) err(lineno, "missing edge line");
        std::istringstream es(line);
        int i, j;
        double w;
        if (!(es >> i >> j >> w)) err(lineno, "edge line must be 'i j w'");
        std::string extra;
        if (es >> extra) err(lineno, "unexpected token '" + extra + "' after edge");
        if (i < 0 || i >= n || j < 0 || j >= n)
            err(lineno, "vertex index out of range [0," + std::to_string(n - 1) + "]");
        if (i == j) err(lineno, "self-loops are not allowed");
        if (!seen.insert({std::min(i, j), std::max(i, j)}).second)
            err(lineno, "duplicate edge {" + std::to_string(i) + "," + std::to_string(j) + "}");
        if (!(w >= 0.0)) err(lineno, "weight must be nonnegative");
        if (!std::isfinite(w)) err(lineno, "weight must be finite");
        edges.emplace_back(i, j);
        weights.push_back(w);
    }
    return WeightedGraph(n, std::move(edges), std::move(weights));
}

WeightedGraph read_graph_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) fail(ErrorCode::io, "cannot open graph file '" + path + "'");
    return read_graph(in, path);
}

void write_graph(std::ostream& out, const WeightedGraph& g) {
    out << g.vertex_count() << ' ' << g.edge_count() << '\n';
    out << std::setprecision(17);
    for (int e = 0; e < g.edge_count(); ++e) {
        const auto [i, j] = g.edge(e);
        out << i << ' ' << j << ' ' << g.weight(e) << '\n';
    }
}

} // namespace mattrace
