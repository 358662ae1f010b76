#ifndef MATTRACE_GRAPH_HPP
#define MATTRACE_GRAPH_HPP

#include <iosfwd>
#include <utility>
#include <vector>

#include "mattrace/linalg.hpp"

namespace mattrace {

// Undirected simple graph with nonnegative edge weights. Edges keep their
// input order; that order is the index space for weights and gradients.
class WeightedGraph {
public:
    WeightedGraph(int vertex_count, std::vector<std::pair<int, int>> edges,
                  std::vector<double> weights);

    int vertex_count() const { return n_; }
    int edge_count() const { return static_cast<int>(edges_.size()); }
    std::pair<int, int> edge(int e) const { return edges_[static_cast<std::size_t>(e)]; }
    double weight(int e) const { return weights_[static_cast<std::size_t>(e)]; }
    const std::vector<double>& weights() const { return weights_; }

    WeightedGraph with_weights(std::vector<double> w) const;

private:
    int n_;
    std::vector<std::pair<int, int>> edges_;
    std::vector<double> weights_;
};

// W_ij: 1 at the i-th and j-th diagonal entries, -1 at (i,j) and (j,i).
// Rank one, PSD, nonzero eigenvalue exactly 2.
SymMatrix edge_basis(int n, int i, int j);

// L = sum_e w_e W_e accumulated in edge order.
SymMatrix laplacian(const WeightedGraph& g);

// F(L) = sum over the multi-index grid of f at the retained eigenvalues of L.
// exclude_smallest drops that many smallest eigenvalues from every index
// position; 0 reproduces the full sum.
struct SpectralObjective {
    ScalarFunction f;
    int exclude_smallest = 0;
};

double spectral_objective(const SpectralObjective& obj, const WeightedGraph& g);

// dF/dw_e for every edge. Requires exclude_smallest == 0 (analytic gradients
// for the truncated sum are not provided). Honors MATTRACE_THREADS for the
// per-edge loop; output is deterministic and ordered by edge index either way.
std::vector<double> spectral_gradient(const SpectralObjective& obj, const WeightedGraph& g);

// Text format: header "n m", then m lines "i j w" with 0-indexed vertices.
// Rejects self-loops, duplicate edges, out-of-range vertices and negative
// weights with line-numbered messages.
WeightedGraph read_graph(std::istream& in, const std::string& source_name);
WeightedGraph read_graph_file(const std::string& path);
void write_graph(std::ostream& out, const WeightedGraph& g);

} // namespace mattrace

#endif
