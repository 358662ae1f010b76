#ifndef MATTRACE_OPTIMIZE_HPP
#define MATTRACE_OPTIMIZE_HPP

#include <cstdint>
#include <optional>
#include <vector>

#include "mattrace/graph.hpp"

namespace mattrace {

// Per-edge box bounds plus an optional total-weight equality sum(w) = budget.
struct ConstraintSet {
    std::vector<double> lower;
    std::vector<double> upper;
    std::optional<double> budget;

    static ConstraintSet nonnegative(int edges);
    void validate(int edges) const;
};

// Euclidean projection onto the box (and the box-budget intersection when a
// budget is set, via bisection on the dual multiplier). Inputs already
// feasible to 1e-12 are returned unchanged, which makes the projection
// bitwise idempotent.
std::vector<double> project(const std::vector<double>& w, const ConstraintSet& C);

struct OptimizeOptions {
    double step0 = 1.0;
    double shrink = 0.5;
    double tol = 1e-7;
    int max_iter = 5000;
    bool maximize = false;
    bool declared_convex = false;
    std::uint64_t seed = 1; // convexity spot-check sampling
};

enum class OptStatus { converged, iteration_cap, line_search_failure };

const char* opt_status_name(OptStatus s);

struct OptimizationResult {
    std::vector<double> weights;
    std::vector<double> objective_history; // objective at each iterate, start included
    double grad_map_norm = 0.0;            // final ||w - project(w - grad, C)||_inf
    int iterations = 0;
    OptStatus status = OptStatus::converged;
    bool convexity_certified = false;
};

// Projected gradient descent with Armijo backtracking over the edge weights.
// For maximization the negated objective is minimized; no separate path.
OptimizationResult minimize(const SpectralObjective& obj, const WeightedGraph& g,
                            const ConstraintSet& C, const OptimizeOptions& opts = {});

// Randomized midpoint convexity spot check of f over its domain box
// (truncated to [-10, 10] per axis); used for the convexity certificate.
bool midpoint_convexity_check(const ScalarFunction& f, int samples, std::uint64_t seed);

} // namespace mattrace

#endif
