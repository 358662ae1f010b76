#include "mattrace/optimize.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "mattrace/rng.hpp"

namespace mattrace {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kArmijo = 1e-4;
constexpr double kMinStep = 1e-16;

double clamp(double x, double lo, double hi) { return std::min(std::max(x, lo), hi); }

bool box_feasible(const std::vector<double>& w, const ConstraintSet& C) {
    for (std::size_t i = 0; i < w.size(); ++i)
        if (w[i] < C.lower[i] || w[i] > C.upper[i]) return false;
    return true;
}

double sum_of(const std::vector<double>& w) {
    double s = 0.0;
    for (double x : w) s += x;
    return s;
}

} // namespace

ConstraintSet ConstraintSet::nonnegative(int edges) {
    return ConstraintSet{std::vector<double>(static_cast<std::size_t>(edges), 0.0),
                         std::vector<double>(static_cast<std::size_t>(edges), kInf), std::nullopt};
}

void ConstraintSet::validate(int edges) const {
    if (lower.size() != static_cast<std::size_t>(edges) ||
        upper.size() != static_cast<std::size_t>(edges))
        fail(ErrorCode::invalid_argument, "constraint bounds must have one entry per edge");
    double lo_sum = 0.0, hi_sum = 0.0;
    for (int e = 0; e < edges; ++e) {
        const double lo = lower[static_cast<std::size_t>(e)];
        const double hi = upper[static_cast<std::size_t>(e)];
        if (std::isnan(lo) || std::isnan(hi) || lo > hi)
            fail(ErrorCode::infeasible, "edge " + std::to_string(e) + " bounds violate lo <= hi");
        lo_sum += lo;
        hi_sum += hi;
    }
    if (budget) {
        if (!std::isfinite(*budget)) fail(ErrorCode::infeasible, "budget must be finite");
        if (*budget < lo_sum || *budget > hi_sum)
            fail(ErrorCode::infeasible, "budget " + std::to_string(*budget) +
                                            " outside [sum lower, sum upper]");
    }
}

std::vector<double> project(const std::vector<double>& w, const ConstraintSet& C) {
    C.validate(static_cast<int>(w.size()));
    const std::size_t n = w.size();

    if (!C.budget) {
        std::vector<double> out(n);
        for (std::size_t i = 0; i < n; ++i) out[i] = clamp(w[i], C.lower[i], C.upper[i]);
        return out;
    }

    const double c = *C.budget;
    if (box_feasible(w, C) && std::abs(sum_of(w) - c) <= 1e-12 * std::max(1.0, std::abs(c)))
        return w;

    auto shifted_sum = [&](double tau) {
        double s = 0.0;
        for (std::size_t i = 0; i < n; ++i) s += clamp(w[i] - tau, C.lower[i], C.upper[i]);
        return s;
    };

    // bracket: shifted_sum is non-increasing in tau
    double lo = -1.0, hi = 1.0;
    while (shifted_sum(lo) < c) lo *= 2.0;
    while (shifted_sum(hi) > c) hi *= 2.0;
    for (int it = 0; it < 200 && hi - lo > 1e-18 * std::max(1.0, std::abs(lo) + std::abs(hi));
         ++it) {
        const double mid = 0.5 * (lo + hi);
        if (shifted_sum(mid) >= c)
            lo = mid;
        else
            hi = mid;
    }
    double tau = 0.5 * (lo + hi);

    // exact solve on the active set the bisection identified
    double free_sum = 0.0, clamped_sum = 0.0;
    int free_count = 0;
    for (std::size_t i = 0; i < n; ++i) {
        const double v = w[i] - tau;
        if (v <= C.lower[i])
            clamped_sum += C.lower[i];
        else if (v >= C.upper[i])
            clamped_sum += C.upper[i];
        else {
            free_sum += w[i];
            ++free_count;
        }
    }
    if (free_count > 0) {
        const double exact = (free_sum + clamped_sum - c) / free_count;
        // keep the refined multiplier only if it leaves the active set intact
        bool consistent = true;
        for (std::size_t i = 0; i < n && consistent; ++i) {
            const double rough = w[i] - tau;
            const double fine = w[i] - exact;
            const bool was_free = rough > C.lower[i] && rough < C.upper[i];
            const bool is_free = fine > C.lower[i] && fine < C.upper[i];
            if (was_free != is_free) consistent = false;
        }
        if (consistent) tau = exact;
    }

    std::vector<double> out(n);
    for (std::size_t i = 0; i < n; ++i) out[i] = clamp(w[i] - tau, C.lower[i], C.upper[i]);
    return out;
}

const char* opt_status_name(OptStatus s) {
    switch (s) {
        case OptStatus::converged: return "converged";
        case OptStatus::iteration_cap: return "iteration_cap";
        case OptStatus::line_search_failure: return "line_search_failure";
    }
    return "?";
}

bool midpoint_convexity_check(const ScalarFunction& f, int samples, std::uint64_t seed) {
    const int m = f.arity();
    std::vector<double> lo(static_cast<std::size_t>(m)), hi(static_cast<std::size_t>(m));
    for (int k = 0; k < m; ++k) {
        const Interval& iv = f.domain(k + 1);
        double a = std::max(iv.lo, -10.0);
        double b = std::min(iv.hi, 10.0);
        if (!(a < b)) return false; // degenerate sampling box, cannot certify
        const double margin = 1e-6 * (b - a);
        if (!iv.lo_closed || iv.lo < a) a += margin;
        if (!iv.hi_closed || iv.hi > b) b -= margin;
        lo[static_cast<std::size_t>(k)] = a;
        hi[static_cast<std::size_t>(k)] = b;
    }

    Rng rng(seed);
    std::vector<double> x(static_cast<std::size_t>(m)), y(static_cast<std::size_t>(m)),
        mid(static_cast<std::size_t>(m));
    for (int trial = 0; trial < samples; ++trial) {
        for (int k = 0; k < m; ++k) {
            x[static_cast<std::size_t>(k)] =
                rng.uniform(lo[static_cast<std::size_t>(k)], hi[static_cast<std::size_t>(k)]);
            y[static_cast<std::size_t>(k)] =
                rng.uniform(lo[static_cast<std::size_t>(k)], hi[static_cast<std::size_t>(k)]);
            mid[static_cast<std::size_t>(k)] =
                0.5 * (x[static_cast<std::size_t>(k)] + y[static_cast<std::size_t>(k)]);
        }
        try {
            if (f.eval(mid) > 0.5 * (f.eval(x) + f.eval(y)) + 1e-9) return false;
        } catch (const Error&) {
            return false;
        }
    }
    return true;
}

OptimizationResult minimize(const SpectralObjective& obj, const WeightedGraph& g,
                            const ConstraintSet& C, const OptimizeOptions& opts) {
    C.validate(g.edge_count());
    if (obj.exclude_smallest != 0)
        fail(ErrorCode::precondition,
             "optimizer requires exclude_smallest = 0 (no analytic gradient for the truncated "
             "objective)");
    if (!(opts.shrink > 0.0 && opts.shrink < 1.0))
        fail(ErrorCode::invalid_argument, "shrink must lie in (0, 1)");
    if (opts.step0 <= 0.0) fail(ErrorCode::invalid_argument, "step0 must be positive");

    const double sign = opts.maximize ? -1.0 : 1.0;

    std::vector<double> w = project(g.weights(), C);
    auto value = [&](const std::vector<double>& weights) {
        return sign * spectral_objective(obj, g.with_weights(weights));
    };
    auto gradient = [&](const std::vector<double>& weights) {
        std::vector<double> grad = spectral_gradient(obj, g.with_weights(weights));
        if (opts.maximize)
            for (double& x : grad) x = -x;
        return grad;
    };

    OptimizationResult result;
    result.convexity_certified =
        opts.declared_convex && midpoint_convexity_check(obj.f, 1000, opts.seed);

    double fw = value(w); // domain violation at the initial iterate is fatal
    result.objective_history.push_back(sign * fw);

    const std::size_t n = w.size();
    std::vector<double> stepped(n), diff(n);
    result.status = OptStatus::iteration_cap;
    int iter = 0;
    for (; iter < opts.max_iter; ++iter) {
        const std::vector<double> grad = gradient(w);

        for (std::size_t i = 0; i < n; ++i) stepped[i] = w[i] - grad[i];
        const std::vector<double> mapped = project(stepped, C);
        double gmap = 0.0;
        for (std::size_t i = 0; i < n; ++i) gmap = std::max(gmap, std::abs(w[i] - mapped[i]));
        result.grad_map_norm = gmap;
        if (gmap <= opts.tol) {
            result.status = OptStatus::converged;
            break;
        }

        // backtracking line search with the Armijo condition on the projected step
        double step = opts.step0;
        bool accepted = false;
        while (step >= kMinStep) {
            for (std::size_t i = 0; i < n; ++i) stepped[i] = w[i] - step * grad[i];
            std::vector<double> trial = project(stepped, C);
            double directional = 0.0;
            for (std::size_t i = 0; i < n; ++i) {
                diff[i] = trial[i] - w[i];
                directional += grad[i] * diff[i];
            }
            bool trial_ok = true;
            double ft = 0.0;
            try {
                ft = value(trial);
            } catch (const Error& e) {
                if (e.code() != ErrorCode::domain) throw;
                trial_ok = false; // trial left the domain, shrink and retry
            }
            if (trial_ok && ft <= fw + kArmijo * directional) {
                w = std::move(trial);
                fw = ft;
                accepted = true;
                break;
            }
            step *= opts.shrink;
        }
        if (!accepted) {
            result.status = OptStatus::line_search_failure;
            break;
        }
        result.objective_history.push_back(sign * fw);
    }

    if (result.status == OptStatus::converged || iter == opts.max_iter) {
        // recompute the certificate at the final point when we ran out of iterations
        if (result.status != OptStatus::converged) {
            const std::vector<double> grad = gradient(w);
            for (std::size_t i = 0; i < n; ++i) stepped[i] = w[i] - grad[i];
            const std::vector<double> mapped = project(stepped, C);
            double gmap = 0.0;
            for (std::size_t i = 0; i < n; ++i) gmap = std::max(gmap, std::abs(w[i] - mapped[i]));
            result.grad_map_norm = gmap;
        }
    }

    result.weights = std::move(w);
    result.iterations = iter;
    return result;
}

} // namespace mattrace
