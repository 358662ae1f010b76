#include "mattrace/mattrace_c.h"

#include <cstring>
#include <new>
#include <string>

#include "mattrace/optimize.hpp"
#include "mattrace/rng.hpp"
#include "mattrace/verify.hpp"

using namespace mattrace;

struct mt_function {
    ScalarFunction fn;
};
struct mt_matrix {
    SymMatrix m;
};
struct mt_graph {
    WeightedGraph g;
};
struct mt_opt_result {
    OptimizationResult r;
};

namespace {

thread_local std::string g_last_error;

mt_status status_of(ErrorCode code) {
    switch (code) {
        case ErrorCode::invalid_argument: return MT_ERR_INVALID_ARGUMENT;
        case ErrorCode::parse: return MT_ERR_PARSE;
        case ErrorCode::domain: return MT_ERR_DOMAIN;
        case ErrorCode::dimension: return MT_ERR_DIMENSION;
        case ErrorCode::cap_exceeded: return MT_ERR_CAP_EXCEEDED;
        case ErrorCode::numeric: return MT_ERR_NUMERIC;
        case ErrorCode::infeasible: return MT_ERR_INFEASIBLE;
        case ErrorCode::io: return MT_ERR_IO;
        case ErrorCode::precondition: return MT_ERR_PRECONDITION;
    }
    return MT_ERR_INVALID_ARGUMENT;
}

template <typename Fn>
mt_status guarded(Fn&& fn) {
    try {
        fn();
        g_last_error.clear();
        return MT_OK;
    } catch (const Error& e) {
        g_last_error = e.what();
        return status_of(e.code());
    } catch (const std::bad_alloc&) {
        g_last_error = "out of memory";
        return MT_ERR_NUMERIC;
    } catch (const std::exception& e) {
        g_last_error = e.what();
        return MT_ERR_NUMERIC;
    }
}

mt_status require(bool ok, const char* msg) {
    if (ok) return MT_OK;
    g_last_error = msg;
    return MT_ERR_INVALID_ARGUMENT;
}

char* dup_string(const std::string& s) {
    char* out = new char[s.size() + 1];
    std::memcpy(out, s.c_str(), s.size() + 1);
    return out;
}

std::vector<SymMatrix> collect(const mt_matrix* const* mats, int m) {
    if (m < 1) fail(ErrorCode::invalid_argument, "need at least one matrix");
    std::vector<SymMatrix> out;
    out.reserve(static_cast<std::size_t>(m));
    for (int i = 0; i < m; ++i) {
        if (!mats || !mats[i]) fail(ErrorCode::invalid_argument, "null matrix handle");
        out.push_back(mats[i]->m);
    }
    return out;
}

ConstraintSet make_constraints(int edges, const double* lower, const double* upper,
                               int has_budget, double budget) {
    ConstraintSet c = ConstraintSet::nonnegative(edges);
    if (lower)
        c.lower.assign(lower, lower + edges);
    if (upper)
        c.upper.assign(upper, upper + edges);
    if (has_budget) c.budget = budget;
    return c;
}

} // namespace

extern "C" {

const char* mt_status_name(mt_status status) {
    switch (status) {
        case MT_OK: return "ok";
        case MT_ERR_INVALID_ARGUMENT: return "invalid_argument";
        case MT_ERR_PARSE: return "parse_error";
        case MT_ERR_DOMAIN: return "domain_error";
        case MT_ERR_DIMENSION: return "dimension_mismatch";
        case MT_ERR_CAP_EXCEEDED: return "cap_exceeded";
        case MT_ERR_NUMERIC: return "numeric_error";
        case MT_ERR_INFEASIBLE: return "infeasible";
        case MT_ERR_IO: return "io_error";
        case MT_ERR_PRECONDITION: return "precondition";
    }
    return "?";
}

const char* mt_last_error(void) { return g_last_error.c_str(); }

void mt_string_free(char* s) { delete[] s; }

const char* mt_version(void) { return "1.0.0"; }

/* --- functions -------------------------------------------------------------- */

mt_status mt_function_parse(const char* text, int arity, mt_function** out) {
    if (mt_status s = require(text && out, "null argument"); s != MT_OK) return s;
    return guarded([&] { *out = new mt_function{parse_function(text, arity)}; });
}

mt_status mt_function_set_domain(mt_function* f, int var, const char* interval) {
    if (mt_status s = require(f && interval, "null argument"); s != MT_OK) return s;
    return guarded([&] { f->fn = f->fn.with_domain(var, parse_interval(interval)); });
}

int mt_function_arity(const mt_function* f) { return f ? f->fn.arity() : 0; }

mt_status mt_function_eval(const mt_function* f, const double* point, int len, double* out) {
    if (mt_status s = require(f && point && out, "null argument"); s != MT_OK) return s;
    return guarded([&] { *out = f->fn.eval({point, static_cast<std::size_t>(len)}); });
}

mt_status mt_function_partial(const mt_function* f, int var, mt_function** out) {
    if (mt_status s = require(f && out, "null argument"); s != MT_OK) return s;
    return guarded([&] { *out = new mt_function{f->fn.partial(var)}; });
}

char* mt_function_to_string(const mt_function* f) {
    return f ? dup_string(f->fn.to_string()) : nullptr;
}

void mt_function_free(mt_function* f) { delete f; }

/* --- matrices ---------------------------------------------------------------- */

mt_status mt_matrix_create(int n, const double* row_major, mt_matrix** out) {
    if (mt_status s = require(row_major && out, "null argument"); s != MT_OK) return s;
    if (mt_status s = require(n >= 1, "dimension must be positive"); s != MT_OK) return s;
    return guarded([&] {
        Eigen::MatrixXd m(n, n);
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j) m(i, j) = row_major[i * n + j];
        *out = new mt_matrix{SymMatrix(std::move(m))};
    });
}

mt_status mt_matrix_read(const char* path, mt_matrix** out) {
    if (mt_status s = require(path && out, "null argument"); s != MT_OK) return s;
    return guarded([&] { *out = new mt_matrix{read_matrix_file(path)}; });
}

mt_status mt_matrix_random_symmetric(int n, uint64_t seed, double scale, mt_matrix** out) {
    if (mt_status s = require(out != nullptr, "null argument"); s != MT_OK) return s;
    if (mt_status s = require(n >= 1, "dimension must be positive"); s != MT_OK) return s;
    return guarded([&] {
        Rng rng(seed);
        Eigen::MatrixXd m(n, n);
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j) m(i, j) = scale * rng.normal();
        *out = new mt_matrix{SymMatrix(std::move(m))};
    });
}

int mt_matrix_dim(const mt_matrix* m) { return m ? m->m.dim() : 0; }

void mt_matrix_get(const mt_matrix* m, double* row_major_out) {
    if (!m || !row_major_out) return;
    const int n = m->m.dim();
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) row_major_out[i * n + j] = m->m(i, j);
}

void mt_matrix_free(mt_matrix* m) { delete m; }

mt_status mt_matrix_eigenvalues(const mt_matrix* m, double* out) {
    if (mt_status s = require(m && out, "null argument"); s != MT_OK) return s;
    return guarded([&] {
        const Spectrum sp = eig_sym(m->m);
        for (int j = 0; j < m->m.dim(); ++j) out[j] = sp.eigenvalues(j);
    });
}

mt_status mt_matrix_matfun(const mt_function* f, const mt_matrix* m, mt_matrix** out) {
    if (mt_status s = require(f && m && out, "null argument"); s != MT_OK) return s;
    return guarded([&] { *out = new mt_matrix{matfun_single(f->fn, m->m)}; });
}

mt_status mt_kron(const mt_matrix* a, const mt_matrix* b, mt_matrix** out) {
    if (mt_status s = require(a && b && out, "null argument"); s != MT_OK) return s;
    return guarded([&] { *out = new mt_matrix{SymMatrix(kron(a->m.mat(), b->m.mat()))}; });
}

mt_status mt_psd_order(const mt_matrix* a, const mt_matrix* b, double tol, int* out) {
    if (mt_status s = require(a && b && out, "null argument"); s != MT_OK) return s;
    return guarded([&] {
        const Ordering o =
            tol < 0.0 ? psd_order(a->m, b->m) : psd_order(a->m, b->m, tol);
        switch (o) {
            case Ordering::succeeds: *out = 1; break;
            case Ordering::precedes: *out = -1; break;
            case Ordering::equal: *out = 0; break;
            case Ordering::incomparable: *out = 2; break;
        }
    });
}

/* --- tensor extension --------------------------------------------------------- */

mt_status mt_trace_matfun(const mt_function* f, const mt_matrix* const* mats, int m, double* out) {
    if (mt_status s = require(f && out, "null argument"); s != MT_OK) return s;
    return guarded([&] { *out = trace_matfun_multi(f->fn, MatrixTuple(collect(mats, m))); });
}

mt_status mt_trace_matfun_diag(const mt_function* f, const mt_matrix* l, double* out) {
    if (mt_status s = require(f && l && out, "null argument"); s != MT_OK) return s;
    return guarded([&] { *out = trace_matfun_diag(f->fn, l->m); });
}

mt_status mt_trace_matfun_dense(const mt_function* f, const mt_matrix* const* mats, int m,
                                long long dense_cap, double* out) {
    if (mt_status s = require(f && out, "null argument"); s != MT_OK) return s;
    return guarded([&] {
        const long long cap = dense_cap > 0 ? dense_cap : kDenseCap;
        *out = matfun_multi_dense(f->fn, MatrixTuple(collect(mats, m)), cap).trace();
    });
}

mt_status mt_trace_matfun_derivative(const mt_function* f, const mt_matrix* const* mats,
                                     const mt_matrix* const* rates, int m, double* out) {
    if (mt_status s = require(f && out, "null argument"); s != MT_OK) return s;
    return guarded([&] {
        *out = trace_matfun_derivative(
            f->fn, DerivativeInput(MatrixTuple(collect(mats, m)), collect(rates, m)));
    });
}

/* --- graphs -------------------------------------------------------------------- */

mt_status mt_graph_create(int vertex_count, int edge_count, const int* endpoints,
                          const double* weights, mt_graph** out) {
    if (mt_status s = require(out && (edge_count == 0 || (endpoints && weights)), "null argument");
        s != MT_OK)
        return s;
    return guarded([&] {
        std::vector<std::pair<int, int>> edges;
        std::vector<double> w;
        for (int e = 0; e < edge_count; ++e) {
            edges.emplace_back(endpoints[2 * e], endpoints[2 * e + 1]);
            w.push_back(weights[e]);
        }
        *out = new mt_graph{WeightedGraph(vertex_count, std::move(edges), std::move(w))};
    });
}

mt_status mt_graph_read(const char* path, mt_graph** out) {
    if (mt_status s = require(path && out, "null argument"); s != MT_OK) return s;
    return guarded([&] { *out = new mt_graph{read_graph_file(path)}; });
}

int mt_graph_vertex_count(const mt_graph* g) { return g ? g->g.vertex_count() : 0; }
int mt_graph_edge_count(const mt_graph* g) { return g ? g->g.edge_count() : 0; }

void mt_graph_edge(const mt_graph* g, int e, int* i, int* j, double* w) {
    if (!g || e < 0 || e >= g->g.edge_count()) return;
    const auto [a, b] = g->g.edge(e);
    if (i) *i = a;
    if (j) *j = b;
    if (w) *w = g->g.weight(e);
}

mt_status mt_graph_set_weights(mt_graph* g, const double* weights, int len) {
    if (mt_status s = require(g && weights, "null argument"); s != MT_OK) return s;
    return guarded([&] {
        if (len != g->g.edge_count())
            fail(ErrorCode::invalid_argument, "weight count does not match edge count");
        g->g = g->g.with_weights(std::vector<double>(weights, weights + len));
    });
}

mt_status mt_graph_laplacian(const mt_graph* g, mt_matrix** out) {
    if (mt_status s = require(g && out, "null argument"); s != MT_OK) return s;
    return guarded([&] { *out = new mt_matrix{laplacian(g->g)}; });
}

void mt_graph_free(mt_graph* g) { delete g; }

mt_status mt_spectral_objective(const mt_function* f, const mt_graph* g, int exclude_smallest,
                                double* out) {
    if (mt_status s = require(f && g && out, "null argument"); s != MT_OK) return s;
    return guarded([&] {
        *out = spectral_objective(SpectralObjective{f->fn, exclude_smallest}, g->g);
    });
}

mt_status mt_spectral_gradient(const mt_function* f, const mt_graph* g, int exclude_smallest,
                               double* grad_out) {
    if (mt_status s = require(f && g && grad_out, "null argument"); s != MT_OK) return s;
    return guarded([&] {
        const std::vector<double> grad =
            spectral_gradient(SpectralObjective{f->fn, exclude_smallest}, g->g);
        std::copy(grad.begin(), grad.end(), grad_out);
    });
}

/* --- optimization ----------------------------------------------------------------- */

void mt_opt_options_default(mt_opt_options* opts) {
    if (!opts) return;
    opts->step0 = 1.0;
    opts->shrink = 0.5;
    opts->tol = 1e-7;
    opts->max_iter = 5000;
    opts->maximize = 0;
    opts->declared_convex = 0;
    opts->seed = 1;
}

mt_status mt_minimize(const mt_function* f, const mt_graph* g, int exclude_smallest,
                      const double* lower, const double* upper, int has_budget, double budget,
                      const mt_opt_options* opts, mt_opt_result** out) {
    if (mt_status s = require(f && g && out, "null argument"); s != MT_OK) return s;
    return guarded([&] {
        OptimizeOptions o;
        if (opts) {
            o.step0 = opts->step0;
            o.shrink = opts->shrink;
            o.tol = opts->tol;
            o.max_iter = opts->max_iter;
            o.maximize = opts->maximize != 0;
            o.declared_convex = opts->declared_convex != 0;
            o.seed = opts->seed;
        }
        const ConstraintSet c =
            make_constraints(g->g.edge_count(), lower, upper, has_budget, budget);
        *out = new mt_opt_result{
            minimize(SpectralObjective{f->fn, exclude_smallest}, g->g, c, o)};
    });
}

int mt_opt_result_iterations(const mt_opt_result* r) { return r ? r->r.iterations : 0; }

int mt_opt_result_status(const mt_opt_result* r) {
    return r ? static_cast<int>(r->r.status) : -1;
}

const char* mt_opt_result_status_name(const mt_opt_result* r) {
    return r ? opt_status_name(r->r.status) : "?";
}

double mt_opt_result_grad_map_norm(const mt_opt_result* r) {
    return r ? r->r.grad_map_norm : 0.0;
}

int mt_opt_result_convexity_certified(const mt_opt_result* r) {
    return r && r->r.convexity_certified ? 1 : 0;
}

void mt_opt_result_weights(const mt_opt_result* r, double* out) {
    if (!r || !out) return;
    std::copy(r->r.weights.begin(), r->r.weights.end(), out);
}

int mt_opt_result_history_len(const mt_opt_result* r) {
    return r ? static_cast<int>(r->r.objective_history.size()) : 0;
}

void mt_opt_result_history(const mt_opt_result* r, double* out) {
    if (!r || !out) return;
    std::copy(r->r.objective_history.begin(), r->r.objective_history.end(), out);
}

void mt_opt_result_free(mt_opt_result* r) { delete r; }

mt_status mt_project(const double* w, int len, const double* lower, const double* upper,
                     int has_budget, double budget, double* out) {
    if (mt_status s = require(w && out && len >= 1, "null or empty weight vector"); s != MT_OK)
        return s;
    return guarded([&] {
        const ConstraintSet c = make_constraints(len, lower, upper, has_budget, budget);
        const std::vector<double> projected = project(std::vector<double>(w, w + len), c);
        std::copy(projected.begin(), projected.end(), out);
    });
}

/* --- property checks ----------------------------------------------------------------- */

mt_status mt_check_suite(const char* suite, const mt_function* f, int dim, int trials,
                         uint64_t seed, int selftest, long long* failures_out, char** json_out) {
    if (mt_status s = require(suite && json_out, "null argument"); s != MT_OK) return s;
    return guarded([&] {
        SuiteConfig cfg;
        cfg.dim = dim > 0 ? dim : 3;
        cfg.trials = trials > 0 ? trials : 200;
        cfg.seed = seed;
        cfg.selftest = selftest != 0;
        if (f) cfg.f = f->fn;
        const std::vector<PropertyReport> reports = run_suite(suite, cfg);
        nlohmann::json arr = nlohmann::json::array();
        long long failures = 0;
        for (const PropertyReport& r : reports) {
            failures += r.failures;
            arr.push_back(report_to_json(r));
        }
        if (failures_out) *failures_out = failures;
        *json_out = dup_string(arr.dump(2));
    });
}

mt_status mt_check_oracle(const mt_function* f, const mt_matrix* const* mats, int m,
                          char** json_out) {
    if (mt_status s = require(f && json_out, "null argument"); s != MT_OK) return s;
    return guarded([&] {
        const PropertyReport r = check_oracle_equivalence(f->fn, MatrixTuple(collect(mats, m)));
        *json_out = dup_string(report_to_json(r).dump(2));
    });
}

} /* extern "C" */
