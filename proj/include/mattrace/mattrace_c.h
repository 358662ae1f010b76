/* C interface to the mattrace shared library.
 *
 * All objects are opaque handles created and destroyed by the library. Every
 * fallible call returns an mt_status; on failure a thread-local message is
 * available from mt_last_error(). Strings returned as char* are owned by the
 * caller and released with mt_string_free(). Matrix buffers are row-major
 * double arrays of length n*n.
 */
#ifndef MATTRACE_C_H
#define MATTRACE_C_H

#include <stddef.h>
#include <stdint.h>

#ifdef __cplusplus
extern "C" {
#endif

typedef enum mt_status {
    MT_OK = 0,
    MT_ERR_INVALID_ARGUMENT = 1,
    MT_ERR_PARSE = 2,
    MT_ERR_DOMAIN = 3,
    MT_ERR_DIMENSION = 4,
    MT_ERR_CAP_EXCEEDED = 5,
    MT_ERR_NUMERIC = 6,
    MT_ERR_INFEASIBLE = 7,
    MT_ERR_IO = 8,
    MT_ERR_PRECONDITION = 9
} mt_status;

typedef struct mt_function mt_function;
typedef struct mt_matrix mt_matrix;
typedef struct mt_graph mt_graph;
typedef struct mt_opt_result mt_opt_result;
typedef struct mt_report mt_report;

const char* mt_status_name(mt_status status);
/* message of the most recent failure on this thread; empty string if none */
const char* mt_last_error(void);
void mt_string_free(char* s);
const char* mt_version(void);

/* --- scalar functions ---------------------------------------------------- */

mt_status mt_function_parse(const char* text, int arity, mt_function** out);
/* var is 1-based; "pos", "nonneg", "real" or "(a,b]" interval syntax */
mt_status mt_function_set_domain(mt_function* f, int var, const char* interval);
int mt_function_arity(const mt_function* f);
mt_status mt_function_eval(const mt_function* f, const double* point, int len, double* out);
mt_status mt_function_partial(const mt_function* f, int var, mt_function** out);
char* mt_function_to_string(const mt_function* f);
void mt_function_free(mt_function* f);

/* --- symmetric matrices --------------------------------------------------- */

mt_status mt_matrix_create(int n, const double* row_major, mt_matrix** out);
mt_status mt_matrix_read(const char* path, mt_matrix** out);
/* deterministic test matrix with Gaussian entries of the given scale */
mt_status mt_matrix_random_symmetric(int n, uint64_t seed, double scale, mt_matrix** out);
int mt_matrix_dim(const mt_matrix* m);
void mt_matrix_get(const mt_matrix* m, double* row_major_out);
void mt_matrix_free(mt_matrix* m);

/* eigenvalues ascending into out[0..n) */
mt_status mt_matrix_eigenvalues(const mt_matrix* m, double* out);
/* V diag(f(lambda)) V^T for a function of one variable */
mt_status mt_matrix_matfun(const mt_function* f, const mt_matrix* m, mt_matrix** out);
mt_status mt_kron(const mt_matrix* a, const mt_matrix* b, mt_matrix** out);

/* 1 = succeeds (A >= B), -1 = precedes, 0 = equal, 2 = incomparable;
 * tol < 0 selects the scale-relative default */
mt_status mt_psd_order(const mt_matrix* a, const mt_matrix* b, double tol, int* out);

/* --- tensor extension ----------------------------------------------------- */

mt_status mt_trace_matfun(const mt_function* f, const mt_matrix* const* mats, int m, double* out);
mt_status mt_trace_matfun_diag(const mt_function* f, const mt_matrix* l, double* out);
/* trace through the dense n^m construction (test oracle, capped) */
mt_status mt_trace_matfun_dense(const mt_function* f, const mt_matrix* const* mats, int m,
                                long long dense_cap, double* out);
mt_status mt_trace_matfun_derivative(const mt_function* f, const mt_matrix* const* mats,
                                     const mt_matrix* const* rates, int m, double* out);

/* --- weighted graphs ------------------------------------------------------ */

/* endpoints is edge_count pairs (i,j); 0-based vertices */
mt_status mt_graph_create(int vertex_count, int edge_count, const int* endpoints,
                          const double* weights, mt_graph** out);
mt_status mt_graph_read(const char* path, mt_graph** out);
int mt_graph_vertex_count(const mt_graph* g);
int mt_graph_edge_count(const mt_graph* g);
void mt_graph_edge(const mt_graph* g, int e, int* i, int* j, double* w);
mt_status mt_graph_set_weights(mt_graph* g, const double* weights, int len);
mt_status mt_graph_laplacian(const mt_graph* g, mt_matrix** out);
void mt_graph_free(mt_graph* g);

mt_status mt_spectral_objective(const mt_function* f, const mt_graph* g, int exclude_smallest,
                                double* out);
/* gradient over edges; exclude_smallest != 0 is rejected (MT_ERR_PRECONDITION) */
mt_status mt_spectral_gradient(const mt_function* f, const mt_graph* g, int exclude_smallest,
                               double* grad_out);

/* --- optimization ---------------------------------------------------------- */

typedef struct mt_opt_options {
    double step0;
    double shrink;
    double tol;
    int max_iter;
    int maximize;
    int declared_convex;
    uint64_t seed;
} mt_opt_options;

void mt_opt_options_default(mt_opt_options* opts);

/* lower/upper may be NULL for the defaults [0, +inf); has_budget selects the
 * total-weight equality sum(w) = budget. exclude_smallest != 0 is rejected
 * (the truncated objective has no analytic gradient). */
mt_status mt_minimize(const mt_function* f, const mt_graph* g, int exclude_smallest,
                      const double* lower, const double* upper, int has_budget, double budget,
                      const mt_opt_options* opts, mt_opt_result** out);

int mt_opt_result_iterations(const mt_opt_result* r);
/* 0 = converged, 1 = iteration_cap, 2 = line_search_failure */
int mt_opt_result_status(const mt_opt_result* r);
const char* mt_opt_result_status_name(const mt_opt_result* r);
double mt_opt_result_grad_map_norm(const mt_opt_result* r);
int mt_opt_result_convexity_certified(const mt_opt_result* r);
void mt_opt_result_weights(const mt_opt_result* r, double* out);
int mt_opt_result_history_len(const mt_opt_result* r);
void mt_opt_result_history(const mt_opt_result* r, double* out);
void mt_opt_result_free(mt_opt_result* r);

mt_status mt_project(const double* w, int len, const double* lower, const double* upper,
                     int has_budget, double budget, double* out);

/* --- property checks -------------------------------------------------------- */

/* suite: oracle | monotone | convex | derivative | parameterization | all.
 * f may be NULL for the suite's built-in example function. selftest runs the
 * canonical counterexample, which a correct build must report as failing.
 * Returns a JSON array string (caller frees); failure counts land in
 * *failures_out when non-NULL. */
mt_status mt_check_suite(const char* suite, const mt_function* f, int dim, int trials,
                         uint64_t seed, int selftest, long long* failures_out, char** json_out);

/* single-instance oracle-equivalence check; JSON report string */
mt_status mt_check_oracle(const mt_function* f, const mt_matrix* const* mats, int m,
                          char** json_out);

#ifdef __cplusplus
} /* extern "C" */
#endif

#endif /* MATTRACE_C_H */
