// Exercises the shared-library C surface: opaque handles, status codes,
// thread-local error messages and the JSON-reporting check entry points.
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <fstream>
#include <string>

#include <json.hpp>

#include "mattrace/mattrace_c.h"

namespace {

struct TempFile {
    std::string path;
    explicit TempFile(const std::string& name, const std::string& contents)
        : path("/tmp/mattrace_capi_" + name) {
        std::ofstream out(path);
        out << contents;
    }
    ~TempFile() { std::remove(path.c_str()); }
};

} // namespace

TEST_CASE("function handles: parse, eval, partial, print") {
    mt_function* f = nullptr;
    REQUIRE(mt_function_parse("x1^3 * x2^5", 2, &f) == MT_OK);
    REQUIRE(f != nullptr);
    CHECK(mt_function_arity(f) == 2);

    const double point[2] = {2.0, 1.0};
    double value = 0.0;
    CHECK(mt_function_eval(f, point, 2, &value) == MT_OK);
    CHECK(value == 8.0);

    mt_function* df = nullptr;
    REQUIRE(mt_function_partial(f, 1, &df) == MT_OK);
    CHECK(mt_function_eval(df, point, 2, &value) == MT_OK);
    CHECK(value == 12.0); // 3 x^2 y^5 at (2, 1)

    char* text = mt_function_to_string(f);
    REQUIRE(text != nullptr);
    mt_function* reparsed = nullptr;
    REQUIRE(mt_function_parse(text, 2, &reparsed) == MT_OK);
    double again = 0.0;
    CHECK(mt_function_eval(reparsed, point, 2, &again) == MT_OK);
    CHECK(again == 8.0);
    mt_string_free(text);

    mt_function_free(reparsed);
    mt_function_free(df);
    mt_function_free(f);
}

TEST_CASE("status codes and the thread-local error message") {
    mt_function* f = nullptr;
    CHECK(mt_function_parse("x1 +", 1, &f) == MT_ERR_PARSE);
    CHECK(std::string(mt_last_error()).find("position") != std::string::npos);
    CHECK(mt_function_parse(nullptr, 1, &f) == MT_ERR_INVALID_ARGUMENT);
    CHECK(mt_function_parse("x5", 2, &f) == MT_ERR_PARSE);

    REQUIRE(mt_function_parse("log(x1)", 1, &f) == MT_OK);
    REQUIRE(mt_function_set_domain(f, 1, "pos") == MT_OK);
    double out = 0.0;
    const double bad = -1.0;
    CHECK(mt_function_eval(f, &bad, 1, &out) == MT_ERR_DOMAIN);
    CHECK(std::string(mt_last_error()).find("domain") != std::string::npos);
    CHECK(mt_function_set_domain(f, 1, "junk") == MT_ERR_PARSE);
    mt_function_free(f);

    CHECK(std::string(mt_status_name(MT_ERR_DOMAIN)) == "domain_error");
    CHECK(std::string(mt_status_name(MT_OK)) == "ok");
}

TEST_CASE("matrix handles: create, read, eigenvalues, matfun, kron, psd order") {
    const double entries[4] = {2, 1, 1, 2};
    mt_matrix* m = nullptr;
    REQUIRE(mt_matrix_create(2, entries, &m) == MT_OK);
    CHECK(mt_matrix_dim(m) == 2);

    double eigs[2];
    REQUIRE(mt_matrix_eigenvalues(m, eigs) == MT_OK);
    CHECK(eigs[0] == doctest::Approx(1.0));
    CHECK(eigs[1] == doctest::Approx(3.0));

    mt_function* sq = nullptr;
    REQUIRE(mt_function_parse("x1^2", 1, &sq) == MT_OK);
    mt_matrix* m2 = nullptr;
    REQUIRE(mt_matrix_matfun(sq, m, &m2) == MT_OK);
    double out[4];
    mt_matrix_get(m2, out);
    CHECK(out[0] == doctest::Approx(5.0));
    CHECK(out[1] == doctest::Approx(4.0));

    mt_matrix* k = nullptr;
    REQUIRE(mt_kron(m, m, &k) == MT_OK);
    CHECK(mt_matrix_dim(k) == 4);

    int order = 9;
    REQUIRE(mt_psd_order(m2, m, -1.0, &order) == MT_OK);
    CHECK(order == 1); // M^2 - M has eigenvalues {0, 6}

    const TempFile file("mat.txt", "2\n1 0\n0 2\n");
    mt_matrix* from_file = nullptr;
    REQUIRE(mt_matrix_read(file.path.c_str(), &from_file) == MT_OK);
    CHECK(mt_matrix_dim(from_file) == 2);
    CHECK(mt_matrix_read("/does/not/exist", &from_file) == MT_ERR_IO);

    mt_matrix_free(from_file);
    mt_matrix_free(k);
    mt_matrix_free(m2);
    mt_matrix_free(m);
    mt_function_free(sq);
}

TEST_CASE("tensor trace entry points agree with each other") {
    mt_matrix *a = nullptr, *b = nullptr;
    REQUIRE(mt_matrix_random_symmetric(3, 123, 1.0, &a) == MT_OK);
    REQUIRE(mt_matrix_random_symmetric(3, 456, 1.0, &b) == MT_OK);
    mt_function* f = nullptr;
    REQUIRE(mt_function_parse("x1^2 * x2 + x2^2", 2, &f) == MT_OK);

    const mt_matrix* pair[2] = {a, b};
    double eigsum = 0.0, dense = 0.0;
    REQUIRE(mt_trace_matfun(f, pair, 2, &eigsum) == MT_OK);
    REQUIRE(mt_trace_matfun_dense(f, pair, 2, 0, &dense) == MT_OK);
    CHECK(std::abs(dense - eigsum) <= 1e-9 * std::max(1.0, std::abs(eigsum)));

    const mt_matrix* same[2] = {a, a};
    double diag = 0.0, multi = 0.0;
    REQUIRE(mt_trace_matfun_diag(f, a, &diag) == MT_OK);
    REQUIRE(mt_trace_matfun(f, same, 2, &multi) == MT_OK);
    CHECK(std::abs(diag - multi) <= 1e-12 * std::max(1.0, std::abs(multi)));

    const mt_matrix* rates[2] = {b, b};
    double deriv = 0.0;
    REQUIRE(mt_trace_matfun_derivative(f, pair, rates, 2, &deriv) == MT_OK);
    CHECK(std::isfinite(deriv));

    // determinism of the seeded generator
    mt_matrix* a2 = nullptr;
    REQUIRE(mt_matrix_random_symmetric(3, 123, 1.0, &a2) == MT_OK);
    double buf1[9], buf2[9];
    mt_matrix_get(a, buf1);
    mt_matrix_get(a2, buf2);
    for (int i = 0; i < 9; ++i) CHECK(buf1[i] == buf2[i]);

    mt_matrix_free(a2);
    mt_function_free(f);
    mt_matrix_free(b);
    mt_matrix_free(a);
}

TEST_CASE("graph handles and the spectral objective pipeline") {
    const int endpoints[4] = {0, 1, 1, 2};
    const double weights[2] = {1.0, 2.0};
    mt_graph* g = nullptr;
    REQUIRE(mt_graph_create(3, 2, endpoints, weights, &g) == MT_OK);
    CHECK(mt_graph_vertex_count(g) == 3);
    CHECK(mt_graph_edge_count(g) == 2);
    int i, j;
    double w;
    mt_graph_edge(g, 1, &i, &j, &w);
    CHECK(i == 1);
    CHECK(j == 2);
    CHECK(w == 2.0);

    mt_function* linear = nullptr;
    REQUIRE(mt_function_parse("x1", 1, &linear) == MT_OK);
    double objective = 0.0;
    REQUIRE(mt_spectral_objective(linear, g, 0, &objective) == MT_OK);
    CHECK(objective == doctest::Approx(6.0)); // tr L = 2 (w0 + w1)

    double grad[2];
    REQUIRE(mt_spectral_gradient(linear, g, 0, grad) == MT_OK);
    CHECK(grad[0] == doctest::Approx(2.0));
    CHECK(grad[1] == doctest::Approx(2.0));
    CHECK(mt_spectral_gradient(linear, g, 1, grad) == MT_ERR_PRECONDITION);

    mt_matrix* l = nullptr;
    REQUIRE(mt_graph_laplacian(g, &l) == MT_OK);
    CHECK(mt_matrix_dim(l) == 3);
    mt_matrix_free(l);

    const double fresh[2] = {3.0, 3.0};
    REQUIRE(mt_graph_set_weights(g, fresh, 2) == MT_OK);
    REQUIRE(mt_spectral_objective(linear, g, 0, &objective) == MT_OK);
    CHECK(objective == doctest::Approx(12.0));

    // invalid graphs come back as status codes, not crashes
    const int self_loop[2] = {1, 1};
    mt_graph* bad = nullptr;
    CHECK(mt_graph_create(2, 1, self_loop, weights, &bad) == MT_ERR_INVALID_ARGUMENT);

    const TempFile file("graph.txt", "2 1\n0 1 3.0\n");
    mt_graph* from_file = nullptr;
    REQUIRE(mt_graph_read(file.path.c_str(), &from_file) == MT_OK);
    REQUIRE(mt_spectral_objective(linear, from_file, 0, &objective) == MT_OK);
    CHECK(objective == doctest::Approx(6.0));
    mt_graph_free(from_file);

    mt_function_free(linear);
    mt_graph_free(g);
}

TEST_CASE("projection and minimization through the C API") {
    const double w[2] = {1.0, 1.0};
    double out[2];
    REQUIRE(mt_project(w, 2, nullptr, nullptr, 1, 4.0, out) == MT_OK);
    CHECK(out[0] == doctest::Approx(2.0));
    CHECK(out[1] == doctest::Approx(2.0));

    const int endpoints[4] = {0, 1, 1, 2};
    const double weights[2] = {1.7, 0.3};
    mt_graph* g = nullptr;
    REQUIRE(mt_graph_create(3, 2, endpoints, weights, &g) == MT_OK);
    mt_function* f = nullptr;
    REQUIRE(mt_function_parse("x1^2", 1, &f) == MT_OK);

    mt_opt_options opts;
    mt_opt_options_default(&opts);
    opts.declared_convex = 1;
    mt_opt_result* result = nullptr;
    REQUIRE(mt_minimize(f, g, 0, nullptr, nullptr, 1, 2.0, &opts, &result) == MT_OK);
    CHECK(mt_opt_result_status(result) == 0);
    CHECK(std::string(mt_opt_result_status_name(result)) == "converged");
    CHECK(mt_opt_result_grad_map_norm(result) <= 1e-7);
    CHECK(mt_opt_result_convexity_certified(result) == 1);
    double final_w[2];
    mt_opt_result_weights(result, final_w);
    CHECK(final_w[0] == doctest::Approx(1.0).epsilon(1e-3));
    const int hist_len = mt_opt_result_history_len(result);
    REQUIRE(hist_len >= 1);
    std::vector<double> history(static_cast<std::size_t>(hist_len));
    mt_opt_result_history(result, history.data());
    for (int k = 1; k < hist_len; ++k)
        CHECK(history[static_cast<std::size_t>(k)] <= history[static_cast<std::size_t>(k - 1)] + 1e-12);

    mt_opt_result_free(result);
    mt_function_free(f);
    mt_graph_free(g);
}

TEST_CASE("check suites return parseable reports and selftests fail") {
    char* json_text = nullptr;
    long long failures = -1;
    REQUIRE(mt_check_suite("monotone", nullptr, 3, 25, 7, 0, &failures, &json_text) == MT_OK);
    REQUIRE(json_text != nullptr);
    const nlohmann::json doc = nlohmann::json::parse(json_text);
    REQUIRE(doc.is_array());
    CHECK(doc.at(0).at("property") == "monotone_trace");
    CHECK(doc.at(0).at("failures").get<long long>() == 0);
    CHECK(failures == 0);
    mt_string_free(json_text);

    REQUIRE(mt_check_suite("monotone", nullptr, 3, 25, 7, 1, &failures, &json_text) == MT_OK);
    CHECK(failures > 0);
    mt_string_free(json_text);

    CHECK(mt_check_suite("nope", nullptr, 3, 25, 7, 0, &failures, &json_text) ==
          MT_ERR_INVALID_ARGUMENT);

    // single-instance oracle entry point
    mt_matrix *a = nullptr, *b = nullptr;
    REQUIRE(mt_matrix_random_symmetric(3, 5, 1.0, &a) == MT_OK);
    REQUIRE(mt_matrix_random_symmetric(3, 6, 1.0, &b) == MT_OK);
    mt_function* f = nullptr;
    REQUIRE(mt_function_parse("x1 * x2", 2, &f) == MT_OK);
    const mt_matrix* pair[2] = {a, b};
    REQUIRE(mt_check_oracle(f, pair, 2, &json_text) == MT_OK);
    const nlohmann::json report = nlohmann::json::parse(json_text);
    CHECK(report.at("failures").get<long long>() == 0);
    mt_string_free(json_text);
    mt_function_free(f);
    mt_matrix_free(b);
    mt_matrix_free(a);
}

TEST_CASE("library version string") {
    CHECK(std::string(mt_version()).find('.') != std::string::npos);
}
