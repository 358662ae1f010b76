// Command-line front end. Talks to the core exclusively through the C API in
// mattrace_c.h; all numerics live behind the shared library boundary.
#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <iostream>
#include <memory>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "mattrace/mattrace_c.h"

namespace {

using nlohmann::json;

// exit codes: 0 success, 1 input error, 2 numerical failure, 3 check failure
int exit_code_for(mt_status status) {
    switch (status) {
        case MT_OK: return 0;
        case MT_ERR_DOMAIN:
        case MT_ERR_NUMERIC: return 2;
        default: return 1;
    }
}

[[noreturn]] void die(mt_status status, const std::string& context) {
    std::cerr << "error";
    if (!context.empty()) std::cerr << " (" << context << ")";
    std::cerr << ": " << mt_last_error() << "\n";
    std::exit(exit_code_for(status));
}

void check_ok(mt_status status, const std::string& context) {
    if (status != MT_OK) die(status, context);
}

struct FunctionHandle {
    mt_function* f = nullptr;
    ~FunctionHandle() { mt_function_free(f); }
};

struct GraphHandle {
    mt_graph* g = nullptr;
    ~GraphHandle() { mt_graph_free(g); }
};

struct MatrixHandle {
    mt_matrix* m = nullptr;
    MatrixHandle() = default;
    explicit MatrixHandle(mt_matrix* p) : m(p) {}
    MatrixHandle(MatrixHandle&& other) noexcept : m(other.m) { other.m = nullptr; }
    MatrixHandle& operator=(MatrixHandle&& other) noexcept {
        std::swap(m, other.m);
        return *this;
    }
    MatrixHandle(const MatrixHandle&) = delete;
    MatrixHandle& operator=(const MatrixHandle&) = delete;
    ~MatrixHandle() { mt_matrix_free(m); }
};

// shared --function/--arity/--domain options
struct FunctionSpec {
    std::string text;
    int arity = 0;
    std::string domain; // comma-separated annotations, one per variable or one for all
};

void add_function_options(CLI::App* cmd, FunctionSpec& spec, bool required) {
    auto* f = cmd->add_option("--function", spec.text, "Scalar function, e.g. \"x1^3 * x2^5\"");
    auto* a = cmd->add_option("--arity", spec.arity, "Number of variables in the function");
    cmd->add_option("--domain", spec.domain,
                    "Per-variable domain: pos, nonneg, real or (a,b] syntax, comma separated");
    if (required) {
        f->required();
        a->required();
    }
}

FunctionHandle make_function(const FunctionSpec& spec) {
    FunctionHandle h;
    check_ok(mt_function_parse(spec.text.c_str(), spec.arity, &h.f), "--function");
    if (!spec.domain.empty()) {
        std::vector<std::string> parts;
        std::stringstream ss(spec.domain);
        std::string item;
        while (std::getline(ss, item, ',')) parts.push_back(item);
        if (parts.size() == 1)
            parts.assign(static_cast<std::size_t>(spec.arity), parts.front());
        if (parts.size() != static_cast<std::size_t>(spec.arity)) {
            std::cerr << "error: --domain needs one annotation per variable (or a single one)\n";
            std::exit(1);
        }
        for (int k = 0; k < spec.arity; ++k)
            check_ok(mt_function_set_domain(h.f, k + 1, parts[static_cast<std::size_t>(k)].c_str()),
                     "--domain");
    }
    return h;
}

void emit(const std::string& text, const std::string& output_path) {
    if (output_path.empty()) {
        std::cout << text;
        return;
    }
    std::ofstream out(output_path);
    if (!out) {
        std::cerr << "error: cannot write output file '" << output_path << "'\n";
        std::exit(1);
    }
    out << text;
}

void emit_json(const json& doc, const std::string& output_path) {
    emit(doc.dump(2) + "\n", output_path);
}

std::vector<double> laplacian_eigenvalues(mt_graph* g) {
    MatrixHandle l;
    check_ok(mt_graph_laplacian(g, &l.m), "laplacian");
    std::vector<double> eigs(static_cast<std::size_t>(mt_matrix_dim(l.m)));
    check_ok(mt_matrix_eigenvalues(l.m, eigs.data()), "eigenvalues");
    return eigs;
}

// --- eval ---------------------------------------------------------------------

int run_eval(const FunctionSpec& fspec, const std::string& graph_path,
             const std::vector<std::string>& matrix_paths, int exclude_smallest,
             const std::string& output_path) {
    const FunctionHandle f = make_function(fspec);
    json doc;
    doc["command"] = "eval";
    if (!graph_path.empty()) {
        GraphHandle g;
        check_ok(mt_graph_read(graph_path.c_str(), &g.g), graph_path);
        double objective = 0.0;
        check_ok(mt_spectral_objective(f.f, g.g, exclude_smallest, &objective), "objective");
        doc["objective"] = objective;
        doc["eigenvalues"] = laplacian_eigenvalues(g.g);
    } else {
        std::vector<MatrixHandle> mats;
        std::vector<const mt_matrix*> raw;
        json eigs = json::array();
        for (const std::string& path : matrix_paths) {
            mt_matrix* m = nullptr;
            check_ok(mt_matrix_read(path.c_str(), &m), path);
            mats.emplace_back(m);
            raw.push_back(m);
            std::vector<double> lambda(static_cast<std::size_t>(mt_matrix_dim(m)));
            check_ok(mt_matrix_eigenvalues(m, lambda.data()), path);
            eigs.push_back(lambda);
        }
        double objective = 0.0;
        check_ok(mt_trace_matfun(f.f, raw.data(), static_cast<int>(raw.size()), &objective),
                 "trace");
        doc["objective"] = objective;
        doc["eigenvalues"] = eigs;
    }
    emit_json(doc, output_path);
    return 0;
}

// --- grad ---------------------------------------------------------------------

int run_grad(const FunctionSpec& fspec, const std::string& graph_path, bool fd_check,
             const std::string& output_path) {
    const FunctionHandle f = make_function(fspec);
    GraphHandle g;
    check_ok(mt_graph_read(graph_path.c_str(), &g.g), graph_path);
    const int edges = mt_graph_edge_count(g.g);

    double objective = 0.0;
    check_ok(mt_spectral_objective(f.f, g.g, 0, &objective), "objective");
    std::vector<double> grad(static_cast<std::size_t>(edges));
    check_ok(mt_spectral_gradient(f.f, g.g, 0, grad.data()), "gradient");

    json doc;
    doc["command"] = "grad";
    doc["objective"] = objective;
    doc["gradient"] = grad;

    if (fd_check) {
        std::vector<double> weights(static_cast<std::size_t>(edges));
        for (int e = 0; e < edges; ++e)
            mt_graph_edge(g.g, e, nullptr, nullptr, &weights[static_cast<std::size_t>(e)]);
        double max_rel = 0.0;
        for (int e = 0; e < edges; ++e) {
            const double w = weights[static_cast<std::size_t>(e)];
            const double h = 1e-6 * std::max(1.0, w);
            std::vector<double> probe = weights;
            probe[static_cast<std::size_t>(e)] = w + h;
            check_ok(mt_graph_set_weights(g.g, probe.data(), edges), "fd");
            double hi = 0.0;
            check_ok(mt_spectral_objective(f.f, g.g, 0, &hi), "fd");
            probe[static_cast<std::size_t>(e)] = std::max(0.0, w - h);
            check_ok(mt_graph_set_weights(g.g, probe.data(), edges), "fd");
            double lo = 0.0;
            check_ok(mt_spectral_objective(f.f, g.g, 0, &lo), "fd");
            const double fd = (hi - lo) / (h + (w - std::max(0.0, w - h)));
            const double rel = std::abs(grad[static_cast<std::size_t>(e)] - fd) /
                               std::max({1.0, std::abs(fd),
                                         std::abs(grad[static_cast<std::size_t>(e)])});
            max_rel = std::max(max_rel, rel);
        }
        check_ok(mt_graph_set_weights(g.g, weights.data(), edges), "fd");
        doc["fd_check"] = json{{"max_rel_error", max_rel}, {"h", 1e-6}};
    }
    emit_json(doc, output_path);
    return 0;
}

// --- optimize --------------------------------------------------------------------

int run_optimize(const FunctionSpec& fspec, const std::string& graph_path, int exclude_smallest,
                 double lower, double upper, bool has_budget, double budget,
                 const mt_opt_options& opts, bool declared_convex, bool maximize,
                 const std::string& output_path) {
    const FunctionHandle f = make_function(fspec);
    GraphHandle g;
    check_ok(mt_graph_read(graph_path.c_str(), &g.g), graph_path);
    const int edges = mt_graph_edge_count(g.g);

    mt_opt_options options = opts;
    options.declared_convex = declared_convex ? 1 : 0;
    options.maximize = maximize ? 1 : 0;

    const std::vector<double> lo(static_cast<std::size_t>(edges), lower);
    const std::vector<double> hi(static_cast<std::size_t>(edges), upper);

    mt_opt_result* result = nullptr;
    check_ok(mt_minimize(f.f, g.g, exclude_smallest, lo.data(), hi.data(), has_budget ? 1 : 0,
                         budget, &options, &result),
             "optimize");

    std::vector<double> weights(static_cast<std::size_t>(edges));
    mt_opt_result_weights(result, weights.data());
    std::vector<double> history(static_cast<std::size_t>(mt_opt_result_history_len(result)));
    mt_opt_result_history(result, history.data());

    json doc;
    doc["command"] = "optimize";
    doc["weights"] = weights;
    doc["objective_history"] = history;
    doc["grad_map_norm"] = mt_opt_result_grad_map_norm(result);
    doc["iterations"] = mt_opt_result_iterations(result);
    doc["status"] = mt_opt_result_status_name(result);
    doc["convexity_certified"] = mt_opt_result_convexity_certified(result) != 0;
    mt_opt_result_free(result);

    emit_json(doc, output_path);
    return 0;
}

// --- check ----------------------------------------------------------------------

int run_check(const std::string& suite, const FunctionSpec& fspec, int dim, int trials,
              std::uint64_t seed, bool selftest, const std::string& output_path) {
    FunctionHandle f;
    if (!fspec.text.empty()) f = make_function(fspec);

    char* json_text = nullptr;
    long long failures = 0;
    check_ok(mt_check_suite(suite.c_str(), f.f, dim, trials, seed, selftest ? 1 : 0, &failures,
                            &json_text),
             "check");
    json doc;
    doc["command"] = "check";
    doc["suite"] = suite;
    doc["seed"] = seed;
    doc["selftest"] = selftest;
    doc["failures"] = failures;
    doc["reports"] = json::parse(json_text);
    mt_string_free(json_text);

    emit_json(doc, output_path);
    return failures > 0 ? 3 : 0;
}

// --- bench ----------------------------------------------------------------------

double median_ms(std::vector<double> samples) {
    std::sort(samples.begin(), samples.end());
    const std::size_t k = samples.size();
    return k % 2 ? samples[k / 2] : 0.5 * (samples[k / 2 - 1] + samples[k / 2]);
}

std::string default_bench_function(int m) {
    std::string text = "x1";
    for (int k = 2; k <= m; ++k) text += " * x" + std::to_string(k);
    return m == 1 ? "x1^2" : text;
}

int run_bench(const FunctionSpec& fspec, std::vector<int> ns, std::vector<int> ms, int repeats,
              long long dense_cap, std::uint64_t seed, const std::string& output_path) {
    if (ns.empty()) ns = {4, 8, 16, 32};
    if (ms.empty()) ms = {1, 2};
    if (repeats < 1) repeats = 1;

    std::ostringstream csv;
    csv << "n,m,dense_ms,eigsum_ms,ratio\n";

    for (const int m : ms) {
        FunctionSpec spec = fspec;
        if (spec.text.empty()) {
            spec.text = default_bench_function(m);
            spec.arity = m;
        } else if (spec.arity != m) {
            continue; // a user-supplied function only fits rows with m == arity
        }
        const FunctionHandle f = make_function(spec);

        for (const int n : ns) {
            std::vector<MatrixHandle> mats;
            std::vector<const mt_matrix*> raw;
            for (int l = 0; l < m; ++l) {
                mt_matrix* mat = nullptr;
                check_ok(mt_matrix_random_symmetric(
                             n, seed + 1000ULL * static_cast<std::uint64_t>(n) +
                                    static_cast<std::uint64_t>(10 * m + l),
                             1.0, &mat),
                         "bench instance");
                mats.emplace_back(mat);
                raw.push_back(mat);
            }

            auto time_once = [&](auto&& call) {
                const auto start = std::chrono::steady_clock::now();
                call();
                const auto stop = std::chrono::steady_clock::now();
                return std::chrono::duration<double, std::milli>(stop - start).count();
            };

            double eigsum_value = 0.0;
            auto eigsum_call = [&] {
                check_ok(mt_trace_matfun(f.f, raw.data(), m, &eigsum_value), "eigsum");
            };
            eigsum_call(); // warmup
            std::vector<double> eig_ms;
            for (int r = 0; r < repeats; ++r) eig_ms.push_back(time_once(eigsum_call));
            const double eigsum_med = median_ms(eig_ms);

            bool dense_possible = true;
            double nm = 1.0;
            for (int l = 0; l < m; ++l) nm *= n;
            if (nm > static_cast<double>(dense_cap)) dense_possible = false;

            csv << n << ',' << m << ',';
            if (dense_possible) {
                double dense_value = 0.0;
                auto dense_call = [&] {
                    check_ok(mt_trace_matfun_dense(f.f, raw.data(), m, dense_cap, &dense_value),
                             "dense");
                };
                dense_call(); // warmup
                std::vector<double> dense_ms;
                for (int r = 0; r < repeats; ++r) dense_ms.push_back(time_once(dense_call));
                const double dense_med = median_ms(dense_ms);

                if (std::abs(dense_value - eigsum_value) >
                    1e-9 * std::max(1.0, std::abs(eigsum_value))) {
                    std::cerr << "error: dense and eigsum objectives disagree at n=" << n
                              << " m=" << m << " (" << dense_value << " vs " << eigsum_value
                              << ")\n";
                    return 2;
                }
                csv << dense_med << ',' << eigsum_med << ','
                    << (eigsum_med > 0.0 ? dense_med / eigsum_med : 0.0) << '\n';
            } else {
                csv << ',' << eigsum_med << ",\n"; // dense column absent past the cap
            }
        }
    }
    emit(csv.str(), output_path);
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Trace functionals of matrix tuples and spectral objectives on weighted graphs"};
    app.require_subcommand(1);
    app.set_version_flag("--version", std::string(mt_version()));

    std::string output_path;
    std::string graph_path;
    std::vector<std::string> matrix_paths;
    FunctionSpec fspec;
    int exclude_smallest = 0;
    std::uint64_t seed = 1;

    // eval
    auto* eval = app.add_subcommand("eval", "Evaluate the objective on a graph or matrix tuple");
    eval->set_config("--config", "", "Flat key=value config file; flags override it");
    add_function_options(eval, fspec, true);
    eval->add_option("--graph", graph_path, "Graph file (header 'n m', lines 'i j w')");
    eval->add_option("--matrix", matrix_paths, "Matrix file (may repeat, one per variable)");
    eval->add_option("--exclude-smallest", exclude_smallest,
                     "Drop this many smallest Laplacian eigenvalues from every index position");
    eval->add_option("--output", output_path, "Write the JSON result here instead of stdout");
    eval->callback([&] {
        if (graph_path.empty() == matrix_paths.empty()) {
            std::cerr << "error: eval needs exactly one input source: --graph or --matrix\n";
            std::exit(1);
        }
        if (!matrix_paths.empty() && exclude_smallest != 0) {
            std::cerr << "error: --exclude-smallest applies to graph objectives only\n";
            std::exit(1);
        }
        if (!matrix_paths.empty() &&
            static_cast<int>(matrix_paths.size()) != fspec.arity) {
            std::cerr << "error: got " << matrix_paths.size() << " matrices for arity "
                      << fspec.arity << "\n";
            std::exit(1);
        }
        std::exit(run_eval(fspec, graph_path, matrix_paths, exclude_smallest, output_path));
    });

    // grad
    bool fd_check = false;
    auto* grad = app.add_subcommand("grad", "Gradient of the objective in the edge weights");
    grad->set_config("--config", "", "Flat key=value config file; flags override it");
    add_function_options(grad, fspec, true);
    grad->add_option("--graph", graph_path, "Graph file")->required();
    grad->add_flag("--fd-check", fd_check, "Cross-check against central finite differences");
    grad->add_option("--output", output_path, "Write the JSON result here instead of stdout");
    grad->callback([&] { std::exit(run_grad(fspec, graph_path, fd_check, output_path)); });

    // optimize
    double lower = 0.0;
    double upper = std::numeric_limits<double>::infinity();
    double budget = 0.0;
    bool maximize = false;
    bool declared_convex = false;
    mt_opt_options opts;
    mt_opt_options_default(&opts);
    auto* optimize = app.add_subcommand("optimize", "Projected-gradient weight optimization");
    optimize->set_config("--config", "", "Flat key=value config file; flags override it");
    add_function_options(optimize, fspec, true);
    optimize->add_option("--graph", graph_path, "Graph file")->required();
    optimize->add_option("--exclude-smallest", exclude_smallest,
                         "Rejected when nonzero: the truncated objective has no gradient");
    optimize->add_option("--lower", lower, "Per-edge lower bound (default 0)");
    optimize->add_option("--upper", upper, "Per-edge upper bound (default +inf)");
    auto* budget_opt =
        optimize->add_option("--budget", budget, "Total-weight equality sum(w) = budget");
    optimize->add_option("--step0", opts.step0, "Initial line-search step");
    optimize->add_option("--shrink", opts.shrink, "Backtracking shrink factor in (0,1)");
    optimize->add_option("--tol", opts.tol, "Projected-gradient-norm stopping tolerance");
    optimize->add_option("--max-iter", opts.max_iter, "Iteration cap");
    optimize->add_flag("--maximize", maximize, "Maximize instead of minimize");
    optimize->add_flag("--convex", declared_convex,
                       "Declare f convex; certified after a sampled midpoint check");
    optimize->add_option("--seed", seed, "Seed for the convexity spot check");
    optimize->add_option("--output", output_path, "Write the JSON result here instead of stdout");
    optimize->callback([&] {
        opts.seed = seed;
        std::exit(run_optimize(fspec, graph_path, exclude_smallest, lower, upper,
                               static_cast<bool>(*budget_opt), budget, opts, declared_convex,
                               maximize, output_path));
    });

    // check
    std::string suite = "all";
    int dim = 3;
    int trials = 200;
    bool selftest = false;
    auto* check = app.add_subcommand("check", "Randomized property suites for the trace theorems");
    check->set_config("--config", "", "Flat key=value config file; flags override it");
    add_function_options(check, fspec, false);
    check->add_option("--suite", suite,
                      "oracle | monotone | convex | derivative | parameterization | all");
    check->add_option("--dim", dim, "Matrix dimension for generated instances");
    check->add_option("--trials", trials, "Trials per suite");
    check->add_option("--seed", seed, "Seed for instance generation");
    check->add_flag("--selftest", selftest,
                    "Run the canonical counterexample; a healthy build reports failures");
    check->add_option("--output", output_path, "Write the JSON result here instead of stdout");
    check->callback([&] {
        if (!fspec.text.empty() && fspec.arity < 1) {
            std::cerr << "error: --function requires --arity\n";
            std::exit(1);
        }
        std::exit(run_check(suite, fspec, dim, trials, seed, selftest, output_path));
    });

    // bench
    std::vector<int> ns, ms;
    int repeats = 5;
    long long dense_cap = 512;
    auto* bench = app.add_subcommand("bench", "Time the dense construction against the eigensum");
    bench->set_config("--config", "", "Flat key=value config file; flags override it");
    add_function_options(bench, fspec, false);
    bench->add_option("--n", ns, "Matrix dimensions (default 4 8 16 32)");
    bench->add_option("--m", ms, "Tuple arities (default 1 2)");
    bench->add_option("--repeats", repeats, "Timing repeats per cell (median reported)");
    bench->add_option("--dense-cap", dense_cap, "n^m cap for the dense column");
    bench->add_option("--seed", seed, "Seed for the random instances");
    bench->add_option("--output", output_path, "Write the CSV here instead of stdout");
    bench->callback([&] {
        if (!fspec.text.empty() && fspec.arity < 1) {
            std::cerr << "error: --function requires --arity\n";
            std::exit(1);
        }
        std::exit(run_bench(fspec, ns, ms, repeats, dense_cap, seed, output_path));
    });

    CLI11_PARSE(app, argc, argv);
    return 0;
}
