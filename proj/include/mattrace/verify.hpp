#ifndef MATTRACE_VERIFY_HPP
#define MATTRACE_VERIFY_HPP

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "mattrace/tensor_ext.hpp"

namespace mattrace {

// Outcome of a randomized property check. Violations are measured as positive
// slack past the check's tolerance, so worst_violation <= 0 whenever
// failures == 0. On failure, witness holds a near-threshold failing instance
// found by bisecting the perturbation magnitude (at most 20 steps).
struct PropertyReport {
    std::string property;
    long long trials = 0;
    long long failures = 0;
    double worst_violation = 0.0;
    std::uint64_t seed = 0;
    std::optional<nlohmann::json> witness;

    bool passed() const { return failures == 0; }
};

nlohmann::json report_to_json(const PropertyReport& r);
PropertyReport report_from_json(const nlohmann::json& j);

inline constexpr double kInequalityTol = 1e-9;
inline constexpr double kDerivativeTol = 1e-5;

// tr(dense oracle) vs the eigenvalue multi-sum on one tuple;
// violation = relative discrepancy - 1e-9.
PropertyReport check_oracle_equivalence(const ScalarFunction& f, const MatrixTuple& T,
                                        long long dense_cap = kDenseCap);

// Random PSD increments on top of base; for f monotone increasing the trace
// must not decrease. Increments are scaled to keep spectra inside f's domain;
// trials whose headroom vanishes are skipped but still counted.
PropertyReport check_monotone(const ScalarFunction& f, const MatrixTuple& base, int trials,
                              std::uint64_t seed);

// Random tuple pairs with spectra inside f's domain; convex mixing at each
// alpha must not beat the chord.
PropertyReport check_convex(const ScalarFunction& f, int dim, int pairs,
                            std::span<const double> alphas, std::uint64_t seed);

// trace_matfun_derivative against central finite differences along the affine
// path tuple + t * rates at each t sample; violation = relative error - 1e-5.
PropertyReport check_derivative(const ScalarFunction& f, const DerivativeInput& path,
                                std::span<const double> t_samples, double h = 1e-5);

enum class ParamKind { monotone, convex };

// M(t) = C + t D (affine) or C + t^2 D (quadratic).
struct MatrixPath {
    SymMatrix C;
    SymMatrix D;
    bool quadratic = false;

    SymMatrix at(double t) const;
};

// Loewner-order checks of the parameterization across sampled t pairs:
// monotone kind requires M(t2) >= M(t1) for t2 >= t1, convex kind requires
// alpha M(t1) + (1-alpha) M(t2) >= M(alpha t1 + (1-alpha) t2).
PropertyReport check_parameterization(ParamKind kind, const MatrixPath& path,
                                      std::span<const double> t_samples);

// --- suite drivers (CLI `check` subcommand) ---------------------------------

struct SuiteConfig {
    int dim = 3;
    int trials = 200;
    std::uint64_t seed = 1;
    bool selftest = false; // run the canonical counterexample instead
    std::optional<ScalarFunction> f;
};

// name: oracle | monotone | convex | derivative | parameterization | all
std::vector<PropertyReport> run_suite(const std::string& name, const SuiteConfig& config);

} // namespace mattrace

#endif
