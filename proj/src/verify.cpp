#include "mattrace/verify.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>

#include "mattrace/rng.hpp"

namespace mattrace {

namespace {

using nlohmann::json;

json mat_to_json(const SymMatrix& M) {
    json rows = json::array();
    for (int i = 0; i < M.dim(); ++i) {
        json row = json::array();
        for (int j = 0; j < M.dim(); ++j) row.push_back(M(i, j));
        rows.push_back(std::move(row));
    }
    return rows;
}

json mats_to_json(const std::vector<SymMatrix>& mats) {
    json arr = json::array();
    for (const SymMatrix& m : mats) arr.push_back(mat_to_json(m));
    return arr;
}

// One bisection probe: violation (positive = failing) plus the witness
// payload for that scale, or nullopt when the scaled instance cannot be
// evaluated (left the domain).
using Probe = std::function<std::optional<std::pair<double, json>>(double)>;

// Shrink the perturbation toward zero to find a near-threshold witness.
// scale 1 is the observed failure; scale 0 must not violate.
json bisect_witness(const Probe& probe, double violation_at_one, json instance_at_one) {
    double lo = 0.0, hi = 1.0;
    json best = std::move(instance_at_one);
    best["scale"] = 1.0;
    best["violation"] = violation_at_one;
    for (int step = 0; step < 20; ++step) {
        const double mid = 0.5 * (lo + hi);
        const auto probed = probe(mid);
        if (probed && probed->first > 0.0) {
            hi = mid;
            best = probed->second;
            best["scale"] = mid;
            best["violation"] = probed->first;
        } else {
            lo = mid;
        }
    }
    return best;
}

// Sampling window inside an interval, kept O(1)-scaled so the absolute 1e-9
// slack stays meaningful (instances normalized well below ||M||_max = 10).
std::pair<double, double> sampling_box(const Interval& iv) {
    double a = std::max(iv.lo, -10.0);
    double b = std::min(iv.hi, 10.0);
    if (b - a > 6.0) {
        if (a <= -3.0 && b >= 3.0) {
            a = -3.0;
            b = 3.0;
        } else if (a > -3.0) {
            b = a + 6.0;
        } else {
            a = b - 6.0;
        }
    }
    const double w = b - a;
    return {a + 0.05 * w, b - 0.05 * w};
}

Eigen::MatrixXd random_gaussian_sym(Rng& rng, int n) {
    Eigen::MatrixXd g(n, n);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) g(i, j) = rng.normal();
    return (g + g.transpose()) / 2.0;
}

// Shift-and-scale a random Gaussian symmetric matrix so its spectrum lies in
// [a + 5% width, b - 5% width].
SymMatrix random_sym_in(Rng& rng, int n, double a, double b) {
    const Eigen::MatrixXd g = random_gaussian_sym(rng, n);
    const Spectrum s = eig_sym(SymMatrix(g));
    const double g_lo = s.eigenvalues(0), g_hi = s.eigenvalues(n - 1);
    const double width = b - a;
    const double lo = a + 0.05 * width, hi = b - 0.05 * width;
    if (g_hi - g_lo < 1e-12)
        return SymMatrix(0.5 * (lo + hi) * Eigen::MatrixXd::Identity(n, n));
    const double alpha = (hi - lo) / (g_hi - g_lo);
    return SymMatrix(alpha * (g - g_lo * Eigen::MatrixXd::Identity(n, n)) +
                     lo * Eigen::MatrixXd::Identity(n, n));
}

SymMatrix random_psd(Rng& rng, int n) {
    Eigen::MatrixXd a(n, n);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) a(i, j) = rng.normal();
    return SymMatrix(a.transpose() * a);
}

PropertyReport merge_reports(std::string property, std::uint64_t seed,
                             const std::vector<PropertyReport>& parts) {
    PropertyReport out;
    out.property = std::move(property);
    out.seed = seed;
    out.worst_violation = std::numeric_limits<double>::lowest();
    for (const PropertyReport& p : parts) {
        out.trials += p.trials;
        out.failures += p.failures;
        out.worst_violation = std::max(out.worst_violation, p.worst_violation);
        if (!out.witness && p.witness) out.witness = p.witness;
    }
    if (parts.empty()) out.worst_violation = 0.0;
    return out;
}

} // namespace

json report_to_json(const PropertyReport& r) {
    json j{{"property", r.property},
           {"trials", r.trials},
           {"failures", r.failures},
           {"worst_violation", r.worst_violation},
           {"seed", r.seed}};
    if (r.witness) j["witness"] = *r.witness;
    return j;
}

PropertyReport report_from_json(const json& j) {
    PropertyReport r;
    r.property = j.at("property").get<std::string>();
    r.trials = j.at("trials").get<long long>();
    r.failures = j.at("failures").get<long long>();
    r.worst_violation = j.at("worst_violation").get<double>();
    r.seed = j.at("seed").get<std::uint64_t>();
    if (j.contains("witness")) r.witness = j.at("witness");
    return r;
}

PropertyReport check_oracle_equivalence(const ScalarFunction& f, const MatrixTuple& T,
                                        long long dense_cap) {
    PropertyReport report;
    report.property = "oracle_equivalence";
    report.trials = 1;

    auto discrepancy = [&](const MatrixTuple& tuple) {
        const double eigsum = trace_matfun_multi(f, tuple);
        const double dense = matfun_multi_dense(f, tuple, dense_cap).trace();
        const double viol =
            std::abs(dense - eigsum) / std::max(1.0, std::abs(eigsum)) - kInequalityTol;
        json inst{{"f", f.to_string()},
                  {"matrices", mats_to_json(tuple.mats())},
                  {"dense_trace", dense},
                  {"eigsum_trace", eigsum}};
        return std::make_pair(viol, std::move(inst));
    };

    auto [violation, instance] = discrepancy(T);
    report.worst_violation = violation;
    if (violation > 0.0) {
        report.failures = 1;
        Probe probe = [&](double s) -> std::optional<std::pair<double, json>> {
            std::vector<SymMatrix> scaled;
            scaled.reserve(T.mats().size());
            for (const SymMatrix& m : T.mats()) scaled.emplace_back(s * m.mat());
            try {
                return discrepancy(MatrixTuple(std::move(scaled)));
            } catch (const Error&) {
                return std::nullopt;
            }
        };
        report.witness = bisect_witness(probe, violation, std::move(instance));
    }
    return report;
}

PropertyReport check_monotone(const ScalarFunction& f, const MatrixTuple& base, int trials,
                              std::uint64_t seed) {
    PropertyReport report;
    report.property = "monotone_trace";
    report.seed = seed;
    report.worst_violation = std::numeric_limits<double>::lowest();

    const int m = base.arity();
    const int n = base.dim();
    const double f_base = trace_matfun_multi(f, base);
    Rng rng(seed);

    for (int trial = 0; trial < trials; ++trial) {
        ++report.trials;

        // PSD increments scaled so spectra stay inside the domain intervals
        std::vector<SymMatrix> increments;
        bool headroom_ok = true;
        for (int l = 0; l < m; ++l) {
            const SymMatrix delta = random_psd(rng, n);
            const double delta_top = eig_sym(delta).eigenvalues(n - 1);
            const double base_top = eig_sym(base.at(l)).eigenvalues(n - 1);
            const Interval& iv = f.domain(l + 1);
            double headroom =
                std::isfinite(iv.hi) ? (iv.hi - base_top) * 0.9 : 1.5; // keep O(1)-scaled
            headroom = std::min(headroom, 1.5);
            if (headroom <= 1e-9 || delta_top <= 0.0) {
                headroom_ok = false;
                break;
            }
            const double scale = rng.uniform(0.1, 1.0) * headroom / delta_top;
            increments.emplace_back(scale * delta.mat());
        }
        if (!headroom_ok) continue; // domain escape: trial skipped but counted

        auto violation_at = [&](double s) -> std::optional<std::pair<double, json>> {
            std::vector<SymMatrix> bumped;
            bumped.reserve(static_cast<std::size_t>(m));
            for (int l = 0; l < m; ++l)
                bumped.emplace_back(base.at(l).mat() + s * increments[static_cast<std::size_t>(l)].mat());
            try {
                const double f_bumped = trace_matfun_multi(f, MatrixTuple(std::move(bumped)));
                const double viol = f_base - f_bumped - kInequalityTol;
                json inst{{"f", f.to_string()},
                          {"base", mats_to_json(base.mats())},
                          {"increments", mats_to_json(increments)},
                          {"trace_base", f_base},
                          {"trace_bumped", f_bumped}};
                return std::make_pair(viol, std::move(inst));
            } catch (const Error&) {
                return std::nullopt;
            }
        };

        const auto outcome = violation_at(1.0);
        if (!outcome) continue; // skipped, still counted
        report.worst_violation = std::max(report.worst_violation, outcome->first);
        if (outcome->first > 0.0) {
            ++report.failures;
            if (!report.witness)
                report.witness = bisect_witness(violation_at, outcome->first, outcome->second);
        }
    }
    if (report.trials == 0) report.worst_violation = 0.0;
    return report;
}

PropertyReport check_convex(const ScalarFunction& f, int dim, int pairs,
                            std::span<const double> alphas, std::uint64_t seed) {
    PropertyReport report;
    report.property = "convex_trace";
    report.seed = seed;
    report.worst_violation = std::numeric_limits<double>::lowest();

    const int m = f.arity();
    Rng rng(seed);

    for (int pair_index = 0; pair_index < pairs; ++pair_index) {
        std::vector<SymMatrix> ms, ns;
        for (int l = 0; l < m; ++l) {
            const auto [a, b] = sampling_box(f.domain(l + 1));
            ms.push_back(random_sym_in(rng, dim, a, b));
            ns.push_back(random_sym_in(rng, dim, a, b));
        }
        const double f_m = trace_matfun_multi(f, MatrixTuple(ms));

        for (const double alpha : alphas) {
            ++report.trials;
            // convex mixing cannot leave a convex domain box; a domain error
            // here would be an internal bug and is allowed to propagate
            auto violation_at = [&](double s) -> std::optional<std::pair<double, json>> {
                std::vector<SymMatrix> shifted, mixed;
                for (int l = 0; l < m; ++l) {
                    const Eigen::MatrixXd target =
                        ms[static_cast<std::size_t>(l)].mat() +
                        s * (ns[static_cast<std::size_t>(l)].mat() -
                             ms[static_cast<std::size_t>(l)].mat());
                    shifted.emplace_back(target);
                    mixed.emplace_back(alpha * ms[static_cast<std::size_t>(l)].mat() +
                                       (1.0 - alpha) * target);
                }
                json inst{{"f", f.to_string()},
                          {"alpha", alpha},
                          {"m_tuple", mats_to_json(ms)},
                          {"n_tuple", mats_to_json(shifted)}};
                const double f_shifted = trace_matfun_multi(f, MatrixTuple(std::move(shifted)));
                const double f_mixed = trace_matfun_multi(f, MatrixTuple(std::move(mixed)));
                const double viol =
                    f_mixed - alpha * f_m - (1.0 - alpha) * f_shifted - kInequalityTol;
                inst["trace_m"] = f_m;
                inst["trace_n"] = f_shifted;
                inst["trace_mix"] = f_mixed;
                return std::make_pair(viol, std::move(inst));
            };

            const auto outcome = violation_at(1.0);
            report.worst_violation = std::max(report.worst_violation, outcome->first);
            if (outcome->first > 0.0) {
                ++report.failures;
                if (!report.witness)
                    report.witness = bisect_witness(violation_at, outcome->first, outcome->second);
            }
        }
    }
    if (report.trials == 0) report.worst_violation = 0.0;
    return report;
}

PropertyReport check_derivative(const ScalarFunction& f, const DerivativeInput& path,
                                std::span<const double> t_samples, double h) {
    PropertyReport report;
    report.property = "derivative_formula";
    report.worst_violation = std::numeric_limits<double>::lowest();
    if (!(h > 0.0)) fail(ErrorCode::invalid_argument, "finite-difference step must be positive");

    const int m = path.tuple.arity();

    auto violation_at = [&](double t,
                            double rate_scale) -> std::optional<std::pair<double, json>> {
        std::vector<SymMatrix> scaled_rates;
        for (int l = 0; l < m; ++l)
            scaled_rates.emplace_back(rate_scale * path.rates[static_cast<std::size_t>(l)].mat());
        auto tuple_at = [&](double s) {
            std::vector<SymMatrix> mats;
            for (int l = 0; l < m; ++l)
                mats.emplace_back(path.tuple.at(l).mat() +
                                  s * scaled_rates[static_cast<std::size_t>(l)].mat());
            return MatrixTuple(std::move(mats));
        };
        try {
            const double analytic =
                trace_matfun_derivative(f, DerivativeInput(tuple_at(t), scaled_rates));
            const double fd = (trace_matfun_multi(f, tuple_at(t + h)) -
                               trace_matfun_multi(f, tuple_at(t - h))) /
                              (2.0 * h);
            const double viol =
                std::abs(analytic - fd) / std::max(1.0, std::abs(fd)) - kDerivativeTol;
            json inst{{"f", f.to_string()},
                      {"t", t},
                      {"h", h},
                      {"base", mats_to_json(path.tuple.mats())},
                      {"rates", mats_to_json(path.rates)},
                      {"analytic", analytic},
                      {"finite_difference", fd}};
            return std::make_pair(viol, std::move(inst));
        } catch (const Error& e) {
            if (e.code() == ErrorCode::domain && rate_scale < 1.0) return std::nullopt;
            throw; // domain violation at t +/- h on the caller's path is an error
        }
    };

    for (const double t : t_samples) {
        ++report.trials;
        const auto outcome = violation_at(t, 1.0);
        report.worst_violation = std::max(report.worst_violation, outcome->first);
        if (outcome->first > 0.0) {
            ++report.failures;
            if (!report.witness) {
                Probe probe = [&](double s) { return violation_at(t, s); };
                report.witness = bisect_witness(probe, outcome->first, outcome->second);
            }
        }
    }
    if (report.trials == 0) report.worst_violation = 0.0;
    return report;
}

SymMatrix MatrixPath::at(double t) const {
    const double factor = quadratic ? t * t : t;
    return SymMatrix(C.mat() + factor * D.mat());
}

PropertyReport check_parameterization(ParamKind kind, const MatrixPath& path,
                                      std::span<const double> t_samples) {
    PropertyReport report;
    report.property =
        kind == ParamKind::monotone ? "parameterization_monotone" : "parameterization_convex";
    report.worst_violation = std::numeric_limits<double>::lowest();

    static constexpr double kAlphas[] = {0.25, 0.5, 0.75};

    auto scaled_path = [&](double s) { return MatrixPath{path.C, SymMatrix(s * path.D.mat()), path.quadratic}; };

    auto monotone_violation = [&](double s, double t1, double t2) {
        const MatrixPath p = scaled_path(s);
        const SymMatrix m1 = p.at(t1), m2 = p.at(t2);
        const double lambda_min = eig_sym(SymMatrix(m2.mat() - m1.mat())).eigenvalues(0);
        const double viol = -lambda_min - default_psd_tol(m2, m1);
        json inst{{"kind", "monotone"},   {"quadratic", p.quadratic},
                  {"C", mat_to_json(p.C)}, {"D", mat_to_json(p.D)},
                  {"t1", t1},             {"t2", t2}};
        return std::make_pair(viol, std::move(inst));
    };

    auto convex_violation = [&](double s, double t1, double t2, double alpha) {
        const MatrixPath p = scaled_path(s);
        const SymMatrix chord(alpha * p.at(t1).mat() + (1.0 - alpha) * p.at(t2).mat());
        const SymMatrix mid = p.at(alpha * t1 + (1.0 - alpha) * t2);
        const double lambda_min = eig_sym(SymMatrix(chord.mat() - mid.mat())).eigenvalues(0);
        const double viol = -lambda_min - default_psd_tol(chord, mid);
        json inst{{"kind", "convex"},     {"quadratic", p.quadratic},
                  {"C", mat_to_json(p.C)}, {"D", mat_to_json(p.D)},
                  {"t1", t1},             {"t2", t2},
                  {"alpha", alpha}};
        return std::make_pair(viol, std::move(inst));
    };

    for (std::size_t i = 0; i < t_samples.size(); ++i) {
        for (std::size_t j = i + 1; j < t_samples.size(); ++j) {
            const double t1 = std::min(t_samples[i], t_samples[j]);
            const double t2 = std::max(t_samples[i], t_samples[j]);
            if (kind == ParamKind::monotone) {
                ++report.trials;
                auto outcome = monotone_violation(1.0, t1, t2);
                report.worst_violation = std::max(report.worst_violation, outcome.first);
                if (outcome.first > 0.0) {
                    ++report.failures;
                    if (!report.witness) {
                        Probe probe = [&](double s) -> std::optional<std::pair<double, json>> {
                            return monotone_violation(s, t1, t2);
                        };
                        report.witness = bisect_witness(probe, outcome.first, outcome.second);
                    }
                }
            } else {
                for (const double alpha : kAlphas) {
                    ++report.trials;
                    auto outcome = convex_violation(1.0, t1, t2, alpha);
                    report.worst_violation = std::max(report.worst_violation, outcome.first);
                    if (outcome.first > 0.0) {
                        ++report.failures;
                        if (!report.witness) {
                            Probe probe = [&](double s) -> std::optional<std::pair<double, json>> {
                                return convex_violation(s, t1, t2, alpha);
                            };
                            report.witness = bisect_witness(probe, outcome.first, outcome.second);
                        }
                    }
                }
            }
        }
    }
    if (report.trials == 0) report.worst_violation = 0.0;
    return report;
}

// --- suite drivers -----------------------------------------------------------

namespace {

ScalarFunction default_monotone_fn() {
    return parse_function("x1^3 * x2^5", 2)
        .with_domain({Interval::positive(), Interval::positive()});
}

ScalarFunction default_convex_fn() {
    return parse_function("1/(x1^2*x2) + 1/(x1*x2^2)", 2)
        .with_domain({Interval::positive(), Interval::positive()});
}

MatrixTuple random_tuple_in_domain(Rng& rng, const ScalarFunction& f, int dim) {
    std::vector<SymMatrix> mats;
    for (int l = 0; l < f.arity(); ++l) {
        const auto [a, b] = sampling_box(f.domain(l + 1));
        mats.push_back(random_sym_in(rng, dim, a, b));
    }
    return MatrixTuple(std::move(mats));
}

// base tuple in the lower part of the sampling box so PSD increments have room
MatrixTuple random_base_tuple(Rng& rng, const ScalarFunction& f, int dim) {
    std::vector<SymMatrix> mats;
    for (int l = 0; l < f.arity(); ++l) {
        const auto [a, b] = sampling_box(f.domain(l + 1));
        mats.push_back(random_sym_in(rng, dim, a, a + 0.4 * (b - a)));
    }
    return MatrixTuple(std::move(mats));
}

PropertyReport suite_oracle(const SuiteConfig& cfg) {
    if (cfg.selftest) {
        // catastrophic cancellation: x^9 y^9 on a +/-a spectrum has exact
        // trace 0, so the two summation routes disagree far beyond 1e-9
        const ScalarFunction f = parse_function("x1^9 * x2^9", 2);
        Rng rng(cfg.seed);
        std::vector<SymMatrix> mats;
        for (int l = 0; l < 2; ++l) {
            const Eigen::MatrixXd g = random_gaussian_sym(rng, 3);
            const Spectrum s = eig_sym(SymMatrix(g));
            Eigen::VectorXd lambda(3);
            lambda << -12.0, 0.0, 12.0;
            mats.emplace_back(s.vectors * lambda.asDiagonal() * s.vectors.transpose());
        }
        return check_oracle_equivalence(f, MatrixTuple(std::move(mats)));
    }
    const ScalarFunction f = cfg.f ? *cfg.f : parse_function("x1^3 * x2^5", 2);
    Rng rng(cfg.seed);
    std::vector<PropertyReport> parts;
    for (int i = 0; i < cfg.trials; ++i)
        parts.push_back(check_oracle_equivalence(f, random_tuple_in_domain(rng, f, cfg.dim)));
    return merge_reports("oracle_equivalence", cfg.seed, parts);
}

PropertyReport suite_monotone(const SuiteConfig& cfg) {
    if (cfg.selftest) {
        const ScalarFunction f =
            parse_function("-x1", 1).with_domain({Interval::positive()});
        Rng rng(cfg.seed ^ 0x5eedULL);
        return check_monotone(f, random_base_tuple(rng, f, cfg.dim), cfg.trials, cfg.seed);
    }
    const ScalarFunction f = cfg.f ? *cfg.f : default_monotone_fn();
    Rng rng(cfg.seed ^ 0x5eedULL);
    return check_monotone(f, random_base_tuple(rng, f, cfg.dim), cfg.trials, cfg.seed);
}

PropertyReport suite_convex(const SuiteConfig& cfg) {
    static constexpr double kAlphas[] = {0.25, 0.5, 0.75};
    if (cfg.selftest) {
        const ScalarFunction f = parse_function("-(x1^2)", 1); // concave
        return check_convex(f, cfg.dim, cfg.trials, kAlphas, cfg.seed);
    }
    const ScalarFunction f = cfg.f ? *cfg.f : default_convex_fn();
    return check_convex(f, cfg.dim, cfg.trials, kAlphas, cfg.seed);
}

PropertyReport suite_derivative(const SuiteConfig& cfg) {
    static constexpr double kTs[] = {0.0, 0.1, 0.25, 0.4, 0.5};
    if (cfg.selftest) {
        // a step of h = 0.25 on a strongly curved f swamps the 1e-5 gate
        const ScalarFunction f = parse_function("exp(2*x1)", 1);
        Rng rng(cfg.seed ^ 0xd1ffULL);
        std::vector<SymMatrix> base{random_sym_in(rng, cfg.dim, -1.0, 1.0)};
        std::vector<SymMatrix> rates{random_psd(rng, cfg.dim)};
        return check_derivative(f, DerivativeInput(MatrixTuple(std::move(base)), std::move(rates)),
                                kTs, 0.25);
    }
    const ScalarFunction f = cfg.f ? *cfg.f : parse_function("x1 * x2", 2);
    Rng rng(cfg.seed ^ 0xd1ffULL);
    const int m = f.arity();
    std::vector<SymMatrix> base, rates;
    for (int l = 0; l < m; ++l) {
        const auto [a, b] = sampling_box(f.domain(l + 1));
        const double mid = 0.5 * (a + b), radius = 0.2 * (b - a);
        base.push_back(random_sym_in(rng, cfg.dim, mid - radius, mid + radius));
        // rates small enough that t in [0, 0.5] plus the FD probes stay inside
        const Eigen::MatrixXd g = random_gaussian_sym(rng, cfg.dim);
        rates.emplace_back(0.2 * radius * g);
    }
    return check_derivative(f, DerivativeInput(MatrixTuple(std::move(base)), std::move(rates)),
                            kTs, 1e-5);
}

std::vector<PropertyReport> suite_parameterization(const SuiteConfig& cfg) {
    static constexpr double kTs[] = {0.0, 0.4, 0.9, 1.3, 2.0};
    Rng rng(cfg.seed ^ 0x9a7aULL);
    const SymMatrix c(random_gaussian_sym(rng, cfg.dim));
    const SymMatrix d = random_psd(rng, cfg.dim);
    if (cfg.selftest) {
        // sign-flipped parameterization: M(t) = C - t D with D PSD
        const MatrixPath down{c, SymMatrix(-d.mat()), false};
        return {check_parameterization(ParamKind::monotone, down, kTs)};
    }
    const MatrixPath quad{c, d, true}; // C + t^2 D, monotone and convex on t >= 0
    return {check_parameterization(ParamKind::monotone, quad, kTs),
            check_parameterization(ParamKind::convex, quad, kTs)};
}

} // namespace

std::vector<PropertyReport> run_suite(const std::string& name, const SuiteConfig& config) {
    if (name == "oracle") return {suite_oracle(config)};
    if (name == "monotone") return {suite_monotone(config)};
    if (name == "convex") return {suite_convex(config)};
    if (name == "derivative") return {suite_derivative(config)};
    if (name == "parameterization") return suite_parameterization(config);
    if (name == "all") {
        std::vector<PropertyReport> all;
        for (const char* suite : {"oracle", "monotone", "convex", "derivative", "parameterization"})
            for (PropertyReport& r : run_suite(suite, config)) all.push_back(std::move(r));
        return all;
    }
    fail(ErrorCode::invalid_argument,
         "unknown suite '" + name +
             "' (expected oracle, monotone, convex, derivative, parameterization or all)");
}

} // namespace mattrace
