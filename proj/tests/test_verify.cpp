#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "mattrace/verify.hpp"
#include "test_support.hpp"

using namespace mattrace;
using testsupport::random_psd;
using testsupport::random_symmetric;

namespace {

MatrixTuple pd_pair(Rng& rng, int n, double shift) {
    return MatrixTuple({SymMatrix(random_psd(rng, n, 0.4) + shift * Eigen::MatrixXd::Identity(n, n)),
                        SymMatrix(random_psd(rng, n, 0.4) + shift * Eigen::MatrixXd::Identity(n, n))});
}

} // namespace

TEST_CASE("oracle equivalence passes on healthy instances") {
    Rng rng(71);
    const ScalarFunction f = parse_function("x1^3 * x2^5", 2);
    for (int trial = 0; trial < 20; ++trial) {
        const MatrixTuple t({SymMatrix(random_symmetric(rng, 3, 1.2)),
                             SymMatrix(random_symmetric(rng, 3, 1.2))});
        const PropertyReport r = check_oracle_equivalence(f, t);
        CHECK(r.failures == 0);
        CHECK(r.trials == 1);
        CHECK(r.worst_violation <= 0.0);
        CHECK(!r.witness);
    }

    const PropertyReport c = check_oracle_equivalence(
        parse_function("3", 2),
        MatrixTuple({SymMatrix(random_symmetric(rng, 2)), SymMatrix(random_symmetric(rng, 2))}));
    CHECK(c.failures == 0);

    // near-degenerate spectra: eigenvalue gaps of 1e-8 stay within tolerance
    Eigen::VectorXd lam(3);
    lam << 1.0, 1.0 + 1e-8, 2.0;
    const MatrixTuple tight({SymMatrix(testsupport::with_spectrum(rng, lam)),
                             SymMatrix(testsupport::with_spectrum(rng, lam))});
    CHECK(check_oracle_equivalence(parse_function("x1^2 * x2", 2), tight).failures == 0);
}

TEST_CASE("monotone check passes for the increasing monomial") {
    Rng rng(72);
    const ScalarFunction f = parse_function("x1^3 * x2^5", 2)
                                 .with_domain({Interval::positive(), Interval::positive()});
    const PropertyReport r = check_monotone(f, pd_pair(rng, 3, 0.5), 500, 1234);
    CHECK(r.trials == 500);
    CHECK(r.failures == 0);
    CHECK(r.worst_violation <= 0.0);

    // zero increment leaves the trace unchanged: trivially no violation
    const MatrixTuple base = pd_pair(rng, 3, 0.5);
    const double before = trace_matfun_multi(f, base);
    std::vector<SymMatrix> same;
    for (const SymMatrix& m : base.mats()) same.emplace_back(m.mat() + Eigen::MatrixXd::Zero(3, 3));
    CHECK(trace_matfun_multi(f, MatrixTuple(same)) == before);
}

TEST_CASE("monotone check catches a decreasing function") {
    Rng rng(73);
    const ScalarFunction f = parse_function("-x1", 1).with_domain({Interval::positive()});
    const MatrixTuple base(
        {SymMatrix(random_psd(rng, 3, 0.3) + 0.5 * Eigen::MatrixXd::Identity(3, 3))});
    const PropertyReport r = check_monotone(f, base, 50, 99);
    CHECK(r.failures > 0);
    CHECK(r.worst_violation > 0.0);
    REQUIRE(r.witness.has_value());
    const nlohmann::json& w = *r.witness;
    CHECK(w.at("scale").get<double>() > 0.0);
    CHECK(w.at("scale").get<double>() <= 1.0);
    CHECK(w.at("violation").get<double>() > 0.0);
    CHECK(w.contains("base"));
    CHECK(w.contains("increments"));
}

TEST_CASE("convex check passes for the paper-style rational example") {
    const ScalarFunction f = parse_function("1/(x1^2*x2) + 1/(x1*x2^2)", 2)
                                 .with_domain({Interval::positive(), Interval::positive()});
    const double alphas[] = {0.25, 0.5, 0.75};
    const PropertyReport r = check_convex(f, 3, 150, alphas, 7);
    CHECK(r.trials == 450);
    CHECK(r.failures == 0);
    CHECK(r.worst_violation <= 0.0);
}

TEST_CASE("convex check at the endpoints is exact") {
    const ScalarFunction f = parse_function("x1^2", 1);
    const double endpoints[] = {0.0, 1.0};
    const PropertyReport r = check_convex(f, 3, 50, endpoints, 8);
    CHECK(r.failures == 0);
    CHECK(r.worst_violation == -kInequalityTol); // exact equality at alpha 0 and 1

    const ScalarFunction affine = parse_function("3*x1 - 1", 1);
    const double alphas[] = {0.25, 0.5, 0.75};
    const PropertyReport ra = check_convex(affine, 3, 50, alphas, 8);
    CHECK(ra.failures == 0);
    CHECK(ra.worst_violation >= -1e-12 - kInequalityTol); // equality up to rounding
}

TEST_CASE("convex check catches a concave function") {
    const ScalarFunction f = parse_function("-(x1^2)", 1);
    const double alphas[] = {0.5};
    const PropertyReport r = check_convex(f, 3, 20, alphas, 9);
    CHECK(r.failures > 0);
    REQUIRE(r.witness.has_value());
    CHECK(r.witness->at("violation").get<double>() > 0.0);
}

TEST_CASE("derivative check validates the trace-derivative formula") {
    Rng rng(74);
    const ScalarFunction f = parse_function("x1^2 * x2", 2);
    std::vector<SymMatrix> base{SymMatrix(random_symmetric(rng, 3)),
                                SymMatrix(random_symmetric(rng, 3))};
    std::vector<SymMatrix> rates{SymMatrix(random_symmetric(rng, 3)),
                                 SymMatrix(random_symmetric(rng, 3))};
    const double ts[] = {0.0, 0.1, 0.2};
    const PropertyReport r =
        check_derivative(f, DerivativeInput(MatrixTuple(base), rates), ts);
    CHECK(r.trials == 3);
    CHECK(r.failures == 0);

    // constant f: derivative identically zero
    const PropertyReport rc =
        check_derivative(parse_function("7", 2), DerivativeInput(MatrixTuple(base), rates), ts);
    CHECK(rc.failures == 0);
    CHECK(trace_matfun_derivative(parse_function("7", 2),
                                  DerivativeInput(MatrixTuple(base), rates)) == 0.0);

    // m = 3 random instance
    std::vector<SymMatrix> b3{SymMatrix(random_symmetric(rng, 3)),
                              SymMatrix(random_symmetric(rng, 3)),
                              SymMatrix(random_symmetric(rng, 3))};
    std::vector<SymMatrix> r3{SymMatrix(random_symmetric(rng, 3)),
                              SymMatrix(random_symmetric(rng, 3)),
                              SymMatrix(random_symmetric(rng, 3))};
    const PropertyReport r3r = check_derivative(parse_function("x1 * x2 * x3 + x2^2", 3),
                                                DerivativeInput(MatrixTuple(b3), r3), ts);
    CHECK(r3r.failures == 0);
}

TEST_CASE("derivative check fails when the step is too coarse") {
    Rng rng(75);
    std::vector<SymMatrix> base{SymMatrix(random_symmetric(rng, 3))};
    std::vector<SymMatrix> rates{SymMatrix(random_psd(rng, 3))};
    const double ts[] = {0.0, 0.2};
    const PropertyReport r = check_derivative(
        parse_function("exp(2*x1)", 1), DerivativeInput(MatrixTuple(base), rates), ts, 0.25);
    CHECK(r.failures > 0);
    REQUIRE(r.witness.has_value());
}

TEST_CASE("parameterization checks accept C + t^2 D and reject C - t D") {
    Rng rng(76);
    const SymMatrix c(random_symmetric(rng, 3));
    const SymMatrix d(random_psd(rng, 3));
    const double ts[] = {0.0, 0.5, 1.0, 2.0};

    const MatrixPath quad{c, d, true};
    CHECK(check_parameterization(ParamKind::monotone, quad, ts).failures == 0);
    CHECK(check_parameterization(ParamKind::convex, quad, ts).failures == 0);

    const MatrixPath affine{c, d, false};
    CHECK(check_parameterization(ParamKind::monotone, affine, ts).failures == 0);
    CHECK(check_parameterization(ParamKind::convex, affine, ts).failures == 0);

    const MatrixPath down{c, SymMatrix(-d.mat()), false};
    const PropertyReport r = check_parameterization(ParamKind::monotone, down, ts);
    CHECK(r.failures > 0);
    REQUIRE(r.witness.has_value());
    CHECK(r.witness->at("violation").get<double>() > 0.0);
}

TEST_CASE("reports serialize and deserialize losslessly") {
    Rng rng(77);
    const ScalarFunction f = parse_function("-x1", 1).with_domain({Interval::positive()});
    const MatrixTuple base(
        {SymMatrix(random_psd(rng, 2, 0.3) + 0.5 * Eigen::MatrixXd::Identity(2, 2))});
    const PropertyReport r = check_monotone(f, base, 10, 5);
    const nlohmann::json j = report_to_json(r);
    const PropertyReport back = report_from_json(j);
    CHECK(back.property == r.property);
    CHECK(back.trials == r.trials);
    CHECK(back.failures == r.failures);
    CHECK(back.worst_violation == r.worst_violation);
    CHECK(back.seed == r.seed);
    CHECK(back.witness.has_value() == r.witness.has_value());
    if (r.witness) CHECK(*back.witness == *r.witness);
    CHECK(report_to_json(back).dump() == j.dump());
}

TEST_CASE("checks are deterministic for a fixed seed") {
    Rng rng(78);
    const ScalarFunction f = parse_function("x1^3 * x2^5", 2)
                                 .with_domain({Interval::positive(), Interval::positive()});
    const MatrixTuple base = pd_pair(rng, 3, 0.5);
    const PropertyReport a = check_monotone(f, base, 40, 11);
    const PropertyReport b = check_monotone(f, base, 40, 11);
    CHECK(report_to_json(a).dump() == report_to_json(b).dump());
}

TEST_CASE("suite driver runs every named suite and the counterexamples fail") {
    SuiteConfig cfg;
    cfg.dim = 3;
    cfg.trials = 20;
    cfg.seed = 4;

    const std::vector<PropertyReport> healthy = run_suite("all", cfg);
    CHECK(healthy.size() == 6); // parameterization contributes two reports
    for (const PropertyReport& r : healthy) {
        CHECK_MESSAGE(r.failures == 0, r.property, " reported ", r.failures, " failures");
        CHECK(r.worst_violation <= 0.0);
    }

    cfg.selftest = true;
    for (const char* name : {"oracle", "monotone", "convex", "derivative", "parameterization"}) {
        const std::vector<PropertyReport> reports = run_suite(name, cfg);
        long long failures = 0;
        for (const PropertyReport& r : reports) failures += r.failures;
        CHECK_MESSAGE(failures > 0, "counterexample for ", name, " did not fail");
        for (const PropertyReport& r : reports)
            if (r.failures > 0) REQUIRE(r.witness.has_value());
    }

    CHECK_THROWS_AS(run_suite("bogus", cfg), Error);
}
