#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "mattrace/tensor_ext.hpp"
#include "test_support.hpp"

using namespace mattrace;
using testsupport::random_symmetric;
using testsupport::rel_frobenius;

namespace {

Eigen::MatrixXd matrix_power(const Eigen::MatrixXd& m, int p) {
    Eigen::MatrixXd out = Eigen::MatrixXd::Identity(m.rows(), m.cols());
    for (int i = 0; i < p; ++i) out = out * m;
    return out;
}

MatrixTuple pair_of(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
    return MatrixTuple({SymMatrix(a), SymMatrix(b)});
}

} // namespace

TEST_CASE("dense evaluation of a monomial is the Kronecker product of powers") {
    Rng rng(31);
    for (int p = 0; p <= 3; ++p) {
        for (int q = 0; q <= 3; ++q) {
            const Eigen::MatrixXd m = random_symmetric(rng, 3, 1.5);
            const Eigen::MatrixXd n = random_symmetric(rng, 3, 1.5);
            const ScalarFunction f =
                parse_function("x1^" + std::to_string(p) + " * x2^" + std::to_string(q), 2);
            const Eigen::MatrixXd dense = matfun_multi_dense(f, pair_of(m, n));
            const Eigen::MatrixXd direct = kron(matrix_power(m, p), matrix_power(n, q));
            CHECK_MESSAGE(rel_frobenius(dense, direct) <= 1e-8, "p=", p, " q=", q);
        }
    }
}

TEST_CASE("dense evaluation of the constant one is the identity") {
    Rng rng(32);
    const Eigen::MatrixXd dense = matfun_multi_dense(
        parse_function("1", 2), pair_of(random_symmetric(rng, 2), random_symmetric(rng, 2)));
    CHECK(rel_frobenius(dense, Eigen::MatrixXd::Identity(4, 4)) <= 1e-12);
}

TEST_CASE("trace of the dense matrix equals the eigenvalue multi-sum") {
    Rng rng(33);
    const char* functions[] = {"x1 * x2", "x1^2 + x2^3", "exp(x1/4) * x2", "x1 - 2*x2 + x1^2*x2^2"};
    for (const char* text : functions) {
        for (int trial = 0; trial < 10; ++trial) {
            const ScalarFunction f = parse_function(text, 2);
            const MatrixTuple t = pair_of(random_symmetric(rng, 3), random_symmetric(rng, 3));
            const double dense = matfun_multi_dense(f, t).trace();
            const double eigsum = trace_matfun_multi(f, t);
            CHECK_MESSAGE(std::abs(dense - eigsum) <= 1e-9 * std::max(1.0, std::abs(eigsum)),
                          text, ": dense=", dense, " eigsum=", eigsum);
        }
    }
}

TEST_CASE("trace values frozen from hand enumeration") {
    const Eigen::MatrixXd m12 = Eigen::Vector2d(1, 2).asDiagonal();
    const Eigen::MatrixXd n31 = Eigen::Vector2d(3, 1).asDiagonal();

    CHECK(trace_matfun_multi(parse_function("x1 * x2", 2), pair_of(m12, n31)) ==
          doctest::Approx(12.0).epsilon(1e-14));

    Eigen::MatrixXd two(2, 2);
    two << 2, 1, 1, 2;
    CHECK(trace_matfun_multi(parse_function("x1^2", 1), MatrixTuple({SymMatrix(two)})) ==
          doctest::Approx(10.0).epsilon(1e-13)); // 1^2 + 3^2

    // sum over {1,2}^2 of 1/(x^2 y) + 1/(x y^2): enumerates to 3.75
    const ScalarFunction rational = parse_function("1/(x1^2*x2) + 1/(x1*x2^2)", 2);
    CHECK(trace_matfun_multi(rational, pair_of(m12, m12)) ==
          doctest::Approx(3.75).epsilon(1e-14));
}

TEST_CASE("separable functions factor into single-variable traces") {
    Rng rng(34);
    const Eigen::MatrixXd m = random_symmetric(rng, 4, 1.2);
    const Eigen::MatrixXd n = random_symmetric(rng, 4, 1.2);
    const double joint = trace_matfun_multi(parse_function("x1^3 * x2^5", 2), pair_of(m, n));
    const double product =
        matrix_power(m, 3).trace() * matrix_power(n, 5).trace();
    CHECK(joint == doctest::Approx(product).epsilon(1e-10));
}

TEST_CASE("diagonal specialization matches the tuple of equal matrices") {
    Rng rng(35);

    // eigenvalues (0, 3, 3): sum over 9 pairs of (a + b) = 36
    const Eigen::MatrixXd l = testsupport::with_spectrum(rng, Eigen::Vector3d(0, 3, 3));
    CHECK(trace_matfun_diag(parse_function("x1 + x2", 2), SymMatrix(l)) ==
          doctest::Approx(36.0).epsilon(1e-12));

    const Eigen::MatrixXd any = random_symmetric(rng, 4, 2.0);
    CHECK(trace_matfun_diag(parse_function("x1", 1), SymMatrix(any)) ==
          doctest::Approx(any.trace()).epsilon(1e-12));

    const Eigen::MatrixXd d12 = testsupport::with_spectrum(rng, Eigen::Vector2d(1, 2));
    CHECK(trace_matfun_diag(parse_function("x1 * x2", 2), SymMatrix(d12)) ==
          doctest::Approx(9.0).epsilon(1e-12));

    for (int trial = 0; trial < 20; ++trial) {
        const SymMatrix l2(random_symmetric(rng, 3, 1.5));
        const ScalarFunction f = parse_function("x1^2 * x2 + exp(x2/5) - x3", 3);
        const double diag = trace_matfun_diag(f, l2);
        const double full = trace_matfun_multi(f, MatrixTuple({l2, l2, l2}));
        CHECK(std::abs(diag - full) <= 1e-12 * std::max(1.0, std::abs(full)));
    }
}

TEST_CASE("trace derivative on hand-checked instances") {
    // m = 1, f = x^2, M = I (n=2), dM/dt = I: d/dt tr M^2 = tr(2 M I) = 4
    const SymMatrix eye = SymMatrix::identity(2);
    CHECK(trace_matfun_derivative(parse_function("x1^2", 1),
                                  DerivativeInput(MatrixTuple({eye}), {eye})) ==
          doctest::Approx(4.0).epsilon(1e-13));

    // m = 2, f = x y, tuple (I, I), rates (A, B): value 2 tr A + 2 tr B = 8 at A = B = I
    CHECK(trace_matfun_derivative(parse_function("x1 * x2", 2),
                                  DerivativeInput(MatrixTuple({eye, eye}), {eye, eye})) ==
          doctest::Approx(8.0).epsilon(1e-13));

    // m = 1 affine path: d/dt tr (M0 + M1 t)^2 = 2 tr(M(t) M1)
    Rng rng(36);
    const Eigen::MatrixXd m0 = random_symmetric(rng, 3);
    const Eigen::MatrixXd m1 = random_symmetric(rng, 3);
    for (double t : {0.0, 0.5, 1.25}) {
        const Eigen::MatrixXd mt = m0 + t * m1;
        const double got = trace_matfun_derivative(
            parse_function("x1^2", 1), DerivativeInput(MatrixTuple({SymMatrix(mt)}), {SymMatrix(m1)}));
        CHECK(got == doctest::Approx(2.0 * (mt * m1).trace()).epsilon(1e-11));
    }
}

namespace {

double fd_derivative(const ScalarFunction& f, const std::vector<Eigen::MatrixXd>& base,
                     const std::vector<Eigen::MatrixXd>& rates, double t, double h) {
    auto tuple_at = [&](double s) {
        std::vector<SymMatrix> mats;
        for (std::size_t l = 0; l < base.size(); ++l) mats.emplace_back(base[l] + s * rates[l]);
        return MatrixTuple(std::move(mats));
    };
    return (trace_matfun_multi(f, tuple_at(t + h)) - trace_matfun_multi(f, tuple_at(t - h))) /
           (2.0 * h);
}

} // namespace

TEST_CASE("trace derivative agrees with finite differences on random paths") {
    Rng rng(37);
    const char* functions[] = {"x1 * x2", "x1^2 * x2 + x2^2", "exp((x1 + x2)/4)"};
    for (const char* text : functions) {
        const ScalarFunction f = parse_function(text, 2);
        for (int trial = 0; trial < 15; ++trial) {
            std::vector<Eigen::MatrixXd> base{random_symmetric(rng, 3), random_symmetric(rng, 3)};
            std::vector<Eigen::MatrixXd> rates{random_symmetric(rng, 3), random_symmetric(rng, 3)};
            const double t = rng.uniform(-0.3, 0.3);
            std::vector<SymMatrix> at_t{SymMatrix(base[0] + t * rates[0]),
                                        SymMatrix(base[1] + t * rates[1])};
            const double analytic = trace_matfun_derivative(
                f, DerivativeInput(MatrixTuple(at_t), {SymMatrix(rates[0]), SymMatrix(rates[1])}));
            const double fd = fd_derivative(f, base, rates, t, 1e-5);
            CHECK_MESSAGE(testsupport::close_rel(analytic, fd, 1e-5),
                          text, " analytic=", analytic, " fd=", fd);
        }
    }
}

TEST_CASE("the trace stays smooth through an eigenvalue crossing") {
    // commuting path: eigenvalues cross linearly at t = 0.05, well inside the
    // 1e-3 window around the sample point t = 0.0505
    Rng rng(38);
    const Eigen::MatrixXd g = random_symmetric(rng, 3);
    const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(g);
    const Eigen::MatrixXd v = es.eigenvectors();
    const Eigen::Vector3d a(1.0, 1.1, 2.0);
    const Eigen::Vector3d b(2.0, 0.0, -1.0); // lambda_1(t) = 1 + 2t crosses 1.1 at t = 0.05
    const Eigen::MatrixXd base = v * a.asDiagonal() * v.transpose();
    const Eigen::MatrixXd rate = v * b.asDiagonal() * v.transpose();

    const ScalarFunction f = parse_function("x1^3 + exp(x1/2)", 1);
    for (double t : {0.0505, 0.0495, 0.05}) {
        const double analytic = trace_matfun_derivative(
            f, DerivativeInput(MatrixTuple({SymMatrix(base + t * rate)}), {SymMatrix(rate)}));
        const double fd = fd_derivative(f, {base}, {rate}, t, 1e-5);
        CHECK_MESSAGE(testsupport::close_rel(analytic, fd, 1e-5), "t=", t);
    }
}

TEST_CASE("caps and validation errors") {
    Rng rng(39);
    std::vector<SymMatrix> big;
    for (int l = 0; l < 4; ++l) big.emplace_back(random_symmetric(rng, 6));
    try {
        matfun_multi_dense(parse_function("x1 * x2 * x3 * x4", 4), MatrixTuple(big));
        FAIL("expected cap error");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::cap_exceeded);
    }
    // 8^3 = 512 sits exactly at the default cap
    std::vector<SymMatrix> at_cap;
    for (int l = 0; l < 3; ++l) at_cap.emplace_back(random_symmetric(rng, 8));
    CHECK_NOTHROW(matfun_multi_dense(parse_function("x1 + x2 + x3", 3), MatrixTuple(at_cap)));

    CHECK_THROWS_AS(MatrixTuple({SymMatrix::identity(2), SymMatrix::identity(3)}), Error);
    CHECK_THROWS_AS(MatrixTuple(std::vector<SymMatrix>{}), Error);
    CHECK_THROWS_AS(DerivativeInput(MatrixTuple({SymMatrix::identity(2)}), {}), Error);
    CHECK_THROWS_AS(trace_matfun_multi(parse_function("x1", 1),
                                       MatrixTuple({SymMatrix::identity(2), SymMatrix::identity(2)})),
                    Error);

    // eigenvalue outside the declared domain
    const ScalarFunction pos = parse_function("log(x1)", 1).with_domain(1, Interval::positive());
    try {
        trace_matfun_multi(pos, MatrixTuple({SymMatrix(Eigen::MatrixXd::Zero(2, 2))}));
        FAIL("expected domain error");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::domain);
    }
}

TEST_CASE("monotone and convex trace inequalities on random tuples") {
    Rng rng(40);
    const ScalarFunction mono = parse_function("x1^3 * x2^5", 2)
                                    .with_domain({Interval::positive(), Interval::positive()});
    for (int trial = 0; trial < 40; ++trial) {
        // positive-definite base, PSD increment, spectra O(1)
        const Eigen::MatrixXd m1 = testsupport::random_psd(rng, 3, 0.4) +
                                   0.5 * Eigen::MatrixXd::Identity(3, 3);
        const Eigen::MatrixXd m2 = testsupport::random_psd(rng, 3, 0.4) +
                                   0.5 * Eigen::MatrixXd::Identity(3, 3);
        const Eigen::MatrixXd d1 = testsupport::random_psd(rng, 3, 0.3);
        const Eigen::MatrixXd d2 = testsupport::random_psd(rng, 3, 0.3);
        const double before = trace_matfun_multi(mono, pair_of(m1, m2));
        const double after = trace_matfun_multi(mono, pair_of(m1 + d1, m2 + d2));
        CHECK(after >= before - 1e-9);
    }

    const ScalarFunction convex = parse_function("1/(x1^2*x2) + 1/(x1*x2^2)", 2)
                                      .with_domain({Interval::positive(), Interval::positive()});
    const double alphas[] = {0.0, 0.25, 0.5, 0.75, 1.0};
    for (int trial = 0; trial < 25; ++trial) {
        const Eigen::MatrixXd m1 = testsupport::random_psd(rng, 3, 0.5) +
                                   Eigen::MatrixXd::Identity(3, 3);
        const Eigen::MatrixXd n1 = testsupport::random_psd(rng, 3, 0.5) +
                                   Eigen::MatrixXd::Identity(3, 3);
        const Eigen::MatrixXd m2 = testsupport::random_psd(rng, 3, 0.5) +
                                   Eigen::MatrixXd::Identity(3, 3);
        const Eigen::MatrixXd n2 = testsupport::random_psd(rng, 3, 0.5) +
                                   Eigen::MatrixXd::Identity(3, 3);
        const double fm = trace_matfun_multi(convex, pair_of(m1, m2));
        const double fn = trace_matfun_multi(convex, pair_of(n1, n2));
        for (double alpha : alphas) {
            const double mix = trace_matfun_multi(
                convex, pair_of(alpha * m1 + (1 - alpha) * n1, alpha * m2 + (1 - alpha) * n2));
            CHECK(mix <= alpha * fm + (1 - alpha) * fn + 1e-9);
        }
    }
}
