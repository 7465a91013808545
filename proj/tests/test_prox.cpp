#include "support.hpp"

#include "intreg/prox.hpp"

#include <doctest.h>

using namespace intreg;

TEST_CASE("scalar soft-threshold examples") {
    CHECK(prox::soft_threshold(3.0, 1.0) == 2.0);
    CHECK(prox::soft_threshold(-0.5, 0.7) == 0.0);
    CHECK(prox::soft_threshold(-3.0, 1.0) == -2.0);
    CHECK(prox::soft_threshold(1.0, 1.0) == 0.0);
    std::mt19937_64 rng(1);
    std::normal_distribution<double> z;
    for (int i = 0; i < 100; ++i) {
        const double a = 10 * z(rng);
        CHECK(prox::soft_threshold(a, 0.0) == a);
    }
    CHECK_THROWS_AS(prox::soft_threshold(1.0, -1e-9), ValidationError);
}

TEST_CASE("vector soft-threshold examples") {
    const Vector c = (Vector(2) << 3.0, 4.0).finished();
    CHECK(prox::soft_threshold(c, 5.0) == Vector::Zero(2));
    CHECK(prox::soft_threshold(c, 2.5) == (Vector(2) << 1.5, 2.0).finished());
    CHECK(prox::soft_threshold(Vector::Zero(3), 0.0) == Vector::Zero(3));
    CHECK(prox::soft_threshold(Vector::Zero(3), 1.0) == Vector::Zero(3));
    std::mt19937_64 rng(2);
    for (int i = 0; i < 100; ++i) {
        const Vector v = testing::gaussian(4, 1, rng);
        CHECK(prox::soft_threshold(v, 0.0) == v);
    }
    CHECK_THROWS_AS(prox::soft_threshold(c, -1.0), ValidationError);
}

TEST_CASE("prox properties on random inputs") {
    std::mt19937_64 rng(3);
    std::normal_distribution<double> z;
    std::exponential_distribution<double> thr(0.5);

    SUBCASE("scalar sign and shrinkage") {
        for (int i = 0; i < 1000; ++i) {
            const double a = 5 * z(rng), b = thr(rng);
            const double s = prox::soft_threshold(a, b);
            CHECK(std::abs(s) <= std::abs(a));
            CHECK((s == 0.0 || std::signbit(s) == std::signbit(a)));
        }
    }
    SUBCASE("length-one vector agrees with scalar") {
        for (int i = 0; i < 1000; ++i) {
            const double a = 5 * z(rng), b = thr(rng);
            const Vector v = Vector::Constant(1, a);
            CHECK(prox::soft_threshold(v, b)(0) == doctest::Approx(prox::soft_threshold(a, b)).epsilon(1e-15));
        }
    }
    SUBCASE("nonexpansive") {
        for (int i = 0; i < 1000; ++i) {
            const Vector c1 = 3 * testing::gaussian(3, 1, rng), c2 = 3 * testing::gaussian(3, 1, rng);
            const double d = thr(rng);
            CHECK((prox::soft_threshold(c1, d) - prox::soft_threshold(c2, d)).norm() <= (c1 - c2).norm() + 1e-12);
        }
    }
    SUBCASE("matches searched minimizers") {
        for (int i = 0; i < 1000; ++i) {
            const double a = 5 * z(rng), b = thr(rng);
            CHECK(std::abs(prox::soft_threshold(a, b) - testing::scalar_prox_search(a, b)) <= 1e-8);
            const Vector c = 3 * testing::gaussian(3, 1, rng);
            CHECK((prox::soft_threshold(c, b) - testing::group_prox_search(c, b)).norm() <= 1e-8);
        }
    }
    SUBCASE("no random perturbation improves the group prox") {
        for (int i = 0; i < 200; ++i) {
            const Vector c = 3 * testing::gaussian(3, 1, rng);
            const double d = thr(rng);
            const Vector eta = prox::soft_threshold(c, d);
            auto f = [&](const Vector& e) { return 0.5 * (e - c).squaredNorm() + d * e.norm(); };
            const Vector delta = 1e-3 * testing::gaussian(3, 1, rng);
            CHECK(f(eta) <= f(eta + delta) + 1e-14);
        }
    }
}

TEST_CASE("entrywise matrix soft-threshold") {
    Matrix A(2, 2);
    A << 3, -0.2, -4, 1;
    Matrix expected(2, 2);
    expected << 2, 0, -3, 0;
    CHECK(prox::soft_threshold_entrywise(A, 1.0) == expected);
}
