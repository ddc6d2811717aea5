#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "nids/matrix.hpp"
#include "nids/numerics.hpp"
#include "nids/rng.hpp"

#include <cmath>
#include <numeric>

using namespace nids;

TEST_CASE("matmul identity and zero") {
    Matrix a(2, 2, {1, 2, 3, 4});
    Matrix r = matmul(Matrix::identity(2), a);
    for (std::size_t i = 0; i < 2; ++i)
        for (std::size_t j = 0; j < 2; ++j) CHECK(r.at(i, j) == a.at(i, j));

    Matrix z = matmul(a, Matrix(2, 1, {0, 0}));
    CHECK(z.at(0, 0) == 0.0);
    CHECK(z.at(1, 0) == 0.0);
}

TEST_CASE("matmul hand-evaluated product") {
    Matrix a(2, 2, {1, 2, 3, 4});
    Matrix b(2, 1, {5, 6});
    Matrix r = matmul(a, b);
    CHECK(r.at(0, 0) == doctest::Approx(17.0));
    CHECK(r.at(1, 0) == doctest::Approx(39.0));
}

TEST_CASE("matmul dimension mismatch throws") {
    CHECK_THROWS_AS(matmul(Matrix(2, 3), Matrix(2, 2)), std::invalid_argument);
}

TEST_CASE("matmul associativity on random matrices") {
    RngStream rng(7);
    for (int trial = 0; trial < 10; ++trial) {
        auto rand_matrix = [&rng](std::size_t r, std::size_t c) {
            Matrix m(r, c);
            for (double& v : m.values()) v = rng.uniform(-2.0, 2.0);
            return m;
        };
        Matrix a = rand_matrix(3, 4), b = rand_matrix(4, 2), c = rand_matrix(2, 5);
        Matrix lhs = matmul(matmul(a, b), c);
        Matrix rhs = matmul(a, matmul(b, c));
        for (std::size_t k = 0; k < lhs.size(); ++k) {
            CHECK(lhs.values()[k] == doctest::Approx(rhs.values()[k]).epsilon(1e-9));
        }
    }
}

TEST_CASE("percentile single element and extremes") {
    std::vector<double> one{5.0};
    CHECK(percentile(one, 0.95) == 5.0);

    std::vector<double> v(100);
    std::iota(v.begin(), v.end(), 1.0);
    CHECK(percentile(v, 0.0) == 1.0);
    CHECK(percentile(v, 1.0) == 100.0);
    // rank 0.95*99 = 94.05, between sorted values 95 and 96
    CHECK(percentile(v, 0.95) == doctest::Approx(95.05));
}

TEST_CASE("percentile errors") {
    std::vector<double> empty;
    CHECK_THROWS_AS(percentile(empty, 0.5), std::invalid_argument);
}

TEST_CASE("percentile is permutation invariant and hits min/max exactly") {
    RngStream rng(11);
    for (int trial = 0; trial < 20; ++trial) {
        std::vector<double> v(1 + rng.index(50));
        for (double& x : v) x = rng.uniform(-100.0, 100.0);
        const double p = rng.uniform();
        const double before = percentile(v, p);
        std::vector<double> shuffled = v;
        rng.shuffle(shuffled);
        CHECK(percentile(shuffled, p) == before);
        CHECK(percentile(v, 0.0) == *std::min_element(v.begin(), v.end()));
        CHECK(percentile(v, 1.0) == *std::max_element(v.begin(), v.end()));
    }
}

TEST_CASE("finite differences recover analytic gradients") {
    auto sum_sq = [](std::span<const double> x) {
        double s = 0.0;
        for (double v : x) s += v * v;
        return s;
    };
    std::vector<double> x{3.0};
    auto g = finite_diff_gradient(sum_sq, x);
    CHECK(g[0] == doctest::Approx(6.0).epsilon(1e-6));

    auto constant = [](std::span<const double>) { return 42.0; };
    std::vector<double> x2{1.0, -2.0, 0.5};
    for (double gi : finite_diff_gradient(constant, x2)) CHECK(gi == doctest::Approx(0.0));

    auto prod = [](std::span<const double> v) { return v[0] * v[1]; };
    std::vector<double> x3{2.0, 5.0};
    auto g3 = finite_diff_gradient(prod, x3);
    CHECK(g3[0] == doctest::Approx(5.0).epsilon(1e-6));
    CHECK(g3[1] == doctest::Approx(2.0).epsilon(1e-6));
}

TEST_CASE("rng streams reproduce and children diverge") {
    RngStream a(1234), b(1234);
    for (int i = 0; i < 1000; ++i) CHECK(a.next_u64() == b.next_u64());

    RngStream base(99);
    RngStream c0 = base.child(0), c1 = base.child(1);
    CHECK(c0.next_u64() != c1.next_u64());

    RngStream u(5);
    for (int i = 0; i < 1000; ++i) {
        const double x = u.uniform();
        CHECK(x >= 0.0);
        CHECK(x < 1.0);
    }
}
