#include <doctest.h>

#include <cmath>

#include "tlab/rng.hpp"
#include "tlab/tensor.hpp"

using namespace tlab;

TEST_CASE("matmul identity, hand arithmetic, annihilator") {
    Tensor a = Tensor::matrix(2, 2, {1, 2, 3, 4});
    Tensor i2 = Tensor::identity(2);

    Tensor r = matmul(i2, a);
    CHECK(r.data() == std::vector<double>{1, 2, 3, 4});

    // [[1,2],[3,4]] x [[5],[6]] = [[17],[39]]: 1*5+2*6=17, 3*5+4*6=39
    Tensor b = Tensor::matrix(2, 1, {5, 6});
    Tensor c = matmul(a, b);
    CHECK(c.at(0, 0) == doctest::Approx(17).epsilon(0));
    CHECK(c.at(1, 0) == doctest::Approx(39).epsilon(0));

    Tensor z = Tensor::zeros({2, 3});
    Tensor az = matmul(a, z);
    for (double v : az.data()) CHECK(v == 0.0);

    CHECK_THROWS_WITH_AS(matmul(a, Tensor::zeros({3, 2})), doctest::Contains("[2x2]"),
                         std::invalid_argument);
}

TEST_CASE("matmul associativity on random 4x4 chains") {
    Rng rng(3);
    for (int trial = 0; trial < 25; ++trial) {
        Tensor a = Tensor::uniform({4, 4}, -2, 2, rng);
        Tensor b = Tensor::uniform({4, 4}, -2, 2, rng);
        Tensor c = Tensor::uniform({4, 4}, -2, 2, rng);
        Tensor left = matmul(matmul(a, b), c);
        Tensor right = matmul(a, matmul(b, c));
        for (std::size_t i = 0; i < left.size(); ++i)
            CHECK(left[i] == doctest::Approx(right[i]).epsilon(1e-9));
    }
}

TEST_CASE("relu sign cases and idempotence") {
    Tensor x = Tensor::row({-1, 0, 2});
    Tensor y = relu(x);
    CHECK(y.data() == std::vector<double>{0, 0, 2});

    Tensor neg = Tensor::row({-5, -0.1, -1e9});
    for (double v : relu(neg).data()) CHECK(v == 0.0);

    Rng rng(9);
    Tensor r = Tensor::uniform({3, 7}, -4, 4, rng);
    CHECK(relu(relu(r)).data() == relu(r).data());
}

TEST_CASE("softmax rows: symmetry, stability, hand-computed values") {
    Tensor flat = softmax_rows(Tensor::row({0, 0, 0}));
    for (double v : flat.data()) CHECK(v == doctest::Approx(1.0 / 3).epsilon(1e-15));

    Tensor big = softmax_rows(Tensor::row({1000, 0}));
    CHECK(std::isfinite(big[0]));
    CHECK(big[0] == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(big[1] == doctest::Approx(0.0).epsilon(1e-12));

    // softmax(ln 1, ln 2, ln 3) = (1/6, 2/6, 3/6)
    Tensor logs = softmax_rows(Tensor::row({std::log(1.0), std::log(2.0), std::log(3.0)}));
    CHECK(logs[0] == doctest::Approx(1.0 / 6).epsilon(1e-14));
    CHECK(logs[1] == doctest::Approx(2.0 / 6).epsilon(1e-14));
    CHECK(logs[2] == doctest::Approx(3.0 / 6).epsilon(1e-14));
}

TEST_CASE("softmax rows sum to one within 1e-12 on random inputs in [-50,50]") {
    Rng rng(17);
    for (int trial = 0; trial < 50; ++trial) {
        Tensor x = Tensor::uniform({5, 9}, -50, 50, rng);
        Tensor y = softmax_rows(x);
        for (std::size_t i = 0; i < 5; ++i) {
            double s = 0.0;
            for (std::size_t j = 0; j < 9; ++j) {
                CHECK(y.at(i, j) >= 0.0);
                s += y.at(i, j);
            }
            CHECK(std::fabs(s - 1.0) <= 1e-12);
        }
    }
}

TEST_CASE("canonical sum is invariant under permutation") {
    Rng rng(23);
    std::vector<double> v(257);
    for (double& x : v) x = rng.uniform(-1e6, 1e6);
    const double s = canonical_sum(v);
    for (int trial = 0; trial < 20; ++trial) {
        for (std::size_t i = v.size(); i > 1; --i) std::swap(v[i - 1], v[rng.below(i)]);
        CHECK(canonical_sum(v) == s);
    }
}

TEST_CASE("tensor shape checks") {
    CHECK_THROWS_AS(Tensor({2, 3}, std::vector<double>(5)), std::invalid_argument);
    CHECK_THROWS_AS(add(Tensor::zeros({2}), Tensor::zeros({3})), std::invalid_argument);
    Tensor t = Tensor::zeros({2, 2});
    CHECK_FALSE(t.has_grad());
    t.grad();
    CHECK(t.has_grad());
    CHECK(t.grad() == std::vector<double>(4, 0.0));
}
