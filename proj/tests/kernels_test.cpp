#include <doctest.h>

#include <cstring>
#include <vector>

#include "tlab/kernels.hpp"
#include "tlab/rng.hpp"

using namespace tlab;

namespace {

std::vector<double> random_vec(std::size_t n, Rng& rng) {
    std::vector<double> v(n);
    for (double& x : v) x = rng.uniform(-3.0, 3.0);
    return v;
}

bool bits_equal(const std::vector<double>& a, const std::vector<double>& b) {
    return a.size() == b.size() && std::memcmp(a.data(), b.data(), a.size() * sizeof(double)) == 0;
}

}  // namespace

TEST_CASE("avx2 kernels match scalar reference bit for bit") {
    const kernels::Ops* simd = kernels::avx2_ops();
    if (simd == nullptr) {
        MESSAGE("avx2 not available on this host; equivalence suite skipped");
        return;
    }
    const kernels::Ops& ref = kernels::scalar_ops();
    Rng rng(20240811);

    // Shapes chosen to exercise full vector bodies and every tail length.
    const std::size_t dims[] = {1, 2, 3, 4, 5, 7, 8, 13, 16, 31, 64};
    for (std::size_t m : dims)
        for (std::size_t k : dims)
            for (std::size_t n : dims) {
                if (m * k * n > 40000) continue;
                auto a = random_vec(m * k, rng);
                auto b = random_vec(k * n, rng);
                std::vector<double> c1(m * n), c2(m * n);
                ref.matmul(a.data(), b.data(), c1.data(), m, k, n);
                simd->matmul(a.data(), b.data(), c2.data(), m, k, n);
                REQUIRE(bits_equal(c1, c2));
            }

    for (std::size_t n : {1u, 3u, 4u, 5u, 17u, 64u, 1001u}) {
        auto a = random_vec(n, rng);
        auto b = random_vec(n, rng);
        std::vector<double> o1(n), o2(n);

        ref.add(a.data(), b.data(), o1.data(), n);
        simd->add(a.data(), b.data(), o2.data(), n);
        CHECK(bits_equal(o1, o2));

        ref.sub(a.data(), b.data(), o1.data(), n);
        simd->sub(a.data(), b.data(), o2.data(), n);
        CHECK(bits_equal(o1, o2));

        ref.hadamard(a.data(), b.data(), o1.data(), n);
        simd->hadamard(a.data(), b.data(), o2.data(), n);
        CHECK(bits_equal(o1, o2));

        ref.scale(a.data(), 0.37, o1.data(), n);
        simd->scale(a.data(), 0.37, o2.data(), n);
        CHECK(bits_equal(o1, o2));

        std::vector<double> y1 = b, y2 = b;
        ref.axpy(-1.25, a.data(), y1.data(), n);
        simd->axpy(-1.25, a.data(), y2.data(), n);
        CHECK(bits_equal(y1, y2));

        ref.relu(a.data(), o1.data(), n);
        simd->relu(a.data(), o2.data(), n);
        CHECK(bits_equal(o1, o2));

        ref.relu_mask(a.data(), b.data(), o1.data(), n);
        simd->relu_mask(a.data(), b.data(), o2.data(), n);
        CHECK(bits_equal(o1, o2));
    }

    // Signed zeros and exact zeros through relu: both lanes must emit +0.0.
    std::vector<double> edge = {-0.0, 0.0, -1.0, 1.0, -0.0, 0.0, 5.0, -5.0, -0.0};
    std::vector<double> g(edge.size(), 2.0);
    std::vector<double> o1(edge.size()), o2(edge.size());
    ref.relu(edge.data(), o1.data(), edge.size());
    simd->relu(edge.data(), o2.data(), edge.size());
    CHECK(bits_equal(o1, o2));
    for (double v : o1) CHECK(!std::signbit(v));
    ref.relu_mask(edge.data(), g.data(), o1.data(), edge.size());
    simd->relu_mask(edge.data(), g.data(), o2.data(), edge.size());
    CHECK(bits_equal(o1, o2));

    for (std::size_t rows : {1u, 2u, 5u})
        for (std::size_t cols : {1u, 3u, 4u, 9u, 32u}) {
            auto x = random_vec(rows * cols, rng);
            auto b = random_vec(cols, rng);
            std::vector<double> r1(rows * cols), r2(rows * cols);
            ref.bias_add(x.data(), b.data(), r1.data(), rows, cols);
            simd->bias_add(x.data(), b.data(), r2.data(), rows, cols);
            CHECK(bits_equal(r1, r2));
        }
}

TEST_CASE("kernel selection") {
    CHECK((kernels::active_name() == "scalar" || kernels::active_name() == "avx2"));
    kernels::select("scalar");
    CHECK(kernels::active_name() == "scalar");
    kernels::select("auto");
    CHECK_THROWS(kernels::select("sse9"));
}

TEST_CASE("rng streams are deterministic and split independently") {
    Rng a(42), b(42);
    for (int i = 0; i < 100; ++i) REQUIRE(a.next_u64() == b.next_u64());

    Rng c(42);
    Rng s1 = c.split(1), s2 = c.split(2);
    CHECK(s1.next_u64() != s2.next_u64());

    // uniform() stays in [0, 1) and fills the range
    Rng d(7);
    double mn = 1.0, mx = 0.0;
    for (int i = 0; i < 10000; ++i) {
        double u = d.uniform();
        REQUIRE(u >= 0.0);
        REQUIRE(u < 1.0);
        mn = std::min(mn, u);
        mx = std::max(mx, u);
    }
    CHECK(mn < 0.01);
    CHECK(mx > 0.99);

    // below(n) is uniform enough for corpus sampling
    Rng e(11);
    int counts[5] = {0, 0, 0, 0, 0};
    for (int i = 0; i < 50000; ++i) counts[e.below(5)]++;
    for (int c2 : counts) CHECK(std::fabs(c2 / 50000.0 - 0.2) < 0.01);
}
