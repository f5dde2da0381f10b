#include <doctest.h>

#include <omp.h>

#include <cmath>
#include <vector>

#include "emotionbox/nn/kernels.hpp"
#include "emotionbox/rng.hpp"

using namespace ebox::nn;

namespace {

std::vector<float> random_vec(std::size_t n, std::uint64_t seed) {
    ebox::Rng rng(seed);
    std::vector<float> v(n);
    for (auto& x : v) x = static_cast<float>(rng.uniform(-1.0, 1.0));
    return v;
}

using Gemm = void (*)(int, int, int, std::span<const float>, std::span<const float>, std::span<float>);

void compare(Gemm fast, Gemm slow, int m, int n, int k, std::size_t a_size, std::size_t b_size, std::size_t c_size) {
    const auto a = random_vec(a_size, 1);
    const auto b = random_vec(b_size, 2);
    auto c1 = random_vec(c_size, 3);
    auto c2 = c1;
    fast(m, n, k, a, b, c1);
    slow(m, n, k, a, b, c2);
    for (std::size_t i = 0; i < c_size; ++i) CHECK(c1[i] == doctest::Approx(c2[i]).epsilon(1e-4));
}

}  // namespace

TEST_CASE("parallel gemms match the serial references") {
    const int shapes[][3] = {{1, 1, 1}, {3, 5, 7}, {64, 33, 17}, {130, 240, 265}, {7, 512, 64}};
    for (const auto& s : shapes) {
        const int m = s[0], n = s[1], k = s[2];
        const auto mn = static_cast<std::size_t>(m * n), mk = static_cast<std::size_t>(m * k), kn = static_cast<std::size_t>(k * n);
        compare(kernels::gemm_nn<float>, kernels::reference::gemm_nn<float>, m, n, k, mk, kn, mn);
        compare(kernels::gemm_tn<float>, kernels::reference::gemm_tn<float>, m, n, k, mk, mn, kn);
        compare(kernels::gemm_nt<float>, kernels::reference::gemm_nt<float>, m, n, k, mn, kn, mk);
    }
}

TEST_CASE("reference gemm against hand-computed product") {
    const std::vector<double> a{1, 2, 3, 4, 5, 6};     // 2×3
    const std::vector<double> b{7, 8, 9, 10, 11, 12};  // 3×2
    std::vector<double> c(4, 1.0);
    kernels::gemm_nn<double>(2, 2, 3, a, b, c);
    CHECK(c == std::vector<double>{59, 65, 140, 155});

    std::vector<double> ct(9, 0.0);  // Aᵀ·A', A 2×3, B 2×3
    kernels::gemm_tn<double>(2, 3, 3, a, a, ct);
    CHECK(ct == std::vector<double>{17, 22, 27, 22, 29, 36, 27, 36, 45});

    std::vector<double> cn(4, 0.0);  // A·Aᵀ
    kernels::gemm_nt<double>(2, 3, 2, a, a, cn);
    CHECK(cn == std::vector<double>{14, 32, 32, 77});
}

TEST_CASE("bias and column sums") {
    std::vector<float> a{1, 2, 3, 4, 5, 6};
    std::vector<float> sums{10, 20, 30};
    kernels::add_column_sums<float>(2, 3, a, sums);
    CHECK(sums == std::vector<float>{15, 27, 39});
    const std::vector<float> bias{1, 0, -1};
    kernels::add_row_bias<float>(2, 3, a, bias);
    CHECK(a == std::vector<float>{2, 2, 2, 5, 5, 5});
}

TEST_CASE("results are bitwise identical across thread counts") {
    const int m = 300, n = 200, k = 150;
    const auto a = random_vec(static_cast<std::size_t>(m * k), 4);
    const auto b = random_vec(static_cast<std::size_t>(k * n), 5);
    const auto bt = random_vec(static_cast<std::size_t>(m * n), 6);
    const int saved = omp_get_max_threads();
    std::vector<std::vector<float>> results;
    for (int threads : {1, 2, 4}) {
        omp_set_num_threads(threads);
        std::vector<float> c(static_cast<std::size_t>(m * n), 0.0f);
        kernels::gemm_nn<float>(m, n, k, a, b, c);
        std::vector<float> d(static_cast<std::size_t>(k * n), 0.0f);
        kernels::gemm_tn<float>(m, n, k, a, bt, d);
        c.insert(c.end(), d.begin(), d.end());
        results.push_back(std::move(c));
    }
    omp_set_num_threads(saved);
    CHECK(results[0] == results[1]);
    CHECK(results[0] == results[2]);
}
