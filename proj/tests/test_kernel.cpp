#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <numbers>

#include "helpers.hpp"
#include "stochwave/kernel.hpp"

using namespace stochwave;

TEST_CASE("gaussian kernel fourier matches the closed-form transform") {
    auto g = make_grid(40.0, 2048);
    auto k = make_gaussian_kernel(g, 1.0);
    CHECK(k.q0 == doctest::Approx(0.5));
    const auto& qh = kernel_fourier(k);
    const int M = k.m_unique();
    // bin j sits at wavenumber pi*j/L; check the resolved band |k| <= pi/(4 dx)
    const double kmax = std::numbers::pi / (4.0 * g->dx);
    for (int j = 0; j <= M / 2; ++j) {
        double kc = std::numbers::pi * j / g->L;
        if (kc > kmax) break;
        double exact = std::exp(-kc * kc / std::numbers::pi);
        CHECK(std::abs(qh[j] - exact) < 1e-6);
    }
}

TEST_CASE("tent kernel transform is nonnegative") {
    auto g = make_grid(20.0, 1024);
    auto k = make_tent_kernel(g, 1.0);
    for (double v : kernel_fourier(k)) CHECK(v >= 0.0);
}

TEST_CASE("narrow gaussian is flat over the resolved band") {
    auto g = make_grid(20.0, 2048);
    auto k = make_gaussian_kernel(g, 0.02);
    const auto& qh = kernel_fourier(k);
    // delta-like kernel: qhat ~ 1 until zeta^2 k^2/pi becomes visible
    for (int j = 0; j < 100; ++j) CHECK(qh[j] == doctest::Approx(1.0).epsilon(0.05));
}

TEST_CASE("sqrt kernel convolution identity p*p = q") {
    auto g = make_grid(40.0, 2048);
    auto k = make_gaussian_kernel(g, 1.0);
    auto p = sqrt_kernel(k);
    const int M = k.m_unique();
    // direct circular convolution dx * sum p(i-j) p(j) against q_row
    Fft fft(M);
    std::vector<std::complex<double>> a(fft.spectrum_size());
    fft.forward(p.data(), a.data());
    for (auto& z : a) z = z * z * g->dx;
    std::vector<double> pp(M);
    fft.inverse(a.data(), pp.data());
    double err = 0.0;
    for (int j = 0; j < M; ++j) err = std::max(err, std::abs(pp[j] - k.q_row[j]));
    CHECK(err <= 1e-10);
}

TEST_CASE("sqrt kernel has the paper's gaussian exponent") {
    auto g = make_grid(40.0, 4096);
    const double zeta = 1.0;
    auto k = make_gaussian_kernel(g, zeta);
    auto p = sqrt_kernel(k);
    // p(x) should be Gaussian with exponent -pi x^2 / (2 zeta^2); i.e. the
    // fitted width of p is the q width divided by sqrt(2).
    // fit log p(j dx) = log p(0) - pi x^2/(2 zeta^2)
    std::vector<double> xs, ys;
    for (int j = 1; j < 40; ++j) {
        double x = j * g->dx;
        if (p[j] <= 0) break;
        xs.push_back(x * x);
        ys.push_back(std::log(p[j]));
    }
    auto fit = testutil::linear_fit(xs, ys);
    CHECK(fit.slope == doctest::Approx(-std::numbers::pi / (2.0 * zeta * zeta)).epsilon(1e-3));
}

TEST_CASE("impulse-like kernel acts as identity") {
    auto g = make_grid(20.0, 1024);
    // tabulated near-delta: tent of width dx (mass ~ dx)
    std::vector<double> lag = {0.0, g->dx};
    std::vector<double> val = {1.0 / g->dx, 0.0};
    auto k = make_tabulated_kernel(g, lag, val);
    auto v = testutil::bump_profile(g, 1, 0.0, 3.0);
    Profile qv = convolve_q(k, v);
    double err = 0.0;
    for (int i = 0; i + 1 < g->N; ++i) err = std::max(err, std::abs(qv.at(0, i) - v.at(0, i)));
    CHECK(err < 5e-3);  // near-delta up to O(dx^2) smoothing

    auto p = sqrt_kernel(k);
    // sqrt of a near-impulse is a scaled near-impulse
    CHECK(p[0] > 10.0 * std::abs(p[5]));
}

TEST_CASE("basis functions are orthonormal and Q-eigen within tolerance") {
    auto g = make_grid(40.0, 2048);
    auto k = make_gaussian_kernel(g, 1.0);
    auto basis = basis_eigendata(g, k, 150);
    REQUIRE(basis.funcs.size() == 301);
    CHECK(basis.lambdas[0] == doctest::Approx(1.0));

    for (size_t idx : {size_t(0), size_t(1), size_t(2), size_t(99), size_t(300)})
        CHECK(inner_product(basis.funcs[idx], basis.funcs[idx]) ==
              doctest::Approx(1.0).epsilon(2e-3));

    // Q e_k ~ lambda_k e_k, relative defect <= 1e-3 (k <= 150)
    double worst = 0.0;
    for (size_t idx = 0; idx < basis.funcs.size(); ++idx) {
        Profile qe = convolve_q(k, basis.funcs[idx]);
        axpy(-basis.lambdas[idx], basis.funcs[idx], qe);
        worst = std::max(worst, l2_norm(qe) / l2_norm(basis.funcs[idx]));
    }
    CHECK(worst <= 1e-3);
}

TEST_CASE("convolution is symmetric and positive semidefinite") {
    auto g = make_grid(20.0, 512);
    auto k = make_gaussian_kernel(g, 0.7);
    for (uint64_t s = 0; s < 64; ++s) {
        auto v = testutil::random_interior_profile(g, 1, 1000 + s);
        double qvv = inner_product(convolve_q(k, v), v);
        CHECK(qvv >= -1e-10 * l2_norm_sq(v));
    }
    auto v = testutil::random_interior_profile(g, 1, 1);
    auto w = testutil::random_interior_profile(g, 1, 2);
    double a = inner_product(convolve_q(k, v), w);
    double b = inner_product(v, convolve_q(k, w));
    CHECK(a == doctest::Approx(b).epsilon(1e-12));
}

TEST_CASE("non-positive-definite tabulated kernel is rejected") {
    auto g = make_grid(10.0, 256);
    // a kernel with a deep negative side lobe has sign-indefinite transform
    std::vector<double> lag, val;
    for (int j = 0; j <= 40; ++j) {
        double x = j * 0.25;
        lag.push_back(x);
        val.push_back(std::cos(4.0 * x) * std::exp(-0.05 * x));
    }
    CHECK_THROWS_AS(make_tabulated_kernel(g, lag, val), NotPositiveSemidefinite);
}
