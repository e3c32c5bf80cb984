#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "helpers.hpp"
#include "stochwave/stochastic_wave.hpp"

using namespace stochwave;

namespace {
struct NagumoSetup {
    GridPtr grid;
    ModelSpec model;
    std::vector<CovarianceKernel> kernels;
    WavePair wave;
    NagumoSetup(double a, double mu, int N = 2049, double zeta = 1.0) {
        grid = make_grid(40.0, N);
        model = nagumo_model(a, 1.0, mu);
        kernels = {make_gaussian_kernel(grid, zeta)};
        wave = solve_wave_bvp(model, nagumo_explicit(grid, a, 1.0));
    }
};
}  // namespace

TEST_CASE("F_sigma vanishes on the deterministic wave at sigma 0") {
    NagumoSetup s(0.25, 0.0);
    Profile F = F_sigma(s.model, s.kernels, s.wave, s.wave.phi, s.wave.c, 0.0);
    double m = 0.0;
    for (double v : F.values) m = std::max(m, std::abs(v));
    CHECK(m <= 1e-10);
}

TEST_CASE("Ito and Stratonovich residuals differ by the correction term") {
    NagumoSetup si(0.3, 0.0);
    auto model_s = nagumo_model(0.3, 1.0, 1.0);
    const double sigma = 0.7;
    Profile Fi = F_sigma(si.model, si.kernels, si.wave, si.wave.phi, si.wave.c, sigma);
    Profile Fs = F_sigma(model_s, si.kernels, si.wave, si.wave.phi, si.wave.c, sigma);
    // Fs - Fi = sigma^2 * (1/2) q(0) g'(Phi) g(Phi)
    const double q0 = si.kernels[0].q0;
    double err = 0.0;
    for (int i = 1; i + 1 < si.grid->N; ++i) {
        double u = si.wave.phi.at(0, i);
        double expect = sigma * sigma * 0.5 * q0 * (1.0 - 2.0 * u) * u * (1.0 - u);
        err = std::max(err, std::abs(Fs.at(0, i) - Fi.at(0, i) - expect));
    }
    CHECK(err <= 1e-14);
}

TEST_CASE("directional derivative of F_sigma matches finite differences") {
    NagumoSetup s(0.25, 1.0, 513);
    const double sigma = 0.6;
    auto dphi = testutil::bump_profile(s.grid, 1, 1.0, 2.5, 1.0);
    dphi.at(0, 0) = dphi.at(0, s.grid->N - 1) = 0.0;
    const double dc = 0.37;
    Profile an = F_sigma_directional(s.model, s.kernels, s.wave, s.wave.phi, s.wave.c,
                                     sigma, dphi, dc);
    const double eps = 1e-6;
    Profile up = s.wave.phi, dn = s.wave.phi;
    axpy(eps, dphi, up);
    axpy(-eps, dphi, dn);
    Profile Fp = F_sigma(s.model, s.kernels, s.wave, up, s.wave.c + eps * dc, sigma);
    Profile Fm = F_sigma(s.model, s.kernels, s.wave, dn, s.wave.c - eps * dc, sigma);
    double err = 0.0, scale = 0.0;
    for (int i = 1; i + 1 < s.grid->N; ++i) {
        double fd = (Fp.at(0, i) - Fm.at(0, i)) / (2.0 * eps);
        err = std::max(err, std::abs(fd - an.at(0, i)));
        scale = std::max(scale, std::abs(an.at(0, i)));
    }
    CHECK(err / scale <= 1e-5);
}

TEST_CASE("fhn directional derivative matches finite differences") {
    auto grid = make_grid(40.0, 513);
    auto model = fhn_model(0.1, 0.01, 0.01, 5.0, 0.0);
    auto kern = make_gaussian_kernel(grid, 1.0);
    std::vector<CovarianceKernel> kernels = {kern, kern};
    // a synthetic smooth profile pair is enough to exercise the assembly
    WavePair w;
    w.phi = Profile(grid, 2);
    for (int i = 0; i < grid->N; ++i) {
        double x = grid->x(i);
        w.phi.at(0, i) = std::exp(-x * x / 30.0);
        w.phi.at(1, i) = 0.1 * std::exp(-(x - 2.0) * (x - 2.0) / 40.0);
    }
    w.c = 0.45;
    w.order = 2;
    w.phi_prime = derivative_profile(w.phi);
    w.psi = Profile(grid, 2);
    for (int i = 0; i < grid->N; ++i) {
        double x = grid->x(i);
        w.psi.at(0, i) = std::exp(-x * x / 25.0);
        w.psi.at(1, i) = 0.5 * std::exp(-x * x / 35.0);
    }
    scale(w.psi, 1.0 / inner_product(w.phi_prime, w.psi));

    Profile dphi(grid, 2);
    for (int i = 1; i + 1 < grid->N; ++i) {
        double x = grid->x(i);
        dphi.at(0, i) = std::sin(0.3 * x) * std::exp(-x * x / 50.0);
        dphi.at(1, i) = std::cos(0.2 * x) * std::exp(-x * x / 45.0);
    }
    const double sigma = 0.4, dc = -0.21;
    Profile an = F_sigma_directional(model, kernels, w, w.phi, w.c, sigma, dphi, dc);
    const double eps = 1e-6;
    Profile up = w.phi, dn = w.phi;
    axpy(eps, dphi, up);
    axpy(-eps, dphi, dn);
    Profile Fp = F_sigma(model, kernels, w, up, w.c + eps * dc, sigma);
    Profile Fm = F_sigma(model, kernels, w, dn, w.c - eps * dc, sigma);
    double err = 0.0, scale_ = 0.0;
    for (int c = 0; c < 2; ++c)
        for (int i = 1; i + 1 < grid->N; ++i) {
            double fd = (Fp.at(c, i) - Fm.at(c, i)) / (2.0 * eps);
            err = std::max(err, std::abs(fd - an.at(c, i)));
            scale_ = std::max(scale_, std::abs(an.at(c, i)));
        }
    CHECK(err / scale_ <= 1e-5);
}

TEST_CASE("instantaneous wave at sigma 0 returns the deterministic pair") {
    NagumoSetup s(0.25, 0.0, 1025);
    auto r = solve_instantaneous_wave(s.model, s.kernels, s.wave, 0.0);
    CHECK(r.converged);
    CHECK(r.wave.c == s.wave.c);
    CHECK(l2_norm(r.wave.phi - s.wave.phi) == 0.0);
}

TEST_CASE("second-order coefficients match the paper values") {
    NagumoSetup si(0.25, 0.0, 2049);
    auto exi = expand_second_order(si.model, si.kernels, si.wave);
    CHECK(exi.c_02 == doctest::Approx(-0.0298).epsilon(0.05));
    CHECK(std::abs(exi.bordered_multiplier) <= 1e-8);

    NagumoSetup ss(0.25, 1.0, 2049);
    auto exs = expand_second_order(ss.model, ss.kernels, ss.wave);
    CHECK(exs.c_02 == doctest::Approx(0.0563).epsilon(0.05));

    // Ito/Stratonovich sign structure for a < 1/2
    CHECK(exi.c_02 < 0.0);
    CHECK(exs.c_02 > 0.0);

    // Fredholm compatibility
    Profile f2 = F_02(si.model, si.kernels, si.wave, si.wave.phi);
    Profile comb = f2;
    axpy(exi.c_02, si.wave.phi_prime, comb);
    CHECK(std::abs(inner_product(comb, si.wave.psi)) <= 1e-10);
}

TEST_CASE("steepening and flattening at a=0.45, sigma=1.3") {
    NagumoSetup si(0.45, 0.0, 2049);
    NagumoSetup ss(0.45, 1.0, 2049);
    auto ri = solve_instantaneous_wave(si.model, si.kernels, si.wave, 1.3);
    auto rs = solve_instantaneous_wave(ss.model, ss.kernels, ss.wave, 1.3);
    REQUIRE(ri.converged);
    REQUIRE(rs.converged);
    auto max_slope = [](const WavePair& w) {
        double m = 0.0;
        for (double v : w.phi_prime.values) m = std::max(m, std::abs(v));
        return m;
    };
    double det = max_slope(si.wave);
    CHECK(max_slope(ri.wave) > det);   // Ito steepens
    CHECK(max_slope(rs.wave) < det);   // Stratonovich flattens
}

TEST_CASE("deviation from the deterministic wave scales as sigma^2, remainder sigma^4") {
    NagumoSetup s(0.25, 0.0, 2049);
    auto ex = expand_second_order(s.model, s.kernels, s.wave);
    std::vector<double> sig = {0.05, 0.1, 0.2, 0.4};
    std::vector<double> dev, rem;
    for (double sg : sig) {
        auto r = solve_instantaneous_wave(s.model, s.kernels, s.wave, sg);
        REQUIRE(r.converged);
        Profile d = r.wave.phi - s.wave.phi;
        dev.push_back(std::sqrt(h1_norm_sq(d)) + std::abs(r.wave.c - s.wave.c));
        Profile d2 = d;
        axpy(-sg * sg, ex.phi_02, d2);
        rem.push_back(std::sqrt(h1_norm_sq(d2)) +
                      std::abs(r.wave.c - s.wave.c - sg * sg * ex.c_02));
    }
    auto f1 = testutil::loglog_fit(sig, dev);
    CHECK(f1.slope == doctest::Approx(2.0).epsilon(0.05));
    auto f2 = testutil::loglog_fit(sig, rem);
    CHECK(f2.slope >= 3.5);
}

TEST_CASE("sne wave limits and formulas") {
    auto grid = make_grid(40.0, 1025);
    auto sw0 = sne_wave(grid, 0.25, 0.0, 0.5);
    CHECK(sw0.a_eff == doctest::Approx(0.25));
    CHECK(sw0.c == doctest::Approx(std::sqrt(2.0) * 0.25));

    auto sw1 = sne_wave(grid, 0.25, 1.0, 0.5);
    CHECK(sw1.a_eff == doctest::Approx(0.0));
    CHECK(sw1.c == doctest::Approx(0.5));

    CHECK_THROWS_AS(sne_wave(grid, 0.25, 2.0, 0.5), SneOutOfRange);

    // sne deviates from the solver wave by a nonzero O(sigma^2) amount
    NagumoSetup s(0.25, 1.0, 2049);
    const double sigma = 0.4;
    auto r = solve_instantaneous_wave(s.model, s.kernels, s.wave, sigma);
    auto sw = sne_wave(s.grid, 0.25, sigma, s.kernels[0].q0);
    double dc = std::abs(sw.c - r.wave.c);
    CHECK(dc > 1e-3 * sigma * sigma);
    CHECK(dc < 1.0);
}
