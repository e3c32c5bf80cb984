#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "helpers.hpp"
#include "stochwave/expansion.hpp"

using namespace stochwave;

namespace {
struct Setup {
    GridPtr grid;
    ModelSpec model;
    std::vector<CovarianceKernel> kernels;
    WavePair wave;
    Setup(int N = 1025, double a = 0.25) {
        grid = make_grid(40.0, N);
        model = nagumo_model(a, 1.0, 0.0);
        kernels = {make_gaussian_kernel(grid, 1.0)};
        wave = solve_wave_bvp(model, nagumo_explicit(grid, a, 1.0));
    }
};
}  // namespace

TEST_CASE("S_sigma0 removes the psi component and matches the termwise formula") {
    Setup s;
    auto ctx = make_expansion_context(s.model, s.kernels, s.wave, 32, 2e-3, 20.0);
    for (uint64_t sd = 0; sd < 4; ++sd) {
        auto w = testutil::random_interior_profile(s.grid, 1, 100 + sd);
        Profile out = S_sigma0(ctx, w);
        CHECK(std::abs(inner_product(s.wave.psi, out)) <= 1e-10 * l2_norm(out));
    }
    Profile zero(s.grid, 1);
    CHECK(l2_norm(S_sigma0(ctx, zero)) == 0.0);

    // termwise: g(Phi0) e - Phi0' <e, g(Phi0) psi>
    auto basis = basis_eigendata(s.grid, s.kernels[0], 10);
    const Profile& e = basis.funcs[7];
    Profile gphi(s.grid, 1);
    s.model.fn->g(s.wave.phi, gphi);
    Profile gpsi(s.grid, 1);
    for (int i = 0; i < s.grid->N; ++i)
        gpsi.at(0, i) = gphi.at(0, i) * s.wave.psi.at(0, i);
    Profile manual(s.grid, 1);
    double ip = inner_product(e, gpsi) / inner_product(s.wave.phi_prime, s.wave.psi);
    for (int i = 0; i < s.grid->N; ++i)
        manual.at(0, i) = gphi.at(0, i) * e.at(0, i) - s.wave.phi_prime.at(0, i) * ip;
    Profile via = S_sigma0(ctx, e);
    CHECK(l2_norm(via - manual) <= 1e-12);
}

TEST_CASE("zero noise stream keeps V1, V2, Gamma frozen at zero") {
    Setup s(513);
    auto ctx = make_expansion_context(s.model, s.kernels, s.wave, 16, 2e-3, 20.0);
    OrderStepper st(ctx, 1e-2);
    Profile V1(s.grid, 1), V2(s.grid, 1), dW(s.grid, 1);
    double G1 = 0.0, G2 = 0.0;
    for (int k = 0; k < 50; ++k) {
        st.step_second(V1, V2, G2, dW);
        st.step_first(V1, G1, dW);
    }
    CHECK(l2_norm(V1) == 0.0);
    CHECK(l2_norm(V2) == 0.0);
    CHECK(G1 == 0.0);
    CHECK(G2 == 0.0);
}

TEST_CASE("Gamma1 diffuses with the predicted variance and zero mean") {
    Setup s(513);
    auto ctx = make_expansion_context(s.model, s.kernels, s.wave, 16, 2e-3, 20.0);
    // predicted slope <q*(g psi), g psi> with the normalized psi
    Profile gphi(s.grid, 1);
    s.model.fn->g(s.wave.phi, gphi);
    Profile gpsi(s.grid, 1);
    for (int i = 0; i < s.grid->N; ++i)
        gpsi.at(0, i) = gphi.at(0, i) * s.wave.psi.at(0, i);
    double slope_pred = inner_product(convolve_q(s.kernels[0], gpsi), gpsi);

    const int R = 2000;
    const double T = 2.0, dt = 0.01;
    double sum = 0.0, sum2 = 0.0;
    for (int r = 0; r < R; ++r) {
        NoiseSampler noise(s.kernels, derive_seed(42, r));
        OrderStepper st(ctx, dt);
        Profile V1(s.grid, 1);
        double G1 = 0.0;
        for (int k = 0; k < static_cast<int>(T / dt); ++k) {
            Profile dW = noise.sample_increment(dt);
            st.step_first(V1, G1, dW);
        }
        sum += G1;
        sum2 += G1 * G1;
    }
    double mean = sum / R;
    double var = sum2 / R - mean * mean;
    double se_mean = std::sqrt(var / R);
    CHECK(std::abs(mean) <= 3.0 * se_mean);
    double se_var = var * std::sqrt(2.0 / R);
    CHECK(std::abs(var - slope_pred * T) <= 3.0 * se_var);
}

TEST_CASE("E||V1||^2 matches the quadrature prediction") {
    Setup s(513);
    auto ctx = make_expansion_context(s.model, s.kernels, s.wave, 60, 2e-3, 20.0);
    const double T = 4.0, dt = 0.01;
    auto pred = predicted_V1_norm(ctx, {T});
    const int R = 500;
    double sum = 0.0, sum2 = 0.0;
    for (int r = 0; r < R; ++r) {
        NoiseSampler noise(s.kernels, derive_seed(7, r));
        OrderStepper st(ctx, dt);
        Profile V1(s.grid, 1);
        double G1 = 0.0;
        for (int k = 0; k < static_cast<int>(T / dt); ++k)
            st.step_first(V1, G1, noise.sample_increment(dt));
        double v = l2_norm_sq(V1);
        sum += v;
        sum2 += v * v;
    }
    double mean = sum / R;
    double se = std::sqrt((sum2 / R - mean * mean) / R);
    CHECK(std::abs(mean - pred[0]) <= 3.0 * se + 0.02 * pred[0]);
}

TEST_CASE("predicted V1 norm is monotone and saturates") {
    Setup s;
    auto ctx = make_expansion_context(s.model, s.kernels, s.wave, 48, 2e-3, 40.0);
    auto v = predicted_V1_norm(ctx, {0.0, 5.0, 10.0, 20.0, 40.0});
    CHECK(v[0] == 0.0);
    for (size_t i = 1; i < v.size(); ++i) CHECK(v[i] >= v[i - 1]);
    CHECK(std::abs(v[4] - v[3]) <= 0.01 * v[4]);
}

TEST_CASE("orthogonality of V1 and V2 holds along paths") {
    Setup s(513);
    auto ctx = make_expansion_context(s.model, s.kernels, s.wave, 24, 2e-3, 20.0);
    NoiseSampler noise(s.kernels, 99);
    auto path = evolve_second_order(ctx, noise, 3.0, 0.01, 10);
    for (size_t k = 0; k < path.times.size(); ++k) {
        double n1 = std::sqrt(path.v1_norm2[k]);
        double n2 = std::sqrt(path.v2_norm2[k]);
        if (n1 > 0) CHECK(std::abs(path.v1_psi_ip[k]) <= 1e-8 * n1);
        if (n2 > 0) CHECK(std::abs(path.v2_psi_ip[k]) <= 1e-6 * n2);
    }
    CHECK(path.v1_norm2.back() > 0.0);
    CHECK(path.v2_norm2.back() > 0.0);
}

TEST_CASE("E[Gamma2] grows quadratically at small t") {
    Setup s(513);
    auto ctx = make_expansion_context(s.model, s.kernels, s.wave, 24, 2e-3, 20.0);
    const double dt = 0.005;
    std::vector<double> ts = {0.125, 0.25, 0.5};
    std::vector<double> sums(ts.size(), 0.0);
    const int R = 1500;
    for (int r = 0; r < R; ++r) {
        NoiseSampler noise(s.kernels, derive_seed(1234, r));
        OrderStepper st(ctx, dt);
        Profile V1(s.grid, 1), V2(s.grid, 1);
        double G1 = 0.0, G2 = 0.0;
        int k = 0;
        for (size_t it = 0; it < ts.size(); ++it) {
            int k_end = static_cast<int>(std::round(ts[it] / dt));
            for (; k < k_end; ++k) {
                Profile dW = noise.sample_increment(dt);
                st.step_second(V1, V2, G2, dW);
                st.step_first(V1, G1, dW);
            }
            sums[it] += G2;
        }
    }
    std::vector<double> means(ts.size());
    for (size_t i = 0; i < ts.size(); ++i) means[i] = std::abs(sums[i] / R);
    auto fit = testutil::loglog_fit(ts, means);
    CHECK(fit.slope == doctest::Approx(2.0).epsilon(0.12));
}

TEST_CASE("quadratic-term-free model has zero orbital drift rate") {
    auto grid = make_grid(20.0, 257);
    // synthetic linear reaction: d2f == 0 identically
    struct LinearFn : ModelFunctions {
        void f(const Profile& U, Profile& out) const override {
            for (size_t i = 0; i < U.values.size(); ++i) out.values[i] = -U.values[i];
        }
        void df(const Profile& U, std::vector<double>& out) const override {
            out.assign(U.values.size(), -1.0);
        }
        void d2f_vv(const Profile&, const Profile&, Profile& out) const override {
            std::fill(out.values.begin(), out.values.end(), 0.0);
        }
        void g(const Profile& U, Profile& out) const override { out = U; }
        void dg_v(const Profile&, const Profile& V, Profile& out) const override {
            out = V;
        }
        void h_corr(const Profile&, const std::vector<double>&, Profile& out) const override {
            std::fill(out.values.begin(), out.values.end(), 0.0);
        }
        void dh_corr_v(const Profile&, const Profile&, const std::vector<double>&,
                       Profile& out) const override {
            std::fill(out.values.begin(), out.values.end(), 0.0);
        }
        void phi_ref(double, double* out) const override { out[0] = 0.0; }
        void phi_ref_xx(double, double* out) const override { out[0] = 0.0; }
    };
    ModelSpec model;
    model.name = "linear";
    model.n = model.m = 1;
    model.rho = {1.0};
    model.u_minus = model.u_plus = {0.0};
    model.fn = std::make_shared<LinearFn>();

    WavePair w;
    w.phi = testutil::bump_profile(grid, 1, 0.0, 3.0);
    w.c = 0.0;
    w.order = 2;
    w.phi_prime = derivative_profile(w.phi);
    w.psi = w.phi_prime;
    scale(w.psi, 1.0 / inner_product(w.phi_prime, w.psi));
    auto kern = make_gaussian_kernel(grid, 1.0);
    auto ctx = make_expansion_context(model, {kern}, w, 16, 5e-3, 5.0);
    CHECK(expected_gamma2_rate(ctx, 1) == 0.0);
    Profile vod = orbital_drift_shape(ctx, 1);
    CHECK(l2_norm(vod) <= 1e-12);
}

TEST_CASE("orbital drift integrand is orthogonal to psi before inversion") {
    Setup s(513);
    auto ctx = make_expansion_context(s.model, s.kernels, s.wave, 32, 2e-3, 20.0);
    auto sweep = run_expansion_sweep(ctx, {}, 0);
    CHECK(std::abs(inner_product(sweep.v_od_rhs, s.wave.psi)) <=
          1e-8 * l2_norm(sweep.v_od_rhs));
}

TEST_CASE("orbital drift rate approximates the paper value at reduced fidelity") {
    Setup s(1025);
    auto ctx = make_expansion_context(s.model, s.kernels, s.wave, 48, 2e-3, 24.0);
    double cod = expected_gamma2_rate(ctx, 0);
    // full-fidelity value is -0.0043; reduced basis/grid stays within 25%
    CHECK(cod == doctest::Approx(-0.0043).epsilon(0.25));
}

TEST_CASE("gamma3 estimate vanishes with sigma") {
    Setup s(257);
    auto ctx = make_expansion_context(s.model, s.kernels, s.wave, 16, 2e-3, 10.0);
    auto r1 = gamma3_rate(ctx, 0.2, 24, 10.0, 0.02, 5, 0);
    auto r2 = gamma3_rate(ctx, 0.05, 24, 10.0, 0.02, 5, 0);
    CHECK(r1.low_sample_warning);
    // the estimate of c_cub ~ sigma^3 shrinks at least quadratically in sigma
    CHECK(std::abs(r2.c_cub) < std::abs(r1.c_cub) * 0.3 + 3.0 * r2.std_error);
}
