#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "helpers.hpp"
#include "stochwave/ensemble.hpp"

using namespace stochwave;

namespace {
EnsembleSpec small_spec(int N = 257, double T = 2.0) {
    EnsembleSpec spec;
    spec.model = nagumo_model(0.25, 1.0, 0.0);
    auto grid = make_grid(40.0, N);
    spec.kernels = {make_gaussian_kernel(grid, 1.0)};
    spec.wave_det = solve_wave_bvp(spec.model, nagumo_explicit(grid, 0.25, 1.0));
    spec.sigmas = {0.1};
    spec.realizations = 16;
    spec.base_seed = 77;
    spec.sim.dt = 0.01;
    spec.sim.T = T;
    spec.sim.record_every = 20;
    spec.k_max = 24;
    return spec;
}
}  // namespace

TEST_CASE("ensemble statistics are bit-identical across thread counts") {
    auto spec = small_spec();
    spec.n_threads = 1;
    auto s1 = run_ensemble(spec);
    spec.n_threads = 2;
    auto s2 = run_ensemble(spec);
    spec.n_threads = 8;
    auto s8 = run_ensemble(spec);
    REQUIRE(s1.per_sigma.size() == 1);
    CHECK(s1.per_sigma[0].mean_v2 == s2.per_sigma[0].mean_v2);
    CHECK(s1.per_sigma[0].mean_v2 == s8.per_sigma[0].mean_v2);
    CHECK(s1.per_sigma[0].mean_gamma_dev == s8.per_sigma[0].mean_gamma_dev);
    CHECK(s1.per_sigma[0].var_gamma == s8.per_sigma[0].var_gamma);
    CHECK(s1.per_sigma[0].mean_sup == s8.per_sigma[0].mean_sup);
}

TEST_CASE("sigma zero gives zero-variance statistics") {
    auto spec = small_spec();
    spec.sigmas = {0.0};
    spec.realizations = 4;
    auto s = run_ensemble(spec);
    const auto& ps = s.per_sigma[0];
    CHECK(ps.n_effective == 4);
    for (double v : ps.var_gamma) CHECK(v <= 1e-20);
    for (double v : ps.mean_v2) CHECK(v <= 1e-16);
    CHECK(ps.c_obs == doctest::Approx(ps.c_sigma).epsilon(1e-10));
}

TEST_CASE("exclusion accounting: effective plus failed equals R") {
    auto spec = small_spec();
    auto s = run_ensemble(spec);
    CHECK(s.per_sigma[0].n_effective + s.per_sigma[0].n_failed == spec.realizations);
    CHECK(s.valid);
}

TEST_CASE("standard errors shrink like 1/sqrt(R) on nested subsamples") {
    auto spec = small_spec(257, 1.0);
    spec.realizations = 32;
    auto s32 = run_ensemble(spec);
    spec.realizations = 128;
    auto s128 = run_ensemble(spec);
    double ratio = s32.per_sigma[0].se_v2.back() / s128.per_sigma[0].se_v2.back();
    CHECK(ratio == doctest::Approx(2.0).epsilon(0.5));
}

TEST_CASE("running sup is monotone and stability functional behaves") {
    auto spec = small_spec(257, 4.0);
    spec.realizations = 8;
    auto s = run_ensemble(spec);
    const auto& ps = s.per_sigma[0];
    for (size_t i = 1; i < ps.mean_sup.size(); ++i)
        CHECK(ps.mean_sup[i] >= ps.mean_sup[i - 1] - 1e-15);
    for (size_t i = 0; i < ps.mean_N.size(); ++i) CHECK(ps.mean_N[i] >= 0.0);
    // epsilon-monotonicity of the discounted accumulator
    auto spec2 = small_spec(257, 4.0);
    spec2.realizations = 8;
    spec2.stability_epsilon = 1.0;
    auto s2 = run_ensemble(spec2);
    for (size_t i = 0; i < ps.mean_N.size(); ++i)
        CHECK(s2.per_sigma[0].mean_N[i] <= ps.mean_N[i] + 1e-12);
}

TEST_CASE("variance of gamma grows linearly with the predicted slope") {
    auto spec = small_spec(513, 4.0);
    spec.sigmas = {0.05};
    spec.realizations = 400;
    spec.sim.record_every = 40;
    spec.co_evolve_orders = false;
    auto s = run_ensemble(spec);
    const auto& ps = s.per_sigma[0];
    // prediction sigma^2 <q*(g psi), g psi>
    Profile gphi(spec.wave_det.phi.grid, 1);
    spec.model.fn->g(spec.wave_det.phi, gphi);
    Profile gpsi(spec.wave_det.phi.grid, 1);
    for (int i = 0; i < spec.wave_det.phi.grid_N(); ++i)
        gpsi.at(0, i) = gphi.at(0, i) * spec.wave_det.psi.at(0, i);
    double slope = 0.05 * 0.05 * inner_product(convolve_q(spec.kernels[0], gpsi), gpsi);
    auto fit = testutil::linear_fit(ps.times, ps.var_gamma);
    CHECK(fit.slope == doctest::Approx(slope).epsilon(0.15));
}

TEST_CASE("observed shape lookup and errors") {
    auto spec = small_spec(257, 2.0);
    spec.snapshot_times = {1.0, 2.0};
    spec.realizations = 8;
    auto s = run_ensemble(spec);
    Profile shape = observed_limiting_shape(s.per_sigma[0], spec.wave_det.phi, 2.0);
    CHECK(shape.grid_N() == 257);
    CHECK_THROWS(observed_limiting_shape(s.per_sigma[0], spec.wave_det.phi, 0.7));
}
