#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <numbers>

#include "helpers.hpp"
#include "stochwave/grid.hpp"

using namespace stochwave;

TEST_CASE("grid spacing identity") {
    auto g = make_grid(40.0, 2048);
    CHECK(g->dx * (g->N - 1) == doctest::Approx(80.0).epsilon(1e-15));
    CHECK(g->x(0) == doctest::Approx(-40.0));
    CHECK(g->x(g->N - 1) == doctest::Approx(40.0));
    CHECK_THROWS(Grid(40.0, 8));
}

TEST_CASE("second difference of constants and quadratics") {
    auto g = make_grid(10.0, 129);
    Profile c(g, 1), q(g, 1);
    for (int i = 0; i < g->N; ++i) {
        c.at(0, i) = 3.25;
        q.at(0, i) = g->x(i) * g->x(i);
    }
    Profile dc = second_difference(c);
    Profile dq = second_difference(q);
    for (int i = 1; i + 1 < g->N; ++i) {
        CHECK(dc.at(0, i) == doctest::Approx(0.0).epsilon(1e-12));
        CHECK(dq.at(0, i) == doctest::Approx(2.0).epsilon(1e-9));
    }
}

TEST_CASE("second difference periodic sine has order-2 convergence") {
    const double L = 5.0;
    std::vector<double> hs, errs;
    for (int N : {129, 257, 513}) {
        auto g = make_grid(L, N, BoundaryMode::periodic);
        Profile p(g, 1);
        for (int i = 0; i < N; ++i) p.at(0, i) = std::sin(std::numbers::pi * g->x(i) / L);
        Profile d = second_difference(p);
        double kk = std::pow(std::numbers::pi / L, 2);
        double err = 0.0;
        for (int i = 0; i < N; ++i)
            err = std::max(err, std::abs(d.at(0, i) + kk * p.at(0, i)));
        hs.push_back(g->dx);
        errs.push_back(err);
    }
    auto fit = testutil::loglog_fit(hs, errs);
    CHECK(fit.slope == doctest::Approx(2.0).epsilon(0.05));
}

TEST_CASE("second difference is linear") {
    auto g = make_grid(8.0, 65);
    auto p = testutil::random_interior_profile(g, 2, 11);
    auto q = testutil::random_interior_profile(g, 2, 12);
    Profile lhs = second_difference(2.5 * p + (-1.25) * q);
    Profile rhs = 2.5 * second_difference(p) + (-1.25) * second_difference(q);
    for (size_t i = 0; i < lhs.values.size(); ++i)
        CHECK(lhs.values[i] == doctest::Approx(rhs.values[i]).epsilon(1e-12));
}

TEST_CASE("inner product basics") {
    auto g = make_grid(10.0, 513);
    Profile z(g, 1);
    auto q = testutil::random_interior_profile(g, 1, 5);
    CHECK(inner_product(z, q) == 0.0);
    CHECK(inner_product(q, q) > 0.0);
    auto p = testutil::random_interior_profile(g, 1, 6);
    CHECK(inner_product(p, q) == doctest::Approx(inner_product(q, p)).epsilon(1e-14));

    auto g2 = make_grid(10.0, 257);
    Profile r(g2, 1);
    CHECK_THROWS(inner_product(q, r));
}

TEST_CASE("hat function norm converges at order 2") {
    // continuum: int (1-|x|)_+^2 dx = 2/3
    std::vector<double> hs, errs;
    for (int N : {65, 129, 257, 513}) {
        auto g = make_grid(4.0, N);
        Profile hat(g, 1);
        for (int i = 0; i < N; ++i)
            hat.at(0, i) = std::max(0.0, 1.0 - std::abs(g->x(i)));
        errs.push_back(std::abs(inner_product(hat, hat) - 2.0 / 3.0) + 1e-18);
        hs.push_back(g->dx);
    }
    auto fit = testutil::loglog_fit(hs, errs);
    CHECK(fit.slope >= 1.9);
}

TEST_CASE("shift identity and inverse pair") {
    auto g = make_grid(10.0, 513);
    auto p = testutil::bump_profile(g, 1, 1.0, 2.0);
    Profile same = shift(p, 0.0);
    for (int i = 0; i < g->N; ++i)
        CHECK(same.at(0, i) == doctest::Approx(p.at(0, i)).epsilon(1e-14));
    Profile back = shift(shift(p, 0.7), -0.7);
    double err = 0.0;
    for (int i = 0; i < g->N; ++i) err = std::max(err, std::abs(back.at(0, i) - p.at(0, i)));
    CHECK(err < 1e-6);
    CHECK_THROWS_AS(shift(p, 5.0), ShiftOutOfDomain);
}

TEST_CASE("shift of the tanh front matches the closed form") {
    auto g = make_grid(40.0, 4096);
    Profile phi(g, 1);
    auto tanh_front = [](double x) { return 0.5 * (1.0 - std::tanh(x / (2.0 * std::sqrt(2.0)))); };
    for (int i = 0; i < g->N; ++i) phi.at(0, i) = tanh_front(g->x(i));
    Profile sh = shift(phi, 1.0);
    double err = 0.0;
    for (int i = 0; i < g->N; ++i)
        err = std::max(err, std::abs(sh.at(0, i) - tanh_front(g->x(i) - 1.0)));
    CHECK(err <= 1e-6);
}

TEST_CASE("shift approximately preserves inner products of smooth profiles") {
    auto g = make_grid(12.0, 1025);
    auto p = testutil::bump_profile(g, 1, -1.0, 1.5);
    auto q = testutil::bump_profile(g, 1, 0.5, 2.0);
    double before = inner_product(p, q);
    double after = inner_product(shift(p, 0.31), shift(q, 0.31));
    CHECK(std::abs(after - before) < 5.0 * std::pow(g->dx, 3));
}
