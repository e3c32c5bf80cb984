#pragma once

#include <cmath>
#include <random>
#include <vector>

#include "stochwave/grid.hpp"

namespace testutil {

inline stochwave::Profile random_interior_profile(const stochwave::GridPtr& g, int ncomp,
                                                  uint64_t seed, double amp = 1.0) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> gauss;
    stochwave::Profile p(g, ncomp);
    for (int c = 0; c < ncomp; ++c)
        for (int i = 1; i + 1 < g->N; ++i) p.at(c, i) = amp * gauss(rng);
    return p;
}

/// Smooth compactly-supported bump centered at x0.
inline stochwave::Profile bump_profile(const stochwave::GridPtr& g, int ncomp, double x0,
                                       double width, double amp = 1.0) {
    stochwave::Profile p(g, ncomp);
    for (int c = 0; c < ncomp; ++c)
        for (int i = 0; i < g->N; ++i) {
            double t = (g->x(i) - x0) / width;
            p.at(c, i) = amp * std::exp(-t * t);
        }
    return p;
}

struct FitResult {
    double slope = 0.0;
    double intercept = 0.0;
    double r2 = 0.0;
    double slope_stderr = 0.0;
};

inline FitResult linear_fit(const std::vector<double>& x, const std::vector<double>& y) {
    const size_t n = x.size();
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (size_t i = 0; i < n; ++i) {
        sx += x[i];
        sy += y[i];
        sxx += x[i] * x[i];
        sxy += x[i] * y[i];
    }
    FitResult f;
    double denom = n * sxx - sx * sx;
    f.slope = (n * sxy - sx * sy) / denom;
    f.intercept = (sy - f.slope * sx) / n;
    double ss_res = 0, ss_tot = 0, ybar = sy / n;
    for (size_t i = 0; i < n; ++i) {
        double e = y[i] - (f.intercept + f.slope * x[i]);
        ss_res += e * e;
        ss_tot += (y[i] - ybar) * (y[i] - ybar);
    }
    f.r2 = (ss_tot > 0) ? 1.0 - ss_res / ss_tot : 1.0;
    if (n > 2) f.slope_stderr = std::sqrt(ss_res / (n - 2) / (sxx - sx * sx / n));
    return f;
}

inline FitResult loglog_fit(const std::vector<double>& x, const std::vector<double>& y) {
    std::vector<double> lx(x.size()), ly(y.size());
    for (size_t i = 0; i < x.size(); ++i) {
        lx[i] = std::log(x[i]);
        ly[i] = std::log(y[i]);
    }
    return linear_fit(lx, ly);
}

/// Two-sample Kolmogorov-Smirnov asymptotic p-value.
inline double ks_two_sample_p(std::vector<double> a, std::vector<double> b) {
    std::sort(a.begin(), a.end());
    std::sort(b.begin(), b.end());
    double d = 0.0;
    size_t i = 0, j = 0;
    while (i < a.size() && j < b.size()) {
        if (a[i] <= b[j])
            ++i;
        else
            ++j;
        double fa = static_cast<double>(i) / a.size();
        double fb = static_cast<double>(j) / b.size();
        d = std::max(d, std::abs(fa - fb));
    }
    double ne = static_cast<double>(a.size()) * b.size() / (a.size() + b.size());
    double lam = (std::sqrt(ne) + 0.12 + 0.11 / std::sqrt(ne)) * d;
    double p = 0.0;
    for (int k = 1; k <= 100; ++k)
        p += 2.0 * std::pow(-1.0, k - 1) * std::exp(-2.0 * k * k * lam * lam);
    return std::min(1.0, std::max(0.0, p));
}

}  // namespace testutil
