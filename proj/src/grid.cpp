#include "stochwave/grid.hpp"

#include <cmath>
#include <cstring>

namespace stochwave {

bool Profile::all_finite() const {
    for (double v : values)
        if (!std::isfinite(v)) return false;
    return true;
}

static void check_layout(const Profile& a, const Profile& b, const char* op) {
    if (!a.same_layout(b))
        throw std::invalid_argument(std::string(op) + ": grid/component mismatch");
}

Profile operator+(const Profile& a, const Profile& b) {
    check_layout(a, b, "operator+");
    Profile r = a;
    for (size_t i = 0; i < r.values.size(); ++i) r.values[i] += b.values[i];
    return r;
}

Profile operator-(const Profile& a, const Profile& b) {
    check_layout(a, b, "operator-");
    Profile r = a;
    for (size_t i = 0; i < r.values.size(); ++i) r.values[i] -= b.values[i];
    return r;
}

Profile operator*(double s, const Profile& a) {
    Profile r = a;
    for (double& v : r.values) v *= s;
    return r;
}

void axpy(double alpha, const Profile& x, Profile& y) {
    check_layout(x, y, "axpy");
    for (size_t i = 0; i < y.values.size(); ++i) y.values[i] += alpha * x.values[i];
}

void scale(Profile& p, double s) {
    for (double& v : p.values) v *= s;
}

Profile second_difference(const Profile& p) {
    if (!p.all_finite()) throw std::invalid_argument("second_difference: non-finite input");
    const Grid& g = *p.grid;
    const int N = g.N;
    const double idx2 = 1.0 / (g.dx * g.dx);
    Profile out(p.grid, p.n_components);
    for (int c = 0; c < p.n_components; ++c) {
        const double* v = p.comp(c);
        double* o = out.comp(c);
        for (int i = 1; i + 1 < N; ++i)
            o[i] = (v[i - 1] - 2.0 * v[i] + v[i + 1]) * idx2;
        if (g.mode == BoundaryMode::periodic) {
            // x_0 == x_{N-1} on the circle; neighbors wrap past the seam.
            o[0] = (v[N - 2] - 2.0 * v[0] + v[1]) * idx2;
            o[N - 1] = (v[N - 2] - 2.0 * v[N - 1] + v[1]) * idx2;
        } else {
            o[0] = (-2.0 * v[0] + v[1]) * idx2;
            o[N - 1] = (v[N - 2] - 2.0 * v[N - 1]) * idx2;
        }
    }
    return out;
}

Profile first_difference(const Profile& p) {
    const Grid& g = *p.grid;
    const int N = g.N;
    const double i2dx = 0.5 / g.dx;
    Profile out(p.grid, p.n_components);
    for (int c = 0; c < p.n_components; ++c) {
        const double* v = p.comp(c);
        double* o = out.comp(c);
        for (int i = 1; i + 1 < N; ++i) o[i] = (v[i + 1] - v[i - 1]) * i2dx;
        if (g.mode == BoundaryMode::periodic) {
            o[0] = (v[1] - v[N - 2]) * i2dx;
            o[N - 1] = (v[1] - v[N - 2]) * i2dx;
        } else {
            o[0] = v[1] * i2dx;
            o[N - 1] = -v[N - 2] * i2dx;
        }
    }
    return out;
}

Profile derivative_profile(const Profile& p) {
    const Grid& g = *p.grid;
    const int N = g.N;
    Profile out = first_difference(p);
    if (g.mode == BoundaryMode::dirichlet_on_x) {
        const double i2dx = 0.5 / g.dx;
        for (int c = 0; c < p.n_components; ++c) {
            const double* v = p.comp(c);
            out.at(c, 0) = (-3.0 * v[0] + 4.0 * v[1] - v[2]) * i2dx;
            out.at(c, N - 1) = (3.0 * v[N - 1] - 4.0 * v[N - 2] + v[N - 3]) * i2dx;
        }
    }
    return out;
}

double quad_weight(const Grid& g, int i) {
    if (i == 0 || i == g.N - 1) return 0.5 * g.dx;
    return g.dx;
}

double inner_product(const Profile& p, const Profile& q) {
    check_layout(p, q, "inner_product");
    const Grid& g = *p.grid;
    const int N = g.N;
    double total = 0.0;
    for (int c = 0; c < p.n_components; ++c) {
        const double* a = p.comp(c);
        const double* b = q.comp(c);
        double s = 0.5 * (a[0] * b[0] + a[N - 1] * b[N - 1]);
        for (int i = 1; i + 1 < N; ++i) s += a[i] * b[i];
        total += s;
    }
    return total * g.dx;
}

double l2_norm_sq(const Profile& p) { return inner_product(p, p); }
double l2_norm(const Profile& p) { return std::sqrt(l2_norm_sq(p)); }

double h1_norm_sq(const Profile& p) {
    Profile d = first_difference(p);
    return l2_norm_sq(p) + l2_norm_sq(d);
}

Profile shift(const Profile& p, double gamma) {
    const Grid& g = *p.grid;
    if (std::abs(gamma) >= 0.5 * g.L)
        throw ShiftOutOfDomain("shift: |gamma| >= L/2, wave tracking lost");
    const int N = g.N;
    Profile out(p.grid, p.n_components);
    // p(x - gamma) sampled at node x_i: source coordinate s = x_i - gamma.
    const double s0 = (-gamma) / g.dx;  // node offset
    for (int c = 0; c < p.n_components; ++c) {
        const double* v = p.comp(c);
        double* o = out.comp(c);
        for (int i = 0; i < N; ++i) {
            double s = static_cast<double>(i) + s0;
            if (s <= 0.0) {
                o[i] = v[0];
                continue;
            }
            if (s >= static_cast<double>(N - 1)) {
                o[i] = v[N - 1];
                continue;
            }
            int j = static_cast<int>(std::floor(s));
            double t = s - j;
            if (j < 1 || j > N - 3) {
                // linear near the ends, where the 4-point stencil does not fit
                o[i] = (1.0 - t) * v[j] + t * v[j + 1];
            } else {
                const double vm1 = v[j - 1], v0 = v[j], v1 = v[j + 1], v2 = v[j + 2];
                o[i] = vm1 * (-t * (t - 1.0) * (t - 2.0) / 6.0) +
                       v0 * ((t * t - 1.0) * (t - 2.0) / 2.0) +
                       v1 * (-t * (t + 1.0) * (t - 2.0) / 2.0) +
                       v2 * (t * (t * t - 1.0) / 6.0);
            }
        }
    }
    return out;
}

}  // namespace stochwave
