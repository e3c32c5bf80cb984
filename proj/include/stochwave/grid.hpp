#pragma once

#include <cstdint>
#include <memory>
#include <stdexcept>
#include <string>
#include <vector>

namespace stochwave {

enum class BoundaryMode { dirichlet_on_x, periodic };

/// Uniform mesh on [-L, L] with both endpoints included, dx = 2L/(N-1).
///
/// In periodic mode the two endpoints represent the same point of the
/// 2L-circle: x_0 and x_{N-1} are seam duplicates and the FFT/wraparound
/// machinery works on the N-1 unique points.
struct Grid {
    double L = 40.0;
    int N = 2048;
    double dx = 0.0;
    BoundaryMode mode = BoundaryMode::dirichlet_on_x;

    Grid(double half_length, int n_points,
         BoundaryMode bmode = BoundaryMode::dirichlet_on_x)
        : L(half_length), N(n_points), mode(bmode) {
        if (N < 16) throw std::invalid_argument("Grid: N must be >= 16");
        if (L <= 0.0) throw std::invalid_argument("Grid: L must be positive");
        dx = 2.0 * L / static_cast<double>(N - 1);
    }

    double x(int i) const { return -L + dx * static_cast<double>(i); }
    /// Number of unique points of the periodic circle (N-1); the FFT length.
    int n_unique() const { return N - 1; }

    bool operator==(const Grid& o) const {
        return L == o.L && N == o.N && mode == o.mode;
    }
};

using GridPtr = std::shared_ptr<const Grid>;

inline GridPtr make_grid(double L, int N,
                         BoundaryMode mode = BoundaryMode::dirichlet_on_x) {
    return std::make_shared<const Grid>(L, N, mode);
}

/// n_components real fields sampled on a Grid, component-major storage.
struct Profile {
    GridPtr grid;
    int n_components = 1;
    std::vector<double> values;  // size n_components * N

    Profile() = default;
    Profile(GridPtr g, int ncomp)
        : grid(std::move(g)), n_components(ncomp),
          values(static_cast<size_t>(ncomp) * grid_N(), 0.0) {}

    int grid_N() const { return grid ? grid->N : 0; }
    double* comp(int c) { return values.data() + static_cast<size_t>(c) * grid_N(); }
    const double* comp(int c) const {
        return values.data() + static_cast<size_t>(c) * grid_N();
    }
    double& at(int c, int i) { return values[static_cast<size_t>(c) * grid_N() + i]; }
    double at(int c, int i) const {
        return values[static_cast<size_t>(c) * grid_N() + i];
    }

    bool all_finite() const;
    bool same_layout(const Profile& o) const {
        return grid && o.grid && *grid == *o.grid && n_components == o.n_components;
    }
};

// Elementwise helpers (same layout required).
Profile operator+(const Profile& a, const Profile& b);
Profile operator-(const Profile& a, const Profile& b);
Profile operator*(double s, const Profile& a);
void axpy(double alpha, const Profile& x, Profile& y);  // y += alpha*x
void scale(Profile& p, double s);

/// Central second difference, boundary rows per grid mode (dirichlet: zero
/// ghosts; periodic: wrap across the 2L seam).
Profile second_difference(const Profile& p);

/// Central first difference with the same boundary conventions.
Profile first_difference(const Profile& p);

/// Pointwise derivative for profiles with nonzero boundary values (e.g.
/// U-valued fronts): central interior, second-order one-sided at the two
/// endpoints. Coincides with first_difference for decaying fields.
Profile derivative_profile(const Profile& p);

/// Trapezoid quadrature weight of node i (dx, halved at the ends in
/// dirichlet mode; in periodic mode the seam pair shares one dx).
double quad_weight(const Grid& g, int i);

/// L2(R,R^n) inner product, dx-weighted trapezoid over all components.
double inner_product(const Profile& p, const Profile& q);

double l2_norm_sq(const Profile& p);
double l2_norm(const Profile& p);
/// ||p||^2 + ||p'||^2 with the discrete first difference.
double h1_norm_sq(const Profile& p);

/// Values of p(x - gamma) by 4-point Lagrange (cubic) interpolation,
/// constant extension outside the original support. |gamma| >= L/2 signals
/// loss of wave tracking.
Profile shift(const Profile& p, double gamma);

struct ShiftOutOfDomain : std::runtime_error {
    explicit ShiftOutOfDomain(const std::string& m) : std::runtime_error(m) {}
};

}  // namespace stochwave
