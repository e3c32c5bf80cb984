#include "stochwave/wave.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <complex>
#include <random>

namespace stochwave {

WavePair nagumo_explicit(const GridPtr& grid, double a, double rho) {
    if (!(a > 0.0 && a < 1.0))
        throw std::invalid_argument("nagumo_explicit: requires 0 < a < 1");
    WavePair w;
    w.phi = Profile(grid, 1);
    const double s = 1.0 / (2.0 * std::sqrt(2.0 * rho));
    for (int i = 0; i < grid->N; ++i)
        w.phi.at(0, i) = 0.5 * (1.0 - std::tanh(s * grid->x(i)));
    w.c = std::sqrt(2.0 * rho) * (0.5 - a);
    w.phi_prime = derivative_profile(w.phi);
    return w;
}

int interior_size(const Grid& g, int ncomp) { return (g.N - 2) * ncomp; }

void pack_interior(const Profile& p, std::vector<double>& v) {
    const int N = p.grid_N();
    const int n = p.n_components;
    v.resize(static_cast<size_t>(N - 2) * n);
    for (int i = 1; i + 1 < N; ++i)
        for (int c = 0; c < n; ++c) v[static_cast<size_t>(i - 1) * n + c] = p.at(c, i);
}

void unpack_interior(const std::vector<double>& v, Profile& p) {
    const int N = p.grid_N();
    const int n = p.n_components;
    for (int c = 0; c < n; ++c) {
        p.at(c, 0) = 0.0;
        p.at(c, N - 1) = 0.0;
    }
    for (int i = 1; i + 1 < N; ++i)
        for (int c = 0; c < n; ++c) p.at(c, i) = v[static_cast<size_t>(i - 1) * n + c];
}

namespace {
// central stencils: c2/c1 at offsets -r..r, scaled by 1/dx^2 and 1/dx
void stencils(int order, std::vector<double>& d2, std::vector<double>& d1) {
    if (order == 2) {
        d2 = {1.0, -2.0, 1.0};
        d1 = {-0.5, 0.0, 0.5};
    } else if (order == 4) {
        d2 = {-1.0 / 12.0, 4.0 / 3.0, -5.0 / 2.0, 4.0 / 3.0, -1.0 / 12.0};
        d1 = {1.0 / 12.0, -2.0 / 3.0, 0.0, 2.0 / 3.0, -1.0 / 12.0};
    } else {
        throw std::invalid_argument("stencil order must be 2 or 4");
    }
}
}  // namespace

BandMatrix assemble_linearization(const ModelSpec& model, const Profile& phi, double c,
                                  bool adjoint, int order) {
    const Grid& g = *phi.grid;
    const int N = g.N;
    const int n = model.n;
    const int ni = (N - 2) * n;
    std::vector<double> s2, s1;
    stencils(order, s2, s1);
    const int r = order / 2;
    const int band = r * n + (n - 1);
    BandMatrix A(ni, band, band);
    const double idx2 = 1.0 / (g.dx * g.dx);
    const double idx = 1.0 / g.dx;
    std::vector<double> J;
    model.fn->df(phi, J);
    const double adv = adjoint ? -c : c;
    for (int i = 1; i + 1 < N; ++i) {
        for (int a = 0; a < n; ++a) {
            const int row = (i - 1) * n + a;
            const double rho_a = model.rho[a];
            for (int o = -r; o <= r; ++o) {
                int jg = i + o;  // grid index of the stencil point
                if (jg < 1 || jg > N - 2) continue;  // boundary/ghost columns drop
                A.at(row, (jg - 1) * n + a) +=
                    rho_a * s2[o + r] * idx2 + adv * s1[o + r] * idx;
            }
            for (int b = 0; b < n; ++b) {
                double jv = adjoint ? J[(static_cast<size_t>(b) * n + a) * N + i]
                                    : J[(static_cast<size_t>(a) * n + b) * N + i];
                A.at(row, (i - 1) * n + b) += jv;
            }
        }
    }
    return A;
}

Linearization build_linearization(const ModelSpec& model, const WavePair& wave) {
    Linearization lin;
    lin.L = assemble_linearization(model, wave.phi, wave.c, false, wave.order);
    lin.L_adjoint = assemble_linearization(model, wave.phi, wave.c, true, wave.order);
    lin.grid = wave.phi.grid;
    lin.ncomp = model.n;
    return lin;
}

Profile apply_operator(const BandMatrix& A, const Profile& p) {
    std::vector<double> x, y;
    pack_interior(p, x);
    y.resize(x.size());
    A.multiply(x.data(), y.data());
    Profile out(p.grid, p.n_components);
    unpack_interior(y, out);
    return out;
}

namespace {

/// Interior quadrature weights are uniformly dx (boundary points excluded).
std::vector<double> weighted_interior(const Profile& p) {
    std::vector<double> v;
    pack_interior(p, v);
    const double dx = p.grid->dx;
    for (double& x : v) x *= dx;
    return v;
}

Profile fd_first(const Profile& p) { return first_difference(p); }

}  // namespace

namespace {
struct GhostSampler {
    const ModelSpec* model;
    const Profile* phi;
    const Grid* g;
    mutable std::vector<double> buf;
    GhostSampler(const ModelSpec& m, const Profile& p)
        : model(&m), phi(&p), g(p.grid.get()), buf(m.n) {}
    double operator()(int comp, int i) const {
        if (i >= 0 && i < g->N) return phi->at(comp, i);
        model->fn->phi_ref(g->x(0) + i * g->dx, buf.data());
        return buf[comp];
    }
};
}  // namespace

void eval_wave_ode(const ModelSpec& model, const Profile& phi, double c, int order,
                   std::vector<double>& F) {
    const Grid& g = *phi.grid;
    const int N = g.N;
    const int n = model.n;
    std::vector<double> s2, s1;
    stencils(order, s2, s1);
    const int r = order / 2;
    GhostSampler sample(model, phi);
    Profile f(phi.grid, n);
    model.fn->f(phi, f);
    F.resize(static_cast<size_t>(N - 2) * n);
    const double idx2 = 1.0 / (g.dx * g.dx), idx = 1.0 / g.dx;
    for (int i = 1; i + 1 < N; ++i)
        for (int comp = 0; comp < n; ++comp) {
            double dd2 = 0.0, dd1 = 0.0;
            for (int o = -r; o <= r; ++o) {
                double v = sample(comp, i + o);
                dd2 += s2[o + r] * v;
                dd1 += s1[o + r] * v;
            }
            F[static_cast<size_t>(i - 1) * n + comp] =
                model.rho[comp] * dd2 * idx2 + c * dd1 * idx + f.at(comp, i);
        }
}

Profile wave_derivative(const ModelSpec& model, const Profile& phi, int order) {
    const Grid& g = *phi.grid;
    std::vector<double> s2, s1;
    stencils(order, s2, s1);
    const int r = order / 2;
    GhostSampler sample(model, phi);
    Profile out(phi.grid, model.n);
    for (int i = 0; i < g.N; ++i)
        for (int comp = 0; comp < model.n; ++comp) {
            double d = 0.0;
            for (int o = -r; o <= r; ++o) d += s1[o + r] * sample(comp, i + o);
            out.at(comp, i) = d / g.dx;
        }
    return out;
}

Profile wave_second_derivative(const ModelSpec& model, const Profile& phi, int order) {
    const Grid& g = *phi.grid;
    std::vector<double> s2, s1;
    stencils(order, s2, s1);
    const int r = order / 2;
    GhostSampler sample(model, phi);
    Profile out(phi.grid, model.n);
    const double idx2 = 1.0 / (g.dx * g.dx);
    for (int i = 0; i < g.N; ++i)
        for (int comp = 0; comp < model.n; ++comp) {
            double d = 0.0;
            for (int o = -r; o <= r; ++o) d += s2[o + r] * sample(comp, i + o);
            out.at(comp, i) = d * idx2;
        }
    return out;
}

double wave_residual_inf(const ModelSpec& model, const Profile& phi, double c) {
    Profile d2 = second_difference(phi);
    Profile d1 = first_difference(phi);
    Profile F(phi.grid, model.n);
    model.fn->f(phi, F);
    double r = 0.0;
    const int N = phi.grid_N();
    for (int comp = 0; comp < model.n; ++comp)
        for (int i = 1; i + 1 < N; ++i)
            r = std::max(r, std::abs(model.rho[comp] * d2.at(comp, i) +
                                     c * d1.at(comp, i) + F.at(comp, i)));
    return r;
}

WavePair solve_wave_bvp(const ModelSpec& model, const WavePair& guess, const BvpOptions& opt) {
    const GridPtr grid = guess.phi.grid;
    const Grid& g = *grid;
    const int N = g.N;
    const int n = model.n;
    const int ni = interior_size(g, n);

    Profile ref = model.phi_ref_profile(grid);
    Profile phi = guess.phi;
    for (int comp = 0; comp < n; ++comp) {
        phi.at(comp, 0) = ref.at(comp, 0);
        phi.at(comp, N - 1) = ref.at(comp, N - 1);
    }
    double c = guess.c;
    Profile guess_prime = first_difference(guess.phi);
    std::vector<double> phase_row = weighted_interior(guess_prime);

    std::vector<double> s2, s1;
    stencils(opt.order, s2, s1);
    const int rs = opt.order / 2;
    // ghost samples: the profile continues as the analytic reference
    std::vector<double> ghost_left(static_cast<size_t>(rs) * n),
        ghost_right(static_cast<size_t>(rs) * n);
    {
        std::vector<double> buf(n);
        for (int o = 1; o <= rs; ++o) {
            model.fn->phi_ref(g.x(0) - o * g.dx, buf.data());
            for (int comp = 0; comp < n; ++comp)
                ghost_left[static_cast<size_t>(o - 1) * n + comp] = buf[comp];
            model.fn->phi_ref(g.x(N - 1) + o * g.dx, buf.data());
            for (int comp = 0; comp < n; ++comp)
                ghost_right[static_cast<size_t>(o - 1) * n + comp] = buf[comp];
        }
    }
    auto sample = [&](const Profile& ph, int comp, int i) {
        if (i < 0) return ghost_left[static_cast<size_t>(-i - 1) * n + comp];
        if (i >= N) return ghost_right[static_cast<size_t>(i - N) * n + comp];
        return ph.at(comp, i);
    };
    auto eval_F = [&](const Profile& ph, double cc, std::vector<double>& Fv) {
        Profile f(grid, n);
        model.fn->f(ph, f);
        Fv.resize(ni);
        const double idx2 = 1.0 / (g.dx * g.dx), idx = 1.0 / g.dx;
        for (int i = 1; i + 1 < N; ++i)
            for (int comp = 0; comp < n; ++comp) {
                double dd2 = 0.0, dd1 = 0.0;
                for (int o = -rs; o <= rs; ++o) {
                    double v = sample(ph, comp, i + o);
                    dd2 += s2[o + rs] * v;
                    dd1 += s1[o + rs] * v;
                }
                Fv[static_cast<size_t>(i - 1) * n + comp] =
                    model.rho[comp] * dd2 * idx2 + cc * dd1 * idx + f.at(comp, i);
            }
    };

    std::vector<double> F(ni), rhs(ni), dphi_v(ni);
    eval_F(phi, c, F);
    double fnorm = 0.0;
    for (double v : F) fnorm = std::max(fnorm, std::abs(v));

    for (int iter = 0; iter < opt.max_iter; ++iter) {
        if (fnorm <= opt.tol) break;
        BandMatrix A = assemble_linearization(model, phi, c, false, opt.order);
        // dF/dc column: order-consistent derivative with ghost continuation
        std::vector<double> col(ni);
        {
            const double idx = 1.0 / g.dx;
            for (int i = 1; i + 1 < N; ++i)
                for (int comp = 0; comp < n; ++comp) {
                    double dd1 = 0.0;
                    for (int o = -rs; o <= rs; ++o) dd1 += s1[o + rs] * sample(phi, comp, i + o);
                    col[static_cast<size_t>(i - 1) * n + comp] = dd1 * idx;
                }
        }
        std::unique_ptr<BorderedSolver> solver;
        try {
            solver = std::make_unique<BorderedSolver>(std::move(A), col, phase_row);
        } catch (const SingularMatrix&) {
            throw DegenerateJacobian("solve_wave_bvp: degenerate-jacobian");
        }
        for (int i = 0; i < ni; ++i) rhs[i] = -F[i];
        // phase defect: keep <phi - guess, guess'> = 0
        Profile diff = phi - guess.phi;
        std::vector<double> diff_v;
        pack_interior(diff, diff_v);
        double phase = 0.0;
        for (int i = 0; i < ni; ++i) phase += phase_row[i] * diff_v[i];
        auto res = solver->solve(rhs, -phase);

        // damped update
        double lambda = 1.0;
        Profile phi_new = phi;
        double c_new = c;
        double fnew = fnorm;
        for (int back = 0; back < 25; ++back) {
            phi_new = phi;
            c_new = c + lambda * res.s;
            std::vector<double> xv;
            pack_interior(phi, xv);
            for (int i = 0; i < ni; ++i) xv[i] += lambda * res.u[i];
            unpack_interior(xv, phi_new);
            // boundary values stay at the reference (X = 0 there)
            for (int comp = 0; comp < n; ++comp) {
                phi_new.at(comp, 0) = ref.at(comp, 0);
                phi_new.at(comp, N - 1) = ref.at(comp, N - 1);
            }
            std::vector<double> Fn;
            eval_F(phi_new, c_new, Fn);
            fnew = 0.0;
            for (double v : Fn) fnew = std::max(fnew, std::abs(v));
            if (fnew < fnorm || fnew <= opt.tol) {
                F = std::move(Fn);
                break;
            }
            lambda *= 0.5;
        }
        phi = phi_new;
        c = c_new;
        fnorm = fnew;
    }
    if (fnorm > opt.tol)
        throw NewtonDiverged("solve_wave_bvp: newton-diverged, residual " +
                             std::to_string(fnorm));
    return finalize_wave(model, phi, c, opt.order);
}

Profile adjoint_eigenfunction_closed_form(const ModelSpec& model, const WavePair& wave) {
    if (model.n != 1)
        throw std::invalid_argument("closed-form adjoint eigenfunction is scalar only");
    const GridPtr grid = wave.phi.grid;
    Profile psi(grid, 1);
    const Profile& dphi = wave.phi_prime;
    const double rate = wave.c / model.rho[0];
    for (int i = 0; i < grid->N; ++i)
        psi.at(0, i) = std::exp(rate * grid->x(i)) * dphi.at(0, i);
    double ip = inner_product(dphi, psi);
    scale(psi, 1.0 / ip);
    return psi;
}

Profile adjoint_eigenfunction(const ModelSpec& model, const WavePair& wave) {
    const GridPtr grid = wave.phi.grid;
    BandMatrix Aadj = assemble_linearization(model, wave.phi, wave.c, true, wave.order);
    BandLU lu(Aadj);
    const int ni = Aadj.n;

    // inverse iteration targeting lambda = 0
    std::vector<double> v(ni), w(ni);
    const Profile& dphi = wave.phi_prime;
    // seed with e^{c x / rho_max} phi' (exact for scalar, good for systems)
    {
        Profile seed_p = dphi;
        double rho_max = *std::max_element(model.rho.begin(), model.rho.end());
        for (int c = 0; c < model.n; ++c)
            for (int i = 0; i < grid->N; ++i)
                seed_p.at(c, i) *= std::exp(wave.c * grid->x(i) / rho_max);
        pack_interior(seed_p, v);
    }
    double nv = 0.0;
    for (double x : v) nv += x * x;
    nv = std::sqrt(nv);
    if (nv == 0.0) v[ni / 2] = 1.0;
    else
        for (double& x : v) x /= nv;

    double lambda_est = 0.0;
    for (int it = 0; it < 30; ++it) {
        lu.solve(v.data(), w.data());
        double nw = 0.0;
        for (double x : w) nw += x * x;
        nw = std::sqrt(nw);
        for (int i = 0; i < ni; ++i) v[i] = w[i] / nw;
        lambda_est = 1.0 / nw;  // |lambda| estimate of the targeted eigenvalue
        // residual check
        std::vector<double> Av(ni);
        Aadj.multiply(v.data(), Av.data());
        double rq = 0.0;
        for (int i = 0; i < ni; ++i) rq += v[i] * Av[i];
        double res = 0.0;
        for (int i = 0; i < ni; ++i) res = std::max(res, std::abs(Av[i] - rq * v[i]));
        if (res < 1e-12) break;
    }
    (void)lambda_est;

    Profile psi(grid, model.n);
    unpack_interior(v, psi);
    double ip = inner_product(dphi, psi);
    if (std::abs(ip) < 1e-10)
        throw NonSimpleKernel("adjoint_eigenfunction: <phi', psi> degenerate");
    scale(psi, 1.0 / ip);
    return psi;
}

WavePair finalize_wave(const ModelSpec& model, Profile phi, double c, int order) {
    WavePair w;
    w.phi = std::move(phi);
    w.c = c;
    w.order = order;
    // order-matched derivative; the profile continues as the analytic
    // reference beyond the domain
    {
        const Grid& g = *w.phi.grid;
        const int N = g.N;
        const int n = model.n;
        std::vector<double> s2, s1;
        stencils(order, s2, s1);
        const int r = order / 2;
        w.phi_prime = Profile(w.phi.grid, n);
        std::vector<double> buf(n);
        auto sample = [&](int comp, int i) {
            if (i >= 0 && i < N) return w.phi.at(comp, i);
            model.fn->phi_ref(g.x(0) + i * g.dx, buf.data());
            return buf[comp];
        };
        for (int i = 0; i < N; ++i)
            for (int comp = 0; comp < n; ++comp) {
                double d = 0.0;
                for (int o = -r; o <= r; ++o) d += s1[o + r] * sample(comp, i + o);
                w.phi_prime.at(comp, i) = d / g.dx;
            }
    }
    w.psi = adjoint_eigenfunction(model, w);
    double raw = inner_product(w.phi_prime, w.psi);  // 1 after normalization
    w.kappa_norm = raw;
    return w;
}

Profile spectral_projection(const WavePair& wave, const Profile& v) {
    double a = inner_product(wave.psi, v);
    Profile out = wave.phi_prime;
    scale(out, a);
    return out;
}

SemigroupStepper::SemigroupStepper(const ModelSpec& model, const WavePair& wave, double dt,
                                   bool adjoint)
    : grid_(wave.phi.grid), ncomp_(model.n), dt_(dt) {
    BandMatrix L = assemble_linearization(model, wave.phi, wave.c, adjoint, wave.order);
    const int ni = L.n;
    BandMatrix M(ni, L.kl, L.ku);
    rhs_ = BandMatrix(ni, L.kl, L.ku);
    for (int i = 0; i < ni; ++i) {
        int j0 = std::max(0, i - L.kl);
        int j1 = std::min(ni - 1, i + L.ku);
        for (int j = j0; j <= j1; ++j) {
            double lij = L.get(i, j);
            double iij = (i == j) ? 1.0 : 0.0;
            M.at(i, j) = iij - 0.5 * dt * lij;
            rhs_.at(i, j) = iij + 0.5 * dt * lij;
        }
    }
    lu_ = BandLU(std::move(M));
    buf_.resize(ni);
    buf2_.resize(ni);
}

void SemigroupStepper::step(std::vector<double>& interior) const {
    rhs_.multiply(interior.data(), buf_.data());
    lu_.solve(buf_.data(), interior.data());
}

void SemigroupStepper::step(Profile& v) const {
    pack_interior(v, buf2_);
    step(buf2_);
    unpack_interior(buf2_, v);
}

Profile semigroup_apply(const ModelSpec& model, const WavePair& wave, const Profile& v0,
                        double t, double dt) {
    if (t < 0.0) throw std::invalid_argument("semigroup_apply: t must be >= 0");
    Profile v = v0;
    if (t == 0.0) return v;
    int steps = static_cast<int>(std::ceil(t / dt - 1e-12));
    steps = std::max(steps, 1);
    SemigroupStepper st(model, wave, t / steps);
    for (int k = 0; k < steps; ++k) st.step(v);
    return v;
}

WaveOperator::WaveOperator(const ModelSpec& model, const WavePair& wave)
    : wave_(&wave), grid_(wave.phi.grid), ncomp_(model.n) {
    lin_ = build_linearization(model, wave);
    std::vector<double> p;
    pack_interior(wave.phi_prime, p);
    std::vector<double> q = weighted_interior(wave.psi);
    try {
        solver_ = std::make_unique<BorderedSolver>(lin_.L, std::move(p), std::move(q));
    } catch (const SingularMatrix&) {
        throw DegenerateJacobian("WaveOperator: bordered-singular");
    }
}

std::pair<Profile, double> WaveOperator::solve_bordered(const Profile& rhs) const {
    if (!rhs.all_finite()) throw std::invalid_argument("solve_bordered: non-finite rhs");
    std::vector<double> b;
    pack_interior(rhs, b);
    auto res = solver_->solve(b, 0.0);
    Profile u(grid_, ncomp_);
    unpack_interior(res.u, u);
    return {std::move(u), res.s};
}

Profile resample(const Profile& p, const GridPtr& target) {
    const Grid& gs = *p.grid;
    Profile out(target, p.n_components);
    const int Ns = gs.N;
    for (int c = 0; c < p.n_components; ++c) {
        const double* v = p.comp(c);
        double* o = out.comp(c);
        for (int i = 0; i < target->N; ++i) {
            double sx = (target->x(i) + gs.L) / gs.dx;
            if (sx <= 0.0) {
                o[i] = v[0];
            } else if (sx >= Ns - 1) {
                o[i] = v[Ns - 1];
            } else {
                int j = static_cast<int>(std::floor(sx));
                double t = sx - j;
                if (j < 1 || j > Ns - 3) {
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
    }
    return out;
}

SpectralReport spectral_report(const ModelSpec& model, const WavePair& wave, int reduced_N,
                               double t_decay, int n_samples, uint64_t seed) {
    SpectralReport rep;

    // dense eigensolve on a coarsened grid
    GridPtr rg = make_grid(wave.phi.grid->L, reduced_N, wave.phi.grid->mode);
    Profile phi_r = resample(wave.phi, rg);
    BandMatrix A = assemble_linearization(model, phi_r, wave.c, false, wave.order);
    const int ni = A.n;
    Eigen::MatrixXd D = Eigen::MatrixXd::Zero(ni, ni);
    for (int i = 0; i < ni; ++i)
        for (int j = std::max(0, i - A.kl); j <= std::min(ni - 1, i + A.ku); ++j)
            D(i, j) = A.get(i, j);
    Eigen::EigenSolver<Eigen::MatrixXd> es(D, false);
    auto ev = es.eigenvalues();
    int arg0 = 0;
    double best = 1e300;
    for (int i = 0; i < ev.size(); ++i) {
        double d = std::abs(ev[i]);
        if (d < best) {
            best = d;
            arg0 = i;
        }
    }
    double next = -1e300;
    for (int i = 0; i < ev.size(); ++i) {
        if (i == arg0) continue;
        next = std::max(next, ev[i].real());
    }
    rep.lambda0 = ev[arg0].real();
    rep.beta = -next;

    // semigroup decay on the full grid
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> gauss;
    double worst = 0.0;
    const GridPtr grid = wave.phi.grid;
    SemigroupStepper st(model, wave, 0.01);
    int steps = static_cast<int>(std::round(t_decay / 0.01));
    for (int s = 0; s < n_samples; ++s) {
        Profile v(grid, model.n);
        for (int c = 0; c < model.n; ++c)
            for (int i = 1; i + 1 < grid->N; ++i) v.at(c, i) = gauss(rng);
        Profile vp = v - spectral_projection(wave, v);
        double n0 = l2_norm(vp);
        Profile w = vp;
        for (int k = 0; k < steps; ++k) st.step(w);
        w = w - spectral_projection(wave, w);
        worst = std::max(worst, l2_norm(w) / n0);
    }
    rep.decay_ratio = worst;
    return rep;
}

WavePair solve_fhn_wave(const ModelSpec& model, const GridPtr& grid, const BvpOptions& opt) {
    // Warm start: evolve the deterministic system from a plateau pulse and
    // recenter periodically; the stable pulse is attracting.
    const Grid& g = *grid;
    const int N = g.N;
    Profile U(grid, 2);
    for (int i = 0; i < N; ++i) {
        double x = g.x(i);
        double up = 0.5 * (1.0 - std::tanh((x) / (2.0 * std::sqrt(2.0)))) -
                    0.5 * (1.0 - std::tanh((x + 18.0) / (2.0 * std::sqrt(2.0))));
        U.at(0, i) = std::max(0.0, up);
        U.at(1, i) = 0.0;
    }

    const double dt = 0.05;
    const double T_relax = 250.0;
    const int steps = static_cast<int>(T_relax / dt);
    // IMEX: implicit diffusion, explicit reaction
    const int band = 2 * model.n - 1;
    const int ni = interior_size(g, model.n);
    BandMatrix M(ni, band, band);
    const double idx2 = 1.0 / (g.dx * g.dx);
    for (int i = 1; i + 1 < N; ++i)
        for (int c = 0; c < model.n; ++c) {
            int row = (i - 1) * model.n + c;
            double r = model.rho[c] * dt * idx2;
            M.at(row, row) = 1.0 + 2.0 * r;
            if (i > 1) M.at(row, row - model.n) = -r;
            if (i < N - 2) M.at(row, row + model.n) = -r;
        }
    BandLU lu(std::move(M));
    std::vector<double> x, fx;
    Profile F(grid, 2);
    double drift_accum = 0.0;
    int recenter_count = 0;
    double speed_est = 0.0;
    double t_marked = 0.0, x_marked = 0.0;
    auto front_pos = [&](const Profile& P) {
        // rightmost downward crossing of u = 0.5
        for (int i = N - 2; i >= 0; --i)
            if (P.at(0, i) >= 0.5 && P.at(0, i + 1) < 0.5) {
                double t = (P.at(0, i) - 0.5) / (P.at(0, i) - P.at(0, i + 1));
                return g.x(i) + t * g.dx;
            }
        return 0.0;
    };
    for (int k = 0; k < steps; ++k) {
        model.fn->f(U, F);
        pack_interior(U, x);
        pack_interior(F, fx);
        for (int i = 0; i < ni; ++i) x[i] += dt * fx[i];
        lu.solve(x.data());
        unpack_interior(x, U);
        double t_now = (k + 1) * dt;
        double fp = front_pos(U);
        if (t_now - t_marked > 20.0) {
            speed_est = (fp + drift_accum - x_marked) / (t_now - t_marked);
            t_marked = t_now;
            x_marked = fp + drift_accum;
        }
        if (std::abs(fp) > 0.15 * g.L) {
            U = shift(U, -fp);  // recenter the pulse
            drift_accum += fp;
            ++recenter_count;
        }
    }
    (void)recenter_count;

    WavePair guess;
    guess.phi = U;
    guess.c = speed_est;
    guess.phi_prime = derivative_profile(U);
    return solve_wave_bvp(model, guess, opt);
}

}  // namespace stochwave
