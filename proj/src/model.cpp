#include "stochwave/model.hpp"

#include <cmath>
#include <random>
#include <sstream>

namespace stochwave {

namespace {

struct NagumoFunctions : ModelFunctions {
    double a, rho;
    NagumoFunctions(double a_, double rho_) : a(a_), rho(rho_) {}

    void f(const Profile& U, Profile& out) const override {
        const int N = U.grid_N();
        const double* u = U.comp(0);
        double* o = out.comp(0);
        for (int i = 0; i < N; ++i) o[i] = u[i] * (1.0 - u[i]) * (u[i] - a);
    }
    void df(const Profile& U, std::vector<double>& out) const override {
        const int N = U.grid_N();
        out.resize(N);
        const double* u = U.comp(0);
        for (int i = 0; i < N; ++i)
            out[i] = -3.0 * u[i] * u[i] + 2.0 * (1.0 + a) * u[i] - a;
    }
    void d2f_vv(const Profile& U, const Profile& V, Profile& out) const override {
        const int N = U.grid_N();
        const double* u = U.comp(0);
        const double* v = V.comp(0);
        double* o = out.comp(0);
        for (int i = 0; i < N; ++i)
            o[i] = (-6.0 * u[i] + 2.0 * (1.0 + a)) * v[i] * v[i];
    }
    void g(const Profile& U, Profile& out) const override {
        const int N = U.grid_N();
        const double* u = U.comp(0);
        double* o = out.comp(0);
        for (int i = 0; i < N; ++i) o[i] = u[i] * (1.0 - u[i]);
    }
    void dg_v(const Profile& U, const Profile& V, Profile& out) const override {
        const int N = U.grid_N();
        const double* u = U.comp(0);
        const double* v = V.comp(0);
        double* o = out.comp(0);
        for (int i = 0; i < N; ++i) o[i] = (1.0 - 2.0 * u[i]) * v[i];
    }
    void h_corr(const Profile& U, const std::vector<double>& q0, Profile& out) const override {
        const int N = U.grid_N();
        const double* u = U.comp(0);
        double* o = out.comp(0);
        for (int i = 0; i < N; ++i)
            o[i] = 0.5 * q0[0] * (1.0 - 2.0 * u[i]) * u[i] * (1.0 - u[i]);
    }
    void dh_corr_v(const Profile& U, const Profile& V, const std::vector<double>& q0,
                   Profile& out) const override {
        const int N = U.grid_N();
        const double* u = U.comp(0);
        const double* v = V.comp(0);
        double* o = out.comp(0);
        // d/du [ (1-2u) u(1-u) ] = (1-2u)^2 - 2u(1-u)
        for (int i = 0; i < N; ++i) {
            double t = 1.0 - 2.0 * u[i];
            o[i] = 0.5 * q0[0] * (t * t - 2.0 * u[i] * (1.0 - u[i])) * v[i];
        }
    }
    void phi_ref(double x, double* out) const override {
        out[0] = 0.5 * (1.0 - std::tanh(x / (2.0 * std::sqrt(2.0 * rho))));
    }
    void phi_ref_xx(double x, double* out) const override {
        const double s = 1.0 / (2.0 * std::sqrt(2.0 * rho));
        const double t = std::tanh(s * x);
        out[0] = s * s * t * (1.0 - t * t);
    }
};

struct FhnFunctions : ModelFunctions {
    double a, eps, gamma;
    FhnFunctions(double a_, double eps_, double gamma_) : a(a_), eps(eps_), gamma(gamma_) {}

    void f(const Profile& U, Profile& out) const override {
        const int N = U.grid_N();
        const double* u = U.comp(0);
        const double* w = U.comp(1);
        double* o0 = out.comp(0);
        double* o1 = out.comp(1);
        for (int i = 0; i < N; ++i) {
            o0[i] = u[i] * (1.0 - u[i]) * (u[i] - a) - w[i];
            o1[i] = eps * (u[i] - gamma * w[i]);
        }
    }
    void df(const Profile& U, std::vector<double>& out) const override {
        const int N = U.grid_N();
        out.resize(4 * static_cast<size_t>(N));
        const double* u = U.comp(0);
        for (int i = 0; i < N; ++i) {
            out[0 * N + i] = -3.0 * u[i] * u[i] + 2.0 * (1.0 + a) * u[i] - a;
            out[1 * N + i] = -1.0;
            out[2 * N + i] = eps;
            out[3 * N + i] = -eps * gamma;
        }
    }
    void d2f_vv(const Profile& U, const Profile& V, Profile& out) const override {
        const int N = U.grid_N();
        const double* u = U.comp(0);
        const double* v = V.comp(0);
        double* o0 = out.comp(0);
        double* o1 = out.comp(1);
        for (int i = 0; i < N; ++i) {
            o0[i] = (-6.0 * u[i] + 2.0 * (1.0 + a)) * v[i] * v[i];
            o1[i] = 0.0;
        }
    }
    void g(const Profile& U, Profile& out) const override {
        const int N = U.grid_N();
        const double* u = U.comp(0);
        double* o0 = out.comp(0);
        double* o1 = out.comp(1);
        for (int i = 0; i < N; ++i) {
            o0[i] = u[i];
            o1[i] = 0.0;
        }
    }
    void dg_v(const Profile& U, const Profile& V, Profile& out) const override {
        const int N = U.grid_N();
        const double* v = V.comp(0);
        double* o0 = out.comp(0);
        double* o1 = out.comp(1);
        for (int i = 0; i < N; ++i) {
            o0[i] = v[i];
            o1[i] = 0.0;
        }
    }
    void h_corr(const Profile& U, const std::vector<double>& q0, Profile& out) const override {
        const int N = U.grid_N();
        const double* u = U.comp(0);
        double* o0 = out.comp(0);
        double* o1 = out.comp(1);
        for (int i = 0; i < N; ++i) {
            o0[i] = 0.5 * q0[0] * u[i];  // D_1 g^(u) = 1, g^(u) = u
            o1[i] = 0.0;                 // g^(w) = 0
        }
    }
    void dh_corr_v(const Profile& U, const Profile& V, const std::vector<double>& q0,
                   Profile& out) const override {
        const int N = U.grid_N();
        const double* v = V.comp(0);
        double* o0 = out.comp(0);
        double* o1 = out.comp(1);
        for (int i = 0; i < N; ++i) {
            o0[i] = 0.5 * q0[0] * v[i];
            o1[i] = 0.0;
        }
    }
    void phi_ref(double, double* out) const override { out[0] = out[1] = 0.0; }
    void phi_ref_xx(double, double* out) const override { out[0] = out[1] = 0.0; }
};

}  // namespace

Profile ModelSpec::phi_ref_profile(const GridPtr& grid) const {
    Profile p(grid, n);
    std::vector<double> buf(n);
    for (int i = 0; i < grid->N; ++i) {
        fn->phi_ref(grid->x(i), buf.data());
        for (int c = 0; c < n; ++c) p.at(c, i) = buf[c];
    }
    return p;
}

Profile ModelSpec::phi_ref_profile_xx(const GridPtr& grid) const {
    Profile p(grid, n);
    std::vector<double> buf(n);
    for (int i = 0; i < grid->N; ++i) {
        fn->phi_ref_xx(grid->x(i), buf.data());
        for (int c = 0; c < n; ++c) p.at(c, i) = buf[c];
    }
    return p;
}

ModelSpec nagumo_model(double a, double rho, double mu) {
    if (!(a > 0.0 && a < 1.0))
        throw std::invalid_argument("nagumo_model: bistability requires 0 < a < 1");
    if (!(rho > 0.0)) throw std::invalid_argument("nagumo_model: rho must be positive");
    ModelSpec m;
    m.name = "nagumo";
    m.n = m.m = 1;
    m.rho = {rho};
    m.mu = mu;
    m.u_minus = {1.0};
    m.u_plus = {0.0};
    m.fn = std::make_shared<NagumoFunctions>(a, rho);
    m.params = {{"a", a}, {"rho", rho}, {"mu", mu}};
    return m;
}

ModelSpec fhn_model(double a, double varrho, double eps, double gamma, double mu) {
    if (!(a > 0.0 && a < 1.0))
        throw std::invalid_argument("fhn_model: requires 0 < a < 1");
    if (!(varrho > 0.0 && eps > 0.0 && gamma > 0.0))
        throw std::invalid_argument("fhn_model: varrho, eps, gamma must be positive");
    ModelSpec m;
    m.name = "fhn";
    m.n = m.m = 2;
    m.rho = {1.0, varrho};
    m.mu = mu;
    m.u_minus = {0.0, 0.0};
    m.u_plus = {0.0, 0.0};
    m.fn = std::make_shared<FhnFunctions>(a, eps, gamma);
    m.params = {{"a", a}, {"varrho", varrho}, {"eps", eps}, {"gamma", gamma}, {"mu", mu}};
    return m;
}

Profile ito_stratonovich_correction(const ModelSpec& model, const std::vector<double>& q0,
                                    const Profile& U) {
    if (model.n != model.m)
        throw std::runtime_error("unsupported-correction: non-diagonal g coupling");
    Profile out(U.grid, model.n);
    model.fn->h_corr(U, q0, out);
    return out;
}

HypothesisReport check_hypotheses(const ModelSpec& model,
                                  const std::vector<CovarianceKernel>& kernels,
                                  const GridPtr& grid, uint64_t seed) {
    HypothesisReport rep;
    const int n = model.n;

    // (HEq): common equilibria of f, g, h
    auto tiny_grid = make_grid(grid->L, 16, grid->mode);
    std::vector<double> q0(kernels.size());
    for (size_t c = 0; c < kernels.size(); ++c) q0[c] = kernels[c].q0;
    for (const auto& u_eq : {model.u_minus, model.u_plus}) {
        Profile U(tiny_grid, n), F(tiny_grid, n), G(tiny_grid, n), H(tiny_grid, n);
        for (int c = 0; c < n; ++c)
            for (int i = 0; i < 16; ++i) U.at(c, i) = u_eq[c];
        model.fn->f(U, F);
        model.fn->g(U, G);
        model.fn->h_corr(U, q0, H);
        for (int c = 0; c < n; ++c)
            rep.heq_residual = std::max(rep.heq_residual,
                                        std::abs(F.at(c, 0)) + std::abs(G.at(c, 0)) +
                                            std::abs(H.at(c, 0)));
    }

    // Df vs central finite differences of f at random states
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> unif(-0.5, 1.5);
    const double fd_h = 1e-6;
    double max_rel_df = 0.0, max_rel_d2f = 0.0;
    for (int trial = 0; trial < 16; ++trial) {
        Profile U(tiny_grid, n), Up(tiny_grid, n), Um(tiny_grid, n);
        for (int c = 0; c < n; ++c)
            for (int i = 0; i < 16; ++i) U.at(c, i) = unif(rng);
        std::vector<double> J;
        model.fn->df(U, J);
        const int N = 16;
        for (int b = 0; b < n; ++b) {
            Up = U;
            Um = U;
            for (int i = 0; i < N; ++i) {
                Up.at(b, i) += fd_h;
                Um.at(b, i) -= fd_h;
            }
            Profile Fp(tiny_grid, n), Fm(tiny_grid, n);
            model.fn->f(Up, Fp);
            model.fn->f(Um, Fm);
            for (int a_c = 0; a_c < n; ++a_c)
                for (int i = 0; i < N; ++i) {
                    double fd = (Fp.at(a_c, i) - Fm.at(a_c, i)) / (2.0 * fd_h);
                    double an = J[(static_cast<size_t>(a_c) * n + b) * N + i];
                    double scale = std::max(1.0, std::abs(an));
                    max_rel_df = std::max(max_rel_df, std::abs(fd - an) / scale);
                }
        }
        // D2f[V,V] against second differences along V
        Profile V(tiny_grid, n);
        for (int c = 0; c < n; ++c)
            for (int i = 0; i < N; ++i) V.at(c, i) = unif(rng);
        Profile D2(tiny_grid, n), F0(tiny_grid, n), Fp(tiny_grid, n), Fm(tiny_grid, n);
        model.fn->d2f_vv(U, V, D2);
        model.fn->f(U, F0);
        Up = U;
        Um = U;
        const double h2 = 1e-4;
        axpy(h2, V, Up);
        axpy(-h2, V, Um);
        model.fn->f(Up, Fp);
        model.fn->f(Um, Fm);
        for (int c = 0; c < n; ++c)
            for (int i = 0; i < N; ++i) {
                double fd = (Fp.at(c, i) - 2.0 * F0.at(c, i) + Fm.at(c, i)) / (h2 * h2);
                double an = D2.at(c, i);
                double scale = std::max(1.0, std::abs(an));
                max_rel_d2f = std::max(max_rel_d2f, std::abs(fd - an) / scale);
            }
    }
    rep.df_fd_error = max_rel_df;
    rep.d2f_fd_error = max_rel_d2f;

    rep.qhat_min = 0.0;
    for (const auto& k : kernels)
        for (double v : k.q_hat) rep.qhat_min = std::min(rep.qhat_min, v);

    std::ostringstream msg;
    rep.ok = true;
    if (rep.heq_residual > 1e-12) {
        rep.ok = false;
        msg << "HEq violated: residual " << rep.heq_residual << "; ";
    }
    if (rep.df_fd_error > 1e-5) {
        rep.ok = false;
        msg << "Df inconsistent with f: " << rep.df_fd_error << "; ";
    }
    if (rep.d2f_fd_error > 1e-5) {
        rep.ok = false;
        msg << "D2f inconsistent with Df: " << rep.d2f_fd_error << "; ";
    }
    rep.message = rep.ok ? "ok" : msg.str();
    return rep;
}

}  // namespace stochwave
