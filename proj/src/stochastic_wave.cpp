#include "stochwave/stochastic_wave.hpp"

#include <algorithm>
#include <cmath>

namespace stochwave {

Profile g_q_gt_psi(const ModelSpec& model, const std::vector<CovarianceKernel>& kernels,
                   const Profile& phi, const Profile& psi) {
    if (static_cast<int>(kernels.size()) != model.m)
        throw std::invalid_argument("g_q_gt_psi: one kernel per noise component required");
    const int N = phi.grid_N();
    Profile gdiag(phi.grid, model.n);
    model.fn->g(phi, gdiag);
    Profile w(phi.grid, model.n);
    for (int c = 0; c < model.n; ++c)
        for (int i = 0; i < N; ++i) w.at(c, i) = gdiag.at(c, i) * psi.at(c, i);
    Profile qw(phi.grid, model.n);
    for (int c = 0; c < model.n; ++c) {
        QConvolver conv(kernels[c]);
        conv.apply(w.comp(c), qw.comp(c));
    }
    Profile out(phi.grid, model.n);
    for (int c = 0; c < model.n; ++c)
        for (int i = 0; i < N; ++i) out.at(c, i) = gdiag.at(c, i) * qw.at(c, i);
    return out;
}

Profile F_02(const ModelSpec& model, const std::vector<CovarianceKernel>& kernels,
             const WavePair& wave_det, const Profile& phi) {
    const Profile& psi = wave_det.psi;
    Profile dphi = wave_derivative(model, phi, wave_det.order);
    const double A = inner_product(dphi, psi);
    if (std::abs(A) < 1e-6)
        throw PhasePairingDegenerate("F_02: phase-pairing-degenerate");

    Profile G = g_q_gt_psi(model, kernels, phi, psi);
    const double beta_hs = inner_product(G, psi);
    Profile ddphi = wave_second_derivative(model, phi, wave_det.order);
    Profile Gp = derivative_profile(G);  // G decays at both ends

    std::vector<double> q0(kernels.size());
    for (size_t c = 0; c < kernels.size(); ++c) q0[c] = kernels[c].q0;
    Profile h(phi.grid, model.n);
    model.fn->h_corr(phi, q0, h);

    Profile out(phi.grid, model.n);
    const double cb = 0.5 * beta_hs / (A * A);
    const double ia = 1.0 / A;
    for (int c = 0; c < model.n; ++c)
        for (int i = 0; i < phi.grid_N(); ++i)
            out.at(c, i) = cb * ddphi.at(c, i) - ia * Gp.at(c, i) + model.mu * h.at(c, i);
    return out;
}

Profile F_sigma(const ModelSpec& model, const std::vector<CovarianceKernel>& kernels,
                const WavePair& wave_det, const Profile& phi, double c, double sigma) {
    std::vector<double> F0;
    eval_wave_ode(model, phi, c, wave_det.order, F0);
    Profile out(phi.grid, model.n);
    unpack_interior(F0, out);
    if (sigma != 0.0) {
        Profile f2 = F_02(model, kernels, wave_det, phi);
        const int N = phi.grid_N();
        for (int comp = 0; comp < model.n; ++comp)
            for (int i = 1; i + 1 < N; ++i)
                out.at(comp, i) += sigma * sigma * f2.at(comp, i);
    }
    return out;
}

Profile F_sigma_directional(const ModelSpec& model,
                            const std::vector<CovarianceKernel>& kernels,
                            const WavePair& wave_det, const Profile& phi, double c,
                            double sigma, const Profile& dphi_dir, double dc) {
    const int N = phi.grid_N();
    const int order = wave_det.order;
    const Profile& psi = wave_det.psi;

    // DF_0[dphi, dc] = L(phi, c) dphi + dc * phi'
    BandMatrix L = assemble_linearization(model, phi, c, false, order);
    Profile out = apply_operator(L, dphi_dir);
    Profile phi_p = wave_derivative(model, phi, order);
    for (int comp = 0; comp < model.n; ++comp)
        for (int i = 1; i + 1 < N; ++i) out.at(comp, i) += dc * phi_p.at(comp, i);

    if (sigma != 0.0) {
        Profile gdiag(phi.grid, model.n), dg(phi.grid, model.n);
        model.fn->g(phi, gdiag);
        model.fn->dg_v(phi, dphi_dir, dg);
        Profile w(phi.grid, model.n), dw(phi.grid, model.n);
        for (int comp = 0; comp < model.n; ++comp)
            for (int i = 0; i < N; ++i) {
                w.at(comp, i) = gdiag.at(comp, i) * psi.at(comp, i);
                dw.at(comp, i) = dg.at(comp, i) * psi.at(comp, i);
            }
        Profile qw(phi.grid, model.n), dqw(phi.grid, model.n);
        for (int comp = 0; comp < model.n; ++comp) {
            QConvolver conv(kernels[comp]);
            conv.apply(w.comp(comp), qw.comp(comp));
            conv.apply(dw.comp(comp), dqw.comp(comp));
        }
        Profile G(phi.grid, model.n), dG(phi.grid, model.n);
        for (int comp = 0; comp < model.n; ++comp)
            for (int i = 0; i < N; ++i) {
                G.at(comp, i) = gdiag.at(comp, i) * qw.at(comp, i);
                dG.at(comp, i) =
                    dg.at(comp, i) * qw.at(comp, i) + gdiag.at(comp, i) * dqw.at(comp, i);
            }
        const double A = inner_product(phi_p, psi);
        Profile ddphi_dir = second_difference(dphi_dir);  // X-valued: zero ghosts
        Profile dphi_dir_x = first_difference(dphi_dir);
        const double dA = inner_product(dphi_dir_x, psi);
        const double beta_hs = inner_product(G, psi);
        const double dbeta = inner_product(dG, psi);
        Profile ddphi = wave_second_derivative(model, phi, order);
        Profile Gp = derivative_profile(G);
        Profile dGp = derivative_profile(dG);
        Profile dh(phi.grid, model.n);
        std::vector<double> q0(kernels.size());
        for (size_t cq = 0; cq < kernels.size(); ++cq) q0[cq] = kernels[cq].q0;
        model.fn->dh_corr_v(phi, dphi_dir, q0, dh);

        const double s2 = sigma * sigma;
        for (int comp = 0; comp < model.n; ++comp)
            for (int i = 1; i + 1 < N; ++i) {
                double v = 0.5 * (dbeta / (A * A) - 2.0 * beta_hs * dA / (A * A * A)) *
                               ddphi.at(comp, i) +
                           0.5 * (beta_hs / (A * A)) * ddphi_dir.at(comp, i) -
                           dGp.at(comp, i) / A + Gp.at(comp, i) * dA / (A * A) +
                           model.mu * dh.at(comp, i);
                out.at(comp, i) += s2 * v;
            }
    }
    return out;
}

namespace {

struct NewtonOutcome {
    Profile phi;
    double c = 0.0;
    bool converged = false;
    double residual = 0.0;
};

NewtonOutcome newton_instantaneous(const ModelSpec& model,
                                   const std::vector<CovarianceKernel>& kernels,
                                   const WavePair& wave_det, Profile phi0, double c0,
                                   double sigma, const StochWaveOptions& opt) {
    const GridPtr grid = phi0.grid;
    const int N = grid->N;
    const int n = model.n;
    const int ni = interior_size(*grid, n);
    const int order = wave_det.order;

    std::vector<double> phase_row;
    pack_interior(wave_det.psi, phase_row);
    for (double& v : phase_row) v *= grid->dx;

    Profile phi = std::move(phi0);
    double c = c0;
    auto fnorm_of = [&](const Profile& ph, double cc) {
        Profile F = F_sigma(model, kernels, wave_det, ph, cc, sigma);
        double m = 0.0;
        for (double v : F.values) m = std::max(m, std::abs(v));
        return m;
    };
    double fnorm = fnorm_of(phi, c);
    bool converged = fnorm <= opt.tol;

    for (int iter = 0; iter < opt.max_iter && !converged; ++iter) {
        // banded quasi-Jacobian: DF_0 plus the local sigma^2 parts (extra
        // diffusion, the g'(phi)(Qg psi) transport term, the correction
        // diagonal); the nonlocal convolution and rank-one parts are left to
        // the Newton iteration itself
        BandMatrix A = assemble_linearization(model, phi, c, false, order);
        Profile phi_p = wave_derivative(model, phi, order);
        if (sigma != 0.0) {
            const double s2 = sigma * sigma;
            Profile gdiag(grid, n);
            model.fn->g(phi, gdiag);
            Profile w(grid, n);
            for (int comp = 0; comp < n; ++comp)
                for (int i = 0; i < N; ++i)
                    w.at(comp, i) = gdiag.at(comp, i) * wave_det.psi.at(comp, i);
            Profile qw(grid, n);
            for (int comp = 0; comp < n; ++comp) {
                QConvolver conv(kernels[comp]);
                conv.apply(w.comp(comp), qw.comp(comp));
            }
            Profile G(grid, n);
            for (int comp = 0; comp < n; ++comp)
                for (int i = 0; i < N; ++i)
                    G.at(comp, i) = gdiag.at(comp, i) * qw.at(comp, i);
            double Aip = inner_product(phi_p, wave_det.psi);
            double beta_hs = inner_product(G, wave_det.psi);
            double coeff = 0.5 * s2 * beta_hs / (Aip * Aip);
            const double idx2 = 1.0 / (grid->dx * grid->dx);
            const double i2dx = 0.5 / grid->dx;
            // m = dg(.)[e] qw pointwise: local multiplier of the dG' term
            Profile ones(grid, n);
            std::fill(ones.values.begin(), ones.values.end(), 1.0);
            Profile dg1(grid, n);
            model.fn->dg_v(phi, ones, dg1);
            Profile m(grid, n);
            for (int comp = 0; comp < n; ++comp)
                for (int i = 0; i < N; ++i)
                    m.at(comp, i) = dg1.at(comp, i) * qw.at(comp, i);
            Profile mp = derivative_profile(m);
            Profile dh1(grid, n);
            std::vector<double> q0(kernels.size());
            for (size_t cq = 0; cq < kernels.size(); ++cq) q0[cq] = kernels[cq].q0;
            model.fn->dh_corr_v(phi, ones, q0, dh1);
            for (int i = 1; i + 1 < N; ++i)
                for (int comp = 0; comp < n; ++comp) {
                    int row = (i - 1) * n + comp;
                    A.at(row, row) += coeff * (-2.0) * idx2 -
                                      s2 / Aip * mp.at(comp, i) +
                                      s2 * model.mu * dh1.at(comp, i);
                    if (i > 1)
                        A.at(row, row - n) +=
                            coeff * idx2 + s2 / Aip * m.at(comp, i) * i2dx;
                    if (i < N - 2)
                        A.at(row, row + n) +=
                            coeff * idx2 - s2 / Aip * m.at(comp, i) * i2dx;
                }
        }
        std::vector<double> col;
        pack_interior(phi_p, col);
        std::unique_ptr<BorderedSolver> solver;
        try {
            solver = std::make_unique<BorderedSolver>(std::move(A), col, phase_row);
        } catch (const SingularMatrix&) {
            return {phi, c, false, fnorm};
        }
        Profile F = F_sigma(model, kernels, wave_det, phi, c, sigma);
        std::vector<double> rhs;
        pack_interior(F, rhs);
        for (double& v : rhs) v = -v;
        Profile diff = phi - wave_det.phi;
        std::vector<double> dv;
        pack_interior(diff, dv);
        double phase = 0.0;
        for (int i = 0; i < ni; ++i) phase += phase_row[i] * dv[i];
        auto res = solver->solve(rhs, -phase);

        double lambda = 1.0;
        Profile phi_new = phi;
        double c_new = c, fnew = fnorm;
        for (int back = 0; back < 20; ++back) {
            std::vector<double> xv;
            pack_interior(phi, xv);
            for (int i = 0; i < ni; ++i) xv[i] += lambda * res.u[i];
            unpack_interior(xv, phi_new);
            for (int comp = 0; comp < n; ++comp) {
                phi_new.at(comp, 0) = phi.at(comp, 0);
                phi_new.at(comp, N - 1) = phi.at(comp, N - 1);
            }
            c_new = c + lambda * res.s;
            fnew = fnorm_of(phi_new, c_new);
            if (fnew < fnorm || fnew <= opt.tol) break;
            lambda *= 0.5;
        }
        if (fnew >= fnorm && fnew > opt.tol) return {phi, c, false, fnorm};
        phi = phi_new;
        c = c_new;
        fnorm = fnew;
        converged = fnorm <= opt.tol;
    }
    return {phi, c, converged, fnorm};
}

}  // namespace

StochWaveResult solve_instantaneous_wave(const ModelSpec& model,
                                         const std::vector<CovarianceKernel>& kernels,
                                         const WavePair& wave_det, double sigma,
                                         const StochWaveOptions& opt) {
    StochWaveResult result;
    result.sigma = sigma;
    result.wave = wave_det;
    if (sigma == 0.0) {
        result.converged = true;
        result.sigma_reached = 0.0;
        result.residual_norm = 0.0;
        return result;
    }

    auto out = newton_instantaneous(model, kernels, wave_det, wave_det.phi, wave_det.c,
                                    sigma, opt);
    if (!out.converged) {
        // continuation in sigma with a secant predictor in sigma^2
        double s_prev = 0.0, s_cur = 0.0;
        Profile phi_prev = wave_det.phi, phi_cur = wave_det.phi;
        double c_prev = wave_det.c, c_cur = wave_det.c;
        double step = std::min(opt.sigma_step, sigma);
        while (s_cur < sigma) {
            double s_next = std::min(sigma, s_cur + step);
            Profile phi_guess = phi_cur;
            double c_guess = c_cur;
            if (s_cur > s_prev) {
                double t = (s_next * s_next - s_cur * s_cur) /
                           (s_cur * s_cur - s_prev * s_prev);
                phi_guess = phi_cur + t * (phi_cur - phi_prev);
                c_guess = c_cur + t * (c_cur - c_prev);
            }
            auto step_out = newton_instantaneous(model, kernels, wave_det, phi_guess,
                                                 c_guess, s_next, opt);
            if (!step_out.converged) {
                step *= 0.5;
                if (step < 1e-3)
                    throw NewtonDiverged(
                        "solve_instantaneous_wave: newton-diverged, sigma reached " +
                        std::to_string(s_cur));
                continue;
            }
            s_prev = s_cur;
            phi_prev = std::move(phi_cur);
            c_prev = c_cur;
            s_cur = s_next;
            phi_cur = std::move(step_out.phi);
            c_cur = step_out.c;
        }
        out.phi = std::move(phi_cur);
        out.c = c_cur;
        out.converged = true;
        out.residual = opt.tol;
    }

    result.wave.phi = std::move(out.phi);
    result.wave.c = out.c;
    result.wave.phi_prime = wave_derivative(model, result.wave.phi, wave_det.order);
    result.converged = out.converged;
    result.residual_norm = out.residual;
    result.sigma_reached = sigma;
    return result;
}

SecondOrderExpansion expand_second_order(const ModelSpec& model,
                                         const std::vector<CovarianceKernel>& kernels,
                                         const WavePair& wave_det) {
    SecondOrderExpansion ex;
    Profile f2 = F_02(model, kernels, wave_det, wave_det.phi);
    ex.c_02 = -inner_product(f2, wave_det.psi);
    Profile rhs(wave_det.phi.grid, model.n);
    const int N = wave_det.phi.grid_N();
    for (int c = 0; c < model.n; ++c)
        for (int i = 0; i < N; ++i)
            rhs.at(c, i) = -f2.at(c, i) - ex.c_02 * wave_det.phi_prime.at(c, i);
    WaveOperator op(model, wave_det);
    auto [u, s] = op.solve_bordered(rhs);
    ex.phi_02 = std::move(u);
    ex.bordered_multiplier = s;
    return ex;
}

SneWave sne_wave(const GridPtr& grid, double a, double sigma, double q0) {
    const double s2q = sigma * sigma * q0;
    if (s2q >= 1.0) throw SneOutOfRange("sne_wave: sigma^2 q(0) >= 1, sne-out-of-range");
    if (!(a > 0.0 && a < 1.0)) throw std::invalid_argument("sne_wave: requires 0 < a < 1");
    SneWave out;
    out.a_eff = (2.0 * a - s2q) / (2.0 - 2.0 * s2q);
    const double fac = std::sqrt(1.0 - s2q);
    out.c = std::sqrt(2.0 * (1.0 - s2q)) * (0.5 - out.a_eff);
    out.phi = Profile(grid, 1);
    for (int i = 0; i < grid->N; ++i)
        out.phi.at(0, i) =
            0.5 * (1.0 - std::tanh(fac * grid->x(i) / (2.0 * std::sqrt(2.0))));
    return out;
}

}  // namespace stochwave
