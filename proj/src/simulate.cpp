#include "stochwave/simulate.hpp"

#include <algorithm>
#include <cmath>

namespace stochwave {

namespace {
inline double smoothstep5(double t) {
    if (t <= 0.0) return 0.0;
    if (t >= 1.0) return 1.0;
    return t * t * t * (10.0 + t * (-15.0 + 6.0 * t));
}
}  // namespace

double cutoff_low(double theta) {
    if (theta <= 0.25) return 0.25;
    if (theta >= 0.5) return theta;
    double t = (theta - 0.25) / 0.25;
    return 0.25 + (theta - 0.25) * smoothstep5(t);
}

double cutoff_high(double theta, double k_up) {
    if (theta <= k_up) return 1.0;
    if (theta >= k_up + 1.0) return 0.0;
    return 1.0 - smoothstep5(theta - k_up);
}

SimSetup make_sim_setup(const ModelSpec& model,
                        const std::vector<CovarianceKernel>& kernels,
                        const WavePair& wave_det, double sigma) {
    SimSetup s{model, kernels, wave_det, wave_det.phi, wave_det.c, sigma};
    return s;
}

SimSetup make_sim_setup(const ModelSpec& model,
                        const std::vector<CovarianceKernel>& kernels,
                        const WavePair& wave_det, const StochWaveResult& sw) {
    SimSetup s{model, kernels, wave_det, sw.wave.phi, sw.wave.c, sw.sigma};
    return s;
}

PhaseMachine::PhaseMachine(const SimSetup& setup, double k_up)
    : setup_(&setup), k_up_(k_up) {
    conv_.reserve(setup.kernels.size());
    for (const auto& k : setup.kernels) conv_.emplace_back(k);
}

Profile PhaseMachine::shifted_psi(double Gamma) {
    if (Gamma == 0.0) return setup_->wave_det.psi;
    if (psi_cache_valid_ && psi_cache_gamma_ == Gamma) return psi_cache_;
    psi_cache_ = shift(setup_->wave_det.psi, Gamma);
    psi_cache_gamma_ = Gamma;
    psi_cache_valid_ = true;
    return psi_cache_;
}

PhaseMachine::Generator PhaseMachine::generator(const Profile& U, double Gamma, double c) {
    const ModelSpec& model = setup_->model;
    const int n = model.n;
    const GridPtr grid = U.grid;
    const int N = grid->N;
    const double sigma = setup_->sigma;

    Generator out;
    Profile psi_G = shifted_psi(Gamma);
    out.U_prime = derivative_profile(U);

    // chi_l from <d_xi U, T_Gamma psi>, chi_h from ||U - T_Gamma Phi_ref||
    double ip_up = inner_product(out.U_prime, psi_G);
    out.fn.chi_l = 1.0 / cutoff_low(ip_up);
    double dist2 = 0.0;
    {
        std::vector<double> buf(n);
        for (int i = 0; i < N; ++i) {
            model.fn->phi_ref(grid->x(i) - Gamma, buf.data());
            double w = quad_weight(*grid, i);
            for (int comp = 0; comp < n; ++comp) {
                double d = U.at(comp, i) - buf[comp];
                dist2 += w * d * d;
            }
        }
    }
    out.fn.chi_h = cutoff_high(std::sqrt(dist2), k_up_);

    // g-related pieces
    Profile gdiag(grid, n), w(grid, n), qw(grid, n);
    model.fn->g(U, gdiag);
    for (int comp = 0; comp < n; ++comp)
        for (int i = 0; i < N; ++i)
            w.at(comp, i) = gdiag.at(comp, i) * psi_G.at(comp, i);
    for (int comp = 0; comp < n; ++comp) conv_[comp].apply(w.comp(comp), qw.comp(comp));
    Profile G(grid, n);
    for (int comp = 0; comp < n; ++comp)
        for (int i = 0; i < N; ++i) G.at(comp, i) = gdiag.at(comp, i) * qw.at(comp, i);
    const double chi_l = out.fn.chi_l, chi_h = out.fn.chi_h;
    out.fn.b_hs_sq = std::pow(chi_h, 4) * chi_l * chi_l * inner_product(G, psi_G);

    // interior rows of U'' only (the generator is zero at the boundary), so
    // the plain central difference of the actual values is the consistent
    // discretization
    Profile Uxx = second_difference(U);

    Profile f(grid, n), h(grid, n);
    model.fn->f(U, f);
    std::vector<double> q0(setup_->kernels.size());
    for (size_t cq = 0; cq < q0.size(); ++cq) q0[cq] = setup_->kernels[cq].q0;
    model.fn->h_corr(U, q0, h);

    // K_C = -chi_h^2 chi_l g g^adj T_Gamma psi, then its derivative
    Profile Kc = G;
    scale(Kc, -chi_h * chi_h * chi_l);
    Profile Kc_p = derivative_profile(Kc);

    const double s2 = sigma * sigma;
    out.K = Profile(grid, n);
    for (int comp = 0; comp < n; ++comp)
        for (int i = 1; i + 1 < N; ++i)
            out.K.at(comp, i) = c * out.U_prime.at(comp, i) +
                                model.rho[comp] * Uxx.at(comp, i) + f.at(comp, i) +
                                s2 * model.mu * h.at(comp, i) +
                                s2 * 0.5 * out.fn.b_hs_sq * Uxx.at(comp, i) +
                                s2 * Kc_p.at(comp, i);
    out.fn.a = -chi_l * inner_product(out.K, psi_G);
    return out;
}

PhaseFunctionals PhaseMachine::functionals(const Profile& U, double Gamma) {
    return generator(U, Gamma, setup_->c_s).fn;
}

double PhaseMachine::b_apply(const Profile& U, double Gamma, const Profile& w) {
    const ModelSpec& model = setup_->model;
    Profile psi_G = shifted_psi(Gamma);
    Profile gdiag(U.grid, model.n);
    model.fn->g(U, gdiag);
    double ip = 0.0;
    const int N = U.grid_N();
    for (int comp = 0; comp < model.n; ++comp)
        for (int i = 0; i < N; ++i)
            ip += quad_weight(*U.grid, i) * gdiag.at(comp, i) * w.at(comp, i) *
                  psi_G.at(comp, i);
    Profile Up = derivative_profile(U);
    double chi_l = 1.0 / cutoff_low(inner_product(Up, psi_G));
    // chi_h recomputed cheaply from the distance to the shifted reference
    double dist2 = 0.0;
    std::vector<double> buf(model.n);
    for (int i = 0; i < N; ++i) {
        model.fn->phi_ref(U.grid->x(i) - Gamma, buf.data());
        double wq = quad_weight(*U.grid, i);
        for (int comp = 0; comp < model.n; ++comp) {
            double d = U.at(comp, i) - buf[comp];
            dist2 += wq * d * d;
        }
    }
    double chi_h = cutoff_high(std::sqrt(dist2), k_up_);
    return -chi_h * chi_h * chi_l * ip;
}

WaveFrameEngine::WaveFrameEngine(const SimSetup& setup, double dt, double k_up)
    : setup_(&setup), machine_(setup, k_up), dt_(dt) {
    L_tw_ = assemble_linearization(setup.model, setup.wave_det.phi, setup.wave_det.c,
                                   false, setup.wave_det.order);
    ref_ = setup.model.phi_ref_profile(setup.phi_s.grid);
}

StepInfo WaveFrameEngine::step(Profile& V, double& Gamma, const Profile& dW) {
    const ModelSpec& model = setup_->model;
    const GridPtr grid = V.grid;
    const int N = grid->N;
    const int n = model.n;
    const double sigma = setup_->sigma;

    Profile U = setup_->phi_s + V;
    auto gen = machine_.generator(U, 0.0, setup_->c_s);
    StepInfo info;
    info.a = gen.fn.a;
    info.b_hs_sq = gen.fn.b_hs_sq;
    info.tracked = gen.fn.chi_h >= 1.0;

    // R_sigma(V) = K + a d_xi(U)
    Profile R = gen.K;
    for (int comp = 0; comp < n; ++comp)
        for (int i = 1; i + 1 < N; ++i)
            R.at(comp, i) += gen.fn.a * gen.U_prime.at(comp, i);

    // noise: S_sigma(V)[dW] = g(U) dW + d_xi(U) b(V)[dW]
    Profile gdiag(grid, n);
    model.fn->g(U, gdiag);
    double bdw = 0.0;
    {
        Profile psi = setup_->wave_det.psi;
        double ip = 0.0;
        for (int comp = 0; comp < n; ++comp)
            for (int i = 0; i < N; ++i)
                ip += quad_weight(*grid, i) * gdiag.at(comp, i) * dW.at(comp, i) *
                      psi.at(comp, i);
        bdw = -gen.fn.chi_h * gen.fn.chi_h * gen.fn.chi_l * ip;
    }
    info.b_dW = bdw;
    Profile noise(grid, n);
    for (int comp = 0; comp < n; ++comp)
        for (int i = 1; i + 1 < N; ++i)
            noise.at(comp, i) = gdiag.at(comp, i) * dW.at(comp, i) +
                                gen.U_prime.at(comp, i) * bdw;

    // (I - dt (L_tw + s^2/2 ||b||^2 D2)) (V+ - V) = dt R + sigma noise
    BandMatrix M(L_tw_.n, L_tw_.kl, L_tw_.ku);
    const double extra = 0.5 * sigma * sigma * info.b_hs_sq;
    const double idx2 = 1.0 / (grid->dx * grid->dx);
    for (int i = 0; i < L_tw_.n; ++i) {
        int j0 = std::max(0, i - L_tw_.kl);
        int j1 = std::min(L_tw_.n - 1, i + L_tw_.ku);
        for (int j = j0; j <= j1; ++j)
            M.at(i, j) = ((i == j) ? 1.0 : 0.0) - dt_ * L_tw_.get(i, j);
    }
    for (int i = 1; i + 1 < N; ++i)
        for (int comp = 0; comp < n; ++comp) {
            int row = (i - 1) * n + comp;
            M.at(row, row) += dt_ * extra * 2.0 * idx2;
            if (i > 1) M.at(row, row - n) -= dt_ * extra * idx2;
            if (i < N - 2) M.at(row, row + n) -= dt_ * extra * idx2;
        }
    BandLU lu(std::move(M));
    std::vector<double> rhs;
    Profile tmp(grid, n);
    for (int comp = 0; comp < n; ++comp)
        for (int i = 1; i + 1 < N; ++i)
            tmp.at(comp, i) = dt_ * R.at(comp, i) + sigma * noise.at(comp, i);
    pack_interior(tmp, rhs);
    lu.solve(rhs.data());
    unpack_interior(rhs, tmp);
    axpy(1.0, tmp, V);

    Gamma += dt_ * (setup_->c_s + gen.fn.a) + sigma * bdw;
    return info;
}

LabFrameEngine::LabFrameEngine(const SimSetup& setup, double dt, double k_up)
    : setup_(&setup), machine_(setup, k_up), dt_(dt) {
    const ModelSpec& model = setup.model;
    const GridPtr grid = setup.phi_s.grid;
    const Grid& g = *grid;
    const int n = model.n;
    const int ni = interior_size(g, n);
    const int band = 2 * n - 1;
    BandMatrix M(ni, band, band);
    rhs_op_ = BandMatrix(ni, band, band);
    const double idx2 = 1.0 / (g.dx * g.dx);
    for (int i = 1; i + 1 < g.N; ++i)
        for (int comp = 0; comp < n; ++comp) {
            int row = (i - 1) * n + comp;
            double r = 0.5 * dt * model.rho[comp] * idx2;  // Crank-Nicolson
            M.at(row, row) = 1.0 + 2.0 * r;
            rhs_op_.at(row, row) = 1.0 - 2.0 * r;
            if (i > 1) {
                M.at(row, row - n) = -r;
                rhs_op_.at(row, row - n) = r;
            }
            if (i < g.N - 2) {
                M.at(row, row + n) = -r;
                rhs_op_.at(row, row + n) = r;
            }
        }
    lu_ = BandLU(std::move(M));
    ref_ = model.phi_ref_profile(grid);
    // discrete curvature of the sampled reference: constants then solve the
    // scheme exactly at the equilibria
    ref_xx_ = second_difference(ref_);
}

StepInfo LabFrameEngine::step(Profile& U, double& Gamma, const Profile& dW) {
    const ModelSpec& model = setup_->model;
    const GridPtr grid = U.grid;
    const int N = grid->N;
    const int n = model.n;
    const double sigma = setup_->sigma;

    if (!U.all_finite()) throw BlowUp("step_lab_frame: blow-up");

    std::vector<double> q0(setup_->kernels.size());
    for (size_t cq = 0; cq < q0.size(); ++cq) q0[cq] = setup_->kernels[cq].q0;

    auto drift = [&](const Profile& Uc, Profile& out) {
        Profile f(grid, n), h(grid, n);
        model.fn->f(Uc, f);
        model.fn->h_corr(Uc, q0, h);
        for (int comp = 0; comp < n; ++comp)
            for (int i = 1; i + 1 < N; ++i)
                out.at(comp, i) = f.at(comp, i) +
                                  sigma * sigma * model.mu * h.at(comp, i) +
                                  model.rho[comp] * ref_xx_.at(comp, i);
    };

    // phase functionals at the step start
    auto fn = machine_.functionals(U, Gamma);
    double bdw = machine_.b_apply(U, Gamma, dW);
    StepInfo info;
    info.a = fn.a;
    info.b_hs_sq = fn.b_hs_sq;
    info.b_dW = bdw;
    info.tracked = fn.chi_h >= 1.0;

    Profile gdiag(grid, n);
    model.fn->g(U, gdiag);

    // predictor (explicit Euler drift + noise, CN diffusion)
    Profile d0(grid, n);
    drift(U, d0);
    Profile X = U - ref_;
    std::vector<double> base;
    {
        std::vector<double> in;
        pack_interior(X, in);
        base.resize(in.size());
        rhs_op_.multiply(in.data(), base.data());
    }
    Profile noise(grid, n);
    for (int comp = 0; comp < n; ++comp)
        for (int i = 1; i + 1 < N; ++i)
            noise.at(comp, i) = sigma * gdiag.at(comp, i) * dW.at(comp, i);
    std::vector<double> add;
    Profile tmp(grid, n);
    for (int comp = 0; comp < n; ++comp)
        for (int i = 1; i + 1 < N; ++i)
            tmp.at(comp, i) = dt_ * d0.at(comp, i) + noise.at(comp, i);
    pack_interior(tmp, add);
    std::vector<double> pred(base.size());
    for (size_t i = 0; i < base.size(); ++i) pred[i] = base[i] + add[i];
    lu_.solve(pred.data());
    Profile Upred(grid, n);
    unpack_interior(pred, Upred);
    axpy(1.0, ref_, Upred);

    // corrector: trapezoid on the reaction drift
    Profile d1(grid, n);
    drift(Upred, d1);
    for (int comp = 0; comp < n; ++comp)
        for (int i = 1; i + 1 < N; ++i)
            tmp.at(comp, i) = 0.5 * dt_ * (d0.at(comp, i) + d1.at(comp, i)) +
                              noise.at(comp, i);
    pack_interior(tmp, add);
    for (size_t i = 0; i < base.size(); ++i) pred[i] = base[i] + add[i];
    lu_.solve(pred.data());
    unpack_interior(pred, U);
    axpy(1.0, ref_, U);

    Gamma += dt_ * (setup_->c_s + fn.a) + sigma * bdw;
    return info;
}

Profile reconstruct_V_from_lab(const Profile& U, double Gamma, const Profile& phi_s) {
    Profile shifted = shift(U, -Gamma);
    return shifted - phi_s;
}

SimPath run_simulation(const SimSetup& setup, const SimConfig& cfg) {
    const GridPtr grid = setup.phi_s.grid;
    NoiseSampler sampler(setup.kernels, cfg.seed);
    SimPath path;
    const int steps = static_cast<int>(std::ceil(cfg.T / cfg.dt - 1e-12));

    auto record = [&](double t, double gamma, const Profile& V, const StepInfo& info,
                      const Profile& state) {
        path.times.push_back(t);
        path.gamma.push_back(gamma);
        path.v_l2sq.push_back(l2_norm_sq(V));
        path.a_hist.push_back(info.a);
        path.b_hs_sq_hist.push_back(info.b_hs_sq);
        if (cfg.keep_snapshots) path.snapshots.push_back(state);
    };

    double Gamma = 0.0;
    if (cfg.frame == Frame::wave_V) {
        WaveFrameEngine engine(setup, cfg.dt, cfg.k_up);
        Profile V(grid, setup.model.n);
        if (cfg.initial_V) V = *cfg.initial_V;
        StepInfo info;
        record(0.0, Gamma, V, info, V);
        (void)0;
        for (int k = 0; k < steps; ++k) {
            Profile dW = sampler.sample_increment(cfg.dt);
            info = engine.step(V, Gamma, dW);
            if (!V.all_finite()) {
                path.blow_up_at = (k + 1) * cfg.dt;
                break;
            }
            if (!info.tracked && !path.tracking_failed_at)
                path.tracking_failed_at = (k + 1) * cfg.dt;
            if ((k + 1) % cfg.record_every == 0 || k + 1 == steps)
                record((k + 1) * cfg.dt, Gamma, V, info, V);
        }
    } else {
        LabFrameEngine engine(setup, cfg.dt, cfg.k_up);
        Profile U = setup.phi_s;
        if (cfg.initial_V) U = U + *cfg.initial_V;
        StepInfo info;
        Profile V0 = U - setup.phi_s;
        record(0.0, Gamma, V0, info, U);
        for (int k = 0; k < steps; ++k) {
            Profile dW = sampler.sample_increment(cfg.dt);
            try {
                info = engine.step(U, Gamma, dW);
            } catch (const BlowUp&) {
                path.blow_up_at = (k + 1) * cfg.dt;
                break;
            }
            if (!info.tracked && !path.tracking_failed_at)
                path.tracking_failed_at = (k + 1) * cfg.dt;
            if ((k + 1) % cfg.record_every == 0 || k + 1 == steps) {
                Profile V;
                try {
                    V = reconstruct_V_from_lab(U, Gamma, setup.phi_s);
                } catch (const ShiftOutOfDomain&) {
                    path.tracking_failed_at = (k + 1) * cfg.dt;
                    break;
                }
                record((k + 1) * cfg.dt, Gamma, V, info, U);
            }
        }
    }
    return path;
}

}  // namespace stochwave
