#include "stochwave/expansion.hpp"

#include <algorithm>
#include <cmath>

#include "stochwave/parallel.hpp"
#include "stochwave/simulate.hpp"

namespace stochwave {

namespace {

double estimate_beta(const ModelSpec& model, const WavePair& wave) {
    if (wave.beta > 0.0) return wave.beta;
    // decay-fit fallback: evolve a projected bump and fit the log slope
    const GridPtr grid = wave.phi.grid;
    Profile v(grid, model.n);
    for (int c = 0; c < model.n; ++c)
        for (int i = 0; i < grid->N; ++i) {
            double x = grid->x(i);
            v.at(c, i) = std::exp(-x * x / 18.0) * (1.0 + 0.3 * std::sin(0.7 * x + c));
        }
    Profile vc = v - spectral_projection(wave, v);
    SemigroupStepper st(model, wave, 0.02);
    double t0 = 2.0, t1 = 8.0;
    Profile w = vc;
    int s0 = static_cast<int>(t0 / 0.02), s1 = static_cast<int>(t1 / 0.02);
    for (int k = 0; k < s0; ++k) st.step(w);
    Profile w0 = w - spectral_projection(wave, w);
    double n0 = l2_norm(w0);
    for (int k = s0; k < s1; ++k) st.step(w);
    Profile w1 = w - spectral_projection(wave, w);
    double n1 = l2_norm(w1);
    double beta = std::log(n0 / n1) / (t1 - t0);
    return std::max(beta, 1e-3);
}

void build_modes(ExpansionContext& ctx) {
    const ModelSpec& model = ctx.model;
    const GridPtr grid = ctx.wave_det.phi.grid;
    ctx.modes.clear();
    ctx.mode_lambda.clear();
    for (int slot = 0; slot < model.m; ++slot) {
        auto basis = basis_eigendata(grid, ctx.kernels[slot], ctx.k_max);
        for (size_t b = 0; b < basis.funcs.size(); ++b) {
            Profile w(grid, model.m);
            for (int i = 0; i < grid->N; ++i) w.at(slot, i) = basis.funcs[b].at(0, i);
            Profile I = S_sigma0(ctx, w);
            if (l2_norm_sq(I) < 1e-28) continue;  // dead noise slot (e.g. g = 0)
            ctx.modes.push_back(std::move(I));
            ctx.mode_lambda.push_back(basis.lambdas[b]);
        }
    }
}

ExpansionContext make_context_impl(const ModelSpec& model,
                                   const std::vector<CovarianceKernel>& kernels,
                                   const WavePair& wave_det, Profile phi_s, double c_s,
                                   double sigma, int k_max, double dt_sg, double T_int) {
    ExpansionContext ctx;
    ctx.model = model;
    ctx.kernels = kernels;
    ctx.wave_det = wave_det;
    ctx.phi_s = std::move(phi_s);
    ctx.c_s = c_s;
    ctx.sigma = sigma;
    ctx.k_max = k_max;
    ctx.dt_sg = dt_sg;
    ctx.phi_s_prime = wave_derivative(model, ctx.phi_s, wave_det.order);
    ctx.ip_phip_psi = inner_product(ctx.phi_s_prime, wave_det.psi);
    if (T_int > 0.0) {
        ctx.T_int = T_int;
    } else {
        double beta = estimate_beta(model, wave_det);
        ctx.T_int = std::max(20.0, 8.0 / beta);
    }
    build_modes(ctx);
    return ctx;
}

}  // namespace

ExpansionContext make_expansion_context(const ModelSpec& model,
                                        const std::vector<CovarianceKernel>& kernels,
                                        const WavePair& wave_det, int k_max, double dt_sg,
                                        double T_int) {
    return make_context_impl(model, kernels, wave_det, wave_det.phi, wave_det.c, 0.0,
                             k_max, dt_sg, T_int);
}

ExpansionContext make_expansion_context(const ModelSpec& model,
                                        const std::vector<CovarianceKernel>& kernels,
                                        const WavePair& wave_det, const StochWaveResult& sw,
                                        int k_max, double dt_sg, double T_int) {
    return make_context_impl(model, kernels, wave_det, sw.wave.phi, sw.wave.c, sw.sigma,
                             k_max, dt_sg, T_int);
}

Profile S_sigma0(const ExpansionContext& ctx, const Profile& w) {
    const ModelSpec& model = ctx.model;
    const int N = ctx.phi_s.grid_N();
    Profile gdiag(ctx.phi_s.grid, model.n);
    model.fn->g(ctx.phi_s, gdiag);
    Profile gw(ctx.phi_s.grid, model.n);
    for (int c = 0; c < model.n; ++c)
        for (int i = 0; i < N; ++i) gw.at(c, i) = gdiag.at(c, i) * w.at(c, i);
    double ip = inner_product(ctx.wave_det.psi, gw) / ctx.ip_phip_psi;
    Profile out = gw;
    axpy(-ip, ctx.phi_s_prime, out);
    return out;
}

SweepResult run_expansion_sweep(const ExpansionContext& ctx,
                                const std::vector<double>& record_times, int n_threads) {
    const ModelSpec& model = ctx.model;
    const GridPtr grid = ctx.wave_det.phi.grid;
    const int n = model.n;
    const double dt = ctx.dt_sg;
    const int steps = static_cast<int>(std::ceil(ctx.T_int / dt - 1e-12));
    const int n_modes = static_cast<int>(ctx.modes.size());
    const int chunk_size = 16;
    const int n_chunks = (n_modes + chunk_size - 1) / chunk_size;

    // record indices on the dt mesh
    std::vector<int> rec_idx(record_times.size());
    for (size_t r = 0; r < record_times.size(); ++r)
        rec_idx[r] = std::min(steps, static_cast<int>(std::round(record_times[r] / dt)));

    struct ChunkAcc {
        double cod_int = 0.0;                  // trapezoid of phi(s)
        double integrand_last = 0.0;
        std::vector<double> integrand_tail;    // for the tail-rate fit
        Profile W_int;                         // trapezoid of projected J
        std::vector<double> nu_at;             // running nu-integral at records
        std::vector<Profile> u_at;             // co-evolved E[V2] at records
    };
    std::vector<ChunkAcc> acc(n_chunks);
    const bool want_records = !record_times.empty();

    parallel_chunks(n_chunks, n_threads, [&](int chunk) {
        int m0 = chunk * chunk_size;
        int m1 = std::min(n_modes, m0 + chunk_size);
        SemigroupStepper st(model, ctx.wave_det, dt);
        std::vector<std::vector<double>> states(m1 - m0);
        for (int m = m0; m < m1; ++m) pack_interior(ctx.modes[m], states[m - m0]);

        ChunkAcc& A = acc[chunk];
        A.W_int = Profile(grid, n);
        A.nu_at.assign(record_times.size(), 0.0);
        if (want_records) A.u_at.assign(record_times.size(), Profile(grid, n));

        Profile scratch(grid, n), d2f(grid, n);
        Profile J_prev(grid, n), J_cur(grid, n);
        Profile w_run(grid, n), u(grid, n);
        double phi_prev = 0.0, nu_prev = 0.0, nu_int = 0.0;

        auto eval_step = [&](Profile& J_out, double& phi_out, double& nu_out) {
            J_out = Profile(grid, n);
            phi_out = 0.0;
            nu_out = 0.0;
            for (int m = m0; m < m1; ++m) {
                unpack_interior(states[m - m0], scratch);
                const double lam = ctx.mode_lambda[m];
                model.fn->d2f_vv(ctx.phi_s, scratch, d2f);
                scale(d2f, 0.5);
                double ip = inner_product(d2f, ctx.wave_det.psi);
                phi_out += lam * ip;
                axpy(lam, d2f, J_out);
                axpy(-lam * ip / ctx.ip_phip_psi, ctx.phi_s_prime, J_out);
                nu_out += lam * l2_norm_sq(scratch);
            }
        };

        eval_step(J_prev, phi_prev, nu_prev);
        int next_rec = 0;
        while (next_rec < static_cast<int>(rec_idx.size()) && rec_idx[next_rec] == 0) {
            A.nu_at[next_rec] = 0.0;
            ++next_rec;
        }
        for (int k = 1; k <= steps; ++k) {
            for (auto& s : states) st.step(s);
            double phi_cur, nu_cur;
            eval_step(J_cur, phi_cur, nu_cur);
            A.cod_int += 0.5 * dt * (phi_prev + phi_cur);
            nu_int += 0.5 * dt * (nu_prev + nu_cur);
            axpy(0.5 * dt, J_prev, A.W_int);
            axpy(0.5 * dt, J_cur, A.W_int);
            if (want_records) {
                // u' = L u + w, w' = J (E[V^(2)] superposition per chunk)
                Profile w_new = w_run;
                axpy(0.5 * dt, J_prev, w_new);
                axpy(0.5 * dt, J_cur, w_new);
                axpy(0.5 * dt, w_run, u);
                st.step(u);
                axpy(0.5 * dt, w_new, u);
                w_run = std::move(w_new);
                while (next_rec < static_cast<int>(rec_idx.size()) &&
                       rec_idx[next_rec] == k) {
                    A.nu_at[next_rec] = nu_int;
                    A.u_at[next_rec] = u;
                    ++next_rec;
                }
            }
            if (k > steps * 3 / 4) A.integrand_tail.push_back(std::abs(phi_cur));
            phi_prev = phi_cur;
            nu_prev = nu_cur;
            std::swap(J_prev, J_cur);
        }
        A.integrand_last = std::abs(phi_prev);
    });

    SweepResult out;
    out.v_od_rhs = Profile(grid, n);
    out.times = record_times;
    out.v1_norm2.assign(record_times.size(), 0.0);
    if (want_records) out.ev2.assign(record_times.size(), Profile(grid, n));
    double integrand_last = 0.0;
    for (int c = 0; c < n_chunks; ++c) {
        out.c_od -= acc[c].cod_int;
        axpy(1.0, acc[c].W_int, out.v_od_rhs);
        integrand_last += acc[c].integrand_last;
        for (size_t r = 0; r < record_times.size(); ++r) {
            out.v1_norm2[r] += acc[c].nu_at[r];
            if (want_records) axpy(1.0, acc[c].u_at[r], out.ev2[r]);
        }
    }
    out.integrand_final = integrand_last;
    // decay-rate fit over the last quarter for the truncation bound
    {
        std::vector<double> tail;
        size_t len = acc.empty() ? 0 : acc[0].integrand_tail.size();
        for (size_t i = 0; i < len; ++i) {
            double s = 0.0;
            for (int c = 0; c < n_chunks; ++c)
                if (i < acc[c].integrand_tail.size()) s += acc[c].integrand_tail[i];
            tail.push_back(std::max(s, 1e-300));
        }
        double rate = 0.0;
        if (tail.size() > 10) {
            double l0 = std::log(tail.front()), l1 = std::log(tail.back());
            rate = (l0 - l1) / (dt * static_cast<double>(tail.size() - 1));
        }
        out.tail_bound = rate > 1e-6 ? integrand_last / rate : integrand_last * ctx.T_int;
    }
    return out;
}

double expected_gamma2_rate(const ExpansionContext& ctx, int n_threads) {
    return run_expansion_sweep(ctx, {}, n_threads).c_od;
}

Profile orbital_drift_shape(const ExpansionContext& ctx, int n_threads) {
    auto sweep = run_expansion_sweep(ctx, {}, n_threads);
    WaveOperator op(ctx.model, ctx.wave_det);
    auto [u, s] = op.solve_bordered(sweep.v_od_rhs);
    (void)s;
    scale(u, -1.0);
    return u;
}

std::vector<double> predicted_V1_norm(const ExpansionContext& ctx,
                                      const std::vector<double>& record_times,
                                      int n_threads) {
    return run_expansion_sweep(ctx, record_times, n_threads).v1_norm2;
}

OrderStepper::OrderStepper(const ExpansionContext& ctx, double dt)
    : ctx_(&ctx), dt_(dt) {
    BandMatrix L = assemble_linearization(ctx.model, ctx.wave_det.phi, ctx.wave_det.c,
                                          false, ctx.wave_det.order);
    BandMatrix M(L.n, L.kl, L.ku);
    for (int i = 0; i < L.n; ++i) {
        int j0 = std::max(0, i - L.kl), j1 = std::min(L.n - 1, i + L.ku);
        for (int j = j0; j <= j1; ++j)
            M.at(i, j) = ((i == j) ? 1.0 : 0.0) - dt * L.get(i, j);
    }
    lu_ = BandLU(std::move(M));
}

void OrderStepper::step_first(Profile& V1, double& Gamma1, const Profile& dW) const {
    const ModelSpec& model = ctx_->model;
    const int N = V1.grid_N();
    Profile gdiag(V1.grid, model.n);
    model.fn->g(ctx_->phi_s, gdiag);
    Profile gw(V1.grid, model.n);
    for (int c = 0; c < model.n; ++c)
        for (int i = 0; i < N; ++i) gw.at(c, i) = gdiag.at(c, i) * dW.at(c, i);
    double ip = inner_product(ctx_->wave_det.psi, gw) / ctx_->ip_phip_psi;
    Gamma1 -= ip;
    Profile rhs = V1 + gw;
    axpy(-ip, ctx_->phi_s_prime, rhs);
    std::vector<double> xv;
    pack_interior(rhs, xv);
    lu_.solve(xv.data());
    unpack_interior(xv, V1);
}

Profile OrderStepper::R2_vv(const Profile& V) const {
    const ModelSpec& model = ctx_->model;
    Profile d2f(V.grid, model.n);
    model.fn->d2f_vv(ctx_->phi_s, V, d2f);
    scale(d2f, 0.5);
    double ip = inner_product(d2f, ctx_->wave_det.psi) / ctx_->ip_phip_psi;
    Profile out = d2f;
    axpy(-ip, ctx_->phi_s_prime, out);
    return out;
}

double OrderStepper::a2_vv(const Profile& V) const {
    const ModelSpec& model = ctx_->model;
    Profile d2f(V.grid, model.n);
    model.fn->d2f_vv(ctx_->phi_s, V, d2f);
    return -0.5 * inner_product(d2f, ctx_->wave_det.psi) / ctx_->ip_phip_psi;
}

Profile OrderStepper::S1_v(const Profile& V, const Profile& w) const {
    const ModelSpec& model = ctx_->model;
    const int N = V.grid_N();
    const double A = ctx_->ip_phip_psi;
    Profile gdiag(V.grid, model.n), dg(V.grid, model.n);
    model.fn->g(ctx_->phi_s, gdiag);
    model.fn->dg_v(ctx_->phi_s, V, dg);
    Profile gw(V.grid, model.n), dgw(V.grid, model.n);
    for (int c = 0; c < model.n; ++c)
        for (int i = 0; i < N; ++i) {
            gw.at(c, i) = gdiag.at(c, i) * w.at(c, i);
            dgw.at(c, i) = dg.at(c, i) * w.at(c, i);
        }
    Profile Vx = first_difference(V);
    double ip_gw = inner_product(ctx_->wave_det.psi, gw);
    double ip_dgw = inner_product(ctx_->wave_det.psi, dgw);
    double ip_vx = inner_product(Vx, ctx_->wave_det.psi);
    Profile out = dgw;
    axpy(-ip_gw / A, Vx, out);
    axpy(-ip_dgw / A + ip_vx * ip_gw / (A * A), ctx_->phi_s_prime, out);
    return out;
}

double OrderStepper::b1_v(const Profile& V, const Profile& w) const {
    const ModelSpec& model = ctx_->model;
    const int N = V.grid_N();
    const double A = ctx_->ip_phip_psi;
    Profile gdiag(V.grid, model.n), dg(V.grid, model.n);
    model.fn->g(ctx_->phi_s, gdiag);
    model.fn->dg_v(ctx_->phi_s, V, dg);
    Profile gw(V.grid, model.n), dgw(V.grid, model.n);
    for (int c = 0; c < model.n; ++c)
        for (int i = 0; i < N; ++i) {
            gw.at(c, i) = gdiag.at(c, i) * w.at(c, i);
            dgw.at(c, i) = dg.at(c, i) * w.at(c, i);
        }
    Profile Vx = first_difference(V);
    return -inner_product(ctx_->wave_det.psi, dgw) / A +
           inner_product(Vx, ctx_->wave_det.psi) *
               inner_product(ctx_->wave_det.psi, gw) / (A * A);
}

void OrderStepper::step_martingale(const Profile& V1, Profile& M, const Profile& dW) const {
    Profile rhs = M;
    Profile s1 = S1_v(V1, dW);
    axpy(1.0, s1, rhs);
    std::vector<double> xv;
    pack_interior(rhs, xv);
    lu_.solve(xv.data());
    unpack_interior(xv, M);
}

void OrderStepper::step_second(const Profile& V1, Profile& V2, double& Gamma2,
                               const Profile& dW) const {
    Gamma2 += dt_ * a2_vv(V1) + b1_v(V1, dW);
    Profile rhs = V2;
    Profile r2 = R2_vv(V1);
    axpy(dt_, r2, rhs);
    Profile s1 = S1_v(V1, dW);
    axpy(1.0, s1, rhs);
    std::vector<double> xv;
    pack_interior(rhs, xv);
    lu_.solve(xv.data());
    unpack_interior(xv, V2);
}

namespace {
ExpansionPath evolve_impl(const ExpansionContext& ctx, NoiseSampler& noise, double T,
                          double dt, int record_every, bool keep_snapshots,
                          bool second_order) {
    const GridPtr grid = ctx.wave_det.phi.grid;
    OrderStepper st(ctx, dt);
    Profile V1(grid, ctx.model.n), V2(grid, ctx.model.n);
    double G1 = 0.0, G2 = 0.0;
    ExpansionPath path;
    const int steps = static_cast<int>(std::ceil(T / dt - 1e-12));
    auto record = [&](double t) {
        path.times.push_back(t);
        path.gamma1.push_back(G1);
        path.v1_norm2.push_back(l2_norm_sq(V1));
        path.v1_psi_ip.push_back(inner_product(ctx.wave_det.psi, V1));
        if (second_order) {
            path.gamma2.push_back(G2);
            path.v2_norm2.push_back(l2_norm_sq(V2));
            path.v2_psi_ip.push_back(inner_product(ctx.wave_det.psi, V2));
        }
        if (keep_snapshots) {
            path.v1_snaps.push_back(V1);
            if (second_order) path.v2_snaps.push_back(V2);
        }
    };
    record(0.0);
    for (int k = 0; k < steps; ++k) {
        Profile dW = noise.sample_increment(dt);
        if (second_order) st.step_second(V1, V2, G2, dW);
        st.step_first(V1, G1, dW);
        if ((k + 1) % record_every == 0 || k + 1 == steps) record((k + 1) * dt);
    }
    return path;
}
}  // namespace

ExpansionPath evolve_first_order(const ExpansionContext& ctx, NoiseSampler& noise,
                                 double T, double dt, int record_every,
                                 bool keep_snapshots) {
    return evolve_impl(ctx, noise, T, dt, record_every, keep_snapshots, false);
}

ExpansionPath evolve_second_order(const ExpansionContext& ctx, NoiseSampler& noise,
                                  double T, double dt, int record_every,
                                  bool keep_snapshots) {
    return evolve_impl(ctx, noise, T, dt, record_every, keep_snapshots, true);
}

Gamma3Result gamma3_rate(const ExpansionContext& ctx, double sigma, int realizations,
                         double T, double dt, uint64_t seed, int n_threads) {
    const GridPtr grid = ctx.wave_det.phi.grid;
    SimSetup setup;
    setup.model = ctx.model;
    setup.kernels = ctx.kernels;
    setup.wave_det = ctx.wave_det;
    setup.phi_s = ctx.phi_s;
    setup.c_s = ctx.c_s;
    setup.sigma = sigma;

    const int steps = static_cast<int>(std::ceil(T / dt - 1e-12));
    std::vector<double> estimates(realizations, 0.0);
    const int chunk_size = 4;
    const int n_chunks = (realizations + chunk_size - 1) / chunk_size;

    parallel_chunks(n_chunks, n_threads, [&](int chunk) {
        OrderStepper st(ctx, dt);
        PhaseMachine machine(setup, 10.0);
        for (int r = chunk * chunk_size;
             r < std::min(realizations, (chunk + 1) * chunk_size); ++r) {
            NoiseSampler noise(ctx.kernels, derive_seed(seed, r));
            Profile V1(grid, ctx.model.n), V2(grid, ctx.model.n);
            double G1 = 0.0, G2 = 0.0, apx_int = 0.0;
            // (2/T) int_{T/2}^T D(t)/t dt by the trapezoid rule on the fly
            double est = 0.0;
            double D_prev = 0.0;
            int k_half = steps / 2;
            for (int k = 0; k < steps; ++k) {
                Profile dW = noise.sample_increment(dt);
                // Gamma_apx increment along sigma V1 + sigma^2 V2
                Profile W = sigma * V1;
                axpy(sigma * sigma, V2, W);
                Profile U = setup.phi_s + W;
                auto fn = machine.functionals(U, 0.0);
                double bdw = machine.b_apply(U, 0.0, dW);
                apx_int += dt * fn.a + sigma * bdw;
                st.step_second(V1, V2, G2, dW);
                st.step_first(V1, G1, dW);
                double t = (k + 1) * dt;
                double D = apx_int - sigma * G1 - sigma * sigma * G2;
                if (k + 1 > k_half) {
                    double t_prev = t - dt;
                    if (k + 1 == k_half + 1) {
                        D_prev = D;  // start of the averaging window
                    } else {
                        est += 0.5 * dt * (D_prev / t_prev + D / t);
                        D_prev = D;
                    }
                }
            }
            estimates[r] = est * 2.0 / T;
        }
    });

    Gamma3Result out;
    out.realizations = realizations;
    out.low_sample_warning = realizations < 100;
    double mean = 0.0;
    for (double e : estimates) mean += e;
    mean /= realizations;
    double var = 0.0;
    for (double e : estimates) var += (e - mean) * (e - mean);
    var /= std::max(1, realizations - 1);
    out.c_cub = mean;
    out.std_error = std::sqrt(var / realizations);
    out.rate_over_sigma3 = mean / (sigma * sigma * sigma);
    return out;
}

}  // namespace stochwave
