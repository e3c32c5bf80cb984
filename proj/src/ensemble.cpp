#include "stochwave/ensemble.hpp"

#include <algorithm>
#include <cmath>

#include "stochwave/parallel.hpp"

namespace stochwave {

namespace {

struct ChunkAcc {
    // per record time: plain sums and sums of squares over realizations
    std::vector<double> g_dev, g_dev2;    // Gamma - c t - sigma Gamma1
    std::vector<double> gamma, gamma2;    // raw Gamma for Var
    std::vector<double> v2, v2sq;
    std::vector<double> vres2, vres2sq;
    std::vector<double> sup, supsq;
    std::vector<double> N, Nsq, Nres, Nressq;
    std::vector<Profile> vsnap_sum;  // variance-reduced V snapshots
    std::vector<double> vsnap_norm2;
    int n_ok = 0, n_failed = 0, n_stopped = 0;

    void init(size_t n_rec, size_t n_snap, const GridPtr& g, int ncomp) {
        g_dev.assign(n_rec, 0.0);
        g_dev2.assign(n_rec, 0.0);
        gamma.assign(n_rec, 0.0);
        gamma2.assign(n_rec, 0.0);
        v2.assign(n_rec, 0.0);
        v2sq.assign(n_rec, 0.0);
        vres2.assign(n_rec, 0.0);
        vres2sq.assign(n_rec, 0.0);
        sup.assign(n_rec, 0.0);
        supsq.assign(n_rec, 0.0);
        N.assign(n_rec, 0.0);
        Nsq.assign(n_rec, 0.0);
        Nres.assign(n_rec, 0.0);
        Nressq.assign(n_rec, 0.0);
        vsnap_sum.assign(n_snap, Profile(g, ncomp));
        vsnap_norm2.assign(n_snap, 0.0);
    }
};

}  // namespace

EnsembleStats run_ensemble(const EnsembleSpec& spec) {
    EnsembleStats out;
    const GridPtr grid = spec.wave_det.phi.grid;
    const int n = spec.model.n;
    const double dt = spec.sim.dt;
    const int steps = static_cast<int>(std::ceil(spec.sim.T / dt - 1e-12));
    const int rec_every = std::max(1, spec.sim.record_every);
    std::vector<int> rec_steps;
    for (int k = rec_every; k <= steps; k += rec_every) rec_steps.push_back(k);
    const size_t n_rec = rec_steps.size();

    std::vector<int> snap_steps;
    for (double t : spec.snapshot_times)
        snap_steps.push_back(
            std::min(steps, static_cast<int>(std::round(t / dt))));
    const size_t n_snap = snap_steps.size();

    for (size_t is = 0; is < spec.sigmas.size(); ++is) {
        const double sigma = spec.sigmas[is];
        PerSigmaStats ps;
        ps.sigma = sigma;

        StochWaveResult sw = solve_instantaneous_wave(spec.model, spec.kernels,
                                                      spec.wave_det, sigma);
        ps.c_sigma = sw.wave.c;
        SimSetup setup = make_sim_setup(spec.model, spec.kernels, spec.wave_det, sw);
        setup.sigma = sigma;
        ExpansionContext ctx = make_expansion_context(spec.model, spec.kernels,
                                                      spec.wave_det, sw, spec.k_max,
                                                      spec.sim.dt, 20.0);

        const int chunk_size = 8;
        const int n_chunks = (spec.realizations + chunk_size - 1) / chunk_size;
        std::vector<ChunkAcc> acc(n_chunks);

        const uint64_t sigma_seed = derive_seed(spec.base_seed, 7919 * (is + 1));

        parallel_chunks(n_chunks, spec.n_threads, [&](int chunk) {
            ChunkAcc& A = acc[chunk];
            A.init(n_rec, n_snap, grid, n);
            WaveFrameEngine engine(setup, dt, spec.sim.k_up);
            OrderStepper orders(ctx, dt);
            const double eps = spec.stability_epsilon;
            const double decay = std::exp(-eps * dt);

            for (int r = chunk * chunk_size;
                 r < std::min(spec.realizations, (chunk + 1) * chunk_size); ++r) {
                NoiseSampler noise(spec.kernels, derive_seed(sigma_seed, r));
                Profile V(grid, n), V1(grid, n), V2(grid, n), M2(grid, n);
                double Gamma = 0.0, G1 = 0.0, G2 = 0.0;
                double sup_v2 = 0.0, Iacc = 0.0, Ires = 0.0;
                bool failed = false, stopped = false;

                std::vector<double> rg_dev(n_rec), rgamma(n_rec), rv2(n_rec),
                    rvres2(n_rec), rsup(n_rec), rN(n_rec), rNres(n_rec);
                std::vector<Profile> rsnap(n_snap);
                size_t next_rec = 0, next_snap = 0;

                for (int k = 1; k <= steps; ++k) {
                    Profile dW = noise.sample_increment(dt);
                    if (spec.co_evolve_orders) {
                        orders.step_martingale(V1, M2, dW);
                        orders.step_second(V1, V2, G2, dW);
                        orders.step_first(V1, G1, dW);
                    }
                    engine.step(V, Gamma, dW);
                    if (!V.all_finite()) {
                        failed = true;
                        break;
                    }
                    double v2now = l2_norm_sq(V);
                    sup_v2 = std::max(sup_v2, v2now);

                    Profile Vres = V;
                    double vres2now = 0.0, vapx2 = 0.0, vapx_h1 = 0.0;
                    if (spec.co_evolve_orders) {
                        axpy(-sigma, V1, Vres);
                        axpy(-sigma * sigma, V2, Vres);
                        vres2now = l2_norm_sq(Vres);
                        Profile Vapx = sigma * V1;
                        axpy(sigma * sigma, V2, Vapx);
                        vapx2 = l2_norm_sq(Vapx);
                        vapx_h1 = h1_norm_sq(Vapx);
                    }
                    // discounted H1 accumulators for N and N_res
                    Iacc = decay * Iacc + dt * h1_norm_sq(V);
                    double N_now = v2now + Iacc;
                    if (N_now > spec.stability_eta) stopped = true;
                    double Nres_now = 0.0;
                    if (spec.co_evolve_orders) {
                        double s4 = std::pow(sigma, 4);
                        Ires = decay * Ires + dt * (s4 * vapx_h1 + h1_norm_sq(Vres));
                        Nres_now = s4 * vapx2 + vres2now + Ires;
                    }

                    if (next_rec < n_rec && rec_steps[next_rec] == k) {
                        rg_dev[next_rec] = Gamma - ps.c_sigma * k * dt - sigma * G1;
                        rgamma[next_rec] = Gamma;
                        rv2[next_rec] = v2now;
                        rvres2[next_rec] = vres2now;
                        rsup[next_rec] = sup_v2;
                        rN[next_rec] = N_now;
                        rNres[next_rec] = Nres_now;
                        ++next_rec;
                    }
                    if (next_snap < n_snap && snap_steps[next_snap] == k) {
                        Profile snap = V;
                        if (spec.co_evolve_orders) {
                            axpy(-sigma, V1, snap);
                            axpy(-sigma * sigma, M2, snap);
                        }
                        rsnap[next_snap] = std::move(snap);
                        ++next_snap;
                    }
                }
                if (failed || next_rec < n_rec) {
                    ++A.n_failed;
                    continue;
                }
                ++A.n_ok;
                if (stopped) ++A.n_stopped;
                for (size_t i = 0; i < n_rec; ++i) {
                    A.g_dev[i] += rg_dev[i];
                    A.g_dev2[i] += rg_dev[i] * rg_dev[i];
                    A.gamma[i] += rgamma[i];
                    A.gamma2[i] += rgamma[i] * rgamma[i];
                    A.v2[i] += rv2[i];
                    A.v2sq[i] += rv2[i] * rv2[i];
                    A.vres2[i] += rvres2[i];
                    A.vres2sq[i] += rvres2[i] * rvres2[i];
                    A.sup[i] += rsup[i];
                    A.supsq[i] += rsup[i] * rsup[i];
                    A.N[i] += rN[i];
                    A.Nsq[i] += rN[i] * rN[i];
                    A.Nres[i] += rNres[i];
                    A.Nressq[i] += rNres[i] * rNres[i];
                }
                for (size_t i = 0; i < n_snap; ++i) {
                    axpy(1.0, rsnap[i], A.vsnap_sum[i]);
                    A.vsnap_norm2[i] += l2_norm_sq(rsnap[i]);
                }
            }
        });

        // fixed-order reduction
        ps.times.resize(n_rec);
        for (size_t i = 0; i < n_rec; ++i) ps.times[i] = rec_steps[i] * dt;
        auto reduce = [&](auto get_sum, auto get_sq, std::vector<double>& mean,
                          std::vector<double>& se) {
            mean.assign(n_rec, 0.0);
            se.assign(n_rec, 0.0);
            int R = 0;
            for (const auto& A : acc) R += A.n_ok;
            if (R == 0) return;
            for (size_t i = 0; i < n_rec; ++i) {
                double s = 0.0, s2 = 0.0;
                for (const auto& A : acc) {
                    s += get_sum(A)[i];
                    s2 += get_sq(A)[i];
                }
                mean[i] = s / R;
                double var = (R > 1) ? std::max(0.0, (s2 - s * s / R) / (R - 1)) : 0.0;
                se[i] = std::sqrt(var / R);
            }
        };
        reduce([](const ChunkAcc& A) -> const std::vector<double>& { return A.g_dev; },
               [](const ChunkAcc& A) -> const std::vector<double>& { return A.g_dev2; },
               ps.mean_gamma_dev, ps.se_gamma_dev);
        reduce([](const ChunkAcc& A) -> const std::vector<double>& { return A.v2; },
               [](const ChunkAcc& A) -> const std::vector<double>& { return A.v2sq; },
               ps.mean_v2, ps.se_v2);
        reduce([](const ChunkAcc& A) -> const std::vector<double>& { return A.vres2; },
               [](const ChunkAcc& A) -> const std::vector<double>& { return A.vres2sq; },
               ps.mean_vres2, ps.se_vres2);
        reduce([](const ChunkAcc& A) -> const std::vector<double>& { return A.sup; },
               [](const ChunkAcc& A) -> const std::vector<double>& { return A.supsq; },
               ps.mean_sup, ps.se_sup);
        reduce([](const ChunkAcc& A) -> const std::vector<double>& { return A.N; },
               [](const ChunkAcc& A) -> const std::vector<double>& { return A.Nsq; },
               ps.mean_N, ps.se_N);
        reduce([](const ChunkAcc& A) -> const std::vector<double>& { return A.Nres; },
               [](const ChunkAcc& A) -> const std::vector<double>& { return A.Nressq; },
               ps.mean_Nres, ps.se_Nres);

        int R = 0, F = 0, S = 0;
        for (const auto& A : acc) {
            R += A.n_ok;
            F += A.n_failed;
            S += A.n_stopped;
        }
        ps.n_effective = R;
        ps.n_failed = F;
        ps.frac_stopped = R > 0 ? static_cast<double>(S) / R : 0.0;

        // Var(Gamma(t)) with standard error ~ Var sqrt(2/(R-1))
        ps.var_gamma.assign(n_rec, 0.0);
        ps.se_var_gamma.assign(n_rec, 0.0);
        if (R > 1) {
            for (size_t i = 0; i < n_rec; ++i) {
                double s = 0.0, s2 = 0.0;
                for (const auto& A : acc) {
                    s += A.gamma[i];
                    s2 += A.gamma2[i];
                }
                double var = std::max(0.0, (s2 - s * s / R) / (R - 1));
                ps.var_gamma[i] = var;
                ps.se_var_gamma[i] = var * std::sqrt(2.0 / (R - 1));
            }
        }

        ps.snapshot_at.assign(spec.snapshot_times.begin(), spec.snapshot_times.end());
        ps.mean_V_snap.assign(n_snap, Profile(grid, n));
        ps.se_V_snap.assign(n_snap, 0.0);
        if (R > 0) {
            for (size_t i = 0; i < n_snap; ++i) {
                Profile m(grid, n);
                double norm2 = 0.0;
                for (const auto& A : acc) {
                    axpy(1.0, A.vsnap_sum[i], m);
                    norm2 += A.vsnap_norm2[i];
                }
                scale(m, 1.0 / R);
                ps.mean_V_snap[i] = m;
                double mean_norm2 = norm2 / R;
                double excess = std::max(0.0, mean_norm2 - l2_norm_sq(m));
                ps.se_V_snap[i] = std::sqrt(excess / R);
            }
        }

        ps.c_obs = observed_limiting_speed(ps, spec.sim.T);
        if (F > 0 && F * 10 > (R + F)) out.valid = false;
        out.per_sigma.push_back(std::move(ps));
    }
    return out;
}

double observed_limiting_speed(const PerSigmaStats& stats, double T) {
    // c_s + (2/T) int_{T/2}^T t^{-1} E[Gamma - c_s t - sigma Gamma1] dt
    double acc = 0.0;
    bool any = false;
    for (size_t i = 0; i + 1 < stats.times.size(); ++i) {
        double t0 = stats.times[i], t1 = stats.times[i + 1];
        if (t1 < T / 2.0) continue;
        double f0 = stats.mean_gamma_dev[i] / t0;
        double f1 = stats.mean_gamma_dev[i + 1] / t1;
        acc += 0.5 * (t1 - t0) * (f0 + f1);
        any = true;
    }
    if (!any) return stats.c_sigma;
    return stats.c_sigma + 2.0 / T * acc;
}

Profile observed_limiting_shape(const PerSigmaStats& stats, const Profile& phi_s,
                                double t_eval) {
    for (size_t i = 0; i < stats.snapshot_at.size(); ++i)
        if (std::abs(stats.snapshot_at[i] - t_eval) < 1e-9)
            return phi_s + stats.mean_V_snap[i];
    throw std::invalid_argument("observed_limiting_shape: no snapshot at that time");
}

ScalingReport scaling_report(const EnsembleStats& stats) {
    ScalingReport rep;
    std::vector<double> sig, v2, vres2, sup;
    for (const auto& ps : stats.per_sigma) {
        if (ps.mean_v2.empty()) continue;
        sig.push_back(ps.sigma);
        v2.push_back(ps.mean_v2.back());
        vres2.push_back(std::max(ps.mean_vres2.back(), 1e-300));
        sup.push_back(ps.mean_sup.back());
    }
    if (sig.size() < 2) return rep;
    auto fit = [](const std::vector<double>& x, const std::vector<double>& y, double& m,
                  double& ci) {
        std::vector<double> lx(x.size()), ly(y.size());
        for (size_t i = 0; i < x.size(); ++i) {
            lx[i] = std::log(x[i]);
            ly[i] = std::log(y[i]);
        }
        double sx = 0, sy = 0, sxx = 0, sxy = 0;
        size_t n = x.size();
        for (size_t i = 0; i < n; ++i) {
            sx += lx[i];
            sy += ly[i];
            sxx += lx[i] * lx[i];
            sxy += lx[i] * ly[i];
        }
        double denom = n * sxx - sx * sx;
        m = (n * sxy - sx * sy) / denom;
        double b = (sy - m * sx) / n;
        double ss = 0.0;
        for (size_t i = 0; i < n; ++i) {
            double e = ly[i] - b - m * lx[i];
            ss += e * e;
        }
        ci = (n > 2) ? 2.0 * std::sqrt(ss / (n - 2) / (sxx - sx * sx / n)) : 0.0;
    };
    fit(sig, v2, rep.v2_slope, rep.v2_ci);
    fit(sig, vres2, rep.vres2_slope, rep.vres2_ci);
    fit(sig, sup, rep.sup_slope, rep.sup_ci);
    return rep;
}

SupTrend running_sup_trend(const PerSigmaStats& stats, double t_min) {
    SupTrend out;
    std::vector<double> t, y;
    for (size_t i = 0; i < stats.times.size(); ++i)
        if (stats.times[i] >= t_min) {
            t.push_back(stats.times[i]);
            y.push_back(stats.mean_sup[i]);
        }
    if (t.size() < 4) return out;
    auto r2_of = [&](bool log_t) {
        double sx = 0, sy = 0, sxx = 0, sxy = 0;
        size_t n = t.size();
        for (size_t i = 0; i < n; ++i) {
            double x = log_t ? std::log(t[i]) : t[i];
            sx += x;
            sy += y[i];
            sxx += x * x;
            sxy += x * y[i];
        }
        double m = (n * sxy - sx * sy) / (n * sxx - sx * sx);
        double b = (sy - m * sx) / n;
        double ss_res = 0, ss_tot = 0, ybar = sy / n;
        for (size_t i = 0; i < n; ++i) {
            double x = log_t ? std::log(t[i]) : t[i];
            double e = y[i] - b - m * x;
            ss_res += e * e;
            ss_tot += (y[i] - ybar) * (y[i] - ybar);
        }
        return ss_tot > 0 ? 1.0 - ss_res / ss_tot : 1.0;
    };
    out.r2_log = r2_of(true);
    out.r2_linear = r2_of(false);
    return out;
}

}  // namespace stochwave
