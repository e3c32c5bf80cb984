#pragma once

#include "stochwave/expansion.hpp"
#include "stochwave/simulate.hpp"

namespace stochwave {

struct EnsembleSpec {
    ModelSpec model;
    std::vector<CovarianceKernel> kernels;
    WavePair wave_det;
    std::vector<double> sigmas;
    int realizations = 500;
    uint64_t base_seed = 1;
    SimConfig sim;                       // dt, T, frame, k_up, record_every
    bool co_evolve_orders = true;        // V1/V2/M2 alongside the full path
    std::vector<double> snapshot_times;  // variance-reduced E[V(t)] profiles
    double stability_epsilon = 0.1;
    double stability_eta = 1.0;
    int k_max = 150;
    int n_threads = 0;
};

struct PerSigmaStats {
    double sigma = 0.0;
    double c_sigma = 0.0;
    int n_effective = 0;
    int n_failed = 0;
    std::vector<double> times;
    // every mean carries a standard error (unbiased R-1 divisor)
    std::vector<double> mean_gamma_dev, se_gamma_dev;  // E[Gamma - c_s t - s G1]
    std::vector<double> var_gamma, se_var_gamma;
    std::vector<double> mean_v2, se_v2;          // E||V||^2
    std::vector<double> mean_vres2, se_vres2;    // E||V - sV1 - s^2V2||^2
    std::vector<double> mean_sup, se_sup;        // E[sup_{s<=t}||V||^2]
    std::vector<double> mean_N, se_N;            // stability functional N_{U0}
    std::vector<double> mean_Nres, se_Nres;
    double frac_stopped = 0.0;                   // N_{U0} crossed eta before T
    std::vector<double> snapshot_at;             // requested times
    std::vector<Profile> mean_V_snap;            // variance-reduced E[V(t)]
    std::vector<double> se_V_snap;               // per-snapshot L2 scale error
    double c_obs = 0.0;                          // observed limiting speed
};

struct EnsembleStats {
    std::vector<PerSigmaStats> per_sigma;
    bool valid = true;  // false when >10% of realizations failed
};

EnsembleStats run_ensemble(const EnsembleSpec& spec);

/// c_obs = c_s + (2/T) int_{T/2}^T t^{-1} E[Gamma - c_s t - sigma Gamma1] dt.
double observed_limiting_speed(const PerSigmaStats& stats, double T);

/// Phi_obs = phi_s + E[V(t_eval)] (variance reduced); snapshot index by time.
Profile observed_limiting_shape(const PerSigmaStats& stats, const Profile& phi_s,
                                double t_eval);

struct ScalingReport {
    double v2_slope = 0.0, v2_ci = 0.0;        // target 2
    double vres2_slope = 0.0, vres2_ci = 0.0;  // target 6 (Nagumo)
    double sup_slope = 0.0, sup_ci = 0.0;      // target 2
};
ScalingReport scaling_report(const EnsembleStats& stats);

struct SupTrend {
    double r2_log = 0.0;     // fit E[sup] ~ a + b log t
    double r2_linear = 0.0;  // fit E[sup] ~ a + b t
};
SupTrend running_sup_trend(const PerSigmaStats& stats, double t_min);

}  // namespace stochwave
