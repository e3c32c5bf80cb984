#pragma once

#include <functional>

#include "stochwave/noise.hpp"
#include "stochwave/stochastic_wave.hpp"
#include "stochwave/wave.hpp"

namespace stochwave {

/// Everything the sigma-power expansion machinery needs: the deterministic
/// linearization (semigroup source), the base profile for noise injection
/// (Phi_0 or Phi_sigma), and the truncated noise basis.
struct ExpansionContext {
    ModelSpec model;
    std::vector<CovarianceKernel> kernels;
    WavePair wave_det;   // supplies L_tw, psi_tw and the order
    Profile phi_s;       // base profile for g(.), d_xi(.); defaults to wave_det.phi
    double c_s = 0.0;
    double sigma = 0.0;  // sigma of phi_s (0 for the deterministic base)
    int k_max = 150;
    double dt_sg = 1e-3;
    double T_int = 20.0;

    // noise modes: per component slot and basis function, S_sigma0-image and
    // eigenvalue; zero-image modes are dropped
    std::vector<Profile> modes;
    std::vector<double> mode_lambda;
    double ip_phip_psi = 1.0;  // <d_xi phi_s, psi>

    Profile phi_s_prime;
};

ExpansionContext make_expansion_context(const ModelSpec& model,
                                        const std::vector<CovarianceKernel>& kernels,
                                        const WavePair& wave_det, int k_max = 150,
                                        double dt_sg = 1e-3, double T_int = 0.0);
/// Context around the instantaneous stochastic wave (Phi_sigma, c_sigma).
ExpansionContext make_expansion_context(const ModelSpec& model,
                                        const std::vector<CovarianceKernel>& kernels,
                                        const WavePair& wave_det,
                                        const StochWaveResult& sw, int k_max = 150,
                                        double dt_sg = 1e-3, double T_int = 0.0);

/// S_sigma(0)[w] = g(phi_s) w - phi_s' <psi, g(phi_s) w>/<phi_s', psi>.
Profile S_sigma0(const ExpansionContext& ctx, const Profile& w);

/// One deterministic sweep over [0, T_int] evolving S(s) applied to every
/// noise mode, accumulating the orbital-drift integrals and norm predictions.
struct SweepResult {
    double c_od = 0.0;              // = c^od_{sigma;2}
    double tail_bound = 0.0;        // truncation estimate for c_od
    double integrand_final = 0.0;   // |integrand| at T_int
    Profile v_od_rhs;               // projected integrand integral (pre-inversion)
    std::vector<double> times;      // record mesh
    std::vector<double> v1_norm2;   // predicted E||V1(t)||^2 on the mesh
    std::vector<Profile> ev2;       // E[V^(2)(t)] on the mesh
};
SweepResult run_expansion_sweep(const ExpansionContext& ctx,
                                const std::vector<double>& record_times,
                                int n_threads = 0);

/// c^od_{0;2} via the truncated basis integral.
double expected_gamma2_rate(const ExpansionContext& ctx, int n_threads = 0);

/// V^od_{0;2} = -L_tw^{-1} (projected integrand), via the bordered solve.
Profile orbital_drift_shape(const ExpansionContext& ctx, int n_threads = 0);

/// int_0^t sum_k lambda_k ||S(s) I_k||^2 ds on the record mesh.
std::vector<double> predicted_V1_norm(const ExpansionContext& ctx,
                                      const std::vector<double>& record_times,
                                      int n_threads = 0);

/// Semi-implicit steppers for the first and second order fluctuation pairs;
/// share one noise stream with any co-evolved nonlinear path.
class OrderStepper {
  public:
    OrderStepper(const ExpansionContext& ctx, double dt);

    /// dV1 = L_tw V1 dt + S_sigma(0) dW;  dGamma1 = -<psi, g dW>/A
    void step_first(Profile& V1, double& Gamma1, const Profile& dW) const;
    /// dV2 = [L_tw V2 + R2[V1,V1]] dt + S1(V1) dW;
    /// dGamma2 = a2[V1,V1] dt + b1(V1)[dW]   (V1 at the step start)
    void step_second(const Profile& V1, Profile& V2, double& Gamma2,
                     const Profile& dW) const;
    /// martingale part of V2 only: dM = L_tw M dt + S1(V1) dW
    void step_martingale(const Profile& V1, Profile& M, const Profile& dW) const;

    Profile R2_vv(const Profile& V) const;
    Profile S1_v(const Profile& V, const Profile& w) const;
    double a2_vv(const Profile& V) const;
    double b1_v(const Profile& V, const Profile& w) const;
    Profile S0_w(const Profile& w) const { return S_sigma0(*ctx_, w); }
    double dt() const { return dt_; }

  private:
    const ExpansionContext* ctx_;
    double dt_;
    BandLU lu_;  // I - dt L_tw
    mutable std::vector<double> buf_;
};

struct ExpansionPath {
    std::vector<double> times;
    std::vector<double> gamma1, gamma2;
    std::vector<double> v1_norm2, v2_norm2;
    std::vector<double> v1_psi_ip, v2_psi_ip;  // orthogonality diagnostics
    std::vector<Profile> v1_snaps, v2_snaps;   // at record times (optional)
};

/// Evolves (V1, Gamma1) on one noise stream; record_every in steps.
ExpansionPath evolve_first_order(const ExpansionContext& ctx, NoiseSampler& noise,
                                 double T, double dt, int record_every = 1,
                                 bool keep_snapshots = false);

/// Evolves (V1, V2, Gamma1, Gamma2) on one noise stream.
ExpansionPath evolve_second_order(const ExpansionContext& ctx, NoiseSampler& noise,
                                  double T, double dt, int record_every = 1,
                                  bool keep_snapshots = false);

struct Gamma3Result {
    double c_cub = 0.0;        // Monte-Carlo estimate of c^od_cub(sigma)
    double std_error = 0.0;
    double rate_over_sigma3 = 0.0;
    int realizations = 0;
    bool low_sample_warning = false;
};

/// c^od_cub(sigma) = (2/T) int_{T/2}^T t^{-1} E[Gamma_apx - c_sigma t
/// - sigma Gamma1 - sigma^2 Gamma2] dt over an ensemble of expansion paths.
Gamma3Result gamma3_rate(const ExpansionContext& ctx, double sigma, int realizations,
                         double T, double dt, uint64_t seed, int n_threads = 0);

}  // namespace stochwave
