#pragma once

#include <optional>

#include "stochwave/noise.hpp"
#include "stochwave/stochastic_wave.hpp"
#include "stochwave/wave.hpp"

namespace stochwave {

/// Smooth nondecreasing guard: 1/4 for theta <= 1/4, identity for
/// theta >= 1/2, quintic smoothstep blend between.
double cutoff_low(double theta);
/// Smooth nonincreasing guard: 1 for theta <= k_up, 0 for theta >= k_up + 1.
double cutoff_high(double theta, double k_up);

enum class Frame { lab_U, wave_V };

struct SimConfig {
    double dt = 1e-2;
    double T = 200.0;
    Frame frame = Frame::wave_V;
    double sigma = 0.1;
    double k_up = 10.0;
    int record_every = 10;
    uint64_t seed = 1;
    bool keep_snapshots = false;
    std::optional<Profile> initial_V;  // U(0) = phi_s + initial_V; default 0
};

/// Bundle for one stochastic simulation: the instantaneous wave
/// (phi_s, c_s), the deterministic adjoint machinery, and the noise kernels.
struct SimSetup {
    ModelSpec model;
    std::vector<CovarianceKernel> kernels;
    WavePair wave_det;
    Profile phi_s;
    double c_s = 0.0;
    double sigma = 0.0;
};

SimSetup make_sim_setup(const ModelSpec& model,
                        const std::vector<CovarianceKernel>& kernels,
                        const WavePair& wave_det, double sigma);
SimSetup make_sim_setup(const ModelSpec& model,
                        const std::vector<CovarianceKernel>& kernels,
                        const WavePair& wave_det, const StochWaveResult& sw);

struct PhaseFunctionals {
    double a = 0.0;        // \bar a_sigma(U, Gamma)
    double b_hs_sq = 0.0;  // ||\bar b||_HS^2
    double chi_l = 1.0, chi_h = 1.0;
};

/// Evaluates the cutoff-guarded phase functionals and the Ito-corrected
/// generator terms around a given frame shift.
class PhaseMachine {
  public:
    PhaseMachine(const SimSetup& setup, double k_up);

    /// Functionals at lab state U with frame shift Gamma (Gamma = 0 for the
    /// wave frame with U = phi_s + V).
    PhaseFunctionals functionals(const Profile& U, double Gamma);
    /// b applied to an increment: -chi_h^2 chi_l <g(U) w, T_Gamma psi>.
    double b_apply(const Profile& U, double Gamma, const Profile& w);
    /// Full generator K_sigma(U, Gamma, c) (boundary rows zero); also
    /// exposes the pieces used by the wave-frame stepper.
    struct Generator {
        Profile K;          // c U' + rho U'' + f + s^2 mu h + s^2 K_B + s^2 K_C'
        Profile U_prime;
        PhaseFunctionals fn;
    };
    Generator generator(const Profile& U, double Gamma, double c);

    const SimSetup& setup() const { return *setup_; }
    double k_up() const { return k_up_; }

  private:
    Profile shifted_psi(double Gamma);
    const SimSetup* setup_;
    double k_up_;
    std::vector<QConvolver> conv_;
    Profile psi_cache_;
    double psi_cache_gamma_ = 0.0;
    bool psi_cache_valid_ = false;
};

struct StepInfo {
    double a = 0.0;
    double b_dW = 0.0;
    double b_hs_sq = 0.0;
    bool tracked = true;
};

/// Semi-implicit wave-frame stepper for dV = R_sigma(V) dt + sigma S_sigma(V) dW
/// with the quasilinear Ito diffusion frozen at the step start.
class WaveFrameEngine {
  public:
    WaveFrameEngine(const SimSetup& setup, double dt, double k_up);
    StepInfo step(Profile& V, double& Gamma, const Profile& dW);
    double dt() const { return dt_; }

  private:
    const SimSetup* setup_;
    PhaseMachine machine_;
    double dt_;
    BandMatrix L_tw_;  // deterministic linearization (order 2)
    mutable std::vector<double> xv_;
    Profile ref_;
};

/// Semi-implicit lab-frame stepper: implicit diffusion on X = U - Phi_ref,
/// explicit reaction (trapezoid predictor-corrector) and noise, coupled
/// phase SODE.
class LabFrameEngine {
  public:
    LabFrameEngine(const SimSetup& setup, double dt, double k_up);
    StepInfo step(Profile& U, double& Gamma, const Profile& dW);
    double dt() const { return dt_; }

  private:
    const SimSetup* setup_;
    PhaseMachine machine_;
    double dt_;
    BandLU lu_;  // I - dt/2 rho D2 (Dirichlet on X)
    BandMatrix rhs_op_;
    Profile ref_, ref_xx_;
    mutable std::vector<double> xv_, yv_;
};

struct SimPath {
    std::vector<double> times;
    std::vector<double> gamma;
    std::vector<double> v_l2sq;
    std::vector<double> a_hist;
    std::vector<double> b_hs_sq_hist;
    std::vector<Profile> snapshots;  // U (lab) or V (wave) at record times
    std::optional<double> tracking_failed_at;
    std::optional<double> blow_up_at;
};

struct BlowUp : std::runtime_error {
    explicit BlowUp(const std::string& m) : std::runtime_error(m) {}
};

/// Runs one realization from U(0) = phi_s (V(0) = 0), Gamma(0) = 0.
SimPath run_simulation(const SimSetup& setup, const SimConfig& cfg);

/// V(t) = U(. + Gamma, t) - phi_s = shift(U, -Gamma) - phi_s.
Profile reconstruct_V_from_lab(const Profile& U, double Gamma, const Profile& phi_s);

}  // namespace stochwave
