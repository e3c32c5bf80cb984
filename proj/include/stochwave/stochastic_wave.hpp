#pragma once

#include "stochwave/kernel.hpp"
#include "stochwave/model.hpp"
#include "stochwave/wave.hpp"

namespace stochwave {

struct PhasePairingDegenerate : std::runtime_error {
    explicit PhasePairingDegenerate(const std::string& m) : std::runtime_error(m) {}
};
struct SneOutOfRange : std::runtime_error {
    explicit SneOutOfRange(const std::string& m) : std::runtime_error(m) {}
};

/// Instantaneous stochastic wave (Phi_sigma, c_sigma) with its sigma^2
/// expansion data. wave.psi stays the deterministic adjoint eigenfunction.
struct StochWaveResult {
    double sigma = 0.0;
    WavePair wave;
    Profile phi_02;
    double c_02 = 0.0;
    bool converged = false;
    double residual_norm = 0.0;
    double sigma_reached = 0.0;  // partial progress on continuation failure
};

/// g(Phi) Q g^T(Phi) psi evaluated componentwise with the per-component
/// kernels (diagonal noise coefficient).
Profile g_q_gt_psi(const ModelSpec& model, const std::vector<CovarianceKernel>& kernels,
                   const Profile& phi, const Profile& psi);

/// The second-order drift block F_{0;2}(Phi): (1/2) <gQg^T psi, psi>/<Phi',psi>^2 Phi''
/// - (gQg^T psi)'/<Phi',psi> + mu h(Phi), built with the deterministic psi_tw.
Profile F_02(const ModelSpec& model, const std::vector<CovarianceKernel>& kernels,
             const WavePair& wave_det, const Profile& phi);

/// Full residual F_sigma(Phi, c) = F_0(Phi, c) + sigma^2 F_{0;2}(Phi) as a
/// profile (boundary rows zero).
Profile F_sigma(const ModelSpec& model, const std::vector<CovarianceKernel>& kernels,
                const WavePair& wave_det, const Profile& phi, double c, double sigma);

/// Analytic directional derivative DF_sigma(Phi,c)[dphi, dc]; dphi is
/// X-valued (zero boundary).
Profile F_sigma_directional(const ModelSpec& model,
                            const std::vector<CovarianceKernel>& kernels,
                            const WavePair& wave_det, const Profile& phi, double c,
                            double sigma, const Profile& dphi, double dc);

struct StochWaveOptions {
    double tol = 1e-10;
    int max_iter = 50;
    double sigma_step = 0.1;  // continuation step when direct Newton fails
};

StochWaveResult solve_instantaneous_wave(const ModelSpec& model,
                                         const std::vector<CovarianceKernel>& kernels,
                                         const WavePair& wave_det, double sigma,
                                         const StochWaveOptions& opt = {});

struct SecondOrderExpansion {
    double c_02 = 0.0;
    Profile phi_02;
    double bordered_multiplier = 0.0;  // ~0 by Fredholm compatibility
};

/// c_{0;2} = -<F_{0;2}(Phi_0,c_0), psi_tw> and Phi_{0;2} from the bordered solve.
SecondOrderExpansion expand_second_order(const ModelSpec& model,
                                         const std::vector<CovarianceKernel>& kernels,
                                         const WavePair& wave_det);

struct SneWave {
    Profile phi;
    double c = 0.0;
    double a_eff = 0.0;
};

/// Small-noise-expansion comparison wave (Stratonovich scaling), rho = 1.
SneWave sne_wave(const GridPtr& grid, double a, double sigma, double q0);

}  // namespace stochwave
