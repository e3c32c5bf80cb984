#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "stochwave/banded.hpp"
#include "stochwave/grid.hpp"
#include "stochwave/model.hpp"

namespace stochwave {

struct NewtonDiverged : std::runtime_error {
    explicit NewtonDiverged(const std::string& m) : std::runtime_error(m) {}
};
struct DegenerateJacobian : std::runtime_error {
    explicit DegenerateJacobian(const std::string& m) : std::runtime_error(m) {}
};
struct NonSimpleKernel : std::runtime_error {
    explicit NonSimpleKernel(const std::string& m) : std::runtime_error(m) {}
};

/// Profile-speed pair with the normalized adjoint eigenfunction and spectral
/// metadata. phi_prime is the discrete translational mode D1 phi and
/// <phi_prime, psi> = 1 holds after normalization.
struct WavePair {
    Profile phi;
    double c = 0.0;
    Profile psi;
    Profile phi_prime;
    double beta = 0.0;        // measured spectral gap estimate (>= 0)
    double kappa_norm = 1.0;  // normalization constant applied to psi
    int order = 2;            // stencil order of the discretization it solves
};

/// Closed-form Nagumo front on the grid (profile and speed only; psi empty).
WavePair nagumo_explicit(const GridPtr& grid, double a, double rho);

/// Interior-point packing: Dirichlet boundary rows are excluded from all
/// linear systems (index = (i-1)*n + c for i = 1..N-2).
int interior_size(const Grid& g, int ncomp);
void pack_interior(const Profile& p, std::vector<double>& v);
void unpack_interior(const std::vector<double>& v, Profile& p);

/// rho d_xx + c d_x + Df(Phi) on interior points (adjoint: flips the
/// advection sign and transposes Df).
BandMatrix assemble_linearization(const ModelSpec& model, const Profile& phi,
                                  double c, bool adjoint, int order = 2);

struct Linearization {
    BandMatrix L;
    BandMatrix L_adjoint;
    GridPtr grid;
    int ncomp = 1;
};
Linearization build_linearization(const ModelSpec& model, const WavePair& wave);

/// Apply an interior-assembled banded operator to a full Profile.
Profile apply_operator(const BandMatrix& A, const Profile& p);

/// Newton on rho Phi'' + c Phi' + f(Phi) = 0 with the integral phase
/// condition <Phi - Phi_guess, Phi_guess'> = 0; unknowns (Phi, c).
struct BvpOptions {
    double tol = 1e-10;
    int max_iter = 50;
    int order = 2;  // 2 for the pipeline; 4 for high-accuracy reproduction
    bool verbose = false;
};
WavePair solve_wave_bvp(const ModelSpec& model, const WavePair& guess,
                        const BvpOptions& opt = {});

/// Deterministic FHN pulse: time-evolution warm start (orbital stability
/// does the work), then Newton polish.
WavePair solve_fhn_wave(const ModelSpec& model, const GridPtr& grid,
                        const BvpOptions& opt = {});

/// Adjoint eigenfunction at lambda = 0, normalized to <Phi', psi> = 1.
/// Scalar models can cross-check against kappa e^{c x / rho} Phi'.
Profile adjoint_eigenfunction(const ModelSpec& model, const WavePair& wave);
Profile adjoint_eigenfunction_closed_form(const ModelSpec& model, const WavePair& wave);

/// Completes a (phi, c) pair with psi, phi_prime and the normalization.
WavePair finalize_wave(const ModelSpec& model, Profile phi, double c, int order = 2);

/// P v = <psi, v> Phi'.
Profile spectral_projection(const WavePair& wave, const Profile& v);

/// Crank-Nicolson stepper for v_t = L_tw v (or the adjoint).
class SemigroupStepper {
  public:
    SemigroupStepper(const ModelSpec& model, const WavePair& wave, double dt,
                     bool adjoint = false);
    void step(Profile& v) const;
    void step(std::vector<double>& interior) const;  // packed form
    double dt() const { return dt_; }

  private:
    BandLU lu_;       // I - dt/2 L
    BandMatrix rhs_;  // I + dt/2 L
    GridPtr grid_;
    int ncomp_;
    double dt_;
    mutable std::vector<double> buf_, buf2_;
};

/// S(t) v0 by Crank-Nicolson with step dt (exactly ceil(t/dt) steps of
/// t/steps each; t = 0 returns v0).
Profile semigroup_apply(const ModelSpec& model, const WavePair& wave,
                        const Profile& v0, double t, double dt);

/// Bordered Fredholm solve: L u + s Phi' = rhs with <psi, u> = 0.
class WaveOperator {
  public:
    WaveOperator(const ModelSpec& model, const WavePair& wave);
    /// returns (u, s)
    std::pair<Profile, double> solve_bordered(const Profile& rhs) const;
    const BandMatrix& L() const { return lin_.L; }
    const BandMatrix& L_adjoint() const { return lin_.L_adjoint; }
    const WavePair& wave() const { return *wave_; }

  private:
    const WavePair* wave_;
    Linearization lin_;
    std::unique_ptr<BorderedSolver> solver_;
    GridPtr grid_;
    int ncomp_;
};

struct SpectralReport {
    double lambda0 = 0.0;      // eigenvalue nearest zero (translational)
    double beta = 0.0;         // gap: -max Re(lambda) over the rest
    double decay_ratio = 0.0;  // sup over samples of ||S(5)(I-P)v||/||(I-P)v||
};

/// Dense eigensolve on a reduced grid plus semigroup decay sampling.
SpectralReport spectral_report(const ModelSpec& model, const WavePair& wave,
                               int reduced_N = 801, double t_decay = 5.0,
                               int n_samples = 32, uint64_t seed = 99);

/// Cubic resampling of a profile onto another grid (constant extension).
Profile resample(const Profile& p, const GridPtr& target);

/// Max-norm of rho phi'' + c phi' + f(phi) over interior points.
double wave_residual_inf(const ModelSpec& model, const Profile& phi, double c);

/// Interior values of rho phi'' + c phi' + f(phi); the profile continues as
/// the analytic reference beyond the domain (ghost continuation).
void eval_wave_ode(const ModelSpec& model, const Profile& phi, double c, int order,
                   std::vector<double>& F);
/// Order-consistent derivatives at all N points, reference-extended.
Profile wave_derivative(const ModelSpec& model, const Profile& phi, int order);
Profile wave_second_derivative(const ModelSpec& model, const Profile& phi, int order);

}  // namespace stochwave
