#pragma once

#include <functional>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include "stochwave/grid.hpp"
#include "stochwave/kernel.hpp"

namespace stochwave {

/// Vectorized nonlinearities of a reaction-diffusion system with diagonal
/// noise coefficient (n == m). g is stored as its diagonal.
struct ModelFunctions {
    virtual ~ModelFunctions() = default;
    virtual void f(const Profile& U, Profile& out) const = 0;
    /// out[(a*n+b)*N + i] = d f_a / d u_b at x_i
    virtual void df(const Profile& U, std::vector<double>& out) const = 0;
    virtual void d2f_vv(const Profile& U, const Profile& V, Profile& out) const = 0;
    virtual void g(const Profile& U, Profile& out) const = 0;
    virtual void dg_v(const Profile& U, const Profile& V, Profile& out) const = 0;
    /// Ito-Stratonovich correction before the mu factor:
    /// component a = (1/2) q_a(0) * (d g_aa / d u_a) * g_aa.
    virtual void h_corr(const Profile& U, const std::vector<double>& q0,
                        Profile& out) const = 0;
    /// Directional derivative of h_corr in V.
    virtual void dh_corr_v(const Profile& U, const Profile& V,
                           const std::vector<double>& q0, Profile& out) const = 0;
    virtual void phi_ref(double x, double* out_n) const = 0;
    virtual void phi_ref_xx(double x, double* out_n) const = 0;
};

/// The reaction-diffusion SPDE dU = [rho Uxx + f(U) + sigma^2 mu h(U)]dt
/// + sigma g(U) dW, with mu = 0 (Ito) or 1 (Stratonovich).
struct ModelSpec {
    std::string name;
    int n = 1, m = 1;
    std::vector<double> rho;
    double mu = 0.0;
    std::vector<double> u_minus, u_plus;
    std::shared_ptr<const ModelFunctions> fn;
    std::map<std::string, double> params;

    Profile phi_ref_profile(const GridPtr& grid) const;
    Profile phi_ref_profile_xx(const GridPtr& grid) const;
};

ModelSpec nagumo_model(double a, double rho, double mu);
ModelSpec fhn_model(double a, double varrho, double eps, double gamma, double mu);

/// sigma^2 h(U) drift: mu * correction. Rejects non-diagonal coupling by
/// construction (the engine carries diagonal g only).
Profile ito_stratonovich_correction(const ModelSpec& model,
                                    const std::vector<double>& q0,
                                    const Profile& U);

struct HypothesisReport {
    double heq_residual = 0.0;   // |f| + |g| + |h| at both equilibria
    double df_fd_error = 0.0;    // relative, central differences
    double d2f_fd_error = 0.0;
    double qhat_min = 0.0;       // most negative pre-clamp entry is rejected earlier
    bool ok = false;
    std::string message;
};

/// Testable (Hq)/(HEq) and derivative-consistency checks; run before any
/// pipeline stage.
HypothesisReport check_hypotheses(const ModelSpec& model,
                                  const std::vector<CovarianceKernel>& kernels,
                                  const GridPtr& grid, uint64_t seed = 1234);

}  // namespace stochwave
