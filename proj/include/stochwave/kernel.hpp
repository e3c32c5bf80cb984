#pragma once

#include <complex>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "stochwave/fft.hpp"
#include "stochwave/grid.hpp"

namespace stochwave {

enum class KernelKind { gaussian, exponential, tent, tabulated };

struct NotPositiveSemidefinite : std::runtime_error {
    explicit NotPositiveSemidefinite(const std::string& m) : std::runtime_error(m) {}
};

/// Translation-invariant covariance kernel q together with its Fourier data
/// on the 2L-periodized grid.
///
/// q_hat is continuum-normalized: bin j approximates the transform
/// qhat(k) = int q(x) exp(-i k x) dx at k_j = pi*j/L, so qhat(0) = int q.
/// Circular convolution by q has e_{k,c}, e_{k,s} as exact eigenfunctions
/// with eigenvalue q_hat[k].
struct CovarianceKernel {
    KernelKind kind = KernelKind::gaussian;
    double param = 1.0;  // zeta (gaussian), decay (exponential), width (tent)
    GridPtr grid;
    std::vector<double> q_row;   // periodized kernel at lags j*dx, j=0..M-1
    std::vector<double> q_hat;   // M real bins, clamped nonnegative
    double q0 = 0.0;             // q(0), unperiodized
    std::vector<double> table_lag, table_val;  // tabulated kind only

    int m_unique() const { return grid->n_unique(); }
    /// Raw (unperiodized) kernel value at a lag distance.
    double q_at(double lag) const;
};

CovarianceKernel make_gaussian_kernel(GridPtr grid, double zeta);
CovarianceKernel make_exponential_kernel(GridPtr grid, double decay);
CovarianceKernel make_tent_kernel(GridPtr grid, double width);
CovarianceKernel make_tabulated_kernel(GridPtr grid, std::vector<double> lags,
                                       std::vector<double> values);
/// Two-column text: lag value per line; '#' comments allowed.
CovarianceKernel load_tabulated_kernel(GridPtr grid, const std::string& path);

/// The Fourier data of q (already computed at construction); exposed for
/// diagnostics and for reading eigenvalues off q_hat.
const std::vector<double>& kernel_fourier(const CovarianceKernel& k);

/// Lag-space square-root kernel p with p*p = q on the grid (inverse DFT of
/// sqrt(q_hat)).
std::vector<double> sqrt_kernel(const CovarianceKernel& k);

/// Circular convolution q*v on the 2L-periodic grid, componentwise with the
/// same kernel for every component of v.
Profile convolve_q(const CovarianceKernel& k, const Profile& v);
/// Single-component raw-array version (dst may alias src).
void convolve_q(const CovarianceKernel& k, const double* src, double* dst);

/// Reusable convolution workspace (owns the FFT plan and buffers); one per
/// thread in hot loops. apply() reads N grid values and writes N values with
/// the seam duplicated.
class QConvolver {
  public:
    explicit QConvolver(const CovarianceKernel& k);
    void apply(const double* src, double* dst);

  private:
    const CovarianceKernel* kernel_;
    std::unique_ptr<Fft> fft_;
    std::vector<std::complex<double>> spec_;
    std::vector<double> buf_;
    int N_;
};

/// Cosine/sine family on [-L, L]: index 0 is the constant mode 1/sqrt(2L),
/// then cos(pi k x/L)/sqrt(L), sin(pi k x/L)/sqrt(L) for k = 1..k_max.
struct BasisEigendata {
    std::vector<Profile> funcs;     // 2*k_max + 1 single-component profiles
    std::vector<double> lambdas;    // matching eigenvalues of Q
    std::vector<int> wavenumbers;   // k per entry
};

BasisEigendata basis_eigendata(GridPtr grid, const CovarianceKernel& kernel,
                               int k_max);

}  // namespace stochwave
