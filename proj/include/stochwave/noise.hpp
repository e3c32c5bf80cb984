#pragma once

#include <cstdint>
#include <random>
#include <vector>

#include "stochwave/fft.hpp"
#include "stochwave/kernel.hpp"

namespace stochwave {

/// splitmix64 seed derivation, used for per-realization streams.
uint64_t derive_seed(uint64_t base, uint64_t index);

/// Stepwise generator of spatially correlated, temporally white Wiener
/// increments via circulant embedding of the grid Toeplitz covariance.
/// Single-owner mutable state: one sampler per realization.
class NoiseSampler {
  public:
    NoiseSampler(std::vector<CovarianceKernel> kernels, uint64_t seed);

    /// One m-component spatial field with E[dW_c(x_i) dW_c(x_j)] =
    /// q_c(x_i - x_j) * dt, independent across calls and components.
    Profile sample_increment(double dt);

    int m_components() const { return static_cast<int>(comp_.size()); }
    const Grid& grid() const { return *grid_; }
    uint64_t seed() const { return seed_; }

  private:
    struct Component {
        std::vector<double> sqrt_eig_over_m;  // sqrt(eig/M), length M_c
        std::vector<double> spare;
        bool has_spare = false;
    };
    void draw(Component& c, double* out);

    GridPtr grid_;
    std::vector<CovarianceKernel> kernels_;
    std::vector<Component> comp_;
    uint64_t seed_;
    std::mt19937_64 rng_;
    std::normal_distribution<double> gauss_;
    std::unique_ptr<Fft> fft_;  // length 2(N-1)
    std::vector<std::complex<double>> zin_, zout_;
};

}  // namespace stochwave
