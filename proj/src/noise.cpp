#include "stochwave/noise.hpp"

#include <cmath>
#include <stdexcept>

namespace stochwave {

uint64_t derive_seed(uint64_t base, uint64_t index) {
    uint64_t z = base + 0x9e3779b97f4a7c15ULL * (index + 1);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

NoiseSampler::NoiseSampler(std::vector<CovarianceKernel> kernels, uint64_t seed)
    : kernels_(std::move(kernels)), seed_(seed), rng_(seed), gauss_(0.0, 1.0) {
    if (kernels_.empty()) throw std::invalid_argument("NoiseSampler: no kernels");
    grid_ = kernels_[0].grid;
    const int N = grid_->N;
    const int Mc = 2 * (N - 1);
    fft_ = std::make_unique<Fft>(Mc);
    zin_.resize(Mc);
    zout_.resize(Mc);

    for (auto& k : kernels_) {
        if (!(*k.grid == *grid_))
            throw std::invalid_argument("NoiseSampler: kernel grids differ");
        Component c;
        // circulant embedding of the Toeplitz first row q(j*dx), j=0..N-1
        std::vector<std::complex<double>> row(Mc), eig(Mc);
        for (int j = 0; j < N; ++j) row[j] = k.q_at(j * grid_->dx);
        for (int j = 1; j + 1 < N; ++j) row[Mc - j] = row[j];
        fft_->forward_c(row.data(), eig.data());
        double max_e = 0.0;
        for (auto& e : eig) max_e = std::max(max_e, std::abs(e.real()));
        c.sqrt_eig_over_m.resize(Mc);
        for (int j = 0; j < Mc; ++j) {
            double e = eig[j].real();
            if (e < 0.0) {
                if (e < -1e-12 * max_e)
                    throw NotPositiveSemidefinite(
                        "NoiseSampler: circulant embedding produced a negative "
                        "eigenvalue beyond tolerance");
                e = 0.0;
            }
            c.sqrt_eig_over_m[j] = std::sqrt(e / static_cast<double>(Mc));
        }
        c.spare.resize(N);
        comp_.push_back(std::move(c));
    }
}

void NoiseSampler::draw(Component& c, double* out) {
    const int N = grid_->N;
    if (c.has_spare) {
        for (int i = 0; i < N; ++i) out[i] = c.spare[i];
        c.has_spare = false;
        return;
    }
    const int Mc = 2 * (N - 1);
    for (int j = 0; j < Mc; ++j) {
        double g = gauss_(rng_);
        double h = gauss_(rng_);
        zin_[j] = {c.sqrt_eig_over_m[j] * g, c.sqrt_eig_over_m[j] * h};
    }
    fft_->forward_c(zin_.data(), zout_.data());
    for (int i = 0; i < N; ++i) {
        out[i] = zout_[i].real();
        c.spare[i] = zout_[i].imag();
    }
    c.has_spare = true;
}

Profile NoiseSampler::sample_increment(double dt) {
    if (!(dt > 0.0)) throw std::invalid_argument("sample_increment: dt must be positive");
    Profile w(grid_, m_components());
    const double s = std::sqrt(dt);
    for (int c = 0; c < m_components(); ++c) {
        draw(comp_[c], w.comp(c));
        double* v = w.comp(c);
        for (int i = 0; i < grid_->N; ++i) v[i] *= s;
    }
    return w;
}

}  // namespace stochwave
