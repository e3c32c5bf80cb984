#pragma once

#include <complex>
#include <memory>
#include <vector>

namespace stochwave {

/// Thin wrapper over FFTW double-precision transforms of one fixed length.
/// Each instance owns its buffers; create one per thread (plan creation is
/// serialized internally, execution is on private buffers).
class Fft {
  public:
    explicit Fft(int n);
    ~Fft();
    Fft(const Fft&) = delete;
    Fft& operator=(const Fft&) = delete;

    int size() const { return n_; }

    /// out[k] = sum_j in[j] exp(-2*pi*i*j*k/n), k = 0..n/2 (r2c half-spectrum).
    void forward(const double* in, std::complex<double>* out);
    /// Inverse of forward, including the 1/n normalization.
    void inverse(const std::complex<double>* in, double* out);

    /// Full complex transforms (no normalization on forward; inverse has 1/n).
    void forward_c(const std::complex<double>* in, std::complex<double>* out);
    void inverse_c(const std::complex<double>* in, std::complex<double>* out);

    int spectrum_size() const { return n_ / 2 + 1; }

  private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
    int n_;
};

}  // namespace stochwave
