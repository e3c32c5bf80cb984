#include "stochwave/fft.hpp"

#include <fftw3.h>

#include <mutex>

namespace stochwave {

namespace {
std::mutex& plan_mutex() {
    static std::mutex m;
    return m;
}
}  // namespace

struct Fft::Impl {
    fftw_plan r2c = nullptr;
    fftw_plan c2r = nullptr;
    fftw_plan fwd = nullptr;
    fftw_plan bwd = nullptr;
    double* real_buf = nullptr;
    fftw_complex* cplx_buf = nullptr;
    fftw_complex* cplx_in = nullptr;
    fftw_complex* cplx_out = nullptr;
};

Fft::Fft(int n) : impl_(new Impl), n_(n) {
    std::lock_guard<std::mutex> lock(plan_mutex());
    impl_->real_buf = fftw_alloc_real(n);
    impl_->cplx_buf = fftw_alloc_complex(n / 2 + 1);
    impl_->cplx_in = fftw_alloc_complex(n);
    impl_->cplx_out = fftw_alloc_complex(n);
    impl_->r2c = fftw_plan_dft_r2c_1d(n, impl_->real_buf, impl_->cplx_buf, FFTW_ESTIMATE);
    impl_->c2r = fftw_plan_dft_c2r_1d(n, impl_->cplx_buf, impl_->real_buf, FFTW_ESTIMATE);
    impl_->fwd = fftw_plan_dft_1d(n, impl_->cplx_in, impl_->cplx_out, FFTW_FORWARD, FFTW_ESTIMATE);
    impl_->bwd = fftw_plan_dft_1d(n, impl_->cplx_in, impl_->cplx_out, FFTW_BACKWARD, FFTW_ESTIMATE);
}

Fft::~Fft() {
    std::lock_guard<std::mutex> lock(plan_mutex());
    fftw_destroy_plan(impl_->r2c);
    fftw_destroy_plan(impl_->c2r);
    fftw_destroy_plan(impl_->fwd);
    fftw_destroy_plan(impl_->bwd);
    fftw_free(impl_->real_buf);
    fftw_free(impl_->cplx_buf);
    fftw_free(impl_->cplx_in);
    fftw_free(impl_->cplx_out);
}

void Fft::forward(const double* in, std::complex<double>* out) {
    for (int i = 0; i < n_; ++i) impl_->real_buf[i] = in[i];
    fftw_execute(impl_->r2c);
    const int ns = spectrum_size();
    for (int k = 0; k < ns; ++k)
        out[k] = {impl_->cplx_buf[k][0], impl_->cplx_buf[k][1]};
}

void Fft::inverse(const std::complex<double>* in, double* out) {
    const int ns = spectrum_size();
    for (int k = 0; k < ns; ++k) {
        impl_->cplx_buf[k][0] = in[k].real();
        impl_->cplx_buf[k][1] = in[k].imag();
    }
    fftw_execute(impl_->c2r);
    const double inv = 1.0 / static_cast<double>(n_);
    for (int i = 0; i < n_; ++i) out[i] = impl_->real_buf[i] * inv;
}

void Fft::forward_c(const std::complex<double>* in, std::complex<double>* out) {
    for (int i = 0; i < n_; ++i) {
        impl_->cplx_in[i][0] = in[i].real();
        impl_->cplx_in[i][1] = in[i].imag();
    }
    fftw_execute(impl_->fwd);
    for (int i = 0; i < n_; ++i) out[i] = {impl_->cplx_out[i][0], impl_->cplx_out[i][1]};
}

void Fft::inverse_c(const std::complex<double>* in, std::complex<double>* out) {
    for (int i = 0; i < n_; ++i) {
        impl_->cplx_in[i][0] = in[i].real();
        impl_->cplx_in[i][1] = in[i].imag();
    }
    fftw_execute(impl_->bwd);
    const double inv = 1.0 / static_cast<double>(n_);
    for (int i = 0; i < n_; ++i)
        out[i] = {impl_->cplx_out[i][0] * inv, impl_->cplx_out[i][1] * inv};
}

}  // namespace stochwave
