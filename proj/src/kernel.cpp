#include "stochwave/kernel.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <fstream>
#include <numbers>
#include <sstream>

#include "stochwave/fft.hpp"

namespace stochwave {

namespace {

double raw_value(KernelKind kind, double param, const std::vector<double>& tl,
                 const std::vector<double>& tv, double lag) {
    lag = std::abs(lag);
    switch (kind) {
        case KernelKind::gaussian: {
            const double z = param;
            return 0.5 / z * std::exp(-std::numbers::pi * lag * lag / (4.0 * z * z));
        }
        case KernelKind::exponential:
            return std::exp(-lag / param);
        case KernelKind::tent:
            return std::max(0.0, 1.0 - lag / param);
        case KernelKind::tabulated: {
            if (lag >= tl.back()) return 0.0;
            auto it = std::upper_bound(tl.begin(), tl.end(), lag);
            size_t j = static_cast<size_t>(it - tl.begin());
            if (j == 0) return tv.front();
            double t = (lag - tl[j - 1]) / (tl[j] - tl[j - 1]);
            return (1.0 - t) * tv[j - 1] + t * tv[j];
        }
    }
    return 0.0;
}

CovarianceKernel finish_kernel(CovarianceKernel k) {
    const Grid& g = *k.grid;
    const int M = k.m_unique();
    const double period = 2.0 * g.L;
    k.q0 = k.q_at(0.0);
    k.q_row.assign(M, 0.0);
    for (int j = 0; j < M; ++j) {
        double d = j * g.dx;
        for (int m = -2; m <= 2; ++m) k.q_row[j] += k.q_at(d + m * period);
    }
    // symmetrize exactly: q_per(d) = q_per(period - d)
    for (int j = 1; j < M - j; ++j) {
        double s = 0.5 * (k.q_row[j] + k.q_row[M - j]);
        k.q_row[j] = k.q_row[M - j] = s;
    }

    Fft fft(M);
    std::vector<std::complex<double>> spec(fft.spectrum_size());
    fft.forward(k.q_row.data(), spec.data());
    double max_abs = 0.0;
    for (auto& c : spec) max_abs = std::max(max_abs, std::abs(c));
    for (auto& c : spec) {
        if (std::abs(c.imag()) > 1e-10 * max_abs)
            throw std::runtime_error("kernel_fourier: imaginary residue too large");
    }
    k.q_hat.assign(M, 0.0);
    const double tol = 1e-12 * max_abs * g.dx;
    for (int j = 0; j < M; ++j) {
        int jj = (j <= M / 2) ? j : M - j;  // hermitian half-spectrum unfold
        double v = spec[jj].real() * g.dx;  // continuum normalization
        if (v < 0.0) {
            if (v < -tol)
                throw NotPositiveSemidefinite(
                    "kernel_fourier: q_hat has negative entries beyond tolerance");
            v = 0.0;
        }
        k.q_hat[j] = v;
    }
    return k;
}

}  // namespace

double CovarianceKernel::q_at(double lag) const {
    return raw_value(kind, param, table_lag, table_val, lag);
}

CovarianceKernel make_gaussian_kernel(GridPtr grid, double zeta) {
    if (zeta <= 0.0) throw std::invalid_argument("gaussian kernel: zeta must be positive");
    CovarianceKernel k;
    k.kind = KernelKind::gaussian;
    k.param = zeta;
    k.grid = std::move(grid);
    return finish_kernel(std::move(k));
}

CovarianceKernel make_exponential_kernel(GridPtr grid, double decay) {
    if (decay <= 0.0) throw std::invalid_argument("exponential kernel: decay must be positive");
    CovarianceKernel k;
    k.kind = KernelKind::exponential;
    k.param = decay;
    k.grid = std::move(grid);
    return finish_kernel(std::move(k));
}

CovarianceKernel make_tent_kernel(GridPtr grid, double width) {
    if (width <= 0.0) throw std::invalid_argument("tent kernel: width must be positive");
    CovarianceKernel k;
    k.kind = KernelKind::tent;
    k.param = width;
    k.grid = std::move(grid);
    return finish_kernel(std::move(k));
}

CovarianceKernel make_tabulated_kernel(GridPtr grid, std::vector<double> lags,
                                       std::vector<double> values) {
    if (lags.size() != values.size() || lags.size() < 2)
        throw std::invalid_argument("tabulated kernel: need matching lag/value columns");
    if (!std::is_sorted(lags.begin(), lags.end()))
        throw std::invalid_argument("tabulated kernel: lags must be increasing");
    CovarianceKernel k;
    k.kind = KernelKind::tabulated;
    k.grid = std::move(grid);
    k.table_lag = std::move(lags);
    k.table_val = std::move(values);
    return finish_kernel(std::move(k));
}

CovarianceKernel load_tabulated_kernel(GridPtr grid, const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("load_tabulated_kernel: cannot open " + path);
    std::vector<double> lags, vals;
    std::string line;
    while (std::getline(in, line)) {
        auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        std::istringstream ss(line);
        double l, v;
        if (ss >> l >> v) {
            lags.push_back(l);
            vals.push_back(v);
        }
    }
    return make_tabulated_kernel(std::move(grid), std::move(lags), std::move(vals));
}

const std::vector<double>& kernel_fourier(const CovarianceKernel& k) { return k.q_hat; }

std::vector<double> sqrt_kernel(const CovarianceKernel& k) {
    const int M = k.m_unique();
    Fft fft(M);
    std::vector<std::complex<double>> spec(fft.spectrum_size());
    for (int j = 0; j < fft.spectrum_size(); ++j)
        spec[j] = std::sqrt(k.q_hat[j]) / k.grid->dx;
    std::vector<double> p(M);
    fft.inverse(spec.data(), p.data());
    return p;
}

void convolve_q(const CovarianceKernel& k, const double* src, double* dst) {
    const int M = k.m_unique();
    Fft fft(M);
    std::vector<std::complex<double>> spec(fft.spectrum_size());
    fft.forward(src, spec.data());
    for (int j = 0; j < fft.spectrum_size(); ++j) spec[j] *= k.q_hat[j];
    fft.inverse(spec.data(), dst);
}

Profile convolve_q(const CovarianceKernel& k, const Profile& v) {
    if (!(*v.grid == *k.grid))
        throw std::invalid_argument("convolve_q: grid mismatch");
    const int M = k.m_unique();
    const int N = v.grid->N;
    Fft fft(M);
    std::vector<std::complex<double>> spec(fft.spectrum_size());
    std::vector<double> buf(M);
    Profile out(v.grid, v.n_components);
    for (int c = 0; c < v.n_components; ++c) {
        const double* s = v.comp(c);
        for (int j = 0; j < M; ++j) buf[j] = s[j];
        fft.forward(buf.data(), spec.data());
        for (int j = 0; j < fft.spectrum_size(); ++j) spec[j] *= k.q_hat[j];
        fft.inverse(spec.data(), buf.data());
        double* o = out.comp(c);
        for (int j = 0; j < M; ++j) o[j] = buf[j];
        o[N - 1] = o[0];  // seam duplicate
    }
    return out;
}

QConvolver::QConvolver(const CovarianceKernel& k)
    : kernel_(&k), fft_(std::make_unique<Fft>(k.m_unique())),
      spec_(fft_->spectrum_size()), buf_(k.m_unique()), N_(k.grid->N) {}

void QConvolver::apply(const double* src, double* dst) {
    const int M = N_ - 1;
    for (int j = 0; j < M; ++j) buf_[j] = src[j];
    fft_->forward(buf_.data(), spec_.data());
    for (int j = 0; j < fft_->spectrum_size(); ++j) spec_[j] *= kernel_->q_hat[j];
    fft_->inverse(spec_.data(), buf_.data());
    for (int j = 0; j < M; ++j) dst[j] = buf_[j];
    dst[N_ - 1] = dst[0];
}

BasisEigendata basis_eigendata(GridPtr grid, const CovarianceKernel& kernel, int k_max) {
    if (k_max < 1) throw std::invalid_argument("basis_eigendata: k_max must be >= 1");
    if (2 * k_max >= kernel.m_unique())
        throw std::invalid_argument("basis_eigendata: k_max beyond grid resolution");
    const Grid& g = *grid;
    const double L = g.L;
    BasisEigendata out;
    out.funcs.reserve(2 * k_max + 1);
    auto lambda_of = [&](int k) {
        if (kernel.kind == KernelKind::gaussian) {
            const double z = kernel.param;
            return std::exp(-std::numbers::pi * k * k * z * z / (L * L));
        }
        if (kernel.q_hat.empty())
            throw std::runtime_error("basis_eigendata: kernel has no Fourier data");
        return kernel.q_hat[k];
    };

    {
        Profile e0(grid, 1);
        const double a = 1.0 / std::sqrt(2.0 * L);
        for (int i = 0; i < g.N; ++i) e0.at(0, i) = a;
        out.funcs.push_back(std::move(e0));
        out.lambdas.push_back(lambda_of(0));
        out.wavenumbers.push_back(0);
    }
    const double invsqL = 1.0 / std::sqrt(L);
    for (int k = 1; k <= k_max; ++k) {
        Profile ec(grid, 1), es(grid, 1);
        for (int i = 0; i < g.N; ++i) {
            double th = std::numbers::pi * k * g.x(i) / L;
            ec.at(0, i) = std::cos(th) * invsqL;
            es.at(0, i) = std::sin(th) * invsqL;
        }
        double lam = lambda_of(k);
        out.funcs.push_back(std::move(ec));
        out.lambdas.push_back(lam);
        out.wavenumbers.push_back(k);
        out.funcs.push_back(std::move(es));
        out.lambdas.push_back(lam);
        out.wavenumbers.push_back(k);
    }
    return out;
}

}  // namespace stochwave
