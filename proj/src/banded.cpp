#include "stochwave/banded.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace stochwave {

void BandMatrix::multiply(const double* x, double* y) const {
    for (int i = 0; i < n; ++i) {
        int j0 = std::max(0, i - kl);
        int j1 = std::min(n - 1, i + ku + kl);
        double s = 0.0;
        const double* r = row(i);
        for (int j = j0; j <= j1; ++j) s += r[j - i + kl] * x[j];
        y[i] = s;
    }
}

BandLU::BandLU(BandMatrix m) : m_(std::move(m)), piv_(m_.n) {
    const int n = m_.n, kl = m_.kl, ku = m_.ku;
    min_pivot_ = std::numeric_limits<double>::max();
    for (int j = 0; j < n; ++j) {
        // pivot search in column j among rows j..j+kl
        int p = j;
        double best = std::abs(m_.get(j, j));
        for (int i = j + 1; i <= std::min(n - 1, j + kl); ++i) {
            double v = std::abs(m_.get(i, j));
            if (v > best) {
                best = v;
                p = i;
            }
        }
        piv_[j] = p;
        if (best == 0.0) throw SingularMatrix("BandLU: zero pivot");
        min_pivot_ = std::min(min_pivot_, best);
        if (p != j) {
            // swap rows j and p over columns j .. j+ku+kl
            for (int col = j; col <= std::min(n - 1, j + ku + kl); ++col) {
                double a = m_.get(j, col), b = m_.get(p, col);
                m_.at(j, col) = b;
                m_.at(p, col) = a;
            }
        }
        const double pivot = m_.at(j, j);
        for (int i = j + 1; i <= std::min(n - 1, j + kl); ++i) {
            double mult = m_.get(i, j) / pivot;
            m_.at(i, j) = mult;  // store multiplier
            if (mult != 0.0) {
                for (int col = j + 1; col <= std::min(n - 1, j + ku + kl); ++col)
                    m_.at(i, col) -= mult * m_.get(j, col);
            }
        }
    }
}

void BandLU::solve(double* x) const {
    const int n = m_.n, kl = m_.kl, ku = m_.ku;
    for (int j = 0; j < n; ++j) {
        if (piv_[j] != j) std::swap(x[j], x[piv_[j]]);
        const double xj = x[j];
        if (xj != 0.0)
            for (int i = j + 1; i <= std::min(n - 1, j + kl); ++i)
                x[i] -= m_.at(i, j) * xj;
    }
    for (int i = n - 1; i >= 0; --i) {
        double s = x[i];
        for (int j = i + 1; j <= std::min(n - 1, i + ku + kl); ++j)
            s -= m_.at(i, j) * x[j];
        x[i] = s / m_.at(i, i);
    }
}

void BandLU::solve(const double* b, double* x) const {
    if (x != b) std::copy(b, b + m_.n, x);
    solve(x);
}

BorderedSolver::BorderedSolver(BandMatrix A, std::vector<double> p, std::vector<double> q)
    : A0_(A), lu_(std::move(A)), p_(std::move(p)), q_(std::move(q)) {
    z_.resize(p_.size());
    lu_.solve(p_.data(), z_.data());
    qz_ = 0.0;
    for (size_t i = 0; i < q_.size(); ++i) qz_ += q_[i] * z_[i];
    if (!std::isfinite(qz_) || qz_ == 0.0)
        throw SingularMatrix("BorderedSolver: bordered system singular");
}

BorderedSolver::Result BorderedSolver::solve(const std::vector<double>& b, double beta) const {
    const int n = A0_.n;
    std::vector<double> u(n), y(n), r(n), Au(n);
    lu_.solve(b.data(), y.data());
    double qy = 0.0;
    for (int i = 0; i < n; ++i) qy += q_[i] * y[i];
    double s = (qy - beta) / qz_;
    for (int i = 0; i < n; ++i) u[i] = y[i] - s * z_[i];

    // block elimination amplifies roundoff along the near-kernel of A;
    // two refinement passes on the full bordered residual restore it
    for (int pass = 0; pass < 2; ++pass) {
        A0_.multiply(u.data(), Au.data());
        double rbeta = beta;
        for (int i = 0; i < n; ++i) {
            r[i] = b[i] - Au[i] - s * p_[i];
            rbeta -= q_[i] * u[i];
        }
        lu_.solve(r.data(), y.data());
        double qdy = 0.0;
        for (int i = 0; i < n; ++i) qdy += q_[i] * y[i];
        double ds = (qdy - rbeta) / qz_;
        for (int i = 0; i < n; ++i) u[i] += y[i] - ds * z_[i];
        s += ds;
    }
    return {std::move(u), s};
}

}  // namespace stochwave
