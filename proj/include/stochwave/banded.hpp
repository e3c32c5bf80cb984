#pragma once

#include <stdexcept>
#include <vector>

namespace stochwave {

/// Banded matrix with kl sub- and ku superdiagonals, row-oriented storage
/// widened by kl extra superdiagonals for LU fill-in.
struct BandMatrix {
    int n = 0, kl = 0, ku = 0;

    BandMatrix() = default;
    BandMatrix(int n_, int kl_, int ku_)
        : n(n_), kl(kl_), ku(ku_), w_(kl_ + ku_ + kl_ + 1),
          a_(static_cast<size_t>(n_) * w_, 0.0) {}

    int width() const { return w_; }
    bool in_band(int i, int j) const {
        int d = j - i;
        return d >= -kl && d <= ku + kl;
    }
    double& at(int i, int j) { return a_[static_cast<size_t>(i) * w_ + (j - i + kl)]; }
    double at(int i, int j) const {
        return a_[static_cast<size_t>(i) * w_ + (j - i + kl)];
    }
    double get(int i, int j) const { return in_band(i, j) ? at(i, j) : 0.0; }

    /// y = A x
    void multiply(const double* x, double* y) const;

    double* row(int i) { return a_.data() + static_cast<size_t>(i) * w_; }
    const double* row(int i) const { return a_.data() + static_cast<size_t>(i) * w_; }

  private:
    int w_ = 0;
    std::vector<double> a_;
};

struct SingularMatrix : std::runtime_error {
    explicit SingularMatrix(const std::string& m) : std::runtime_error(m) {}
};

/// In-place banded LU with partial pivoting (row swaps limited to the kl
/// rows below the diagonal; fill-in stays within the widened band).
class BandLU {
  public:
    BandLU() = default;
    explicit BandLU(BandMatrix m);  // factors a copy

    void solve(double* x) const;                // in place
    void solve(const double* b, double* x) const;
    int size() const { return m_.n; }
    double min_pivot() const { return min_pivot_; }

  private:
    BandMatrix m_;
    std::vector<int> piv_;
    double min_pivot_ = 0.0;
};

/// Bordered system  [A  p; q^T 0] [u; s] = [b; beta]  solved by block
/// elimination on the banded LU of A with iterative refinement. A may be
/// nearly singular (Fredholm bordered solves); the border must make the
/// full system well conditioned.
class BorderedSolver {
  public:
    BorderedSolver(BandMatrix A, std::vector<double> p, std::vector<double> q);

    struct Result {
        std::vector<double> u;
        double s;
    };
    Result solve(const std::vector<double>& b, double beta) const;

  private:
    BandMatrix A0_;
    BandLU lu_;
    std::vector<double> p_, q_, z_;  // z = A^{-1} p
    double qz_ = 0.0;
};

}  // namespace stochwave
