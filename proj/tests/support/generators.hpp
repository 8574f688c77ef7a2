#pragma once

#include <cstdint>
#include <random>

#include "wdje/measures.hpp"

namespace wdje::testing {

/// Seeded source of random test inputs.
class Gen {
  public:
    explicit Gen(std::uint64_t seed) : rng_(seed) {}

    double uniform(double lo = 0.0, double hi = 1.0) { return std::uniform_real_distribution<double>(lo, hi)(rng_); }
    double normal() { return std::normal_distribution<double>(0.0, 1.0)(rng_); }
    int integer(int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng_); }
    bool coin(double p = 0.5) { return uniform() < p; }

    Matrix matrix(Eigen::Index rows, Eigen::Index cols, double scale = 1.0) {
        Matrix m(rows, cols);
        for (Eigen::Index i = 0; i < rows; ++i) {
            for (Eigen::Index j = 0; j < cols; ++j) m(i, j) = scale * normal();
        }
        return m;
    }

    /// Positive weights, or with `zeros` some exact zeros (never all).
    Vector weights(Eigen::Index n, bool zeros = false) {
        Vector w(n);
        for (Eigen::Index i = 0; i < n; ++i) w(i) = zeros && coin(0.25) ? 0.0 : uniform(0.05, 1.0);
        if (w.sum() == 0.0) w(0) = 1.0;
        return w;
    }

    DiscreteMeasure measure(Eigen::Index n, Eigen::Index dim, bool zero_weights = false, double scale = 1.0) {
        return empirical_measure(matrix(n, dim, scale), weights(n, zero_weights));
    }

    /// Random orthogonal matrix from the QR factor of a Gaussian matrix.
    Matrix orthogonal(Eigen::Index n) {
        Eigen::HouseholderQR<Matrix> qr(matrix(n, n));
        return qr.householderQ() * Matrix::Identity(n, n);
    }

    std::mt19937_64& engine() { return rng_; }

  private:
    std::mt19937_64 rng_;
};

}  // namespace wdje::testing
