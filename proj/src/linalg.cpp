#include "mfptrl/linalg.hpp"

#include "mfptrl/errors.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace mfptrl {

DenseLu::DenseLu(DenseMatrix a) : lu_(std::move(a)), perm_(lu_.rows()) {
    if (lu_.rows() != lu_.cols()) throw ShapeMismatch("LU requires a square matrix");
    const std::size_t n = lu_.rows();
    std::iota(perm_.begin(), perm_.end(), std::size_t{0});

    for (std::size_t k = 0; k < n; ++k) {
        std::size_t p = k;
        double best = std::abs(lu_(k, k));
        for (std::size_t i = k + 1; i < n; ++i) {
            const double m = std::abs(lu_(i, k));
            if (m > best) {
                best = m;
                p = i;
            }
        }
        if (!(best >= kSingularPivot)) {
            singular_ = true;
            return;
        }
        if (p != k) {
            std::swap_ranges(lu_.row(k).begin(), lu_.row(k).end(), lu_.row(p).begin());
            std::swap(perm_[k], perm_[p]);
        }
        const double pivot = lu_(k, k);
        auto pivot_row = lu_.row(k);
        for (std::size_t i = k + 1; i < n; ++i) {
            auto r = lu_.row(i);
            if (r[k] == 0.0) continue;
            const double m = r[k] / pivot;
            r[k] = m;
            for (std::size_t j = k + 1; j < n; ++j) r[j] -= m * pivot_row[j];
        }
    }
}

std::vector<double> DenseLu::solve(std::span<const double> b) const {
    const std::size_t n = lu_.rows();
    if (b.size() != n) throw LengthMismatch("right-hand side length does not match system");
    if (singular_) throw std::logic_error("solve() on a singular factorization");

    std::vector<double> x(n);
    for (std::size_t i = 0; i < n; ++i) x[i] = b[perm_[i]];
    for (std::size_t i = 0; i < n; ++i) {
        auto r = lu_.row(i);
        double s = x[i];
        for (std::size_t j = 0; j < i; ++j) s -= r[j] * x[j];
        x[i] = s;
    }
    for (std::size_t i = n; i-- > 0;) {
        auto r = lu_.row(i);
        double s = x[i];
        for (std::size_t j = i + 1; j < n; ++j) s -= r[j] * x[j];
        x[i] = s / r[i];
    }
    return x;
}

BandMatrix::BandMatrix(std::size_t n, std::size_t kl, std::size_t ku)
    : n_(n), kl_(kl), ku_(ku), width_(2 * kl + ku + 1), data_(n * width_, 0.0) {}

BandLu::BandLu(BandMatrix a) : lu_(std::move(a)), pivots_(lu_.size()) {
    const std::size_t n = lu_.size();
    const std::size_t kl = lu_.lower();
    const std::size_t reach = lu_.lower() + lu_.upper();

    for (std::size_t k = 0; k < n; ++k) {
        const std::size_t last_row = std::min(n - 1, k + kl);
        const std::size_t last_col = std::min(n - 1, k + reach);

        std::size_t p = k;
        double best = std::abs(lu_.at(k, k));
        for (std::size_t i = k + 1; i <= last_row; ++i) {
            const double m = std::abs(lu_.at(i, k));
            if (m > best) {
                best = m;
                p = i;
            }
        }
        pivots_[k] = p;
        if (!(best >= kSingularPivot)) {
            singular_ = true;
            return;
        }
        if (p != k)
            for (std::size_t j = k; j <= last_col; ++j) std::swap(lu_.at(k, j), lu_.at(p, j));

        const double pivot = lu_.at(k, k);
        for (std::size_t i = k + 1; i <= last_row; ++i) {
            double& lik = lu_.at(i, k);
            if (lik == 0.0) continue;
            const double m = lik / pivot;
            lik = m;
            for (std::size_t j = k + 1; j <= last_col; ++j) lu_.at(i, j) -= m * lu_.at(k, j);
        }
    }
}

std::vector<double> BandLu::solve(std::span<const double> b) const {
    const std::size_t n = lu_.size();
    if (b.size() != n) throw LengthMismatch("right-hand side length does not match system");
    if (singular_) throw std::logic_error("solve() on a singular factorization");

    const std::size_t kl = lu_.lower();
    const std::size_t reach = lu_.lower() + lu_.upper();
    std::vector<double> x(b.begin(), b.end());
    for (std::size_t k = 0; k < n; ++k) {
        if (pivots_[k] != k) std::swap(x[k], x[pivots_[k]]);
        const std::size_t last_row = std::min(n - 1, k + kl);
        for (std::size_t i = k + 1; i <= last_row; ++i) x[i] -= lu_.at(i, k) * x[k];
    }
    for (std::size_t i = n; i-- > 0;) {
        const std::size_t last_col = std::min(n - 1, i + reach);
        double s = x[i];
        for (std::size_t j = i + 1; j <= last_col; ++j) s -= lu_.at(i, j) * x[j];
        x[i] = s / lu_.at(i, i);
    }
    return x;
}

} // namespace mfptrl
