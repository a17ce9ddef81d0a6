#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace mfptrl {

/// Pivots smaller than this in magnitude mark the system as numerically singular.
inline constexpr double kSingularPivot = 1e-12;

/// Row-major dense square-or-rectangular matrix.
class DenseMatrix {
public:
    DenseMatrix() = default;
    DenseMatrix(std::size_t rows, std::size_t cols, double fill = 0.0)
        : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

    std::size_t rows() const noexcept { return rows_; }
    std::size_t cols() const noexcept { return cols_; }

    double& operator()(std::size_t i, std::size_t j) { return data_[i * cols_ + j]; }
    double operator()(std::size_t i, std::size_t j) const { return data_[i * cols_ + j]; }

    std::span<double> row(std::size_t i) { return {data_.data() + i * cols_, cols_}; }
    std::span<const double> row(std::size_t i) const { return {data_.data() + i * cols_, cols_}; }

private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<double> data_;
};

/**
 * LU factorization with partial (row) pivoting, PA = LU.
 *
 * Factorization stops at the first pivot below kSingularPivot; singular()
 * then reports true and solve() must not be called.
 */
class DenseLu {
public:
    explicit DenseLu(DenseMatrix a);

    bool singular() const noexcept { return singular_; }
    std::size_t size() const noexcept { return lu_.rows(); }

    std::vector<double> solve(std::span<const double> b) const;

private:
    DenseMatrix lu_;
    std::vector<std::size_t> perm_;
    bool singular_ = false;
};

/**
 * Square matrix with lower bandwidth kl and upper bandwidth ku, sized to hold
 * the extra ku + kl superdiagonals that partial pivoting can fill in.
 */
class BandMatrix {
public:
    BandMatrix(std::size_t n, std::size_t kl, std::size_t ku);

    std::size_t size() const noexcept { return n_; }
    std::size_t lower() const noexcept { return kl_; }
    std::size_t upper() const noexcept { return ku_; }

    /// Entry (i, j). Requires i - kl <= j <= i + kl + ku.
    double& at(std::size_t i, std::size_t j) { return data_[i * width_ + (j + kl_ - i)]; }
    double at(std::size_t i, std::size_t j) const { return data_[i * width_ + (j + kl_ - i)]; }

    bool in_band(std::size_t i, std::size_t j) const noexcept {
        return j + kl_ >= i && j <= i + ku_;
    }

private:
    std::size_t n_;
    std::size_t kl_;
    std::size_t ku_;
    std::size_t width_;
    std::vector<double> data_;
};

/// Banded Gaussian elimination with partial pivoting; same pivot sequence as
/// DenseLu on the equivalent dense matrix, restricted to the band.
class BandLu {
public:
    explicit BandLu(BandMatrix a);

    bool singular() const noexcept { return singular_; }
    std::size_t size() const noexcept { return lu_.size(); }

    std::vector<double> solve(std::span<const double> b) const;

private:
    BandMatrix lu_;
    std::vector<std::size_t> pivots_;
    bool singular_ = false;
};

} // namespace mfptrl
