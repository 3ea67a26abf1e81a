#include "bnls/banded.hpp"

#include <stdexcept>
#include <string>

#define lapack_complex_double std::complex<double>
#include <lapacke.h>

#include "bnls/errors.hpp"

namespace bnls {

BandedMatrix::BandedMatrix(int n, int lower, int upper)
    : n_(n), kl_(lower), ku_(upper), ldab_(2 * lower + upper + 1),
      ab_(static_cast<std::size_t>(ldab_) * n, value_type{}) {
    if (n <= 0 || lower < 0 || upper < 0) throw std::invalid_argument("BandedMatrix: bad shape");
}

// Element (i, j) lives at ab[kl + ku + i - j + j * ldab].
BandedMatrix::value_type& BandedMatrix::at(int row, int col) {
    if (!in_band(row, col)) throw std::out_of_range("BandedMatrix: entry outside band");
    return ab_[static_cast<std::size_t>(kl_ + ku_ + row - col) + static_cast<std::size_t>(col) * ldab_];
}

BandedMatrix::value_type BandedMatrix::at(int row, int col) const {
    if (!in_band(row, col)) return {};
    return ab_[static_cast<std::size_t>(kl_ + ku_ + row - col) + static_cast<std::size_t>(col) * ldab_];
}

void BandedMatrix::multiply(std::span<const value_type> x, std::span<value_type> y) const {
    for (int i = 0; i < n_; ++i) {
        value_type acc{};
        const int j0 = std::max(0, i - kl_);
        const int j1 = std::min(n_ - 1, i + ku_);
        for (int j = j0; j <= j1; ++j)
            acc += ab_[static_cast<std::size_t>(kl_ + ku_ + i - j) + static_cast<std::size_t>(j) * ldab_] * x[j];
        y[i] = acc;
    }
}

BandedLu::BandedLu(const BandedMatrix& a)
    : n_(a.size()), kl_(a.lower()), ku_(a.upper()), ldab_(a.leading_dimension()),
      lu_(a.storage().begin(), a.storage().end()), ipiv_(a.size()) {
    const lapack_int info =
        LAPACKE_zgbtrf(LAPACK_COL_MAJOR, n_, n_, kl_, ku_, lu_.data(), ldab_, ipiv_.data());
    if (info > 0)
        throw NumericalError("banded LU: exactly singular pivot at row " + std::to_string(info));
    if (info < 0) throw std::logic_error("banded LU: invalid argument " + std::to_string(-info));
}

void BandedLu::solve(std::span<std::complex<double>> b) const {
    if (static_cast<int>(b.size()) != n_) throw std::invalid_argument("BandedLu::solve: size mismatch");
    const lapack_int info = LAPACKE_zgbtrs(LAPACK_COL_MAJOR, 'N', n_, kl_, ku_, 1, lu_.data(), ldab_,
                                           ipiv_.data(), b.data(), n_);
    if (info != 0) throw std::logic_error("banded LU solve failed: " + std::to_string(info));
}

}  // namespace bnls
