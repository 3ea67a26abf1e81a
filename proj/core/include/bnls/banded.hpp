#pragma once

#include <complex>
#include <span>
#include <vector>

namespace bnls {

/// Square complex matrix with `lower` sub- and `upper` super-diagonals.
/// Stored in LAPACK general-band layout with room for the fill-in that
/// partial pivoting produces.
class BandedMatrix {
public:
    using value_type = std::complex<double>;

    BandedMatrix(int n, int lower, int upper);

    int size() const { return n_; }
    int lower() const { return kl_; }
    int upper() const { return ku_; }

    bool in_band(int row, int col) const { return col - row <= ku_ && row - col <= kl_; }
    value_type& at(int row, int col);
    value_type at(int row, int col) const;

    /// y = A x
    void multiply(std::span<const value_type> x, std::span<value_type> y) const;

    /// Raw band storage (column-major, leading dimension 2*kl+ku+1).
    std::span<const value_type> storage() const { return ab_; }
    int leading_dimension() const { return ldab_; }

private:
    int n_, kl_, ku_, ldab_;
    std::vector<value_type> ab_;
};

/// LU factorization with partial pivoting (LAPACK zgbtrf), reusable across
/// right-hand sides.
class BandedLu {
public:
    /// Throws NumericalError if the matrix is exactly singular.
    explicit BandedLu(const BandedMatrix& a);

    /// Solves A x = b in place.
    void solve(std::span<std::complex<double>> b) const;

    int size() const { return n_; }

private:
    int n_, kl_, ku_, ldab_;
    std::vector<std::complex<double>> lu_;
    std::vector<int> ipiv_;
};

}  // namespace bnls
