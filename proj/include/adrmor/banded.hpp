#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <vector>

#include "adrmor/errors.hpp"

namespace adrmor {

/// Square band matrix with `lower` sub- and `upper` superdiagonals, stored in
/// LAPACK general-band layout with `lower` extra rows reserved for fill-in
/// from partial pivoting. Entry (i, j) lives at data[(lower + upper + i - j) + j * ld].
template <typename Scalar = double>
class BandLU {
 public:
  BandLU() = default;
  BandLU(Eigen::Index n, Eigen::Index lower, Eigen::Index upper)
      : n_(n), kl_(lower), ku_(upper), ld_(2 * lower + upper + 1),
        data_(static_cast<std::size_t>(ld_ * n), Scalar(0)), pivots_(static_cast<std::size_t>(n)) {}

  Eigen::Index size() const { return n_; }
  Eigen::Index lower() const { return kl_; }
  Eigen::Index upper() const { return ku_; }

  void set_zero() { std::fill(data_.begin(), data_.end(), Scalar(0)); }

  Scalar& at(Eigen::Index i, Eigen::Index j) {
    return data_[static_cast<std::size_t>((kl_ + ku_ + i - j) + j * ld_)];
  }
  Scalar at(Eigen::Index i, Eigen::Index j) const {
    return data_[static_cast<std::size_t>((kl_ + ku_ + i - j) + j * ld_)];
  }

  bool in_band(Eigen::Index i, Eigen::Index j) const {
    return i - j <= kl_ && j - i <= ku_ && i >= 0 && j >= 0 && i < n_ && j < n_;
  }

  /// In-place LU with partial pivoting. Returns false on an exactly zero pivot.
  bool factorize() {
    const Eigen::Index kv = kl_ + ku_;
    Eigen::Index ju = 0;
    for (Eigen::Index j = 0; j < n_; ++j) {
      const Eigen::Index km = std::min(kl_, n_ - 1 - j);
      Eigen::Index p = 0;
      Scalar best = std::abs(at(j, j));
      for (Eigen::Index i = 1; i <= km; ++i) {
        const Scalar a = std::abs(at(j + i, j));
        if (a > best) {
          best = a;
          p = i;
        }
      }
      pivots_[static_cast<std::size_t>(j)] = j + p;
      if (best == Scalar(0)) return false;
      ju = std::max(ju, std::min(j + ku_ + p, n_ - 1));
      if (p != 0) {
        for (Eigen::Index c = j; c <= ju; ++c) std::swap(at(j, c), at(j + p, c));
      }
      if (km > 0) {
        const Scalar inv = Scalar(1) / at(j, j);
        for (Eigen::Index i = 1; i <= km; ++i) at(j + i, j) *= inv;
        for (Eigen::Index c = j + 1; c <= ju; ++c) {
          const Scalar u = at(j, c);
          if (u == Scalar(0)) continue;
          for (Eigen::Index i = 1; i <= km; ++i) at(j + i, c) -= at(j + i, j) * u;
        }
      }
    }
    (void)kv;
    return true;
  }

  /// Solves in place using the factors from factorize().
  template <typename Vec>
  void solve_in_place(Vec& b) const {
    for (Eigen::Index j = 0; j < n_; ++j) {
      const Eigen::Index km = std::min(kl_, n_ - 1 - j);
      const Eigen::Index p = pivots_[static_cast<std::size_t>(j)];
      if (p != j) std::swap(b(j), b(p));
      const Scalar bj = b(j);
      for (Eigen::Index i = 1; i <= km; ++i) b(j + i) -= at(j + i, j) * bj;
    }
    const Eigen::Index kv = kl_ + ku_;
    for (Eigen::Index j = n_ - 1; j >= 0; --j) {
      b(j) /= at(j, j);
      const Scalar bj = b(j);
      const Eigen::Index first = std::max<Eigen::Index>(0, j - kv);
      for (Eigen::Index i = first; i < j; ++i) b(i) -= at(i, j) * bj;
    }
  }

  /// Dense copy of the (unfactored) band, for diagnostics.
  Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic> to_dense() const {
    Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic> m =
        Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>::Zero(n_, n_);
    for (Eigen::Index j = 0; j < n_; ++j) {
      for (Eigen::Index i = std::max<Eigen::Index>(0, j - ku_); i <= std::min(n_ - 1, j + kl_); ++i) {
        m(i, j) = at(i, j);
      }
    }
    return m;
  }

 private:
  Eigen::Index n_ = 0, kl_ = 0, ku_ = 0, ld_ = 1;
  std::vector<Scalar> data_;
  std::vector<Eigen::Index> pivots_;
};

}  // namespace adrmor
