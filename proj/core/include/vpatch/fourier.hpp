#pragma once

#include <algorithm>
#include <cmath>
#include <span>
#include <vector>

#include "vpatch/error.hpp"

namespace vpatch {

/// Norm weight for truncated series: sqrt(sum |a_jm|^2 (1+jm)^{2k} (cosh(c jm)^2 + sinh(c jm)^2)).
/// strip_width == 0 reduces to the plain (1+jm)^{2k} spectral Sobolev weight.
struct NormSpec {
  int sobolev_order = 0;
  double strip_width = 0.0;
};

enum class Parity { even, odd };

template <Parity P>
class Series;

using EvenSeries = Series<Parity::even>;
using OddSeries = Series<Parity::odd>;

/// Truncated m-fold symmetric series. Parity::even holds
///   f(x) = sum_{j=1..J} a_j cos(j m x)
/// and Parity::odd the sine counterpart. Mean zero by construction, 2pi/m periodic.
/// Values are immutable after construction except through coefficient assignment;
/// all free operations return fresh values.
template <Parity P>
class Series {
public:
  Series(int fold, std::vector<double> coeffs) : fold_(fold), coeffs_(std::move(coeffs)) {
    if (fold_ < 2) fail(ErrorCode::domain, "series fold must be >= 2");
    if (coeffs_.empty()) fail(ErrorCode::domain, "series needs truncation >= 1");
  }

  static Series zero(int fold, int truncation) {
    return Series(fold, std::vector<double>(static_cast<std::size_t>(truncation), 0.0));
  }

  int fold() const noexcept { return fold_; }
  int truncation() const noexcept { return static_cast<int>(coeffs_.size()); }
  std::span<const double> coeffs() const noexcept { return coeffs_; }

  /// 1-based multiple index: coeff(j) multiplies cos(j m x) (resp. sin).
  double coeff(int j) const { return coeffs_.at(static_cast<std::size_t>(j - 1)); }
  double& coeff(int j) { return coeffs_.at(static_cast<std::size_t>(j - 1)); }

  double operator()(double x) const;

  /// Termwise d/dx. Even series map to odd ones (a_j -> -jm a_j) and back (b_j -> jm b_j).
  auto derivative() const;

  Series truncated(int new_truncation) const {
    std::vector<double> c(static_cast<std::size_t>(new_truncation), 0.0);
    const std::size_t keep = std::min(coeffs_.size(), c.size());
    for (std::size_t i = 0; i < keep; ++i) c[i] = coeffs_[i];
    return Series(fold_, std::move(c));
  }

  double max_abs_coeff() const noexcept {
    double m = 0.0;
    for (double a : coeffs_) m = std::max(m, std::abs(a));
    return m;
  }

private:
  int fold_;
  std::vector<double> coeffs_;
};

template <Parity P>
Series<P> operator+(const Series<P>& a, const Series<P>& b);
template <Parity P>
Series<P> operator-(const Series<P>& a, const Series<P>& b);
template <Parity P>
Series<P> operator*(double s, const Series<P>& a);

/// Strip-weighted spectral norm; see NormSpec.
template <Parity P>
double weighted_norm(const Series<P>& f, NormSpec spec = {});

/// Sharp low-pass: modes with j*m <= cutoff survive, the rest are zeroed.
/// Truncation is preserved, so the operator is idempotent bitwise.
template <Parity P>
Series<P> smooth(const Series<P>& f, double cutoff);

using EvenTuple = std::vector<EvenSeries>;
using OddTuple = std::vector<OddSeries>;

/// L2([0,2pi)) inner product summed over components: pi * sum_c sum_j a_cj b_cj.
double l2_inner(const EvenTuple& a, const EvenTuple& b);
double l2_norm(const EvenTuple& a);

EvenTuple operator+(const EvenTuple& a, const EvenTuple& b);
EvenTuple operator-(const EvenTuple& a, const EvenTuple& b);
EvenTuple operator*(double s, const EvenTuple& a);
OddTuple operator+(const OddTuple& a, const OddTuple& b);
OddTuple operator-(const OddTuple& a, const OddTuple& b);
OddTuple operator*(double s, const OddTuple& a);
EvenTuple smooth(const EvenTuple& f, double cutoff);
EvenTuple zero_tuple(int components, int fold, int truncation);

/// sqrt(sum_c weighted_norm(f_c)^2)
double tuple_norm(const EvenTuple& f, NormSpec spec = {});
double tuple_norm(const OddTuple& f, NormSpec spec = {});

struct KernelProjection {
  EvenTuple projection;
  EvenTuple complement;
};

/// Rank-one projection P R := (v.R) v onto span{v}, with v normalized internally
/// to unit L2; returns both P R and (I - P) R.
KernelProjection project_kernel(const EvenTuple& R, const EvenTuple& v);

/// v scaled to unit L2 norm over [0,2pi) summed over components.
EvenTuple l2_normalized(const EvenTuple& v);

// --- template member definitions -------------------------------------------

template <Parity P>
inline double Series<P>::operator()(double x) const {
  double acc = 0.0;
  for (int j = 1; j <= truncation(); ++j) {
    const double arg = static_cast<double>(j) * fold_ * x;
    acc += coeffs_[static_cast<std::size_t>(j - 1)] *
           (P == Parity::even ? std::cos(arg) : std::sin(arg));
  }
  return acc;
}

template <Parity P>
inline auto Series<P>::derivative() const {
  constexpr Parity Q = (P == Parity::even) ? Parity::odd : Parity::even;
  std::vector<double> c(coeffs_.size());
  for (int j = 1; j <= truncation(); ++j) {
    const double jm = static_cast<double>(j) * fold_;
    const double a = coeffs_[static_cast<std::size_t>(j - 1)];
    c[static_cast<std::size_t>(j - 1)] = (P == Parity::even) ? -jm * a : jm * a;
  }
  return Series<Q>(fold_, std::move(c));
}

}  // namespace vpatch
