#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "vpatch/fourier.hpp"

namespace vpatch {

/// Uniform periodic grid x_q = 2 pi q / n with shared cos/sin tables.
///
/// All node evaluation goes through table lookups with modular index
/// arithmetic, so two quantities that agree as grid functions agree bitwise;
/// in particular every sampled m-fold symmetric field is exactly invariant
/// under the index shift q -> q + n/m whenever m divides n.
class Grid {
public:
  explicit Grid(int nodes);

  int size() const noexcept { return n_; }
  double node(int q) const noexcept { return step_ * static_cast<double>(q); }
  double weight() const noexcept { return step_; }  // trapezoid weight, 2pi/n

  double cos_at(std::int64_t index) const noexcept {
    return cos_[static_cast<std::size_t>(mod(index))];
  }
  double sin_at(std::int64_t index) const noexcept {
    return sin_[static_cast<std::size_t>(mod(index))];
  }

  std::vector<double> sample(const EvenSeries& f) const;
  std::vector<double> sample(const OddSeries& f) const;

  /// Coefficients of cos(j*fold*x), j = 1..count, from node samples.
  std::vector<double> cosine_coefficients(std::span<const double> samples, int fold,
                                          int count) const;
  /// Coefficients of sin(j*fold*x), j = 1..count, from node samples.
  std::vector<double> sine_coefficients(std::span<const double> samples, int fold,
                                        int count) const;

  double mean(std::span<const double> samples) const;

  /// l2 mass of Fourier content at frequencies that are not multiples of fold
  /// (frequency 0 excluded); measures m-fold symmetry leakage of a sampled field.
  double off_fold_mass(std::span<const double> samples, int fold) const;

private:
  std::int64_t mod(std::int64_t index) const noexcept {
    std::int64_t r = index % n_;
    return r < 0 ? r + n_ : r;
  }

  std::int64_t n_;
  double step_;
  std::vector<double> cos_, sin_;
};

}  // namespace vpatch
