#include "vpatch/grid.hpp"

#include <cmath>
#include <numbers>

namespace vpatch {

namespace {
constexpr double kTwoPi = 2.0 * std::numbers::pi;
}

Grid::Grid(int nodes) : n_(nodes), step_(kTwoPi / nodes) {
  if (nodes < 4 || nodes % 2 != 0) fail(ErrorCode::invalid_config, "grid needs an even node count >= 4");
  cos_.resize(static_cast<std::size_t>(nodes));
  sin_.resize(static_cast<std::size_t>(nodes));
  for (int q = 0; q < nodes; ++q) {
    cos_[static_cast<std::size_t>(q)] = std::cos(step_ * q);
    sin_[static_cast<std::size_t>(q)] = std::sin(step_ * q);
  }
}

std::vector<double> Grid::sample(const EvenSeries& f) const {
  std::vector<double> out(static_cast<std::size_t>(n_), 0.0);
  for (int j = 1; j <= f.truncation(); ++j) {
    const std::int64_t freq = static_cast<std::int64_t>(j) * f.fold();
    const double a = f.coeff(j);
    if (a == 0.0) continue;
    for (std::int64_t q = 0; q < n_; ++q) out[static_cast<std::size_t>(q)] += a * cos_at(freq * q);
  }
  return out;
}

std::vector<double> Grid::sample(const OddSeries& f) const {
  std::vector<double> out(static_cast<std::size_t>(n_), 0.0);
  for (int j = 1; j <= f.truncation(); ++j) {
    const std::int64_t freq = static_cast<std::int64_t>(j) * f.fold();
    const double a = f.coeff(j);
    if (a == 0.0) continue;
    for (std::int64_t q = 0; q < n_; ++q) out[static_cast<std::size_t>(q)] += a * sin_at(freq * q);
  }
  return out;
}

std::vector<double> Grid::cosine_coefficients(std::span<const double> samples, int fold,
                                              int count) const {
  std::vector<double> out(static_cast<std::size_t>(count), 0.0);
  const double scale = 2.0 / static_cast<double>(n_);
  for (int j = 1; j <= count; ++j) {
    const std::int64_t freq = static_cast<std::int64_t>(j) * fold;
    double acc = 0.0;
    for (std::int64_t q = 0; q < n_; ++q)
      acc += samples[static_cast<std::size_t>(q)] * cos_at(freq * q);
    out[static_cast<std::size_t>(j - 1)] = scale * acc;
  }
  return out;
}

std::vector<double> Grid::sine_coefficients(std::span<const double> samples, int fold,
                                            int count) const {
  std::vector<double> out(static_cast<std::size_t>(count), 0.0);
  const double scale = 2.0 / static_cast<double>(n_);
  for (int j = 1; j <= count; ++j) {
    const std::int64_t freq = static_cast<std::int64_t>(j) * fold;
    double acc = 0.0;
    for (std::int64_t q = 0; q < n_; ++q)
      acc += samples[static_cast<std::size_t>(q)] * sin_at(freq * q);
    out[static_cast<std::size_t>(j - 1)] = scale * acc;
  }
  return out;
}

double Grid::mean(std::span<const double> samples) const {
  double acc = 0.0;
  for (double v : samples) acc += v;
  return acc / static_cast<double>(n_);
}

double Grid::off_fold_mass(std::span<const double> samples, int fold) const {
  double acc = 0.0;
  for (std::int64_t k = 1; k <= n_ / 2; ++k) {
    if (k % fold == 0) continue;
    double c = 0.0, s = 0.0;
    for (std::int64_t q = 0; q < n_; ++q) {
      c += samples[static_cast<std::size_t>(q)] * cos_at(k * q);
      s += samples[static_cast<std::size_t>(q)] * sin_at(k * q);
    }
    const double scale = (k == n_ / 2) ? 1.0 / n_ : 2.0 / n_;
    acc += scale * scale * (c * c + s * s);
  }
  return std::sqrt(acc);
}

}  // namespace vpatch
