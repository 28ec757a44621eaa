#include "vpatch/fourier.hpp"

#include <cmath>
#include <numbers>

namespace vpatch {

namespace {

constexpr double kPi = std::numbers::pi;

template <Parity P>
Series<P> combine(const Series<P>& a, const Series<P>& b, double sb) {
  if (a.fold() != b.fold()) fail(ErrorCode::domain, "fold mismatch in series arithmetic");
  const int J = std::max(a.truncation(), b.truncation());
  std::vector<double> c(static_cast<std::size_t>(J), 0.0);
  for (int j = 1; j <= a.truncation(); ++j) c[j - 1] += a.coeff(j);
  for (int j = 1; j <= b.truncation(); ++j) c[j - 1] += sb * b.coeff(j);
  return Series<P>(a.fold(), std::move(c));
}

}  // namespace

template <Parity P>
Series<P> operator+(const Series<P>& a, const Series<P>& b) {
  return combine(a, b, 1.0);
}

template <Parity P>
Series<P> operator-(const Series<P>& a, const Series<P>& b) {
  return combine(a, b, -1.0);
}

template <Parity P>
Series<P> operator*(double s, const Series<P>& a) {
  std::vector<double> c(a.coeffs().begin(), a.coeffs().end());
  for (double& x : c) x *= s;
  return Series<P>(a.fold(), std::move(c));
}

template <Parity P>
double weighted_norm(const Series<P>& f, NormSpec spec) {
  if (spec.sobolev_order < 0 || spec.strip_width < 0.0)
    fail(ErrorCode::domain, "norm spec needs k >= 0 and c >= 0");
  double acc = 0.0;
  for (int j = 1; j <= f.truncation(); ++j) {
    const double jm = static_cast<double>(j) * f.fold();
    double w = std::pow(1.0 + jm, 2 * spec.sobolev_order);
    if (spec.strip_width > 0.0) {
      const double ch = std::cosh(spec.strip_width * jm);
      const double sh = std::sinh(spec.strip_width * jm);
      w *= ch * ch + sh * sh;
    }
    acc += f.coeff(j) * f.coeff(j) * w;
  }
  return std::sqrt(acc);
}

template <Parity P>
Series<P> smooth(const Series<P>& f, double cutoff) {
  if (cutoff <= 0.0) fail(ErrorCode::domain, "smoothing cutoff must be positive");
  std::vector<double> c(f.coeffs().begin(), f.coeffs().end());
  for (int j = 1; j <= f.truncation(); ++j) {
    if (static_cast<double>(j) * f.fold() > cutoff) c[j - 1] = 0.0;
  }
  return Series<P>(f.fold(), std::move(c));
}

template Series<Parity::even> operator+(const Series<Parity::even>&, const Series<Parity::even>&);
template Series<Parity::odd> operator+(const Series<Parity::odd>&, const Series<Parity::odd>&);
template Series<Parity::even> operator-(const Series<Parity::even>&, const Series<Parity::even>&);
template Series<Parity::odd> operator-(const Series<Parity::odd>&, const Series<Parity::odd>&);
template Series<Parity::even> operator*(double, const Series<Parity::even>&);
template Series<Parity::odd> operator*(double, const Series<Parity::odd>&);
template double weighted_norm(const Series<Parity::even>&, NormSpec);
template double weighted_norm(const Series<Parity::odd>&, NormSpec);
template Series<Parity::even> smooth(const Series<Parity::even>&, double);
template Series<Parity::odd> smooth(const Series<Parity::odd>&, double);

double l2_inner(const EvenTuple& a, const EvenTuple& b) {
  if (a.size() != b.size()) fail(ErrorCode::domain, "tuple size mismatch");
  double acc = 0.0;
  for (std::size_t c = 0; c < a.size(); ++c) {
    const int J = std::min(a[c].truncation(), b[c].truncation());
    for (int j = 1; j <= J; ++j) acc += a[c].coeff(j) * b[c].coeff(j);
  }
  return kPi * acc;
}

double l2_norm(const EvenTuple& a) { return std::sqrt(l2_inner(a, a)); }

namespace {

template <Parity P>
std::vector<Series<P>> tuple_combine(const std::vector<Series<P>>& a,
                                     const std::vector<Series<P>>& b, double sb) {
  if (a.size() != b.size()) fail(ErrorCode::domain, "tuple size mismatch");
  std::vector<Series<P>> out;
  out.reserve(a.size());
  for (std::size_t c = 0; c < a.size(); ++c) out.push_back(combine(a[c], b[c], sb));
  return out;
}

template <Parity P>
std::vector<Series<P>> tuple_scale(double s, const std::vector<Series<P>>& a) {
  std::vector<Series<P>> out;
  out.reserve(a.size());
  for (const auto& f : a) out.push_back(s * f);
  return out;
}

}  // namespace

EvenTuple operator+(const EvenTuple& a, const EvenTuple& b) { return tuple_combine(a, b, 1.0); }
EvenTuple operator-(const EvenTuple& a, const EvenTuple& b) { return tuple_combine(a, b, -1.0); }
EvenTuple operator*(double s, const EvenTuple& a) { return tuple_scale(s, a); }
OddTuple operator+(const OddTuple& a, const OddTuple& b) { return tuple_combine(a, b, 1.0); }
OddTuple operator-(const OddTuple& a, const OddTuple& b) { return tuple_combine(a, b, -1.0); }
OddTuple operator*(double s, const OddTuple& a) { return tuple_scale(s, a); }

EvenTuple smooth(const EvenTuple& f, double cutoff) {
  EvenTuple out;
  out.reserve(f.size());
  for (const auto& c : f) out.push_back(smooth(c, cutoff));
  return out;
}

EvenTuple zero_tuple(int components, int fold, int truncation) {
  EvenTuple out;
  out.reserve(static_cast<std::size_t>(components));
  for (int c = 0; c < components; ++c) out.push_back(EvenSeries::zero(fold, truncation));
  return out;
}

double tuple_norm(const EvenTuple& f, NormSpec spec) {
  double acc = 0.0;
  for (const auto& c : f) {
    const double n = weighted_norm(c, spec);
    acc += n * n;
  }
  return std::sqrt(acc);
}

double tuple_norm(const OddTuple& f, NormSpec spec) {
  double acc = 0.0;
  for (const auto& c : f) {
    const double n = weighted_norm(c, spec);
    acc += n * n;
  }
  return std::sqrt(acc);
}

EvenTuple l2_normalized(const EvenTuple& v) {
  const double n = l2_norm(v);
  if (n == 0.0) fail(ErrorCode::domain, "cannot normalize zero tuple");
  return (1.0 / n) * v;
}

KernelProjection project_kernel(const EvenTuple& R, const EvenTuple& v) {
  const EvenTuple vhat = l2_normalized(v);
  const double amp = l2_inner(vhat, R);
  KernelProjection out{amp * vhat, R};
  out.complement = R - out.projection;
  return out;
}

}  // namespace vpatch
