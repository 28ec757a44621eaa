#include "vpatch/spectral.hpp"

#include <cmath>
#include <numbers>
#include <sstream>

#include "parallel.hpp"

namespace vpatch {

namespace {

constexpr double kPi = std::numbers::pi;

double row_normalized_abs_det(const Eigen::MatrixXd& m) {
  Eigen::MatrixXd scaled = m;
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    const double norm = m.row(r).norm();
    if (norm > 0.0) scaled.row(r) /= norm;
  }
  return std::abs(scaled.determinant());
}

}  // namespace

LinearizationBlock two_layer_block(double b, double theta, int frequency) {
  if (!(b > 0.0 && b < 1.0)) fail(ErrorCode::domain, "two-layer radius must lie in (0,1)");
  if (frequency < 1) fail(ErrorCode::domain, "frequency must be >= 1");
  const double n = static_cast<double>(frequency);
  Eigen::MatrixXd m(2, 2);
  m(0, 0) = b * b / 2.0 - theta / 2.0 + theta / (2.0 * n);
  m(0, 1) = -std::pow(b, n + 1.0) / (2.0 * n);
  m(1, 0) = theta * std::pow(b, n) / (2.0 * n);
  m(1, 1) = -b / (2.0 * n) + b * (1.0 - theta) / 2.0;
  return {frequency, m, m.determinant()};
}

double two_layer_delta(double b, double theta, int m) {
  const double dm = static_cast<double>(m);
  return dm * (dm - 1.0) * theta * theta -
         ((dm - 1.0) * (dm - 1.0) + b * b * dm * dm - std::pow(b, 2.0 * dm)) * theta +
         b * b * dm * (dm - 1.0);
}

double two_layer_delta_zero_mean(double b, int m) {
  const double dm = static_cast<double>(m);
  return dm * b * b * (1.0 - b * b) + b * b * (std::pow(b, 2.0 * dm) - 1.0);
}

double two_layer_critical_b(int m) {
  if (m < 2) fail(ErrorCode::domain, "fold must be >= 2");
  const double dm = static_cast<double>(m);
  auto d1 = [&](double b) { return dm - 1.0 - b * dm - std::pow(b, dm); };
  double lo = 0.0, hi = 1.0;  // d1(0) = m-1 > 0, d1(1) = -2 < 0
  for (int it = 0; it < 200 && hi - lo > 1e-16; ++it) {
    const double mid = 0.5 * (lo + hi);
    (d1(mid) > 0.0 ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

TwoLayerRoots theta_roots(double b, int m) {
  if (m < 2) fail(ErrorCode::domain, "fold must be >= 2");
  if (!(b > 0.0 && b < 1.0)) fail(ErrorCode::domain, "radius must lie in (0,1)");
  const double critical = two_layer_critical_b(m);
  if (b >= critical) {
    std::ostringstream msg;
    msg << "b = " << b << " >= critical radius " << critical << " for m = " << m;
    fail(ErrorCode::b_too_large, msg.str());
  }
  const double dm = static_cast<double>(m);
  const double qa = dm * (dm - 1.0);
  const double qb = -((dm - 1.0) * (dm - 1.0) + b * b * dm * dm - std::pow(b, 2.0 * dm));
  const double qc = b * b * dm * (dm - 1.0);
  const double disc = qb * qb - 4.0 * qa * qc;
  if (disc <= 0.0) fail(ErrorCode::b_too_large, "discriminant not positive");
  // qb < 0, so the stable form gives the larger root first.
  const double plus = (-qb + std::sqrt(disc)) / (2.0 * qa);
  const double minus = qc / (qa * plus);
  return {minus, plus, critical};
}

TwoLayerKernel two_layer_kernel(double b, int m, double theta, double root_tol) {
  const double dm = static_cast<double>(m);
  const double scale = dm * (dm - 1.0) * std::max(1.0, theta * theta);
  const double delta = two_layer_delta(b, theta, m);
  if (std::abs(delta) > root_tol * scale) {
    std::ostringstream msg;
    msg << "Delta_m(theta) = " << delta << " is not a root";
    fail(ErrorCode::not_a_root, msg.str());
  }
  TwoLayerKernel out;
  const double bm = std::pow(b, dm);
  out.kernel = {b / (2.0 * dm) - b * (1.0 - theta) / 2.0, theta * bm / (2.0 * dm)};
  out.image_direction = {-b * bm / (2.0 * dm), -b / (2.0 * dm) + b * (1.0 - theta) / 2.0};
  out.transversality = (theta - (1.0 - (1.0 + bm) / dm)) * (theta - (1.0 - (1.0 - bm) / dm));
  return out;
}

LinearizationBlock three_layer_block(double b2, double theta2, double b3, double theta3,
                                     int frequency) {
  if (!(1.0 > b2 && b2 > b3 && b3 > 0.0))
    fail(ErrorCode::domain, "three-layer radii must satisfy 1 > b2 > b3 > 0");
  if (frequency < 1) fail(ErrorCode::domain, "frequency must be >= 1");
  const double f = static_cast<double>(frequency);
  const double half_shift = -0.5 + 1.0 / (2.0 * f);
  Eigen::MatrixXd m(3, 3);
  m(0, 0) = half_shift - 0.5 * theta2 * b2 * b2 - 0.5 * theta3 * b3 * b3;
  m(0, 1) = theta2 * b2 * std::pow(b2, f) / (2.0 * f);
  m(0, 2) = theta3 * b3 * std::pow(b3, f) / (2.0 * f);
  m(1, 0) = std::pow(b2, f) / (2.0 * f);
  m(1, 1) = theta2 * b2 * half_shift - 0.5 * b2 - 0.5 * theta3 * b3 * b3 / b2;
  m(1, 2) = theta3 * b3 * std::pow(b3 / b2, f) / (2.0 * f);
  m(2, 0) = std::pow(b3, f) / (2.0 * f);
  m(2, 1) = theta2 * b2 * std::pow(b3 / b2, f) / (2.0 * f);
  m(2, 2) = theta3 * b3 * half_shift - 0.5 * b3 - 0.5 * theta2 * b3;
  return {frequency, m, m.determinant()};
}

ThreeLayerWindow three_layer_window(double b2, double theta2, int m) {
  if (m < 2) fail(ErrorCode::domain, "fold must be >= 2");
  if (!(b2 > 0.0 && b2 < 1.0)) fail(ErrorCode::domain, "b2 must lie in (0,1)");
  const double dm = static_cast<double>(m);
  ThreeLayerWindow w;
  w.b2_max = std::pow(0.5, 1.0 / (2.0 * dm));
  const double b2m = std::pow(b2, 2.0 * dm);
  w.theta2_min = dm * (b2 * b2 - 1.0) / ((1.0 - b2m) * b2 * b2);
  w.theta2_max = std::min(2.0 * std::pow(b2, 2.0 * dm - 2.0) * (b2 * b2 - 1.0) * dm / (1.0 - b2m),
                          -1.0 / (b2 * b2));
  w.admissible = b2 < w.b2_max && theta2 > w.theta2_min && theta2 < w.theta2_max;
  return w;
}

namespace {

struct ThreeLayerDeterminantCoeffs {
  double b0, b1, b2c;  // f(z) = b0 z^m + b1 z + b2c in z = b3^2
  double cofactor;     // A_33
};

ThreeLayerDeterminantCoeffs determinant_coeffs(double b2, double theta2, int m) {
  const double dm = static_cast<double>(m);
  const double b2m = std::pow(b2, dm);
  const double b22m = b2m * b2m;
  ThreeLayerDeterminantCoeffs c;
  c.cofactor = theta2 / (2.0 * dm) * (1.0 - b22m) + (1.0 - b2 * b2) / (2.0 * b2 * b2);
  const double neg = -1.0 - theta2 * b2 * b2;
  c.b0 = neg * ((1.0 - 1.0 / (b2 * b2)) / (4.0 * dm) +
                theta2 * (b2m - 1.0 / b2m) / (4.0 * dm * dm * b2m));
  c.b1 = c.cofactor * (-0.5 - 0.5 * theta2);
  c.b2c = c.cofactor * neg * (-0.5 + 1.0 / (2.0 * dm));
  return c;
}

}  // namespace

BifurcationPoint two_layer_bifurcation_at(double b, int m, double theta, int n_max) {
  const TwoLayerRoots roots = theta_roots(b, m);
  const TwoLayerKernel k = two_layer_kernel(b, m, theta);  // throws NOT_A_ROOT off the roots

  BifurcationPoint point;
  point.family = Family::two_layer;
  point.fold = m;
  point.b = b;
  point.theta_star = theta;
  point.n_max = n_max;
  point.transversality = k.transversality;

  EvenSeries mode(m, {1.0});
  point.kernel = {k.kernel(0) * mode, k.kernel(1) * mode};

  const LinearizationBlock block = two_layer_block(b, theta, m);
  // Cokernel: null vector of M_m^T, normalized to unit L2 over both components.
  Eigen::Vector2d w(-block.entries(1, 0), block.entries(0, 0));
  if (w.norm() == 0.0) fail(ErrorCode::degenerate, "mode block vanished");
  w /= (w.norm() * std::sqrt(kPi));
  OddSeries sine_mode(m, {1.0});
  point.cokernel = {w(0) * sine_mode, w(1) * sine_mode};

  point.det_mode_block_normalized = row_normalized_abs_det(block.entries);
  point.higher_mode_margin = std::numeric_limits<double>::infinity();
  for (int n = 2; n <= n_max; ++n) {
    const double d = std::abs(two_layer_block(b, theta, n * m).det);
    point.higher_mode_margin = std::min(point.higher_mode_margin, d);
  }
  if (point.higher_mode_margin < 1e-10)
    fail(ErrorCode::degenerate, "higher-mode determinant margin below 1e-10");

  point.certificates = {
      {"tau", k.transversality},
      {"theta_minus", roots.theta_minus},
      {"theta_plus", roots.theta_plus},
      {"critical_b", roots.critical_b},
      {"delta_at_theta", two_layer_delta(b, theta, m)},
      {"delta_zero_mean", two_layer_delta_zero_mean(b, m)},
  };
  return point;
}

BifurcationPoint two_layer_bifurcation(double b, int m, RootSign sign, int n_max) {
  const TwoLayerRoots roots = theta_roots(b, m);
  const double theta = (sign == RootSign::plus) ? roots.theta_plus : roots.theta_minus;
  return two_layer_bifurcation_at(b, m, theta, n_max);
}

BifurcationPoint three_layer_bifurcation(double b2, double theta2, int m, int n_max) {
  const ThreeLayerWindow window = three_layer_window(b2, theta2, m);
  if (!window.admissible) {
    std::ostringstream msg;
    msg << "(b2, theta2) outside the admissible window: need b2 < " << window.b2_max
        << " and theta2 in (" << window.theta2_min << ", " << window.theta2_max << ")";
    fail(ErrorCode::param_window, msg.str());
  }

  const ThreeLayerDeterminantCoeffs c = determinant_coeffs(b2, theta2, m);
  if (!(c.b0 > 0.0 && c.b1 > 0.0 && c.b2c < 0.0))
    fail(ErrorCode::no_root, "determinant coefficients violate the expected sign pattern");

  const double dm = static_cast<double>(m);
  auto det_poly = [&](double z) { return c.b0 * std::pow(z, dm) + c.b1 * z + c.b2c; };
  const double z_hi = b2 * b2;
  if (!(det_poly(z_hi) > 0.0))
    fail(ErrorCode::no_root, "no determinant root inside the second layer");
  // det_poly(0) = B2 < 0 and det_poly(b2^2) > 0: bisect for the unique root.
  double lo = 0.0, hi = z_hi;
  for (int it = 0; it < 200 && hi - lo > 1e-16 * z_hi; ++it) {
    const double mid = 0.5 * (lo + hi);
    (det_poly(mid) < 0.0 ? lo : hi) = mid;
  }
  const double z = 0.5 * (lo + hi);
  const double b3 = std::sqrt(z);
  const double theta3 = -(1.0 + theta2 * b2 * b2) / z;

  BifurcationPoint point;
  point.family = Family::three_layer;
  point.fold = m;
  point.b2 = b2;
  point.theta2 = theta2;
  point.b3 = b3;
  point.theta_star = theta3;
  point.n_max = n_max;

  const LinearizationBlock block = three_layer_block(b2, theta2, b3, theta3, m);
  point.det_mode_block_normalized = row_normalized_abs_det(block.entries);

  // Kernel (v1, v2, 1): solve the leading 2x2 against the third column.
  const Eigen::Matrix2d cm33 = block.entries.topLeftCorner<2, 2>();
  const double det_cm33 = cm33.determinant();
  if (det_cm33 == 0.0) fail(ErrorCode::degenerate, "leading 2x2 minor is singular");
  const Eigen::Vector2d v12 = cm33.lu().solve(-block.entries.topRightCorner<2, 1>());
  EvenSeries mode(m, {1.0});
  point.kernel = {v12(0) * mode, v12(1) * mode, 1.0 * mode};

  // Cokernel: cross product of the first two columns, unit L2.
  const Eigen::Vector3d c1 = block.entries.col(0);
  const Eigen::Vector3d c2 = block.entries.col(1);
  Eigen::Vector3d w = c1.cross(c2);
  if (w.norm() == 0.0) fail(ErrorCode::degenerate, "mode block has rank < 2");
  w /= (w.norm() * std::sqrt(kPi));
  OddSeries sine_mode(m, {1.0});
  point.cokernel = {w(0) * sine_mode, w(1) * sine_mode, w(2) * sine_mode};

  // Transversality polynomial g(b3) = C0 b3^{2m} + C1 b3^2 + C2.
  const double c0 = (2.0 * dm - 1.0) / (8.0 * dm * dm) *
                    (1.0 / (2.0 * b2) - 0.5 * b2 + theta2 / (2.0 * dm * std::pow(b2, 2.0 * dm - 1.0)) -
                     b2 * theta2 / (2.0 * dm));
  const double c1t = det_cm33 * (1.0 + theta2) / (4.0 * (-1.0 - theta2 * b2 * b2));
  const double c2t = det_cm33 * (-0.25 + 1.0 / (4.0 * dm));
  if (!((c0 < 0.0 && c1t < 0.0 && c2t < 0.0) || (c0 > 0.0 && c1t > 0.0 && c2t > 0.0)))
    fail(ErrorCode::degenerate, "transversality coefficients change sign");
  point.transversality = c0 * std::pow(b3, 2.0 * dm) + c1t * z + c2t;

  point.higher_mode_margin = std::numeric_limits<double>::infinity();
  for (int n = 2; n <= n_max; ++n) {
    const double d = std::abs(three_layer_block(b2, theta2, b3, theta3, n * m).det);
    point.higher_mode_margin = std::min(point.higher_mode_margin, d);
  }
  if (point.higher_mode_margin < 1e-10)
    fail(ErrorCode::degenerate, "higher-mode determinant margin below 1e-10");

  const double d2 = (b2 * b2 - 1.0) / b2;
  const double d3 = (1.0 + theta2 + theta3) * b3;
  point.certificates = {
      {"B0", c.b0},
      {"B1", c.b1},
      {"B2", c.b2c},
      {"C0", c0},
      {"C1", c1t},
      {"C2", c2t},
      {"g", point.transversality},
      {"det_CM33", det_cm33},
      {"d2", d2},
      {"d3", d3},
      // 2 f det(M_f) -> d2 d3 / 4 as the frequency f grows; the certified
      // finite margins decay like 1/(2f) times this limit
      {"asymptotic_margin", std::abs(d2 * d3) / 4.0},
      {"b2_max", window.b2_max},
      {"theta2_min", window.theta2_min},
      {"theta2_max", window.theta2_max},
  };
  return point;
}

Eigen::MatrixXd jacobian_fd(const std::function<Eigen::VectorXd(const Eigen::VectorXd&)>& f,
                            const Eigen::VectorXd& x, double step_scale, int threads) {
  const Eigen::Index n = x.size();
  const Eigen::VectorXd base = f(x);
  Eigen::MatrixXd jac(base.size(), n);
  detail::parallel_for(static_cast<int>(n), threads, [&](int i) {
    const double h = step_scale * std::max(1.0, std::abs(x[i]));
    Eigen::VectorXd xp = x;
    Eigen::VectorXd xm = x;
    xp[i] += h;
    xm[i] -= h;
    jac.col(i) = (f(xp) - f(xm)) / (2.0 * h);
  });
  return jac;
}

LinearizedSplit decompose_linearization(const ThreeLayerFamily& family, double theta3,
                                        const EvenTuple& R, double fd_step) {
  const PatchSystem base = family.system(theta3, R);
  const auto u_theta_outer = boundary_tangential_velocity(base, 0);
  const Grid grid(family.quadrature_nodes);
  const int fold = family.fold;
  const int truncation = family.truncation;

  auto tangential = [u_theta_outer, grid, fold, truncation](const EvenTuple& h) -> OddTuple {
    if (h.size() != 3) fail(ErrorCode::domain, "direction must have three components");
    // a[h] = mean-free part of the h_1'-multiplication term of DG; only the
    // outermost component is affected.
    const auto dh = grid.sample(h[0].derivative());
    std::vector<double> prod(dh.size());
    for (std::size_t q = 0; q < dh.size(); ++q) prod[q] = -dh[q] * u_theta_outer[q];
    OddTuple out;
    out.emplace_back(fold, grid.sine_coefficients(prod, fold, truncation));
    out.emplace_back(OddSeries::zero(fold, truncation));
    out.emplace_back(OddSeries::zero(fold, truncation));
    return out;
  };

  auto full = [family, theta3, R, fd_step](const EvenTuple& h) -> OddTuple {
    double scale = 0.0;
    for (const auto& c : h) scale = std::max(scale, c.max_abs_coeff());
    const double eps = fd_step / std::max(1.0, scale);
    const OddTuple plus = family.residual(theta3, R + eps * h);
    const OddTuple minus = family.residual(theta3, R - eps * h);
    return (1.0 / (2.0 * eps)) * (plus - minus);
  };

  auto remainder = [tangential, full](const EvenTuple& h) -> OddTuple {
    return full(h) - tangential(h);
  };

  return {tangential, remainder, full};
}

}  // namespace vpatch
