#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "vpatch/solver.hpp"
#include "vpatch/spectral.hpp"

using namespace vpatch;

namespace {
constexpr double kPi = std::numbers::pi;

// Independent bisection oracle for the determinant root of the three-layer
// mode-1 block, written directly against the polynomial coefficients.
double bisect_b3_oracle(double b2, double theta2, int m) {
  const double a33 = theta2 / (2.0 * m) * (1.0 - std::pow(b2, 2 * m)) +
                     (1.0 - b2 * b2) / (2.0 * b2 * b2);
  const double neg = -1.0 - theta2 * b2 * b2;
  const double B0 = neg * ((1.0 - 1.0 / (b2 * b2)) / (4.0 * m) +
                           theta2 * (std::pow(b2, m) - std::pow(b2, -m)) /
                               (4.0 * m * m * std::pow(b2, m)));
  const double B1 = a33 * (-0.5 - 0.5 * theta2);
  const double B2 = a33 * neg * (-0.5 + 1.0 / (2.0 * m));
  auto f = [&](double b3) { return B0 * std::pow(b3, 2 * m) + B1 * b3 * b3 + B2; };
  double lo = 1e-12, hi = b2;
  REQUIRE(f(lo) < 0.0);
  REQUIRE(f(hi) > 0.0);
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (lo + hi);
    (f(mid) < 0.0 ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

}  // namespace

TEST_CASE("two-layer mode block entries and determinant") {
  const LinearizationBlock block = two_layer_block(0.3, 0.493625, 2);
  CHECK(block.entries(0, 0) == doctest::Approx(-0.0784063).epsilon(1e-5));
  CHECK(block.entries(0, 1) == doctest::Approx(-0.00675).epsilon(1e-12));
  CHECK(block.entries(1, 0) == doctest::Approx(0.0111066).epsilon(1e-5));
  CHECK(block.entries(1, 1) == doctest::Approx(0.00095625).epsilon(1e-4));
  CHECK(std::abs(block.det) < 1e-6);  // six-digit root

  // 4 n^2 / b * det(M_n) equals Delta_n for random parameters
  std::mt19937_64 rng(41);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  for (int trial = 0; trial < 20; ++trial) {
    const double b = 0.05 + 0.9 * unit(rng);
    const double theta = 2.0 * unit(rng) - 0.5;
    const int n = 2 + static_cast<int>(unit(rng) * 10);
    const double lhs = 4.0 * n * n / b * two_layer_block(b, theta, n).det;
    const double rhs = two_layer_delta(b, theta, n);
    CHECK(lhs == doctest::Approx(rhs).epsilon(1e-12));
  }

  CHECK_THROWS_AS(two_layer_block(1.5, 0.3, 2), Error);
}

TEST_CASE("zero-mean two-layer strengths never degenerate") {
  std::mt19937_64 rng(43);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  for (int trial = 0; trial < 20; ++trial) {
    const double b = 0.05 + 0.9 * unit(rng);
    const int m = 2 + static_cast<int>(unit(rng) * 6);
    const double closed = two_layer_delta_zero_mean(b, m);
    CHECK(closed == doctest::Approx(two_layer_delta(b, b * b, m)).epsilon(1e-12));
    CHECK(std::abs(closed) > 1e-6);
  }
}

TEST_CASE("critical radius and strength roots") {
  // m=2: critical b solves 1 - 2b - b^2 = 0, i.e. sqrt(2) - 1
  CHECK(two_layer_critical_b(2) == doctest::Approx(std::sqrt(2.0) - 1.0).epsilon(1e-12));

  const TwoLayerRoots roots = theta_roots(0.3, 2);
  CHECK(roots.theta_minus == doctest::Approx(0.182325).epsilon(1e-5));
  CHECK(roots.theta_plus == doctest::Approx(0.493625).epsilon(1e-5));
  CHECK(roots.theta_minus * roots.theta_plus == doctest::Approx(0.09).epsilon(1e-13));

  // root identities for random admissible parameters
  std::mt19937_64 rng(47);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  int done = 0;
  while (done < 20) {
    const int m = 2 + static_cast<int>(unit(rng) * 5);
    const double b = unit(rng) * two_layer_critical_b(m) * 0.98;
    if (b <= 0.01) continue;
    const TwoLayerRoots r = theta_roots(b, m);
    CHECK(r.theta_minus * r.theta_plus == doctest::Approx(b * b).epsilon(1e-12));
    const double sum_expected =
        ((m - 1.0) * (m - 1.0) + b * b * m * m - std::pow(b, 2.0 * m)) / (m * (m - 1.0));
    CHECK(r.theta_minus + r.theta_plus == doctest::Approx(sum_expected).epsilon(1e-12));
    CHECK(two_layer_delta(b, 1.0, m) > 0.0);  // both roots lie strictly below 1
    CHECK(r.theta_plus < 1.0);
    CHECK(0.0 < r.theta_minus);
    ++done;
  }

  // root ordering across mode multiples
  const TwoLayerRoots base = theta_roots(0.3, 2);
  for (int j : {2, 3}) {
    const TwoLayerRoots higher = theta_roots(0.3, 2 * j);
    CHECK(higher.theta_plus > base.theta_plus);
    CHECK(base.theta_plus > base.theta_minus);
    CHECK(base.theta_minus > higher.theta_minus);
  }

  CHECK_THROWS_AS(theta_roots(0.5, 2), Error);  // 0.5 > sqrt(2)-1
  try {
    theta_roots(0.5, 2);
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::b_too_large);
  }
}

TEST_CASE("two-layer kernel and transversality") {
  const double b = 0.3;
  const int m = 2;
  const TwoLayerRoots roots = theta_roots(b, m);
  const TwoLayerKernel k = two_layer_kernel(b, m, roots.theta_plus);

  CHECK(k.kernel(0) == doctest::Approx(-0.00095625).epsilon(1e-4));
  CHECK(k.kernel(1) == doctest::Approx(0.0111066).epsilon(1e-5));
  CHECK(k.transversality == doctest::Approx(-0.0019844).epsilon(1e-4));
  CHECK(k.transversality != 0.0);

  // M_m(theta) v0 = 0
  const LinearizationBlock block = two_layer_block(b, roots.theta_plus, m);
  const Eigen::Vector2d image = block.entries * k.kernel;
  CHECK(image.norm() < 1e-12);

  // the quoted theta = b^2 refusal
  CHECK_THROWS_AS(two_layer_kernel(b, m, b * b), Error);
  try {
    two_layer_kernel(b, m, b * b);
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::not_a_root);
  }
}

TEST_CASE("two-layer bifurcation certificate") {
  const BifurcationPoint point = two_layer_bifurcation(0.3, 2, RootSign::plus, 30);
  CHECK(point.theta_star == doctest::Approx(0.493625).epsilon(1e-5));
  CHECK(point.det_mode_block_normalized < 1e-12);
  CHECK(point.higher_mode_margin > 1e-10);
  CHECK(point.certificates.at("critical_b") == doctest::Approx(std::sqrt(2.0) - 1.0));

  // kernel reproduces the pinned display; cokernel annihilates the transpose
  const TwoLayerKernel k = two_layer_kernel(0.3, 2, point.theta_star);
  CHECK(point.kernel[0].coeff(1) == doctest::Approx(k.kernel(0)).epsilon(1e-14));
  CHECK(point.kernel[1].coeff(1) == doctest::Approx(k.kernel(1)).epsilon(1e-14));
  const LinearizationBlock block = two_layer_block(0.3, point.theta_star, 2);
  const Eigen::Vector2d w(point.cokernel[0].coeff(1), point.cokernel[1].coeff(1));
  CHECK((block.entries.transpose() * w).norm() < 1e-12);
  CHECK(w.norm() == doctest::Approx(1.0 / std::sqrt(kPi)).epsilon(1e-12));

  // both roots certify; the minus root as well
  const BifurcationPoint minus = two_layer_bifurcation(0.3, 2, RootSign::minus, 30);
  CHECK(minus.theta_star == doctest::Approx(0.182325).epsilon(1e-5));
  CHECK(minus.transversality != 0.0);
}

TEST_CASE("three-layer admissibility window") {
  const ThreeLayerWindow w = three_layer_window(0.5, -5.0, 2);
  CHECK(w.admissible);
  CHECK(w.theta2_min == doctest::Approx(-6.4).epsilon(1e-12));
  CHECK(w.theta2_max == doctest::Approx(-4.0).epsilon(1e-12));
  CHECK(w.b2_max == doctest::Approx(std::pow(0.5, 0.25)).epsilon(1e-12));

  CHECK_FALSE(three_layer_window(0.5, -3.0, 2).admissible);
  CHECK_FALSE(three_layer_window(0.9, -5.0, 2).admissible);
}

TEST_CASE("three-layer bifurcation certificate at the worked point") {
  const BifurcationPoint point = three_layer_bifurcation(0.5, -5.0, 2, 50);

  CHECK(point.certificates.at("B0") == doctest::Approx(1.078125).epsilon(1e-12));
  CHECK(point.certificates.at("B1") == doctest::Approx(0.65625).epsilon(1e-12));
  CHECK(point.certificates.at("B2") == doctest::Approx(-0.0205078125).epsilon(1e-10));
  CHECK(point.certificates.at("B0") > 0.0);
  CHECK(point.certificates.at("B1") > 0.0);
  CHECK(point.certificates.at("B2") < 0.0);

  // independent bisection oracle confirms the displayed values
  const double b3_oracle = bisect_b3_oracle(0.5, -5.0, 2);
  CHECK(point.b3 == doctest::Approx(b3_oracle).epsilon(1e-12));
  CHECK(std::abs(point.b3 - 0.172607) < 1e-4);
  CHECK(point.theta_star == doctest::Approx(-(1.0 - 5.0 * 0.25) / (b3_oracle * b3_oracle))
                                .epsilon(1e-10));
  CHECK(std::abs(point.theta_star - 8.3912) < 2e-3);

  CHECK(point.det_mode_block_normalized < 1e-10);
  CHECK(point.higher_mode_margin > 1e-6);
  CHECK(point.certificates.at("det_CM33") == doctest::Approx(0.041015625).epsilon(1e-10));
  CHECK(point.certificates.at("det_CM33") > 0.0);
  CHECK(std::abs(point.transversality - (-0.010733)) < 1e-4);
  CHECK(std::abs(point.transversality) > 1e-4);
  CHECK(point.certificates.at("d3") == doctest::Approx(0.758).epsilon(2e-3));
  CHECK(point.certificates.at("d3") ==
        doctest::Approx((1.0 - 5.0 + point.theta_star) * point.b3).epsilon(1e-12));

  // kernel and cokernel really annihilate the mode block
  const LinearizationBlock m1 = three_layer_block(0.5, -5.0, point.b3, point.theta_star, 2);
  Eigen::Vector3d v(point.kernel[0].coeff(1), point.kernel[1].coeff(1), point.kernel[2].coeff(1));
  Eigen::Vector3d w(point.cokernel[0].coeff(1), point.cokernel[1].coeff(1),
                    point.cokernel[2].coeff(1));
  CHECK(v(2) == 1.0);  // pinned normalization
  CHECK((m1.entries * v).norm() < 1e-10);
  CHECK((m1.entries.transpose() * w).norm() < 1e-10);
  CHECK(w.norm() == doctest::Approx(1.0 / std::sqrt(kPi)).epsilon(1e-12));  // unit L2

  // window violations carry typed errors
  try {
    three_layer_bifurcation(0.5, -3.0, 2);
    CHECK(false);
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::param_window);
  }
}

TEST_CASE("three-layer blocks approach their diagonal limits") {
  const BifurcationPoint point = three_layer_bifurcation(0.5, -5.0, 2, 10);
  const double d2 = (0.25 - 1.0) / 0.5;
  const double d3 = (1.0 - 5.0 + point.theta_star) * point.b3;
  for (int freq : {64, 128, 256}) {
    const LinearizationBlock block =
        three_layer_block(0.5, -5.0, point.b3, point.theta_star, freq);
    const Eigen::MatrixXd scaled = -static_cast<double>(freq) * block.entries;
    CHECK(scaled(0, 0) == doctest::Approx(-0.5).epsilon(1e-2));
    CHECK(scaled(1, 1) / (freq / 2.0) == doctest::Approx(d2).epsilon(1e-1));
    CHECK(scaled(2, 2) / (freq / 2.0) == doctest::Approx(d3).epsilon(1e-1));
    // off-diagonal entries decay geometrically
    CHECK(std::abs(scaled(0, 1)) < std::pow(0.5, freq) * freq);
    // determinant margin decays like (d2 d3 / 4) / (2 freq)
    CHECK(2.0 * freq * block.det ==
          doctest::Approx(d2 * d3 / 4.0).epsilon(0.05));
  }
  CHECK(point.certificates.at("asymptotic_margin") ==
        doctest::Approx(std::abs(d2 * d3) / 4.0).epsilon(1e-12));
}

TEST_CASE("FD Jacobian columns are bitwise independent of the worker count") {
  const int m = 2, J = 4, nq = 64;
  const TwoLayerFamily family{m, 0.3, J, nq};
  const BifurcationPoint point = two_layer_bifurcation(0.3, m, RootSign::plus, 5);
  const Problem problem(point, J, nq);
  auto f = [&](const Eigen::VectorXd& x) -> Eigen::VectorXd {
    const auto [th, R] = problem.unpack(x);
    return problem.flatten(family.residual(th, R));
  };
  Eigen::VectorXd x0 = problem.pack(0.45, zero_tuple(2, m, J));
  x0[1] = 1e-3;
  const Eigen::MatrixXd serial = jacobian_fd(f, x0, 1e-6, 1);
  const Eigen::MatrixXd threaded = jacobian_fd(f, x0, 1e-6, 2);
  CHECK((serial - threaded).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("finite-difference Jacobian is exact on linear maps") {
  std::mt19937_64 rng(53);
  std::uniform_real_distribution<double> unit(-1.0, 1.0);
  Eigen::MatrixXd a(4, 3);
  for (int i = 0; i < 4; ++i)
    for (int j = 0; j < 3; ++j) a(i, j) = unit(rng);
  auto f = [&](const Eigen::VectorXd& x) -> Eigen::VectorXd { return a * x; };
  Eigen::VectorXd x0(3);
  x0 << 0.3, -0.7, 2.0;
  const Eigen::MatrixXd jac = jacobian_fd(f, x0, 1e-6);
  CHECK((jac - a).cwiseAbs().maxCoeff() < 1e-9);
}

TEST_CASE("FD Jacobian of the two-layer functional matches the analytic blocks") {
  const int m = 2, J = 8, nq = 256;
  const double b = 0.3, theta = 0.45;
  const TwoLayerFamily family{m, b, J, nq};
  const BifurcationPoint point = two_layer_bifurcation(b, m, RootSign::plus, 10);
  const Problem problem(point, J, nq);

  auto f = [&](const Eigen::VectorXd& x) -> Eigen::VectorXd {
    const auto [th, R] = problem.unpack(x);
    return problem.flatten(family.residual(th, R));
  };
  const Eigen::VectorXd x0 = problem.pack(theta, zero_tuple(2, m, J));
  const Eigen::MatrixXd jac = jacobian_fd(f, x0, 1e-6);

  double block_err = 0.0, leak = 0.0;
  for (int j = 1; j <= J; ++j) {
    const int freq = j * m;
    const Eigen::MatrixXd expected = -freq * two_layer_block(b, theta, freq).entries;
    for (int r = 0; r < 2; ++r) {
      for (int c = 0; c < 2; ++c) {
        const int row = r * J + (j - 1);
        const int col = 1 + c * J + (j - 1);
        block_err = std::max(block_err, std::abs(jac(row, col) - expected(r, c)));
      }
    }
  }
  for (int rj = 1; rj <= J; ++rj) {
    for (int cj = 1; cj <= J; ++cj) {
      if (rj == cj) continue;
      for (int r = 0; r < 2; ++r)
        for (int c = 0; c < 2; ++c)
          leak = std::max(leak, std::abs(jac(r * J + (rj - 1), 1 + c * J + (cj - 1))));
    }
  }
  CHECK(block_err < 1e-6);
  CHECK(leak < 1e-8);
}

TEST_CASE("FD Jacobian of the three-layer functional is singular exactly at the certificate") {
  const int m = 2, J = 6, nq = 256;
  const BifurcationPoint point = three_layer_bifurcation(0.5, -5.0, m, 10);
  const ThreeLayerFamily family{m, 0.5, -5.0, J, nq};
  const Problem problem(point, J, nq);

  auto f = [&](const Eigen::VectorXd& x) -> Eigen::VectorXd {
    const auto [th, R] = problem.unpack(x);
    return problem.flatten(family.residual(th, R));
  };
  const Eigen::VectorXd x0 = problem.pack(point.theta_star, zero_tuple(3, m, J));
  const Eigen::MatrixXd jac = jacobian_fd(f, x0, 1e-6);

  // mode blocks match (-freq) M_freq
  for (int j = 1; j <= J; ++j) {
    const int freq = j * m;
    const Eigen::MatrixXd expected =
        -freq * three_layer_block(0.5, -5.0, point.b3, point.theta_star, freq).entries;
    for (int r = 0; r < 3; ++r)
      for (int c = 0; c < 3; ++c)
        CHECK(std::abs(jac(r * J + (j - 1), 1 + c * J + (j - 1)) - expected(r, c)) < 1e-6);
  }

  // the mode-m block is singular with rank 2
  Eigen::Matrix3d mode_m;
  for (int r = 0; r < 3; ++r)
    for (int c = 0; c < 3; ++c) mode_m(r, c) = jac(r * J, 1 + c * J);
  const Eigen::JacobiSVD<Eigen::Matrix3d> svd(mode_m);
  CHECK(svd.singularValues()(2) < 1e-6 * svd.singularValues()(0));
  CHECK(svd.singularValues()(1) > 1e-3 * svd.singularValues()(0));
}

TEST_CASE("fold-3 three-layer certificate") {
  // admissible window at m=3, b2=0.5: theta2 in (-9.14..., -4)
  const ThreeLayerWindow w = three_layer_window(0.5, -6.0, 3);
  CHECK(w.admissible);
  const BifurcationPoint point = three_layer_bifurcation(0.5, -6.0, 3, 30);
  CHECK(point.b3 > 0.0);
  CHECK(point.b3 < 0.5);
  CHECK(point.theta_star > 0.0);
  CHECK(point.det_mode_block_normalized < 1e-10);
  CHECK(point.higher_mode_margin > 1e-8);
  CHECK(point.transversality != 0.0);
  // closure consistency: 1 + theta2 b2^2 + theta3 b3^2 = 0
  CHECK(std::abs(1.0 - 6.0 * 0.25 + point.theta_star * point.b3 * point.b3) < 1e-12);
}

TEST_CASE("certified kernel annihilates the nonlinear functional's derivative") {
  const int J = 8, nq = 256;
  const BifurcationPoint point = three_layer_bifurcation(0.5, -5.0, 2, 10);
  const ThreeLayerFamily family{2, 0.5, -5.0, J, nq};
  EvenTuple v;
  for (const auto& c : point.kernel) v.push_back(c.truncated(J));
  // directional derivative of G along the kernel at the trivial solution
  const double eps = 1e-6;
  const OddTuple plus = family.residual(point.theta_star, eps * v);
  const OddTuple minus = family.residual(point.theta_star, (-eps) * v);
  const OddTuple derivative = (1.0 / (2.0 * eps)) * (plus - minus);
  CHECK(tuple_norm(derivative) < 1e-8 * tuple_norm(v, {1, 0.0}));
}

TEST_CASE("linearization split a + A = DG with a vanishing at trivial data") {
  const int m = 2, J = 6, nq = 256;
  const BifurcationPoint point = three_layer_bifurcation(0.5, -5.0, m, 10);
  const ThreeLayerFamily family{m, 0.5, -5.0, J, nq};

  const EvenTuple zero = zero_tuple(3, m, J);
  const LinearizedSplit at_trivial = decompose_linearization(family, point.theta_star, zero);
  std::mt19937_64 rng(59);
  std::uniform_real_distribution<double> unit(-1.0, 1.0);
  EvenTuple h;
  for (int c = 0; c < 3; ++c) {
    std::vector<double> coeffs(static_cast<std::size_t>(J));
    for (double& v : coeffs) v = unit(rng);
    h.emplace_back(m, coeffs);
  }
  CHECK(tuple_norm(at_trivial.tangential(h)) < 1e-12);

  // small nontrivial data: a + A = DG and |a[h]| <= C |G| |h|
  EvenTuple r = zero;
  r[0] = EvenSeries(m, {1e-3, 0, 0, 0, 0, 0});
  r[2] = EvenSeries(m, {-5e-4, 0, 0, 0, 0, 0});
  const LinearizedSplit split = decompose_linearization(family, point.theta_star, r);
  const OddTuple sum = split.tangential(h) + split.remainder(h);
  const OddTuple full = split.full(h);
  CHECK(tuple_norm(sum - full) < 1e-10);

  const double g_norm = tuple_norm(family.residual(point.theta_star, r));
  const double h_norm = tuple_norm(h, {1, 0.0});
  CHECK(tuple_norm(split.tangential(h)) <= 100.0 * g_norm * h_norm);
}
