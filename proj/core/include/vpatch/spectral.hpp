#pragma once

#include <Eigen/Dense>
#include <functional>
#include <map>
#include <string>

#include "vpatch/contour.hpp"

namespace vpatch {

/// Per-mode block M_n of the linearized stationarity functional at a trivial
/// (radial) solution; the mode-n Fourier coefficients of the linearization act
/// as (-n) M_n on the perturbation coefficients.
struct LinearizationBlock {
  int frequency = 0;  // absolute Fourier frequency
  Eigen::MatrixXd entries;
  double det = 0.0;
};

LinearizationBlock two_layer_block(double b, double theta, int frequency);

/// Rescaled determinant Delta_m(theta) = (4 m^2 / b) det(M_m(theta)): the
/// quadratic m(m-1)theta^2 - ((m-1)^2 + b^2 m^2 - b^{2m}) theta + b^2 m(m-1).
double two_layer_delta(double b, double theta, int m);

/// Delta_m at the zero-mean strength theta = b^2: m b^2 (1-b^2) + b^2 (b^{2m}-1),
/// which never vanishes on 0 < b < 1.
double two_layer_delta_zero_mean(double b, int m);

/// Largest admissible inner radius: the root of m - 1 - b m - b^m in (0, 1).
double two_layer_critical_b(int m);

struct TwoLayerRoots {
  double theta_minus;
  double theta_plus;
  double critical_b;
};

/// Both strengths where the mode-m block degenerates; requires 0 < b < critical_b.
TwoLayerRoots theta_roots(double b, int m);

struct TwoLayerKernel {
  Eigen::Vector2d kernel;           // null vector of M_m, pinned normalization
  Eigen::Vector2d image_direction;  // spanning vector of Im(M_m)
  double transversality;            // nonzero certificate tau
};

TwoLayerKernel two_layer_kernel(double b, int m, double theta, double root_tol = 1e-8);

LinearizationBlock three_layer_block(double b2, double theta2, double b3, double theta3,
                                     int frequency);

struct ThreeLayerWindow {
  bool admissible = false;
  double b2_max = 0.0;
  double theta2_min = 0.0;
  double theta2_max = 0.0;
};

/// Admissible (b2, theta2) window of the zero-circulation three-layer family.
ThreeLayerWindow three_layer_window(double b2, double theta2, int m);

enum class Family { two_layer, three_layer };
enum class RootSign { minus, plus };

/// Certified bifurcation point: parameters, kernel/cokernel of the mode-m
/// block, transversality value and higher-mode nondegeneracy margins.
struct BifurcationPoint {
  Family family = Family::two_layer;
  int fold = 2;
  double theta_star = 0.0;

  // two-layer parameters
  double b = 0.0;
  // three-layer parameters
  double b2 = 0.0;
  double theta2 = 0.0;
  double b3 = 0.0;

  EvenTuple kernel;    // supported on mode m; pinned normalization
  OddTuple cokernel;   // supported on mode m; unit L2
  double transversality = 0.0;
  int n_max = 50;
  double higher_mode_margin = 0.0;        // min_{2<=n<=n_max} |det M_{nm}|
  double det_mode_block_normalized = 0.0; // |det M_m| after row normalization

  std::map<std::string, double> certificates;

  int layer_count() const noexcept { return family == Family::two_layer ? 2 : 3; }
};

BifurcationPoint two_layer_bifurcation(double b, int m, RootSign sign, int n_max = 50);

/// Same, but at a caller-supplied strength; rejects non-roots (NOT_A_ROOT),
/// in particular the zero-mean strength theta = b^2.
BifurcationPoint two_layer_bifurcation_at(double b, int m, double theta, int n_max = 50);

BifurcationPoint three_layer_bifurcation(double b2, double theta2, int m, int n_max = 50);

/// Dense central-difference Jacobian; column i uses step step_scale*max(1,|x_i|).
/// Columns are evaluated in parallel with a deterministic layout.
Eigen::MatrixXd jacobian_fd(const std::function<Eigen::VectorXd(const Eigen::VectorXd&)>& f,
                            const Eigen::VectorXd& x, double step_scale = 1e-6,
                            int threads = 0);

/// Split of the linearized three-layer functional DG = a + A where
/// a[h] multiplies h_1' by the tangential boundary velocity (and so vanishes
/// at stationary states) and A carries the rest.
struct LinearizedSplit {
  std::function<OddTuple(const EvenTuple&)> tangential;  // a
  std::function<OddTuple(const EvenTuple&)> remainder;   // A = DG - a
  std::function<OddTuple(const EvenTuple&)> full;        // DG (directional FD)
};

LinearizedSplit decompose_linearization(const ThreeLayerFamily& family, double theta3,
                                        const EvenTuple& R, double fd_step = 1e-6);

}  // namespace vpatch
