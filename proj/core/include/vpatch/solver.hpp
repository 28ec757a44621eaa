#pragma once

#include <Eigen/Dense>
#include <limits>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "vpatch/spectral.hpp"

namespace vpatch {

struct ContinuationConfig {
  double step = 1e-3;        // pseudo-arclength / first-amplitude step ds
  int max_steps = 10;
  double newton_tol = 1e-11;  // on the recomputed residual
  int max_newton_iters = 12;
  int truncation = 64;        // J
  int quadrature_nodes = 512;
  enum class Mode { newton, nash_moser } mode = Mode::newton;
  double fd_step = 1e-6;
  int threads = 0;  // 0 = hardware concurrency

  // Nash-Moser schedule and trace norms
  double cutoff_base = 0.0;  // N_0; 0 selects 2*m
  double cutoff_ratio = 1.5;
  int nm_max_iters = 24;
  int nm_exact_iterations = 0;  // >0: run exactly this many corrections (trace study)
  int trace_order = 2;    // k0 in the trace norms
  int smoothing_gain = 2; // beta: higher-norm proxy measured at k0+1+beta
};

/// One point on a solution branch. The residual is recomputed from the stored
/// perturbations, never trusted from the iteration that produced them.
struct BranchState {
  double amplitude = 0.0;  // <v_hat, R> with v_hat the unit-L2 kernel
  double theta = 0.0;
  EvenTuple perturbations;
  double residual = 0.0;
  double circulation = 0.0;
  double exterior_velocity = 0.0;  // sup |u| on the circle of radius 2 b1
  double min_gap = 0.0;
  double constraint_residual = 0.0;
  double b3 = std::numeric_limits<double>::quiet_NaN();
  int newton_iterations = 0;
  bool fold_flag = false;
  bool near_trivial = false;
};

/// Family adapter binding a certified bifurcation point to the nonlinear
/// functional, the packed unknown layout (theta, coefficients per layer) and
/// the unit kernel used for amplitude constraints.
class Problem {
public:
  Problem(BifurcationPoint point, int truncation, int quadrature_nodes);

  const BifurcationPoint& point() const noexcept { return point_; }
  Family family() const noexcept { return point_.family; }
  int fold() const noexcept { return point_.fold; }
  int layer_count() const noexcept { return point_.layer_count(); }
  int truncation() const noexcept { return truncation_; }
  int quadrature_nodes() const noexcept { return quadrature_nodes_; }
  double theta_star() const noexcept { return point_.theta_star; }
  const EvenTuple& unit_kernel() const noexcept { return unit_kernel_; }
  ThreeLayerFamily three_layer_family() const;

  OddTuple residual_series(double theta, const EvenTuple& R) const;
  PatchSystem system(double theta, const EvenTuple& R) const;

  int dimension() const noexcept { return 1 + layer_count() * truncation_; }
  Eigen::VectorXd pack(double theta, const EvenTuple& R) const;
  std::pair<double, EvenTuple> unpack(const Eigen::VectorXd& x) const;
  Eigen::VectorXd flatten(const OddTuple& f) const;
  /// Gradient of x -> <v_hat, R(x)>; zero in the theta slot.
  Eigen::VectorXd amplitude_row() const;

  /// Max over components of the k=0 spectral norm.
  double residual_norm(const OddTuple& f) const;

  BranchState make_state(double theta, const EvenTuple& R) const;

private:
  BifurcationPoint point_;
  int truncation_;
  int quadrature_nodes_;
  EvenTuple unit_kernel_;
};

/// Damped Newton on the augmented system {stationarity = 0, <v_hat,R> = s}.
BranchState newton_solve(const Problem& problem, double theta_init, const EvenTuple& R_init,
                         double amplitude, const ContinuationConfig& config);

struct Branch {
  std::vector<BranchState> states;
  std::string stop_reason;
  double max_amplitude = 0.0;
  int fold_count = 0;
};

/// Pseudo-arclength continuation from the trivial solution at the certified
/// point; the first corrector uses the amplitude constraint, later ones the
/// secant arclength constraint. Folds are reported per state, not fatal.
Branch continue_branch(const Problem& problem, const ContinuationConfig& config);

struct NashMoserTrace {
  std::vector<double> correction_norm;  // |R_{n+1} - R_n|
  std::vector<double> residual_norm;    // |G_s(R_n)|
  std::vector<double> cutoff;           // N_n
  std::vector<double> higher_norm;      // |T_s^{-1} G_s(R_n)| in the k0+1+beta norm
};

/// Newton-type iteration with per-step smoothing and the approximate inverse
/// T_s = dG/dtheta (v.h) + A (I-P); three-layer family only.
std::pair<BranchState, NashMoserTrace> nash_moser_solve(const Problem& problem, double amplitude,
                                                        const ContinuationConfig& config);

struct VerifyTolerances {
  double residual = 0.0;  // 0 selects 2 * newton_tol
  double circulation = 1e-12;
  double exterior_velocity = 1e-6;
  double symmetry = 1e-12;
  double amplitude = 1e-12;
};

struct VerifyReport {
  bool pass = false;
  std::map<std::string, double> metrics;
  std::vector<std::string> failures;
};

/// Recomputes the residual at strict * N_q nodes over 2J modes together with
/// the physics diagnostics; PASS iff every configured tolerance holds.
VerifyReport verify_solution(const Problem& problem, const BranchState& state, int strict,
                             const ContinuationConfig& config, VerifyTolerances tol = {});

}  // namespace vpatch
