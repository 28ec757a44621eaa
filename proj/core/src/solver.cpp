#include "vpatch/solver.hpp"

#include <cmath>
#include <numbers>
#include <sstream>

#include "parallel.hpp"

namespace vpatch {

namespace {

constexpr double kPi = std::numbers::pi;
constexpr double kMinLineStep = 9.5367431640625e-7;  // 2^-20

void validate(const ContinuationConfig& config) {
  if (!(config.step > 0.0)) fail(ErrorCode::invalid_config, "step must be positive");
  if (!(config.newton_tol > 0.0)) fail(ErrorCode::invalid_config, "newton_tol must be positive");
  if (config.max_newton_iters < 1 || config.max_steps < 1 || config.nm_max_iters < 1)
    fail(ErrorCode::invalid_config, "iteration limits must be >= 1");
  if (!(config.fd_step > 0.0)) fail(ErrorCode::invalid_config, "fd_step must be positive");
  if (!(config.cutoff_ratio > 1.0))
    fail(ErrorCode::invalid_config, "cutoff_ratio must exceed 1");
  if (config.trace_order < 0 || config.smoothing_gain < 0)
    fail(ErrorCode::invalid_config, "trace norms need non-negative orders");
}

double lu_det_sign(const Eigen::FullPivLU<Eigen::MatrixXd>& lu) {
  double sign = static_cast<double>(lu.permutationP().determinant()) *
                static_cast<double>(lu.permutationQ().determinant());
  const auto diag = lu.matrixLU().diagonal();
  for (Eigen::Index i = 0; i < diag.size(); ++i) {
    if (diag[i] > 0.0) continue;
    if (diag[i] < 0.0)
      sign = -sign;
    else
      return 0.0;
  }
  return sign;
}

}  // namespace

Problem::Problem(BifurcationPoint point, int truncation, int quadrature_nodes)
    : point_(std::move(point)), truncation_(truncation), quadrature_nodes_(quadrature_nodes) {
  if (truncation_ < 1) fail(ErrorCode::invalid_config, "truncation must be >= 1");
  EvenTuple padded;
  for (const auto& c : point_.kernel) padded.push_back(c.truncated(truncation_));
  unit_kernel_ = l2_normalized(padded);
}

ThreeLayerFamily Problem::three_layer_family() const {
  if (family() != Family::three_layer)
    fail(ErrorCode::domain, "operation requires the three-layer family");
  return ThreeLayerFamily{fold(), point_.b2, point_.theta2, truncation_, quadrature_nodes_};
}

OddTuple Problem::residual_series(double theta, const EvenTuple& R) const {
  if (family() == Family::two_layer) {
    const TwoLayerFamily fam{fold(), point_.b, truncation_, quadrature_nodes_};
    return fam.residual(theta, R);
  }
  const ThreeLayerFamily fam{fold(), point_.b2, point_.theta2, truncation_, quadrature_nodes_};
  return fam.residual(theta, R);
}

PatchSystem Problem::system(double theta, const EvenTuple& R) const {
  if (family() == Family::two_layer) {
    const TwoLayerFamily fam{fold(), point_.b, truncation_, quadrature_nodes_};
    return fam.system(theta, R);
  }
  const ThreeLayerFamily fam{fold(), point_.b2, point_.theta2, truncation_, quadrature_nodes_};
  return fam.system(theta, R);
}

Eigen::VectorXd Problem::pack(double theta, const EvenTuple& R) const {
  Eigen::VectorXd x(dimension());
  x[0] = theta;
  int idx = 1;
  for (int c = 0; c < layer_count(); ++c) {
    const EvenSeries padded = R[static_cast<std::size_t>(c)].truncated(truncation_);
    for (int j = 1; j <= truncation_; ++j) x[idx++] = padded.coeff(j);
  }
  return x;
}

std::pair<double, EvenTuple> Problem::unpack(const Eigen::VectorXd& x) const {
  EvenTuple R;
  int idx = 1;
  for (int c = 0; c < layer_count(); ++c) {
    std::vector<double> coeffs(static_cast<std::size_t>(truncation_));
    for (int j = 0; j < truncation_; ++j) coeffs[static_cast<std::size_t>(j)] = x[idx++];
    R.emplace_back(fold(), std::move(coeffs));
  }
  return {x[0], std::move(R)};
}

Eigen::VectorXd Problem::flatten(const OddTuple& f) const {
  Eigen::VectorXd out(layer_count() * truncation_);
  int idx = 0;
  for (int c = 0; c < layer_count(); ++c) {
    const OddSeries padded = f[static_cast<std::size_t>(c)].truncated(truncation_);
    for (int j = 1; j <= truncation_; ++j) out[idx++] = padded.coeff(j);
  }
  return out;
}

Eigen::VectorXd Problem::amplitude_row() const {
  Eigen::VectorXd row = Eigen::VectorXd::Zero(dimension());
  int idx = 1;
  for (int c = 0; c < layer_count(); ++c) {
    const EvenSeries& v = unit_kernel_[static_cast<std::size_t>(c)];
    for (int j = 1; j <= truncation_; ++j, ++idx) {
      if (j <= v.truncation()) row[idx] = kPi * v.coeff(j);
    }
  }
  return row;
}

double Problem::residual_norm(const OddTuple& f) const {
  double worst = 0.0;
  for (const auto& c : f) worst = std::max(worst, weighted_norm(c));
  return worst;
}

BranchState Problem::make_state(double theta, const EvenTuple& R) const {
  BranchState st;
  st.theta = theta;
  st.perturbations = R;
  st.amplitude = l2_inner(unit_kernel_, R);
  st.residual = residual_norm(residual_series(theta, R));
  const PatchSystem sys = system(theta, R);
  st.circulation = total_circulation(sys);
  st.min_gap = sys.min_gap();
  st.exterior_velocity = exterior_velocity_sup(sys, 2.0 * sys.layer(0).radius, 64);
  if (family() == Family::three_layer) {
    const ThreeLayerFamily fam{fold(), point_.b2, point_.theta2, truncation_, quadrature_nodes_};
    st.b3 = fam.closure_radius(theta, R);
  }
  return st;
}

namespace {

struct CorrectorResult {
  Eigen::VectorXd x;
  int iterations = 0;
  double border_det_sign = 0.0;
  double constraint_residual = 0.0;
};

// Damped Newton on the bordered system {residual(x) = 0, row.x = rhs}.
CorrectorResult correct(const Problem& problem, Eigen::VectorXd x,
                        const Eigen::VectorXd& constraint_row, double constraint_rhs,
                        const ContinuationConfig& config) {
  auto residual_vec = [&](const Eigen::VectorXd& y) -> Eigen::VectorXd {
    const auto [theta, R] = problem.unpack(y);
    return problem.flatten(problem.residual_series(theta, R));
  };

  struct Point {
    Eigen::VectorXd r;
    double cons = 0.0;
    double merit = 0.0;
    double res_norm = 0.0;
  };
  auto evaluate = [&](const Eigen::VectorXd& y) -> Point {
    const auto [theta, R] = problem.unpack(y);
    const OddTuple series = problem.residual_series(theta, R);
    Point p;
    p.res_norm = problem.residual_norm(series);
    p.r = problem.flatten(series);
    p.cons = constraint_row.dot(y) - constraint_rhs;
    p.merit = std::sqrt(p.r.squaredNorm() + p.cons * p.cons);
    return p;
  };

  CorrectorResult out;
  Point cur = evaluate(x);

  for (int iter = 0; iter <= config.max_newton_iters; ++iter) {
    if (cur.res_norm < config.newton_tol && std::abs(cur.cons) <= 1e-12) {
      out.x = x;
      out.iterations = iter;
      out.constraint_residual = std::abs(cur.cons);
      return out;
    }
    if (iter == config.max_newton_iters) break;

    const Eigen::MatrixXd jac_g =
        jacobian_fd(residual_vec, x, config.fd_step, config.threads);
    Eigen::MatrixXd jac(jac_g.rows() + 1, jac_g.cols());
    jac.topRows(jac_g.rows()) = jac_g;
    jac.bottomRows(1) = constraint_row.transpose();

    const Eigen::FullPivLU<Eigen::MatrixXd> lu(jac);
    if (lu.rcond() < 1e-14)
      fail(ErrorCode::singular_jacobian, "bordered Jacobian condition estimate above 1e14");
    out.border_det_sign = lu_det_sign(lu);

    Eigen::VectorXd rhs(jac.rows());
    rhs.head(cur.r.size()) = -cur.r;
    rhs[cur.r.size()] = -cur.cons;
    const Eigen::VectorXd dx = lu.solve(rhs);

    bool accepted = false;
    bool nesting_only = true;
    for (double lambda = 1.0; lambda >= kMinLineStep; lambda *= 0.5) {
      const Eigen::VectorXd trial = x + lambda * dx;
      try {
        const Point next = evaluate(trial);
        nesting_only = false;
        if (next.merit <= (1.0 - 1e-4 * lambda) * cur.merit ||
            next.res_norm < config.newton_tol) {
          x = trial;
          cur = next;
          accepted = true;
          break;
        }
      } catch (const Error& e) {
        if (e.code() != ErrorCode::nesting_violation && e.code() != ErrorCode::negative_radicand &&
            e.code() != ErrorCode::not_nested)
          throw;
      }
    }
    if (!accepted) {
      if (nesting_only)
        fail(ErrorCode::nesting_violation, "every line-search step violates nesting");
      fail(ErrorCode::no_convergence, "line search stalled");
    }
  }
  std::ostringstream msg;
  msg << "no convergence in " << config.max_newton_iters << " iterations";
  fail(ErrorCode::no_convergence, msg.str());
}

EvenTuple padded_kernel_multiple(const Problem& problem, double scale) {
  EvenTuple out;
  for (const auto& c : problem.unit_kernel())
    out.push_back((scale * c).truncated(problem.truncation()));
  return out;
}

}  // namespace

BranchState newton_solve(const Problem& problem, double theta_init, const EvenTuple& R_init,
                         double amplitude, const ContinuationConfig& config) {
  validate(config);
  const Eigen::VectorXd x0 = problem.pack(theta_init, R_init);
  const CorrectorResult res =
      correct(problem, x0, problem.amplitude_row(), amplitude, config);
  const auto [theta, R] = problem.unpack(res.x);
  BranchState st = problem.make_state(theta, R);
  st.newton_iterations = res.iterations;
  st.constraint_residual = std::abs(st.amplitude - amplitude);
  return st;
}

Branch continue_branch(const Problem& problem, const ContinuationConfig& config) {
  validate(config);
  Branch out;
  const double ds = config.step;
  Eigen::VectorXd prev2 = problem.pack(problem.theta_star(),
                                       zero_tuple(problem.layer_count(), problem.fold(),
                                                  problem.truncation()));
  Eigen::VectorXd prev1;
  double prev_sign = 0.0;

  for (int step = 1; step <= config.max_steps; ++step) {
    try {
      CorrectorResult res;
      if (step == 1) {
        const Eigen::VectorXd x0 =
            problem.pack(problem.theta_star(), padded_kernel_multiple(problem, ds));
        res = correct(problem, x0, problem.amplitude_row(), ds, config);
      } else {
        Eigen::VectorXd tangent = prev1 - prev2;
        tangent.normalize();
        const Eigen::VectorXd x0 = prev1 + ds * tangent;
        res = correct(problem, x0, tangent, tangent.dot(prev1) + ds, config);
      }
      const auto [theta, R] = problem.unpack(res.x);
      BranchState st = problem.make_state(theta, R);
      st.newton_iterations = res.iterations;
      st.constraint_residual = res.constraint_residual;
      if (step == 1) st.constraint_residual = std::abs(st.amplitude - ds);
      if (prev_sign != 0.0 && res.border_det_sign != 0.0 &&
          res.border_det_sign != prev_sign) {
        st.fold_flag = true;
        ++out.fold_count;
      }
      if (res.border_det_sign != 0.0) prev_sign = res.border_det_sign;
      st.near_trivial = step > 1 && l2_norm(R) < 0.25 * ds;
      out.max_amplitude = std::max(out.max_amplitude, std::abs(st.amplitude));
      prev2 = prev1.size() ? prev1 : prev2;
      prev1 = res.x;
      out.states.push_back(std::move(st));
    } catch (const Error& e) {
      out.stop_reason = to_string(e.code());
      return out;
    }
  }
  out.stop_reason = "max_steps";
  return out;
}

std::pair<BranchState, NashMoserTrace> nash_moser_solve(const Problem& problem, double amplitude,
                                                        const ContinuationConfig& config) {
  validate(config);
  if (problem.family() != Family::three_layer)
    fail(ErrorCode::domain, "the smoothed iteration is defined for the three-layer family");
  const ThreeLayerFamily fam{problem.fold(), problem.point().b2, problem.point().theta2,
                             problem.truncation(), problem.quadrature_nodes()};
  const EvenTuple& vhat = problem.unit_kernel();
  const int dim = problem.layer_count() * problem.truncation();
  const NormSpec low{config.trace_order, 0.0};
  const NormSpec mid{config.trace_order + 1, 0.0};
  const NormSpec high{config.trace_order + 1 + config.smoothing_gain, 0.0};
  const double cutoff_base =
      config.cutoff_base > 0.0 ? config.cutoff_base : 2.0 * problem.fold();

  auto coeffs_to_tuple = [&](const Eigen::VectorXd& v) {
    EvenTuple out;
    int idx = 0;
    for (int c = 0; c < problem.layer_count(); ++c) {
      std::vector<double> coeffs(static_cast<std::size_t>(problem.truncation()));
      for (int j = 0; j < problem.truncation(); ++j) coeffs[static_cast<std::size_t>(j)] = v[idx++];
      out.emplace_back(problem.fold(), std::move(coeffs));
    }
    return out;
  };

  auto physical = [&](const EvenTuple& Rn) {
    const double along = l2_inner(vhat, Rn);
    const EvenTuple complement = Rn - along * vhat;
    return std::make_pair(problem.theta_star() + along, amplitude * vhat + complement);
  };

  EvenTuple Rn = zero_tuple(problem.layer_count(), problem.fold(), problem.truncation());
  NashMoserTrace trace;
  bool converged = false;
  const bool fixed_run = config.nm_exact_iterations > 0;
  const int max_iters = fixed_run ? config.nm_exact_iterations : config.nm_max_iters;

  for (int n = 0; n <= max_iters; ++n) {
    const auto [theta_n, R_phys] = physical(Rn);
    const OddTuple residual = fam.residual(theta_n, R_phys);
    const double b_n = tuple_norm(residual, low);
    if (fixed_run ? n == max_iters : b_n < config.newton_tol) {
      converged = true;
      break;
    }
    if (n == max_iters) break;

    // T_s(R)[h] = dG/dtheta (vhat.h) + A(theta, R)[(I-P)h]
    const double dtheta = config.fd_step * std::max(1.0, std::abs(theta_n));
    const OddTuple g_plus = fam.residual(theta_n + dtheta, R_phys);
    const OddTuple g_minus = fam.residual(theta_n - dtheta, R_phys);
    const OddTuple dG_dtheta = (1.0 / (2.0 * dtheta)) * (g_plus - g_minus);
    const Eigen::VectorXd dG_dtheta_vec = problem.flatten(dG_dtheta);
    const LinearizedSplit split = decompose_linearization(fam, theta_n, R_phys, config.fd_step);

    Eigen::MatrixXd ts(dim, dim);
    detail::parallel_for(dim, config.threads, [&](int col) {
      Eigen::VectorXd e = Eigen::VectorXd::Zero(dim);
      e[col] = 1.0;
      const EvenTuple h = coeffs_to_tuple(e);
      const double along = l2_inner(vhat, h);
      const EvenTuple h_complement = h - along * vhat;
      const Eigen::VectorXd a_part = along * dG_dtheta_vec;
      const Eigen::VectorXd rem = problem.flatten(split.remainder(h_complement));
      ts.col(col) = a_part + rem;
    });

    const Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(ts);
    if (qr.rank() < dim)
      fail(ErrorCode::t_s_singular, "approximate-inverse system is rank deficient");
    const Eigen::VectorXd z = qr.solve(problem.flatten(residual));
    const EvenTuple z_tuple = coeffs_to_tuple(z);

    const double cutoff = cutoff_base * std::pow(config.cutoff_ratio, n);
    const EvenTuple correction = smooth(z_tuple, cutoff);

    trace.residual_norm.push_back(b_n);
    trace.higher_norm.push_back(tuple_norm(z_tuple, high));
    trace.cutoff.push_back(cutoff);
    trace.correction_norm.push_back(tuple_norm(correction, mid));

    Rn = Rn - correction;
  }

  if (!converged)
    fail(ErrorCode::no_convergence, "smoothed iteration did not reach the residual tolerance");

  const auto [theta_final, R_final] = physical(Rn);
  BranchState st = problem.make_state(theta_final, R_final);
  st.newton_iterations = static_cast<int>(trace.residual_norm.size());
  st.constraint_residual = std::abs(st.amplitude - amplitude);
  return {std::move(st), std::move(trace)};
}

VerifyReport verify_solution(const Problem& problem, const BranchState& state, int strict,
                             const ContinuationConfig& config, VerifyTolerances tol) {
  if (strict < 1) fail(ErrorCode::domain, "strict factor must be >= 1");
  if (tol.residual == 0.0) tol.residual = 2.0 * config.newton_tol;

  VerifyReport report;
  const int truncation2 = 2 * problem.truncation();
  const int min_nodes = 2 * (truncation2 * problem.fold() + 2);
  int nodes = strict * problem.quadrature_nodes();
  if (nodes < min_nodes) nodes = min_nodes;
  if (nodes % 2 != 0) ++nodes;

  EvenTuple padded;
  for (const auto& c : state.perturbations) padded.push_back(c.truncated(truncation2));

  try {
    Problem strict_problem(problem.point(), truncation2, nodes);
    const PatchSystem sys = strict_problem.system(state.theta, padded);
    const OddTuple residual = stationarity(sys);
    const auto samples = stationarity_samples(sys);

    report.metrics["residual_strict"] = strict_problem.residual_norm(residual);
    double symmetry = 0.0, zero_mean = 0.0;
    for (const auto& s : samples) {
      symmetry = std::max(symmetry, sys.grid().off_fold_mass(s, problem.fold()));
      zero_mean = std::max(zero_mean, std::abs(sys.grid().mean(s)));
    }
    report.metrics["symmetry_defect"] = symmetry;
    report.metrics["zero_mean_defect"] = zero_mean;
    report.metrics["circulation"] = total_circulation(sys);
    report.metrics["min_gap"] = sys.min_gap();
    const double b1 = sys.layer(0).radius;
    report.metrics["exterior_velocity_1.5"] = exterior_velocity_sup(sys, 1.5 * b1, 64);
    report.metrics["exterior_velocity_2"] = exterior_velocity_sup(sys, 2.0 * b1, 64);
    report.metrics["exterior_velocity_4"] = exterior_velocity_sup(sys, 4.0 * b1, 64);
    report.metrics["amplitude_defect"] =
        std::abs(l2_inner(strict_problem.unit_kernel(), padded) - state.amplitude);

    if (report.metrics["residual_strict"] > tol.residual) report.failures.push_back("residual");
    if (symmetry > tol.symmetry) report.failures.push_back("symmetry");
    if (zero_mean > tol.symmetry) report.failures.push_back("zero_mean");
    if (report.metrics["amplitude_defect"] > tol.amplitude)
      report.failures.push_back("amplitude");
    if (problem.family() == Family::three_layer) {
      if (std::abs(report.metrics["circulation"]) > tol.circulation)
        report.failures.push_back("circulation");
      if (report.metrics["exterior_velocity_2"] > tol.exterior_velocity)
        report.failures.push_back("exterior_velocity");
      if (report.metrics["exterior_velocity_1.5"] > 1e-14 &&
          report.metrics["exterior_velocity_4"] >= report.metrics["exterior_velocity_1.5"])
        report.failures.push_back("exterior_decay");
    }
  } catch (const Error& e) {
    report.failures.push_back(to_string(e.code()));
  }

  report.pass = report.failures.empty();
  return report;
}

}  // namespace vpatch
