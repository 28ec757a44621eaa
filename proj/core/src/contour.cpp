#include "vpatch/contour.hpp"

#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>

namespace vpatch {

namespace {

constexpr double kPi = std::numbers::pi;
constexpr double kTwoPi = 2.0 * std::numbers::pi;

// Fraction of the outer radius below which a field evaluation point counts as
// sitting on a boundary.
constexpr double kStandoffFraction = 1e-6;

}  // namespace

PatchSystem::PatchSystem(int fold, std::vector<LayerConfig> layers, EvenTuple perturbations,
                         int quadrature_nodes)
    : fold_(fold), layers_(std::move(layers)), perturbations_(std::move(perturbations)),
      grid_(quadrature_nodes) {
  if (layers_.empty()) fail(ErrorCode::domain, "system needs at least one layer");
  if (perturbations_.size() != layers_.size())
    fail(ErrorCode::domain, "one perturbation per layer required");
  for (std::size_t i = 0; i < layers_.size(); ++i) {
    if (layers_[i].radius <= 0.0) fail(ErrorCode::domain, "layer radii must be positive");
    if (i + 1 < layers_.size() && layers_[i + 1].radius >= layers_[i].radius)
      fail(ErrorCode::domain, "layer radii must be strictly decreasing");
    if (perturbations_[i].fold() != fold_)
      fail(ErrorCode::domain, "perturbation fold mismatch");
  }

  truncation_ = 0;
  for (const auto& p : perturbations_) truncation_ = std::max(truncation_, p.truncation());
  for (auto& p : perturbations_) p = p.truncated(truncation_);

  const std::int64_t max_freq = static_cast<std::int64_t>(truncation_) * fold_ + 1;
  if (grid_.size() < 2 * (max_freq + 1))
    fail(ErrorCode::quadrature_underresolved,
         "node count too small for the requested truncation");

  const int n = grid_.size();
  radius_samples_.reserve(layers_.size());
  slope_samples_.reserve(layers_.size());
  for (std::size_t i = 0; i < layers_.size(); ++i) {
    auto rho = grid_.sample(perturbations_[i]);
    for (double& v : rho) v += layers_[i].radius;
    auto drho = grid_.sample(perturbations_[i].derivative());
    radius_samples_.push_back(std::move(rho));
    slope_samples_.push_back(std::move(drho));
  }

  min_gap_ = std::numeric_limits<double>::infinity();
  for (int q = 0; q < n; ++q) {
    for (std::size_t i = 0; i + 1 < layers_.size(); ++i)
      min_gap_ = std::min(min_gap_, radius_samples_[i][static_cast<std::size_t>(q)] -
                                        radius_samples_[i + 1][static_cast<std::size_t>(q)]);
    min_gap_ = std::min(min_gap_, radius_samples_.back()[static_cast<std::size_t>(q)]);
  }
  if (!(min_gap_ > 0.0)) fail(ErrorCode::nesting_violation, "boundaries cross or collapse");

  outer_max_radius_ = 0.0;
  for (double v : radius_samples_.front()) outer_max_radius_ = std::max(outer_max_radius_, v);
}

PatchSystem PatchSystem::refined(int factor) const {
  return PatchSystem(fold_, layers_, perturbations_, grid_.size() * factor);
}

BoundaryVelocity interaction(const PatchSystem& system, int source, int target) {
  const Grid& g = system.grid();
  const int n = g.size();
  const double w = g.weight();
  const auto rho_s = system.rho(source);
  const auto drho_s = system.drho(source);
  const auto rho_t = system.rho(target);
  const auto drho_t = system.drho(target);

  BoundaryVelocity out;
  out.u_theta.assign(static_cast<std::size_t>(n), 0.0);
  out.u_r.assign(static_cast<std::size_t>(n), 0.0);

  if (source != target) {
    // Smooth kernel: plain trapezoid, summed in target-relative offset order so
    // sampled fields stay exactly m-fold equivariant.
    for (int q = 0; q < n; ++q) {
      const double rq = rho_t[static_cast<std::size_t>(q)];
      double acc_th = 0.0, acc_r = 0.0;
      for (int o = 0; o < n; ++o) {
        const std::size_t l = static_cast<std::size_t>((q + o) % n);
        const double rl = rho_s[l];
        const double c = g.cos_at(o);
        const double s = g.sin_at(o);
        const double kernel = std::log(rq * rq + rl * rl - 2.0 * rq * rl * c);
        acc_th += kernel * (drho_s[l] * s + rl * c);
        acc_r += kernel * (drho_s[l] * c - rl * s);
      }
      out.u_theta[static_cast<std::size_t>(q)] = -w * acc_th;
      out.u_r[static_cast<std::size_t>(q)] = -w * acc_r;
    }
    return out;
  }

  // Self-interaction. The log(2-2cos) part acts diagonally on Fourier modes
  // (closed form below); the smooth remainder log(|z(x)-z(y)|^2/(2-2cos(x-y)))
  // is trapezoid-integrated with its continuous limit on the diagonal.
  std::vector<double> log_flat(static_cast<std::size_t>(n), 0.0);
  for (int o = 1; o < n; ++o)
    log_flat[static_cast<std::size_t>(o)] = std::log(2.0 - 2.0 * g.cos_at(o));

  // u_L = -int log(2-2cos(x-y)) z'(y) dy has angular part 2 pi b and radial
  // part -2 pi sum_j a_j sin(j m x).
  const auto& pert = system.perturbation(source);
  const OddSeries radial_log_part(pert.fold(),
                                  std::vector<double>(pert.coeffs().begin(), pert.coeffs().end()));
  const std::vector<double> ur_log = g.sample(radial_log_part);
  const double uth_log = kTwoPi * system.layer(source).radius;

  for (int q = 0; q < n; ++q) {
    const double rq = rho_t[static_cast<std::size_t>(q)];
    double acc_th = 0.0, acc_r = 0.0;
    {
      // Diagonal limit of the remainder kernel: log(rho^2 + rho'^2).
      const double diag = std::log(rq * rq + drho_t[static_cast<std::size_t>(q)] *
                                                 drho_t[static_cast<std::size_t>(q)]);
      acc_th += diag * rq;
      acc_r += diag * drho_t[static_cast<std::size_t>(q)];
    }
    for (int o = 1; o < n; ++o) {
      const std::size_t l = static_cast<std::size_t>((q + o) % n);
      const double rl = rho_s[l];
      const double c = g.cos_at(o);
      const double s = g.sin_at(o);
      const double kernel =
          std::log(rq * rq + rl * rl - 2.0 * rq * rl * c) - log_flat[static_cast<std::size_t>(o)];
      acc_th += kernel * (drho_s[l] * s + rl * c);
      acc_r += kernel * (drho_s[l] * c - rl * s);
    }
    out.u_theta[static_cast<std::size_t>(q)] = uth_log - w * acc_th;
    out.u_r[static_cast<std::size_t>(q)] = -kTwoPi * ur_log[static_cast<std::size_t>(q)] - w * acc_r;
  }
  return out;
}

std::vector<double> boundary_tangential_velocity(const PatchSystem& system, int target) {
  const int n = system.quadrature_nodes();
  std::vector<double> out(static_cast<std::size_t>(n), 0.0);
  for (int i = 0; i < system.layer_count(); ++i) {
    const double theta_i = system.layer(i).strength;
    if (theta_i == 0.0) continue;
    const BoundaryVelocity u = interaction(system, i, target);
    const double scale = theta_i / (4.0 * kPi);
    for (int q = 0; q < n; ++q)
      out[static_cast<std::size_t>(q)] += scale * u.u_theta[static_cast<std::size_t>(q)];
  }
  return out;
}

std::vector<std::vector<double>> stationarity_samples(const PatchSystem& system) {
  const int n = system.quadrature_nodes();
  const int layers = system.layer_count();
  std::vector<std::vector<double>> out(
      static_cast<std::size_t>(layers), std::vector<double>(static_cast<std::size_t>(n), 0.0));
  for (int j = 0; j < layers; ++j) {
    const auto rho_j = system.rho(j);
    const auto drho_j = system.drho(j);
    auto& acc = out[static_cast<std::size_t>(j)];
    for (int i = 0; i < layers; ++i) {
      const double theta_i = system.layer(i).strength;
      if (theta_i == 0.0) continue;
      const BoundaryVelocity u = interaction(system, i, j);
      const double scale = theta_i / (4.0 * kPi);
      for (int q = 0; q < n; ++q) {
        const std::size_t qq = static_cast<std::size_t>(q);
        acc[qq] += scale * (rho_j[qq] * u.u_r[qq] - drho_j[qq] * u.u_theta[qq]);
      }
    }
  }
  return out;
}

OddTuple stationarity(const PatchSystem& system) {
  const auto samples = stationarity_samples(system);
  OddTuple out;
  out.reserve(samples.size());
  for (const auto& s : samples)
    out.emplace_back(system.fold(),
                     system.grid().sine_coefficients(s, system.fold(), system.truncation()));
  return out;
}

double zero_mean_defect(const PatchSystem& system) {
  const auto samples = stationarity_samples(system);
  double worst = 0.0;
  for (const auto& s : samples) worst = std::max(worst, std::abs(system.grid().mean(s)));
  return worst;
}

double quadrature_refinement_delta(const PatchSystem& system) {
  const auto coarse = stationarity_samples(system);
  const PatchSystem fine_system = system.refined(2);
  const auto fine = stationarity_samples(fine_system);
  double worst = 0.0;
  for (std::size_t j = 0; j < coarse.size(); ++j)
    for (std::size_t q = 0; q < coarse[j].size(); ++q)
      worst = std::max(worst, std::abs(fine[j][2 * q] - coarse[j][q]));
  return worst;
}

void require_resolved(const PatchSystem& system, double tol) {
  const double delta = quadrature_refinement_delta(system);
  if (delta > tol) {
    std::ostringstream msg;
    msg << "doubling the node count moves residual samples by " << delta;
    fail(ErrorCode::quadrature_underresolved, msg.str());
  }
}

double boundary_distance(const PatchSystem& system, Vec2 point) {
  const Grid& g = system.grid();
  const int n = g.size();
  double best = std::numeric_limits<double>::infinity();
  for (int i = 0; i < system.layer_count(); ++i) {
    const auto rho = system.rho(i);
    for (int l = 0; l < n; ++l) {
      const double zx = rho[static_cast<std::size_t>(l)] * g.cos_at(l);
      const double zy = rho[static_cast<std::size_t>(l)] * g.sin_at(l);
      best = std::min(best, std::hypot(point.x - zx, point.y - zy));
    }
  }
  return best;
}

Vec2 velocity_at(const PatchSystem& system, Vec2 point) {
  const double standoff = kStandoffFraction * system.layer(0).radius;
  if (boundary_distance(system, point) < standoff)
    fail(ErrorCode::point_on_boundary, "evaluation point within standoff of a boundary");

  const Grid& g = system.grid();
  const int n = g.size();
  const double w = g.weight();
  Vec2 u;
  for (int i = 0; i < system.layer_count(); ++i) {
    const double theta_i = system.layer(i).strength;
    if (theta_i == 0.0) continue;
    const auto rho = system.rho(i);
    const auto drho = system.drho(i);
    double ax = 0.0, ay = 0.0;
    for (int l = 0; l < n; ++l) {
      const std::size_t ll = static_cast<std::size_t>(l);
      const double c = g.cos_at(l);
      const double s = g.sin_at(l);
      const double zx = rho[ll] * c;
      const double zy = rho[ll] * s;
      const double dx = point.x - zx;
      const double dy = point.y - zy;
      const double kernel = std::log(dx * dx + dy * dy);
      ax += kernel * (drho[ll] * c - rho[ll] * s);
      ay += kernel * (drho[ll] * s + rho[ll] * c);
    }
    u.x -= theta_i / (4.0 * kPi) * w * ax;
    u.y -= theta_i / (4.0 * kPi) * w * ay;
  }
  return u;
}

double stream_at(const PatchSystem& system, Vec2 point) {
  const double standoff = kStandoffFraction * system.layer(0).radius;
  if (boundary_distance(system, point) < standoff)
    fail(ErrorCode::point_on_boundary, "evaluation point within standoff of a boundary");

  const Grid& g = system.grid();
  const int n = g.size();
  const double w = g.weight();
  double psi = 0.0;
  for (int i = 0; i < system.layer_count(); ++i) {
    const double theta_i = system.layer(i).strength;
    if (theta_i == 0.0) continue;
    const auto rho = system.rho(i);
    const auto drho = system.drho(i);
    double acc = 0.0;
    for (int l = 0; l < n; ++l) {
      const std::size_t ll = static_cast<std::size_t>(l);
      const double c = g.cos_at(l);
      const double s = g.sin_at(l);
      const double zx = rho[ll] * c;
      const double zy = rho[ll] * s;
      const double dx = zx - point.x;
      const double dy = zy - point.y;
      // boundary form of the area integral of log|p-q|^2
      const double dz1 = drho[ll] * c - rho[ll] * s;
      const double dz2 = drho[ll] * s + rho[ll] * c;
      const double r2 = dx * dx + dy * dy;
      acc += (dx * dz2 - dy * dz1) * (std::log(r2) - 1.0);
    }
    psi += theta_i / (8.0 * kPi) * w * acc;
  }
  return psi;
}

double total_circulation(const PatchSystem& system) {
  double acc = 0.0;
  for (int i = 0; i < system.layer_count(); ++i) {
    const auto& p = system.perturbation(i);
    double sum_sq = 0.0;
    for (int j = 1; j <= p.truncation(); ++j) sum_sq += p.coeff(j) * p.coeff(j);
    const double b = system.layer(i).radius;
    acc += system.layer(i).strength * (kPi * b * b + 0.5 * kPi * sum_sq);
  }
  return acc;
}

bool finite_energy(const PatchSystem& system, double tol) {
  return std::abs(total_circulation(system)) < tol;
}

double exterior_velocity_sup(const PatchSystem& system, double radius, int samples) {
  if (radius <= system.outer_max_radius())
    fail(ErrorCode::domain, "sampling circle must enclose the outermost boundary");
  if (samples < 1) fail(ErrorCode::domain, "need at least one sample");
  double worst = 0.0;
  for (int k = 0; k < samples; ++k) {
    const double phi = kTwoPi * k / samples;
    const Vec2 u = velocity_at(system, {radius * std::cos(phi), radius * std::sin(phi)});
    worst = std::max(worst, std::hypot(u.x, u.y));
  }
  return worst;
}

PatchSystem TwoLayerFamily::system(double theta, const EvenTuple& R) const {
  if (R.size() != 2) fail(ErrorCode::domain, "two-layer family needs two perturbations");
  return PatchSystem(fold, {{1.0, theta}, {inner_radius, -1.0}}, R, quadrature_nodes);
}

OddTuple TwoLayerFamily::residual(double theta, const EvenTuple& R) const {
  return stationarity(system(theta, R));
}

double ThreeLayerFamily::closure_radius(double theta3, const EvenTuple& R) const {
  if (R.size() != 3) fail(ErrorCode::domain, "three-layer family needs three perturbations");
  if (theta3 == 0.0) fail(ErrorCode::domain, "theta3 must be nonzero for the closure");
  auto mean_square = [](const EvenSeries& f) {
    double acc = 0.0;
    for (int j = 1; j <= f.truncation(); ++j) acc += f.coeff(j) * f.coeff(j);
    return kPi * acc;  // int R^2 dx over [0, 2pi)
  };
  const double i1 = kTwoPi * 1.0 + mean_square(R[0]);
  const double i2 = kTwoPi * b2 * b2 + mean_square(R[1]);
  const double i3 = mean_square(R[2]);
  const double radicand = -(1.0 * i1 + theta2 * i2 + theta3 * i3) / (kTwoPi * theta3);
  if (radicand <= 0.0)
    fail(ErrorCode::negative_radicand, "zero-circulation closure has no real radius");
  const double b3 = std::sqrt(radicand);
  if (b3 >= b2) fail(ErrorCode::not_nested, "closure radius not inside the second layer");
  return b3;
}

PatchSystem ThreeLayerFamily::system(double theta3, const EvenTuple& R) const {
  const double b3 = closure_radius(theta3, R);
  return PatchSystem(fold, {{1.0, 1.0}, {b2, theta2}, {b3, theta3}}, R, quadrature_nodes);
}

OddTuple ThreeLayerFamily::residual(double theta3, const EvenTuple& R) const {
  return stationarity(system(theta3, R));
}

double trapezoid_period(const std::function<double(double)>& f, int nodes) {
  if (nodes < 1) fail(ErrorCode::domain, "need at least one node");
  const double h = kTwoPi / nodes;
  double acc = 0.0;
  for (int q = 0; q < nodes; ++q) acc += f(h * q);
  return h * acc;
}

}  // namespace vpatch
