#pragma once

#include <functional>
#include <vector>

#include "vpatch/fourier.hpp"
#include "vpatch/grid.hpp"

namespace vpatch {

struct Vec2 {
  double x = 0.0;
  double y = 0.0;
};

struct LayerConfig {
  double radius;    // mean boundary radius b_i > 0
  double strength;  // vorticity jump contribution Theta_i
};

/// Nested multi-layer vortex patch: vorticity sum_i Theta_i 1_{D_i} where the
/// boundary of D_i is z_i(x) = (b_i + R_i(x)) (cos x, sin x), layers ordered
/// outermost first with strictly decreasing radii. Perturbations are m-fold
/// even series; samples are cached on a uniform quadrature grid.
class PatchSystem {
public:
  PatchSystem(int fold, std::vector<LayerConfig> layers, EvenTuple perturbations,
              int quadrature_nodes);

  int fold() const noexcept { return fold_; }
  int layer_count() const noexcept { return static_cast<int>(layers_.size()); }
  int truncation() const noexcept { return truncation_; }
  int quadrature_nodes() const noexcept { return grid_.size(); }

  const LayerConfig& layer(int i) const { return layers_.at(static_cast<std::size_t>(i)); }
  const EvenSeries& perturbation(int i) const {
    return perturbations_.at(static_cast<std::size_t>(i));
  }
  const EvenTuple& perturbations() const noexcept { return perturbations_; }
  const Grid& grid() const noexcept { return grid_; }

  std::span<const double> rho(int i) const {
    return radius_samples_.at(static_cast<std::size_t>(i));
  }
  std::span<const double> drho(int i) const {
    return slope_samples_.at(static_cast<std::size_t>(i));
  }

  /// Smallest node-wise gap between consecutive boundaries (and innermost radius).
  double min_gap() const noexcept { return min_gap_; }
  double outer_max_radius() const noexcept { return outer_max_radius_; }

  PatchSystem refined(int factor) const;

private:
  int fold_;
  int truncation_;
  std::vector<LayerConfig> layers_;
  EvenTuple perturbations_;
  Grid grid_;
  std::vector<std::vector<double>> radius_samples_;
  std::vector<std::vector<double>> slope_samples_;
  double min_gap_ = 0.0;
  double outer_max_radius_ = 0.0;
};

/// Angular/radial components (frames attached to the target nodes) of the
/// velocity field 1_{D_source} * grad-perp log|.|^2 on the target boundary.
struct BoundaryVelocity {
  std::vector<double> u_theta;
  std::vector<double> u_r;
};

BoundaryVelocity interaction(const PatchSystem& system, int source, int target);

/// Physical tangential velocity on a boundary: (1/4pi) sum_i Theta_i u^theta_{i,j}.
std::vector<double> boundary_tangential_velocity(const PatchSystem& system, int target);

/// Node samples of the stationarity residual, one vector per layer:
///   F_j = (1/4pi) sum_i Theta_i (rho_j u^r_{i,j} - rho_j' u^theta_{i,j}),
/// i.e. minus the tangential derivative of the stream function on boundary j.
std::vector<std::vector<double>> stationarity_samples(const PatchSystem& system);

/// Galerkin projection of the residual samples onto sine modes j*m <= J*m.
OddTuple stationarity(const PatchSystem& system);

/// Largest absolute node mean among residual components (vanishes analytically).
double zero_mean_defect(const PatchSystem& system);

/// Max change of any residual sample when the node count is doubled.
double quadrature_refinement_delta(const PatchSystem& system);

/// Throws QUADRATURE_UNDERRESOLVED when the refinement delta exceeds tol.
void require_resolved(const PatchSystem& system, double tol);

/// Physical velocity (Biot-Savart) at a point off every boundary.
Vec2 velocity_at(const PatchSystem& system, Vec2 point);

/// Stream function omega * (1/2pi) log|.| at a point off every boundary.
double stream_at(const PatchSystem& system, Vec2 point);

/// Distance from a point to the nearest sampled boundary node.
double boundary_distance(const PatchSystem& system, Vec2 point);

/// Total vorticity integral: sum_i Theta_i int (b_i+R_i)^2/2 dx (exact in coefficients).
double total_circulation(const PatchSystem& system);

/// Kinetic energy is finite iff the vorticity integral vanishes.
bool finite_energy(const PatchSystem& system, double tol = 1e-12);

/// Max |velocity| over equispaced samples of the circle of given radius.
double exterior_velocity_sup(const PatchSystem& system, double radius, int samples);

/// Two-layer family: layers ((1, theta), (b, -1)); theta is the bifurcation
/// parameter.
struct TwoLayerFamily {
  int fold;
  double inner_radius;  // b in (0,1)
  int truncation = 64;
  int quadrature_nodes = 512;

  PatchSystem system(double theta, const EvenTuple& R) const;
  OddTuple residual(double theta, const EvenTuple& R) const;
};

/// Three-layer zero-circulation family: layers ((1, 1), (b2, theta2),
/// (b3, theta3)) with b3 chosen so the vorticity integral vanishes; theta3 is
/// the bifurcation parameter.
struct ThreeLayerFamily {
  int fold;
  double b2;
  double theta2;
  int truncation = 64;
  int quadrature_nodes = 512;

  /// b3(theta3, R) solving sum_i Theta_i int (b_i+R_i)^2 dx = 0.
  double closure_radius(double theta3, const EvenTuple& R) const;
  PatchSystem system(double theta3, const EvenTuple& R) const;
  OddTuple residual(double theta3, const EvenTuple& R) const;
};

/// Periodic trapezoid rule on [0, 2pi) with uniform nodes; the same rule the
/// interaction integrals use.
double trapezoid_period(const std::function<double(double)>& f, int nodes);

}  // namespace vpatch
