#pragma once

#include <span>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "gaborikl/stabilizer.hpp"

namespace gaborikl {

struct PixelCoord {
  double x = 0.0;
  double y = 0.0;

  friend bool operator==(const PixelCoord&, const PixelCoord&) = default;
};

/// Maps any angle onto [0, pi). The real Gabor kernel has period pi in theta.
double canonical_theta(double theta) noexcept;

/// Circular distance between two orientations under the period-pi symmetry.
double theta_distance(double a, double b) noexcept;

/// Scale omega (radians/pixel) and orientation theta of one isotropic kernel.
struct GaborParams {
  double omega = 0.0;
  double theta = 0.0;

  /// Throws DomainError for non-positive or non-finite omega; theta is canonicalized.
  static GaborParams make(double omega, double theta);

  friend bool operator==(const GaborParams&, const GaborParams&) = default;
};

/// The conventional hand-tuning grid: omega = (pi/2) / 2^(nu/2), theta = mu*pi/8.
struct MuNuParams {
  double mu = 0.0;
  double nu = 0.0;
};

GaborParams munu_to_params(MuNuParams m);
MuNuParams params_to_munu(const GaborParams& g);

/// nu coordinate of a scale, without the orientation part.
double omega_to_nu(double omega);
double nu_to_omega(double nu) noexcept;

/// Anisotropic real Gabor kernel with an explicit normalizer and zero phase.
struct GeneralGaborParams {
  double sigma = 1.0;
  double beta = 1.0;
  double theta = 0.0;
  double xi0 = 0.0;
  double nu0 = 0.0;
};

/// exp(-w^2 r^2 / (8 pi^2)) * cos(w (dx cos t + dy sin t)); unit at zero displacement.
double eval_gabor(const GaborParams& g, double dx, double dy) noexcept;
double eval_gabor(const GaborParams& g, PixelCoord z, PixelCoord z2) noexcept;

/// Throws DomainError unless sigma, beta > 0.
double eval_general_gabor(const GeneralGaborParams& g, PixelCoord z, PixelCoord z2);

/// Dense kernel matrix over a point set.
struct GramMatrix {
  Eigen::MatrixXd values;
  std::vector<PixelCoord> points;
};

/// Throws DomainError on an empty point set.
GramMatrix gram(const GaborParams& g, std::span<const PixelCoord> points);
GramMatrix gram_general(const GeneralGaborParams& g, std::span<const PixelCoord> points);

/// Cross kernel matrix, rows indexed by `rows`, columns by `cols`.
Eigen::MatrixXd cross_gram(const GaborParams& g, std::span<const PixelCoord> rows,
                           std::span<const PixelCoord> cols);

struct MixtureComponent {
  double weight = 0.0;
  GaborParams params;

  friend bool operator==(const MixtureComponent&, const MixtureComponent&) = default;
};

/// Finite nonnegative combination of Gabor kernels.
struct KernelMixture {
  std::vector<MixtureComponent> components;
  Stabilizer stabilizer = Stabilizer::defaults();

  double total_weight() const noexcept;
  /// Throws DomainError if a weight is negative or the weights sum past one.
  void validate() const;

  friend bool operator==(const KernelMixture&, const KernelMixture&) = default;
};

double eval_mixture(const KernelMixture& k, PixelCoord z, PixelCoord z2) noexcept;
double eval_mixture(const KernelMixture& k, double dx, double dy) noexcept;

struct ProfileSample {
  double radius = 0.0;
  double value = 0.0;          ///< along the ray at `ray_angle`
  double angular_mean = 0.0;   ///< average over a full turn
};

/// Samples the mixture at `steps` radii in [0, max_radius]. Throws DomainError for steps < 2.
std::vector<ProfileSample> kernel_radial_profile(const KernelMixture& k, double max_radius,
                                                 int steps, double ray_angle = 0.0,
                                                 int angular_samples = 360);

}  // namespace gaborikl
