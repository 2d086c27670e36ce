#include "gaborikl/gabor_kernels.hpp"

#include <cmath>
#include <numbers>
#include <string>

#include "gaborikl/errors.hpp"

namespace gaborikl {

using std::numbers::pi;

namespace {

constexpr double kEnvelopeDenominator = 8.0 * pi * pi;

void require_points(std::span<const PixelCoord> points) {
  if (points.empty()) throw DomainError("gram: empty point set");
}

}  // namespace

double canonical_theta(double theta) noexcept {
  double t = std::fmod(theta, pi);
  if (t < 0.0) t += pi;
  if (t >= pi) t = 0.0;
  return t;
}

double theta_distance(double a, double b) noexcept {
  const double d = std::fabs(canonical_theta(a) - canonical_theta(b));
  return std::min(d, pi - d);
}

GaborParams GaborParams::make(double omega, double theta) {
  if (!std::isfinite(omega) || !(omega > 0.0)) {
    throw DomainError("Gabor scale omega must be positive and finite, got " +
                      std::to_string(omega));
  }
  if (!std::isfinite(theta)) throw DomainError("Gabor orientation theta must be finite");
  return GaborParams{omega, canonical_theta(theta)};
}

double nu_to_omega(double nu) noexcept { return (pi / 2.0) / std::exp2(nu / 2.0); }

double omega_to_nu(double omega) {
  if (!(omega > 0.0)) throw DomainError("omega must be positive");
  return 2.0 * std::log2((pi / 2.0) / omega);
}

GaborParams munu_to_params(MuNuParams m) {
  return GaborParams::make(nu_to_omega(m.nu), m.mu * pi / 8.0);
}

MuNuParams params_to_munu(const GaborParams& g) {
  return MuNuParams{8.0 * g.theta / pi, omega_to_nu(g.omega)};
}

double eval_gabor(const GaborParams& g, double dx, double dy) noexcept {
  const double w = g.omega;
  const double envelope = std::exp(-w * w * (dx * dx + dy * dy) / kEnvelopeDenominator);
  return envelope * std::cos(w * (dx * std::cos(g.theta) + dy * std::sin(g.theta)));
}

double eval_gabor(const GaborParams& g, PixelCoord z, PixelCoord z2) noexcept {
  return eval_gabor(g, z.x - z2.x, z.y - z2.y);
}

double eval_general_gabor(const GeneralGaborParams& g, PixelCoord z, PixelCoord z2) {
  if (!(g.sigma > 0.0) || !(g.beta > 0.0)) {
    throw DomainError("general Gabor kernel requires sigma > 0 and beta > 0");
  }
  const double dx = z.x - z2.x;
  const double dy = z.y - z2.y;
  const double c = std::cos(g.theta);
  const double s = std::sin(g.theta);
  const double u = dx * c + dy * s;
  const double v = -dx * s + dy * c;
  const double norm = 1.0 / std::sqrt(pi * g.sigma * g.beta);
  const double envelope =
      std::exp(-(u * u / (2.0 * g.sigma * g.sigma) + v * v / (2.0 * g.beta * g.beta)));
  return norm * envelope * std::cos(g.xi0 * dx + g.nu0 * dy);
}

GramMatrix gram(const GaborParams& g, std::span<const PixelCoord> points) {
  require_points(points);
  const auto n = static_cast<Eigen::Index>(points.size());
  GramMatrix out{Eigen::MatrixXd(n, n), {points.begin(), points.end()}};
  for (Eigen::Index j = 0; j < n; ++j) {
    out.values(j, j) = 1.0;
    for (Eigen::Index i = j + 1; i < n; ++i) {
      const double v = eval_gabor(g, points[i], points[j]);
      out.values(i, j) = v;
      out.values(j, i) = v;
    }
  }
  return out;
}

GramMatrix gram_general(const GeneralGaborParams& g, std::span<const PixelCoord> points) {
  require_points(points);
  const auto n = static_cast<Eigen::Index>(points.size());
  GramMatrix out{Eigen::MatrixXd(n, n), {points.begin(), points.end()}};
  for (Eigen::Index j = 0; j < n; ++j) {
    for (Eigen::Index i = j; i < n; ++i) {
      const double v = eval_general_gabor(g, points[i], points[j]);
      out.values(i, j) = v;
      out.values(j, i) = v;
    }
  }
  return out;
}

Eigen::MatrixXd cross_gram(const GaborParams& g, std::span<const PixelCoord> rows,
                           std::span<const PixelCoord> cols) {
  Eigen::MatrixXd k(static_cast<Eigen::Index>(rows.size()),
                    static_cast<Eigen::Index>(cols.size()));
  for (Eigen::Index j = 0; j < k.cols(); ++j) {
    for (Eigen::Index i = 0; i < k.rows(); ++i) {
      k(i, j) = eval_gabor(g, rows[i], cols[j]);
    }
  }
  return k;
}

double KernelMixture::total_weight() const noexcept {
  double sum = 0.0;
  for (const auto& c : components) sum += c.weight;
  return sum;
}

void KernelMixture::validate() const {
  for (const auto& c : components) {
    if (!(c.weight >= 0.0)) throw DomainError("mixture weight must be nonnegative");
    if (!(c.params.omega > 0.0)) throw DomainError("mixture component has nonpositive omega");
  }
  if (total_weight() > 1.0 + 1e-9) throw DomainError("mixture weights sum past one");
}

double eval_mixture(const KernelMixture& k, double dx, double dy) noexcept {
  double sum = 0.0;
  for (const auto& c : k.components) sum += c.weight * eval_gabor(c.params, dx, dy);
  return sum;
}

double eval_mixture(const KernelMixture& k, PixelCoord z, PixelCoord z2) noexcept {
  return eval_mixture(k, z.x - z2.x, z.y - z2.y);
}

std::vector<ProfileSample> kernel_radial_profile(const KernelMixture& k, double max_radius,
                                                 int steps, double ray_angle,
                                                 int angular_samples) {
  if (steps < 2) throw DomainError("radial profile needs at least 2 steps");
  if (!(max_radius >= 0.0)) throw DomainError("radial profile needs max_radius >= 0");
  if (angular_samples < 1) throw DomainError("radial profile needs angular_samples >= 1");
  std::vector<ProfileSample> out;
  out.reserve(static_cast<std::size_t>(steps));
  const double cr = std::cos(ray_angle);
  const double sr = std::sin(ray_angle);
  for (int s = 0; s < steps; ++s) {
    const double r = max_radius * static_cast<double>(s) / static_cast<double>(steps - 1);
    ProfileSample p;
    p.radius = r;
    p.value = eval_mixture(k, r * cr, r * sr);
    double acc = 0.0;
    for (int a = 0; a < angular_samples; ++a) {
      const double phi = 2.0 * pi * static_cast<double>(a) / angular_samples;
      acc += eval_mixture(k, r * std::cos(phi), r * std::sin(phi));
    }
    p.angular_mean = acc / angular_samples;
    out.push_back(p);
  }
  return out;
}

}  // namespace gaborikl
