#pragma once

#include <numbers>

namespace gaborikl {

/// Trapezoidal vanishing weight over the kernel scale omega.
///
/// Zero outside (omega_l0, omega_u0), one on the plateau [omega_l1, omega_u1]
/// and linear on the two ramps. It only depends on omega; orientation does not
/// enter.
class Stabilizer {
 public:
  /// Throws DomainError unless 0 < l0 < l1 < u1 < u0.
  Stabilizer(double omega_l0, double omega_l1, double omega_u1, double omega_u0);

  /// pi/512, pi*sqrt(2)/512, 2*sqrt(2)*pi, 4*pi, i.e. nu anchors 16, 15, -5, -6.
  static Stabilizer defaults();

  double operator()(double omega) const noexcept;

  double omega_l0() const noexcept { return l0_; }
  double omega_l1() const noexcept { return l1_; }
  double omega_u1() const noexcept { return u1_; }
  double omega_u0() const noexcept { return u0_; }

  /// Lipschitz constant of the trapezoid.
  double lipschitz() const noexcept;

  friend bool operator==(const Stabilizer&, const Stabilizer&) = default;

 private:
  double l0_, l1_, u1_, u0_;
};

double eval_stabilizer(const Stabilizer& s, double omega);

}  // namespace gaborikl
