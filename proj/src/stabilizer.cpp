#include "gaborikl/stabilizer.hpp"

#include <algorithm>
#include <cmath>

#include "gaborikl/errors.hpp"

namespace gaborikl {

Stabilizer::Stabilizer(double omega_l0, double omega_l1, double omega_u1, double omega_u0)
    : l0_(omega_l0), l1_(omega_l1), u1_(omega_u1), u0_(omega_u0) {
  const bool finite = std::isfinite(l0_) && std::isfinite(l1_) && std::isfinite(u1_) &&
                      std::isfinite(u0_);
  if (!finite || !(0.0 < l0_ && l0_ < l1_ && l1_ < u1_ && u1_ < u0_)) {
    throw DomainError("stabilizer requires 0 < omega_l0 < omega_l1 < omega_u1 < omega_u0");
  }
}

Stabilizer Stabilizer::defaults() {
  using std::numbers::pi;
  using std::numbers::sqrt2;
  return Stabilizer(pi / 512.0, pi * sqrt2 / 512.0, 2.0 * sqrt2 * pi, 4.0 * pi);
}

double Stabilizer::operator()(double omega) const noexcept {
  if (!(omega > l0_) || omega >= u0_) return 0.0;
  if (omega < l1_) return (omega - l0_) / (l1_ - l0_);
  if (omega <= u1_) return 1.0;
  return (u0_ - omega) / (u0_ - u1_);
}

double Stabilizer::lipschitz() const noexcept {
  return 1.0 / std::min(l1_ - l0_, u0_ - u1_);
}

double eval_stabilizer(const Stabilizer& s, double omega) { return s(omega); }

}  // namespace gaborikl
