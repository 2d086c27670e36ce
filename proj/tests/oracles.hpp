#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <vector>

#include <Eigen/Dense>

namespace testing {

/// y'd - eps |d|_1 - 1/2 d'Kd, written out without the library.
inline double svr_dual_value(const Eigen::MatrixXd& k, const Eigen::VectorXd& y, double eps,
                             const Eigen::VectorXd& d) {
  return y.dot(d) - eps * d.lpNorm<1>() - 0.5 * d.dot(k * d);
}

/// Exact optimum of the SVR dual for small problems by enumerating every face of the
/// feasible polytope: each variable is at -C, 0 or +C, or free with a fixed sign. On each
/// face the objective is a concave quadratic under one equality, so its stationary point
/// comes from a linear KKT system; the best feasible one over all faces is the optimum.
inline double svr_face_enumeration(const Eigen::MatrixXd& k, const Eigen::VectorXd& y, double eps,
                                   double c) {
  const int n = static_cast<int>(y.size());
  int faces = 1;
  for (int i = 0; i < n; ++i) faces *= 5;
  double best = -std::numeric_limits<double>::infinity();
  for (int code = 0; code < faces; ++code) {
    std::vector<int> state(static_cast<std::size_t>(n));
    int rest = code;
    for (int i = 0; i < n; ++i) {
      state[static_cast<std::size_t>(i)] = rest % 5 - 2;  // -2:-C  -1:free<0  0:zero  1:free>0  2:+C
      rest /= 5;
    }
    Eigen::VectorXd d = Eigen::VectorXd::Zero(n);
    std::vector<int> free;
    for (int i = 0; i < n; ++i) {
      const int s = state[static_cast<std::size_t>(i)];
      if (s == 2) d[i] = c;
      if (s == -2) d[i] = -c;
      if (s == 1 || s == -1) free.push_back(i);
    }
    const int nf = static_cast<int>(free.size());
    if (nf > 0) {
      Eigen::MatrixXd a = Eigen::MatrixXd::Zero(nf + 1, nf + 1);
      Eigen::VectorXd rhs(nf + 1);
      const Eigen::VectorXd fixed_part = k * d;
      for (int p = 0; p < nf; ++p) {
        const int i = free[static_cast<std::size_t>(p)];
        for (int q = 0; q < nf; ++q) a(p, q) = k(i, free[static_cast<std::size_t>(q)]);
        a(p, nf) = 1.0;
        a(nf, p) = 1.0;
        rhs[p] = y[i] - eps * state[static_cast<std::size_t>(i)] - fixed_part[i];
      }
      rhs[nf] = -d.sum();
      const Eigen::VectorXd sol = a.completeOrthogonalDecomposition().solve(rhs);
      if ((a * sol - rhs).cwiseAbs().maxCoeff() > 1e-9 * (1.0 + rhs.cwiseAbs().maxCoeff())) continue;
      bool ok = true;
      for (int p = 0; p < nf && ok; ++p) {
        const int i = free[static_cast<std::size_t>(p)];
        const double v = sol[p];
        ok = v * state[static_cast<std::size_t>(i)] >= 0.0 && std::fabs(v) <= c;
        d[i] = v;
      }
      if (!ok) continue;
    } else if (std::fabs(d.sum()) > 1e-12) {
      continue;
    }
    best = std::max(best, svr_dual_value(k, y, eps, d));
  }
  return best;
}

/// Max-gap form of the SVR optimality conditions: every coefficient confines the bias to an
/// interval, and the conditions hold when those intervals intersect.
inline double svr_kkt_gap(const Eigen::MatrixXd& k, const Eigen::VectorXd& y, double eps,
                          double c, const Eigen::VectorXd& d) {
  const Eigen::VectorXd g = y - k * d;
  double lo = -std::numeric_limits<double>::infinity();
  double hi = std::numeric_limits<double>::infinity();
  for (Eigen::Index i = 0; i < d.size(); ++i) {
    const double di = d[i];
    if (di == 0.0) {
      lo = std::max(lo, g[i] - eps);
      hi = std::min(hi, g[i] + eps);
    } else if (di > 0.0 && di < c) {
      lo = std::max(lo, g[i] - eps);
      hi = std::min(hi, g[i] - eps);
    } else if (di >= c) {
      hi = std::min(hi, g[i] - eps);
    } else if (di < 0.0 && di > -c) {
      lo = std::max(lo, g[i] + eps);
      hi = std::min(hi, g[i] + eps);
    } else {
      lo = std::max(lo, g[i] + eps);
    }
  }
  return std::max(0.0, lo - hi);
}

/// (1/l)||b - K rho||^2 + lambda |rho|_1 for two columns from precomputed moments.
struct TwoColumnLasso {
  double bb, kb0, kb1, g00, g01, g11, inv_l, lambda;

  TwoColumnLasso(const Eigen::MatrixXd& k, const Eigen::VectorXd& b, double lam)
      : bb(b.squaredNorm()),
        kb0(k.col(0).dot(b)),
        kb1(k.col(1).dot(b)),
        g00(k.col(0).squaredNorm()),
        g01(k.col(0).dot(k.col(1))),
        g11(k.col(1).squaredNorm()),
        inv_l(1.0 / static_cast<double>(k.rows())),
        lambda(lam) {}

  double operator()(double r0, double r1) const {
    const double quad = bb - 2.0 * (r0 * kb0 + r1 * kb1) + r0 * r0 * g00 + 2.0 * r0 * r1 * g01 +
                        r1 * r1 * g11;
    return inv_l * quad + lambda * (std::fabs(r0) + std::fabs(r1));
  }

  /// Minimum over the grid {-2, -2 + h, ..., 2}^2.
  double grid_minimum(double h = 1e-3) const {
    const int steps = static_cast<int>(std::lround(4.0 / h));
    double best = std::numeric_limits<double>::infinity();
    for (int i = 0; i <= steps; ++i) {
      const double r0 = -2.0 + h * i;
      for (int j = 0; j <= steps; ++j) best = std::min(best, (*this)(r0, -2.0 + h * j));
    }
    return best;
  }
};

/// Feature point for k-means oracles: nu and theta with the library's circular metric.
struct FeaturePoint {
  double nu;
  double theta;
  double weight;
};

inline double circ_theta(double a, double b) {
  const double p = std::numbers::pi;
  double d = std::fmod(std::fabs(a - b), p);
  return std::min(d, p - d);
}

inline double feature_d2(double nu_a, double th_a, double nu_b, double th_b) {
  const double w = 8.0 / std::numbers::pi;
  const double ct = circ_theta(th_a, th_b);
  return (nu_a - nu_b) * (nu_a - nu_b) + w * w * ct * ct;
}

/// Weighted cost of the best center for one cluster. Each circular term is quadratic in the
/// center angle between consecutive antipodes of the samples, so the exact minimum is the
/// best clipped quadratic minimizer over those arcs.
inline double cluster_cost(const std::vector<FeaturePoint>& pts) {
  const double p = std::numbers::pi;
  double wsum = 0.0, nu_mean = 0.0;
  for (const auto& q : pts) {
    wsum += q.weight;
    nu_mean += q.weight * q.nu;
  }
  if (pts.empty() || wsum <= 0.0) return 0.0;
  nu_mean /= wsum;
  double nu_cost = 0.0;
  for (const auto& q : pts) nu_cost += q.weight * (q.nu - nu_mean) * (q.nu - nu_mean);

  std::vector<double> breaks;
  for (const auto& q : pts) breaks.push_back(std::fmod(std::fmod(q.theta + p / 2, p) + p, p));
  std::sort(breaks.begin(), breaks.end());
  auto theta_cost = [&](double t) {
    double s = 0.0;
    for (const auto& q : pts) {
      const double ct = circ_theta(q.theta, t);
      s += q.weight * ct * ct;
    }
    return s;
  };
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t a = 0; a < breaks.size(); ++a) {
    const double lo = breaks[a];
    const double hi = a + 1 < breaks.size() ? breaks[a + 1] : breaks[0] + p;
    const double mid = 0.5 * (lo + hi);
    double num = 0.0;
    for (const auto& q : pts) {
      // Representative of the sample angle nearest to the arc's midpoint.
      const double rep = q.theta + p * std::round((mid - q.theta) / p);
      num += q.weight * rep;
    }
    const double t = std::clamp(num / wsum, lo, hi);
    best = std::min(best, theta_cost(t));
  }
  const double w = 8.0 / p;
  return nu_cost + w * w * best;
}

/// Minimum weighted k-means distortion over every assignment of at most 16 points to k labels.
inline double exhaustive_kmeans(const std::vector<FeaturePoint>& pts, int k) {
  const int n = static_cast<int>(pts.size());
  std::vector<double> mask_cost(std::size_t{1} << n);
  for (std::size_t m = 0; m < mask_cost.size(); ++m) {
    std::vector<FeaturePoint> group;
    for (int i = 0; i < n; ++i)
      if (m >> i & 1U) group.push_back(pts[static_cast<std::size_t>(i)]);
    mask_cost[m] = cluster_cost(group);
  }
  double best = std::numeric_limits<double>::infinity();
  std::vector<int> label(static_cast<std::size_t>(n), 0);
  std::vector<int> maxlab(static_cast<std::size_t>(n), 0);
  // Restricted growth strings enumerate each partition into at most k blocks once.
  while (true) {
    std::vector<std::size_t> masks(static_cast<std::size_t>(k), 0);
    for (int i = 0; i < n; ++i) masks[static_cast<std::size_t>(label[static_cast<std::size_t>(i)])] |= std::size_t{1} << i;
    double cost = 0.0;
    for (auto m : masks) cost += mask_cost[m];
    best = std::min(best, cost);
    int i = n - 1;
    while (i > 0) {
      const int cap = std::min(k - 1, maxlab[static_cast<std::size_t>(i - 1)] + 1);
      if (label[static_cast<std::size_t>(i)] < cap) break;
      --i;
    }
    if (i <= 0) break;
    ++label[static_cast<std::size_t>(i)];
    for (int j = i + 1; j < n; ++j) label[static_cast<std::size_t>(j)] = 0;
    for (int j = i; j < n; ++j) {
      maxlab[static_cast<std::size_t>(j)] =
          std::max(maxlab[static_cast<std::size_t>(j - 1)], label[static_cast<std::size_t>(j)]);
    }
  }
  return best;
}

}  // namespace testing
