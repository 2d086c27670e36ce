#include "gaborikl/svr.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include "gaborikl/errors.hpp"
#include "gaborikl/log.hpp"

namespace gaborikl {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

void check_inputs(const Eigen::MatrixXd& gram, std::span<const double> targets) {
  if (targets.empty()) throw DomainError("solve_svr: empty training set");
  const auto n = static_cast<Eigen::Index>(targets.size());
  if (gram.rows() != n || gram.cols() != n) {
    throw DomainError("solve_svr: Gram is " + std::to_string(gram.rows()) + "x" +
                      std::to_string(gram.cols()) + " but there are " +
                      std::to_string(targets.size()) + " targets");
  }
  for (double y : targets) {
    if (!std::isfinite(y)) throw DomainError("solve_svr: non-finite target");
  }
}

// Best and runner-up index of a score over allowed coordinates; ties keep the lower index.
struct Top2 {
  Eigen::Index first = -1;
  Eigen::Index second = -1;
  double v1 = kNegInf;
  double v2 = kNegInf;

  void offer(Eigen::Index i, double v) {
    if (v > v1) {
      second = first;
      v2 = v1;
      first = i;
      v1 = v;
    } else if (v > v2) {
      second = i;
      v2 = v;
    }
  }
};

double up_slope(double g, double d, double eps) { return d >= 0.0 ? g - eps : g + eps; }
double down_slope(double g, double d, double eps) { return d > 0.0 ? -g + eps : -g - eps; }

struct PairChoice {
  Eigen::Index up = -1;
  Eigen::Index down = -1;
  double violation = kNegInf;
  double max_up = kNegInf;
  double max_down = kNegInf;
};

PairChoice select_pair(const Eigen::VectorXd& d, const Eigen::VectorXd& grad, double eps,
                       double C) {
  Top2 ups;
  Top2 downs;
  for (Eigen::Index i = 0; i < d.size(); ++i) {
    if (d[i] < C) ups.offer(i, up_slope(grad[i], d[i], eps));
    if (d[i] > -C) downs.offer(i, down_slope(grad[i], d[i], eps));
  }
  PairChoice pc;
  pc.max_up = ups.v1;
  pc.max_down = downs.v1;
  if (ups.first < 0 || downs.first < 0) return pc;
  if (ups.first != downs.first) {
    pc.up = ups.first;
    pc.down = downs.first;
    pc.violation = ups.v1 + downs.v1;
    return pc;
  }
  const double a = ups.second >= 0 ? ups.v2 + downs.v1 : kNegInf;
  const double b = downs.second >= 0 ? ups.v1 + downs.v2 : kNegInf;
  if (a == kNegInf && b == kNegInf) return pc;
  if (a >= b) {
    pc.up = ups.second;
    pc.down = downs.first;
    pc.violation = a;
  } else {
    pc.up = ups.first;
    pc.down = downs.second;
    pc.violation = b;
  }
  return pc;
}

// Second-order partner for a fixed `up` index: maximizes the predicted gain
// (up_i + down_j)^2 / (2 eta_ij) over violating j, ties to the lower index.
Eigen::Index second_order_partner(const Eigen::VectorXd& d, const Eigen::VectorXd& grad,
                                  const Eigen::MatrixXd& gram, Eigen::Index i, double eps,
                                  double C) {
  constexpr double kTau = 1e-12;
  const double up_i = up_slope(grad[i], d[i], eps);
  const double kii = gram(i, i);
  Eigen::Index best = -1;
  double best_gain = 0.0;
  for (Eigen::Index j = 0; j < d.size(); ++j) {
    if (j == i || !(d[j] > -C)) continue;
    const double b = up_i + down_slope(grad[j], d[j], eps);
    if (!(b > 0.0)) continue;
    const double eta = std::max(kii + gram(j, j) - 2.0 * gram(i, j), kTau);
    const double gain = b * b / eta;
    if (gain > best_gain) {
      best_gain = gain;
      best = j;
    }
  }
  return best;
}

// Exact maximizer over t in [0, hi] of the concave piecewise quadratic
//   t (gi - gj) - eta t^2 / 2 - eps (|di + t| + |dj - t|).
double pair_step(double gi, double gj, double eta, double di, double dj, double eps, double hi) {
  auto phi = [&](double t) {
    return t * (gi - gj) - 0.5 * eta * t * t - eps * (std::fabs(di + t) + std::fabs(dj - t));
  };
  std::array<double, 4> knots{0.0, hi, hi, hi};
  std::size_t nk = 2;
  if (-di > 0.0 && -di < hi) knots[nk++] = -di;
  if (dj > 0.0 && dj < hi) knots[nk++] = dj;
  std::sort(knots.begin(), knots.begin() + static_cast<std::ptrdiff_t>(nk));

  double best_t = 0.0;
  double best_v = phi(0.0);
  auto consider = [&](double t) {
    const double v = phi(t);
    if (v > best_v) {
      best_v = v;
      best_t = t;
    }
  };
  for (std::size_t s = 0; s + 1 < nk; ++s) {
    const double a = knots[s];
    const double b = knots[s + 1];
    consider(b);
    if (eta > 0.0 && b > a) {
      const double mid = 0.5 * (a + b);
      const double si = (di + mid) >= 0.0 ? 1.0 : -1.0;
      const double sj = (dj - mid) >= 0.0 ? 1.0 : -1.0;
      const double slope = gi - gj - eps * (si - sj);
      consider(std::clamp(slope / eta, a, b));
    }
  }
  return best_t;
}

// Newton step on the current face: free coefficients keep their sign, bounded and zero ones
// stay put, and the equality constraint is carried by the bias row. Returns false when the
// step is rejected.
bool polish_face(Eigen::VectorXd& d, Eigen::VectorXd& grad, const Eigen::MatrixXd& gram,
                 const Eigen::VectorXd& y, const SvrConfig& cfg, double current) {
  std::vector<Eigen::Index> free;
  for (Eigen::Index i = 0; i < d.size(); ++i) {
    if (d[i] != 0.0 && std::fabs(d[i]) < cfg.C) free.push_back(i);
  }
  const auto nf = static_cast<Eigen::Index>(free.size());
  if (nf == 0 || nf > 1500) return false;
  Eigen::MatrixXd a = Eigen::MatrixXd::Zero(nf + 1, nf + 1);
  Eigen::VectorXd rhs = Eigen::VectorXd::Zero(nf + 1);
  for (Eigen::Index r = 0; r < nf; ++r) {
    const Eigen::Index i = free[static_cast<std::size_t>(r)];
    double kd = 0.0;
    for (Eigen::Index c = 0; c < nf; ++c) {
      const Eigen::Index j = free[static_cast<std::size_t>(c)];
      a(r, c) = gram(i, j);
      kd += gram(i, j) * d[j];
    }
    a(r, nf) = 1.0;
    a(nf, r) = 1.0;
    rhs[r] = grad[i] + kd - cfg.epsilon * (d[i] > 0.0 ? 1.0 : -1.0);
    rhs[nf] += d[i];
  }
  const Eigen::VectorXd target = a.completeOrthogonalDecomposition().solve(rhs);

  double alpha = 1.0;
  for (Eigen::Index r = 0; r < nf; ++r) {
    const double di = d[free[static_cast<std::size_t>(r)]];
    const double delta = target[r] - di;
    const double lo = di > 0.0 ? 0.0 : -cfg.C;
    const double hi = di > 0.0 ? cfg.C : 0.0;
    if (delta > 0.0) alpha = std::min(alpha, (hi - di) / delta);
    if (delta < 0.0) alpha = std::min(alpha, (lo - di) / delta);
  }
  if (!(alpha > 0.0)) return false;

  Eigen::VectorXd trial = d;
  for (Eigen::Index r = 0; r < nf; ++r) {
    const Eigen::Index i = free[static_cast<std::size_t>(r)];
    const double lo = d[i] > 0.0 ? 0.0 : -cfg.C;
    const double hi = d[i] > 0.0 ? cfg.C : 0.0;
    double v = std::clamp(d[i] + alpha * (target[r] - d[i]), lo, hi);
    // Snap coordinates that reached a face within rounding.
    if (std::fabs(v - lo) <= 1e-14 * cfg.C) v = lo;
    if (std::fabs(v - hi) <= 1e-14 * cfg.C) v = hi;
    trial[i] = v;
  }
  const double drift = trial.sum();
  if (std::fabs(drift) > 1e-10 * static_cast<double>(d.size()) * cfg.C) return false;
  const Eigen::VectorXd trial_grad = y - gram * trial;
  const double value = y.dot(trial) - cfg.epsilon * trial.lpNorm<1>() - 0.5 * trial.dot(y - trial_grad);
  if (!(value > current)) return false;
  d = std::move(trial);
  grad = trial_grad;
  return true;
}

SvrSolution finish(const Eigen::VectorXd& d, const Eigen::VectorXd& grad,
                   const Eigen::MatrixXd& gram, std::span<const double> targets,
                   const SvrConfig& cfg, long iterations) {
  SvrSolution sol;
  sol.dual_coef = d;
  sol.iterations = iterations;
  const PairChoice pc = select_pair(d, grad, cfg.epsilon, cfg.C);
  sol.kkt_violation = std::max(pc.violation, 0.0);
  // Any b in [max_up, -max_down] is optimal; at a KKT point the interval collapses.
  if (pc.max_up > kNegInf && pc.max_down > kNegInf) {
    sol.bias = 0.5 * (pc.max_up - pc.max_down);
  } else if (pc.max_up > kNegInf) {
    sol.bias = pc.max_up;
  } else if (pc.max_down > kNegInf) {
    sol.bias = -pc.max_down;
  }
  for (Eigen::Index i = 0; i < d.size(); ++i) {
    if (d[i] != 0.0) sol.support.push_back(static_cast<std::size_t>(i));
  }
  sol.dual_objective = dual_objective_of(d, gram, targets, cfg, false);
  return sol;
}

}  // namespace

SvrConfig SvrConfig::validated() const {
  SvrConfig out = *this;
  if (!(epsilon >= 0.0) || !std::isfinite(epsilon)) throw DomainError("SVR epsilon must be >= 0");
  if (!(C > 0.0)) throw DomainError("SVR C must be > 0");
  if (!(kkt_tol > 0.0)) throw DomainError("SVR kkt_tol must be > 0");
  if (max_iter < 1) throw DomainError("SVR max_iter must be >= 1");
  if (std::isinf(C) || C > kInfiniteC) {
    GABORIKL_WARN("C = " << C << " replaced by the finite cap " << kInfiniteC);
    out.C = kInfiniteC;
  }
  return out;
}

double dual_objective_of(const Eigen::VectorXd& dual_coef, const Eigen::MatrixXd& gram,
                         std::span<const double> targets, const SvrConfig& cfg,
                         bool require_balanced) {
  const auto n = dual_coef.size();
  if (gram.rows() != n || gram.cols() != n || static_cast<Eigen::Index>(targets.size()) != n) {
    throw DomainError("dual_objective_of: size mismatch");
  }
  const double C = std::min(cfg.C, kInfiniteC);
  double lin = 0.0;
  double l1 = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    if (std::fabs(dual_coef[i]) > C * (1.0 + 1e-12)) {
      throw DomainError("dual_objective_of: coefficient outside the box [-C, C]");
    }
    lin += targets[static_cast<std::size_t>(i)] * dual_coef[i];
    l1 += std::fabs(dual_coef[i]);
  }
  if (require_balanced && std::fabs(dual_coef.sum()) > 1e-8 * static_cast<double>(n) * C) {
    throw DomainError("dual_objective_of: coefficients do not sum to zero");
  }
  return lin - cfg.epsilon * l1 - 0.5 * dual_coef.dot(gram * dual_coef);
}

SvrSolution solve_svr(const Eigen::MatrixXd& gram, std::span<const double> targets,
                      const SvrConfig& config, const std::optional<Eigen::VectorXd>& warm_start) {
  const SvrConfig cfg = config.validated();
  check_inputs(gram, targets);
  const auto n = static_cast<Eigen::Index>(targets.size());
  const Eigen::Map<const Eigen::VectorXd> y(targets.data(), n);

  Eigen::VectorXd d = Eigen::VectorXd::Zero(n);
  if (warm_start) {
    if (warm_start->size() != n) throw DomainError("solve_svr: warm start has wrong length");
    d = warm_start->cwiseMax(-cfg.C).cwiseMin(cfg.C);
    if (std::fabs(d.sum()) > 1e-8 * static_cast<double>(n) * cfg.C) {
      throw DomainError("solve_svr: warm start does not sum to zero");
    }
  }
  Eigen::VectorXd grad = y - gram * d;

  long iter = 0;
  bool resynced = true;
  const long polish_every = std::max<long>(static_cast<long>(n), 200);
  while (true) {
    const PairChoice pc = select_pair(d, grad, cfg.epsilon, cfg.C);
    if (pc.up < 0 || pc.violation <= cfg.kkt_tol) {
      // Drift in the cached gradient can hide a violation; confirm once from scratch.
      if (resynced) break;
      grad = y - gram * d;
      resynced = true;
      continue;
    }
    resynced = false;
    if (iter >= cfg.max_iter) {
      throw ConvergenceError<SvrSolution>(
          "solve_svr: iteration budget of " + std::to_string(cfg.max_iter) +
              " exhausted with KKT violation " + std::to_string(pc.violation),
          finish(d, grad, gram, targets, cfg, iter));
    }
    if (iter > 0 && iter % polish_every == 0) {
      const double current = y.dot(d) - cfg.epsilon * d.lpNorm<1>() - 0.5 * d.dot(y - grad);
      if (polish_face(d, grad, gram, y, cfg, current)) {
        resynced = true;
        ++iter;
        continue;
      }
    }
    const Eigen::Index i = pc.up;
    Eigen::Index j = second_order_partner(d, grad, gram, i, cfg.epsilon, cfg.C);
    if (j < 0) j = pc.down;
    const double eta = std::max(gram(i, i) + gram(j, j) - 2.0 * gram(i, j), 0.0);
    const double hi = std::min(cfg.C - d[i], d[j] + cfg.C);
    const double t = pair_step(grad[i], grad[j], eta, d[i], d[j], cfg.epsilon, hi);
    ++iter;
    if (!(t > 0.0)) {
      if (resynced) break;
      grad = y - gram * d;
      resynced = true;
      continue;
    }
    d[i] = std::clamp(d[i] + t, -cfg.C, cfg.C);
    d[j] = std::clamp(d[j] - t, -cfg.C, cfg.C);
    grad.noalias() -= t * (gram.col(i) - gram.col(j));
  }
  return finish(d, grad, gram, targets, cfg, iter);
}

double svr_kkt_residual(const SvrSolution& sol, const Eigen::MatrixXd& gram,
                        std::span<const double> targets, const SvrConfig& cfg) {
  const SvrConfig c = cfg.validated();
  const Eigen::VectorXd f = gram * sol.dual_coef;
  double worst = 0.0;
  for (Eigen::Index i = 0; i < f.size(); ++i) {
    const double r = targets[static_cast<std::size_t>(i)] - f[i] - sol.bias;
    const double di = sol.dual_coef[i];
    double v = 0.0;
    if (di == 0.0) {
      v = std::fabs(r) - c.epsilon;
    } else if (di > 0.0) {
      v = di < c.C ? std::fabs(r - c.epsilon) : c.epsilon - r;
    } else {
      v = di > -c.C ? std::fabs(r + c.epsilon) : r + c.epsilon;
    }
    worst = std::max(worst, v);
  }
  return worst;
}

double predict(const SvrSolution& model, const KernelMixture& mixture,
               std::span<const PixelCoord> train_points, PixelCoord query) {
  if (static_cast<std::size_t>(model.dual_coef.size()) != train_points.size()) {
    throw DomainError("predict: dual_coef has " + std::to_string(model.dual_coef.size()) +
                      " entries but there are " + std::to_string(train_points.size()) +
                      " training points");
  }
  double sum = model.bias;
  for (std::size_t i = 0; i < train_points.size(); ++i) {
    const double di = model.dual_coef[static_cast<Eigen::Index>(i)];
    if (di != 0.0) sum += di * eval_mixture(mixture, train_points[i], query);
  }
  return sum;
}

}  // namespace gaborikl
