#include "gaborikl/sikl.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <functional>
#include <numbers>
#include <optional>
#include <string>
#include <unordered_map>

#include "gaborikl/errors.hpp"
#include "gaborikl/log.hpp"

namespace gaborikl {

using std::numbers::pi;

namespace {

constexpr double kInvPhi = 0.6180339887498949;  // 1 / golden ratio
constexpr int kGoldenEvals = 40;

bool is_integral(double v) { return v == std::floor(v) && std::fabs(v) < 1e9; }

double clamp_nu_range(double nu, double lo, double hi) { return std::clamp(nu, lo, hi); }

struct SearchBounds {
  double nu_lo;
  double nu_hi;
};

SearchBounds bounds_of(const SiklConfig& cfg) {
  return {omega_to_nu(cfg.stabilizer.omega_u0()), omega_to_nu(cfg.stabilizer.omega_l0())};
}

double score_at(const QuadraticFormField& field, const Stabilizer& s, double nu, double theta) {
  const GaborParams g{nu_to_omega(nu), canonical_theta(theta)};
  const double weight = s(g.omega);
  if (weight == 0.0) return 0.0;
  return 0.5 * weight * field(g);
}

struct GridBest {
  double nu = 0.0;
  double theta = 0.0;
  double score = -std::numeric_limits<double>::infinity();
};

GridBest grid_search(const QuadraticFormField& field, const SiklConfig& cfg) {
  const SearchBounds b = bounds_of(cfg);
  GridBest best;
  for (int k = 0; k < cfg.grid_nu_steps; ++k) {
    const double nu = b.nu_lo + (b.nu_hi - b.nu_lo) * k / (cfg.grid_nu_steps - 1);
    for (int m = 0; m < cfg.grid_theta_steps; ++m) {
      const double theta = pi * m / cfg.grid_theta_steps;
      const double s = score_at(field, cfg.stabilizer, nu, theta);
      if (s > best.score) best = {nu, theta, s};
    }
  }
  return best;
}

// Golden-section maximization of f on [a, b]; returns the best abscissa evaluated.
template <class F>
std::pair<double, double> golden_max(F&& f, double a, double b) {
  double x1 = b - kInvPhi * (b - a);
  double x2 = a + kInvPhi * (b - a);
  double f1 = f(x1);
  double f2 = f(x2);
  for (int it = 0; it < kGoldenEvals; ++it) {
    if (f1 >= f2) {
      b = x2;
      x2 = x1;
      f2 = f1;
      x1 = b - kInvPhi * (b - a);
      f1 = f(x1);
    } else {
      a = x1;
      x1 = x2;
      f1 = f2;
      x2 = a + kInvPhi * (b - a);
      f2 = f(x2);
    }
  }
  return f1 >= f2 ? std::pair{x1, f1} : std::pair{x2, f2};
}

Eigen::MatrixXd effective_gram(std::span<const Eigen::MatrixXd> grams,
                               std::span<const GaborParams> active,
                               const std::vector<double>& p, const Stabilizer& s) {
  Eigen::MatrixXd k = Eigen::MatrixXd::Zero(grams[0].rows(), grams[0].cols());
  for (std::size_t j = 0; j < grams.size(); ++j) {
    const double w = p[j] * s(active[j].omega);
    if (w != 0.0) k.noalias() += w * grams[j];
  }
  return k;
}

struct MasterPoint {
  std::vector<double> p;
  SvrSolution svr;
  std::vector<double> scores;
  bool inexact = false;
};

MasterPoint evaluate_master(std::span<const GaborParams> active,
                            std::span<const Eigen::MatrixXd> grams,
                            std::span<const double> targets, const SiklConfig& cfg,
                            std::vector<double> p, const std::optional<Eigen::VectorXd>& warm) {
  const Eigen::MatrixXd k = effective_gram(grams, active, p, cfg.stabilizer);
  MasterPoint mp{std::move(p), {}, {}};
  try {
    mp.svr = solve_svr(k, targets, cfg.svr, warm);
  } catch (const ConvergenceError<SvrSolution>& e) {
    GABORIKL_WARN(e.what() << "; continuing from the best iterate");
    mp.svr = e.best();
    mp.inexact = true;
  }
  mp.scores.resize(grams.size());
  for (std::size_t j = 0; j < grams.size(); ++j) {
    const Eigen::VectorXd& d = mp.svr.dual_coef;
    mp.scores[j] = 0.5 * cfg.stabilizer(active[j].omega) * d.dot(grams[j] * d);
  }
  return mp;
}

double stationarity_gap(const MasterPoint& mp) {
  double hi = -std::numeric_limits<double>::infinity();
  double lo = std::numeric_limits<double>::infinity();
  for (std::size_t j = 0; j < mp.p.size(); ++j) {
    hi = std::max(hi, mp.scores[j]);
    if (mp.p[j] > 0.0) lo = std::min(lo, mp.scores[j]);
  }
  return hi - lo;
}

// Directional derivative of J along D is -sum_j D_j s_j.
double slope_along(const std::vector<double>& D, const std::vector<double>& scores) {
  double s = 0.0;
  for (std::size_t j = 0; j < D.size(); ++j) s -= D[j] * scores[j];
  return s;
}

std::vector<double> step(const std::vector<double>& p, const std::vector<double>& D, double gamma,
                         double gamma_max, const std::vector<std::size_t>& blocking) {
  std::vector<double> q(p.size());
  double sum = 0.0;
  for (std::size_t j = 0; j < p.size(); ++j) {
    q[j] = std::max(p[j] + gamma * D[j], 0.0);
  }
  if (gamma == gamma_max) {
    for (std::size_t j : blocking) q[j] = 0.0;
  }
  for (double v : q) sum += v;
  for (double& v : q) v /= sum;
  return q;
}

// Euclidean projection onto the probability simplex.
std::vector<double> project_simplex(std::vector<double> v) {
  std::vector<double> u = v;
  std::sort(u.begin(), u.end(), std::greater<>());
  double acc = 0.0, shift = 0.0;
  for (std::size_t i = 0; i < u.size(); ++i) {
    acc += u[i];
    const double t = (acc - 1.0) / static_cast<double>(i + 1);
    if (u[i] - t > 0.0) shift = t;
  }
  for (double& x : v) x = std::max(x - shift, 0.0);
  return v;
}

// Minimizer over the simplex of the second-order model of J around `mp`. With the free set of
// the SVR solution held fixed the Hessian is A' M A, where column j of A is (G_j K_j d) on the
// free set and M is the top-left block of the inverse bordered free-set Gram.
std::optional<std::vector<double>> newton_target(const MasterPoint& mp,
                                                 std::span<const GaborParams> active,
                                                 std::span<const Eigen::MatrixXd> grams,
                                                 const SiklConfig& cfg) {
  const Eigen::VectorXd& d = mp.svr.dual_coef;
  const double c = cfg.svr.validated().C;
  std::vector<Eigen::Index> free;
  for (Eigen::Index i = 0; i < d.size(); ++i) {
    if (d[i] != 0.0 && std::fabs(d[i]) < c) free.push_back(i);
  }
  const auto nf = static_cast<Eigen::Index>(free.size());
  const auto m = static_cast<Eigen::Index>(active.size());
  if (nf == 0 || nf > 1500) return std::nullopt;

  const Eigen::MatrixXd k = effective_gram(grams, active, mp.p, cfg.stabilizer);
  Eigen::MatrixXd q = Eigen::MatrixXd::Zero(nf + 1, nf + 1);
  Eigen::MatrixXd a = Eigen::MatrixXd::Zero(nf + 1, m);
  for (Eigen::Index r = 0; r < nf; ++r) {
    for (Eigen::Index s = 0; s < nf; ++s) q(r, s) = k(free[r], free[s]);
    q(r, nf) = q(nf, r) = 1.0;
  }
  for (Eigen::Index j = 0; j < m; ++j) {
    const Eigen::VectorXd col = cfg.stabilizer(active[j].omega) * (grams[j] * d);
    for (Eigen::Index r = 0; r < nf; ++r) a(r, j) = col[free[r]];
  }
  const Eigen::MatrixXd x = q.completeOrthogonalDecomposition().solve(a);
  Eigen::MatrixXd h = a.topRows(nf).transpose() * x.topRows(nf);
  h = 0.5 * (h + h.transpose());
  if (!h.allFinite()) return std::nullopt;

  // Accelerated projected gradient on g'(z - p) + 1/2 (z - p)' H (z - p).
  const double lip = h.cwiseAbs().rowwise().sum().maxCoeff();
  if (!(lip > 0.0)) return std::nullopt;
  const Eigen::Map<const Eigen::VectorXd> p0(mp.p.data(), m);
  Eigen::VectorXd g(m);
  for (Eigen::Index j = 0; j < m; ++j) g[j] = -mp.scores[static_cast<std::size_t>(j)];
  Eigen::VectorXd z = p0, y = p0;
  double t = 1.0;
  for (int it = 0; it < 3000; ++it) {
    const Eigen::VectorXd grad = g + h * (y - p0);
    std::vector<double> raw(static_cast<std::size_t>(m));
    for (Eigen::Index j = 0; j < m; ++j) raw[static_cast<std::size_t>(j)] = y[j] - grad[j] / lip;
    const std::vector<double> proj = project_simplex(std::move(raw));
    const Eigen::VectorXd next = Eigen::Map<const Eigen::VectorXd>(proj.data(), m);
    const double t_next = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * t * t));
    y = next + ((t - 1.0) / t_next) * (next - z);
    if ((next - z).cwiseAbs().maxCoeff() < 1e-14) {
      z = next;
      break;
    }
    z = next;
    t = t_next;
  }
  return std::vector<double>(z.data(), z.data() + m);
}

MasterResult to_result(MasterPoint mp, int iterations, bool inexact) {
  MasterResult r;
  r.inexact = inexact;
  r.stationarity = stationarity_gap(mp);
  r.objective = mp.svr.dual_objective;
  r.weights = std::move(mp.p);
  r.svr = std::move(mp.svr);
  r.scores = std::move(mp.scores);
  r.iterations = iterations;
  return r;
}

}  // namespace

void SiklConfig::validate() const {
  (void)svr.validated();
  if (grid_nu_steps < 2 || grid_theta_steps < 2) throw DomainError("grid steps must be >= 2");
  if (refine_iters < 0) throw DomainError("refine_iters must be >= 0");
  if (!(violation_tol > 0.0)) throw DomainError("violation_tol must be > 0");
  if (max_outer_iters < 1) throw DomainError("max_outer_iters must be >= 1");
  if (!(weight_prune_tol >= 0.0)) throw DomainError("weight_prune_tol must be >= 0");
  if (max_master_iters < 1) throw DomainError("max_master_iters must be >= 1");
}

QuadraticFormField::QuadraticFormField(const Eigen::VectorXd& dual_coef,
                                       std::span<const PixelCoord> points) {
  if (static_cast<std::size_t>(dual_coef.size()) != points.size()) {
    throw DomainError("kernel score: dual_coef and points differ in length");
  }
  std::vector<std::size_t> nz;
  bool integral = true;
  for (std::size_t i = 0; i < points.size(); ++i) {
    const double di = dual_coef[static_cast<Eigen::Index>(i)];
    if (di == 0.0) continue;
    nz.push_back(i);
    diagonal_ += di * di;
    integral = integral && is_integral(points[i].x) && is_integral(points[i].y);
  }
  zero_ = nz.empty();

  auto push = [this](double dx, double dy, double w) {
    dx_.push_back(dx);
    dy_.push_back(dy);
    r2_.push_back(dx * dx + dy * dy);
    w_.push_back(w);
  };
  // k is even in the displacement, so (dx, dy) and (-dx, -dy) share a slot.
  if (integral) {
    std::unordered_map<std::int64_t, std::size_t> slot;
    slot.reserve(nz.size() * 4);
    for (std::size_t a = 0; a < nz.size(); ++a) {
      const PixelCoord pa = points[nz[a]];
      const double da = dual_coef[static_cast<Eigen::Index>(nz[a])];
      for (std::size_t b = a + 1; b < nz.size(); ++b) {
        const PixelCoord pb = points[nz[b]];
        auto dx = static_cast<std::int64_t>(pa.x - pb.x);
        auto dy = static_cast<std::int64_t>(pa.y - pb.y);
        if (dx < 0 || (dx == 0 && dy < 0)) {
          dx = -dx;
          dy = -dy;
        }
        const std::int64_t key = (dx << 32) ^ (dy & 0xffffffff);
        const double w = 2.0 * da * dual_coef[static_cast<Eigen::Index>(nz[b])];
        auto [it, fresh] = slot.try_emplace(key, w_.size());
        if (fresh) {
          push(static_cast<double>(dx), static_cast<double>(dy), w);
        } else {
          w_[it->second] += w;
        }
      }
    }
  } else {
    for (std::size_t a = 0; a < nz.size(); ++a) {
      for (std::size_t b = a + 1; b < nz.size(); ++b) {
        const PixelCoord pa = points[nz[a]];
        const PixelCoord pb = points[nz[b]];
        push(pa.x - pb.x, pa.y - pb.y,
             2.0 * dual_coef[static_cast<Eigen::Index>(nz[a])] *
                 dual_coef[static_cast<Eigen::Index>(nz[b])]);
      }
    }
  }
}

double QuadraticFormField::operator()(const GaborParams& g) const noexcept {
  const double w2 = g.omega * g.omega / (8.0 * pi * pi);
  const double cx = g.omega * std::cos(g.theta);
  const double cy = g.omega * std::sin(g.theta);
  double sum = diagonal_;
  for (std::size_t t = 0; t < w_.size(); ++t) {
    sum += w_[t] * std::exp(-w2 * r2_[t]) * std::cos(cx * dx_[t] + cy * dy_[t]);
  }
  return sum;
}

double kernel_score(const Eigen::VectorXd& dual_coef, const GaborParams& g,
                    std::span<const PixelCoord> points, const Stabilizer& s) {
  const QuadraticFormField field(dual_coef, points);
  if (field.zero()) return 0.0;
  return 0.5 * s(g.omega) * field(g);
}

Candidate search_candidate(const Eigen::VectorXd& dual_coef, std::span<const PixelCoord> points,
                           const SiklConfig& cfg) {
  return search_candidate(QuadraticFormField(dual_coef, points), cfg);
}

Candidate search_candidate(const QuadraticFormField& field, const SiklConfig& cfg) {
  Candidate out;
  if (field.zero()) {
    GABORIKL_DEBUG("search_candidate: zero dual vector, no ascent direction");
    out.params = GaborParams{nu_to_omega(0.0), 0.0};
    return out;
  }
  const SearchBounds b = bounds_of(cfg);
  const GridBest g = grid_search(field, cfg);
  const double nu_step = (b.nu_hi - b.nu_lo) / (cfg.grid_nu_steps - 1);
  const double theta_step = pi / cfg.grid_theta_steps;

  double nu = g.nu;
  double theta = g.theta;
  double best = g.score;
  const double nu_a = clamp_nu_range(g.nu - nu_step, b.nu_lo, b.nu_hi);
  const double nu_b = clamp_nu_range(g.nu + nu_step, b.nu_lo, b.nu_hi);
  const double th_a = g.theta - theta_step;
  const double th_b = g.theta + theta_step;
  for (int sweep = 0; sweep < cfg.refine_iters; ++sweep) {
    const double before = best;
    auto [nu_new, s_nu] = golden_max(
        [&](double v) { return score_at(field, cfg.stabilizer, v, theta); }, nu_a, nu_b);
    if (s_nu > best) {
      best = s_nu;
      nu = nu_new;
    }
    auto [th_new, s_th] = golden_max(
        [&](double v) { return score_at(field, cfg.stabilizer, nu, v); }, th_a, th_b);
    if (s_th > best) {
      best = s_th;
      theta = th_new;
    }
    if (!(best > before)) break;
  }
  out.params = GaborParams::make(nu_to_omega(nu), theta);
  out.score = best;
  out.grid_score = g.score;
  out.ascent = true;
  return out;
}

MasterResult solve_master(std::span<const GaborParams> active,
                          std::span<const Eigen::MatrixXd> grams,
                          std::span<const double> targets, const SiklConfig& cfg,
                          double stationarity_tol, std::optional<std::vector<double>> warm_weights,
                          std::optional<Eigen::VectorXd> warm_coef) {
  if (active.empty()) throw DomainError("solve_master: empty active set");
  if (active.size() != grams.size()) throw DomainError("solve_master: one Gram per kernel");
  for (const auto& k : grams) {
    if (k.rows() != grams[0].rows() || k.cols() != grams[0].cols()) {
      throw DomainError("solve_master: Grams are over different point sets");
    }
  }
  const std::size_t m = active.size();
  std::vector<double> p(m, 1.0 / static_cast<double>(m));
  if (warm_weights) {
    if (warm_weights->size() != m) throw DomainError("solve_master: warm weights size");
    p = *warm_weights;
    double sum = 0.0;
    for (double& v : p) sum += (v = std::max(v, 0.0));
    if (!(sum > 0.0)) throw DomainError("solve_master: warm weights sum to zero");
    for (double& v : p) v /= sum;
  }

  bool inexact = false;
  auto evaluate_tracked = [&](std::vector<double> q, const std::optional<Eigen::VectorXd>& warm) {
    MasterPoint mp = evaluate_master(active, grams, targets, cfg, std::move(q), warm);
    inexact = inexact || mp.inexact;
    return mp;
  };
  // Vertex steps recur across iterations; their solves are reused.
  std::map<std::vector<double>, MasterPoint> vertices;
  auto evaluate = [&](std::vector<double> q, const Eigen::VectorXd& warm) {
    const bool vertex = std::count(q.begin(), q.end(), 0.0) > 0;
    if (vertex) {
      if (auto hit = vertices.find(q); hit != vertices.end()) return hit->second;
    }
    MasterPoint mp = evaluate_tracked(q, warm);
    if (vertex) vertices.emplace(std::move(q), mp);
    return mp;
  };

  MasterPoint cur = evaluate_tracked(p, warm_coef);
  int it = 0;
  for (; m > 1; ++it) {
    if (stationarity_gap(cur) <= stationarity_tol) break;
    if (it >= cfg.max_master_iters) {
      throw ConvergenceError<MasterResult>(
          "solve_master: no stationary point after " + std::to_string(it) + " iterations",
          to_result(std::move(cur), it, inexact));
    }
    if (auto target = newton_target(cur, active, grams, cfg)) {
      std::vector<double> dir(m);
      for (std::size_t j = 0; j < m; ++j) dir[j] = (*target)[j] - cur.p[j];
      const double slope = slope_along(dir, cur.scores);
      bool moved = false;
      for (double gamma = 1.0; slope < 0.0 && gamma > 1e-3; gamma *= 0.5) {
        std::vector<double> q(m);
        double sum = 0.0;
        for (std::size_t j = 0; j < m; ++j) sum += (q[j] = std::max(cur.p[j] + gamma * dir[j], 0.0));
        for (double& v : q) v /= sum;
        MasterPoint trial = evaluate(std::move(q), cur.svr.dual_coef);
        if (trial.svr.dual_objective <= cur.svr.dual_objective + 1e-4 * gamma * slope) {
          cur = std::move(trial);
          moved = true;
          break;
        }
      }
      if (moved) continue;
    }
    std::size_t lead = 0;
    for (std::size_t j = 1; j < m; ++j) {
      if (cur.p[j] > cur.p[lead]) lead = j;
    }
    std::vector<double> D(m, 0.0);
    for (std::size_t j = 0; j < m; ++j) {
      if (j == lead) continue;
      const double diff = cur.scores[j] - cur.scores[lead];
      if (cur.p[j] == 0.0 && diff < 0.0) continue;
      D[j] = diff;
      D[lead] -= diff;
    }
    double gamma_max = std::numeric_limits<double>::infinity();
    std::vector<std::size_t> blocking;
    for (std::size_t j = 0; j < m; ++j) {
      if (D[j] < 0.0) {
        const double g = -cur.p[j] / D[j];
        if (g < gamma_max) {
          gamma_max = g;
          blocking.assign(1, j);
        } else if (g == gamma_max) {
          blocking.push_back(j);
        }
      }
    }
    if (!std::isfinite(gamma_max)) break;

    const double slope0 = slope_along(D, cur.scores);
    if (!(slope0 < 0.0)) break;
    const std::vector<double> base = cur.p;
    MasterPoint far = evaluate(step(base, D, gamma_max, gamma_max, blocking), cur.svr.dual_coef);
    const double slope_far = slope_along(D, far.scores);
    if (slope_far <= 0.0 && far.svr.dual_objective <= cur.svr.dual_objective) {
      cur = std::move(far);
      continue;
    }
    // Illinois regula falsi on the directional derivative over [0, gamma_max].
    const double j0 = cur.svr.dual_objective;
    double lo = 0.0, hi = gamma_max, s_lo = slope0, s_hi = slope_far;
    int side = 0;
    MasterPoint best = far.svr.dual_objective < j0 ? std::move(far) : std::move(cur);
    for (int ls = 0; ls < 12 && s_hi > 0.0; ++ls) {
      double gamma = (lo * s_hi - hi * s_lo) / (s_hi - s_lo);
      const double width = hi - lo;
      // Badly scaled slopes pin the secant to one end; bisect instead.
      if (!(gamma > lo + 0.1 * width && gamma < hi - 0.1 * width)) gamma = lo + 0.5 * width;
      MasterPoint trial =
          evaluate_tracked(step(base, D, gamma, gamma_max, blocking), best.svr.dual_coef);
      const double s_mid = slope_along(D, trial.scores);
      const bool better = trial.svr.dual_objective < best.svr.dual_objective;
      if (better) best = std::move(trial);
      if (std::fabs(s_mid) <= 0.1 * std::fabs(slope0)) break;
      if (s_mid < 0.0) {
        lo = gamma;
        s_lo = s_mid;
        if (side == -1) s_hi *= 0.5;
        side = -1;
      } else {
        hi = gamma;
        s_hi = s_mid;
        if (side == 1) s_lo *= 0.5;
        side = 1;
      }
    }
    if (!(best.svr.dual_objective < j0)) {
      // The inner solves are only accurate to kkt_tol; no further decrease is resolvable.
      GABORIKL_DEBUG("solve_master: line search stalled at gap " << stationarity_gap(best));
      cur = std::move(best);
      break;
    }
    cur = std::move(best);
  }

  std::vector<double> pruned = cur.p;
  bool changed = false;
  for (double& v : pruned) {
    if (v > 0.0 && v < cfg.weight_prune_tol) {
      v = 0.0;
      changed = true;
    }
  }
  if (changed) {
    double sum = 0.0;
    for (double v : pruned) sum += v;
    for (double& v : pruned) v /= sum;
    cur = evaluate_tracked(std::move(pruned), cur.svr.dual_coef);
  }
  return to_result(std::move(cur), it, inexact);
}

SiklModel run_sikl(std::span<const PixelCoord> points, std::span<const double> targets,
                   const SiklConfig& cfg) {
  cfg.validate();
  if (points.size() < 2) throw DomainError("run_sikl: need at least 2 training points");
  if (targets.size() != points.size()) {
    throw DomainError("run_sikl: " + std::to_string(points.size()) + " points but " +
                      std::to_string(targets.size()) + " targets");
  }
  const auto n = static_cast<Eigen::Index>(points.size());
  const Eigen::Map<const Eigen::VectorXd> y(targets.data(), n);
  if (!y.allFinite()) throw DomainError("run_sikl: non-finite target");

  // First kernel: best grid node for the centered targets used as a stand-in dual vector.
  const Eigen::VectorXd proxy = (y.array() - y.mean()).matrix();
  const GridBest first = grid_search(QuadraticFormField(proxy, points), cfg);

  std::vector<GaborParams> active{GaborParams::make(nu_to_omega(first.nu), first.theta)};
  std::vector<Eigen::MatrixXd> grams{gram(active[0], points).values};
  std::optional<std::vector<double>> warm_p;
  std::optional<Eigen::VectorXd> warm_d;

  SiklModel model;
  model.train_points.assign(points.begin(), points.end());
  model.mixture.stabilizer = cfg.stabilizer;
  double tol = 0.0;
  bool capped = false;
  MasterResult master;
  for (int outer = 0;; ++outer) {
    try {
      master = solve_master(active, grams, targets, cfg, tol, warm_p, warm_d);
    } catch (const ConvergenceError<MasterResult>& e) {
      GABORIKL_WARN(e.what() << "; continuing from the best weights");
      master = e.best();
      master.inexact = true;
    }
    capped = capped || master.inexact;
    if (outer == 0) {
      tol = cfg.violation_tol_relative
                ? cfg.violation_tol * std::max(std::fabs(master.objective), 1e-12)
                : cfg.violation_tol;
      model.violation_tol = tol;
    }
    const QuadraticFormField field(master.svr.dual_coef, points);
    double max_active = 0.0;
    for (std::size_t j = 0; j < active.size() && !field.zero(); ++j) {
      if (master.weights[j] <= 0.0) continue;
      max_active = std::max(max_active, 0.5 * cfg.stabilizer(active[j].omega) * field(active[j]));
    }
    SiklIteration rec;
    rec.iteration = outer;
    rec.objective = master.objective;
    rec.max_active_score = max_active;
    rec.active_count = static_cast<int>(active.size());
    const Candidate cand = search_candidate(field, cfg);
    rec.candidate = cand.params;
    rec.candidate_score = cand.score;
    const bool violates = cand.ascent && cand.score > max_active + tol;
    GABORIKL_DEBUG("sikl iter " << outer << ": J=" << master.objective << " active="
                                << active.size() << " max_active=" << max_active
                                << " candidate nu=" << omega_to_nu(cand.params.omega)
                                << " theta=" << cand.params.theta << " score=" << cand.score
                                << " master_iters=" << master.iterations);
    if (!violates) {
      model.converged = true;
      model.history.push_back(rec);
      break;
    }
    if (outer + 1 >= cfg.max_outer_iters) {
      model.history.push_back(rec);
      GABORIKL_WARN("run_sikl: stopped at max_outer_iters = " << cfg.max_outer_iters
                                                            << " with an open violation");
      break;
    }
    rec.added = true;
    model.history.push_back(rec);
    active.push_back(cand.params);
    grams.push_back(gram(cand.params, points).values);
    warm_p = master.weights;
    warm_p->push_back(0.0);
    warm_d = master.svr.dual_coef;
  }

  if (capped) model.converged = false;
  model.objective = master.objective;
  model.svr = std::move(master.svr);
  if (!model.svr.support.empty()) {
    for (std::size_t j = 0; j < active.size(); ++j) {
      if (master.weights[j] <= 0.0) continue;
      model.mixture.components.push_back(
          {master.weights[j] * cfg.stabilizer(active[j].omega), active[j]});
    }
  }
  return model;
}

SiklModel fit_region(const ImageRegion& region, const SiklConfig& cfg, std::size_t max_points,
                     std::uint64_t seed) {
  const TrainingSet ts = to_training_set(region, max_points, seed);
  SiklModel model = run_sikl(ts.points, ts.targets, cfg);
  model.norm = ts.norm;
  model.width = region.width;
  model.height = region.height;
  return model;
}

double predict(const SiklModel& model, PixelCoord query) {
  return predict(model.svr, model.mixture, model.train_points, query);
}

TerminationReport termination_certificate(const SiklModel& model, const SiklConfig& cfg) {
  TerminationReport rep;
  rep.tolerance = model.violation_tol;
  rep.truncated = !model.converged;
  const QuadraticFormField field(model.svr.dual_coef, model.train_points);
  if (field.zero()) {
    rep.certified = true;
    return rep;
  }
  SiklConfig c = cfg;
  c.stabilizer = model.mixture.stabilizer;
  for (const auto& comp : model.mixture.components) {
    rep.max_active_score =
        std::max(rep.max_active_score, 0.5 * c.stabilizer(comp.params.omega) * field(comp.params));
  }
  rep.candidate = search_candidate(field, c);
  rep.gap = rep.candidate.score - rep.max_active_score;
  rep.certified = rep.gap <= rep.tolerance;
  return rep;
}

}  // namespace gaborikl
