#include "gaborikl/sparsify.hpp"

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "gaborikl/errors.hpp"
#include "gaborikl/log.hpp"
#include "gaborikl/sikl.hpp"

namespace gaborikl {

namespace {

double soft_threshold(double v, double t) {
  if (v > t) return v - t;
  if (v < -t) return v + t;
  return 0.0;
}

}  // namespace

std::vector<PixelCoord> pixel_grid(int width, int height) {
  std::vector<PixelCoord> out;
  out.reserve(static_cast<std::size_t>(std::max(width, 0)) * std::max(height, 0));
  for (int y = 0; y < height; ++y) {
    for (int x = 0; x < width; ++x) out.push_back({double(x), double(y)});
  }
  return out;
}

SparsifyProblem build_problem(const SiklModel& model, std::size_t j,
                              std::span<const PixelCoord> eval_points, double lambda) {
  if (j >= model.mixture.components.size()) {
    throw DomainError("build_problem: kernel index " + std::to_string(j) + " outside a mixture of " +
                      std::to_string(model.mixture.components.size()));
  }
  if (!(lambda >= 0.0)) throw DomainError("build_problem: lambda must be >= 0");
  const MixtureComponent& comp = model.mixture.components[j];
  SparsifyProblem p;
  p.lambda = lambda;
  p.params = comp.params;
  if (eval_points.empty()) {
    p.eval_points = model.width > 0 ? pixel_grid(model.width, model.height) : model.train_points;
  } else {
    p.eval_points.assign(eval_points.begin(), eval_points.end());
  }
  Eigen::VectorXd coef(static_cast<Eigen::Index>(model.svr.support.size()));
  for (std::size_t s = 0; s < model.svr.support.size(); ++s) {
    const std::size_t i = model.svr.support[s];
    p.support_points.push_back(model.train_points[i]);
    coef[static_cast<Eigen::Index>(s)] = model.svr.dual_coef[static_cast<Eigen::Index>(i)];
  }
  p.design = cross_gram(comp.params, p.eval_points, p.support_points);
  p.target = comp.weight * (p.design * coef);
  p.degenerate = p.support_points.empty() || comp.weight == 0.0;
  return p;
}

double lasso_objective(const SparsifyProblem& p, const Eigen::VectorXd& rho) {
  const auto l = static_cast<double>(p.design.rows());
  const double fit = l > 0 ? (p.target - p.design * rho).squaredNorm() / l : 0.0;
  return fit + p.lambda * rho.lpNorm<1>();
}

Eigen::VectorXd lasso(const SparsifyProblem& p, const LassoOptions& opts) {
  if (!(p.lambda >= 0.0)) throw DomainError("lasso: lambda must be >= 0");
  if (p.design.rows() != p.target.size()) throw DomainError("lasso: design/target mismatch");
  const Eigen::Index cols = p.design.cols();
  Eigen::VectorXd rho = Eigen::VectorXd::Zero(cols);
  if (cols == 0 || p.design.rows() == 0) return rho;
  // Without the penalty the objective is plain least squares; coordinate descent would crawl
  // on the strongly correlated columns.
  if (p.lambda == 0.0) return p.design.completeOrthogonalDecomposition().solve(p.target);

  const double scale = 2.0 / static_cast<double>(p.design.rows());
  const Eigen::VectorXd curvature = scale * p.design.colwise().squaredNorm().transpose();
  Eigen::VectorXd resid = p.target;
  auto sweep_once = [&] {
    double max_step = 0.0;
    for (Eigen::Index i = 0; i < cols; ++i) {
      if (curvature[i] == 0.0) continue;
      const double c = scale * p.design.col(i).dot(resid) + curvature[i] * rho[i];
      const double next = soft_threshold(c, p.lambda) / curvature[i];
      const double delta = next - rho[i];
      if (delta != 0.0) {
        resid.noalias() -= delta * p.design.col(i);
        rho[i] = next;
        max_step = std::max(max_step, std::fabs(delta));
      }
    }
    return max_step;
  };

  std::vector<int> signs(static_cast<std::size_t>(cols), 0);
  auto pattern_changed = [&] {
    bool changed = false;
    for (Eigen::Index i = 0; i < cols; ++i) {
      const int sg = rho[i] > 0.0 ? 1 : (rho[i] < 0.0 ? -1 : 0);
      changed = changed || sg != signs[static_cast<std::size_t>(i)];
      signs[static_cast<std::size_t>(i)] = sg;
    }
    return changed;
  };

  // Largest violation of the subgradient conditions. Nearly singular designs reach it long
  // before individual updates settle.
  auto kkt_violation = [&] {
    const Eigen::VectorXd g = scale * (p.design.transpose() * resid);
    double worst = 0.0;
    for (Eigen::Index i = 0; i < cols; ++i) {
      const double v = rho[i] > 0.0   ? std::fabs(g[i] - p.lambda)
                       : rho[i] < 0.0 ? std::fabs(g[i] + p.lambda)
                                      : std::max(0.0, std::fabs(g[i]) - p.lambda);
      worst = std::max(worst, v);
    }
    return worst;
  };

  for (long sweep = 0; sweep < opts.max_sweeps; ++sweep) {
    if (sweep_once() < opts.tol || kkt_violation() <= opts.tol) return rho;
    if (pattern_changed()) continue;
    // Stable sign pattern: step toward the stationary point of that pattern. Inside the orthant
    // the objective is a quadratic along the step, so take its exact minimizer, stopping where
    // the first coordinate reaches zero.
    std::vector<Eigen::Index> active;
    for (Eigen::Index i = 0; i < cols; ++i) {
      if (signs[static_cast<std::size_t>(i)] != 0) active.push_back(i);
    }
    if (active.empty()) continue;
    const auto na = static_cast<Eigen::Index>(active.size());
    Eigen::MatrixXd ka(p.design.rows(), na);
    Eigen::VectorXd sg(na), cur(na);
    for (Eigen::Index a = 0; a < na; ++a) {
      const Eigen::Index i = active[static_cast<std::size_t>(a)];
      ka.col(a) = p.design.col(i);
      sg[a] = signs[static_cast<std::size_t>(i)];
      cur[a] = rho[i];
    }
    const Eigen::VectorXd rhs = ka.transpose() * p.target - (p.lambda / scale) * sg;
    Eigen::CompleteOrthogonalDecomposition<Eigen::MatrixXd> normal(ka.transpose() * ka);
    normal.setThreshold(1e-10);
    const Eigen::VectorXd target = normal.solve(rhs);
    if (!target.allFinite()) continue;
    const Eigen::VectorXd dir = target - cur;
    const Eigen::VectorXd u = ka * dir;
    const double uu = u.squaredNorm();
    if (!(uu > 0.0)) continue;
    const auto l = static_cast<double>(p.design.rows());
    double t = (u.dot(resid) - 0.5 * l * p.lambda * sg.dot(dir)) / uu;
    Eigen::Index hits = -1;
    for (Eigen::Index a = 0; a < na; ++a) {
      if (dir[a] * sg[a] >= 0.0) continue;
      const double reach = -cur[a] / dir[a];
      if (reach < t) {
        t = reach;
        hits = a;
      }
    }
    if (!(t > 0.0)) continue;
    Eigen::VectorXd next = cur + t * dir;
    if (hits >= 0) next[hits] = 0.0;
    for (Eigen::Index a = 0; a < na; ++a) {
      if (next[a] * sg[a] < 0.0) next[a] = 0.0;
    }
    Eigen::VectorXd candidate = rho;
    for (Eigen::Index a = 0; a < na; ++a) candidate[active[static_cast<std::size_t>(a)]] = next[a];
    const Eigen::VectorXd cand_resid = p.target - p.design * candidate;
    const double before = resid.squaredNorm() / l + p.lambda * rho.lpNorm<1>();
    const double after = cand_resid.squaredNorm() / l + p.lambda * candidate.lpNorm<1>();
    if (!(after <= before)) continue;
    rho = std::move(candidate);
    resid = cand_resid;
    pattern_changed();
  }
  throw ConvergenceError<Eigen::VectorXd>(
      "lasso: no convergence after " + std::to_string(opts.max_sweeps) + " sweeps", rho);
}

std::vector<std::size_t> support_of(const Eigen::VectorXd& rho) {
  std::vector<std::size_t> s;
  for (Eigen::Index i = 0; i < rho.size(); ++i) {
    if (rho[i] != 0.0) s.push_back(static_cast<std::size_t>(i));
  }
  return s;
}

Eigen::VectorXd debias(const SparsifyProblem& p, std::span<const std::size_t> support) {
  Eigen::VectorXd rho = Eigen::VectorXd::Zero(p.design.cols());
  if (support.empty()) return rho;
  Eigen::MatrixXd sub(p.design.rows(), static_cast<Eigen::Index>(support.size()));
  for (std::size_t s = 0; s < support.size(); ++s) {
    if (support[s] >= static_cast<std::size_t>(p.design.cols())) {
      throw DomainError("debias: support index out of range");
    }
    sub.col(static_cast<Eigen::Index>(s)) = p.design.col(static_cast<Eigen::Index>(support[s]));
  }
  const Eigen::VectorXd x = sub.completeOrthogonalDecomposition().solve(p.target);
  for (std::size_t s = 0; s < support.size(); ++s) {
    rho[static_cast<Eigen::Index>(support[s])] = x[static_cast<Eigen::Index>(s)];
  }
  return rho;
}

SparseRepresentation sparsify_model(const SiklModel& model, double lambda,
                                    const LassoOptions& opts) {
  if (!(lambda >= 0.0)) throw DomainError("sparsify: lambda must be >= 0");
  SparseRepresentation rep;
  rep.bias = model.svr.bias;
  rep.norm = model.norm;
  rep.width = model.width;
  rep.height = model.height;
  rep.support_size = model.svr.support.size();
  const auto grid = pixel_grid(model.width, model.height);
  std::size_t total = 0;
  for (std::size_t j = 0; j < model.mixture.components.size(); ++j) {
    const SparsifyProblem prob = build_problem(model, j, grid, lambda);
    Eigen::VectorXd rho = Eigen::VectorXd::Zero(prob.design.cols());
    if (!prob.degenerate) {
      try {
        rho = lasso(prob, opts);
      } catch (const ConvergenceError<Eigen::VectorXd>& e) {
        GABORIKL_WARN("sparsify: kernel " << j << ": " << e.what() << "; keeping the best iterate");
        rho = e.best();
        rep.converged = false;
      }
      const auto pattern = support_of(rho);
      if (!pattern.empty()) rho = debias(prob, pattern);
    }
    SparseKernel k{prob.params, {}};
    for (Eigen::Index i = 0; i < rho.size(); ++i) {
      if (rho[i] != 0.0) k.coeffs.push_back({prob.support_points[static_cast<std::size_t>(i)], rho[i]});
    }
    rep.nonzeros.push_back(k.coeffs.size());
    total += k.coeffs.size();
    rep.kernels.push_back(std::move(k));
  }
  const std::size_t slots = rep.kernels.size() * rep.support_size;
  rep.sparsity_ratio = slots > 0 ? static_cast<double>(total) / static_cast<double>(slots) : 0.0;
  return rep;
}

ImageRegion reconstruct_sparse(const SparseRepresentation& rep, int width, int height) {
  ImageRegion img;
  img.width = width;
  img.height = height;
  img.intensities.resize(static_cast<std::size_t>(width) * height);
  for (int y = 0; y < height; ++y) {
    for (int x = 0; x < width; ++x) {
      const PixelCoord q{double(x), double(y)};
      double v = rep.bias;
      for (const auto& k : rep.kernels) {
        for (const auto& c : k.coeffs) v += c.rho * eval_gabor(k.params, q, c.position);
      }
      img.at(x, y) = rep.norm.restore(v);
    }
  }
  return img;
}

std::vector<std::uint8_t> marker_overlay(const ImageRegion& base, const SparseRepresentation& rep,
                                         int arm) {
  std::vector<std::uint8_t> rgb(base.intensities.size() * 3);
  for (std::size_t i = 0; i < base.intensities.size(); ++i) {
    const auto g = static_cast<std::uint8_t>(
        std::lround(std::clamp(base.intensities[i], 0.0, 1.0) * 255.0));
    rgb[3 * i] = rgb[3 * i + 1] = rgb[3 * i + 2] = g;
  }
  auto paint = [&](long x, long y, bool positive) {
    if (x < 0 || y < 0 || x >= base.width || y >= base.height) return;
    const std::size_t at = 3 * (static_cast<std::size_t>(y) * base.width + x);
    rgb[at] = positive ? 255 : 0;
    rgb[at + 1] = positive ? 0 : 255;
    rgb[at + 2] = 0;
  };
  for (const auto& k : rep.kernels) {
    for (const auto& c : k.coeffs) {
      const long cx = std::lround(c.position.x);
      const long cy = std::lround(c.position.y);
      for (int a = -arm; a <= arm; ++a) {
        paint(cx + a, cy, c.rho > 0.0);
        paint(cx, cy + a, c.rho > 0.0);
      }
    }
  }
  return rgb;
}

}  // namespace gaborikl
