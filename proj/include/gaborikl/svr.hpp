#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "gaborikl/gabor_kernels.hpp"

namespace gaborikl {

/// Largest box bound used in place of an infinite C.
inline constexpr double kInfiniteC = 1e12;

struct SvrConfig {
  double epsilon = 0.05;
  double C = 10.0;
  double kkt_tol = 1e-6;
  long max_iter = 2'000'000;

  /// Throws DomainError on out-of-range fields. An infinite C is replaced by kInfiniteC.
  SvrConfig validated() const;
};

/// Dual solution of epsilon-insensitive SVR in difference variables d_i = beta_hat_i - beta_i.
struct SvrSolution {
  Eigen::VectorXd dual_coef;
  double bias = 0.0;
  std::vector<std::size_t> support;  ///< indices with d_i != 0, ascending
  double dual_objective = 0.0;
  long iterations = 0;
  double kkt_violation = 0.0;  ///< max pair violation at exit
};

/// sum y_i d_i - eps sum |d_i| - 1/2 d' K d. Throws DomainError if d violates |d_i| <= C
/// or, when `require_balanced`, sum d_i = 0 (tolerance 1e-8 * l * C).
double dual_objective_of(const Eigen::VectorXd& dual_coef, const Eigen::MatrixXd& gram,
                         std::span<const double> targets, const SvrConfig& cfg,
                         bool require_balanced = true);

/// Pairwise (SMO) coordinate ascent on the dual with maximal-violating-pair selection.
///
/// `gram` must be symmetric positive semidefinite. `warm_start`, when given, must be
/// feasible. Throws DomainError for non-finite targets or mismatched sizes, and
/// ConvergenceError<SvrSolution> when max_iter runs out.
SvrSolution solve_svr(const Eigen::MatrixXd& gram, std::span<const double> targets,
                      const SvrConfig& cfg,
                      const std::optional<Eigen::VectorXd>& warm_start = std::nullopt);

/// Residual-based KKT check of a returned solution; returns the worst violation.
double svr_kkt_residual(const SvrSolution& sol, const Eigen::MatrixXd& gram,
                        std::span<const double> targets, const SvrConfig& cfg);

/// sum_i d_i k_mix(train_i, query) + b. Throws DomainError on length mismatch.
double predict(const SvrSolution& model, const KernelMixture& mixture,
               std::span<const PixelCoord> train_points, PixelCoord query);

}  // namespace gaborikl
