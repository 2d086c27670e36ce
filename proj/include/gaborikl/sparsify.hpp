#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "gaborikl/gabor_kernels.hpp"
#include "gaborikl/imaging.hpp"

namespace gaborikl {

struct SiklModel;

/// One kernel's share of the support-vector expansion, b ~ K rho.
struct SparsifyProblem {
  Eigen::VectorXd target;                ///< b_n = sum_i mu_j d_i k_j(pt_n, sv_i)
  Eigen::MatrixXd design;                ///< K_{n,i} = k_j(pt_n, sv_i)
  double lambda = 0.1;
  GaborParams params;
  std::vector<PixelCoord> support_points;  ///< column positions
  std::vector<PixelCoord> eval_points;     ///< row positions
  bool degenerate = false;               ///< empty support or zero weight: b is identically 0
};

/// Full raster of a width x height region in row-major order.
std::vector<PixelCoord> pixel_grid(int width, int height);

/// Throws DomainError if j is outside the mixture. Eval points default to the model's raster.
SparsifyProblem build_problem(const SiklModel& model, std::size_t j,
                              std::span<const PixelCoord> eval_points = {},
                              double lambda = 0.1);

struct LassoOptions {
  double tol = 1e-8;   ///< stop when a sweep moves no coordinate more than this, or the subgradient conditions hold within it
  long max_sweeps = 100'000;
};

/// (1/l) ||b - K rho||^2 + lambda ||rho||_1.
double lasso_objective(const SparsifyProblem& p, const Eigen::VectorXd& rho);

/// Cyclic coordinate descent with soft thresholding in ascending column order; lambda = 0 is
/// solved directly as minimum-norm least squares. Throws DomainError for lambda < 0 and
/// ConvergenceError<Eigen::VectorXd> when sweeps run out.
Eigen::VectorXd lasso(const SparsifyProblem& p, const LassoOptions& opts = {});

/// Least squares restricted to the columns in `support` (minimum-norm when rank deficient);
/// every other coefficient is exactly zero.
Eigen::VectorXd debias(const SparsifyProblem& p, std::span<const std::size_t> support);

/// Nonzero pattern of a coefficient vector, ascending.
std::vector<std::size_t> support_of(const Eigen::VectorXd& rho);

struct SparseCoeff {
  PixelCoord position;
  double rho = 0.0;
};

struct SparseKernel {
  GaborParams params;
  std::vector<SparseCoeff> coeffs;  ///< nonzeros only
};

struct SparseRepresentation {
  double bias = 0.0;
  std::vector<SparseKernel> kernels;  ///< same order as the source mixture
  NormState norm;
  int width = 0;
  int height = 0;
  std::size_t support_size = 0;        ///< support vectors of the source model
  std::vector<std::size_t> nonzeros;   ///< per kernel
  double sparsity_ratio = 0.0;         ///< total nonzeros / (kernels * support_size)
  bool converged = true;               ///< false if some LASSO hit its sweep cap; its best iterate is kept
};

SparseRepresentation sparsify_model(const SiklModel& model, double lambda,
                                    const LassoOptions& opts = {});

/// Un-normalized raster of sum_j sum_i rho_ji k_j(., sv_i) + b.
ImageRegion reconstruct_sparse(const SparseRepresentation& rep, int width, int height);

/// RGB overlay: grayscale image with a plus mark at every nonzero coefficient, red for
/// positive and green for negative.
std::vector<std::uint8_t> marker_overlay(const ImageRegion& base, const SparseRepresentation& rep,
                                         int arm = 2);

}  // namespace gaborikl
