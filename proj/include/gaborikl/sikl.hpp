#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "gaborikl/gabor_kernels.hpp"
#include "gaborikl/imaging.hpp"
#include "gaborikl/stabilizer.hpp"
#include "gaborikl/svr.hpp"

namespace gaborikl {

struct SiklConfig {
  SvrConfig svr;
  Stabilizer stabilizer = Stabilizer::defaults();
  int grid_nu_steps = 45;
  int grid_theta_steps = 32;
  int refine_iters = 20;
  /// Exchange tolerance. When `violation_tol_relative` is set it is multiplied by |J| of
  /// the first master problem.
  double violation_tol = 1e-4;
  bool violation_tol_relative = true;
  int max_outer_iters = 30;
  double weight_prune_tol = 1e-6;
  int max_master_iters = 500;

  /// Throws DomainError on out-of-range fields.
  void validate() const;
};

/// Evaluates d' K(g) d for many kernels over one fixed dual vector.
///
/// Pairs of points are folded by displacement (the kernel is translation invariant and
/// even), so on an integer pixel grid the cost per kernel is the number of distinct
/// displacements rather than the number of pairs.
class QuadraticFormField {
 public:
  QuadraticFormField(const Eigen::VectorXd& dual_coef, std::span<const PixelCoord> points);

  double operator()(const GaborParams& g) const noexcept;
  bool zero() const noexcept { return zero_; }
  std::size_t terms() const noexcept { return dx_.size(); }

 private:
  std::vector<double> dx_, dy_, r2_, w_;
  double diagonal_ = 0.0;
  bool zero_ = true;
};

/// 1/2 G(omega) d' K(g) d.
double kernel_score(const Eigen::VectorXd& dual_coef, const GaborParams& g,
                    std::span<const PixelCoord> points, const Stabilizer& s);

struct Candidate {
  GaborParams params;
  double score = 0.0;
  double grid_score = 0.0;  ///< best score on the grid, before refinement
  bool ascent = false;      ///< false when the dual vector is zero
};

/// Grid over nu in [nu(omega_u0), nu(omega_l0)] by theta in [0, pi), then coordinate-wise
/// golden-section refinement around the best node.
Candidate search_candidate(const Eigen::VectorXd& dual_coef, std::span<const PixelCoord> points,
                           const SiklConfig& cfg);
Candidate search_candidate(const QuadraticFormField& field, const SiklConfig& cfg);

struct MasterResult {
  std::vector<double> weights;  ///< simplex weights p, aligned with the active list
  SvrSolution svr;
  double objective = 0.0;       ///< J(p), the optimal dual value for the effective Gram
  std::vector<double> scores;   ///< 1/2 G_j d' K_j d per active kernel
  double stationarity = 0.0;    ///< max score minus min score over the support of p
  int iterations = 0;
  bool inexact = false;         ///< some inner SVR solve hit its iteration cap
};

/// Minimizes J(p) over the simplex by reduced-gradient descent with inner SVR solves.
/// Components with p_j < weight_prune_tol are zeroed. Throws
/// ConvergenceError<MasterResult> after max_master_iters.
MasterResult solve_master(std::span<const GaborParams> active,
                          std::span<const Eigen::MatrixXd> grams,
                          std::span<const double> targets, const SiklConfig& cfg,
                          double stationarity_tol,
                          std::optional<std::vector<double>> warm_weights = std::nullopt,
                          std::optional<Eigen::VectorXd> warm_coef = std::nullopt);

struct SiklIteration {
  int iteration = 0;
  double objective = 0.0;
  double max_active_score = 0.0;
  GaborParams candidate;
  double candidate_score = 0.0;
  bool added = false;
  int active_count = 0;
};

/// Learned representation: image ~ sum_i d_i sum_j mu_j k_j(., x_i) + b, then un-normalized.
struct SiklModel {
  KernelMixture mixture;
  SvrSolution svr;
  std::vector<PixelCoord> train_points;
  NormState norm;
  int width = 0;   ///< raster the model was fit on
  int height = 0;
  std::vector<SiklIteration> history;
  bool converged = false;
  double violation_tol = 0.0;  ///< resolved absolute exchange tolerance
  double objective = 0.0;
};

/// Exchange loop. Throws DomainError for fewer than 2 points. Capped inner solves do not throw;
/// they continue from the best iterate and leave `converged` false.
SiklModel run_sikl(std::span<const PixelCoord> points, std::span<const double> targets,
                   const SiklConfig& cfg);

/// Convenience: training set construction plus run_sikl, with raster size and norm filled in.
SiklModel fit_region(const ImageRegion& region, const SiklConfig& cfg, std::size_t max_points,
                     std::uint64_t seed);

/// Normalized-scale prediction of the model at one pixel.
double predict(const SiklModel& model, PixelCoord query);

struct TerminationReport {
  double max_active_score = 0.0;
  Candidate candidate;
  double gap = 0.0;         ///< candidate score minus max active score
  double tolerance = 0.0;
  bool certified = false;   ///< gap <= tolerance
  bool truncated = false;   ///< the loop hit max_outer_iters
};

TerminationReport termination_certificate(const SiklModel& model, const SiklConfig& cfg);

}  // namespace gaborikl
