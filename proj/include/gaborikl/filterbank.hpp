#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "gaborikl/gabor_kernels.hpp"

namespace gaborikl {

struct SiklModel;

struct ParamSample {
  GaborParams params;
  double weight = 0.0;
  std::string source;
};

struct FilterBank {
  std::vector<GaborParams> filters;
  int k = 0;
  double distortion = 0.0;
};

/// One sample per mixture component of every model, weighted by its mixture weight.
/// `sources` names the models; missing names default to the model index.
std::vector<ParamSample> collect_params(std::span<const SiklModel> models,
                                        std::span<const std::string> sources = {});

/// Squared distance in (nu, mu) units: dnu^2 + (8/pi)^2 circ(dtheta)^2, period pi in theta.
double feature_distance2(const GaborParams& a, const GaborParams& b);

/// Weighted Lloyd iteration in (nu, theta) space, best of `restarts` k-means++ seedings.
struct KMeansOptions {
  int k = 40;
  int restarts = 10;
  std::uint64_t seed = 0;
  bool weighted = true;
  int max_iters = 300;
};

struct KMeansTrace {
  std::vector<std::vector<double>> distortions;  ///< per restart, after each iteration
};

/// Throws DomainError for empty samples or k < 1. Centers closer than 1e-6 in feature space
/// are merged, so the returned bank can hold fewer than k filters.
FilterBank cluster_kmeans(std::span<const ParamSample> samples, const KMeansOptions& opts,
                          KMeansTrace* trace = nullptr);

/// Weighted distortion of fixed centers: sum_i w_i min_c dist2(x_i, c).
double bank_distortion(std::span<const ParamSample> samples, std::span<const GaborParams> centers,
                       bool weighted = true);

/// Minimizer over theta of sum_i w_i circ(theta_i - theta)^2 (exact, period pi).
double circular_centroid(std::span<const double> thetas, std::span<const double> weights);

/// size x size raster of the Gabor centered in the patch, row-major (row = y).
/// Throws DomainError for even or < 3 sizes.
Eigen::MatrixXd rasterize_filter(const GaborParams& g, int size);

/// bank.json, filter_NN.pgm per filter (mapped affinely to [0, 255]) and params.csv.
void export_bank(const FilterBank& bank, int raster_size, const std::filesystem::path& dir);

}  // namespace gaborikl
