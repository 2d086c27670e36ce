#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "gaborikl/filterbank.hpp"
#include "gaborikl/imaging.hpp"
#include "gaborikl/sikl.hpp"

namespace gaborikl::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitError = 1;   ///< I/O or domain error
inline constexpr int kExitCapped = 2;  ///< finished, but an iteration cap was hit

/// Stabilizer corners as flat values so they can be bound to flags before validation.
struct StabilizerArgs {
  double l0;
  double l1;
  double u1;
  double u0;
  StabilizerArgs();
  Stabilizer build() const;
};

struct LearnArgs {
  SiklConfig sikl;
  StabilizerArgs stab;
  bool absolute_tol = false;
  std::size_t max_points = 2500;
  std::uint64_t seed = 0;
  SiklConfig resolved() const;  ///< validated config with the stabilizer applied
};

struct FitArgs {
  std::filesystem::path image;
  std::string region;                 ///< name in the region list; empty uses the whole image
  std::filesystem::path regions_file; ///< empty uses the built-in face boxes
  std::vector<int> rect;              ///< x y w h, overrides `region`
  std::filesystem::path out = "fit";
  LearnArgs learn;
};

struct SparsifyArgs {
  std::filesystem::path model;
  double lambda = 0.1;
  double tol = 1e-8;
  long max_sweeps = 100'000;
  std::filesystem::path out = "sparse.json";
  std::filesystem::path overlay;         ///< optional PPM with coefficient markers
  std::filesystem::path reconstruction;  ///< optional PGM
  std::filesystem::path image;           ///< optional base for the overlay
};

struct BankArgs {
  std::filesystem::path models;
  KMeansOptions kmeans;
  bool unweighted = false;
  int raster_size = 31;
  std::filesystem::path out = "bank";
};

struct SynthArgs {
  int width = 32;
  int height = 32;
  std::uint64_t seed = 0;
  SynthRanges ranges;
  std::filesystem::path out = "synth.pgm";
  std::filesystem::path truth;  ///< defaults to the image path with a .json extension
};

struct ProfileArgs {
  std::filesystem::path model;
  std::filesystem::path out = "profile.csv";
  double max_radius = 16.0;
  int steps = 161;
  double ray_angle = 0.0;
  std::filesystem::path angular_out;  ///< optional angular-mean profile, same CSV layout
};

struct ReproduceArgs {
  int seeds = 10;
  std::uint64_t first_seed = 1;
  std::filesystem::path out = "reproduce";
  int jobs = 1;
  double lambda = 0.1;
  int width = 32;
  int height = 32;
  SynthRanges ranges;
  LearnArgs learn;
};

/// Recovery of one ground-truth Gabor by a fitted model.
struct Recovery {
  double truth_nu = 0.0;
  double truth_theta = 0.0;
  double learned_nu = 0.0;
  double learned_theta = 0.0;
  double dnu = 0.0;
  double dtheta = 0.0;
  double center_distance = 0.0;  ///< to the nearest nonzero coefficient; NaN when there is none
};

struct SeedReport {
  std::uint64_t seed = 0;
  bool ok = false;
  std::string error;
  bool converged = false;
  std::size_t support = 0;
  std::size_t points = 0;
  std::size_t kernels = 0;
  std::size_t nonzeros = 0;
  double nonzero_ratio = 0.0;
  double sikl_rmse = 0.0;
  double sparse_rmse = 0.0;
  double seconds = 0.0;
  std::vector<Recovery> recovery;
};

/// Synthesize, fit, sparsify and score one seed; files go under `dir`.
SeedReport reproduce_seed(const ReproduceArgs& args, std::uint64_t seed,
                          const std::filesystem::path& dir);

int cmd_fit(const FitArgs& args, std::ostream& out);
int cmd_sparsify(const SparsifyArgs& args, std::ostream& out);
int cmd_bank(const BankArgs& args, std::ostream& out);
int cmd_synth(const SynthArgs& args, std::ostream& out);
int cmd_profile(const ProfileArgs& args, std::ostream& out);
int cmd_reproduce_synthetic(const ReproduceArgs& args, std::ostream& out);

/// Parses argv, dispatches, and maps errors to exit codes. Messages go to `err`.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace gaborikl::cli
