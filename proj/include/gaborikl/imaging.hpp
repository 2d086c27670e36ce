#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "gaborikl/gabor_kernels.hpp"
#include "gaborikl/stabilizer.hpp"

namespace gaborikl {

struct SiklModel;

/// Grayscale raster with intensities in row-major order.
struct ImageRegion {
  int width = 0;
  int height = 0;
  std::vector<double> intensities;
  int origin_x = 0;  ///< offset of this region inside its source image
  int origin_y = 0;

  double at(int x, int y) const { return intensities[static_cast<std::size_t>(y) * width + x]; }
  double& at(int x, int y) { return intensities[static_cast<std::size_t>(y) * width + x]; }
  std::size_t size() const noexcept { return intensities.size(); }
};

/// Named rectangle inside a source image.
struct RegionSpec {
  std::string name;
  int x = 0;
  int y = 0;
  int w = 0;
  int h = 0;
};

/// Affine intensity normalization: normalized = (raw - offset) / scale.
struct NormState {
  double offset = 0.0;
  double scale = 1.0;

  double restore(double normalized) const noexcept { return normalized * scale + offset; }
};

struct GroundTruthGabor {
  GaborParams params;
  PixelCoord center;
  double amplitude = 1.0;
};

/// Reads binary (P5) or ASCII (P2) PGM; PPM (P6/P3) is converted by luma with a warning.
/// Intensities are divided by maxval. Throws IoError, naming the byte offset on truncation.
ImageRegion load_image(const std::filesystem::path& path);

/// Writes an 8-bit P5 PGM; values are clamped to [0, 1] and rounded.
void save_pgm(const std::filesystem::path& path, const ImageRegion& img);

/// Writes an 8-bit P6 PPM from interleaved RGB bytes.
void save_ppm(const std::filesystem::path& path, int width, int height,
              const std::vector<std::uint8_t>& rgb);

/// Throws DomainError when the spec leaves the image.
ImageRegion extract_region(const ImageRegion& img, const RegionSpec& spec);

/// Eye, eye, nose and mouth boxes for 46x56 face crops. The nose box overlaps both eyes
/// and the mouth.
std::vector<RegionSpec> default_face_regions();
std::vector<RegionSpec> load_regions(const std::filesystem::path& path);
void save_regions(const std::filesystem::path& path, const std::vector<RegionSpec>& regions);

struct TrainingSet {
  std::vector<PixelCoord> points;
  std::vector<double> targets;
  NormState norm;
};

/// Pixel positions (region-local) and mean-centered intensities. When the region has more
/// than `max_points` pixels a seeded subsample without replacement is kept, in raster order.
TrainingSet to_training_set(const ImageRegion& region, std::size_t max_points,
                            std::uint64_t seed);

struct Reconstruction {
  ImageRegion image;            ///< un-normalized, not clamped
  std::optional<double> rmse;   ///< against the reference, when one was given
};

Reconstruction reconstruct(const SiklModel& model, int width, int height,
                           const ImageRegion* reference = nullptr);

double rmse(const ImageRegion& a, const ImageRegion& b);

struct SynthRanges {
  double nu_min = 0.0;
  double nu_max = 6.0;
  double margin = 0.25;  ///< centers are drawn from the interior with this fraction cut per side
  int count = 2;

  /// Throws DomainError if the nu range leaves the stabilizer plateau.
  void validate(const Stabilizer& s = Stabilizer::defaults()) const;
};

struct SynthImage {
  ImageRegion image;                    ///< rescaled to [0, 1]
  std::vector<GroundTruthGabor> truth;  ///< amplitudes before rescaling
  double scale = 1.0;                   ///< image = scale * raw + shift
  double shift = 0.0;
};

/// Sum of amplitude * Gabor(center) over a width x height raster, no rescaling.
ImageRegion render_gabors(int width, int height, const std::vector<GroundTruthGabor>& parts);

/// Affine map of a raster onto [0, 1]; a constant raster maps to 0.5.
SynthImage rescale_unit(ImageRegion raw, std::vector<GroundTruthGabor> truth);

/// `ranges.count` random Gabors: nu uniform, theta uniform in [0, pi), centers uniform over
/// the pixels of the margin-trimmed interior, amplitudes +-1.
SynthImage synth_gabor_image(int width, int height, std::uint64_t seed, const SynthRanges& ranges);

/// The two-component case.
SynthImage synth_two_gabor(int width, int height, std::uint64_t seed, SynthRanges ranges = {});

}  // namespace gaborikl
