#include "gaborikl/imaging.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <iterator>
#include <numbers>
#include <numeric>
#include <random>
#include <string>

#include <json.hpp>

#include "gaborikl/errors.hpp"
#include "gaborikl/log.hpp"
#include "gaborikl/sikl.hpp"

namespace gaborikl {

namespace {

using json = nlohmann::json;

// Cursor over a PNM byte buffer; all failures name the offending byte offset.
class PnmReader {
 public:
  PnmReader(std::vector<std::uint8_t> bytes, std::string path)
      : bytes_(std::move(bytes)), path_(std::move(path)) {}

  [[noreturn]] void fail(const std::string& why) const {
    throw IoError(path_ + ": " + why + " at byte offset " + std::to_string(pos_));
  }

  void skip_space_and_comments() {
    while (pos_ < bytes_.size()) {
      if (bytes_[pos_] == '#') {
        while (pos_ < bytes_.size() && bytes_[pos_] != '\n') ++pos_;
      } else if (std::isspace(bytes_[pos_])) {
        ++pos_;
      } else {
        break;
      }
    }
  }

  long read_uint() {
    skip_space_and_comments();
    if (pos_ >= bytes_.size()) fail("truncated file, expected a number");
    if (!std::isdigit(bytes_[pos_])) fail("expected a decimal number");
    long v = 0;
    while (pos_ < bytes_.size() && std::isdigit(bytes_[pos_])) {
      v = v * 10 + (bytes_[pos_] - '0');
      if (v > 1'000'000'000L) fail("number too large");
      ++pos_;
    }
    return v;
  }

  std::string magic() {
    if (bytes_.size() < 2) fail("truncated file, missing magic number");
    std::string m{static_cast<char>(bytes_[0]), static_cast<char>(bytes_[1])};
    pos_ = 2;
    return m;
  }

  // Exactly one whitespace byte separates the header from binary samples.
  void single_space() {
    if (pos_ >= bytes_.size()) fail("truncated file, missing raster");
    if (!std::isspace(bytes_[pos_])) fail("expected whitespace after header");
    ++pos_;
  }

  long read_binary(int width) {
    if (pos_ + static_cast<std::size_t>(width) > bytes_.size()) fail("truncated raster");
    long v = bytes_[pos_++];
    if (width == 2) v = (v << 8) | bytes_[pos_++];
    return v;
  }

 private:
  std::vector<std::uint8_t> bytes_;
  std::string path_;
  std::size_t pos_ = 0;
};

std::vector<std::uint8_t> read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

std::uint8_t to_byte(double v) {
  return static_cast<std::uint8_t>(std::lround(std::clamp(v, 0.0, 1.0) * 255.0));
}

}  // namespace

ImageRegion load_image(const std::filesystem::path& path) {
  PnmReader r(read_file(path), path.string());
  const std::string magic = r.magic();
  const bool gray = magic == "P5" || magic == "P2";
  const bool color = magic == "P6" || magic == "P3";
  if (!gray && !color) r.fail("unsupported format '" + magic + "' (expected PGM or PPM)");
  const bool ascii = magic == "P2" || magic == "P3";

  const long width = r.read_uint();
  const long height = r.read_uint();
  const long maxval = r.read_uint();
  if (width <= 0 || height <= 0) r.fail("image dimensions must be positive");
  if (maxval <= 0 || maxval > 65535) r.fail("maxval must be in [1, 65535]");
  if (!ascii) r.single_space();

  const int sample_bytes = maxval < 256 ? 1 : 2;
  const int channels = color ? 3 : 1;
  auto sample = [&]() -> double {
    const long v = ascii ? r.read_uint() : r.read_binary(sample_bytes);
    if (v > maxval) r.fail("sample exceeds maxval");
    return static_cast<double>(v) / static_cast<double>(maxval);
  };

  ImageRegion img;
  img.width = static_cast<int>(width);
  img.height = static_cast<int>(height);
  img.intensities.resize(static_cast<std::size_t>(width * height));
  for (double& px : img.intensities) {
    if (channels == 1) {
      px = sample();
    } else {
      const double red = sample();
      const double green = sample();
      const double blue = sample();
      px = 0.299 * red + 0.587 * green + 0.114 * blue;
    }
  }
  if (color) GABORIKL_WARN(path.string() << " is a color image; converted to luma");
  return img;
}

void save_pgm(const std::filesystem::path& path, const ImageRegion& img) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  out << "P5\n" << img.width << ' ' << img.height << "\n255\n";
  for (double v : img.intensities) out.put(static_cast<char>(to_byte(v)));
  if (!out) throw IoError("write failed for " + path.string());
}

void save_ppm(const std::filesystem::path& path, int width, int height,
              const std::vector<std::uint8_t>& rgb) {
  if (rgb.size() != static_cast<std::size_t>(width) * height * 3) {
    throw DomainError("save_ppm: buffer does not match dimensions");
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  out << "P6\n" << width << ' ' << height << "\n255\n";
  out.write(reinterpret_cast<const char*>(rgb.data()), static_cast<std::streamsize>(rgb.size()));
  if (!out) throw IoError("write failed for " + path.string());
}

ImageRegion extract_region(const ImageRegion& img, const RegionSpec& spec) {
  if (spec.w <= 0 || spec.h <= 0 || spec.x < 0 || spec.y < 0 || spec.x + spec.w > img.width ||
      spec.y + spec.h > img.height) {
    throw DomainError("region '" + spec.name + "' (" + std::to_string(spec.x) + "," +
                      std::to_string(spec.y) + "," + std::to_string(spec.w) + "x" +
                      std::to_string(spec.h) + ") leaves the " + std::to_string(img.width) +
                      "x" + std::to_string(img.height) + " image");
  }
  ImageRegion out;
  out.width = spec.w;
  out.height = spec.h;
  out.origin_x = img.origin_x + spec.x;
  out.origin_y = img.origin_y + spec.y;
  out.intensities.reserve(static_cast<std::size_t>(spec.w) * spec.h);
  for (int y = 0; y < spec.h; ++y) {
    for (int x = 0; x < spec.w; ++x) out.intensities.push_back(img.at(spec.x + x, spec.y + y));
  }
  return out;
}

std::vector<RegionSpec> default_face_regions() {
  return {
      {"left_eye", 4, 12, 18, 14},
      {"right_eye", 24, 12, 18, 14},
      {"nose", 15, 22, 16, 18},
      {"mouth", 11, 38, 24, 14},
  };
}

std::vector<RegionSpec> load_regions(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    throw IoError(path.string() + ": " + e.what());
  }
  if (!j.is_array()) throw IoError(path.string() + ": expected a JSON list of regions");
  std::vector<RegionSpec> out;
  for (const auto& r : j) {
    out.push_back({r.value("name", std::string{}), r.at("x").get<int>(), r.at("y").get<int>(),
                   r.at("w").get<int>(), r.at("h").get<int>()});
  }
  return out;
}

void save_regions(const std::filesystem::path& path, const std::vector<RegionSpec>& regions) {
  json j = json::array();
  for (const auto& r : regions) {
    j.push_back({{"name", r.name}, {"x", r.x}, {"y", r.y}, {"w", r.w}, {"h", r.h}});
  }
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path.string());
  out << j.dump(2) << '\n';
}

TrainingSet to_training_set(const ImageRegion& region, std::size_t max_points,
                            std::uint64_t seed) {
  if (region.intensities.empty()) throw DomainError("to_training_set: empty region");
  const std::size_t n = region.intensities.size();
  std::vector<std::size_t> keep(n);
  std::iota(keep.begin(), keep.end(), std::size_t{0});
  if (max_points > 0 && n > max_points) {
    std::mt19937_64 rng(seed);
    // Partial Fisher-Yates: the first max_points slots become a uniform sample.
    for (std::size_t i = 0; i < max_points; ++i) {
      std::uniform_int_distribution<std::size_t> pick(i, n - 1);
      std::swap(keep[i], keep[pick(rng)]);
    }
    keep.resize(max_points);
    std::sort(keep.begin(), keep.end());
  }

  TrainingSet ts;
  // Accumulating offsets from the minimum keeps a constant region exactly constant.
  double lowest = region.intensities[keep.front()];
  for (std::size_t idx : keep) lowest = std::min(lowest, region.intensities[idx]);
  double excess = 0.0;
  for (std::size_t idx : keep) excess += region.intensities[idx] - lowest;
  const double mean = lowest + excess / static_cast<double>(keep.size());
  ts.norm = NormState{mean, 1.0};
  ts.points.reserve(keep.size());
  ts.targets.reserve(keep.size());
  for (std::size_t idx : keep) {
    const auto w = static_cast<std::size_t>(region.width);
    ts.points.push_back({static_cast<double>(idx % w), static_cast<double>(idx / w)});
    ts.targets.push_back(region.intensities[idx] - mean);
  }
  return ts;
}

double rmse(const ImageRegion& a, const ImageRegion& b) {
  if (a.width != b.width || a.height != b.height) throw DomainError("rmse: size mismatch");
  if (a.intensities.empty()) return 0.0;
  double acc = 0.0;
  for (std::size_t i = 0; i < a.intensities.size(); ++i) {
    const double e = a.intensities[i] - b.intensities[i];
    acc += e * e;
  }
  return std::sqrt(acc / static_cast<double>(a.intensities.size()));
}

Reconstruction reconstruct(const SiklModel& model, int width, int height,
                           const ImageRegion* reference) {
  Reconstruction out;
  out.image.width = width;
  out.image.height = height;
  out.image.intensities.resize(static_cast<std::size_t>(width) * height);
  // Support vectors only; zero coefficients do not contribute.
  std::vector<std::pair<PixelCoord, double>> sv;
  for (std::size_t i : model.svr.support) {
    sv.emplace_back(model.train_points[i], model.svr.dual_coef[static_cast<Eigen::Index>(i)]);
  }
  for (int y = 0; y < height; ++y) {
    for (int x = 0; x < width; ++x) {
      const PixelCoord q{static_cast<double>(x), static_cast<double>(y)};
      double v = model.svr.bias;
      for (const auto& [p, d] : sv) v += d * eval_mixture(model.mixture, p, q);
      out.image.at(x, y) = model.norm.restore(v);
    }
  }
  if (reference != nullptr) out.rmse = rmse(out.image, *reference);
  return out;
}

void SynthRanges::validate(const Stabilizer& s) const {
  if (!(nu_min <= nu_max)) throw DomainError("synth: nu_min must not exceed nu_max");
  const double plateau_lo = omega_to_nu(s.omega_u1());
  const double plateau_hi = omega_to_nu(s.omega_l1());
  if (nu_min < plateau_lo - 1e-9 || nu_max > plateau_hi + 1e-9) {
    throw DomainError("synth: nu range must stay inside the stabilizer plateau [" +
                      std::to_string(plateau_lo) + ", " + std::to_string(plateau_hi) + "]");
  }
  if (!(margin >= 0.0 && margin < 0.5)) throw DomainError("synth: margin must be in [0, 0.5)");
  if (count < 1) throw DomainError("synth: count must be >= 1");
}

ImageRegion render_gabors(int width, int height, const std::vector<GroundTruthGabor>& parts) {
  if (width <= 0 || height <= 0) throw DomainError("render_gabors: empty raster");
  ImageRegion img;
  img.width = width;
  img.height = height;
  img.intensities.assign(static_cast<std::size_t>(width) * height, 0.0);
  for (int y = 0; y < height; ++y) {
    for (int x = 0; x < width; ++x) {
      double v = 0.0;
      for (const auto& g : parts) {
        v += g.amplitude * eval_gabor(g.params, PixelCoord{double(x), double(y)}, g.center);
      }
      img.at(x, y) = v;
    }
  }
  return img;
}

SynthImage rescale_unit(ImageRegion raw, std::vector<GroundTruthGabor> truth) {
  const auto [lo, hi] = std::minmax_element(raw.intensities.begin(), raw.intensities.end());
  SynthImage out;
  if (*hi > *lo) {
    out.scale = 1.0 / (*hi - *lo);
    out.shift = -*lo * out.scale;
  } else {
    out.scale = 0.0;
    out.shift = 0.5;
  }
  for (double& v : raw.intensities) v = out.scale * v + out.shift;
  out.image = std::move(raw);
  out.truth = std::move(truth);
  return out;
}

SynthImage synth_gabor_image(int width, int height, std::uint64_t seed,
                             const SynthRanges& ranges) {
  ranges.validate();
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  auto between = [&](double a, double b) { return a + (b - a) * unit(rng); };
  // Centers sit on pixels so that a single coefficient can sit exactly on each one.
  auto pixel_between = [&](double margin, int extent) {
    const double lo = std::ceil(margin * (extent - 1));
    const double hi = std::floor((1.0 - margin) * (extent - 1));
    if (hi < lo) return std::round(0.5 * (extent - 1));
    return std::min(hi, lo + std::floor(unit(rng) * (hi - lo + 1.0)));
  };
  std::vector<GroundTruthGabor> truth;
  for (int k = 0; k < ranges.count; ++k) {
    GroundTruthGabor g;
    const double nu = between(ranges.nu_min, ranges.nu_max);
    const double theta = between(0.0, std::numbers::pi);
    g.params = GaborParams::make(nu_to_omega(nu), theta);
    g.center.x = pixel_between(ranges.margin, width);
    g.center.y = pixel_between(ranges.margin, height);
    g.amplitude = unit(rng) < 0.5 ? -1.0 : 1.0;
    truth.push_back(g);
  }
  ImageRegion raw = render_gabors(width, height, truth);
  return rescale_unit(std::move(raw), std::move(truth));
}

SynthImage synth_two_gabor(int width, int height, std::uint64_t seed, SynthRanges ranges) {
  ranges.count = 2;
  return synth_gabor_image(width, height, seed, ranges);
}

}  // namespace gaborikl
