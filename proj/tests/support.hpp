#pragma once

#include <atomic>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <unistd.h>

#include "gaborikl/gabor_kernels.hpp"

namespace testing {

inline std::vector<gaborikl::PixelCoord> random_points(std::mt19937_64& rng, int n, double lo,
                                                       double hi) {
  std::uniform_real_distribution<double> u(lo, hi);
  std::vector<gaborikl::PixelCoord> pts(static_cast<std::size_t>(n));
  for (auto& p : pts) p = {u(rng), u(rng)};
  return pts;
}

inline std::vector<gaborikl::PixelCoord> grid_points(int w, int h) {
  std::vector<gaborikl::PixelCoord> pts;
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) pts.push_back({double(x), double(y)});
  return pts;
}

/// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    static std::atomic<int> counter{0};
    path_ = std::filesystem::temp_directory_path() /
            ("gaborikl_" + tag + "_" + std::to_string(::getpid()) + "_" +
             std::to_string(counter++));
    std::filesystem::remove_all(path_);
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

inline std::string read_text(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline void write_bytes(const std::filesystem::path& p, const std::string& bytes) {
  std::ofstream out(p, std::ios::binary);
  out << bytes;
}

}  // namespace testing
