#pragma once

#include <atomic>
#include <filesystem>
#include <string>

#include <unistd.h>

#include "gazeaug/geometry.hpp"
#include "gazeaug/image.hpp"
#include "gazeaug/rng.hpp"

namespace gazeaug::testing {

// Directory removed on scope exit.
class TempDir {
 public:
  explicit TempDir(const std::string& tag = "t") {
    static std::atomic<int> counter{0};
    path_ = std::filesystem::temp_directory_path() /
            ("gazeaug_" + tag + "_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
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
  std::string str(const std::string& child = "") const {
    return child.empty() ? path_.string() : (path_ / child).string();
  }

 private:
  std::filesystem::path path_;
};

// Uniform over |pitch| <= max_pitch, yaw in (-pi, pi].
inline Direction randomDirection(Rng& rng, double max_pitch = 1.5) {
  constexpr double pi = std::numbers::pi;
  return {(2 * uniform01(rng) - 1) * max_pitch, wrapAngle((2 * uniform01(rng) - 1) * pi)};
}

inline ImageBuffer randomImage(Rng& rng, int w, int h) {
  ImageBuffer img(w, h);
  for (double& v : img.data()) v = uniform01(rng);
  return img;
}

}  // namespace gazeaug::testing
