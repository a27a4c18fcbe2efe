#pragma once

#include <array>
#include <cstdint>
#include <vector>

#include <Eigen/Core>

namespace gazeaug {

using Rgb = Eigen::Vector3d;

// Row-major RGB image, channel values are reals nominally in [0, 1].
// Continuous pixel coordinates put the center of pixel (i, j) at (i + 0.5, j + 0.5).
class ImageBuffer {
 public:
  ImageBuffer() = default;
  ImageBuffer(int width, int height, const Rgb& fill = Rgb::Zero());

  int width() const { return width_; }
  int height() const { return height_; }
  bool empty() const { return width_ == 0 || height_ == 0; }

  double& at(int x, int y, int c) { return data_[index(x, y) + c]; }
  double at(int x, int y, int c) const { return data_[index(x, y) + c]; }

  Rgb pixel(int x, int y) const {
    const auto i = index(x, y);
    return {data_[i], data_[i + 1], data_[i + 2]};
  }
  void setPixel(int x, int y, const Rgb& c) {
    const auto i = index(x, y);
    data_[i] = c.x();
    data_[i + 1] = c.y();
    data_[i + 2] = c.z();
  }

  std::vector<double>& data() { return data_; }
  const std::vector<double>& data() const { return data_; }

  // Bilinear sample at continuous coordinates with edge clamping.
  Rgb sample(double x, double y) const;

  // Per-pixel channel mean.
  Eigen::MatrixXd grayscale() const;

  // round(v * 255) per channel, clamped to [0, 255].
  std::vector<std::uint8_t> quantized() const;
  static ImageBuffer fromQuantized(int width, int height, const std::vector<std::uint8_t>& rgb8);

  friend bool operator==(const ImageBuffer&, const ImageBuffer&) = default;

 private:
  std::size_t index(int x, int y) const {
    return (static_cast<std::size_t>(y) * static_cast<std::size_t>(width_) +
            static_cast<std::size_t>(x)) * 3;
  }

  int width_ = 0;
  int height_ = 0;
  std::vector<double> data_;
};

ImageBuffer resizeBilinear(const ImageBuffer& src, int width, int height);

}  // namespace gazeaug
