#include "gazeaug/image.hpp"

#include <algorithm>
#include <cmath>

#include "gazeaug/error.hpp"

namespace gazeaug {

ImageBuffer::ImageBuffer(int width, int height, const Rgb& fill)
    : width_(width), height_(height) {
  if (width < 0 || height < 0) throw Error(ErrorCode::InvalidArgument, "negative image size");
  data_.resize(static_cast<std::size_t>(width) * static_cast<std::size_t>(height) * 3);
  for (std::size_t i = 0; i < data_.size(); i += 3) {
    data_[i] = fill.x();
    data_[i + 1] = fill.y();
    data_[i + 2] = fill.z();
  }
}

Rgb ImageBuffer::sample(double x, double y) const {
  // Shift to index space where integer coordinates are pixel centers.
  const double fx = std::clamp(x - 0.5, 0.0, static_cast<double>(width_ - 1));
  const double fy = std::clamp(y - 0.5, 0.0, static_cast<double>(height_ - 1));
  const int x0 = static_cast<int>(std::floor(fx));
  const int y0 = static_cast<int>(std::floor(fy));
  const int x1 = std::min(x0 + 1, width_ - 1);
  const int y1 = std::min(y0 + 1, height_ - 1);
  const double ax = fx - x0;
  const double ay = fy - y0;
  const Rgb top = (1 - ax) * pixel(x0, y0) + ax * pixel(x1, y0);
  const Rgb bottom = (1 - ax) * pixel(x0, y1) + ax * pixel(x1, y1);
  return (1 - ay) * top + ay * bottom;
}

Eigen::MatrixXd ImageBuffer::grayscale() const {
  Eigen::MatrixXd g(height_, width_);
  for (int y = 0; y < height_; ++y)
    for (int x = 0; x < width_; ++x) {
      const auto i = index(x, y);
      g(y, x) = (data_[i] + data_[i + 1] + data_[i + 2]) / 3.0;
    }
  return g;
}

std::vector<std::uint8_t> ImageBuffer::quantized() const {
  std::vector<std::uint8_t> out(data_.size());
  for (std::size_t i = 0; i < data_.size(); ++i) {
    const double v = std::round(std::clamp(data_[i], 0.0, 1.0) * 255.0);
    out[i] = static_cast<std::uint8_t>(v);
  }
  return out;
}

ImageBuffer ImageBuffer::fromQuantized(int width, int height, const std::vector<std::uint8_t>& rgb8) {
  ImageBuffer img(width, height);
  if (rgb8.size() != img.data_.size())
    throw Error(ErrorCode::DimensionMismatch, "quantized buffer size does not match image size");
  for (std::size_t i = 0; i < rgb8.size(); ++i) img.data_[i] = rgb8[i] / 255.0;
  return img;
}

ImageBuffer resizeBilinear(const ImageBuffer& src, int width, int height) {
  if (src.empty()) throw Error(ErrorCode::InvalidArgument, "cannot resize an empty image");
  if (src.width() == width && src.height() == height) return src;
  ImageBuffer out(width, height);
  const double sx = static_cast<double>(src.width()) / width;
  const double sy = static_cast<double>(src.height()) / height;
  for (int y = 0; y < height; ++y)
    for (int x = 0; x < width; ++x) out.setPixel(x, y, src.sample((x + 0.5) * sx, (y + 0.5) * sy));
  return out;
}

}  // namespace gazeaug
