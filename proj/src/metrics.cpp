#include "gazeaug/metrics.hpp"

#include <algorithm>
#include <cmath>

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>

namespace gazeaug {

namespace {

void requireSameSize(const ImageBuffer& x, const ImageBuffer& y) {
  if (x.width() != y.width() || x.height() != y.height())
    throw Error(ErrorCode::DimensionMismatch,
                std::to_string(x.width()) + "x" + std::to_string(x.height()) + " vs " +
                    std::to_string(y.width()) + "x" + std::to_string(y.height()));
}

Eigen::VectorXd gaussianKernel(int size, double sigma) {
  Eigen::VectorXd k(size);
  const double c = (size - 1) / 2.0;
  for (int i = 0; i < size; ++i) k(i) = std::exp(-(i - c) * (i - c) / (2 * sigma * sigma));
  return k / k.sum();
}

// Separable 'valid' correlation.
Eigen::MatrixXd filterValid(const Eigen::MatrixXd& img, const Eigen::VectorXd& k) {
  const int n = static_cast<int>(k.size());
  const Eigen::Index rows = img.rows(), cols = img.cols();
  Eigen::MatrixXd horiz(rows, cols - n + 1);
  for (Eigen::Index c = 0; c < horiz.cols(); ++c) {
    horiz.col(c).setZero();
    for (int i = 0; i < n; ++i) horiz.col(c) += k(i) * img.col(c + i);
  }
  Eigen::MatrixXd out(rows - n + 1, horiz.cols());
  for (Eigen::Index r = 0; r < out.rows(); ++r) {
    out.row(r).setZero();
    for (int i = 0; i < n; ++i) out.row(r) += k(i) * horiz.row(r + i);
  }
  return out;
}

Eigen::MatrixXd downsample2(const Eigen::MatrixXd& img) {
  Eigen::MatrixXd out(img.rows() / 2, img.cols() / 2);
  for (Eigen::Index r = 0; r < out.rows(); ++r)
    for (Eigen::Index c = 0; c < out.cols(); ++c)
      out(r, c) = 0.25 * (img(2 * r, 2 * c) + img(2 * r + 1, 2 * c) + img(2 * r, 2 * c + 1) +
                          img(2 * r + 1, 2 * c + 1));
  return out;
}

struct SsimTerms {
  double cs;    // mean contrast-structure
  double ssim;  // mean luminance * contrast-structure
};

SsimTerms ssimTerms(const Eigen::MatrixXd& x, const Eigen::MatrixXd& y, const Eigen::VectorXd& k,
                    const MsSsimOptions& o) {
  const double c1 = (o.k1 * o.data_range) * (o.k1 * o.data_range);
  const double c2 = (o.k2 * o.data_range) * (o.k2 * o.data_range);
  const Eigen::ArrayXXd mx = filterValid(x, k).array();
  const Eigen::ArrayXXd my = filterValid(y, k).array();
  const Eigen::ArrayXXd sxx = filterValid(x.cwiseProduct(x), k).array() - mx * mx;
  const Eigen::ArrayXXd syy = filterValid(y.cwiseProduct(y), k).array() - my * my;
  const Eigen::ArrayXXd sxy = filterValid(x.cwiseProduct(y), k).array() - mx * my;
  const Eigen::ArrayXXd cs = (2 * sxy + c2) / (sxx + syy + c2);
  const Eigen::ArrayXXd lum = (2 * mx * my + c1) / (mx * mx + my * my + c1);
  return {cs.mean(), (lum * cs).mean()};
}

}  // namespace

int msSsimScaleCount(int width, int height, const MsSsimOptions& options) {
  const int side = std::min(width, height);
  int scales = 0;
  while (scales < static_cast<int>(options.weights.size()) &&
         side >= options.window * (1 << scales))
    ++scales;
  return scales;
}

double msSsim(const ImageBuffer& x, const ImageBuffer& y, const MsSsimOptions& options) {
  requireSameSize(x, y);
  const int supported = msSsimScaleCount(x.width(), x.height(), options);
  if (supported == 0)
    throw Error(ErrorCode::TooSmall, "MS-SSIM needs min side >= " + std::to_string(options.window));
  int scales = options.scales == 0 ? supported : options.scales;
  if (scales > supported)
    throw Error(ErrorCode::TooSmall, std::to_string(scales) + " scales need min side >= " +
                                         std::to_string(options.window * (1 << (scales - 1))));
  if (scales > static_cast<int>(options.weights.size()))
    throw Error(ErrorCode::InvalidArgument, "more scales than weights");

  std::vector<double> w(options.weights.begin(), options.weights.begin() + scales);
  double wsum = 0;
  for (double v : w) wsum += v;
  for (double& v : w) v /= wsum;

  const Eigen::VectorXd k = gaussianKernel(options.window, options.sigma);
  Eigen::MatrixXd gx = x.grayscale();
  Eigen::MatrixXd gy = y.grayscale();
  double result = 1.0;
  for (int s = 0; s < scales; ++s) {
    const SsimTerms t = ssimTerms(gx, gy, k, options);
    const double term = (s == scales - 1) ? t.ssim : t.cs;
    result *= std::pow(std::max(term, 0.0), w[s]);
    if (s + 1 < scales) {
      gx = downsample2(gx);
      gy = downsample2(gy);
    }
  }
  return result;
}

double l1(const ImageBuffer& x, const ImageBuffer& y) {
  requireSameSize(x, y);
  const auto& a = x.data();
  const auto& b = y.data();
  if (a.empty()) throw Error(ErrorCode::TooSmall, "empty image");
  double sum = 0;
  for (std::size_t i = 0; i < a.size(); ++i) sum += std::abs(a[i] - b[i]);
  return sum / static_cast<double>(a.size());
}

double mixedRecLoss(const ImageBuffer& x, const ImageBuffer& y, double alpha,
                    const MsSsimOptions& options) {
  if (!(alpha >= 0 && alpha <= 1)) throw Error(ErrorCode::InvalidArgument, "alpha outside [0, 1]");
  return alpha * (1 - msSsim(x, y, options)) + (1 - alpha) * l1(x, y);
}

double identitySimilarity(const Eigen::VectorXd& f1, const Eigen::VectorXd& f2) {
  if (f1.size() != f2.size())
    throw Error(ErrorCode::DimensionMismatch, "feature dimensions differ");
  const double n1 = f1.norm();
  const double n2 = f2.norm();
  if (n1 == 0 || n2 == 0) throw Error(ErrorCode::ZeroVector, "identity feature has zero norm");
  return std::clamp(f1.dot(f2) / (n1 * n2), -1.0, 1.0);
}

double totalLoss(double l_sted, double l_id, double l_rec, const LossWeights& w) {
  const double total = l_sted + w.lambda_id * l_id + w.lambda_rec * l_rec;
  if (!std::isfinite(total)) throw Error(ErrorCode::NonFinite, "total loss is not finite");
  return total;
}

Eigen::MatrixXd covariance(const Eigen::MatrixXd& rows) {
  const Eigen::Index n = rows.rows();
  const Eigen::RowVectorXd mean = rows.colwise().mean();
  const Eigen::MatrixXd centered = rows.rowwise() - mean;
  Eigen::MatrixXd cov = Eigen::MatrixXd::Zero(rows.cols(), rows.cols());
  cov.selfadjointView<Eigen::Lower>().rankUpdate(centered.transpose(), 1.0 / (n - 1));
  return cov.selfadjointView<Eigen::Lower>();
}

Eigen::MatrixXd psdSqrt(const Eigen::MatrixXd& m) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(m);
  const Eigen::VectorXd roots = es.eigenvalues().cwiseMax(0.0).cwiseSqrt();
  return es.eigenvectors() * roots.asDiagonal() * es.eigenvectors().transpose();
}

double fid(const FeatureSet& a, const FeatureSet& b) {
  if (a.dim() != b.dim())
    throw Error(ErrorCode::DimensionMismatch, "feature dims " + std::to_string(a.dim()) + " vs " +
                                                  std::to_string(b.dim()));
  if (a.count() < 2 || b.count() < 2)
    throw Error(ErrorCode::TooFewRows, "FID needs at least 2 rows per set");
  if (!a.rows.allFinite() || !b.rows.allFinite())
    throw Error(ErrorCode::NonFinite, "feature set contains non-finite values");

  const Eigen::VectorXd mean_diff =
      (a.rows.colwise().mean() - b.rows.colwise().mean()).transpose();
  Eigen::MatrixXd cov_a = covariance(a.rows);
  Eigen::MatrixXd cov_b = covariance(b.rows);
  if (a.dim() == 1) {
    const double d = std::sqrt(cov_a(0, 0)) - std::sqrt(cov_b(0, 0));
    return mean_diff.squaredNorm() + d * d;
  }

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es_a(cov_a);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es_b(cov_b);
  Eigen::VectorXd eig_a = es_a.eigenvalues();
  Eigen::VectorXd eig_b = es_b.eigenvalues();
  if (std::min(eig_a.minCoeff(), eig_b.minCoeff()) < 1e-10) {
    // Shrink both so the distance stays symmetric.
    constexpr double eps = 1e-6;
    cov_a.diagonal().array() += eps;
    cov_b.diagonal().array() += eps;
    eig_a.array() += eps;
    eig_b.array() += eps;
  }
  const Eigen::MatrixXd sqrt_a =
      es_a.eigenvectors() * eig_a.cwiseMax(0.0).cwiseSqrt().asDiagonal() * es_a.eigenvectors().transpose();
  const Eigen::MatrixXd sqrt_b =
      es_b.eigenvectors() * eig_b.cwiseMax(0.0).cwiseSqrt().asDiagonal() * es_b.eigenvectors().transpose();
  // sqrt_a cov_b sqrt_a = M^T M with M = sqrt_b sqrt_a, so the trace of its
  // square root is the sum of singular values of M. No square roots of tiny
  // eigenvalues are taken.
  const Eigen::MatrixXd m = sqrt_b * sqrt_a;
  const double trace_sqrt = Eigen::BDCSVD<Eigen::MatrixXd>(m).singularValues().sum();

  const double value =
      mean_diff.squaredNorm() + cov_a.trace() + cov_b.trace() - 2.0 * trace_sqrt;
  return std::max(value, 0.0);
}

double redirectionError(const Direction& target, const Direction& estimated) {
  return rad2deg(angularError(target, estimated));
}

}  // namespace gazeaug
