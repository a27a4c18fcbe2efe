#pragma once

#include <vector>

#include <Eigen/Core>

#include "gazeaug/geometry.hpp"
#include "gazeaug/image.hpp"

namespace gazeaug {

// Feature rows from an external extractor, one row per image.
struct FeatureSet {
  Eigen::MatrixXd rows;  // count x dim

  Eigen::Index count() const { return rows.rows(); }
  Eigen::Index dim() const { return rows.cols(); }
};

struct LossWeights {
  double alpha = 0.84;
  double lambda_id = 2;
  double lambda_rec = 200;
};

struct MsSsimOptions {
  // 0 picks the largest count <= weights.size() the image supports
  // (min side >= 11 * 2^(scales - 1)); weights are renormalized to sum 1.
  int scales = 0;
  std::vector<double> weights = {0.0448, 0.2856, 0.3001, 0.2363, 0.1333};
  int window = 11;
  double sigma = 1.5;
  double k1 = 0.01;
  double k2 = 0.03;
  double data_range = 1.0;
};

int msSsimScaleCount(int width, int height, const MsSsimOptions& options = {});

// Multi-scale SSIM on the channel-mean grayscale images: contrast-structure
// at every scale, luminance only at the coarsest, 2x2 mean downsampling.
double msSsim(const ImageBuffer& x, const ImageBuffer& y, const MsSsimOptions& options = {});

// Mean absolute difference over all pixels and channels.
double l1(const ImageBuffer& x, const ImageBuffer& y);

// alpha * (1 - MS-SSIM) + (1 - alpha) * l1
double mixedRecLoss(const ImageBuffer& x, const ImageBuffer& y, double alpha = 0.84,
                    const MsSsimOptions& options = {});

double identitySimilarity(const Eigen::VectorXd& f1, const Eigen::VectorXd& f2);
inline double identityLoss(const Eigen::VectorXd& f1, const Eigen::VectorXd& f2) {
  return 1.0 - identitySimilarity(f1, f2);
}

// L_sted + lambda_id * L_id + lambda_rec * L_rec. L_sted is supplied by the caller.
double totalLoss(double l_sted, double l_id, double l_rec, const LossWeights& w = {});

// Frechet distance between Gaussian fits of the two sets (covariances with
// 1/(N-1)). The trace term is that of sqrt(sqrt(S_a) S_b sqrt(S_a)), evaluated
// as the nuclear norm of sqrt(S_b) sqrt(S_a). In 1-D this is
// (mu_a - mu_b)^2 + (sigma_a - sigma_b)^2, evaluated in that form.
double fid(const FeatureSet& a, const FeatureSet& b);

// Angle between the two directions' unit vectors, in degrees.
double redirectionError(const Direction& target, const Direction& estimated);

// Helpers shared with tests.
Eigen::MatrixXd covariance(const Eigen::MatrixXd& rows);
Eigen::MatrixXd psdSqrt(const Eigen::MatrixXd& m);

}  // namespace gazeaug
