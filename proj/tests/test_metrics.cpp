#include <cmath>
#include <numbers>

#include <Eigen/QR>

#include "doctest.h"
#include "gazeaug/metrics.hpp"
#include "support.hpp"

using namespace gazeaug;
using gazeaug::testing::randomDirection;
using gazeaug::testing::randomImage;

namespace {

// Windowed SSIM written out per window, in long double, clamped at 0 like
// the [0, 1] range of the metric.
double directSsim(const ImageBuffer& a, const ImageBuffer& b) {
  constexpr int n = 11;
  constexpr long double sigma = 1.5L, c1 = 0.01L * 0.01L, c2 = 0.03L * 0.03L;
  long double g[n], gsum = 0;
  for (int i = 0; i < n; ++i) {
    g[i] = std::exp(-(i - 5) * (i - 5) / (2 * sigma * sigma));
    gsum += g[i];
  }
  auto gray = [](const ImageBuffer& im, int x, int y) {
    return (static_cast<long double>(im.at(x, y, 0)) + im.at(x, y, 1) + im.at(x, y, 2)) / 3;
  };
  long double total = 0;
  int windows = 0;
  for (int y0 = 0; y0 + n <= a.height(); ++y0)
    for (int x0 = 0; x0 + n <= a.width(); ++x0) {
      long double mx = 0, my = 0;
      for (int j = 0; j < n; ++j)
        for (int i = 0; i < n; ++i) {
          const long double w = g[i] * g[j] / (gsum * gsum);
          mx += w * gray(a, x0 + i, y0 + j);
          my += w * gray(b, x0 + i, y0 + j);
        }
      long double vx = 0, vy = 0, cov = 0;
      for (int j = 0; j < n; ++j)
        for (int i = 0; i < n; ++i) {
          const long double w = g[i] * g[j] / (gsum * gsum);
          const long double dx = gray(a, x0 + i, y0 + j) - mx;
          const long double dy = gray(b, x0 + i, y0 + j) - my;
          vx += w * dx * dx;
          vy += w * dy * dy;
          cov += w * dx * dy;
        }
      total += ((2 * mx * my + c1) * (2 * cov + c2)) / ((mx * mx + my * my + c1) * (vx + vy + c2));
      ++windows;
    }
  return std::max(0.0, static_cast<double>(total / windows));
}

double normal(Rng& rng) {
  const double u1 = 1.0 - uniform01(rng), u2 = uniform01(rng);
  return std::sqrt(-2 * std::log(u1)) * std::cos(2 * std::numbers::pi * u2);
}

ImageBuffer noisyCopy(const ImageBuffer& img, Rng& rng, double amount) {
  ImageBuffer out = img;
  for (double& v : out.data()) v = std::clamp(v + amount * (uniform01(rng) - 0.5), 0.0, 1.0);
  return out;
}

Eigen::MatrixXd randomRows(Rng& rng, int n, int d) {
  Eigen::MatrixXd m(n, d);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = normal(rng);
  return m;
}

}  // namespace

TEST_CASE("MS-SSIM of an image with itself is 1") {
  Rng rng(61);
  for (int i = 0; i < 20; ++i) {
    const ImageBuffer x = randomImage(rng, 128, 128);
    CHECK(std::abs(msSsim(x, x) - 1.0) < 1e-9);
  }
}

TEST_CASE("single-scale MS-SSIM matches a direct windowed SSIM") {
  Rng rng(62);
  MsSsimOptions single;
  single.scales = 1;
  for (int i = 0; i < 100; ++i) {
    const ImageBuffer x = randomImage(rng, 32, 32);
    const ImageBuffer y = i % 2 ? randomImage(rng, 32, 32) : noisyCopy(x, rng, 0.3);
    CHECK(std::abs(msSsim(x, y, single) - directSsim(x, y)) < 1e-6);
  }
}

TEST_CASE("MS-SSIM range, symmetry and scale count") {
  Rng rng(63);
  CHECK(msSsimScaleCount(128, 128) == 4);
  CHECK(msSsimScaleCount(176, 200) == 5);
  CHECK(msSsimScaleCount(10, 64) == 0);
  for (int i = 0; i < 20; ++i) {
    const ImageBuffer x = randomImage(rng, 64, 48);
    const ImageBuffer y = noisyCopy(x, rng, 0.2 * (i + 1));
    const double v = msSsim(x, y);
    CHECK(v >= 0);
    CHECK(v < 1);
    CHECK(std::abs(v - msSsim(y, x)) < 1e-12);
  }
  CHECK_THROWS_AS(msSsim(ImageBuffer(10, 10), ImageBuffer(10, 10)), Error);
  CHECK_THROWS_AS(msSsim(ImageBuffer(32, 32), ImageBuffer(32, 33)), Error);
  MsSsimOptions too_many;
  too_many.scales = 3;
  CHECK_THROWS_AS(msSsim(ImageBuffer(32, 32), ImageBuffer(32, 32), too_many), Error);
}

TEST_CASE("l1 and the mixed reconstruction loss") {
  Rng rng(64);
  const ImageBuffer zeros(16, 16), ones(16, 16, Rgb(1, 1, 1));
  CHECK(l1(zeros, zeros) == 0);
  CHECK(l1(zeros, ones) == 1);
  ImageBuffer x = randomImage(rng, 16, 16), shifted = x;
  for (double& v : shifted.data()) v += 0.5;
  CHECK(std::abs(l1(x, shifted) - 0.5) < 1e-15);
  CHECK_THROWS_AS(l1(zeros, ImageBuffer(16, 17)), Error);

  const ImageBuffer a = randomImage(rng, 64, 64), b = noisyCopy(a, rng, 0.4);
  CHECK(mixedRecLoss(a, a, 0.84) == 0);
  CHECK(mixedRecLoss(a, b, 0) == l1(a, b));
  CHECK(mixedRecLoss(a, b, 1) == 1 - msSsim(a, b));
  for (int i = 0; i < 20; ++i) {
    const ImageBuffer p = randomImage(rng, 48, 48), q = noisyCopy(p, rng, 0.5);
    const double alpha = uniform01(rng);
    const double hand = alpha * (1 - msSsim(p, q)) + (1 - alpha) * l1(p, q);
    CHECK(std::abs(mixedRecLoss(p, q, alpha) - hand) < 1e-15);
    CHECK(mixedRecLoss(p, q, alpha) > 0);
  }
  CHECK_THROWS_AS(mixedRecLoss(a, b, 1.5), Error);
}

TEST_CASE("identity similarity and loss") {
  Rng rng(65);
  for (int i = 0; i < 100; ++i) {
    Eigen::VectorXd f(8), g(8);
    for (int k = 0; k < 8; ++k) {
      f(k) = normal(rng);
      g(k) = normal(rng);
    }
    CHECK(std::abs(identitySimilarity(f, f) - 1) < 1e-12);
    CHECK(std::abs(identityLoss(f, f)) < 1e-12);
    CHECK(std::abs(identitySimilarity(f, -f) + 1) < 1e-12);
    CHECK(std::abs(identityLoss(f, -f) - 2) < 1e-12);
    CHECK(std::abs(identitySimilarity(3 * f, g) - identitySimilarity(f, g)) < 1e-12);
  }
  try {
    identitySimilarity(Eigen::VectorXd::Zero(3), Eigen::VectorXd::Ones(3));
    FAIL("expected ZeroVector");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::ZeroVector);
  }
  CHECK_THROWS_AS(identitySimilarity(Eigen::VectorXd::Ones(3), Eigen::VectorXd::Ones(4)), Error);
}

TEST_CASE("total loss with the published weights") {
  const LossWeights w;
  CHECK(w.alpha == 0.84);
  CHECK(w.lambda_id == 2);
  CHECK(w.lambda_rec == 200);
  CHECK(totalLoss(1, 0, 0) == 1);
  CHECK(totalLoss(0, 1, 0) == 2);
  CHECK(totalLoss(0, 0, 0.01) == 2);
  // Linear in each component.
  Rng rng(66);
  for (int i = 0; i < 100; ++i) {
    const double s = uniform01(rng), id = uniform01(rng), rec = uniform01(rng), h = 0.25;
    const double base = totalLoss(s, id, rec);
    CHECK(totalLoss(s + h, id, rec) - base == doctest::Approx(h).epsilon(1e-12));
    CHECK(totalLoss(s, id + h, rec) - base == doctest::Approx(2 * h).epsilon(1e-12));
    CHECK(totalLoss(s, id, rec + h) - base == doctest::Approx(200 * h).epsilon(1e-12));
  }
  CHECK_THROWS_AS(totalLoss(std::nan(""), 0, 0), Error);
  CHECK_THROWS_AS(totalLoss(0, INFINITY, 0), Error);
}

TEST_CASE("FID closed forms") {
  Rng rng(67);
  const FeatureSet a{randomRows(rng, 200, 16)};
  CHECK(fid(a, a) < 1e-8);

  FeatureSet one{Eigen::MatrixXd(2, 1)}, two{Eigen::MatrixXd(2, 1)};
  one.rows << -1, 1;
  two.rows << 0, 2;
  CHECK(fid(one, two) == 1.0);

  // 1-D sets against a long-double closed form.
  for (int i = 0; i < 100; ++i) {
    const FeatureSet x{randomRows(rng, 5 + i, 1) * (1 + i % 7)}, y{randomRows(rng, 9 + i, 1).array() + 0.1 * i};
    auto moments = [](const Eigen::MatrixXd& r) {
      long double mean = 0, ss = 0;
      for (Eigen::Index k = 0; k < r.rows(); ++k) mean += r(k, 0);
      mean /= r.rows();
      for (Eigen::Index k = 0; k < r.rows(); ++k) ss += (r(k, 0) - mean) * (r(k, 0) - mean);
      return std::pair{mean, std::sqrt(ss / (r.rows() - 1))};
    };
    const auto [mx, sx] = moments(x.rows);
    const auto [my, sy] = moments(y.rows);
    const long double expected = (mx - my) * (mx - my) + (sx - sy) * (sx - sy);
    CHECK(std::abs(fid(x, y) - static_cast<double>(expected)) <= 1e-12 * (1 + static_cast<double>(expected)));
  }

  const FeatureSet b{randomRows(rng, 150, 16) * 1.3};
  CHECK(std::abs(fid(a, b) - fid(b, a)) < 1e-8);

  // Common orthogonal transform.
  const Eigen::MatrixXd q = Eigen::HouseholderQR<Eigen::MatrixXd>(randomRows(rng, 16, 16)).householderQ();
  const FeatureSet qa{a.rows * q}, qb{b.rows * q};
  CHECK(std::abs(fid(qa, qb) - fid(a, b)) < 1e-6);
}

TEST_CASE("FID degenerate covariances stay symmetric and nonnegative") {
  Rng rng(68);
  const FeatureSet few_a{randomRows(rng, 3, 32)}, few_b{randomRows(rng, 4, 32)};
  const double ab = fid(few_a, few_b);
  CHECK(ab >= 0);
  CHECK(std::abs(ab - fid(few_b, few_a)) < 1e-8);
  CHECK(fid(few_a, few_a) < 1e-8);
}

TEST_CASE("FID approaches the analytic Gaussian distance") {
  Rng rng(69);
  const int d = 32, n = 100000;
  Eigen::VectorXd mu(d), sd(d);
  for (int k = 0; k < d; ++k) {
    mu(k) = 0.5 * normal(rng);
    sd(k) = 0.5 + 1.5 * uniform01(rng);
  }
  // N(0, I) vs N(mu, diag(sd^2)): |mu|^2 + sum (1 - sd)^2.
  const double analytic = mu.squaredNorm() + (1 - sd.array()).square().sum();
  const FeatureSet a{randomRows(rng, n, d)};
  Eigen::MatrixXd rows_b = randomRows(rng, n, d) * sd.asDiagonal();
  rows_b.rowwise() += mu.transpose();
  const double value = fid(a, FeatureSet{rows_b});
  CHECK(std::abs(value - analytic) / analytic < 0.05);
}

TEST_CASE("FID errors") {
  const FeatureSet a{Eigen::MatrixXd::Ones(5, 3)}, b{Eigen::MatrixXd::Ones(5, 4)}, one{Eigen::MatrixXd::Ones(1, 3)};
  auto code = [](auto&& fn) {
    try {
      fn();
    } catch (const Error& e) {
      return e.code();
    }
    return ErrorCode::Io;
  };
  CHECK(code([&] { fid(a, b); }) == ErrorCode::DimensionMismatch);
  CHECK(code([&] { fid(a, one); }) == ErrorCode::TooFewRows);
  FeatureSet bad = a;
  bad.rows(0, 0) = std::nan("");
  CHECK(code([&] { fid(a, bad); }) == ErrorCode::NonFinite);
}

TEST_CASE("covariance and PSD square root helpers") {
  Rng rng(70);
  const Eigen::MatrixXd rows = randomRows(rng, 50, 4);
  const Eigen::MatrixXd centered = rows.rowwise() - rows.colwise().mean();
  const Eigen::MatrixXd expected = centered.transpose() * centered / 49.0;
  CHECK((covariance(rows) - expected).cwiseAbs().maxCoeff() < 1e-12);
  const Eigen::MatrixXd s = psdSqrt(expected);
  CHECK((s * s - expected).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("redirection error in degrees") {
  CHECK(redirectionError(Direction{}, Direction{}) == 0);
  CHECK(std::abs(redirectionError(Direction{0, 0}, Direction{0, std::numbers::pi / 2}) - 90) < 1e-12);
  Rng rng(71);
  for (int i = 0; i < 1000; ++i) {
    const Direction a = randomDirection(rng), b = randomDirection(rng);
    CHECK(std::abs(redirectionError(a, b) - angularError(a, b) * 180 / std::numbers::pi) < 1e-12);
  }
}
