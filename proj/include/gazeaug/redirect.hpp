#pragma once

#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <string>

#include <Eigen/Core>

#include "gazeaug/camnorm.hpp"
#include "gazeaug/facemesh.hpp"
#include "gazeaug/geometry.hpp"
#include "gazeaug/image.hpp"
#include "gazeaug/manifest.hpp"
#include "gazeaug/raster.hpp"

namespace gazeaug {

// n x 3 block of 3-vectors for one controllable factor.
template <typename Scalar>
using FactorEmbedding_ = Eigen::Matrix<Scalar, Eigen::Dynamic, 3, Eigen::RowMajor>;
using FactorEmbedding = FactorEmbedding_<double>;

// Rotates every row by rotationBetween(c_src, c_tgt). T(z, c, c) returns z
// exactly and T composes exactly under the Euler construction.
template <typename Derived, typename Scalar = typename Derived::Scalar>
FactorEmbedding_<Scalar> transformEmbedding(const Eigen::MatrixBase<Derived>& z,
                                            const Direction_<Scalar>& c_src,
                                            const Direction_<Scalar>& c_tgt) {
  static_assert(Derived::ColsAtCompileTime == 3, "factor embeddings have 3 columns");
  if (c_src == c_tgt) return z;
  const Rotation3<Scalar> r = rotationBetween(c_src, c_tgt);
  return z * r.transpose();
}

inline const std::string kHeadFactor = "head";
inline const std::string kGazeFactor = "gaze";

struct Factor {
  FactorEmbedding embedding;
  Direction condition;  // pseudo-condition
};

struct LatentState {
  Eigen::VectorXd id_code;
  std::map<std::string, Factor> factors;

  const Factor& factor(const std::string& name) const;
};

enum class RedirectPattern { Both, GazeOnly, HeadOnly };

const char* toString(RedirectPattern p);
RedirectPattern parseRedirectPattern(const std::string& s);

// Both: rotation from (head condition, target_head) applied to head and gaze.
//   If target_gaze is also given, the gaze factor is then rotated onto it.
// GazeOnly: rotation from (gaze condition, target_gaze) applied to gaze only.
// HeadOnly: rotation from (head condition, target_head) applied to head only.
// Conditions move with their embeddings; the input is never modified.
LatentState redirect(const LatentState& state, RedirectPattern pattern,
                     const std::optional<Direction>& target_head,
                     const std::optional<Direction>& target_gaze);

struct Labels {
  Direction head;
  Direction gaze;

  friend bool operator==(const Labels&, const Labels&) = default;
};

// An image plus an optional ground-truth side channel that the oracle stubs
// read and real models ignore.
struct LabeledImage {
  ImageBuffer image;
  std::optional<Labels> sidecar;
};

class Encoder {
 public:
  virtual ~Encoder() = default;
  virtual LatentState encode(const LabeledImage& image) const = 0;
};

class Decoder {
 public:
  virtual ~Decoder() = default;
  virtual LabeledImage decode(const LatentState& state) const = 0;
};

class Estimator {
 public:
  virtual ~Estimator() = default;
  virtual Labels estimate(const LabeledImage& image) const = 0;
};

struct RedirectRequest {
  const ManifestEntry& source;
  const LabeledImage& source_image;
  RedirectPattern pattern;
  std::optional<Direction> target_head;
  std::optional<Direction> target_gaze;
  std::uint64_t stream_seed = 0;  // per-request randomness (backgrounds)
};

class Redirector {
 public:
  virtual ~Redirector() = default;
  virtual LabeledImage redirect(const RedirectRequest& request) const = 0;
};

// Image in id_code, conditions from the sidecar, embeddings are the fixed
// basis rotated by rotationFromDirection(condition) so row 0 is v(condition).
class OracleEncoder : public Encoder {
 public:
  explicit OracleEncoder(int rows_per_factor = 16);
  LatentState encode(const LabeledImage& image) const override;

 private:
  FactorEmbedding basis_;
};

// Rebuilds the image from id_code and reports the state's conditions as sidecar.
class OracleDecoder : public Decoder {
 public:
  LabeledImage decode(const LatentState& state) const override;
};

class OracleEstimator : public Estimator {
 public:
  Labels estimate(const LabeledImage& image) const override;
};

// Returns the source image untouched.
class IdentityRedirector : public Redirector {
 public:
  LabeledImage redirect(const RedirectRequest& request) const override;
};

// Encoder -> redirect() -> Decoder.
class LatentRedirector : public Redirector {
 public:
  LatentRedirector(std::shared_ptr<const Encoder> encoder, std::shared_ptr<const Decoder> decoder);
  LabeledImage redirect(const RedirectRequest& request) const override;

 private:
  std::shared_ptr<const Encoder> encoder_;
  std::shared_ptr<const Decoder> decoder_;
};

using MeshLookup = std::function<LabeledMesh(const ManifestEntry&)>;

// Rotates the source mesh and re-renders it. Head and gaze labels of the
// output follow the same rules as redirect() on latents.
class MeshRedirector : public Redirector {
 public:
  MeshRedirector(MeshLookup lookup, NormalizationSpec spec,
                 BackgroundMode background = BackgroundMode::SolidColor,
                 std::vector<ImageBuffer> pool = {});
  LabeledImage redirect(const RedirectRequest& request) const override;

  // Labeled mesh after applying the request's pattern; exposed for tests.
  LabeledMesh redirectMesh(const LabeledMesh& source, const RedirectRequest& request) const;

 private:
  MeshLookup lookup_;
  NormalizationSpec spec_;
  BackgroundMode background_;
  std::vector<ImageBuffer> pool_;
};

// Runs `command <in.jsonl> <out.jsonl>` once per image. The input manifest
// holds one row pointing at a PNG; the command writes the estimated labels
// as a one-row manifest.
class ExternalEstimator : public Estimator {
 public:
  ExternalEstimator(std::string command, std::string work_dir);
  Labels estimate(const LabeledImage& image) const override;

 private:
  std::string command_;
  std::string work_dir_;
};

}  // namespace gazeaug
