#include "gazeaug/redirect.hpp"

#include <atomic>
#include <cstdlib>
#include <filesystem>
#include <sstream>
#include <thread>

#include "gazeaug/io.hpp"

namespace gazeaug {

const Factor& LatentState::factor(const std::string& name) const {
  const auto it = factors.find(name);
  if (it == factors.end()) throw Error(ErrorCode::InvalidArgument, "latent state lacks factor '" + name + "'");
  return it->second;
}

const char* toString(RedirectPattern p) {
  switch (p) {
    case RedirectPattern::Both: return "both";
    case RedirectPattern::GazeOnly: return "gaze";
    case RedirectPattern::HeadOnly: return "head";
  }
  return "?";
}

RedirectPattern parseRedirectPattern(const std::string& s) {
  if (s == "both") return RedirectPattern::Both;
  if (s == "gaze" || s == "gaze-only") return RedirectPattern::GazeOnly;
  if (s == "head" || s == "head-only") return RedirectPattern::HeadOnly;
  throw Error(ErrorCode::InvalidArgument, "unknown redirect pattern '" + s + "'");
}

namespace {

void rotateFactor(Factor& f, const Direction& target) {
  if (f.condition == target) return;
  f.embedding = transformEmbedding(f.embedding, f.condition, target);
  f.condition = target;
}

// Applies R to a factor whose target is implied by R rather than given.
void rotateFactorBy(Factor& f, const Rotation3d& r) {
  f.embedding = f.embedding * r.transpose();
  f.condition = vectorToDirection<double>(r * directionToVector(f.condition));
}

const Direction& requireTarget(const std::optional<Direction>& t, const char* what) {
  if (!t) throw Error(ErrorCode::MissingTarget, std::string("pattern requires a target ") + what);
  return *t;
}

}  // namespace

LatentState redirect(const LatentState& state, RedirectPattern pattern,
                     const std::optional<Direction>& target_head,
                     const std::optional<Direction>& target_gaze) {
  LatentState out = state;
  switch (pattern) {
    case RedirectPattern::Both: {
      const Direction& th = requireTarget(target_head, "head direction");
      Factor& head = out.factors.at(kHeadFactor);
      Factor& gaze = out.factors.at(kGazeFactor);
      if (!(head.condition == th)) {
        rotateFactorBy(gaze, rotationBetween(head.condition, th));
        rotateFactor(head, th);
      }
      if (target_gaze) rotateFactor(gaze, *target_gaze);
      break;
    }
    case RedirectPattern::GazeOnly:
      rotateFactor(out.factors.at(kGazeFactor), requireTarget(target_gaze, "gaze direction"));
      break;
    case RedirectPattern::HeadOnly:
      rotateFactor(out.factors.at(kHeadFactor), requireTarget(target_head, "head direction"));
      break;
  }
  return out;
}

OracleEncoder::OracleEncoder(int rows_per_factor) : basis_(rows_per_factor, 3) {
  if (rows_per_factor < 1) throw Error(ErrorCode::InvalidArgument, "embedding needs >= 1 row");
  Rng rng(0x5eed);
  basis_.row(0) << 0, 0, -1;
  for (int i = 1; i < rows_per_factor; ++i)
    for (int j = 0; j < 3; ++j) basis_(i, j) = 2 * uniform01(rng) - 1;
}

LatentState OracleEncoder::encode(const LabeledImage& image) const {
  if (!image.sidecar) throw Error(ErrorCode::InvalidArgument, "oracle encoder needs sidecar labels");
  LatentState s;
  const auto& px = image.image.data();
  s.id_code.resize(static_cast<Eigen::Index>(px.size()) + 2);
  s.id_code(0) = image.image.width();
  s.id_code(1) = image.image.height();
  for (std::size_t i = 0; i < px.size(); ++i) s.id_code(static_cast<Eigen::Index>(i) + 2) = px[i];
  for (const auto& [name, cond] : {std::pair{kHeadFactor, image.sidecar->head},
                                   std::pair{kGazeFactor, image.sidecar->gaze}}) {
    s.factors[name] = {basis_ * rotationFromDirection(cond).transpose(), cond};
  }
  return s;
}

LabeledImage OracleDecoder::decode(const LatentState& state) const {
  if (state.id_code.size() < 2) throw Error(ErrorCode::InvalidArgument, "id code too short");
  const int w = static_cast<int>(state.id_code(0));
  const int h = static_cast<int>(state.id_code(1));
  ImageBuffer img(w, h);
  if (static_cast<Eigen::Index>(img.data().size()) + 2 != state.id_code.size())
    throw Error(ErrorCode::DimensionMismatch, "id code does not hold a " + std::to_string(w) + "x" +
                                                  std::to_string(h) + " image");
  for (std::size_t i = 0; i < img.data().size(); ++i)
    img.data()[i] = state.id_code(static_cast<Eigen::Index>(i) + 2);
  return {std::move(img),
          Labels{state.factor(kHeadFactor).condition, state.factor(kGazeFactor).condition}};
}

Labels OracleEstimator::estimate(const LabeledImage& image) const {
  if (!image.sidecar) throw Error(ErrorCode::External, "oracle estimator needs sidecar labels");
  return *image.sidecar;
}

LabeledImage IdentityRedirector::redirect(const RedirectRequest& request) const {
  return request.source_image;
}

LatentRedirector::LatentRedirector(std::shared_ptr<const Encoder> encoder,
                                   std::shared_ptr<const Decoder> decoder)
    : encoder_(std::move(encoder)), decoder_(std::move(decoder)) {}

LabeledImage LatentRedirector::redirect(const RedirectRequest& request) const {
  const LatentState s = encoder_->encode(request.source_image);
  return decoder_->decode(
      gazeaug::redirect(s, request.pattern, request.target_head, request.target_gaze));
}

MeshRedirector::MeshRedirector(MeshLookup lookup, NormalizationSpec spec, BackgroundMode background,
                               std::vector<ImageBuffer> pool)
    : lookup_(std::move(lookup)), spec_(spec), background_(background), pool_(std::move(pool)) {
  spec_.validate();
  if (background_ == BackgroundMode::ImagePool && pool_.empty())
    throw Error(ErrorCode::EmptyPool, "mesh redirector configured with an empty background pool");
}

LabeledMesh MeshRedirector::redirectMesh(const LabeledMesh& source,
                                         const RedirectRequest& request) const {
  // Targets equal to the manifest labels mean "stay": the mesh-derived labels
  // only agree with them up to round-off.
  const Direction head = headDirection(source.head.rotation);
  const Direction gaze = vectorToDirection<double>(source.gaze);
  switch (request.pattern) {
    case RedirectPattern::Both: {
      const Direction& th = requireTarget(request.target_head, "head direction");
      const bool head_moves = !(th == request.source.head);
      LabeledMesh out = head_moves ? rotateAboutCenter(source, rotationBetween(head, th)) : source;
      if (request.target_gaze && (head_moves || !(*request.target_gaze == request.source.gaze))) {
        const Direction g = vectorToDirection<double>(out.gaze);
        out.gaze = rotationBetween(g, *request.target_gaze) * out.gaze;
      }
      return out;
    }
    case RedirectPattern::HeadOnly: {
      const Direction& th = requireTarget(request.target_head, "head direction");
      LabeledMesh out = th == request.source.head ? source : rotateAboutCenter(source, rotationBetween(head, th));
      out.gaze = source.gaze;
      return out;
    }
    case RedirectPattern::GazeOnly: {
      const Direction& tg = requireTarget(request.target_gaze, "gaze direction");
      LabeledMesh out = source;
      if (!(tg == request.source.gaze)) out.gaze = rotationBetween(gaze, tg) * source.gaze;
      return out;
    }
  }
  throw Error(ErrorCode::InvalidArgument, "unknown pattern");
}

LabeledImage MeshRedirector::redirect(const RedirectRequest& request) const {
  const LabeledMesh source = lookup_(request.source);
  const LabeledMesh out = redirectMesh(source, request);
  const Labels labels{headDirection(out.head.rotation), vectorToDirection<double>(out.gaze)};

  // Nothing moved: the source image already shows the requested state.
  if (out.mesh.vertices == source.mesh.vertices && out.gaze == source.gaze)
    return {request.source_image.image, labels};

  Rng rng(request.stream_seed);
  const ImageBuffer bg =
      randomBackground(rng, background_, pool_, spec_.out_width, spec_.out_height);
  RenderReport report;
  ImageBuffer img = rasterize(out.mesh, spec_.intrinsics(), bg, &report);
  if (report.triangles_skipped_behind_camera > 0)
    throw Error(ErrorCode::RenderFailure, std::to_string(report.triangles_skipped_behind_camera) +
                                              " triangles behind camera");
  return {std::move(img), labels};
}

ExternalEstimator::ExternalEstimator(std::string command, std::string work_dir)
    : command_(std::move(command)), work_dir_(std::move(work_dir)) {
  std::filesystem::create_directories(work_dir_);
}

Labels ExternalEstimator::estimate(const LabeledImage& image) const {
  static std::atomic<std::uint64_t> counter{0};
  namespace fs = std::filesystem;
  std::ostringstream stem;
  stem << "est_" << std::hash<std::thread::id>{}(std::this_thread::get_id()) << "_"
       << counter.fetch_add(1);
  const fs::path dir(work_dir_);
  const fs::path png = dir / (stem.str() + ".png");
  const fs::path in = dir / (stem.str() + "_in.jsonl");
  const fs::path out = dir / (stem.str() + "_out.jsonl");
  writePng(png.string(), image.image);
  ManifestEntry row;
  row.subject = "query";
  row.image = png.string();
  row.mesh = "-";
  row.camera = "-";
  writeManifest(in.string(), {row});
  const std::string cmd = command_ + " '" + in.string() + "' '" + out.string() + "'";
  const int rc = std::system(cmd.c_str());
  if (rc != 0) throw Error(ErrorCode::External, "estimator command failed (" + std::to_string(rc) + "): " + cmd);
  const auto rows = readManifest(out.string());
  if (rows.size() != 1)
    throw Error(ErrorCode::External, "estimator must return exactly one row, got " + std::to_string(rows.size()));
  std::error_code ec;
  fs::remove(png, ec);
  fs::remove(in, ec);
  fs::remove(out, ec);
  return {rows[0].head, rows[0].gaze};
}

}  // namespace gazeaug
