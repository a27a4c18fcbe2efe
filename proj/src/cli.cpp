#include "gazeaug/cli.hpp"

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <memory>
#include <thread>

#include "CLI11.hpp"
#include "gazeaug/augment.hpp"
#include "gazeaug/config.hpp"
#include "gazeaug/evalharness.hpp"
#include "gazeaug/io.hpp"
#include "gazeaug/toy.hpp"
#include "json.hpp"

namespace fs = std::filesystem;
using ojson = nlohmann::ordered_json;

namespace gazeaug::cli {
namespace {

// A flag value that overrides the config file only when given explicitly.
template <typename T>
struct Opt {
  T value;
  CLI::Option* option = nullptr;
  bool given() const { return option && option->count() > 0; }
  void applyTo(T& dst) const {
    if (given()) dst = value;
  }
};

template <typename T>
CLI::Option* add(CLI::App* app, const std::string& name, Opt<T>& o, const std::string& help) {
  o.option = app->add_option(name, o.value, help)->capture_default_str();
  return o.option;
}

struct Globals {
  std::uint64_t seed = 0;
  std::string config;
  bool degrees = false;
  int jobs = static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));

  double angleIn(double v) const { return degrees ? deg2rad(v) : v; }
  double angleOut(double v) const { return degrees ? rad2deg(v) : v; }
};

struct SpecOpts {
  Opt<double> focal{500}, distance{600};
  Opt<int> width{128}, height{128};

  void addTo(CLI::App* app) {
    add(app, "--focal", focal, "Virtual camera focal length (px)");
    add(app, "--distance", distance, "Virtual camera distance to the face center (mm)");
    add(app, "--width", width, "Normalized image width (px)");
    add(app, "--height", height, "Normalized image height (px)");
  }
  void applyTo(NormalizationSpec& s) const {
    focal.applyTo(s.focal_norm);
    distance.applyTo(s.distance_norm);
    width.applyTo(s.out_width);
    height.applyTo(s.out_height);
  }
};

struct BackgroundOpts {
  Opt<std::string> mode{"solid"}, pool{""};

  void addTo(CLI::App* app) {
    add(app, "--background", mode, "Background fill: solid or pool")
        ->check(CLI::IsMember({"solid", "pool"}));
    add(app, "--background-pool", pool, "Directory of background PNGs for --background pool");
  }
  void applyTo(AugmentConfig& a, PathsConfig& p) const {
    if (mode.given()) a.background = mode.value == "pool" ? BackgroundMode::ImagePool : BackgroundMode::SolidColor;
    if (pool.given()) {
      p.background_pool = pool.value;
      a.background_pool = pool.value;
    }
  }
};

struct RedirectorOpts {
  Opt<std::string> kind{"mesh"}, texture{"image"};

  void addTo(CLI::App* app) {
    add(app, "--redirector", kind, "Redirector: mesh, latent (oracle stubs) or identity")
        ->check(CLI::IsMember({"mesh", "latent", "identity"}));
    add(app, "--texture", texture, "Mesh colors: image (lifted from the source PNG) or mesh")
        ->check(CLI::IsMember({"image", "mesh"}));
  }
};

struct EstimatorOpts {
  Opt<std::string> kind{"oracle"}, command{""};

  void addTo(CLI::App* app) {
    add(app, "--estimator", kind, "Estimator: oracle (sidecar labels) or external")
        ->check(CLI::IsMember({"oracle", "external"}));
    add(app, "--estimator-cmd", command, "Command run as `CMD in.jsonl out.jsonl` for --estimator external");
  }
};

class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

RunConfig loadConfig(const Globals& g) {
  RunConfig cfg = g.config.empty() ? RunConfig{} : readRunConfig(g.config);
  cfg.augment.seed = g.seed;
  cfg.protocol.seed = g.seed;
  return cfg;
}

std::string required(const Opt<std::string>& flag, const std::string& from_config, const char* what) {
  if (flag.given()) return flag.value;
  if (!from_config.empty()) return from_config;
  throw UsageError(std::string("missing ") + what);
}

std::string baseDirFor(const Opt<std::string>& flag, const RunConfig& cfg, const std::string& manifest) {
  if (flag.given()) return flag.value;
  if (!cfg.paths.base_dir.empty()) return cfg.paths.base_dir;
  return fs::path(manifest).parent_path().string();
}

void progress(const std::string& msg) { std::cerr << "gazeaug: " << msg << "\n"; }

std::shared_ptr<const Redirector> makeRedirector(const RedirectorOpts& o, RunConfig& cfg,
                                                 const std::string& base_dir) {
  if (o.texture.given()) cfg.augment.texture = o.texture.value == "mesh" ? TextureSource::Mesh : TextureSource::Image;
  if (o.kind.value == "identity") return std::make_shared<IdentityRedirector>();
  if (o.kind.value == "latent")
    return std::make_shared<LatentRedirector>(std::make_shared<OracleEncoder>(cfg.embedding_rows),
                                              std::make_shared<OracleDecoder>());
  std::vector<ImageBuffer> pool;
  if (cfg.augment.background == BackgroundMode::ImagePool)
    pool = loadBackgroundPool(cfg.augment.background_pool).images;
  const NormalizationSpec spec = cfg.normalization;
  const TextureSource texture = cfg.augment.texture;
  MeshLookup lookup = [base_dir, spec, texture](const ManifestEntry& e) {
    return loadSourceMesh(e, base_dir, spec, texture);
  };
  return std::make_shared<MeshRedirector>(std::move(lookup), spec, cfg.augment.background, std::move(pool));
}

std::shared_ptr<const Estimator> makeEstimator(const EstimatorOpts& o, const std::string& out_dir) {
  if (o.kind.value == "oracle") return std::make_shared<OracleEstimator>();
  if (o.command.value.empty()) throw UsageError("--estimator external needs --estimator-cmd");
  return std::make_shared<ExternalEstimator>(o.command.value, (fs::path(out_dir) / ".estimator").string());
}

void removeEstimatorDir(const std::string& out_dir) {
  std::error_code ec;
  fs::remove_all(fs::path(out_dir) / ".estimator", ec);
}

Direction directionFrom(const std::vector<double>& v, const Globals& g) {
  Direction d{g.angleIn(v.at(0)), g.angleIn(v.at(1))};
  if (!isValid(d)) throw Error(ErrorCode::InvalidArgument, "direction out of range");
  return d;
}

ojson directionJson(const Direction& d, const Globals& g) {
  return {{"pitch", g.angleOut(d.pitch)}, {"yaw", g.angleOut(d.yaw)}};
}

void printJson(const ojson& j) { std::cout << j.dump(2) << "\n"; }

// ------------------------------------------------------------------ normalize

struct NormalizeCmd {
  Opt<std::string> input{""}, out{""}, base_dir{""};
  Opt<double> fx{500}, fy{500}, cx{64}, cy{64};
  SpecOpts spec;

  void addTo(CLI::App* app) {
    add(app, "--input", input,
        "Raw JSONL: subject, image, head_rotation[9], head_translation[3], gaze[3], face_center[3]");
    add(app, "--out", out, "Output directory (images/, warps/, manifest.jsonl)");
    add(app, "--base-dir", base_dir, "Directory that relative image paths resolve against");
    add(app, "--fx", fx, "Source camera focal length x (px)");
    add(app, "--fy", fy, "Source camera focal length y (px)");
    add(app, "--cx", cx, "Source camera principal point x (px)");
    add(app, "--cy", cy, "Source camera principal point y (px)");
    spec.addTo(app);
  }

  int run(const Globals& g) const {
    RunConfig cfg = loadConfig(g);
    spec.applyTo(cfg.normalization);
    fx.applyTo(cfg.camera.fx);
    fy.applyTo(cfg.camera.fy);
    cx.applyTo(cfg.camera.cx);
    cy.applyTo(cfg.camera.cy);
    cfg.camera.validate();
    cfg.normalization.validate();
    const std::string in_path = required(input, cfg.paths.manifest, "--input");
    const std::string out_dir = required(out, cfg.paths.output_dir, "--out");
    const std::string base = baseDirFor(base_dir, cfg, in_path);

    struct Raw {
      std::string subject, image, mesh, camera;
      HeadPose head;
      Vector3d gaze, center;
    };
    std::vector<Raw> raws;
    {
      const std::string text = readText(in_path);
      std::size_t pos = 0;
      std::uint64_t line_no = 0;
      while (pos < text.size()) {
        auto nl = text.find('\n', pos);
        if (nl == std::string::npos) nl = text.size();
        const std::string line = text.substr(pos, nl - pos);
        pos = nl + 1;
        ++line_no;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        try {
          const auto j = nlohmann::json::parse(line);
          Raw r;
          r.subject = j.at("subject").get<std::string>();
          r.image = j.at("image").get<std::string>();
          r.mesh = j.value("mesh", std::string());
          r.camera = j.value("camera", std::string());
          const auto rot = j.at("head_rotation").get<std::vector<double>>();
          const auto t = j.at("head_translation").get<std::vector<double>>();
          const auto gz = j.at("gaze").get<std::vector<double>>();
          const auto fc = j.at("face_center").get<std::vector<double>>();
          if (rot.size() != 9 || t.size() != 3 || gz.size() != 3 || fc.size() != 3)
            throw std::invalid_argument("head_rotation needs 9 values; head_translation, gaze, face_center 3");
          for (int i = 0; i < 9; ++i) r.head.rotation(i / 3, i % 3) = rot[static_cast<std::size_t>(i)];
          r.head.translation = Vector3d(t[0], t[1], t[2]);
          r.gaze = Vector3d(gz[0], gz[1], gz[2]);
          if (!(r.gaze.norm() > 0)) throw std::invalid_argument("gaze vector is zero");
          r.gaze.normalize();
          r.center = Vector3d(fc[0], fc[1], fc[2]);
          raws.push_back(std::move(r));
        } catch (const std::exception& e) {
          throw ParseError(in_path, ParseError::Unit::Line, line_no, e.what());
        }
      }
    }

    fs::create_directories(fs::path(out_dir) / "images");
    fs::create_directories(fs::path(out_dir) / "warps");
    std::vector<std::optional<ManifestEntry>> rows(raws.size());
    std::vector<std::string> errors(raws.size());
    parallelFor(raws.size(), g.jobs, [&](std::size_t i) {
      const Raw& r = raws[i];
      try {
        const ImageBuffer img = readPng(resolvePath(base, r.image));
        const NormalizedSample ns = normalizeSample(img, cfg.camera, r.head, r.gaze, r.center, cfg.normalization);
        const std::string stem = "r" + std::to_string(i);
        writePng((fs::path(out_dir) / "images" / (stem + ".png")).string(), ns.image);
        writeBytes((fs::path(out_dir) / "warps" / (stem + ".warp")).string(), encodeHomography(ns.warp));
        rows[i] = ManifestEntry{r.subject, "images/" + stem + ".png", r.mesh, ns.head, ns.gaze, r.camera};
      } catch (const std::exception& e) {
        errors[i] = e.what();
      }
    });
    std::vector<ManifestEntry> out_rows;
    ojson failures = ojson::array();
    for (std::size_t i = 0; i < rows.size(); ++i) {
      if (rows[i])
        out_rows.push_back(*rows[i]);
      else
        failures.push_back({{"row", i}, {"reason", errors[i]}});
    }
    writeManifest((fs::path(out_dir) / "manifest.jsonl").string(), out_rows);
    printJson({{"rows", raws.size()}, {"normalized", out_rows.size()}, {"failures", failures}});
    return failures.empty() ? kOk : kPartial;
  }
};

// ------------------------------------------------------------------ augment

struct AugmentCmd {
  Opt<std::string> manifest{""}, out{""}, base_dir{""}, mode{"head"};
  Opt<double> radius{60}, center_pitch{0}, center_yaw{0};
  Opt<int> targets{10}, sources{30}, min_samples{30};
  Opt<std::string> texture{"image"};
  BackgroundOpts background;
  SpecOpts spec;

  void addTo(CLI::App* app) {
    add(app, "--manifest", manifest, "Input manifest (JSONL)");
    add(app, "--out", out, "Output directory (images/, manifest.jsonl, report.json)");
    add(app, "--base-dir", base_dir, "Directory that relative manifest paths resolve against");
    add(app, "--mode", mode, "Target sampling: head or gaze")->check(CLI::IsMember({"head", "gaze"}));
    add(app, "--radius-deg", radius, "Sampling disk radius (degrees)");
    add(app, "--center-pitch", center_pitch, "Sampling disk center pitch (radians, degrees with --degrees)");
    add(app, "--center-yaw", center_yaw, "Sampling disk center yaw (radians, degrees with --degrees)");
    add(app, "--targets", targets, "Augmented images per source");
    add(app, "--sources", sources, "Sources drawn per subject");
    add(app, "--min-samples", min_samples, "Subjects with fewer samples are dropped");
    add(app, "--texture", texture, "Mesh colors: image (lifted from the source PNG) or mesh")
        ->check(CLI::IsMember({"image", "mesh"}));
    background.addTo(app);
    spec.addTo(app);
  }

  int run(const Globals& g) const {
    RunConfig cfg = loadConfig(g);
    spec.applyTo(cfg.normalization);
    background.applyTo(cfg.augment, cfg.paths);
    if (mode.given()) cfg.augment.mode = parseSamplingMode(mode.value);
    radius.applyTo(cfg.augment.radius_deg);
    if (center_pitch.given()) cfg.augment.center.pitch = g.angleIn(center_pitch.value);
    if (center_yaw.given()) cfg.augment.center.yaw = g.angleIn(center_yaw.value);
    targets.applyTo(cfg.augment.targets_per_source);
    sources.applyTo(cfg.augment.sources_per_subject);
    min_samples.applyTo(cfg.augment.min_subject_samples);
    if (texture.given()) cfg.augment.texture = texture.value == "mesh" ? TextureSource::Mesh : TextureSource::Image;
    const std::string in_path = required(manifest, cfg.paths.manifest, "--manifest");
    const std::string out_dir = required(out, cfg.paths.output_dir, "--out");

    const auto rows = readManifest(in_path);
    progress("augmenting " + std::to_string(rows.size()) + " manifest rows");
    const AugmentRun run = runAugmentation(rows, cfg.augment, {baseDirFor(base_dir, cfg, in_path), out_dir},
                                           cfg.normalization, g.jobs);
    std::cout << run.report.toJson();
    return run.report.failed == 0 ? kOk : kPartial;
  }
};

// ------------------------------------------------------------------ sample-targets

struct SampleTargetsCmd {
  Opt<int> count{10};
  Opt<double> radius{60}, center_pitch{0}, center_yaw{0};

  void addTo(CLI::App* app) {
    add(app, "--count", count, "Number of targets");
    add(app, "--radius-deg", radius, "Sampling disk radius (degrees)");
    add(app, "--center-pitch", center_pitch, "Disk center pitch (radians, degrees with --degrees)");
    add(app, "--center-yaw", center_yaw, "Disk center yaw (radians, degrees with --degrees)");
  }

  int run(const Globals& g) const {
    RunConfig cfg = loadConfig(g);
    radius.applyTo(cfg.augment.radius_deg);
    if (center_pitch.given()) cfg.augment.center.pitch = g.angleIn(center_pitch.value);
    if (center_yaw.given()) cfg.augment.center.yaw = g.angleIn(center_yaw.value);
    if (count.value < 0) throw UsageError("--count must be >= 0");
    Rng rng = StreamKey(g.seed).add("sample-targets").rng();
    ojson targets = ojson::array();
    for (int i = 0; i < count.value; ++i)
      targets.push_back(directionJson(
          sampleDiskDirection(cfg.augment.center, deg2rad(cfg.augment.radius_deg), rng), g));
    printJson({{"units", g.degrees ? "degrees" : "radians"},
               {"radius_deg", cfg.augment.radius_deg},
               {"center", directionJson(cfg.augment.center, g)},
               {"targets", targets}});
    return kOk;
  }
};

// ------------------------------------------------------------------ redirect

struct RedirectCmd {
  Opt<std::string> manifest{""}, out{""}, base_dir{""}, pattern{"both"};
  std::vector<double> target_head, target_gaze;
  std::vector<std::size_t> rows;
  RedirectorOpts redirector;
  BackgroundOpts background;
  SpecOpts spec;

  void addTo(CLI::App* app) {
    add(app, "--manifest", manifest, "Input manifest (JSONL)");
    add(app, "--out", out, "Output directory (images/, manifest.jsonl)");
    add(app, "--base-dir", base_dir, "Directory that relative manifest paths resolve against");
    add(app, "--pattern", pattern, "Factors to move: both, gaze or head")
        ->check(CLI::IsMember({"both", "gaze", "head"}));
    app->add_option("--target-head", target_head, "Target head PITCH YAW (radians, degrees with --degrees)")
        ->expected(2);
    app->add_option("--target-gaze", target_gaze, "Target gaze PITCH YAW (radians, degrees with --degrees)")
        ->expected(2);
    app->add_option("--row", rows, "Manifest rows to redirect (0-based; default all)");
    redirector.addTo(app);
    background.addTo(app);
    spec.addTo(app);
  }

  int run(const Globals& g) const {
    RunConfig cfg = loadConfig(g);
    spec.applyTo(cfg.normalization);
    background.applyTo(cfg.augment, cfg.paths);
    const std::string in_path = required(manifest, cfg.paths.manifest, "--manifest");
    const std::string out_dir = required(out, cfg.paths.output_dir, "--out");
    const std::string base = baseDirFor(base_dir, cfg, in_path);
    const auto entries = readManifest(in_path);
    std::vector<std::size_t> selected = rows;
    if (selected.empty())
      for (std::size_t i = 0; i < entries.size(); ++i) selected.push_back(i);
    for (std::size_t r : selected)
      if (r >= entries.size()) throw UsageError("--row " + std::to_string(r) + " is out of range");

    std::optional<Direction> th, tg;
    if (!target_head.empty()) th = directionFrom(target_head, g);
    if (!target_gaze.empty()) tg = directionFrom(target_gaze, g);
    const RedirectPattern pat = parseRedirectPattern(pattern.value);
    const auto red = makeRedirector(redirector, cfg, base);
    const ImageLoader loader = pngLoader(base);

    fs::create_directories(fs::path(out_dir) / "images");
    std::vector<std::optional<ManifestEntry>> outputs(selected.size());
    std::vector<std::string> errors(selected.size());
    parallelFor(selected.size(), g.jobs, [&](std::size_t i) {
      const std::size_t r = selected[i];
      const ManifestEntry& e = entries[r];
      try {
        const LabeledImage src = loader(e);
        const std::uint64_t stream = StreamKey(g.seed).add("redirect").add(static_cast<std::uint64_t>(r)).value();
        const LabeledImage res = red->redirect({e, src, pat, th, tg, stream});
        const std::string rel = "images/r" + std::to_string(r) + ".png";
        writePng((fs::path(out_dir) / rel).string(), res.image);
        ManifestEntry o = e;
        o.image = rel;
        if (res.sidecar) {
          o.head = res.sidecar->head;
          o.gaze = res.sidecar->gaze;
        }
        outputs[i] = o;
      } catch (const std::exception& ex) {
        errors[i] = ex.what();
      }
    });
    std::vector<ManifestEntry> out_rows;
    ojson failures = ojson::array();
    for (std::size_t i = 0; i < selected.size(); ++i) {
      if (outputs[i])
        out_rows.push_back(*outputs[i]);
      else
        failures.push_back({{"row", selected[i]}, {"reason", errors[i]}});
    }
    writeManifest((fs::path(out_dir) / "manifest.jsonl").string(), out_rows);
    printJson({{"requested", selected.size()}, {"redirected", out_rows.size()}, {"failures", failures}});
    return failures.empty() ? kOk : kPartial;
  }
};

// ------------------------------------------------------------------ eval

void finishReport(const EvalRun& run, double bin_width, const std::string& out_dir) {
  for (const auto& w : run.warnings) std::cerr << "gazeaug: warning: " << w << "\n";
  for (const auto& f : run.failures)
    std::cerr << "gazeaug: row " << f.row << " target " << f.target_index << " failed: " << f.reason << "\n";
  const ReportBundle bundle = report(run, bin_width);
  writeReport(out_dir, bundle);
  std::cout << bundle.summary_json;
}

struct EvalAngleCmd {
  Opt<std::string> manifest{""}, out{""}, base_dir{""}, pattern{"both"};
  Opt<int> targets{10}, sources{20};
  Opt<double> radius{60}, bin_width{10}, center_pitch{0}, center_yaw{0};
  RedirectorOpts redirector;
  EstimatorOpts estimator;
  BackgroundOpts background;
  SpecOpts spec;

  void addTo(CLI::App* app) {
    add(app, "--manifest", manifest, "Input manifest (JSONL)");
    add(app, "--out", out, "Report directory (summary.json, records.csv, bins.csv)");
    add(app, "--base-dir", base_dir, "Directory that relative manifest paths resolve against");
    add(app, "--pattern", pattern, "Factors to move: both, gaze or head")
        ->check(CLI::IsMember({"both", "gaze", "head"}));
    add(app, "--targets", targets, "Targets sampled per source");
    add(app, "--sources", sources, "Sources drawn per subject");
    add(app, "--radius-deg", radius, "Sampling disk radius (degrees)");
    add(app, "--center-pitch", center_pitch, "Disk center pitch (radians, degrees with --degrees)");
    add(app, "--center-yaw", center_yaw, "Disk center yaw (radians, degrees with --degrees)");
    add(app, "--bin-width", bin_width, "Target-angle bin width for bins.csv (degrees)");
    redirector.addTo(app);
    estimator.addTo(app);
    background.addTo(app);
    spec.addTo(app);
  }

  int run(const Globals& g) const {
    RunConfig cfg = loadConfig(g);
    spec.applyTo(cfg.normalization);
    background.applyTo(cfg.augment, cfg.paths);
    if (pattern.given()) cfg.protocol.pattern = parseRedirectPattern(pattern.value);
    targets.applyTo(cfg.protocol.targets_per_source);
    sources.applyTo(cfg.protocol.sources_per_subject);
    radius.applyTo(cfg.protocol.radius_deg);
    if (center_pitch.given()) cfg.protocol.center.pitch = g.angleIn(center_pitch.value);
    if (center_yaw.given()) cfg.protocol.center.yaw = g.angleIn(center_yaw.value);
    bin_width.applyTo(cfg.bin_width_deg);
    cfg.validate();
    const std::string in_path = required(manifest, cfg.paths.manifest, "--manifest");
    const std::string out_dir = required(out, cfg.paths.output_dir, "--out");
    const std::string base = baseDirFor(base_dir, cfg, in_path);
    const auto entries = readManifest(in_path);
    const auto red = makeRedirector(redirector, cfg, base);
    const auto est = makeEstimator(estimator, out_dir);
    progress("redirect-to-angle over " + std::to_string(entries.size()) + " manifest rows");
    const EvalRun run = redirectToAngle(entries, *red, *est, pngLoader(base), cfg.protocol, g.jobs);
    removeEstimatorDir(out_dir);
    finishReport(run, cfg.bin_width_deg, out_dir);
    return run.failures.empty() ? kOk : kPartial;
  }
};

struct EvalImageCmd {
  Opt<std::string> sources{""}, targets{""}, out{""}, base_dir{""}, gen_features{""}, target_features{""};
  Opt<double> alpha{0.84}, bin_width{10};
  RedirectorOpts redirector;
  EstimatorOpts estimator;
  BackgroundOpts background;
  SpecOpts spec;

  void addTo(CLI::App* app) {
    add(app, "--sources", sources, "Source manifest (JSONL), row i pairs with target row i");
    add(app, "--targets", targets, "Target manifest (JSONL)");
    add(app, "--out", out, "Output directory (generated/, generated.jsonl, report files)");
    add(app, "--base-dir", base_dir, "Directory that relative manifest paths resolve against");
    add(app, "--gen-features", gen_features, "GZFT features of the generated images, in pair order");
    add(app, "--target-features", target_features, "GZFT features of the target images, in pair order");
    add(app, "--alpha", alpha, "MS-SSIM weight in the mixed reconstruction loss");
    add(app, "--bin-width", bin_width, "Target-angle bin width for bins.csv (degrees)");
    redirector.addTo(app);
    estimator.addTo(app);
    background.addTo(app);
    spec.addTo(app);
  }

  int run(const Globals& g) const {
    RunConfig cfg = loadConfig(g);
    spec.applyTo(cfg.normalization);
    background.applyTo(cfg.augment, cfg.paths);
    alpha.applyTo(cfg.loss.alpha);
    cfg.protocol.alpha = cfg.loss.alpha;
    bin_width.applyTo(cfg.bin_width_deg);
    cfg.validate();
    if (!sources.given() || !targets.given()) throw UsageError("eval-image needs --sources and --targets");
    if (gen_features.given() != target_features.given())
      throw UsageError("--gen-features and --target-features go together");
    const std::string out_dir = required(out, cfg.paths.output_dir, "--out");
    const std::string base = baseDirFor(base_dir, cfg, sources.value);
    const auto src = readManifest(sources.value);
    const auto tgt = readManifest(targets.value);
    if (src.size() != tgt.size())
      throw Error(ErrorCode::DimensionMismatch, "source and target manifests differ in length");
    std::vector<std::pair<ManifestEntry, ManifestEntry>> pairs;
    for (std::size_t i = 0; i < src.size(); ++i) pairs.emplace_back(src[i], tgt[i]);
    std::optional<PairFeatures> features;
    if (gen_features.given())
      features = PairFeatures{readFeatureFile(gen_features.value).features,
                              readFeatureFile(target_features.value).features};

    const auto red = makeRedirector(redirector, cfg, base);
    const auto est = makeEstimator(estimator, out_dir);
    fs::create_directories(fs::path(out_dir) / "generated");
    std::vector<std::optional<ManifestEntry>> generated(pairs.size());
    const GeneratedSink sink = [&](std::size_t i, const LabeledImage& img) {
      char name[32];
      std::snprintf(name, sizeof name, "p%05zu.png", i);
      const std::string rel = std::string("generated/") + name;
      writePng((fs::path(out_dir) / rel).string(), img.image);
      ManifestEntry e = pairs[i].first;
      e.image = rel;
      const Labels l = img.sidecar ? *img.sidecar : Labels{pairs[i].second.head, pairs[i].second.gaze};
      e.head = l.head;
      e.gaze = l.gaze;
      generated[i] = e;
    };
    progress("redirect-to-image over " + std::to_string(pairs.size()) + " pairs");
    const EvalRun run = redirectToImage(pairs, *red, *est, pngLoader(base), features, cfg.protocol, g.jobs, sink);
    removeEstimatorDir(out_dir);
    std::vector<ManifestEntry> gen_rows;
    for (const auto& e : generated)
      if (e) gen_rows.push_back(*e);
    writeManifest((fs::path(out_dir) / "generated.jsonl").string(), gen_rows);
    finishReport(run, cfg.bin_width_deg, out_dir);
    return run.failures.empty() ? kOk : kPartial;
  }
};

// ------------------------------------------------------------------ metric

struct MetricCmd {
  std::string a, b;
  Opt<double> alpha{0.84}, lambda_id{2}, lambda_rec{200};
  Opt<double> sted{0}, id{0}, rec{0};
  Opt<std::string> factor{"gaze"};

  CLI::App* fid = nullptr;
  CLI::App* msssim = nullptr;
  CLI::App* mixed = nullptr;
  CLI::App* angular = nullptr;
  CLI::App* loss = nullptr;

  void addTo(CLI::App* app) {
    app->require_subcommand(1);
    fid = app->add_subcommand("fid", "Frechet distance between two GZFT feature files");
    fid->add_option("A", a, "First feature file")->required();
    fid->add_option("B", b, "Second feature file")->required();

    msssim = app->add_subcommand("msssim", "MS-SSIM between two PNG images");
    msssim->add_option("A", a, "First image")->required();
    msssim->add_option("B", b, "Second image")->required();

    mixed = app->add_subcommand("mixed-rec", "alpha * (1 - MS-SSIM) + (1 - alpha) * l1 between two PNG images");
    mixed->add_option("A", a, "First image")->required();
    mixed->add_option("B", b, "Second image")->required();
    add(mixed, "--alpha", alpha, "MS-SSIM weight");

    angular = app->add_subcommand("angular", "Mean angular error (degrees) between aligned label manifests");
    angular->add_option("A", a, "Reference manifest")->required();
    angular->add_option("B", b, "Estimated manifest")->required();
    add(angular, "--factor", factor, "Labels to compare: gaze or head")->check(CLI::IsMember({"gaze", "head"}));

    loss = app->add_subcommand("loss", "Total loss L_sted + lambda_id * L_id + lambda_rec * L_rec");
    add(loss, "--sted", sted, "L_sted value");
    add(loss, "--id", id, "L_id value");
    add(loss, "--rec", rec, "L_rec value");
    add(loss, "--lambda-id", lambda_id, "Identity loss weight");
    add(loss, "--lambda-rec", lambda_rec, "Reconstruction loss weight");
  }

  int run(const Globals& g) const {
    const RunConfig cfg = loadConfig(g);
    ojson j;
    if (fid->parsed()) {
      const FeatureSet fa = readFeatureFile(a).features;
      const FeatureSet fb = readFeatureFile(b).features;
      j = {{"metric", "fid"}, {"value", gazeaug::fid(fa, fb)}, {"n", {fa.count(), fb.count()}},
           {"params", {{"dim", fa.dim()}}}};
    } else if (msssim->parsed()) {
      const ImageBuffer x = readPng(a), y = readPng(b);
      j = {{"metric", "msssim"}, {"value", msSsim(x, y)}, {"n", 1},
           {"params", {{"scales", msSsimScaleCount(x.width(), x.height())}, {"window", 11}, {"sigma", 1.5}}}};
    } else if (mixed->parsed()) {
      LossWeights w = cfg.loss;
      alpha.applyTo(w.alpha);
      const ImageBuffer x = readPng(a), y = readPng(b);
      j = {{"metric", "mixed-rec"}, {"value", mixedRecLoss(x, y, w.alpha)}, {"n", 1},
           {"params", {{"alpha", w.alpha}}}};
    } else if (angular->parsed()) {
      const auto ra = readManifest(a), rb = readManifest(b);
      if (ra.size() != rb.size()) throw Error(ErrorCode::DimensionMismatch, "manifests differ in length");
      if (ra.empty()) throw Error(ErrorCode::InvalidArgument, "manifests are empty");
      double sum = 0;
      for (std::size_t i = 0; i < ra.size(); ++i)
        sum += factor.value == "head" ? redirectionError(ra[i].head, rb[i].head)
                                      : redirectionError(ra[i].gaze, rb[i].gaze);
      j = {{"metric", "angular"}, {"value", sum / static_cast<double>(ra.size())}, {"n", ra.size()},
           {"params", {{"factor", factor.value}, {"units", "degrees"}}}};
    } else {
      LossWeights w = cfg.loss;
      lambda_id.applyTo(w.lambda_id);
      lambda_rec.applyTo(w.lambda_rec);
      j = {{"metric", "loss"}, {"value", totalLoss(sted.value, id.value, rec.value, w)}, {"n", 1},
           {"params", {{"lambda_id", w.lambda_id}, {"lambda_rec", w.lambda_rec}}}};
    }
    printJson(j);
    return kOk;
  }
};

// ------------------------------------------------------------------ report-diff

struct ReportDiffCmd {
  std::string baseline, treatment;
  Opt<std::string> out{""};

  void addTo(CLI::App* app) {
    app->add_option("BASELINE", baseline, "Baseline summary.json")->required();
    app->add_option("TREATMENT", treatment, "Treatment summary.json")->required();
    add(app, "--out", out, "Write the difference here instead of standard output");
  }

  int run(const Globals&) const {
    const std::string diff =
        diffSummaries(parseSummaryJson(readText(baseline)), parseSummaryJson(readText(treatment)));
    if (out.given())
      writeText(out.value, diff);
    else
      std::cout << diff;
    return kOk;
  }
};

// ------------------------------------------------------------------ make-toy

struct MakeToyCmd {
  Opt<std::string> out{""};
  Opt<int> subjects{2}, samples{3};
  Opt<double> head_radius{15}, gaze_offset{10};
  SpecOpts spec;

  void addTo(CLI::App* app) {
    add(app, "--out", out, "Output directory (meshes/, images/, manifest.jsonl)")->required();
    add(app, "--subjects", subjects, "Number of subjects");
    add(app, "--samples", samples, "Samples per subject");
    add(app, "--head-radius-deg", head_radius, "Head labels lie within this disk around frontal (degrees)");
    add(app, "--gaze-offset-deg", gaze_offset, "Gaze labels lie within this disk around the head (degrees)");
    spec.addTo(app);
  }

  int run(const Globals& g) const {
    RunConfig cfg = loadConfig(g);
    spec.applyTo(cfg.normalization);
    ToyOptions o;
    o.subjects = subjects.value;
    o.samples_per_subject = samples.value;
    o.head_radius_deg = head_radius.value;
    o.gaze_offset_deg = gaze_offset.value;
    o.seed = g.seed;
    o.spec = cfg.normalization;
    const auto rows = makeToyDataset(out.value, o, g.jobs);
    printJson({{"rows", rows.size()}, {"manifest", (fs::path(out.value) / "manifest.jsonl").generic_string()}});
    return kOk;
  }
};

int codeFor(ErrorCode c) {
  switch (c) {
    case ErrorCode::DegenerateGeometry:
    case ErrorCode::SingularNormalEquations:
    case ErrorCode::NoConvergence:
    case ErrorCode::BehindCamera:
    case ErrorCode::RenderFailure:
    case ErrorCode::External:
      return kInternal;
    default:
      return kInput;
  }
}

}  // namespace

int dispatch(int argc, char** argv) {
  CLI::App app{"Gaze and head redirection augmentation and evaluation toolkit"};
  app.name("gazeaug");
  app.require_subcommand(1);
  app.fallthrough();
  Globals g;
  app.add_option("--seed", g.seed, "Seed for every random draw")->capture_default_str();
  app.add_option("--config", g.config, "Run configuration file ([section] key = value)");
  app.add_flag("--degrees", g.degrees, "Read and print direction angles in degrees instead of radians");
  app.add_option("--jobs", g.jobs, "Worker threads; results do not depend on it")
      ->capture_default_str()
      ->check(CLI::PositiveNumber);

  NormalizeCmd normalize;
  AugmentCmd augment;
  SampleTargetsCmd sample_targets;
  RedirectCmd redirect_cmd;
  EvalAngleCmd eval_angle;
  EvalImageCmd eval_image;
  MetricCmd metric;
  ReportDiffCmd report_diff;
  MakeToyCmd make_toy;

  struct Entry {
    CLI::App* app;
    std::function<int()> run;
  };
  std::vector<Entry> entries;
  auto sub = [&](const char* name, const char* help, auto& cmd) {
    CLI::App* s = app.add_subcommand(name, help);
    cmd.addTo(s);
    entries.push_back({s, [&cmd, &g] { return cmd.run(g); }});
  };
  sub("normalize", "Warp raw camera images into the normalized camera space", normalize);
  sub("augment", "Render rotated copies of labeled meshes with exact labels", augment);
  sub("sample-targets", "Draw target directions uniformly from a disk", sample_targets);
  sub("redirect", "Redirect manifest rows toward fixed head/gaze targets", redirect_cmd);
  sub("eval-angle", "Redirect-to-angle evaluation", eval_angle);
  sub("eval-image", "Redirect-to-image evaluation", eval_image);
  sub("metric", "Standalone metrics (fid, msssim, mixed-rec, angular, loss)", metric);
  sub("report-diff", "Difference of two summary.json reports (treatment - baseline)", report_diff);
  sub("make-toy", "Write a small synthetic dataset", make_toy);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    CLI::App* deepest = &app;
    for (bool descended = true; descended;) {
      descended = false;
      for (CLI::App* s : deepest->get_subcommands()) {
        deepest = s;
        descended = true;
        break;
      }
    }
    std::cerr << deepest->help();
    return kUsage;
  }

  try {
    for (const auto& e : entries)
      if (e.app->parsed()) return e.run();
    return kUsage;
  } catch (const UsageError& e) {
    std::cerr << "gazeaug: " << e.what() << "\n";
    return kUsage;
  } catch (const Error& e) {
    std::cerr << "gazeaug: " << e.what() << "\n";
    return codeFor(e.code());
  } catch (const std::exception& e) {
    std::cerr << "gazeaug: internal error: " << e.what() << "\n";
    return kInternal;
  }
}

}  // namespace gazeaug::cli
