#include "gazeaug/config.hpp"

#include <charconv>
#include <cmath>
#include <filesystem>
#include <functional>

#include "gazeaug/io.hpp"

namespace gazeaug {

void RunConfig::validate() const {
  camera.validate();
  normalization.validate();
  augment.validate();
  protocol.validate();
  if (embedding_rows < 1) throw Error(ErrorCode::InvalidArgument, "embedding_rows must be >= 1");
  if (!(bin_width_deg > 0)) throw Error(ErrorCode::InvalidArgument, "bin_width_deg must be positive");
}

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

double toDouble(const std::string& v) {
  double out = 0;
  const auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || p != v.data() + v.size() || !std::isfinite(out))
    throw std::invalid_argument("expected a finite number, got '" + v + "'");
  return out;
}

int toInt(const std::string& v) {
  int out = 0;
  const auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || p != v.data() + v.size())
    throw std::invalid_argument("expected an integer, got '" + v + "'");
  return out;
}

struct Key {
  const char* section;
  const char* name;
  std::function<std::string(const RunConfig&)> get;
  std::function<void(RunConfig&, const std::string&)> set;
};

#define NUM_KEY(sec, key, field)                                                   \
  Key {                                                                            \
    sec, key, [](const RunConfig& c) { return formatDouble(c.field); },           \
        [](RunConfig& c, const std::string& v) { c.field = toDouble(v); }         \
  }
#define INT_KEY(sec, key, field)                                                   \
  Key {                                                                            \
    sec, key, [](const RunConfig& c) { return std::to_string(c.field); },         \
        [](RunConfig& c, const std::string& v) { c.field = toInt(v); }            \
  }
#define STR_KEY(sec, key, field)                                                   \
  Key {                                                                            \
    sec, key, [](const RunConfig& c) { return c.field; },                         \
        [](RunConfig& c, const std::string& v) { c.field = v; }                   \
  }

const std::vector<Key>& keys() {
  static const std::vector<Key> table = {
      NUM_KEY("camera", "fx", camera.fx),
      NUM_KEY("camera", "fy", camera.fy),
      NUM_KEY("camera", "cx", camera.cx),
      NUM_KEY("camera", "cy", camera.cy),
      NUM_KEY("normalization", "focal", normalization.focal_norm),
      NUM_KEY("normalization", "distance", normalization.distance_norm),
      INT_KEY("normalization", "width", normalization.out_width),
      INT_KEY("normalization", "height", normalization.out_height),
      Key{"augment", "mode", [](const RunConfig& c) { return std::string(toString(c.augment.mode)); },
          [](RunConfig& c, const std::string& v) { c.augment.mode = parseSamplingMode(v); }},
      NUM_KEY("augment", "radius_deg", augment.radius_deg),
      INT_KEY("augment", "targets_per_source", augment.targets_per_source),
      INT_KEY("augment", "sources_per_subject", augment.sources_per_subject),
      INT_KEY("augment", "min_subject_samples", augment.min_subject_samples),
      NUM_KEY("augment", "center_pitch", augment.center.pitch),
      NUM_KEY("augment", "center_yaw", augment.center.yaw),
      Key{"augment", "background",
          [](const RunConfig& c) {
            return std::string(c.augment.background == BackgroundMode::SolidColor ? "solid" : "pool");
          },
          [](RunConfig& c, const std::string& v) {
            if (v == "solid")
              c.augment.background = BackgroundMode::SolidColor;
            else if (v == "pool")
              c.augment.background = BackgroundMode::ImagePool;
            else
              throw std::invalid_argument("background must be solid or pool");
          }},
      Key{"augment", "texture",
          [](const RunConfig& c) {
            return std::string(c.augment.texture == TextureSource::Image ? "image" : "mesh");
          },
          [](RunConfig& c, const std::string& v) {
            if (v == "image")
              c.augment.texture = TextureSource::Image;
            else if (v == "mesh")
              c.augment.texture = TextureSource::Mesh;
            else
              throw std::invalid_argument("texture must be image or mesh");
          }},
      INT_KEY("protocol", "targets_per_source", protocol.targets_per_source),
      NUM_KEY("protocol", "radius_deg", protocol.radius_deg),
      INT_KEY("protocol", "sources_per_subject", protocol.sources_per_subject),
      Key{"protocol", "pattern",
          [](const RunConfig& c) { return std::string(toString(c.protocol.pattern)); },
          [](RunConfig& c, const std::string& v) { c.protocol.pattern = parseRedirectPattern(v); }},
      NUM_KEY("protocol", "center_pitch", protocol.center.pitch),
      NUM_KEY("protocol", "center_yaw", protocol.center.yaw),
      NUM_KEY("protocol", "bin_width_deg", bin_width_deg),
      INT_KEY("protocol", "embedding_rows", embedding_rows),
      NUM_KEY("loss", "alpha", loss.alpha),
      NUM_KEY("loss", "lambda_id", loss.lambda_id),
      NUM_KEY("loss", "lambda_rec", loss.lambda_rec),
      STR_KEY("paths", "manifest", paths.manifest),
      STR_KEY("paths", "base_dir", paths.base_dir),
      STR_KEY("paths", "output_dir", paths.output_dir),
      STR_KEY("paths", "background_pool", paths.background_pool),
  };
  return table;
}

#undef NUM_KEY
#undef INT_KEY
#undef STR_KEY

void syncDerived(RunConfig& c) {
  c.protocol.alpha = c.loss.alpha;
  c.augment.background_pool = c.paths.background_pool;
}

}  // namespace

RunConfig parseRunConfig(const std::string& text, const std::string& source) {
  RunConfig cfg;
  std::string section;
  std::size_t pos = 0;
  std::uint64_t line_no = 0;
  while (pos <= text.size()) {
    const auto nl = text.find('\n', pos);
    std::string line = text.substr(pos, nl == std::string::npos ? std::string::npos : nl - pos);
    pos = nl == std::string::npos ? text.size() + 1 : nl + 1;
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    auto fail = [&](const std::string& what) {
      throw ParseError(source, ParseError::Unit::Line, line_no, what);
    };
    if (line.front() == '[') {
      if (line.back() != ']') fail("unterminated section header");
      section = trim(line.substr(1, line.size() - 2));
      bool known = false;
      for (const auto& k : keys()) known = known || section == k.section;
      if (!known) fail("unknown section [" + section + "]");
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos) fail("expected key = value");
    if (section.empty()) fail("key outside of a section");
    const std::string name = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    const Key* key = nullptr;
    for (const auto& k : keys())
      if (section == k.section && name == k.name) key = &k;
    if (!key) fail("unknown key '" + name + "' in [" + section + "]");
    try {
      key->set(cfg, value);
    } catch (const std::exception& e) {
      fail(name + ": " + e.what());
    }
  }
  syncDerived(cfg);
  return cfg;
}

RunConfig readRunConfig(const std::string& path) {
  RunConfig cfg = parseRunConfig(readText(path), path);
  // Relative paths in the file are relative to the file itself.
  const auto dir = std::filesystem::path(path).parent_path().string();
  for (std::string* p : {&cfg.paths.manifest, &cfg.paths.base_dir, &cfg.paths.output_dir,
                         &cfg.paths.background_pool})
    if (!p->empty()) *p = resolvePath(dir, *p);
  syncDerived(cfg);
  return cfg;
}

std::string runConfigText(const RunConfig& cfg) {
  std::string out;
  std::string section;
  for (const auto& k : keys()) {
    if (section != k.section) {
      if (!section.empty()) out += "\n";
      section = k.section;
      out += "[" + section + "]\n";
    }
    out += std::string(k.name) + " = " + k.get(cfg) + "\n";
  }
  return out;
}

void writeRunConfig(const std::string& path, const RunConfig& cfg) { writeText(path, runConfigText(cfg)); }

}  // namespace gazeaug
