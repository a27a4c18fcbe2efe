#include "gazeaug/io.hpp"

#include <png.h>

#include <bit>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <sstream>

#include "json.hpp"

namespace gazeaug {

using json = nlohmann::json;

std::string formatDouble(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

// ---------------------------------------------------------------- files

std::vector<std::uint8_t> readBytes(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::Io, "cannot open '" + path + "' for reading");
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void writeBytes(const std::string& path, const std::vector<std::uint8_t>& bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::Io, "cannot open '" + path + "' for writing");
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw Error(ErrorCode::Io, "write to '" + path + "' failed");
}

std::string readText(const std::string& path) {
  const auto b = readBytes(path);
  return {b.begin(), b.end()};
}

void writeText(const std::string& path, const std::string& text) {
  writeBytes(path, {text.begin(), text.end()});
}

// ------------------------------------------------------------ manifests

std::string manifestLine(const ManifestEntry& e) {
  std::string s = "{\"subject\":" + json(e.subject).dump();
  s += ",\"image\":" + json(e.image).dump();
  s += ",\"mesh\":" + json(e.mesh).dump();
  s += ",\"head_pitch\":" + formatDouble(e.head.pitch);
  s += ",\"head_yaw\":" + formatDouble(e.head.yaw);
  s += ",\"gaze_pitch\":" + formatDouble(e.gaze.pitch);
  s += ",\"gaze_yaw\":" + formatDouble(e.gaze.yaw);
  s += ",\"camera\":" + json(e.camera).dump();
  s += "}";
  return s;
}

ManifestEntry parseManifestLine(const std::string& line, const std::string& source,
                                std::uint64_t line_number) {
  auto fail = [&](const std::string& what) {
    return ParseError(source, ParseError::Unit::Line, line_number, what);
  };
  json j;
  try {
    j = json::parse(line);
  } catch (const json::parse_error& e) {
    throw fail(std::string("invalid JSON: ") + e.what());
  }
  if (!j.is_object()) throw fail("manifest row is not an object");
  auto str = [&](const char* key) {
    const auto it = j.find(key);
    if (it == j.end() || !it->is_string()) throw fail(std::string("missing string key '") + key + "'");
    return it->get<std::string>();
  };
  auto num = [&](const char* key) {
    const auto it = j.find(key);
    if (it == j.end() || !it->is_number()) throw fail(std::string("missing numeric key '") + key + "'");
    return it->get<double>();
  };
  ManifestEntry e;
  e.subject = str("subject");
  e.image = str("image");
  e.mesh = str("mesh");
  e.head = {num("head_pitch"), num("head_yaw")};
  e.gaze = {num("gaze_pitch"), num("gaze_yaw")};
  e.camera = str("camera");
  if (e.image.empty() || e.mesh.empty()) throw fail("image and mesh paths must be nonempty");
  if (!isValid(e.head) || !isValid(e.gaze)) throw fail("direction outside the valid range");
  return e;
}

std::vector<ManifestEntry> readManifest(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::Io, "cannot open manifest '" + path + "'");
  std::vector<ManifestEntry> rows;
  std::string line;
  std::uint64_t n = 0;
  while (std::getline(in, line)) {
    ++n;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    rows.push_back(parseManifestLine(line, path, n));
  }
  return rows;
}

void writeManifest(const std::string& path, const std::vector<ManifestEntry>& rows) {
  std::string text;
  for (const auto& r : rows) text += manifestLine(r) + "\n";
  writeText(path, text);
}

// ----------------------------------------------------------------- mesh

namespace {

template <typename T>
bool parseNumber(const std::string& tok, T& out) {
  const char* b = tok.data();
  const char* e = b + tok.size();
  auto [ptr, ec] = std::from_chars(b, e, out);
  return ec == std::errc() && ptr == e;
}

}  // namespace

FaceMesh parseMesh(const std::string& text, const std::string& source) {
  std::vector<std::array<double, 6>> verts;
  std::vector<std::pair<std::array<int, 3>, std::uint64_t>> faces;
  std::vector<std::pair<int, std::uint64_t>> landmarks;
  std::optional<Vector3d> center;

  std::istringstream in(text);
  std::string line;
  std::uint64_t n = 0;
  while (std::getline(in, line)) {
    ++n;
    auto fail = [&](const std::string& what) {
      return ParseError(source, ParseError::Unit::Line, n, what);
    };
    std::istringstream ls(line);
    std::vector<std::string> tok;
    for (std::string t; ls >> t;) tok.push_back(t);
    if (tok.empty() || tok[0][0] == '#') continue;
    const std::string& kind = tok[0];
    auto doubles = [&](std::size_t count) {
      if (tok.size() != count + 1)
        throw fail("'" + kind + "' expects " + std::to_string(count) + " values, got " +
                   std::to_string(tok.size() - 1));
      std::vector<double> v(count);
      for (std::size_t i = 0; i < count; ++i)
        if (!parseNumber(tok[i + 1], v[i]) || !std::isfinite(v[i]))
          throw fail("bad number '" + tok[i + 1] + "'");
      return v;
    };
    auto ints = [&](std::size_t count) {
      if (tok.size() != count + 1)
        throw fail("'" + kind + "' expects " + std::to_string(count) + " indices, got " +
                   std::to_string(tok.size() - 1));
      std::vector<int> v(count);
      for (std::size_t i = 0; i < count; ++i)
        if (!parseNumber(tok[i + 1], v[i]) || v[i] < 1) throw fail("bad index '" + tok[i + 1] + "'");
      return v;
    };
    if (kind == "v") {
      const auto v = doubles(6);
      verts.push_back({v[0], v[1], v[2], v[3], v[4], v[5]});
    } else if (kind == "f") {
      const auto v = ints(3);
      faces.push_back({{v[0] - 1, v[1] - 1, v[2] - 1}, n});
    } else if (kind == "l") {
      landmarks.push_back({ints(1)[0] - 1, n});
    } else if (kind == "c") {
      if (center) throw fail("duplicate face center");
      const auto v = doubles(3);
      center = Vector3d(v[0], v[1], v[2]);
    } else {
      throw fail("unknown record type '" + kind + "'");
    }
  }

  const int nv = static_cast<int>(verts.size());
  if (nv < 3) throw ParseError(source, ParseError::Unit::Line, n, "mesh needs at least 3 vertices");
  FaceMesh m;
  m.vertices.resize(nv, 3);
  m.colors.resize(nv, 3);
  for (int i = 0; i < nv; ++i) {
    m.vertices.row(i) << verts[i][0], verts[i][1], verts[i][2];
    m.colors.row(i) << verts[i][3], verts[i][4], verts[i][5];
  }
  m.triangles.resize(static_cast<Eigen::Index>(faces.size()), 3);
  for (std::size_t i = 0; i < faces.size(); ++i) {
    for (int k = 0; k < 3; ++k) {
      if (faces[i].first[k] >= nv)
        throw ParseError(source, ParseError::Unit::Line, faces[i].second,
                         "vertex index " + std::to_string(faces[i].first[k] + 1) + " out of range");
      m.triangles(static_cast<Eigen::Index>(i), k) = faces[i].first[k];
    }
  }
  for (const auto& [idx, line_no] : landmarks) {
    if (idx >= nv)
      throw ParseError(source, ParseError::Unit::Line, line_no,
                       "landmark index " + std::to_string(idx + 1) + " out of range");
    m.landmarks.push_back(idx);
  }
  m.face_center = center ? *center : m.landmarkCentroid();
  return m;
}

FaceMesh readMesh(const std::string& path) { return parseMesh(readText(path), path); }

std::string meshText(const FaceMesh& mesh) {
  std::string s;
  for (Eigen::Index i = 0; i < mesh.vertices.rows(); ++i) {
    s += "v";
    for (int k = 0; k < 3; ++k) s += " " + formatDouble(mesh.vertices(i, k));
    for (int k = 0; k < 3; ++k) s += " " + formatDouble(mesh.colors(i, k));
    s += "\n";
  }
  for (Eigen::Index i = 0; i < mesh.triangles.rows(); ++i)
    s += "f " + std::to_string(mesh.triangles(i, 0) + 1) + " " +
         std::to_string(mesh.triangles(i, 1) + 1) + " " + std::to_string(mesh.triangles(i, 2) + 1) +
         "\n";
  for (int l : mesh.landmarks) s += "l " + std::to_string(l + 1) + "\n";
  s += "c " + formatDouble(mesh.face_center.x()) + " " + formatDouble(mesh.face_center.y()) + " " +
       formatDouble(mesh.face_center.z()) + "\n";
  return s;
}

void writeMesh(const std::string& path, const FaceMesh& mesh) { writeText(path, meshText(mesh)); }

// ------------------------------------------------------------------ png

ImageBuffer readPng(const std::string& path) {
  png_image img;
  std::memset(&img, 0, sizeof img);
  img.version = PNG_IMAGE_VERSION;
  if (!png_image_begin_read_from_file(&img, path.c_str()))
    throw Error(ErrorCode::Io, "cannot read PNG '" + path + "': " + img.message);
  img.format = PNG_FORMAT_RGB;
  std::vector<std::uint8_t> buf(PNG_IMAGE_SIZE(img));
  if (!png_image_finish_read(&img, nullptr, buf.data(), 0, nullptr)) {
    const std::string msg = img.message;
    png_image_free(&img);
    throw Error(ErrorCode::Io, "cannot decode PNG '" + path + "': " + msg);
  }
  return ImageBuffer::fromQuantized(static_cast<int>(img.width), static_cast<int>(img.height), buf);
}

std::vector<std::uint8_t> encodePng(const ImageBuffer& image) {
  png_image img;
  std::memset(&img, 0, sizeof img);
  img.version = PNG_IMAGE_VERSION;
  img.width = static_cast<png_uint_32>(image.width());
  img.height = static_cast<png_uint_32>(image.height());
  img.format = PNG_FORMAT_RGB;
  const auto pixels = image.quantized();
  png_alloc_size_t size = 0;
  if (!png_image_write_get_memory_size(img, size, 0, pixels.data(), 0, nullptr))
    throw Error(ErrorCode::Io, std::string("PNG encode failed: ") + img.message);
  std::vector<std::uint8_t> out(size);
  if (!png_image_write_to_memory(&img, out.data(), &size, 0, pixels.data(), 0, nullptr))
    throw Error(ErrorCode::Io, std::string("PNG encode failed: ") + img.message);
  out.resize(size);
  return out;
}

void writePng(const std::string& path, const ImageBuffer& image) {
  writeBytes(path, encodePng(image));
}

// ------------------------------------------------------------- features

namespace {

void putU32(std::vector<std::uint8_t>& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

std::uint32_t getU32(const std::vector<std::uint8_t>& b, std::size_t at) {
  std::uint32_t v = 0;
  for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(b[at + i]) << (8 * i);
  return v;
}

}  // namespace

std::vector<std::uint8_t> encodeFeatureFile(const FeatureFile& f) {
  const auto count = f.features.count();
  const auto dim = f.features.dim();
  std::vector<std::uint8_t> out{'G', 'Z', 'F', 'T'};
  out.reserve(16 + static_cast<std::size_t>(count * dim) * 4);
  putU32(out, kFeatureVersion);
  putU32(out, static_cast<std::uint32_t>(count));
  putU32(out, static_cast<std::uint32_t>(dim));
  for (Eigen::Index r = 0; r < count; ++r)
    for (Eigen::Index c = 0; c < dim; ++c) {
      const auto v = static_cast<float>(f.features.rows(r, c));
      if (!std::isfinite(v))
        throw Error(ErrorCode::NonFinite, "feature (" + std::to_string(r) + ", " +
                                              std::to_string(c) + ") is not finite as f32");
      putU32(out, std::bit_cast<std::uint32_t>(v));
    }
  if (f.header_json) {
    putU32(out, static_cast<std::uint32_t>(f.header_json->size()));
    out.insert(out.end(), f.header_json->begin(), f.header_json->end());
  }
  return out;
}

FeatureFile decodeFeatureFile(const std::vector<std::uint8_t>& b, const std::string& source) {
  using U = ParseError::Unit;
  if (b.size() < 16)
    throw ParseError(source, U::Byte, b.size(),
                     "header needs 16 bytes, file has " + std::to_string(b.size()));
  if (std::memcmp(b.data(), "GZFT", 4) != 0) throw ParseError(source, U::Byte, 0, "bad magic");
  const std::uint32_t version = getU32(b, 4);
  if (version != kFeatureVersion)
    throw Error(ErrorCode::VersionMismatch, source + "@byte 4: version " + std::to_string(version) +
                                                ", expected " + std::to_string(kFeatureVersion));
  const std::uint64_t count = getU32(b, 8);
  const std::uint64_t dim = getU32(b, 12);
  const std::uint64_t payload = count * dim * 4;
  if (b.size() - 16 < payload)
    throw ParseError(source, U::Byte, b.size(),
                     "truncated payload: expected " + std::to_string(payload) + " bytes, got " +
                         std::to_string(b.size() - 16));
  FeatureFile f;
  f.features.rows.resize(static_cast<Eigen::Index>(count), static_cast<Eigen::Index>(dim));
  std::size_t at = 16;
  for (std::uint64_t r = 0; r < count; ++r)
    for (std::uint64_t c = 0; c < dim; ++c, at += 4) {
      const float v = std::bit_cast<float>(getU32(b, at));
      if (!std::isfinite(v)) throw ParseError(source, U::Byte, at, "non-finite feature value");
      f.features.rows(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = v;
    }
  if (at == b.size()) return f;
  if (b.size() - at < 4)
    throw ParseError(source, U::Byte, at, "trailing bytes too short for a header length");
  const std::uint64_t len = getU32(b, at);
  at += 4;
  if (b.size() - at != len)
    throw ParseError(source, U::Byte, at,
                     "header length " + std::to_string(len) + " but " +
                         std::to_string(b.size() - at) + " bytes follow");
  f.header_json = std::string(b.begin() + static_cast<std::ptrdiff_t>(at), b.end());
  return f;
}

FeatureFile readFeatureFile(const std::string& path) { return decodeFeatureFile(readBytes(path), path); }

void writeFeatureFile(const std::string& path, const FeatureFile& f) {
  writeBytes(path, encodeFeatureFile(f));
}

// --------------------------------------------------------------- latents

FeatureFile encodeLatent(const LatentState& state) {
  json header;
  header["kind"] = "latent";
  header["id_dim"] = state.id_code.size();
  Eigen::Index rows = 0;
  json factors = json::array();
  for (const auto& [name, f] : state.factors) {
    factors.push_back({{"name", name},
                       {"rows", f.embedding.rows()},
                       {"pitch", f.condition.pitch},
                       {"yaw", f.condition.yaw}});
    rows += f.embedding.rows();
  }
  header["factors"] = factors;
  const Eigen::Index id_rows = (state.id_code.size() + 2) / 3;

  FeatureFile file;
  file.features.rows = Eigen::MatrixXd::Zero(rows + id_rows, 3);
  Eigen::Index at = 0;
  for (const auto& [name, f] : state.factors) {
    file.features.rows.middleRows(at, f.embedding.rows()) = f.embedding;
    at += f.embedding.rows();
  }
  for (Eigen::Index i = 0; i < state.id_code.size(); ++i)
    file.features.rows(at + i / 3, i % 3) = state.id_code(i);
  file.header_json = header.dump();
  return file;
}

LatentState decodeLatent(const FeatureFile& f) {
  if (!f.header_json) throw Error(ErrorCode::Parse, "feature file has no latent header");
  if (f.features.dim() != 3) throw Error(ErrorCode::Parse, "latent dumps have dim 3");
  json header;
  try {
    header = json::parse(*f.header_json);
    LatentState s;
    Eigen::Index at = 0;
    for (const auto& fj : header.at("factors")) {
      const Eigen::Index n = fj.at("rows").get<Eigen::Index>();
      if (n < 0 || at + n > f.features.count())
        throw Error(ErrorCode::Parse, "latent header row counts exceed payload");
      Factor factor;
      factor.embedding = f.features.rows.middleRows(at, n);
      factor.condition = {fj.at("pitch").get<double>(), fj.at("yaw").get<double>()};
      s.factors[fj.at("name").get<std::string>()] = std::move(factor);
      at += n;
    }
    const Eigen::Index id_dim = header.at("id_dim").get<Eigen::Index>();
    if (at + (id_dim + 2) / 3 != f.features.count())
      throw Error(ErrorCode::Parse, "latent payload row count does not match header");
    s.id_code.resize(id_dim);
    for (Eigen::Index i = 0; i < id_dim; ++i) s.id_code(i) = f.features.rows(at + i / 3, i % 3);
    return s;
  } catch (const json::exception& e) {
    throw Error(ErrorCode::Parse, std::string("latent header: ") + e.what());
  }
}

// ------------------------------------------------------------ homography

std::vector<std::uint8_t> encodeHomography(const Eigen::Matrix3d& h) {
  std::vector<std::uint8_t> out;
  out.reserve(72);
  for (int r = 0; r < 3; ++r)
    for (int c = 0; c < 3; ++c) {
      const auto bits = std::bit_cast<std::uint64_t>(h(r, c));
      for (int i = 0; i < 8; ++i) out.push_back(static_cast<std::uint8_t>(bits >> (8 * i)));
    }
  return out;
}

Eigen::Matrix3d decodeHomography(const std::vector<std::uint8_t>& bytes) {
  if (bytes.size() != 72)
    throw Error(ErrorCode::Parse, "homography needs 72 bytes, got " + std::to_string(bytes.size()));
  Eigen::Matrix3d h;
  for (int k = 0; k < 9; ++k) {
    std::uint64_t bits = 0;
    for (int i = 0; i < 8; ++i) bits |= static_cast<std::uint64_t>(bytes[8 * k + i]) << (8 * i);
    h(k / 3, k % 3) = std::bit_cast<double>(bits);
  }
  return h;
}

}  // namespace gazeaug
