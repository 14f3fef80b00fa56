#pragma once

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "bvpc/core/voxel_cloud.hpp"

namespace bvpc {

struct PlyError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Parsed vertex data of a PLY file (ascii or binary little-endian).
struct PlyDocument {
  size_t vertex_count = 0;
  std::vector<Vec3d> positions;
  std::vector<double> colors;   // empty or 3 per vertex, 0..255 scale
  std::vector<Vec3d> normals;   // empty or 1 per vertex
  bool binary = false;

  bool has_colors() const { return !colors.empty(); }
  bool has_normals() const { return !normals.empty(); }
};

namespace ply_detail {

enum class ScalarType { i8, u8, i16, u16, i32, u32, f32, f64 };

inline ScalarType parse_type(const std::string& t) {
  if (t == "char" || t == "int8") return ScalarType::i8;
  if (t == "uchar" || t == "uint8") return ScalarType::u8;
  if (t == "short" || t == "int16") return ScalarType::i16;
  if (t == "ushort" || t == "uint16") return ScalarType::u16;
  if (t == "int" || t == "int32") return ScalarType::i32;
  if (t == "uint" || t == "uint32") return ScalarType::u32;
  if (t == "float" || t == "float32") return ScalarType::f32;
  if (t == "double" || t == "float64") return ScalarType::f64;
  throw PlyError("ply: unsupported property type '" + t + "'");
}

inline size_t type_size(ScalarType t) {
  switch (t) {
    case ScalarType::i8:
    case ScalarType::u8:
      return 1;
    case ScalarType::i16:
    case ScalarType::u16:
      return 2;
    case ScalarType::i32:
    case ScalarType::u32:
    case ScalarType::f32:
      return 4;
    case ScalarType::f64:
      return 8;
  }
  return 0;
}

inline double read_binary_scalar(const uint8_t* p, ScalarType t) {
  switch (t) {
    case ScalarType::i8:
      return static_cast<double>(*reinterpret_cast<const int8_t*>(p));
    case ScalarType::u8:
      return static_cast<double>(*p);
    case ScalarType::i16: {
      int16_t v;
      std::memcpy(&v, p, 2);
      return v;
    }
    case ScalarType::u16: {
      uint16_t v;
      std::memcpy(&v, p, 2);
      return v;
    }
    case ScalarType::i32: {
      int32_t v;
      std::memcpy(&v, p, 4);
      return v;
    }
    case ScalarType::u32: {
      uint32_t v;
      std::memcpy(&v, p, 4);
      return v;
    }
    case ScalarType::f32: {
      float v;
      std::memcpy(&v, p, 4);
      return v;
    }
    case ScalarType::f64: {
      double v;
      std::memcpy(&v, p, 8);
      return v;
    }
  }
  return 0.0;
}

struct Property {
  std::string name;
  ScalarType type;
};

struct Element {
  std::string name;
  size_t count = 0;
  std::vector<Property> properties;
  bool has_list = false;
};

}  // namespace ply_detail

inline PlyDocument read_ply(const std::string& path) {
  using namespace ply_detail;
  std::ifstream in(path, std::ios::binary);
  if (!in) throw PlyError("ply: cannot open " + path);
  std::string line;
  if (!std::getline(in, line)) throw PlyError("ply: empty file");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != "ply") throw PlyError("ply: malformed header (missing magic)");

  bool binary = false;
  bool format_seen = false;
  std::vector<Element> elements;
  for (;;) {
    if (!std::getline(in, line)) throw PlyError("ply: malformed header (no end_header)");
    if (!line.empty() && line.back() == '\r') line.pop_back();
    std::istringstream ls(line);
    std::string tok;
    ls >> tok;
    if (tok == "comment" || tok == "obj_info" || tok.empty()) continue;
    if (tok == "format") {
      std::string fmt, ver;
      ls >> fmt >> ver;
      if (fmt == "ascii")
        binary = false;
      else if (fmt == "binary_little_endian")
        binary = true;
      else
        throw PlyError("ply: unsupported format '" + fmt + "'");
      format_seen = true;
    } else if (tok == "element") {
      Element e;
      ls >> e.name >> e.count;
      elements.push_back(e);
    } else if (tok == "property") {
      if (elements.empty()) throw PlyError("ply: property before element");
      std::string t;
      ls >> t;
      if (t == "list") {
        elements.back().has_list = true;
        continue;
      }
      Property p;
      p.type = parse_type(t);
      ls >> p.name;
      elements.back().properties.push_back(p);
    } else if (tok == "end_header") {
      break;
    } else {
      throw PlyError("ply: malformed header line '" + line + "'");
    }
  }
  if (!format_seen) throw PlyError("ply: malformed header (missing format)");

  PlyDocument doc;
  doc.binary = binary;
  for (const auto& elem : elements) {
    if (elem.name != "vertex") {
      // elements after the vertex data are irrelevant; before it, they must
      // be skippable
      if (!doc.positions.empty()) break;
      if (elem.has_list) throw PlyError("ply: unsupported list property before vertex data");
      if (binary) {
        size_t record = 0;
        for (const auto& p : elem.properties) record += type_size(p.type);
        in.seekg(static_cast<std::streamoff>(record * elem.count), std::ios::cur);
      } else {
        for (size_t i = 0; i < elem.count; ++i)
          if (!std::getline(in, line)) throw PlyError("ply: truncated payload");
      }
      continue;
    }
    if (elem.has_list) throw PlyError("ply: unsupported list property on vertex");
    int ix = -1, iy = -1, iz = -1, ir = -1, ig = -1, ib = -1, inx = -1, iny = -1, inz = -1;
    for (size_t p = 0; p < elem.properties.size(); ++p) {
      const std::string& n = elem.properties[p].name;
      if (n == "x") ix = static_cast<int>(p);
      if (n == "y") iy = static_cast<int>(p);
      if (n == "z") iz = static_cast<int>(p);
      if (n == "red" || n == "r" || n == "diffuse_red") ir = static_cast<int>(p);
      if (n == "green" || n == "g" || n == "diffuse_green") ig = static_cast<int>(p);
      if (n == "blue" || n == "b" || n == "diffuse_blue") ib = static_cast<int>(p);
      if (n == "nx") inx = static_cast<int>(p);
      if (n == "ny") iny = static_cast<int>(p);
      if (n == "nz") inz = static_cast<int>(p);
    }
    if (ix < 0 || iy < 0 || iz < 0) throw PlyError("ply: vertex element lacks x/y/z");
    const bool with_color = ir >= 0 && ig >= 0 && ib >= 0;
    const bool with_normal = inx >= 0 && iny >= 0 && inz >= 0;
    doc.vertex_count = elem.count;
    doc.positions.reserve(elem.count);
    std::vector<double> row(elem.properties.size());
    size_t record = 0;
    for (const auto& p : elem.properties) record += type_size(p.type);
    std::vector<uint8_t> buf(record);
    for (size_t v = 0; v < elem.count; ++v) {
      if (binary) {
        in.read(reinterpret_cast<char*>(buf.data()), static_cast<std::streamsize>(record));
        if (!in) throw PlyError("ply: truncated payload");
        size_t off = 0;
        for (size_t p = 0; p < elem.properties.size(); ++p) {
          row[p] = read_binary_scalar(buf.data() + off, elem.properties[p].type);
          off += type_size(elem.properties[p].type);
        }
      } else {
        for (size_t p = 0; p < elem.properties.size(); ++p)
          if (!(in >> row[p])) throw PlyError("ply: truncated payload");
      }
      doc.positions.push_back({row[ix], row[iy], row[iz]});
      if (with_color) {
        doc.colors.push_back(row[ir]);
        doc.colors.push_back(row[ig]);
        doc.colors.push_back(row[ib]);
      }
      if (with_normal) doc.normals.push_back({row[inx], row[iny], row[inz]});
    }
  }
  if (doc.positions.empty()) throw PlyError("ply: no vertex element");
  return doc;
}

// Document -> voxel cloud. Integer positions already inside the grid pass
// through unchanged; anything else is scaled into the grid from its fitted
// bounding cube.
inline VoxelCloud to_voxel_cloud(const PlyDocument& doc, int depth) {
  std::vector<Vec3d> unit_normals;
  if (doc.has_normals()) {
    unit_normals = doc.normals;
    for (auto& n : unit_normals) {
      const double len = std::sqrt(n[0] * n[0] + n[1] * n[1] + n[2] * n[2]);
      if (len < 1e-12) {
        n = {0.0, 0.0, 1.0};
      } else if (std::abs(len - 1.0) > 1e-7) {
        // rescale only when clearly non-unit so float-precision unit
        // normals survive a read/write cycle byte for byte
        for (int a = 0; a < 3; ++a) n[a] /= len;
      }
    }
  }
  const double side = static_cast<double>(1u << depth);
  bool integral = true;
  for (const auto& p : doc.positions) {
    for (int a = 0; a < 3; ++a)
      if (p[a] != std::floor(p[a]) || p[a] < 0.0 || p[a] >= side) {
        integral = false;
        break;
      }
    if (!integral) break;
  }
  if (integral) {
    std::vector<Vec3u> pos(doc.positions.size());
    for (size_t i = 0; i < pos.size(); ++i)
      pos[i] = {static_cast<uint32_t>(doc.positions[i][0]),
                static_cast<uint32_t>(doc.positions[i][1]),
                static_cast<uint32_t>(doc.positions[i][2])};
    return make_cloud(depth, std::move(pos), doc.colors, doc.has_colors() ? 3 : 0,
                      std::move(unit_normals));
  }
  return voxelize(doc.positions, doc.colors, doc.has_colors() ? 3 : 0, unit_normals, depth,
                  BoundingCube::fit(doc.positions));
}

inline VoxelCloud read_ply_cloud(const std::string& path, int depth) {
  return to_voxel_cloud(read_ply(path), depth);
}

inline void write_ply(const VoxelCloud& cloud, const std::string& path, bool binary = true) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw PlyError("ply: cannot write " + path);
  const bool with_color = cloud.attr_dim == 3;
  out << "ply\n";
  out << (binary ? "format binary_little_endian 1.0\n" : "format ascii 1.0\n");
  out << "element vertex " << cloud.size() << "\n";
  out << "property float x\nproperty float y\nproperty float z\n";
  if (cloud.has_normals()) out << "property float nx\nproperty float ny\nproperty float nz\n";
  if (with_color) out << "property uchar red\nproperty uchar green\nproperty uchar blue\n";
  out << "end_header\n";
  auto to_u8 = [](double v) {
    return static_cast<uint8_t>(std::clamp(std::lround(v), 0l, 255l));
  };
  for (size_t i = 0; i < cloud.size(); ++i) {
    const float p[3] = {static_cast<float>(cloud.positions[i][0]),
                        static_cast<float>(cloud.positions[i][1]),
                        static_cast<float>(cloud.positions[i][2])};
    if (binary) {
      out.write(reinterpret_cast<const char*>(p), 12);
      if (cloud.has_normals()) {
        const float n[3] = {static_cast<float>(cloud.normals[i][0]),
                            static_cast<float>(cloud.normals[i][1]),
                            static_cast<float>(cloud.normals[i][2])};
        out.write(reinterpret_cast<const char*>(n), 12);
      }
      if (with_color) {
        const uint8_t c[3] = {to_u8(cloud.attr(i)[0]), to_u8(cloud.attr(i)[1]),
                              to_u8(cloud.attr(i)[2])};
        out.write(reinterpret_cast<const char*>(c), 3);
      }
    } else {
      out << p[0] << " " << p[1] << " " << p[2];
      if (cloud.has_normals())
        out << " " << static_cast<float>(cloud.normals[i][0]) << " "
            << static_cast<float>(cloud.normals[i][1]) << " "
            << static_cast<float>(cloud.normals[i][2]);
      if (with_color)
        out << " " << static_cast<int>(to_u8(cloud.attr(i)[0])) << " "
            << static_cast<int>(to_u8(cloud.attr(i)[1])) << " "
            << static_cast<int>(to_u8(cloud.attr(i)[2]));
      out << "\n";
    }
  }
  if (!out) throw PlyError("ply: write failed for " + path);
}

}  // namespace bvpc
