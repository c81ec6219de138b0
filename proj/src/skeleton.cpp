#include "wirefit/skeleton.hpp"

#include <cmath>
#include <cstring>
#include <fstream>
#include <iostream>
#include <set>
#include <sstream>

#include <nlohmann/json.hpp>

namespace wirefit {

void SkeletonSpec::validate() const {
  const int n = keypoint_count();
  if (n < 4) {
    throw DimensionError("skeleton needs at least 4 keypoints, got " + std::to_string(n));
  }
  std::set<std::pair<int, int>> seen;
  for (const auto& [i, j] : edges) {
    if (i < 0 || j < 0 || i >= n || j >= n) {
      throw ParseError("edges: index out of range in (" + std::to_string(i) + ", " +
                       std::to_string(j) + ") for " + std::to_string(n) + " keypoints");
    }
    if (i >= j) {
      throw ParseError("edges: expected i < j, got (" + std::to_string(i) + ", " +
                       std::to_string(j) + ")");
    }
    if (!seen.insert({i, j}).second) {
      throw ParseError("edges: duplicate edge (" + std::to_string(i) + ", " +
                       std::to_string(j) + ")");
    }
  }
  // Connectivity over the undirected edge graph.
  std::vector<char> reached(n, 0);
  std::vector<int> stack{0};
  reached[0] = 1;
  while (!stack.empty()) {
    const int v = stack.back();
    stack.pop_back();
    for (const auto& [i, j] : edges) {
      const int other = (i == v) ? j : (j == v) ? i : -1;
      if (other >= 0 && !reached[other]) {
        reached[other] = 1;
        stack.push_back(other);
      }
    }
  }
  for (int v = 0; v < n; ++v) {
    if (!reached[v]) {
      throw ParseError("edges: keypoint " + std::to_string(v) + " (" + keypoint_names[v] +
                       ") is disconnected from the edge graph");
    }
  }
}

void BaseShapeSet::validate() const {
  spec.validate();
  const int n = num_keypoints();
  if (bases.empty()) {
    throw DimensionError("bases: need at least one base shape");
  }
  for (int k = 0; k < num_bases(); ++k) {
    if (bases[k].cols() != n) {
      throw DimensionError("bases[" + std::to_string(k) + "]: expected 3x" +
                           std::to_string(n) + ", got 3x" + std::to_string(bases[k].cols()));
    }
    if (!bases[k].allFinite()) {
      throw ParseError("bases[" + std::to_string(k) + "]: non-finite coordinate");
    }
  }
  if (diagonal_length(Shape3D{bases[0]}) <= 0.0) {
    throw ParseError("bases[0]: mean shape has zero diagonal length");
  }
}

namespace {

void hash_bytes(std::uint64_t& h, const void* data, std::size_t len) {
  const auto* p = static_cast<const unsigned char*>(data);
  for (std::size_t i = 0; i < len; ++i) {
    h ^= p[i];
    h *= 1099511628211ull;
  }
}

void hash_u32(std::uint64_t& h, std::uint32_t v) { hash_bytes(h, &v, sizeof v); }

void hash_string(std::uint64_t& h, const std::string& s) {
  hash_u32(h, static_cast<std::uint32_t>(s.size()));
  hash_bytes(h, s.data(), s.size());
}

}  // namespace

std::uint64_t BaseShapeSet::hash() const {
  std::uint64_t h = 14695981039346656037ull;
  hash_string(h, spec.category);
  hash_u32(h, static_cast<std::uint32_t>(spec.keypoint_names.size()));
  for (const auto& name : spec.keypoint_names) hash_string(h, name);
  hash_u32(h, static_cast<std::uint32_t>(spec.edges.size()));
  for (const auto& [i, j] : spec.edges) {
    hash_u32(h, static_cast<std::uint32_t>(i));
    hash_u32(h, static_cast<std::uint32_t>(j));
  }
  hash_u32(h, static_cast<std::uint32_t>(num_bases()));
  for (const auto& b : bases) {
    for (int c = 0; c < b.cols(); ++c) {
      for (int r = 0; r < 3; ++r) {
        const double v = b(r, c);
        hash_bytes(h, &v, sizeof v);
      }
    }
  }
  return h;
}

Shape3D compose_skeleton(const StructuralParams& alpha, const BaseShapeSet& bases) {
  if (alpha.alpha.size() != bases.num_bases()) {
    throw DimensionError("alpha has " + std::to_string(alpha.alpha.size()) +
                         " weights for " + std::to_string(bases.num_bases()) + " bases");
  }
  Eigen::Matrix3Xd coords = Eigen::Matrix3Xd::Zero(3, bases.num_keypoints());
  for (int k = 0; k < bases.num_bases(); ++k) {
    coords += alpha.alpha[k] * bases.bases[k];
  }
  return Shape3D{std::move(coords)};
}

double diagonal_length(const Shape3D& shape) {
  const int n = static_cast<int>(shape.coords.cols());
  if (n < 2) {
    throw DimensionError("diagonal_length needs at least 2 keypoints, got " +
                         std::to_string(n));
  }
  double best_sq = 0.0;
  for (int i = 0; i < n; ++i) {
    for (int j = i + 1; j < n; ++j) {
      best_sq = std::max(best_sq, (shape.coords.col(i) - shape.coords.col(j)).squaredNorm());
    }
  }
  return std::sqrt(best_sq);
}

namespace {

using nlohmann::json;

double require_finite(const json& v, const std::string& path) {
  if (!v.is_number()) throw ParseError(path + ": expected a number");
  const double d = v.get<double>();
  if (!std::isfinite(d)) throw ParseError(path + ": non-finite value");
  return d;
}

}  // namespace

BaseShapeSet parse_base_shapes(const std::string& json_text) {
  json doc;
  try {
    doc = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw ParseError(std::string("model file: ") + e.what());
  }
  if (!doc.is_object()) throw ParseError("model file: top level must be an object");

  static const std::set<std::string> known{"category", "keypoints", "edges", "bases"};
  std::string unknown;
  for (const auto& [key, _] : doc.items()) {
    if (!known.count(key)) unknown += (unknown.empty() ? "" : ", ") + key;
  }
  if (!unknown.empty()) {
    std::cerr << "warning: ignoring unknown model fields: " << unknown << "\n";
  }
  for (const auto& field : known) {
    if (!doc.contains(field)) throw ParseError("model file: missing field '" + field + "'");
  }

  BaseShapeSet out;
  out.spec.category = doc["category"].get<std::string>();
  for (const auto& name : doc["keypoints"]) {
    out.spec.keypoint_names.push_back(name.get<std::string>());
  }
  const int n = out.spec.keypoint_count();
  int ei = 0;
  for (const auto& e : doc["edges"]) {
    if (!e.is_array() || e.size() != 2) {
      throw ParseError("edges[" + std::to_string(ei) + "]: expected [i, j]");
    }
    out.spec.edges.emplace_back(e[0].get<int>(), e[1].get<int>());
    ++ei;
  }
  int k = 0;
  for (const auto& basis : doc["bases"]) {
    const std::string bpath = "bases[" + std::to_string(k) + "]";
    if (!basis.is_array() || static_cast<int>(basis.size()) != n) {
      throw DimensionError(bpath + ": expected " + std::to_string(n) + " keypoints, got " +
                           std::to_string(basis.size()));
    }
    Eigen::Matrix3Xd m(3, n);
    for (int i = 0; i < n; ++i) {
      const auto& kp = basis[i];
      const std::string kpath = bpath + "[" + std::to_string(i) + "]";
      if (!kp.is_array() || kp.size() != 3) throw ParseError(kpath + ": expected [x, y, z]");
      for (int r = 0; r < 3; ++r) {
        m(r, i) = require_finite(kp[r], kpath + "[" + std::to_string(r) + "]");
      }
    }
    out.bases.push_back(std::move(m));
    ++k;
  }
  out.validate();
  return out;
}

BaseShapeSet load_base_shapes(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError("cannot open model file: " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_base_shapes(buf.str());
}

}  // namespace wirefit
