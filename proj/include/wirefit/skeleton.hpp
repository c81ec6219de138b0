#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "wirefit/errors.hpp"

namespace wirefit {

// Category-level skeleton topology: named keypoints plus edge connectivity.
struct SkeletonSpec {
  std::string category;
  std::vector<std::string> keypoint_names;
  std::vector<std::pair<int, int>> edges;  // 0-based, i < j

  int keypoint_count() const { return static_cast<int>(keypoint_names.size()); }

  // Throws DimensionError/ParseError on bad indices, duplicate edges, N < 4,
  // or a disconnected edge graph.
  void validate() const;
};

// K base shapes, each 3xN; bases[0] is the category mean shape.
struct BaseShapeSet {
  SkeletonSpec spec;
  std::vector<Eigen::Matrix3Xd> bases;

  int num_bases() const { return static_cast<int>(bases.size()); }
  int num_keypoints() const { return spec.keypoint_count(); }

  void validate() const;

  // FNV-1a over a canonical serialization of topology and base coordinates.
  // Stamped into dataset and weights files for compatibility checks.
  std::uint64_t hash() const;
};

// Weights combining base shapes; alpha[0] is pinned to 1 (mean shape).
struct StructuralParams {
  Eigen::VectorXd alpha;
};

struct Shape3D {
  Eigen::Matrix3Xd coords;
};

// Y = sum_k alpha[k] * B_k, double precision.
Shape3D compose_skeleton(const StructuralParams& alpha, const BaseShapeSet& bases);

// Max pairwise Euclidean distance between keypoints. Needs N >= 2.
double diagonal_length(const Shape3D& shape);

// Loads and validates a skeleton model file (JSON). Unknown fields are
// ignored with a single warning on stderr.
BaseShapeSet load_base_shapes(const std::string& path);

// Same, from an in-memory JSON string (used by tests and bindings).
BaseShapeSet parse_base_shapes(const std::string& json_text);

}  // namespace wirefit
