#pragma once

#include <string>
#include <vector>

#include "wirefit/net.hpp"
#include "wirefit/synth.hpp"

namespace wirefit {

// Dataset container file, magic "3DINNDS1", little-endian:
//   magic[8] | u64 model_hash | u32 cfg_json_len | cfg_json |
//   u32 N | u32 K | u32 H | u32 W | u64 count |
//   per sample: f64 s[K+6] | f64 y[3N] (x,y,z per keypoint) |
//               f64 x[2N] | f32 heatmaps[N*H*W]
void write_dataset(const std::string& path, const std::vector<SynthSample>& data,
                   const SamplerConfig& cfg, const BaseShapeSet& bases);

struct DatasetFile {
  std::uint64_t model_hash;
  std::string cfg_json;
  int num_keypoints;
  int num_bases;
  int height;
  int width;
  std::vector<SynthSample> samples;
};

DatasetFile read_dataset(const std::string& path);

// Weights file, magic "3DINNW01", little-endian:
//   magic[8] | u32 layer_count |
//   per layer: u32 out | u32 in | u8 act | f64 W row-major | f64 b |
//   u32 norm_dim | f64 mean | f64 std |
//   u32 contract_len | contract (JSON: layout, K, N, H, W, model_hash, kind)
void save_weights(const std::string& path, const DenseNet& net, const Normalizer& norm,
                  const std::string& contract_json);

struct WeightsFile {
  DenseNet net;
  Normalizer norm;
  std::string contract_json;
};

WeightsFile load_weights(const std::string& path);

std::string make_contract_json(const std::string& kind, std::uint64_t model_hash,
                               int num_bases, int num_keypoints, int height, int width);

std::string make_contract_json(const std::string& kind, const BaseShapeSet& bases,
                               int height, int width);

// Checks model_hash in a contract against a base shape set; throws Error on
// mismatch.
void check_contract(const std::string& contract_json, const BaseShapeSet& bases);

std::string sampler_config_to_json(const SamplerConfig& cfg);
SamplerConfig sampler_config_from_json(const std::string& json_text);

// Wavefront OBJ: v-lines at %.9g, 1-based l-lines from the skeleton edges.
std::string to_obj(const Shape3D& shape, const SkeletonSpec& spec);

void write_text_atomic(const std::string& path, const std::string& content);

std::string read_text(const std::string& path);

}  // namespace wirefit
