#include "wirefit/io.hpp"

#include <bit>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>

#include <nlohmann/json.hpp>

static_assert(std::endian::native == std::endian::little,
              "file formats are little-endian; big-endian hosts are unsupported");

namespace wirefit {

namespace {

using nlohmann::json;

constexpr char kDatasetMagic[8] = {'3', 'D', 'I', 'N', 'N', 'D', 'S', '1'};
constexpr char kWeightsMagic[8] = {'3', 'D', 'I', 'N', 'N', 'W', '0', '1'};

template <typename T>
void write_pod(std::ostream& out, const T& v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof v);
}

template <typename T>
T read_pod(std::istream& in) {
  T v{};
  in.read(reinterpret_cast<char*>(&v), sizeof v);
  if (!in) throw ParseError("unexpected end of file");
  return v;
}

void write_bytes(std::ostream& out, const void* data, std::size_t len) {
  out.write(static_cast<const char*>(data), static_cast<std::streamsize>(len));
}

void read_bytes(std::istream& in, void* data, std::size_t len) {
  in.read(static_cast<char*>(data), static_cast<std::streamsize>(len));
  if (!in) throw ParseError("unexpected end of file");
}

void write_sized_string(std::ostream& out, const std::string& s) {
  write_pod<std::uint32_t>(out, static_cast<std::uint32_t>(s.size()));
  write_bytes(out, s.data(), s.size());
}

std::string read_sized_string(std::istream& in) {
  const auto len = read_pod<std::uint32_t>(in);
  std::string s(len, '\0');
  if (len > 0) read_bytes(in, s.data(), len);
  return s;
}

// All artifact writes go through a temp file and a rename so readers never
// see a partial file.
class AtomicFile {
 public:
  explicit AtomicFile(const std::string& path)
      : path_(path), tmp_(path + ".tmp"), out_(tmp_, std::ios::binary | std::ios::trunc) {
    if (!out_) throw Error("cannot open for writing: " + tmp_);
  }

  std::ofstream& stream() { return out_; }

  void commit() {
    out_.flush();
    if (!out_) throw Error("write failed: " + tmp_);
    out_.close();
    std::filesystem::rename(tmp_, path_);
    committed_ = true;
  }

  ~AtomicFile() {
    if (!committed_) {
      out_.close();
      std::error_code ec;
      std::filesystem::remove(tmp_, ec);
    }
  }

 private:
  std::string path_;
  std::string tmp_;
  std::ofstream out_;
  bool committed_ = false;
};

json range_to_json(const Range& r) { return json::array({r.lo, r.hi}); }

Range range_from_json(const json& j, const std::string& name) {
  if (!j.is_array() || j.size() != 2) throw ParseError(name + ": expected [lo, hi]");
  return Range{j[0].get<double>(), j[1].get<double>()};
}

}  // namespace

std::string sampler_config_to_json(const SamplerConfig& cfg) {
  json j;
  j["alpha"] = range_to_json(cfg.alpha);
  j["azimuth"] = range_to_json(cfg.azimuth);
  j["elevation"] = range_to_json(cfg.elevation);
  j["tilt"] = range_to_json(cfg.tilt);
  j["t_x"] = range_to_json(cfg.t_x);
  j["t_y"] = range_to_json(cfg.t_y);
  j["t_z"] = range_to_json(cfg.t_z);
  j["inv_f"] = range_to_json(cfg.inv_f);
  j["perturbation_ratio"] = cfg.perturbation_ratio;
  j["heatmap_sigma"] = cfg.heatmap_sigma;
  j["noise_level"] = cfg.noise_level;
  j["heatmap_height"] = cfg.heatmap_height;
  j["heatmap_width"] = cfg.heatmap_width;
  j["seed"] = cfg.seed;
  return j.dump();
}

SamplerConfig sampler_config_from_json(const std::string& json_text) {
  json j;
  try {
    j = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw ParseError(std::string("sampler config: ") + e.what());
  }
  SamplerConfig cfg;
  cfg.alpha = range_from_json(j.at("alpha"), "alpha");
  cfg.azimuth = range_from_json(j.at("azimuth"), "azimuth");
  cfg.elevation = range_from_json(j.at("elevation"), "elevation");
  cfg.tilt = range_from_json(j.at("tilt"), "tilt");
  cfg.t_x = range_from_json(j.at("t_x"), "t_x");
  cfg.t_y = range_from_json(j.at("t_y"), "t_y");
  cfg.t_z = range_from_json(j.at("t_z"), "t_z");
  cfg.inv_f = range_from_json(j.at("inv_f"), "inv_f");
  cfg.perturbation_ratio = j.at("perturbation_ratio").get<double>();
  cfg.heatmap_sigma = j.at("heatmap_sigma").get<double>();
  cfg.noise_level = j.at("noise_level").get<double>();
  cfg.heatmap_height = j.at("heatmap_height").get<int>();
  cfg.heatmap_width = j.at("heatmap_width").get<int>();
  cfg.seed = j.at("seed").get<std::uint64_t>();
  cfg.validate();
  return cfg;
}

void write_dataset(const std::string& path, const std::vector<SynthSample>& data,
                   const SamplerConfig& cfg, const BaseShapeSet& bases) {
  if (data.empty()) throw DegenerateInputError("write_dataset: no samples");
  const int n = bases.num_keypoints();
  const int k = bases.num_bases();
  const int h = cfg.heatmap_height;
  const int w = cfg.heatmap_width;
  for (std::size_t i = 0; i < data.size(); ++i) {
    const auto& s = data[i];
    if (s.s_true.size() != param_vector_size(k) || s.y_true.coords.cols() != n ||
        s.x_true.count() != n || s.heatmaps.channels != n || s.heatmaps.height != h ||
        s.heatmaps.width != w) {
      throw DimensionError("write_dataset: sample " + std::to_string(i) +
                           " inconsistent with model/config dims");
    }
  }

  AtomicFile file(path);
  auto& out = file.stream();
  write_bytes(out, kDatasetMagic, sizeof kDatasetMagic);
  write_pod<std::uint64_t>(out, bases.hash());
  write_sized_string(out, sampler_config_to_json(cfg));
  write_pod<std::uint32_t>(out, static_cast<std::uint32_t>(n));
  write_pod<std::uint32_t>(out, static_cast<std::uint32_t>(k));
  write_pod<std::uint32_t>(out, static_cast<std::uint32_t>(h));
  write_pod<std::uint32_t>(out, static_cast<std::uint32_t>(w));
  write_pod<std::uint64_t>(out, static_cast<std::uint64_t>(data.size()));
  for (const auto& s : data) {
    write_bytes(out, s.s_true.values.data(), sizeof(double) * s.s_true.size());
    write_bytes(out, s.y_true.coords.data(), sizeof(double) * 3 * n);
    write_bytes(out, s.x_true.coords.data(), sizeof(double) * 2 * n);
    write_bytes(out, s.heatmaps.data.data(), sizeof(float) * s.heatmaps.cell_count());
  }
  file.commit();
}

DatasetFile read_dataset(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError("cannot open dataset: " + path);
  char magic[8];
  read_bytes(in, magic, sizeof magic);
  if (std::memcmp(magic, kDatasetMagic, sizeof magic) != 0) {
    throw ParseError(path + ": not a dataset file (bad magic)");
  }
  DatasetFile file;
  file.model_hash = read_pod<std::uint64_t>(in);
  file.cfg_json = read_sized_string(in);
  file.num_keypoints = static_cast<int>(read_pod<std::uint32_t>(in));
  file.num_bases = static_cast<int>(read_pod<std::uint32_t>(in));
  file.height = static_cast<int>(read_pod<std::uint32_t>(in));
  file.width = static_cast<int>(read_pod<std::uint32_t>(in));
  const auto count = read_pod<std::uint64_t>(in);
  const int n = file.num_keypoints;
  const int svec = param_vector_size(file.num_bases);
  if (n < 1 || file.num_bases < 1 || file.height < 1 || file.width < 1) {
    throw ParseError(path + ": corrupt header dimensions");
  }
  file.samples.reserve(count);
  for (std::uint64_t i = 0; i < count; ++i) {
    SynthSample s;
    Eigen::VectorXd sv(svec);
    read_bytes(in, sv.data(), sizeof(double) * svec);
    s.s_true = ParamVector(std::move(sv));
    s.y_true.coords.resize(3, n);
    read_bytes(in, s.y_true.coords.data(), sizeof(double) * 3 * n);
    Eigen::Matrix2Xd x(2, n);
    read_bytes(in, x.data(), sizeof(double) * 2 * n);
    s.x_true = Keypoints2D::all_visible(std::move(x));
    s.heatmaps = HeatmapStack(n, file.height, file.width);
    read_bytes(in, s.heatmaps.data.data(), sizeof(float) * s.heatmaps.cell_count());
    file.samples.push_back(std::move(s));
  }
  return file;
}

void save_weights(const std::string& path, const DenseNet& net, const Normalizer& norm,
                  const std::string& contract_json) {
  if (net.layers.empty()) throw DimensionError("save_weights: empty net");
  AtomicFile file(path);
  auto& out = file.stream();
  write_bytes(out, kWeightsMagic, sizeof kWeightsMagic);
  write_pod<std::uint32_t>(out, static_cast<std::uint32_t>(net.layers.size()));
  for (const auto& layer : net.layers) {
    const auto rows = static_cast<std::uint32_t>(layer.weights.rows());
    const auto cols = static_cast<std::uint32_t>(layer.weights.cols());
    write_pod<std::uint32_t>(out, rows);
    write_pod<std::uint32_t>(out, cols);
    write_pod<std::uint8_t>(out, static_cast<std::uint8_t>(layer.act));
    for (std::uint32_t r = 0; r < rows; ++r) {
      for (std::uint32_t c = 0; c < cols; ++c) {
        write_pod<double>(out, layer.weights(r, c));
      }
    }
    write_bytes(out, layer.bias.data(), sizeof(double) * rows);
  }
  write_pod<std::uint32_t>(out, static_cast<std::uint32_t>(norm.mean.size()));
  if (norm.mean.size() > 0) {
    if (norm.std.size() != norm.mean.size()) {
      throw DimensionError("save_weights: normalizer mean/std size mismatch");
    }
    write_bytes(out, norm.mean.data(), sizeof(double) * norm.mean.size());
    write_bytes(out, norm.std.data(), sizeof(double) * norm.std.size());
  }
  write_sized_string(out, contract_json);
  file.commit();
}

WeightsFile load_weights(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError("cannot open weights: " + path);
  char magic[8];
  read_bytes(in, magic, sizeof magic);
  if (std::memcmp(magic, kWeightsMagic, sizeof magic) != 0) {
    throw ParseError(path + ": not a weights file (bad magic)");
  }
  WeightsFile file;
  const auto layer_count = read_pod<std::uint32_t>(in);
  if (layer_count == 0) throw ParseError(path + ": no layers");
  for (std::uint32_t l = 0; l < layer_count; ++l) {
    Layer layer;
    const auto rows = read_pod<std::uint32_t>(in);
    const auto cols = read_pod<std::uint32_t>(in);
    const auto act = read_pod<std::uint8_t>(in);
    if (act > 1) throw ParseError(path + ": unknown activation code");
    layer.act = static_cast<Activation>(act);
    layer.weights.resize(rows, cols);
    for (std::uint32_t r = 0; r < rows; ++r) {
      for (std::uint32_t c = 0; c < cols; ++c) {
        layer.weights(r, c) = read_pod<double>(in);
      }
    }
    layer.bias.resize(rows);
    read_bytes(in, layer.bias.data(), sizeof(double) * rows);
    file.net.layers.push_back(std::move(layer));
  }
  const auto norm_dim = read_pod<std::uint32_t>(in);
  if (norm_dim > 0) {
    file.norm.mean.resize(norm_dim);
    file.norm.std.resize(norm_dim);
    read_bytes(in, file.norm.mean.data(), sizeof(double) * norm_dim);
    read_bytes(in, file.norm.std.data(), sizeof(double) * norm_dim);
  }
  file.contract_json = read_sized_string(in);
  return file;
}

namespace {

std::string hash_hex(std::uint64_t h) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

}  // namespace

std::string make_contract_json(const std::string& kind, std::uint64_t model_hash,
                               int num_bases, int num_keypoints, int height, int width) {
  json j;
  j["kind"] = kind;
  j["layout"] = "alpha_free,azimuth,elevation,tilt,t_x,t_y,t_z,inv_f";
  j["num_bases"] = num_bases;
  j["num_keypoints"] = num_keypoints;
  j["heatmap_height"] = height;
  j["heatmap_width"] = width;
  j["model_hash"] = hash_hex(model_hash);
  return j.dump();
}

std::string make_contract_json(const std::string& kind, const BaseShapeSet& bases,
                               int height, int width) {
  return make_contract_json(kind, bases.hash(), bases.num_bases(), bases.num_keypoints(),
                            height, width);
}

void check_contract(const std::string& contract_json, const BaseShapeSet& bases) {
  json j;
  try {
    j = json::parse(contract_json);
  } catch (const json::parse_error& e) {
    throw ParseError(std::string("weights contract: ") + e.what());
  }
  const std::string expected = hash_hex(bases.hash());
  const std::string got = j.at("model_hash").get<std::string>();
  if (got != expected) {
    throw Error("weights were trained against a different skeleton model (hash " + got +
                ", expected " + expected + ")");
  }
}

std::string to_obj(const Shape3D& shape, const SkeletonSpec& spec) {
  if (shape.coords.cols() != spec.keypoint_count()) {
    throw DimensionError("to_obj: shape/spec keypoint count mismatch");
  }
  std::string out;
  out += "o " + spec.category + "\n";
  char line[128];
  for (int i = 0; i < shape.coords.cols(); ++i) {
    std::snprintf(line, sizeof line, "v %.9g %.9g %.9g\n", shape.coords(0, i),
                  shape.coords(1, i), shape.coords(2, i));
    out += line;
  }
  for (const auto& [i, j] : spec.edges) {
    std::snprintf(line, sizeof line, "l %d %d\n", i + 1, j + 1);
    out += line;
  }
  return out;
}

void write_text_atomic(const std::string& path, const std::string& content) {
  AtomicFile file(path);
  file.stream() << content;
  file.commit();
}

std::string read_text(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError("cannot open: " + path);
  std::string content((std::istreambuf_iterator<char>(in)),
                      std::istreambuf_iterator<char>());
  return content;
}

}  // namespace wirefit
