#include <chrono>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "wirefit/eval.hpp"
#include "wirefit/io.hpp"
#include "wirefit/plot.hpp"

namespace {

using nlohmann::json;
using namespace wirefit;

constexpr const char* kVersion = WIREFIT_VERSION;

constexpr int kExitOk = 0;
constexpr int kExitRuntime = 1;
constexpr int kExitUsage = 2;

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct GlobalOpts {
  std::uint64_t seed = 0;
  int threads = 1;
};

class ManifestWriter {
 public:
  ManifestWriter(const std::string& subcommand, const GlobalOpts& g) {
    start_ = std::chrono::steady_clock::now();
    doc_["command"] = "wirefit";
    doc_["subcommand"] = subcommand;
    doc_["version"] = kVersion;
    doc_["seed"] = g.seed;
    doc_["threads"] = g.threads;
  }

  json& config() { return doc_["config"]; }
  void add_input(const std::string& p) { doc_["inputs"].push_back(p); }
  void add_output(const std::string& p) { doc_["outputs"].push_back(p); }

  // Written next to the primary output; carries wall-clock duration, so it
  // is excluded from byte-determinism comparisons.
  void write(const std::string& primary_output) {
    const auto elapsed = std::chrono::steady_clock::now() - start_;
    doc_["duration_seconds"] =
        std::chrono::duration_cast<std::chrono::duration<double>>(elapsed).count();
    write_text_atomic(primary_output + ".manifest.json", doc_.dump(2) + "\n");
  }

 private:
  json doc_;
  std::chrono::steady_clock::time_point start_;
};

std::string fmt_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::vector<std::string> param_names(int num_bases) {
  std::vector<std::string> names;
  for (int i = 0; i < num_bases - 1; ++i) names.push_back("alpha_free_" + std::to_string(i));
  for (const char* n : {"azimuth", "elevation", "tilt", "t_x", "t_y", "t_z", "inv_f"}) {
    names.push_back(n);
  }
  return names;
}

void require_hash_match(std::uint64_t dataset_hash, const BaseShapeSet& bases,
                        const std::string& what) {
  if (dataset_hash != bases.hash()) {
    throw Error(what + " was generated from a different skeleton model");
  }
}

// ---------------------------------------------------------------- gen

struct GenArgs {
  std::string model;
  std::string out;
  int count = 0;
  double noise_level = 0.0;
  double sigma = 1.5;
  double rho = 0.01;
  int height = 30;
  int width = 40;
  std::vector<double> alpha_range, azimuth_range, elevation_range, tilt_range;
  std::vector<double> tx_range, ty_range, tz_range, invf_range;
};

void apply_range(Range& dst, const std::vector<double>& src) {
  if (src.empty()) return;
  dst = Range{src[0], src[1]};
}

int run_gen(const GenArgs& a, const GlobalOpts& g) {
  const BaseShapeSet bases = load_base_shapes(a.model);
  SamplerConfig cfg;
  cfg.noise_level = a.noise_level;
  cfg.heatmap_sigma = a.sigma;
  cfg.perturbation_ratio = a.rho;
  cfg.heatmap_height = a.height;
  cfg.heatmap_width = a.width;
  cfg.seed = g.seed;
  apply_range(cfg.alpha, a.alpha_range);
  apply_range(cfg.azimuth, a.azimuth_range);
  apply_range(cfg.elevation, a.elevation_range);
  apply_range(cfg.tilt, a.tilt_range);
  apply_range(cfg.t_x, a.tx_range);
  apply_range(cfg.t_y, a.ty_range);
  apply_range(cfg.t_z, a.tz_range);
  apply_range(cfg.inv_f, a.invf_range);
  cfg.validate();

  ManifestWriter manifest("gen", g);
  manifest.config() = json::parse(sampler_config_to_json(cfg));
  manifest.config()["count"] = a.count;
  manifest.add_input(a.model);
  manifest.add_output(a.out);

  const std::vector<SynthSample> data = generate_dataset(cfg, bases, a.count, g.threads);
  write_dataset(a.out, data, cfg, bases);
  manifest.write(a.out);
  std::cout << "wrote " << data.size() << " samples to " << a.out << "\n";
  return kExitOk;
}

// ---------------------------------------------------------------- train

struct TrainArgs {
  std::string data;
  std::string out;
  std::string stage = "interp";
  std::string weights;  // finetune input
  std::string model;    // finetune needs the bases for the projection layer
  std::vector<int> widths;
  int epochs = 50;
  int batch = 32;
  double lr = -1.0;  // per-stage default when negative
  double momentum = 0.9;
  double lr_decay = 0.5;
  int lr_decay_every = 20;
  double val_fraction = 0.1;
  std::vector<double> noise_aug;
};

void write_loss_log(const std::string& path, const TrainLog& log) {
  std::string csv = "epoch,train_loss,val_loss\n";
  for (std::size_t e = 0; e < log.train_loss.size(); ++e) {
    csv += std::to_string(e + 1) + "," + fmt_double(log.train_loss[e]) + "," +
           fmt_double(log.val_loss[e]) + "\n";
  }
  write_text_atomic(path, csv);
}

int run_train(const TrainArgs& a, const GlobalOpts& g) {
  if (a.stage == "finetune" && (a.weights.empty() || a.model.empty())) {
    throw UsageError("train --stage finetune requires --weights and --model");
  }

  const DatasetFile dataset = read_dataset(a.data);
  if (dataset.samples.empty()) throw Error("dataset is empty: " + a.data);

  TrainConfig cfg;
  cfg.batch_size = a.batch;
  cfg.momentum = a.momentum;
  cfg.lr_decay = a.lr_decay;
  cfg.lr_decay_every = a.lr_decay_every;
  cfg.epochs = a.epochs;
  cfg.val_fraction = a.val_fraction;
  cfg.noise_aug_levels = a.noise_aug;
  cfg.seed = g.seed;
  if (!a.widths.empty()) {
    cfg.hidden_widths = a.widths;
  } else if (a.stage == "refine") {
    cfg.hidden_widths = {512, 128, 512};
  }
  if (a.lr >= 0.0) {
    cfg.learning_rate = a.lr;
  } else if (a.stage == "finetune") {
    cfg.learning_rate = 1e-3;
  } else if (a.stage == "refine") {
    cfg.learning_rate = 0.02;
  }

  ManifestWriter manifest("train", g);
  manifest.config()["stage"] = a.stage;
  manifest.config()["widths"] = cfg.hidden_widths;
  manifest.config()["epochs"] = cfg.epochs;
  manifest.config()["batch"] = cfg.batch_size;
  manifest.config()["lr"] = cfg.learning_rate;
  manifest.config()["momentum"] = cfg.momentum;
  manifest.config()["lr_decay"] = cfg.lr_decay;
  manifest.config()["lr_decay_every"] = cfg.lr_decay_every;
  manifest.config()["val_fraction"] = cfg.val_fraction;
  manifest.config()["noise_aug"] = cfg.noise_aug_levels;
  manifest.add_input(a.data);

  const std::string loss_path = a.out + ".loss.csv";
  TrainLog log;
  try {
    if (a.stage == "interp") {
      auto [net, norm] = train_interpreter(dataset.samples, cfg, &log);
      save_weights(a.out, net, norm,
                   make_contract_json("interpreter", dataset.model_hash, dataset.num_bases,
                                      dataset.num_keypoints, dataset.height, dataset.width));
    } else if (a.stage == "refine") {
      const DenseNet net = train_refiner(dataset.samples, cfg, &log);
      save_weights(a.out, net, Normalizer{},
                   make_contract_json("refiner", dataset.model_hash, dataset.num_bases,
                                      dataset.num_keypoints, dataset.height, dataset.width));
    } else if (a.stage == "finetune") {
      const BaseShapeSet bases = load_base_shapes(a.model);
      require_hash_match(dataset.model_hash, bases, "dataset " + a.data);
      const WeightsFile prior = load_weights(a.weights);
      check_contract(prior.contract_json, bases);
      manifest.add_input(a.weights);
      manifest.add_input(a.model);
      std::vector<Sample2D> data2d;
      data2d.reserve(dataset.samples.size());
      for (const auto& s : dataset.samples) data2d.push_back(to_sample_2d(s));
      const DenseNet tuned =
          finetune_through_projection(prior.net, prior.norm, data2d, bases, cfg, &log);
      save_weights(a.out, tuned, prior.norm, prior.contract_json);
    } else {
      throw UsageError("unknown training stage: " + a.stage);
    }
  } catch (const TrainingDivergedError& e) {
    write_loss_log(loss_path, log);
    std::cerr << "error: " << e.what() << "\n";
    return kExitRuntime;
  }

  write_loss_log(loss_path, log);
  manifest.add_output(a.out);
  manifest.add_output(loss_path);
  manifest.write(a.out);
  if (!log.train_loss.empty()) {
    std::cout << "final train loss " << log.train_loss.back() << ", val loss "
              << log.val_loss.back() << "\n";
  }
  std::cout << "wrote weights to " << a.out << "\n";
  return kExitOk;
}

// ---------------------------------------------------------------- fit

struct FitArgs {
  std::string data;
  std::string model;
  std::string out;
  int restarts = 8;
  int max_iters = 500;
  bool freeze_invf = false;
  bool plain_gd = false;
  double gd_step = 0.05;
  int limit = 0;  // 0 = all samples
};

int run_fit(const FitArgs& a, const GlobalOpts& g) {
  const BaseShapeSet bases = load_base_shapes(a.model);
  const DatasetFile dataset = read_dataset(a.data);
  require_hash_match(dataset.model_hash, bases, "dataset " + a.data);

  const int count = a.limit > 0
                        ? std::min<int>(a.limit, static_cast<int>(dataset.samples.size()))
                        : static_cast<int>(dataset.samples.size());

  ManifestWriter manifest("fit", g);
  manifest.config()["restarts"] = a.restarts;
  manifest.config()["max_iters"] = a.max_iters;
  manifest.config()["freeze_inv_f"] = a.freeze_invf;
  manifest.config()["plain_gd"] = a.plain_gd;
  manifest.config()["samples"] = count;
  manifest.add_input(a.data);
  manifest.add_input(a.model);
  manifest.add_output(a.out);

  std::string csv = "sample,final_cost,converged,iterations,restarts";
  for (const auto& name : param_names(dataset.num_bases)) csv += "," + name;
  csv += "\n";
  for (int i = 0; i < count; ++i) {
    FitConfig cfg;
    cfg.restarts = a.restarts;
    cfg.max_iters = a.max_iters;
    cfg.freeze_inv_f = a.freeze_invf;
    cfg.plain_gd = a.plain_gd;
    cfg.gd_step = a.gd_step;
    cfg.seed = derive_seed(g.seed, i);
    const FitResult r = fit_from_heatmaps(dataset.samples[i].heatmaps, bases, cfg);
    csv += std::to_string(i) + "," + fmt_double(r.final_cost) + "," +
           (r.converged ? "1" : "0") + "," + std::to_string(r.iterations) + "," +
           std::to_string(r.restarts_used);
    for (int c = 0; c < r.s_hat.size(); ++c) csv += "," + fmt_double(r.s_hat.values[c]);
    csv += "\n";
  }
  write_text_atomic(a.out, csv);
  manifest.write(a.out);
  std::cout << "fit " << count << " samples -> " << a.out << "\n";
  return kExitOk;
}

// ---------------------------------------------------------------- eval

struct EvalArgs {
  std::string data;
  std::string model;
  std::string weights;
  std::string out;
  bool use_fit = false;
  bool use_net = false;
  std::vector<double> noise_levels;
  std::vector<double> thresholds;
  int restarts = 8;
  int max_iters = 500;
  int limit = 0;
};

int run_eval(const EvalArgs& a, const GlobalOpts& g) {
  if (!a.use_fit && !a.use_net) throw UsageError("eval needs --fit and/or --net");
  if (a.use_net && a.weights.empty()) throw UsageError("--net requires --weights");
  if (!a.noise_levels.empty() && !(a.use_fit && a.use_net)) {
    throw UsageError("--noise-levels compares both methods; pass --fit and --net");
  }

  const BaseShapeSet bases = load_base_shapes(a.model);
  const DatasetFile dataset = read_dataset(a.data);
  require_hash_match(dataset.model_hash, bases, "dataset " + a.data);

  WeightsFile weights;
  if (a.use_net) {
    weights = load_weights(a.weights);
    check_contract(weights.contract_json, bases);
  }

  std::vector<SynthSample> samples = dataset.samples;
  if (a.limit > 0 && static_cast<int>(samples.size()) > a.limit) samples.resize(a.limit);

  std::vector<double> thresholds = a.thresholds;
  if (thresholds.empty()) {
    for (int i = 1; i <= 25; ++i) thresholds.push_back(0.02 * i);
  }

  FitConfig fit_cfg;
  fit_cfg.restarts = a.restarts;
  fit_cfg.max_iters = a.max_iters;
  fit_cfg.seed = g.seed;

  ManifestWriter manifest("eval", g);
  manifest.config()["fit"] = a.use_fit;
  manifest.config()["net"] = a.use_net;
  manifest.config()["noise_levels"] = a.noise_levels;
  manifest.config()["thresholds"] = thresholds;
  manifest.config()["samples"] = samples.size();
  manifest.add_input(a.data);
  manifest.add_input(a.model);
  if (a.use_net) manifest.add_input(a.weights);

  std::string report = "sample,method,rmse_3d,azimuth_error_deg,reproj_cost\n";
  std::vector<std::pair<std::string, std::vector<double>>> method_rmse;

  const auto record = [&](const std::string& method, int index, const ParamVector& s_hat,
                          const SynthSample& sample, std::vector<double>& rmse_out) {
    auto [sp_hat, cam_hat] = s_hat.decode();
    auto [sp_true, cam_true] = sample.s_true.decode();
    const double rmse =
        rmse_3d(compose_skeleton(sp_hat, bases), compose_skeleton(sp_true, bases));
    const double az = azimuth_error(cam_hat.azimuth, cam_true.azimuth);
    const double cost = reprojection_cost(s_hat, sample.x_true, bases);
    report += std::to_string(index) + "," + method + "," + fmt_double(rmse) + "," +
              fmt_double(az) + "," + fmt_double(cost) + "\n";
    rmse_out.push_back(rmse);
  };

  if (a.use_fit) {
    std::vector<double> rmse;
    for (std::size_t i = 0; i < samples.size(); ++i) {
      FitConfig cfg = fit_cfg;
      cfg.seed = derive_seed(g.seed, i);
      const FitResult r = fit_from_heatmaps(samples[i].heatmaps, bases, cfg);
      record("fit", static_cast<int>(i), r.s_hat, samples[i], rmse);
    }
    method_rmse.emplace_back("fit", std::move(rmse));
  }
  if (a.use_net) {
    std::vector<double> rmse;
    for (std::size_t i = 0; i < samples.size(); ++i) {
      const ParamVector s_hat = predict(weights.net, weights.norm, samples[i].heatmaps);
      record("net", static_cast<int>(i), s_hat, samples[i], rmse);
    }
    method_rmse.emplace_back("net", std::move(rmse));
  }

  const std::string report_path = a.out + ".report.csv";
  write_text_atomic(report_path, report);
  manifest.add_output(report_path);

  for (const auto& [method, rmse] : method_rmse) {
    const RecallCurve curve = recall_curve(rmse, thresholds);
    std::string csv = "threshold,recall\n";
    for (std::size_t i = 0; i < curve.thresholds.size(); ++i) {
      csv += fmt_double(curve.thresholds[i]) + "," + fmt_double(curve.recall[i]) + "\n";
    }
    const std::string path = a.out + ".recall_" + method + ".csv";
    write_text_atomic(path, csv);
    manifest.add_output(path);
    char line[128];
    std::snprintf(line, sizeof line, "average recall (%s) = %.4f\n", method.c_str(),
                  curve.average_recall);
    std::cout << line;
  }

  if (!a.noise_levels.empty()) {
    const std::vector<SweepRow> rows =
        noise_sweep(samples, bases, weights.net, weights.norm, a.noise_levels, fit_cfg,
                    derive_seed(g.seed, 0x5EEDu), g.threads);
    std::string sweep = "noise_level,method,mean_rmse_3d,mean_azimuth_error_deg\n";
    std::string fit_curve = "noise_level,mean_rmse_3d\n";
    std::string net_curve = "noise_level,mean_rmse_3d\n";
    for (const auto& row : rows) {
      sweep += fmt_double(row.noise_level) + "," + row.method + "," +
               fmt_double(row.mean_rmse_3d) + "," + fmt_double(row.mean_azimuth_error_deg) +
               "\n";
      auto& curve = row.method == "fit" ? fit_curve : net_curve;
      curve += fmt_double(row.noise_level) + "," + fmt_double(row.mean_rmse_3d) + "\n";
    }
    for (const auto& [name, content] :
         {std::pair<std::string, std::string&>{"sweep.csv", sweep},
          {"sweep_fit.csv", fit_curve},
          {"sweep_net.csv", net_curve}}) {
      const std::string path = a.out + "." + name;
      write_text_atomic(path, content);
      manifest.add_output(path);
    }
  }

  manifest.write(a.out);
  return kExitOk;
}

// ---------------------------------------------------------------- export-obj

struct ExportArgs {
  std::string model;
  std::string out;
  std::vector<double> params;
  std::string data;
  int index = 0;
};

int run_export(const ExportArgs& a, const GlobalOpts& g) {
  const BaseShapeSet bases = load_base_shapes(a.model);
  ParamVector s(Eigen::VectorXd::Zero(param_vector_size(bases.num_bases())));
  if (!a.params.empty()) {
    if (static_cast<int>(a.params.size()) != s.size()) {
      throw Error("expected " + std::to_string(s.size()) + " parameter values, got " +
                  std::to_string(a.params.size()));
    }
    for (std::size_t i = 0; i < a.params.size(); ++i) {
      if (!std::isfinite(a.params[i])) throw Error("non-finite parameter value");
      s.values[static_cast<int>(i)] = a.params[i];
    }
  } else if (!a.data.empty()) {
    const DatasetFile dataset = read_dataset(a.data);
    require_hash_match(dataset.model_hash, bases, "dataset " + a.data);
    if (a.index < 0 || a.index >= static_cast<int>(dataset.samples.size())) {
      throw Error("sample index " + std::to_string(a.index) + " out of range");
    }
    s = dataset.samples[a.index].s_true;
  }

  ManifestWriter manifest("export-obj", g);
  manifest.config()["params"] = std::vector<double>(s.values.data(),
                                                    s.values.data() + s.size());
  manifest.add_input(a.model);
  if (!a.data.empty()) manifest.add_input(a.data);
  manifest.add_output(a.out);

  const Shape3D shape = compose_skeleton(s.decode().first, bases);
  write_text_atomic(a.out, to_obj(shape, bases.spec));
  manifest.write(a.out);
  std::cout << "wrote " << a.out << "\n";
  return kExitOk;
}

// ---------------------------------------------------------------- plot

struct PlotArgs {
  std::vector<std::string> curves;
  std::string out;
  std::string title = "recall";
  std::string x_label = "threshold";
  std::string y_label = "recall";
};

Series read_curve_file(const std::string& path) {
  const std::string text = read_text(path);
  Series series;
  series.label = std::filesystem::path(path).stem().string();
  std::size_t pos = 0;
  int row = 0;
  while (pos < text.size()) {
    std::size_t eol = text.find('\n', pos);
    if (eol == std::string::npos) eol = text.size();
    const std::string line = text.substr(pos, eol - pos);
    pos = eol + 1;
    ++row;
    if (row == 1) continue;  // header
    if (line.empty()) continue;
    double x = 0.0, y = 0.0;
    if (std::sscanf(line.c_str(), "%lf,%lf", &x, &y) != 2) {
      throw ParseError(path + ": malformed row " + std::to_string(row));
    }
    series.x.push_back(x);
    series.y.push_back(y);
  }
  if (series.x.empty()) {
    throw ParseError(path + ": no data rows (first data row would be row 2)");
  }
  return series;
}

int run_plot(const PlotArgs& a, const GlobalOpts& g) {
  std::vector<Series> series;
  for (const auto& path : a.curves) series.push_back(read_curve_file(path));

  ManifestWriter manifest("plot", g);
  manifest.config()["title"] = a.title;
  manifest.config()["x_label"] = a.x_label;
  manifest.config()["y_label"] = a.y_label;
  for (const auto& path : a.curves) manifest.add_input(path);
  manifest.add_output(a.out);

  write_text_atomic(a.out, render_line_chart(a.title, a.x_label, a.y_label, series));
  manifest.write(a.out);
  std::cout << "wrote " << a.out << "\n";
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"wireframe skeleton projection, fitting, and interpretation"};
  app.set_version_flag("--version", kVersion);
  app.require_subcommand(1);

  GlobalOpts global;
  app.add_option("--seed", global.seed, "seed for all randomness")->capture_default_str();
  app.add_option("--threads", global.threads, "worker threads for sample-parallel stages")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();

  GenArgs gen;
  auto* cmd_gen = app.add_subcommand("gen", "generate a synthetic dataset");
  cmd_gen->fallthrough();
  cmd_gen->add_option("--model", gen.model, "skeleton model JSON")->required();
  cmd_gen->add_option("--count", gen.count, "number of samples")
      ->required()
      ->check(CLI::PositiveNumber);
  cmd_gen->add_option("--out", gen.out, "output dataset path")->required();
  cmd_gen->add_option("--noise-level", gen.noise_level, "salt-and-pepper p baked in")
      ->check(CLI::Range(0.0, 1.0));
  cmd_gen->add_option("--sigma", gen.sigma, "heatmap blob width in cells");
  cmd_gen->add_option("--rho", gen.rho, "3D perturbation std as fraction of diagonal");
  cmd_gen->add_option("--height", gen.height, "heatmap rows");
  cmd_gen->add_option("--width", gen.width, "heatmap columns");
  cmd_gen->add_option("--alpha-range", gen.alpha_range)->expected(2);
  cmd_gen->add_option("--azimuth-range", gen.azimuth_range)->expected(2);
  cmd_gen->add_option("--elevation-range", gen.elevation_range)->expected(2);
  cmd_gen->add_option("--tilt-range", gen.tilt_range)->expected(2);
  cmd_gen->add_option("--tx-range", gen.tx_range)->expected(2);
  cmd_gen->add_option("--ty-range", gen.ty_range)->expected(2);
  cmd_gen->add_option("--tz-range", gen.tz_range)->expected(2);
  cmd_gen->add_option("--invf-range", gen.invf_range)->expected(2);

  TrainArgs train;
  auto* cmd_train = app.add_subcommand("train", "train interpreter/refiner weights");
  cmd_train->fallthrough();
  cmd_train->add_option("--data", train.data, "input dataset")->required();
  cmd_train->add_option("--out", train.out, "output weights path")->required();
  cmd_train->add_option("--stage", train.stage, "interp|refine|finetune")
      ->check(CLI::IsMember({"interp", "refine", "finetune"}))
      ->capture_default_str();
  cmd_train->add_option("--weights", train.weights, "prior weights (finetune)");
  cmd_train->add_option("--model", train.model, "skeleton model JSON (finetune)");
  cmd_train->add_option("--widths", train.widths, "hidden layer widths")->expected(-1);
  cmd_train->add_option("--epochs", train.epochs)->check(CLI::PositiveNumber)
      ->capture_default_str();
  cmd_train->add_option("--batch", train.batch)->check(CLI::PositiveNumber)
      ->capture_default_str();
  cmd_train->add_option("--lr", train.lr, "learning rate (per-stage default if unset)");
  cmd_train->add_option("--momentum", train.momentum)->capture_default_str();
  cmd_train->add_option("--lr-decay", train.lr_decay)->capture_default_str();
  cmd_train->add_option("--lr-decay-every", train.lr_decay_every)->capture_default_str();
  cmd_train->add_option("--val-fraction", train.val_fraction)->capture_default_str();
  cmd_train->add_option("--noise-aug", train.noise_aug,
                        "salt-and-pepper levels for input augmentation")
      ->expected(-1);

  FitArgs fit;
  auto* cmd_fit = app.add_subcommand("fit", "optimization-based recovery per sample");
  cmd_fit->fallthrough();
  cmd_fit->add_option("--data", fit.data, "input dataset")->required();
  cmd_fit->add_option("--model", fit.model, "skeleton model JSON")->required();
  cmd_fit->add_option("--out", fit.out, "output CSV")->required();
  cmd_fit->add_option("--restarts", fit.restarts)->check(CLI::PositiveNumber)
      ->capture_default_str();
  cmd_fit->add_option("--max-iters", fit.max_iters)->check(CLI::PositiveNumber)
      ->capture_default_str();
  cmd_fit->add_flag("--freeze-invf", fit.freeze_invf, "keep inv_f at its initial value");
  cmd_fit->add_flag("--plain-gd", fit.plain_gd, "gradient-descent ablation");
  cmd_fit->add_option("--gd-step", fit.gd_step)->capture_default_str();
  cmd_fit->add_option("--limit", fit.limit, "fit only the first N samples");

  EvalArgs eval;
  auto* cmd_eval = app.add_subcommand("eval", "metrics and noise sweep");
  cmd_eval->fallthrough();
  cmd_eval->add_option("--data", eval.data, "input dataset")->required();
  cmd_eval->add_option("--model", eval.model, "skeleton model JSON")->required();
  cmd_eval->add_option("--out", eval.out, "output path prefix")->required();
  cmd_eval->add_option("--weights", eval.weights, "interpreter weights");
  cmd_eval->add_flag("--fit", eval.use_fit, "evaluate the optimization baseline");
  cmd_eval->add_flag("--net", eval.use_net, "evaluate the trained interpreter");
  cmd_eval->add_option("--noise-levels", eval.noise_levels)->expected(-1);
  cmd_eval->add_option("--thresholds", eval.thresholds)->expected(-1);
  cmd_eval->add_option("--restarts", eval.restarts)->capture_default_str();
  cmd_eval->add_option("--max-iters", eval.max_iters)->capture_default_str();
  cmd_eval->add_option("--limit", eval.limit, "evaluate only the first N samples");

  ExportArgs exp;
  auto* cmd_export = app.add_subcommand("export-obj", "export a wireframe OBJ");
  cmd_export->fallthrough();
  cmd_export->add_option("--model", exp.model, "skeleton model JSON")->required();
  cmd_export->add_option("--out", exp.out, "output OBJ path")->required();
  cmd_export->add_option("--params", exp.params,
                         "full parameter vector (default: mean shape)")
      ->expected(-1);
  cmd_export->add_option("--data", exp.data, "take parameters from this dataset");
  cmd_export->add_option("--index", exp.index, "sample index within --data")
      ->capture_default_str();

  PlotArgs plot;
  auto* cmd_plot = app.add_subcommand("plot", "render curve CSVs as a deterministic SVG");
  cmd_plot->fallthrough();
  cmd_plot->add_option("--curves", plot.curves, "curve CSV files")
      ->required()
      ->expected(-1);
  cmd_plot->add_option("--out", plot.out, "output SVG path")->required();
  cmd_plot->add_option("--title", plot.title)->capture_default_str();
  cmd_plot->add_option("--x-label", plot.x_label)->capture_default_str();
  cmd_plot->add_option("--y-label", plot.y_label)->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitUsage;
  }

  try {
    if (cmd_gen->parsed()) return run_gen(gen, global);
    if (cmd_train->parsed()) return run_train(train, global);
    if (cmd_fit->parsed()) return run_fit(fit, global);
    if (cmd_eval->parsed()) return run_eval(eval, global);
    if (cmd_export->parsed()) return run_export(exp, global);
    if (cmd_plot->parsed()) return run_plot(plot, global);
  } catch (const UsageError& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitRuntime;
  }
  return kExitUsage;
}
