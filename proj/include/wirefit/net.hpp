#pragma once

#include <cstdint>
#include <vector>

#include "wirefit/synth.hpp"

namespace wirefit {

enum class Activation : std::uint8_t { Linear = 0, Relu = 1 };

struct Layer {
  Eigen::MatrixXd weights;  // out x in
  Eigen::VectorXd bias;     // out
  Activation act = Activation::Linear;
};

struct DenseNet {
  std::vector<Layer> layers;

  int input_dim() const { return layers.empty() ? 0 : static_cast<int>(layers.front().weights.cols()); }
  int output_dim() const { return layers.empty() ? 0 : static_cast<int>(layers.back().weights.rows()); }
};

// ReLU hidden layers, linear output; weights uniform in
// +-sqrt(6 / (fan_in + fan_out)), deterministic given seed.
DenseNet make_dense_net(int input_dim, const std::vector<int>& hidden_widths,
                        int output_dim, std::uint64_t seed);

Eigen::VectorXd forward(const DenseNet& net, const Eigen::VectorXd& input);
Eigen::MatrixXd forward_batch(const DenseNet& net, const Eigen::MatrixXd& input);

struct Gradients {
  std::vector<Eigen::MatrixXd> d_weights;
  std::vector<Eigen::VectorXd> d_bias;
};

// Exact gradients of the forward composition for a batch of inputs
// (columns) given dLoss/dOutput columns.
Gradients backward(const DenseNet& net, const Eigen::MatrixXd& input,
                   const Eigen::MatrixXd& loss_grad);

// Per-dimension affine standardization of ParamVector targets.
struct Normalizer {
  Eigen::VectorXd mean;
  Eigen::VectorXd std;  // floored at 1e-8

  Eigen::VectorXd normalize(const Eigen::VectorXd& v) const;
  Eigen::VectorXd denormalize(const Eigen::VectorXd& v) const;

  static Normalizer fit(const std::vector<Eigen::VectorXd>& targets);
};

struct TrainConfig {
  std::vector<int> hidden_widths{256, 128, 64};  // full-scale: {2048, 512, 128}
  int batch_size = 32;
  double learning_rate = 0.05;
  double momentum = 0.9;
  double lr_decay = 0.5;
  int lr_decay_every = 20;  // epochs; 0 disables the schedule
  int epochs = 50;
  double val_fraction = 0.1;
  // When nonempty, each training heatmap stack is salt-and-pepper corrupted
  // with a level drawn from this set (fresh draw per epoch).
  std::vector<double> noise_aug_levels;
  std::uint64_t seed = 0;

  void validate() const;
};

struct TrainLog {
  std::vector<double> train_loss;  // per epoch, mean squared error per entry
  std::vector<double> val_loss;
  std::vector<double> extra;  // stage-specific (e.g. skipped fraction)
};

// Stage 2: heatmaps (flattened N*H*W) -> standardized ParamVector, minibatch
// SGD with momentum on mean squared error.
std::pair<DenseNet, Normalizer> train_interpreter(const std::vector<SynthSample>& data,
                                                  const TrainConfig& cfg,
                                                  TrainLog* log = nullptr);

// Bottleneck autoencoder mapping corrupted heatmaps (mixed levels from
// cfg.noise_aug_levels, default {0, 0.1, 0.2, 0.3}) to clean ones.
DenseNet train_refiner(const std::vector<SynthSample>& data, const TrainConfig& cfg,
                       TrainLog* log = nullptr);

// 2D-supervised pairs for fine-tuning; no 3D targets.
struct Sample2D {
  HeatmapStack heatmaps;
  Keypoints2D x_true;
};

Sample2D to_sample_2d(const SynthSample& s);

// Stage 3: descends the squared 2D reprojection error of
// project_skeleton(decode(denormalize(forward(h)))) through the projection
// Jacobian into the net. Depth-singular samples are skipped and counted;
// throws if more than 10% of an epoch is skipped. Returns the weights with
// the best held-out 2D error seen (never worse than the input model).
DenseNet finetune_through_projection(const DenseNet& net, const Normalizer& norm,
                                     const std::vector<Sample2D>& data2d,
                                     const BaseShapeSet& bases, const TrainConfig& cfg,
                                     TrainLog* log = nullptr);

// Denormalized forward pass; inv_f clamped to >= 0.
ParamVector predict(const DenseNet& net, const Normalizer& norm, const HeatmapStack& h);

// Refiner forward pass with outputs clamped to [0, 1].
HeatmapStack refine_heatmaps(const DenseNet& refiner, const HeatmapStack& h);

// Flattening used for all net inputs: channel-major, then row-major.
Eigen::VectorXd flatten_heatmaps(const HeatmapStack& h);

// Mean squared 2D reprojection error of predictions over a sample set
// (mean over samples of reprojection_cost); used for fine-tune selection.
double mean_reprojection_error(const DenseNet& net, const Normalizer& norm,
                               const std::vector<Sample2D>& data,
                               const BaseShapeSet& bases);

}  // namespace wirefit
