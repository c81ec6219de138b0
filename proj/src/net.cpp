#include "wirefit/net.hpp"

#include <cmath>
#include <limits>
#include <numeric>

#include "wirefit/fit.hpp"

namespace wirefit {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

double uniform01(Rng& rng) {
  return static_cast<double>(rng() >> 11) * (1.0 / 9007199254740992.0);
}

void check_dims(const DenseNet& net) {
  if (net.layers.empty()) throw DimensionError("net has no layers");
  for (std::size_t l = 0; l < net.layers.size(); ++l) {
    const auto& layer = net.layers[l];
    if (layer.weights.rows() != layer.bias.size()) {
      throw DimensionError("layer " + std::to_string(l) + ": bias/weight row mismatch");
    }
    if (l > 0 && net.layers[l - 1].weights.rows() != layer.weights.cols()) {
      throw DimensionError("layer " + std::to_string(l) + ": input dim does not chain");
    }
  }
}

Eigen::MatrixXd apply_activation(const Eigen::MatrixXd& z, Activation act) {
  if (act == Activation::Linear) return z;
  return z.cwiseMax(0.0);
}

struct Velocity {
  std::vector<Eigen::MatrixXd> w;
  std::vector<Eigen::VectorXd> b;

  explicit Velocity(const DenseNet& net) {
    for (const auto& layer : net.layers) {
      w.push_back(Eigen::MatrixXd::Zero(layer.weights.rows(), layer.weights.cols()));
      b.push_back(Eigen::VectorXd::Zero(layer.bias.size()));
    }
  }
};

void sgd_step(DenseNet& net, Velocity& vel, const Gradients& grads, double lr,
              double momentum) {
  for (std::size_t l = 0; l < net.layers.size(); ++l) {
    vel.w[l] = momentum * vel.w[l] - lr * grads.d_weights[l];
    vel.b[l] = momentum * vel.b[l] - lr * grads.d_bias[l];
    net.layers[l].weights += vel.w[l];
    net.layers[l].bias += vel.b[l];
  }
}

void shuffle_indices(std::vector<int>& idx, Rng& rng) {
  for (std::size_t i = idx.size(); i > 1; --i) {
    const std::size_t j = rng() % i;
    std::swap(idx[i - 1], idx[j]);
  }
}

double schedule_lr(const TrainConfig& cfg, int epoch) {
  if (cfg.lr_decay_every <= 0) return cfg.learning_rate;
  return cfg.learning_rate * std::pow(cfg.lr_decay, epoch / cfg.lr_decay_every);
}

void check_finite_loss(double loss, double last_finite) {
  if (!std::isfinite(loss)) throw TrainingDivergedError(last_finite);
}

}  // namespace

DenseNet make_dense_net(int input_dim, const std::vector<int>& hidden_widths,
                        int output_dim, std::uint64_t seed) {
  if (input_dim < 1 || output_dim < 1) throw DimensionError("net dims must be positive");
  std::vector<int> dims{input_dim};
  for (const int w : hidden_widths) {
    if (w < 1) throw DimensionError("hidden width must be positive");
    dims.push_back(w);
  }
  dims.push_back(output_dim);

  DenseNet net;
  for (std::size_t l = 0; l + 1 < dims.size(); ++l) {
    Rng rng = make_rng(seed, l);
    const int fan_in = dims[l];
    const int fan_out = dims[l + 1];
    const double bound = std::sqrt(6.0 / (fan_in + fan_out));
    Layer layer;
    layer.weights.resize(fan_out, fan_in);
    for (int r = 0; r < fan_out; ++r) {
      for (int c = 0; c < fan_in; ++c) {
        layer.weights(r, c) = bound * (2.0 * uniform01(rng) - 1.0);
      }
    }
    layer.bias = Eigen::VectorXd::Zero(fan_out);
    layer.act = (l + 2 < dims.size()) ? Activation::Relu : Activation::Linear;
    net.layers.push_back(std::move(layer));
  }
  return net;
}

Eigen::MatrixXd forward_batch(const DenseNet& net, const Eigen::MatrixXd& input) {
  check_dims(net);
  if (input.rows() != net.input_dim()) {
    throw DimensionError("forward: input dim " + std::to_string(input.rows()) +
                         ", net expects " + std::to_string(net.input_dim()));
  }
  Eigen::MatrixXd a = input;
  for (const auto& layer : net.layers) {
    a = apply_activation((layer.weights * a).colwise() + layer.bias, layer.act);
  }
  return a;
}

Eigen::VectorXd forward(const DenseNet& net, const Eigen::VectorXd& input) {
  return forward_batch(net, input);
}

Gradients backward(const DenseNet& net, const Eigen::MatrixXd& input,
                   const Eigen::MatrixXd& loss_grad) {
  check_dims(net);
  if (input.rows() != net.input_dim() || loss_grad.rows() != net.output_dim() ||
      input.cols() != loss_grad.cols()) {
    throw DimensionError("backward: input/loss_grad shapes inconsistent with net");
  }
  const std::size_t depth = net.layers.size();
  std::vector<Eigen::MatrixXd> pre(depth);   // pre-activation z per layer
  std::vector<Eigen::MatrixXd> post(depth);  // activation a per layer
  Eigen::MatrixXd a = input;
  for (std::size_t l = 0; l < depth; ++l) {
    pre[l] = (net.layers[l].weights * a).colwise() + net.layers[l].bias;
    post[l] = apply_activation(pre[l], net.layers[l].act);
    a = post[l];
  }

  Gradients grads;
  grads.d_weights.resize(depth);
  grads.d_bias.resize(depth);
  Eigen::MatrixXd delta = loss_grad;
  for (std::size_t l = depth; l-- > 0;) {
    if (net.layers[l].act == Activation::Relu) {
      delta = delta.cwiseProduct((pre[l].array() > 0.0).cast<double>().matrix());
    }
    const Eigen::MatrixXd& below = (l == 0) ? input : post[l - 1];
    grads.d_weights[l] = delta * below.transpose();
    grads.d_bias[l] = delta.rowwise().sum();
    if (l > 0) delta = net.layers[l].weights.transpose() * delta;
  }
  return grads;
}

Eigen::VectorXd Normalizer::normalize(const Eigen::VectorXd& v) const {
  if (v.size() != mean.size()) throw DimensionError("normalize: dim mismatch");
  return (v - mean).cwiseQuotient(std);
}

Eigen::VectorXd Normalizer::denormalize(const Eigen::VectorXd& v) const {
  if (v.size() != mean.size()) throw DimensionError("denormalize: dim mismatch");
  return v.cwiseProduct(std) + mean;
}

Normalizer Normalizer::fit(const std::vector<Eigen::VectorXd>& targets) {
  if (targets.empty()) throw DegenerateInputError("normalizer fit: no targets");
  const int dim = static_cast<int>(targets[0].size());
  Eigen::VectorXd mean = Eigen::VectorXd::Zero(dim);
  for (const auto& t : targets) {
    if (t.size() != dim) throw DimensionError("normalizer fit: ragged targets");
    mean += t;
  }
  mean /= static_cast<double>(targets.size());
  Eigen::VectorXd var = Eigen::VectorXd::Zero(dim);
  for (const auto& t : targets) var += (t - mean).cwiseAbs2();
  var /= static_cast<double>(targets.size());
  Normalizer norm;
  norm.mean = std::move(mean);
  norm.std = var.cwiseSqrt().cwiseMax(1e-8);
  return norm;
}

void TrainConfig::validate() const {
  if (batch_size < 1 || epochs < 1) throw Error("train config: batch_size/epochs must be >= 1");
  if (learning_rate < 0.0) throw Error("train config: negative learning rate");
  if (momentum < 0.0 || momentum >= 1.0) throw Error("train config: momentum outside [0, 1)");
  if (val_fraction < 0.0 || val_fraction >= 1.0) {
    throw Error("train config: val_fraction outside [0, 1)");
  }
  for (const double p : noise_aug_levels) {
    if (p < 0.0 || p > 1.0) throw Error("train config: noise level outside [0, 1]");
  }
}

Eigen::VectorXd flatten_heatmaps(const HeatmapStack& h) {
  Eigen::VectorXd v(static_cast<int>(h.cell_count()));
  for (std::size_t i = 0; i < h.cell_count(); ++i) v[static_cast<int>(i)] = h.data[i];
  return v;
}

namespace {

// Shared epoch driver: minibatch SGD over column pairs supplied by a loader,
// with best-validation weight selection.
struct SplitIndices {
  std::vector<int> train;
  std::vector<int> val;
};

SplitIndices split_train_val(int count, double val_fraction) {
  SplitIndices s;
  const int val_count = static_cast<int>(val_fraction * count);
  for (int i = 0; i < count - val_count; ++i) s.train.push_back(i);
  for (int i = count - val_count; i < count; ++i) s.val.push_back(i);
  if (s.train.empty()) throw DegenerateInputError("training split is empty");
  return s;
}

}  // namespace

std::pair<DenseNet, Normalizer> train_interpreter(const std::vector<SynthSample>& data,
                                                  const TrainConfig& cfg, TrainLog* log) {
  cfg.validate();
  if (data.empty()) throw DegenerateInputError("train_interpreter: empty dataset");
  const int in_dim = static_cast<int>(data[0].heatmaps.cell_count());
  const int out_dim = data[0].s_true.size();
  const SplitIndices split = split_train_val(static_cast<int>(data.size()), cfg.val_fraction);

  std::vector<Eigen::VectorXd> train_targets;
  for (const int i : split.train) train_targets.push_back(data[i].s_true.values);
  const Normalizer norm = Normalizer::fit(train_targets);

  DenseNet net = make_dense_net(in_dim, cfg.hidden_widths, out_dim, cfg.seed);
  Velocity vel(net);
  Rng shuffle_rng = make_rng(cfg.seed, 0xABCDu);

  // Validation inputs are clean regardless of augmentation.
  Eigen::MatrixXd val_in(in_dim, static_cast<int>(split.val.size()));
  Eigen::MatrixXd val_target(out_dim, static_cast<int>(split.val.size()));
  for (std::size_t c = 0; c < split.val.size(); ++c) {
    val_in.col(c) = flatten_heatmaps(data[split.val[c]].heatmaps);
    val_target.col(c) = norm.normalize(data[split.val[c]].s_true.values);
  }

  DenseNet best = net;
  double best_val = kInf;
  double last_finite = 0.0;
  std::vector<int> order = split.train;
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    const double lr = schedule_lr(cfg, epoch);
    shuffle_indices(order, shuffle_rng);
    double epoch_sq_sum = 0.0;
    std::size_t epoch_entries = 0;
    for (std::size_t start = 0; start < order.size(); start += cfg.batch_size) {
      const int bsz = static_cast<int>(std::min<std::size_t>(cfg.batch_size,
                                                             order.size() - start));
      Eigen::MatrixXd in(in_dim, bsz);
      Eigen::MatrixXd target(out_dim, bsz);
      for (int c = 0; c < bsz; ++c) {
        const int i = order[start + c];
        if (!cfg.noise_aug_levels.empty()) {
          Rng aug = make_rng(derive_seed(cfg.seed, 0xA06Eu),
                             static_cast<std::uint64_t>(epoch) * data.size() + i);
          const double p = cfg.noise_aug_levels[aug() % cfg.noise_aug_levels.size()];
          in.col(c) = flatten_heatmaps(corrupt_salt_pepper(data[i].heatmaps, p, aug));
        } else {
          in.col(c) = flatten_heatmaps(data[i].heatmaps);
        }
        target.col(c) = norm.normalize(data[i].s_true.values);
      }
      const Eigen::MatrixXd out = forward_batch(net, in);
      const Eigen::MatrixXd diff = out - target;
      epoch_sq_sum += diff.squaredNorm();
      epoch_entries += diff.size();
      const double scale = 2.0 / static_cast<double>(diff.size());
      const Gradients grads = backward(net, in, scale * diff);
      sgd_step(net, vel, grads, lr, cfg.momentum);
    }
    const double train_loss = epoch_sq_sum / static_cast<double>(epoch_entries);
    check_finite_loss(train_loss, last_finite);
    last_finite = train_loss;

    double val_loss = train_loss;
    if (!split.val.empty()) {
      const Eigen::MatrixXd vout = forward_batch(net, val_in);
      val_loss = (vout - val_target).squaredNorm() / static_cast<double>(val_target.size());
      check_finite_loss(val_loss, last_finite);
    }
    if (val_loss < best_val) {
      best_val = val_loss;
      best = net;
    }
    if (log) {
      log->train_loss.push_back(train_loss);
      log->val_loss.push_back(val_loss);
    }
  }
  return {std::move(best), norm};
}

DenseNet train_refiner(const std::vector<SynthSample>& data, const TrainConfig& cfg,
                       TrainLog* log) {
  cfg.validate();
  if (data.empty()) throw DegenerateInputError("train_refiner: empty dataset");
  const int dim = static_cast<int>(data[0].heatmaps.cell_count());
  const std::vector<double> levels =
      cfg.noise_aug_levels.empty() ? std::vector<double>{0.0, 0.1, 0.2, 0.3}
                                   : cfg.noise_aug_levels;
  const SplitIndices split = split_train_val(static_cast<int>(data.size()), cfg.val_fraction);

  DenseNet net = make_dense_net(dim, cfg.hidden_widths, dim, cfg.seed);
  Velocity vel(net);
  Rng shuffle_rng = make_rng(cfg.seed, 0xABCDu);

  // Fixed corrupted validation inputs, one level per sample round-robin.
  Eigen::MatrixXd val_in(dim, static_cast<int>(split.val.size()));
  Eigen::MatrixXd val_target(dim, static_cast<int>(split.val.size()));
  for (std::size_t c = 0; c < split.val.size(); ++c) {
    const int i = split.val[c];
    Rng corrupt_rng = make_rng(derive_seed(cfg.seed, 0xF1DEu), i);
    val_in.col(c) = flatten_heatmaps(
        corrupt_salt_pepper(data[i].heatmaps, levels[c % levels.size()], corrupt_rng));
    val_target.col(c) = flatten_heatmaps(data[i].heatmaps);
  }

  DenseNet best = net;
  double best_val = kInf;
  double last_finite = 0.0;
  std::vector<int> order = split.train;
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    const double lr = schedule_lr(cfg, epoch);
    shuffle_indices(order, shuffle_rng);
    double epoch_sq_sum = 0.0;
    std::size_t epoch_entries = 0;
    for (std::size_t start = 0; start < order.size(); start += cfg.batch_size) {
      const int bsz = static_cast<int>(std::min<std::size_t>(cfg.batch_size,
                                                             order.size() - start));
      Eigen::MatrixXd in(dim, bsz);
      Eigen::MatrixXd target(dim, bsz);
      for (int c = 0; c < bsz; ++c) {
        const int i = order[start + c];
        Rng aug = make_rng(derive_seed(cfg.seed, 0xA06Eu),
                           static_cast<std::uint64_t>(epoch) * data.size() + i);
        const double p = levels[aug() % levels.size()];
        in.col(c) = flatten_heatmaps(corrupt_salt_pepper(data[i].heatmaps, p, aug));
        target.col(c) = flatten_heatmaps(data[i].heatmaps);
      }
      const Eigen::MatrixXd out = forward_batch(net, in);
      const Eigen::MatrixXd diff = out - target;
      epoch_sq_sum += diff.squaredNorm();
      epoch_entries += diff.size();
      const double scale = 2.0 / static_cast<double>(diff.size());
      const Gradients grads = backward(net, in, scale * diff);
      sgd_step(net, vel, grads, lr, cfg.momentum);
    }
    const double train_loss = epoch_sq_sum / static_cast<double>(epoch_entries);
    check_finite_loss(train_loss, last_finite);
    last_finite = train_loss;

    double val_loss = train_loss;
    if (!split.val.empty()) {
      const Eigen::MatrixXd vout = forward_batch(net, val_in);
      val_loss = (vout - val_target).squaredNorm() / static_cast<double>(val_target.size());
      check_finite_loss(val_loss, last_finite);
    }
    if (val_loss < best_val) {
      best_val = val_loss;
      best = net;
    }
    if (log) {
      log->train_loss.push_back(train_loss);
      log->val_loss.push_back(val_loss);
    }
  }
  return best;
}

Sample2D to_sample_2d(const SynthSample& s) {
  return Sample2D{s.heatmaps, s.x_true};
}

ParamVector predict(const DenseNet& net, const Normalizer& norm, const HeatmapStack& h) {
  Eigen::VectorXd out = norm.denormalize(forward(net, flatten_heatmaps(h)));
  out[out.size() - 1] = std::max(0.0, out[out.size() - 1]);
  return ParamVector(std::move(out));
}

HeatmapStack refine_heatmaps(const DenseNet& refiner, const HeatmapStack& h) {
  const Eigen::VectorXd out = forward(refiner, flatten_heatmaps(h));
  HeatmapStack refined(h.channels, h.height, h.width);
  for (std::size_t i = 0; i < refined.cell_count(); ++i) {
    refined.data[i] = static_cast<float>(std::clamp(out[static_cast<int>(i)], 0.0, 1.0));
  }
  return refined;
}

double mean_reprojection_error(const DenseNet& net, const Normalizer& norm,
                               const std::vector<Sample2D>& data,
                               const BaseShapeSet& bases) {
  if (data.empty()) throw DegenerateInputError("mean_reprojection_error: empty set");
  double sum = 0.0;
  int used = 0;
  for (const auto& sample : data) {
    const double cost = reprojection_cost(predict(net, norm, sample.heatmaps),
                                          sample.x_true, bases);
    if (std::isfinite(cost)) {
      sum += cost;
      ++used;
    }
  }
  return used == 0 ? kInf : sum / used;
}

DenseNet finetune_through_projection(const DenseNet& net, const Normalizer& norm,
                                     const std::vector<Sample2D>& data2d,
                                     const BaseShapeSet& bases, const TrainConfig& cfg,
                                     TrainLog* log) {
  cfg.validate();
  if (data2d.empty()) throw DegenerateInputError("finetune: empty dataset");
  const SplitIndices split = split_train_val(static_cast<int>(data2d.size()),
                                             cfg.val_fraction);
  std::vector<Sample2D> heldout;
  for (const int i : split.val) heldout.push_back(data2d[i]);
  const bool track_heldout = !heldout.empty();

  DenseNet current = net;
  DenseNet best = net;
  double best_err = track_heldout ? mean_reprojection_error(net, norm, heldout, bases) : kInf;

  Velocity vel(current);
  Rng shuffle_rng = make_rng(cfg.seed, 0xABCDu);
  double lr = cfg.learning_rate;
  double last_finite = 0.0;
  std::vector<int> order = split.train;
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    shuffle_indices(order, shuffle_rng);
    double epoch_loss_sum = 0.0;
    int epoch_used = 0;
    int epoch_skipped = 0;
    for (std::size_t start = 0; start < order.size(); start += cfg.batch_size) {
      const int bsz = static_cast<int>(std::min<std::size_t>(cfg.batch_size,
                                                             order.size() - start));
      std::vector<Eigen::VectorXd> ins;
      std::vector<Eigen::VectorXd> grads_z;
      for (int c = 0; c < bsz; ++c) {
        const Sample2D& sample = data2d[order[start + c]];
        Eigen::VectorXd in = flatten_heatmaps(sample.heatmaps);
        const Eigen::VectorXd z = forward(current, in);
        ParamVector s(norm.denormalize(z));
        Keypoints2D x_hat;
        int bad = 0;
        if (!try_project_skeleton(s, bases, x_hat, bad)) {
          ++epoch_skipped;
          continue;
        }
        const int n = x_hat.count();
        Eigen::VectorXd dloss_dx(2 * n);
        double loss = 0.0;
        for (int i = 0; i < n; ++i) {
          const Eigen::Vector2d diff = x_hat.coords.col(i) - sample.x_true.coords.col(i);
          loss += diff.squaredNorm();
          dloss_dx[2 * i] = 2.0 * diff[0] / n;
          dloss_dx[2 * i + 1] = 2.0 * diff[1] / n;
        }
        epoch_loss_sum += loss / n;
        ++epoch_used;
        // Chain: d(loss)/dz = std ⊙ (J^T d(loss)/dx); the Jacobian already
        // zeroes the inv_f column when the raw prediction is clamped.
        const Eigen::MatrixXd jac = projection_jacobian(s, bases);
        grads_z.push_back(norm.std.cwiseProduct(jac.transpose() * dloss_dx));
        ins.push_back(std::move(in));
      }
      if (ins.empty()) continue;
      Eigen::MatrixXd in_batch(ins[0].size(), static_cast<int>(ins.size()));
      Eigen::MatrixXd grad_batch(grads_z[0].size(), static_cast<int>(ins.size()));
      for (std::size_t c = 0; c < ins.size(); ++c) {
        in_batch.col(static_cast<int>(c)) = ins[c];
        grad_batch.col(static_cast<int>(c)) = grads_z[c] / static_cast<double>(ins.size());
      }
      const Gradients grads = backward(current, in_batch, grad_batch);
      sgd_step(current, vel, grads, lr, cfg.momentum);
    }
    const int seen = epoch_used + epoch_skipped;
    if (seen > 0 && epoch_skipped > seen / 10) {
      throw Error("finetune: " + std::to_string(epoch_skipped) + " of " +
                  std::to_string(seen) + " samples were depth-singular this epoch");
    }
    const double train_loss = epoch_used > 0 ? epoch_loss_sum / epoch_used : 0.0;
    check_finite_loss(train_loss, last_finite);
    last_finite = train_loss;

    double heldout_err = train_loss;
    if (track_heldout) {
      heldout_err = mean_reprojection_error(current, norm, heldout, bases);
      if (heldout_err < best_err) {
        best_err = heldout_err;
        best = current;
      } else {
        // Revert to the best weights and halve the step; guarantees the
        // returned model is never worse than the input on the held-out set.
        current = best;
        vel = Velocity(current);
        lr *= 0.5;
      }
    } else {
      best = current;
    }
    if (log) {
      log->train_loss.push_back(train_loss);
      log->val_loss.push_back(heldout_err);
      log->extra.push_back(seen > 0 ? static_cast<double>(epoch_skipped) / seen : 0.0);
    }
    if (lr < 1e-10) break;
  }
  return best;
}

}  // namespace wirefit
