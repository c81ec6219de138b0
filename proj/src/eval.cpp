#include "wirefit/eval.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <mutex>
#include <numeric>
#include <thread>

namespace wirefit {

double rmse_3d(const Shape3D& y_hat, const Shape3D& y_true) {
  if (y_hat.coords.cols() != y_true.coords.cols()) {
    throw DimensionError("rmse_3d: keypoint count mismatch");
  }
  const double diag = diagonal_length(y_true);
  if (diag <= 0.0) throw DegenerateInputError("rmse_3d: degenerate ground truth");
  const int n = static_cast<int>(y_true.coords.cols());
  double sum = 0.0;
  for (int i = 0; i < n; ++i) {
    sum += ((y_hat.coords.col(i) - y_true.coords.col(i)) / diag).squaredNorm();
  }
  return std::sqrt(sum / n);
}

double azimuth_error(double az_hat_rad, double az_true_rad) {
  const double deg = std::abs(az_hat_rad - az_true_rad) * (180.0 / 3.14159265358979323846);
  const double wrapped = std::fmod(deg, 360.0);
  return std::min(wrapped, 360.0 - wrapped);
}

RecallCurve recall_curve(const std::vector<double>& errors,
                         const std::vector<double>& thresholds) {
  if (errors.empty()) throw DegenerateInputError("recall_curve: no errors");
  if (thresholds.empty()) throw DegenerateInputError("recall_curve: no thresholds");
  RecallCurve curve;
  curve.thresholds = thresholds;
  for (const double t : thresholds) {
    int hits = 0;
    for (const double e : errors) hits += (e <= t);
    curve.recall.push_back(static_cast<double>(hits) / errors.size());
  }
  curve.average_recall =
      std::accumulate(curve.recall.begin(), curve.recall.end(), 0.0) / curve.recall.size();
  return curve;
}

namespace {

void check_paired(const std::vector<Keypoints2D>& pred, const std::vector<Keypoints2D>& gt) {
  if (pred.size() != gt.size()) throw DimensionError("keypoint set count mismatch");
  if (pred.empty()) throw DegenerateInputError("empty keypoint sets");
  for (std::size_t i = 0; i < pred.size(); ++i) {
    if (pred[i].count() != gt[i].count()) {
      throw DimensionError("sample " + std::to_string(i) + ": keypoint count mismatch");
    }
  }
}

}  // namespace

double pck(const std::vector<Keypoints2D>& pred, const std::vector<Keypoints2D>& gt,
           double normalizer, double t) {
  check_paired(pred, gt);
  if (normalizer <= 0.0) throw DegenerateInputError("pck: normalizer must be positive");
  int hits = 0, total = 0;
  for (std::size_t s = 0; s < pred.size(); ++s) {
    for (int i = 0; i < pred[s].count(); ++i) {
      const double d = (pred[s].coords.col(i) - gt[s].coords.col(i)).norm();
      hits += (d / normalizer <= t);
      ++total;
    }
  }
  return static_cast<double>(hits) / total;
}

double pcp(const std::vector<Keypoints2D>& pred, const std::vector<Keypoints2D>& gt,
           const std::vector<double>& stds) {
  check_paired(pred, gt);
  if (static_cast<int>(stds.size()) != pred[0].count()) {
    throw DimensionError("pcp: stds size does not match keypoint count");
  }
  for (const double s : stds) {
    if (s <= 0.0) throw DegenerateInputError("pcp: stds must be positive");
  }
  int hits = 0, total = 0;
  for (std::size_t s = 0; s < pred.size(); ++s) {
    for (int i = 0; i < pred[s].count(); ++i) {
      const double d = (pred[s].coords.col(i) - gt[s].coords.col(i)).norm();
      hits += (d <= 1.5 * stds[i]);
      ++total;
    }
  }
  return 100.0 * hits / total;
}

double average_error(const std::vector<Keypoints2D>& pred,
                     const std::vector<Keypoints2D>& gt, double bound) {
  check_paired(pred, gt);
  double sum = 0.0;
  int total = 0;
  for (std::size_t s = 0; s < pred.size(); ++s) {
    for (int i = 0; i < pred[s].count(); ++i) {
      sum += std::min((pred[s].coords.col(i) - gt[s].coords.col(i)).norm(), bound);
      ++total;
    }
  }
  return sum / total;
}

std::vector<SweepRow> noise_sweep(const std::vector<SynthSample>& data,
                                  const BaseShapeSet& bases, const DenseNet& net,
                                  const Normalizer& norm, const std::vector<double>& levels,
                                  const FitConfig& fit_cfg, std::uint64_t seed,
                                  int threads) {
  if (data.empty()) throw DegenerateInputError("noise_sweep: empty test set");
  const int count = static_cast<int>(data.size());

  std::vector<SweepRow> rows;
  for (std::size_t li = 0; li < levels.size(); ++li) {
    const double p = levels[li];
    std::vector<double> fit_rmse(count), fit_az(count), net_rmse(count), net_az(count);

    auto run_sample = [&](int i) {
      Rng rng = make_rng(derive_seed(seed, li), i);
      const HeatmapStack corrupted =
          p > 0.0 ? corrupt_salt_pepper(data[i].heatmaps, p, rng) : data[i].heatmaps;
      auto [sp_true, cam_true] = data[i].s_true.decode();
      const Shape3D y_true = compose_skeleton(sp_true, bases);

      FitConfig cfg = fit_cfg;
      cfg.seed = derive_seed(fit_cfg.seed, static_cast<std::uint64_t>(li) * count + i);
      const FitResult fr = fit_from_heatmaps(corrupted, bases, cfg);
      auto [sp_fit, cam_fit] = fr.s_hat.decode();
      fit_rmse[i] = rmse_3d(compose_skeleton(sp_fit, bases), y_true);
      fit_az[i] = azimuth_error(cam_fit.azimuth, cam_true.azimuth);

      const ParamVector s_net = predict(net, norm, corrupted);
      auto [sp_net, cam_net] = s_net.decode();
      net_rmse[i] = rmse_3d(compose_skeleton(sp_net, bases), y_true);
      net_az[i] = azimuth_error(cam_net.azimuth, cam_true.azimuth);
    };

    const int workers = std::max(1, std::min(threads, count));
    if (workers == 1) {
      for (int i = 0; i < count; ++i) run_sample(i);
    } else {
      std::atomic<int> next{0};
      std::exception_ptr failure;
      std::mutex failure_mu;
      std::vector<std::thread> pool;
      for (int w = 0; w < workers; ++w) {
        pool.emplace_back([&]() {
          try {
            for (int i = next.fetch_add(1); i < count; i = next.fetch_add(1)) run_sample(i);
          } catch (...) {
            std::lock_guard<std::mutex> lock(failure_mu);
            if (!failure) failure = std::current_exception();
          }
        });
      }
      for (auto& t : pool) t.join();
      if (failure) std::rethrow_exception(failure);
    }

    const auto mean = [count](const std::vector<double>& v) {
      return std::accumulate(v.begin(), v.end(), 0.0) / count;
    };
    rows.push_back({p, "fit", mean(fit_rmse), mean(fit_az)});
    rows.push_back({p, "net", mean(net_rmse), mean(net_az)});
  }
  return rows;
}

namespace {

std::vector<int> rank_by_distance(const std::vector<double>& dist, int k) {
  std::vector<int> order(dist.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](int a, int b) { return dist[a] < dist[b]; });
  order.resize(std::min<std::size_t>(k, order.size()));
  return order;
}

}  // namespace

std::vector<int> retrieve_by_structure(const ParamVector& query,
                                       const std::vector<ParamVector>& gallery, int k) {
  if (gallery.empty()) throw DegenerateInputError("retrieve: empty gallery");
  const int kfree = query.num_alpha_free();
  std::vector<double> dist(gallery.size());
  for (std::size_t g = 0; g < gallery.size(); ++g) {
    if (gallery[g].size() != query.size()) throw DimensionError("retrieve: size mismatch");
    double sum = 0.0;
    for (int i = 0; i < kfree; ++i) {
      const double d = query.alpha_free(i) - gallery[g].alpha_free(i);
      sum += d * d;
    }
    dist[g] = std::sqrt(sum);
  }
  return rank_by_distance(dist, k);
}

std::vector<int> retrieve_by_viewpoint(const ParamVector& query,
                                       const std::vector<ParamVector>& gallery, int k) {
  if (gallery.empty()) throw DegenerateInputError("retrieve: empty gallery");
  const Eigen::Matrix3d rq = rotation_matrix(query.decode().second);
  std::vector<double> dist(gallery.size());
  for (std::size_t g = 0; g < gallery.size(); ++g) {
    if (gallery[g].size() != query.size()) throw DimensionError("retrieve: size mismatch");
    const Eigen::Matrix3d rg = rotation_matrix(gallery[g].decode().second);
    const double c = std::clamp(((rq.transpose() * rg).trace() - 1.0) / 2.0, -1.0, 1.0);
    dist[g] = std::acos(c);
  }
  return rank_by_distance(dist, k);
}

}  // namespace wirefit
