#pragma once

#include <vector>

#include "wirefit/fit.hpp"
#include "wirefit/net.hpp"

namespace wirefit {

// Root mean squared keypoint distance after dividing both shapes by
// diagonal_length(y_true).
double rmse_3d(const Shape3D& y_hat, const Shape3D& y_true);

// Wrapped absolute difference in degrees, in [0, 180].
double azimuth_error(double az_hat_rad, double az_true_rad);

struct RecallCurve {
  std::vector<double> thresholds;
  std::vector<double> recall;  // fraction with error <= threshold (inclusive)
  double average_recall = 0.0;
};

RecallCurve recall_curve(const std::vector<double>& errors,
                         const std::vector<double>& thresholds);

// Fraction of keypoints with distance / normalizer <= t (inclusive), pooled
// over all samples.
double pck(const std::vector<Keypoints2D>& pred, const std::vector<Keypoints2D>& gt,
           double normalizer, double t);

// Percent of keypoints with distance <= 1.5 * stds[k] (inclusive).
double pcp(const std::vector<Keypoints2D>& pred, const std::vector<Keypoints2D>& gt,
           const std::vector<double>& stds);

// Mean keypoint distance with each distance saturated at bound.
double average_error(const std::vector<Keypoints2D>& pred,
                     const std::vector<Keypoints2D>& gt, double bound = 5.0);

struct SweepRow {
  double noise_level;
  std::string method;  // "fit" or "net"
  double mean_rmse_3d;
  double mean_azimuth_error_deg;
};

// Corrupts each sample's heatmaps at every level, recovers parameters with
// both the optimizer and the network, and averages the errors. Rows come out
// level-major, "fit" before "net".
std::vector<SweepRow> noise_sweep(const std::vector<SynthSample>& data,
                                  const BaseShapeSet& bases, const DenseNet& net,
                                  const Normalizer& norm, const std::vector<double>& levels,
                                  const FitConfig& fit_cfg, std::uint64_t seed,
                                  int threads = 1);

// Indices of the k nearest gallery entries by Euclidean distance in
// alpha_free space; ties broken by ascending index.
std::vector<int> retrieve_by_structure(const ParamVector& query,
                                       const std::vector<ParamVector>& gallery, int k);

// Same ranking under the geodesic rotation distance
// acos((trace(R_q^T R_g) - 1) / 2).
std::vector<int> retrieve_by_viewpoint(const ParamVector& query,
                                       const std::vector<ParamVector>& gallery, int k);

}  // namespace wirefit
