#pragma once

// Synthetic stand-in for the segmentation / keypoint network. Scenes are
// spheres in camera coordinates (x right, y up, z depth, mm); masks are
// their orthographic discs in the x-y image plane.

#include <optional>
#include <vector>

#include <Eigen/Core>

#include "harvestsim/rng.hpp"

namespace harvestsim::perception {

enum class Ripeness { kRipe, kUnripe };

struct SceneObject {
  Eigen::Vector3d center = Eigen::Vector3d::Zero();
  double radius = 25.0;
  Ripeness ripeness = Ripeness::kRipe;
  double occlusion_fraction = 0.0;
  Eigen::Vector3d pedicel = Eigen::Vector3d::Zero();
};

using Scene = std::vector<SceneObject>;

struct Circle {
  Eigen::Vector2d center = Eigen::Vector2d::Zero();
  double radius = 1.0;
};

struct Detection {
  Circle mask;
  Ripeness ripeness = Ripeness::kRipe;
  double score = 1.0;
  Eigen::Vector3d center_keypoint = Eigen::Vector3d::Zero();
  Eigen::Vector3d pedicel_keypoint = Eigen::Vector3d::Zero();
  /// Index of the scene object this came from; empty for false positives.
  /// Bookkeeping for tests only: evaluation never reads it.
  std::optional<std::size_t> source;
};

struct NoiseModel {
  double keypoint_sigma = 0.0;   // mm, per image-plane axis
  double depth_sigma = 0.0;      // mm, along the viewing axis
  double miss_rate = 0.0;
  double false_positive_rate = 0.0;  // expected false positives per scene
  double ripeness_confusion = 0.0;
  double occlusion_miss_gain = 0.0;
};

void validate(const NoiseModel& noise);

struct SceneParams {
  Eigen::Vector3d volume_min{-150.0, -150.0, 400.0};
  Eigen::Vector3d volume_max{150.0, 150.0, 600.0};
  double radius_min = 21.5;
  double radius_max = 28.5;
  double stem_offset_fraction = 0.3;  // pedicel sits radius * (1 + f) above the center
  double ripe_fraction = 0.6;
  int max_attempts = 1000;            // per object
};

void validate(const SceneParams& params);

Circle project(const SceneObject& object);

/// Rejection-sampled non-overlapping spheres; occlusion is the share of each
/// disc covered by discs of nearer objects (capped at 1).
Scene generate_scene(int n_tomatoes, const SceneParams& params, Rng& rng);

std::vector<Detection> simulate_detections(const Scene& scene, const NoiseModel& noise,
                                           const SceneParams& params, Rng& rng);

/// Exact intersection over union of two discs.
double circle_iou(const Circle& a, const Circle& b);

/// One scene with the detections produced for it.
struct Frame {
  Scene ground_truth;
  std::vector<Detection> detections;
};

struct DetectionMetrics {
  double precision = 0.0;
  double recall = 0.0;
  double mask_ap = 0.0;  // mean over IoU 0.50:0.05:0.95
  std::size_t true_positives = 0;
  std::size_t false_positives = 0;
  std::size_t false_negatives = 0;
};

/// IoU thresholds 0.50, 0.55, ..., 0.95.
std::vector<double> coco_thresholds();

/// Greedy score-descending matching per ripeness class within each frame.
/// Precision and recall at `iou_threshold`; mask AP averaged over classes
/// present in the ground truth and over the ten COCO thresholds, using
/// all-point interpolation. Zero detections give precision 0.
DetectionMetrics evaluate(const std::vector<Frame>& frames, double iou_threshold);
DetectionMetrics evaluate(const Scene& gt, const std::vector<Detection>& dets,
                          double iou_threshold);

struct KeypointError {
  double center_mean = 0.0;
  double center_max = 0.0;
  double pedicel_mean = 0.0;
  double pedicel_max = 0.0;
  std::size_t pairs = 0;
};

/// Euclidean keypoint errors over matched pairs (IoU >= 0.5, same class);
/// empty when nothing matched.
std::optional<KeypointError> keypoint_error(const std::vector<Frame>& frames);
std::optional<KeypointError> keypoint_error(const Scene& gt,
                                            const std::vector<Detection>& dets);

}  // namespace harvestsim::perception
