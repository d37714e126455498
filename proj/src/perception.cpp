#include "harvestsim/perception.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numbers>

#include "harvestsim/error.hpp"

namespace harvestsim::perception {
namespace {

constexpr double kPi = std::numbers::pi;

[[noreturn]] void invalid(const std::string& what) {
  throw Error(ErrorKind::kInvalidArgument, what);
}

double lens_area(const Circle& a, const Circle& b) {
  const double d = (a.center - b.center).norm();
  const double r1 = a.radius, r2 = b.radius;
  if (d >= r1 + r2) return 0.0;
  if (d <= std::abs(r1 - r2)) {
    const double r = std::min(r1, r2);
    return kPi * r * r;
  }
  const double c1 = std::clamp((d * d + r1 * r1 - r2 * r2) / (2.0 * d * r1), -1.0, 1.0);
  const double c2 = std::clamp((d * d + r2 * r2 - r1 * r1) / (2.0 * d * r2), -1.0, 1.0);
  const double kite = (-d + r1 + r2) * (d + r1 - r2) * (d - r1 + r2) * (d + r1 + r2);
  return r1 * r1 * std::acos(c1) + r2 * r2 * std::acos(c2) - 0.5 * std::sqrt(std::max(0.0, kite));
}

}  // namespace

void validate(const NoiseModel& n) {
  if (!(n.keypoint_sigma >= 0.0 && n.depth_sigma >= 0.0)) invalid("noise: sigmas must be >= 0");
  if (!(n.miss_rate >= 0.0 && n.miss_rate <= 1.0)) invalid("noise: miss_rate must be in [0, 1]");
  if (!(n.false_positive_rate >= 0.0)) invalid("noise: false_positive_rate must be >= 0");
  if (!(n.ripeness_confusion >= 0.0 && n.ripeness_confusion < 1.0)) {
    invalid("noise: ripeness_confusion must be in [0, 1)");
  }
  if (!(n.occlusion_miss_gain >= 0.0)) invalid("noise: occlusion_miss_gain must be >= 0");
}

void validate(const SceneParams& p) {
  if (!((p.volume_min.array() < p.volume_max.array()).all())) {
    invalid("scene: work volume is empty");
  }
  if (!(p.radius_min > 0.0 && p.radius_min <= p.radius_max)) invalid("scene: bad radius range");
  if (!(p.stem_offset_fraction >= 0.0 && p.stem_offset_fraction <= 0.5)) {
    invalid("scene: stem_offset_fraction must be in [0, 0.5]");
  }
  if (!(p.ripe_fraction >= 0.0 && p.ripe_fraction <= 1.0)) invalid("scene: ripe_fraction in [0, 1]");
  if (p.max_attempts < 1) invalid("scene: max_attempts must be >= 1");
}

Circle project(const SceneObject& o) { return {o.center.head<2>(), o.radius}; }

Scene generate_scene(int n_tomatoes, const SceneParams& p, Rng& rng) {
  if (n_tomatoes < 1) invalid("generate_scene: need at least one tomato");
  validate(p);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  Scene scene;
  scene.reserve(static_cast<std::size_t>(n_tomatoes));
  for (int i = 0; i < n_tomatoes; ++i) {
    bool placed = false;
    for (int attempt = 0; attempt < p.max_attempts && !placed; ++attempt) {
      SceneObject o;
      for (int k = 0; k < 3; ++k) {
        o.center(k) = p.volume_min(k) + unit(rng) * (p.volume_max(k) - p.volume_min(k));
      }
      o.radius = p.radius_min + unit(rng) * (p.radius_max - p.radius_min);
      o.ripeness = unit(rng) < p.ripe_fraction ? Ripeness::kRipe : Ripeness::kUnripe;
      const bool overlaps = std::any_of(scene.begin(), scene.end(), [&](const SceneObject& other) {
        return (other.center - o.center).norm() <= other.radius + o.radius;
      });
      if (overlaps) continue;
      o.pedicel = o.center + Eigen::Vector3d(0.0, o.radius * (1.0 + p.stem_offset_fraction), 0.0);
      scene.push_back(o);
      placed = true;
    }
    if (!placed) {
      throw Error(ErrorKind::kPlacementFailed,
                  "could not place tomato " + std::to_string(i + 1) + " without overlap");
    }
  }
  for (SceneObject& o : scene) {
    const Circle disc = project(o);
    double covered = 0.0;
    for (const SceneObject& other : scene) {
      if (other.center.z() < o.center.z()) covered += lens_area(disc, project(other));
    }
    o.occlusion_fraction = std::min(1.0, covered / (kPi * o.radius * o.radius));
  }
  return scene;
}

std::vector<Detection> simulate_detections(const Scene& scene, const NoiseModel& noise,
                                           const SceneParams& params, Rng& rng) {
  validate(noise);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::normal_distribution<double> gauss(0.0, 1.0);
  std::vector<Detection> dets;
  for (std::size_t i = 0; i < scene.size(); ++i) {
    const SceneObject& o = scene[i];
    // Fixed draw count per object keeps streams aligned across noise levels.
    const double miss_draw = unit(rng);
    const double flip_draw = unit(rng);
    const Eigen::Vector3d z_center(gauss(rng), gauss(rng), gauss(rng));
    const Eigen::Vector3d z_pedicel(gauss(rng), gauss(rng), gauss(rng));
    const double z_score = gauss(rng);

    const double p_miss = std::min(1.0, noise.miss_rate + noise.occlusion_miss_gain * o.occlusion_fraction);
    if (miss_draw < p_miss) continue;

    const Eigen::Vector3d scale(noise.keypoint_sigma, noise.keypoint_sigma, noise.depth_sigma);
    Detection d;
    d.center_keypoint = o.center + scale.cwiseProduct(z_center);
    d.pedicel_keypoint = o.pedicel + scale.cwiseProduct(z_pedicel);
    d.mask = {d.center_keypoint.head<2>(), o.radius};
    d.ripeness = o.ripeness;
    if (flip_draw < noise.ripeness_confusion) {
      d.ripeness = o.ripeness == Ripeness::kRipe ? Ripeness::kUnripe : Ripeness::kRipe;
    }
    d.score = std::clamp(0.9 - 0.4 * o.occlusion_fraction + 0.05 * z_score, 0.0, 1.0);
    d.source = i;
    dets.push_back(d);
  }
  if (noise.false_positive_rate > 0.0) {
    std::poisson_distribution<int> count(noise.false_positive_rate);
    const int n_fp = count(rng);
    for (int k = 0; k < n_fp; ++k) {
      Detection d;
      Eigen::Vector3d c;
      for (int axis = 0; axis < 3; ++axis) {
        c(axis) = params.volume_min(axis) + unit(rng) * (params.volume_max(axis) - params.volume_min(axis));
      }
      const double radius = params.radius_min + unit(rng) * (params.radius_max - params.radius_min);
      d.center_keypoint = c;
      d.pedicel_keypoint = c + Eigen::Vector3d(0.0, radius, 0.0);
      d.mask = {c.head<2>(), radius};
      d.ripeness = unit(rng) < 0.5 ? Ripeness::kRipe : Ripeness::kUnripe;
      d.score = 0.05 + 0.55 * unit(rng);
      dets.push_back(d);
    }
  }
  return dets;
}

double circle_iou(const Circle& a, const Circle& b) {
  if (!(a.radius > 0.0 && b.radius > 0.0)) invalid("circle_iou: radii must be positive");
  const double inter = lens_area(a, b);
  const double uni = kPi * (a.radius * a.radius + b.radius * b.radius) - inter;
  return std::clamp(inter / uni, 0.0, 1.0);
}

std::vector<double> coco_thresholds() {
  std::vector<double> t;
  for (int i = 0; i < 10; ++i) t.push_back(0.50 + 0.05 * i);
  return t;
}

namespace {

struct RankedDetection {
  std::size_t frame;
  std::size_t index;
  double score;
};

// Detections of one class, score-descending; ties keep frame/index order.
std::vector<RankedDetection> ranked(const std::vector<Frame>& frames, Ripeness cls) {
  std::vector<RankedDetection> out;
  for (std::size_t f = 0; f < frames.size(); ++f) {
    for (std::size_t i = 0; i < frames[f].detections.size(); ++i) {
      if (frames[f].detections[i].ripeness == cls) out.push_back({f, i, frames[f].detections[i].score});
    }
  }
  std::stable_sort(out.begin(), out.end(),
                   [](const RankedDetection& a, const RankedDetection& b) { return a.score > b.score; });
  return out;
}

struct ClassMatch {
  std::vector<bool> is_tp;  // aligned with the ranked order
  // (frame, gt index) matched to each true positive, for keypoint errors.
  std::vector<std::pair<std::size_t, std::size_t>> gt_of;
  std::size_t n_gt = 0;
};

ClassMatch match_class(const std::vector<Frame>& frames, const std::vector<RankedDetection>& order,
                       Ripeness cls, double threshold) {
  ClassMatch m;
  std::vector<std::vector<bool>> taken(frames.size());
  for (std::size_t f = 0; f < frames.size(); ++f) {
    taken[f].assign(frames[f].ground_truth.size(), false);
    for (const auto& o : frames[f].ground_truth) m.n_gt += o.ripeness == cls ? 1 : 0;
  }
  m.is_tp.reserve(order.size());
  m.gt_of.reserve(order.size());
  for (const RankedDetection& rd : order) {
    const Frame& frame = frames[rd.frame];
    const Circle& mask = frame.detections[rd.index].mask;
    double best_iou = threshold;
    std::size_t best = frame.ground_truth.size();
    for (std::size_t g = 0; g < frame.ground_truth.size(); ++g) {
      if (taken[rd.frame][g] || frame.ground_truth[g].ripeness != cls) continue;
      const double iou = circle_iou(mask, project(frame.ground_truth[g]));
      if (iou >= best_iou) {
        best_iou = iou;
        best = g;
      }
    }
    const bool tp = best < frame.ground_truth.size();
    if (tp) taken[rd.frame][best] = true;
    m.is_tp.push_back(tp);
    m.gt_of.emplace_back(rd.frame, best);
  }
  return m;
}

// Area under the precision envelope (all-point interpolation).
double average_precision(const std::vector<bool>& is_tp, std::size_t n_gt) {
  if (n_gt == 0) return 0.0;
  std::vector<double> recall, precision;
  std::size_t tp = 0;
  for (std::size_t i = 0; i < is_tp.size(); ++i) {
    tp += is_tp[i] ? 1 : 0;
    recall.push_back(static_cast<double>(tp) / static_cast<double>(n_gt));
    precision.push_back(static_cast<double>(tp) / static_cast<double>(i + 1));
  }
  for (std::size_t i = precision.size(); i-- > 1;) {
    precision[i - 1] = std::max(precision[i - 1], precision[i]);
  }
  double ap = 0.0, prev_recall = 0.0;
  for (std::size_t i = 0; i < recall.size(); ++i) {
    ap += (recall[i] - prev_recall) * precision[i];
    prev_recall = recall[i];
  }
  return ap;
}

constexpr Ripeness kClasses[] = {Ripeness::kRipe, Ripeness::kUnripe};

}  // namespace

DetectionMetrics evaluate(const std::vector<Frame>& frames, double iou_threshold) {
  if (!(iou_threshold > 0.0 && iou_threshold < 1.0)) {
    invalid("evaluate: iou_threshold must be in (0, 1)");
  }
  DetectionMetrics m;
  std::size_t n_det = 0, n_gt = 0;
  for (const Frame& f : frames) {
    n_det += f.detections.size();
    n_gt += f.ground_truth.size();
  }
  double ap_sum = 0.0;
  int ap_classes = 0;
  for (const Ripeness cls : kClasses) {
    const auto order = ranked(frames, cls);
    const ClassMatch at_threshold = match_class(frames, order, cls, iou_threshold);
    m.true_positives += static_cast<std::size_t>(
        std::count(at_threshold.is_tp.begin(), at_threshold.is_tp.end(), true));
    if (at_threshold.n_gt == 0) continue;
    double class_ap = 0.0;
    for (const double t : coco_thresholds()) {
      const ClassMatch cm = match_class(frames, order, cls, t);
      class_ap += average_precision(cm.is_tp, cm.n_gt);
    }
    ap_sum += class_ap / static_cast<double>(coco_thresholds().size());
    ++ap_classes;
  }
  m.false_positives = n_det - m.true_positives;
  m.false_negatives = n_gt - m.true_positives;
  m.precision = n_det > 0 ? static_cast<double>(m.true_positives) / static_cast<double>(n_det) : 0.0;
  m.recall = n_gt > 0 ? static_cast<double>(m.true_positives) / static_cast<double>(n_gt) : 0.0;
  m.mask_ap = ap_classes > 0 ? ap_sum / ap_classes : 0.0;
  return m;
}

DetectionMetrics evaluate(const Scene& gt, const std::vector<Detection>& dets,
                          double iou_threshold) {
  return evaluate(std::vector<Frame>{{gt, dets}}, iou_threshold);
}

std::optional<KeypointError> keypoint_error(const std::vector<Frame>& frames) {
  KeypointError e;
  double center_sum = 0.0, pedicel_sum = 0.0;
  for (const Ripeness cls : kClasses) {
    const auto order = ranked(frames, cls);
    const ClassMatch cm = match_class(frames, order, cls, 0.5);
    for (std::size_t i = 0; i < order.size(); ++i) {
      if (!cm.is_tp[i]) continue;
      const auto [f, g] = cm.gt_of[i];
      const Detection& d = frames[f].detections[order[i].index];
      const SceneObject& o = frames[f].ground_truth[g];
      const double ce = (d.center_keypoint - o.center).norm();
      const double pe = (d.pedicel_keypoint - o.pedicel).norm();
      center_sum += ce;
      pedicel_sum += pe;
      e.center_max = std::max(e.center_max, ce);
      e.pedicel_max = std::max(e.pedicel_max, pe);
      ++e.pairs;
    }
  }
  if (e.pairs == 0) return std::nullopt;
  e.center_mean = center_sum / static_cast<double>(e.pairs);
  e.pedicel_mean = pedicel_sum / static_cast<double>(e.pairs);
  return e;
}

std::optional<KeypointError> keypoint_error(const Scene& gt, const std::vector<Detection>& dets) {
  return keypoint_error(std::vector<Frame>{{gt, dets}});
}

}  // namespace harvestsim::perception
