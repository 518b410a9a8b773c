#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <utility>
#include <vector>

#include "signscan/features.hpp"
#include "signscan/image.hpp"
#include "signscan/learn.hpp"
#include "signscan/rht.hpp"
#include "signscan/segmentation.hpp"

namespace signscan {

enum class SignShape { Circle, Octagon };
enum class SignColor { Red, Blue };

struct DetectionRecord {
  std::string image_id;
  EllipseParams ellipse;
  double svm_score = 0.0;
  bool accepted = false;
};

struct GroundTruth {
  std::string image_id;
  double cx = 0.0;
  double cy = 0.0;
  double radius = 0.0;
  SignShape shape = SignShape::Circle;
  SignColor color = SignColor::Red;
};

struct MatchCounts {
  long tp = 0;
  long fp = 0;
  long fn = 0;
};

struct SceneConfig {
  int width = 800;
  int height = 600;
  int n_signs = 2;  // 1..3
  int n_distractors = 3;
  double noise_level = 0.05;
  std::uint64_t seed = 0;
};

struct PrPoint {
  double threshold = 0.0;
  double precision = 0.0;
  double recall = 0.0;
};

struct Scene {
  RgbImage image;
  std::vector<GroundTruth> ground_truth;
};

/// Greedy matching in descending score order. A detection matches an unused
/// ground truth of the same image when the center distance is at most half
/// the truth radius and max(A,B)/radius lies in [0.6, 1.4]; among eligible
/// truths the nearest center wins.
MatchCounts match_detections(const std::vector<DetectionRecord>& dets,
                             const std::vector<GroundTruth>& gts);

/// (precision, recall) = (tp/(tp+fp), tp/(tp+fn)); empty denominators give 1.
std::pair<double, double> precision_recall(const MatchCounts& c);

/// One point per distinct score (plus +infinity), thresholds descending;
/// each point rematches the detections with score >= threshold.
std::vector<PrPoint> pr_curve(const std::vector<DetectionRecord>& dets,
                              const std::vector<GroundTruth>& gts);

/// Renders a benchmark frame: gray background with Gaussian intensity noise,
/// n_signs non-overlapping signs (red-rimmed circles, red-rimmed octagons,
/// blue disks; radius 10..30) and n_distractors grate-filled rectangles and
/// irregular blobs in the same two colors. Deterministic in seed.
/// Throws LayoutFailure when a sign cannot be placed in 100 attempts.
Scene synth_scene(const SceneConfig& cfg);

/// The generator's distractor pass alone: same background and distractor
/// rendering, no signs.
RgbImage synth_distractor_scene(const SceneConfig& cfg);

struct PipelineConfig {
  SegmentationConfig seg;
  RhtConfig rht;
};

/// Full detection pipeline over one image: segment red and blue, run the
/// ellipse search per blob (seeded by cfg.rht.rng_seed XOR the blob ordinal),
/// score each candidate's blob texture with the classifier. With classifier
/// null every candidate is emitted accepted, scored by its support.
std::vector<DetectionRecord> run_pipeline(const RgbImage& img, const std::string& image_id,
                                          const PipelineConfig& cfg,
                                          const SignClassifier* classifier);

/// Pipeline candidates of a generated scene, labeled +1 when they match a
/// ground-truth sign under the match_detections gate, else -1.
std::vector<std::pair<FeatureVector, int>> collect_training_samples(const Scene& scene,
                                                                    const PipelineConfig& cfg);

/// Tab-separated records: image_id cx cy a b theta score accepted.
void write_detections(std::ostream& os, const std::vector<DetectionRecord>& dets);
std::vector<DetectionRecord> read_detections(std::istream& is);

/// Tab-separated records: image_id cx cy radius shape color.
void write_ground_truth(std::ostream& os, const std::vector<GroundTruth>& gts);
std::vector<GroundTruth> read_ground_truth(std::istream& is);

/// CSV with a threshold,precision,recall header.
void write_pr_csv(std::ostream& os, const std::vector<PrPoint>& points);

/// Ellipse outline overlay used by the annotate option.
void draw_ellipse(RgbImage& img, const EllipseParams& e, std::uint8_t r, std::uint8_t g,
                  std::uint8_t b);

}  // namespace signscan
