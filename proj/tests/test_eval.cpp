#include <cmath>
#include <limits>
#include <sstream>
#include <string>
#include <vector>

#include "doctest.h"
#include "signscan/errors.hpp"
#include "signscan/eval.hpp"
#include "signscan/rng.hpp"

using namespace signscan;

namespace {

DetectionRecord make_det(const std::string& id, double cx, double cy, double a, double b, double score) {
  DetectionRecord d;
  d.image_id = id;
  d.ellipse.center = {cx, cy};
  d.ellipse.semi_major = a;
  d.ellipse.semi_minor = b;
  d.svm_score = score;
  d.accepted = true;
  return d;
}

GroundTruth make_gt(const std::string& id, double cx, double cy, double r) {
  GroundTruth g;
  g.image_id = id;
  g.cx = cx;
  g.cy = cy;
  g.radius = r;
  return g;
}

RgbImage gray_image(int w, int h) {
  RgbImage img(w, h);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) img.set_pixel(x, y, 128, 128, 128);
  }
  return img;
}

void paint_disk(RgbImage& img, int cx, int cy, int r, std::uint8_t cr, std::uint8_t cg, std::uint8_t cb) {
  for (int y = cy - r; y <= cy + r; ++y) {
    for (int x = cx - r; x <= cx + r; ++x) {
      if (img.in_bounds(x, y) && (x - cx) * (x - cx) + (y - cy) * (y - cy) <= r * r) {
        img.set_pixel(x, y, cr, cg, cb);
      }
    }
  }
}

}  // namespace

TEST_SUITE("eval") {

TEST_CASE("match_detections: exact hit") {
  const auto c = match_detections({make_det("a", 50, 50, 20, 20, 1.0)}, {make_gt("a", 50, 50, 20)});
  CHECK(c.tp == 1);
  CHECK(c.fp == 0);
  CHECK(c.fn == 0);
}

TEST_CASE("match_detections: center gate at half the radius") {
  const auto near = match_detections({make_det("a", 59, 50, 20, 20, 1.0)}, {make_gt("a", 50, 50, 20)});
  CHECK(near.tp == 1);
  const auto far = match_detections({make_det("a", 61, 50, 20, 20, 1.0)}, {make_gt("a", 50, 50, 20)});
  CHECK(far.tp == 0);
  CHECK(far.fp == 1);
  CHECK(far.fn == 1);
}

TEST_CASE("match_detections: size gate on the larger axis") {
  CHECK(match_detections({make_det("a", 50, 50, 12, 10, 1.0)}, {make_gt("a", 50, 50, 20)}).tp == 1);
  CHECK(match_detections({make_det("a", 50, 50, 11.9, 10, 1.0)}, {make_gt("a", 50, 50, 20)}).tp == 0);
  CHECK(match_detections({make_det("a", 50, 50, 28, 20, 1.0)}, {make_gt("a", 50, 50, 20)}).tp == 1);
  CHECK(match_detections({make_det("a", 50, 50, 28.1, 20, 1.0)}, {make_gt("a", 50, 50, 20)}).tp == 0);
}

TEST_CASE("match_detections: greedy by score, nearest truth first") {
  // the high-score detection gates with both truths and grabs the nearer one,
  // leaving the low-score detection with nothing it can match
  const std::vector<DetectionRecord> dets = {
      make_det("a", 1, 0, 20, 20, 1.0),  // gates only with the truth at 0
      make_det("a", 7, 0, 20, 20, 5.0),  // gates with both, nearer to 0
  };
  const std::vector<GroundTruth> gts = {make_gt("a", 0, 0, 20), make_gt("a", 16, 0, 20)};
  const auto c = match_detections(dets, gts);
  CHECK(c.tp == 1);
  CHECK(c.fp == 1);
  CHECK(c.fn == 1);
}

TEST_CASE("match_detections: one truth is used once") {
  const std::vector<DetectionRecord> dets = {
      make_det("a", 50, 50, 20, 20, 2.0), make_det("a", 52, 50, 20, 20, 1.0)};
  const auto c = match_detections(dets, {make_gt("a", 50, 50, 20)});
  CHECK(c.tp == 1);
  CHECK(c.fp == 1);
  CHECK(c.fn == 0);
}

TEST_CASE("match_detections: image ids separate the scenes") {
  const auto c = match_detections({make_det("b", 50, 50, 20, 20, 1.0)}, {make_gt("a", 50, 50, 20)});
  CHECK(c.tp == 0);
  CHECK(c.fp == 1);
  CHECK(c.fn == 1);
}

TEST_CASE("precision_recall: basic and empty-denominator cases") {
  const auto pr = precision_recall({3, 1, 2});
  CHECK(pr.first == doctest::Approx(0.75).epsilon(1e-15));
  CHECK(pr.second == doctest::Approx(0.6).epsilon(1e-15));
  CHECK(precision_recall({0, 0, 0}) == std::pair{1.0, 1.0});
  CHECK(precision_recall({0, 5, 0}) == std::pair{0.0, 1.0});
  CHECK(precision_recall({0, 0, 5}) == std::pair{1.0, 0.0});
}

TEST_CASE("pr_curve: perfect detector sweeps to full recall") {
  const std::vector<GroundTruth> gts = {make_gt("a", 50, 50, 20), make_gt("a", 150, 50, 20)};
  const std::vector<DetectionRecord> dets = {
      make_det("a", 50, 50, 20, 20, 2.0), make_det("a", 150, 50, 20, 20, 1.0)};
  const auto curve = pr_curve(dets, gts);
  REQUIRE(curve.size() == 3);
  CHECK(std::isinf(curve[0].threshold));
  CHECK(curve[0].precision == 1.0);
  CHECK(curve[0].recall == 0.0);
  CHECK(curve[1].threshold == 2.0);
  CHECK(curve[1].precision == 1.0);
  CHECK(curve[1].recall == 0.5);
  CHECK(curve[2].threshold == 1.0);
  CHECK(curve[2].precision == 1.0);
  CHECK(curve[2].recall == 1.0);
}

TEST_CASE("pr_curve: junk detections never gain recall") {
  const std::vector<GroundTruth> gts = {make_gt("a", 50, 50, 20)};
  const std::vector<DetectionRecord> dets = {
      make_det("a", 300, 300, 20, 20, 2.0), make_det("a", 400, 100, 20, 20, 1.0)};
  const auto curve = pr_curve(dets, gts);
  REQUIRE(curve.size() == 3);
  CHECK(curve[1].precision == 0.0);
  CHECK(curve[1].recall == 0.0);
  CHECK(curve[2].precision == 0.0);
}

TEST_CASE("pr_curve: points agree with filtered rematches") {
  Rng rng(12);
  std::vector<GroundTruth> gts;
  for (int i = 0; i < 5; ++i) gts.push_back(make_gt("a", 40.0 + 60.0 * i, 50, 20));
  std::vector<DetectionRecord> dets;
  for (int i = 0; i < 10; ++i) {
    const bool good = i < 6;
    const double cx = good ? 40.0 + 60.0 * (i % 5) + rng.uniform(-3.0, 3.0) : rng.uniform(300.0, 500.0);
    dets.push_back(make_det("a", cx, good ? 50 : 400, 20, 20, rng.uniform(-1.0, 1.0)));
  }
  const auto curve = pr_curve(dets, gts);
  double prev = std::numeric_limits<double>::infinity();
  for (const PrPoint& pt : curve) {
    CHECK(pt.threshold <= prev);
    prev = pt.threshold;
    std::vector<DetectionRecord> kept;
    for (const auto& d : dets) {
      if (d.svm_score >= pt.threshold) kept.push_back(d);
    }
    const auto [p, r] = precision_recall(match_detections(kept, gts));
    CHECK(pt.precision == p);
    CHECK(pt.recall == r);
  }
  for (std::size_t i = 1; i < curve.size(); ++i) CHECK(curve[i].recall >= curve[i - 1].recall);
}

TEST_CASE("synth_scene: deterministic in the seed") {
  SceneConfig cfg;
  cfg.seed = 42;
  const Scene a = synth_scene(cfg);
  const Scene b = synth_scene(cfg);
  CHECK(a.image.data() == b.image.data());
  REQUIRE(a.ground_truth.size() == b.ground_truth.size());
  for (std::size_t i = 0; i < a.ground_truth.size(); ++i) {
    CHECK(a.ground_truth[i].cx == b.ground_truth[i].cx);
    CHECK(a.ground_truth[i].cy == b.ground_truth[i].cy);
    CHECK(a.ground_truth[i].radius == b.ground_truth[i].radius);
    CHECK(a.ground_truth[i].shape == b.ground_truth[i].shape);
    CHECK(a.ground_truth[i].color == b.ground_truth[i].color);
  }
}

TEST_CASE("synth_scene: ground truth respects the layout contract") {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    SceneConfig cfg;
    cfg.n_signs = 1 + static_cast<int>(seed % 3);
    cfg.seed = seed;
    const Scene scene = synth_scene(cfg);
    REQUIRE(scene.ground_truth.size() == static_cast<std::size_t>(cfg.n_signs));
    for (const GroundTruth& g : scene.ground_truth) {
      CHECK(g.radius >= 10.0);
      CHECK(g.radius <= 40.0);
      CHECK(g.cx >= g.radius + 2.0);
      CHECK(g.cx <= cfg.width - 3.0 - g.radius);
      CHECK(g.cy >= g.radius + 2.0);
      CHECK(g.cy <= cfg.height - 3.0 - g.radius);
      if (g.color == SignColor::Blue) CHECK(g.shape == SignShape::Circle);
    }
    for (std::size_t i = 0; i < scene.ground_truth.size(); ++i) {
      for (std::size_t j = i + 1; j < scene.ground_truth.size(); ++j) {
        const GroundTruth& p = scene.ground_truth[i];
        const GroundTruth& q = scene.ground_truth[j];
        CHECK(std::hypot(p.cx - q.cx, p.cy - q.cy) >= p.radius + q.radius + 4.0);
      }
    }
  }
}

TEST_CASE("synth_scene: noiseless background is flat gray") {
  SceneConfig cfg;
  cfg.noise_level = 0.0;
  cfg.n_distractors = 0;
  cfg.n_signs = 1;
  cfg.seed = 5;
  const Scene scene = synth_scene(cfg);
  CHECK(scene.image.at(0, 0, 0) == 128);
  CHECK(scene.image.at(0, 0, 1) == 128);
  CHECK(scene.image.at(0, 0, 2) == 128);
  const GroundTruth& g = scene.ground_truth[0];
  // the sign body must actually be painted: its center is never background
  const int cx = static_cast<int>(g.cx);
  const int cy = static_cast<int>(g.cy);
  const bool center_is_gray = scene.image.at(cx, cy, 0) == 128 && scene.image.at(cx, cy, 1) == 128 &&
                              scene.image.at(cx, cy, 2) == 128;
  CHECK_FALSE(center_is_gray);
}

TEST_CASE("synth_scene: impossible layouts fail loudly") {
  SceneConfig cfg;
  cfg.width = 40;
  cfg.height = 40;
  cfg.n_signs = 2;
  cfg.n_distractors = 0;
  for (std::uint64_t seed = 0; seed < 4; ++seed) {
    cfg.seed = seed;
    CHECK_THROWS_AS(synth_scene(cfg), LayoutFailure);
  }
}

TEST_CASE("synth_scene: configuration validation") {
  SceneConfig cfg;
  cfg.width = 39;
  CHECK_THROWS_AS(synth_scene(cfg), std::invalid_argument);
  cfg = {};
  cfg.n_signs = 0;
  CHECK_THROWS_AS(synth_scene(cfg), std::invalid_argument);
  cfg = {};
  cfg.n_signs = 4;
  CHECK_THROWS_AS(synth_scene(cfg), std::invalid_argument);
  cfg = {};
  cfg.n_distractors = -1;
  CHECK_THROWS_AS(synth_scene(cfg), std::invalid_argument);
  cfg = {};
  cfg.noise_level = -0.1;
  CHECK_THROWS_AS(synth_scene(cfg), std::invalid_argument);
  cfg = {};
  cfg.noise_level = 1.1;
  CHECK_THROWS_AS(synth_scene(cfg), std::invalid_argument);
}

TEST_CASE("synth_distractor_scene: deterministic, paints something") {
  SceneConfig cfg;
  cfg.seed = 9;
  cfg.n_distractors = 4;
  const RgbImage a = synth_distractor_scene(cfg);
  const RgbImage b = synth_distractor_scene(cfg);
  CHECK(a.data() == b.data());
  int colored = 0;
  for (int y = 0; y < a.height(); ++y) {
    for (int x = 0; x < a.width(); ++x) {
      if (a.at(x, y, 0) != a.at(x, y, 2)) ++colored;
    }
  }
  CHECK(colored > 100);
}

TEST_CASE("run_pipeline: featureless image yields nothing") {
  const RgbImage img = gray_image(200, 200);
  const auto records = run_pipeline(img, "blank", PipelineConfig{}, nullptr);
  CHECK(records.empty());
}

TEST_CASE("run_pipeline: blue disk comes back as one accepted circle") {
  RgbImage img = gray_image(200, 200);
  paint_disk(img, 100, 90, 20, 20, 20, 200);
  const auto records = run_pipeline(img, "disk", PipelineConfig{}, nullptr);
  REQUIRE(records.size() == 1);
  const DetectionRecord& r = records[0];
  CHECK(r.image_id == "disk");
  CHECK(r.accepted);
  CHECK(r.svm_score == r.ellipse.support);
  CHECK(std::abs(r.ellipse.center.x - 100.0) <= 2.0);
  CHECK(std::abs(r.ellipse.center.y - 90.0) <= 2.0);
  CHECK(std::abs(r.ellipse.semi_major - 20.0) <= 1.5);
}

TEST_CASE("run_pipeline: red ring gives exactly its outer circle") {
  RgbImage img = gray_image(200, 200);
  paint_disk(img, 100, 100, 20, 200, 20, 20);
  paint_disk(img, 100, 100, 15, 255, 255, 255);
  const auto records = run_pipeline(img, "ring", PipelineConfig{}, nullptr);
  REQUIRE(records.size() == 1);
  const DetectionRecord& r = records[0];
  CHECK(std::abs(r.ellipse.center.x - 100.0) <= 2.0);
  CHECK(std::abs(r.ellipse.center.y - 100.0) <= 2.0);
  CHECK(std::abs(r.ellipse.semi_major - 20.0) <= 1.5);
}

TEST_CASE("run_pipeline: identical calls serialize identically") {
  SceneConfig cfg;
  cfg.seed = 21;
  cfg.n_signs = 2;
  const Scene scene = synth_scene(cfg);
  const auto r1 = run_pipeline(scene.image, "s21", PipelineConfig{}, nullptr);
  const auto r2 = run_pipeline(scene.image, "s21", PipelineConfig{}, nullptr);
  std::stringstream s1, s2;
  write_detections(s1, r1);
  write_detections(s2, r2);
  CHECK(s1.str() == s2.str());
}

TEST_CASE("collect_training_samples: labels both classes on a busy scene") {
  SceneConfig cfg;
  cfg.seed = 500;
  cfg.n_signs = 2;
  cfg.n_distractors = 6;
  const Scene scene = synth_scene(cfg);
  const auto samples = collect_training_samples(scene, PipelineConfig{});
  REQUIRE(!samples.empty());
  int pos = 0, neg = 0;
  for (const auto& [fv, label] : samples) {
    (void)fv;
    REQUIRE((label == 1 || label == -1));
    (label == 1 ? pos : neg) += 1;
  }
  CHECK(pos >= 1);
  CHECK(neg >= 1);
}

TEST_CASE("trained classifier rejects distractor-only candidates") {
  std::vector<std::pair<FeatureVector, int>> samples;
  for (std::uint64_t seed = 500; seed < 504; ++seed) {
    SceneConfig cfg;
    cfg.seed = seed;
    cfg.n_signs = 1 + static_cast<int>(seed % 3);
    cfg.n_distractors = 5;
    const auto s = collect_training_samples(synth_scene(cfg), PipelineConfig{});
    samples.insert(samples.end(), s.begin(), s.end());
  }
  const SignClassifier clf = train_classifier(samples, 0.95, 10.0, 50, 1);

  SceneConfig dcfg;
  dcfg.seed = 700;
  dcfg.n_distractors = 6;
  const RgbImage junk = synth_distractor_scene(dcfg);
  const auto plain = run_pipeline(junk, "junk", PipelineConfig{}, nullptr);
  REQUIRE(plain.size() >= 1);
  for (const auto& r : plain) CHECK(r.accepted);

  const auto filtered = run_pipeline(junk, "junk", PipelineConfig{}, &clf);
  long kept = 0;
  for (const auto& r : filtered) kept += r.accepted ? 1 : 0;
  CHECK(kept < static_cast<long>(plain.size()));
}

TEST_CASE("detections file: round-trip is exact") {
  std::vector<DetectionRecord> dets;
  dets.push_back(make_det("scene_000", 45.25, 40.5, 21.125, 15.0625, 1.5));
  dets.back().ellipse.theta = 0.5235987755982988;
  dets.back().accepted = false;
  dets.push_back(make_det("scene_001", 100, 90, 20, 20, -0.75));
  std::stringstream ss;
  write_detections(ss, dets);
  const auto back = read_detections(ss);
  REQUIRE(back.size() == 2);
  CHECK(back[0].image_id == "scene_000");
  CHECK(back[0].ellipse.center.x == 45.25);
  CHECK(back[0].ellipse.theta == 0.5235987755982988);
  CHECK(back[0].svm_score == 1.5);
  CHECK_FALSE(back[0].accepted);
  CHECK(back[1].accepted);
  CHECK(back[1].svm_score == -0.75);
}

TEST_CASE("detections file: malformed rows throw") {
  std::stringstream missing("a\t1\t2\t3\t4\t5\t6\n");
  CHECK_THROWS_AS(read_detections(missing), IoError);
  std::stringstream bad_flag("a\t1\t2\t3\t4\t5\t6\t2\n");
  CHECK_THROWS_AS(read_detections(bad_flag), IoError);
  std::stringstream bad_num("a\tx\t2\t3\t4\t5\t6\t1\n");
  CHECK_THROWS_AS(read_detections(bad_num), Error);
}

TEST_CASE("ground-truth file: round-trip and validation") {
  std::vector<GroundTruth> gts;
  gts.push_back(make_gt("scene_000", 120.5, 80, 22));
  gts.back().shape = SignShape::Octagon;
  gts.back().color = SignColor::Red;
  gts.push_back(make_gt("scene_001", 60, 60, 15));
  gts.back().color = SignColor::Blue;
  std::stringstream ss;
  write_ground_truth(ss, gts);
  const auto back = read_ground_truth(ss);
  REQUIRE(back.size() == 2);
  CHECK(back[0].image_id == "scene_000");
  CHECK(back[0].cx == 120.5);
  CHECK(back[0].shape == SignShape::Octagon);
  CHECK(back[1].color == SignColor::Blue);
  CHECK(back[1].radius == 15.0);

  std::stringstream bad_shape("a\t1\t2\t3\tsquare\tred\n");
  CHECK_THROWS_AS(read_ground_truth(bad_shape), IoError);
  std::stringstream bad_color("a\t1\t2\t3\tcircle\tgreen\n");
  CHECK_THROWS_AS(read_ground_truth(bad_color), IoError);
  std::stringstream bad_radius("a\t1\t2\t0\tcircle\tred\n");
  CHECK_THROWS_AS(read_ground_truth(bad_radius), IoError);
  std::stringstream short_row("a\t1\t2\t3\tcircle\n");
  CHECK_THROWS_AS(read_ground_truth(short_row), IoError);
}

TEST_CASE("pr csv: golden output") {
  const std::vector<PrPoint> pts = {
      {std::numeric_limits<double>::infinity(), 1.0, 0.0}, {0.5, 1.0, 0.5}, {-0.25, 0.75, 1.0}};
  std::stringstream ss;
  write_pr_csv(ss, pts);
  CHECK(ss.str() == "threshold,precision,recall\ninf,1,0\n0.5,1,0.5\n-0.25,0.75,1\n");
}

TEST_CASE("draw_ellipse: paints the outline, clips at the frame") {
  RgbImage img(40, 40);
  EllipseParams e;
  e.center = {20, 20};
  e.semi_major = 10;
  e.semi_minor = 10;
  draw_ellipse(img, e, 0, 255, 0);
  CHECK(img.at(30, 20, 1) == 255);
  CHECK(img.at(10, 20, 1) == 255);
  CHECK(img.at(20, 30, 1) == 255);
  CHECK(img.at(20, 10, 1) == 255);
  CHECK(img.at(20, 20, 1) == 0);

  EllipseParams off;
  off.center = {39, 39};
  off.semi_major = 10;
  off.semi_minor = 10;
  CHECK_NOTHROW(draw_ellipse(img, off, 255, 0, 0));
}

}  // TEST_SUITE
