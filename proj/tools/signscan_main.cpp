#include <atomic>
#include <exception>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <mutex>
#include <set>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "CLI11.hpp"
#include "signscan/errors.hpp"
#include "signscan/eval.hpp"
#include "signscan/format.hpp"
#include "signscan/image_io.hpp"

namespace fs = std::filesystem;
using namespace signscan;

namespace {

constexpr const char* kVersion = "signscan 1.0.0";

/// Detection/ground-truth files reference different image ids (exit 4).
struct MismatchError : Error {
  using Error::Error;
};

struct DetectArgs {
  std::string input;
  std::string model_path;
  bool no_classifier = false;
  std::string annotate_path;
  std::string out_path;
  int threads = 1;
  std::uint64_t seed = 0;
  PipelineConfig pipeline;
};

struct TrainArgs {
  std::string features_path;
  std::string scenes_dir;
  std::string out_path;
  double c_param = 10.0;
  int epochs = 30;
  double variance_keep = 0.95;
  std::uint64_t seed = 0;
  PipelineConfig pipeline;
};

struct SynthArgs {
  std::string out_dir;
  int num = 1;
  SceneConfig scene;
};

void add_segmentation_flags(CLI::App* cmd, SegmentationConfig* cfg) {
  cmd->add_option("--alpha", cfg->alpha, "segmentation threshold is mean + alpha*stddev")
      ->capture_default_str();
  cmd->add_option("--morph-radius", cfg->morph_radius, "open/close structuring element radius")
      ->capture_default_str();
  cmd->add_option("--min-area", cfg->min_area, "minimum blob pixel count")->capture_default_str();
}

void add_rht_flags(CLI::App* cmd, RhtConfig* cfg) {
  cmd->add_option("--max-iters", cfg->max_iters, "random triple samples per blob")->capture_default_str();
  cmd->add_option("--tangent-radius", cfg->tangent_radius, "tangent fit window radius")
      ->capture_default_str();
  cmd->add_option("--center-tol", cfg->center_tol, "accumulator center tolerance (px)")
      ->capture_default_str();
  cmd->add_option("--axis-tol", cfg->axis_tol, "accumulator axis tolerance (px)")->capture_default_str();
  cmd->add_option("--theta-tol", cfg->theta_tol, "accumulator orientation tolerance (rad)")
      ->capture_default_str();
  cmd->add_option("--min-score", cfg->min_score, "accumulator hits before verification")
      ->capture_default_str();
  cmd->add_option("--support-eps", cfg->support_eps, "max distance counted as perimeter support (px)")
      ->capture_default_str();
  cmd->add_option("--min-support", cfg->min_support, "minimum verified perimeter coverage")
      ->capture_default_str();
  cmd->add_option("--min-axis", cfg->min_axis, "minimum semi-minor axis (px)")->capture_default_str();
  cmd->add_option("--max-aspect", cfg->max_aspect, "maximum axis ratio")->capture_default_str();
}

std::string stem_of(const fs::path& p) { return p.stem().string(); }

RgbImage read_image_checked(const std::string& path) { return read_image(path); }

std::ofstream open_output(const std::string& path) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw IoError("cannot open for writing: " + path);
  return os;
}

std::ifstream open_input(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw IoError("cannot open: " + path);
  return is;
}

std::vector<fs::path> list_images(const std::string& dir) {
  std::vector<fs::path> files;
  std::error_code ec;
  for (const auto& entry : fs::directory_iterator(dir, ec)) {
    if (!entry.is_regular_file()) continue;
    const auto ext = entry.path().extension().string();
    if (ext == ".png" || ext == ".ppm") files.push_back(entry.path());
  }
  if (ec) throw IoError("cannot list directory: " + dir);
  std::sort(files.begin(), files.end());
  return files;
}

SignClassifier load_classifier(const std::string& path) {
  std::ifstream is = open_input(path);
  return SignClassifier::load(is);
}

int cmd_segment(const std::string& input, const std::string& channel, const std::string& mask_out,
                const SegmentationConfig& cfg) {
  const RgbImage img = read_image_checked(input);
  const EnhanceChannel ch = channel == "blue" ? EnhanceChannel::Blue : EnhanceChannel::Red;
  const BinaryMask mask = segment_mask(img, ch, cfg);
  if (!mask_out.empty()) write_png(mask_out, mask);
  for (const Blob& b : connected_components(mask, cfg.min_area)) {
    std::cout << b.x_min << ' ' << b.y_min << ' ' << b.x_max << ' ' << b.y_max << ' ' << b.area()
              << '\n';
  }
  return 0;
}

int cmd_detect(const DetectArgs& args) {
  SignClassifier classifier;
  const SignClassifier* cls = nullptr;
  if (!args.no_classifier) {
    classifier = load_classifier(args.model_path);
    cls = &classifier;
  }
  PipelineConfig cfg = args.pipeline;
  cfg.rht.rng_seed = args.seed;

  std::error_code ec;
  const bool is_dir = fs::is_directory(args.input, ec);

  std::string rendered;
  if (is_dir) {
    if (!args.annotate_path.empty()) throw IoError("--annotate needs a single image input");
    const std::vector<fs::path> files = list_images(args.input);
    std::vector<std::string> outputs(files.size());
    std::atomic<std::size_t> next{0};
    std::exception_ptr first_error;
    std::mutex error_mutex;
    auto worker = [&] {
      for (;;) {
        const std::size_t i = next.fetch_add(1);
        if (i >= files.size()) break;
        try {
          const RgbImage img = read_image_checked(files[i].string());
          const auto records = run_pipeline(img, stem_of(files[i]), cfg, cls);
          std::ostringstream ss;
          write_detections(ss, records);
          outputs[i] = ss.str();
        } catch (...) {
          std::lock_guard<std::mutex> lock(error_mutex);
          if (!first_error) first_error = std::current_exception();
          return;
        }
      }
    };
    const int n_threads = std::max(1, args.threads);
    std::vector<std::thread> pool;
    for (int i = 0; i < n_threads; ++i) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
    if (first_error) std::rethrow_exception(first_error);
    for (const std::string& s : outputs) rendered += s;
  } else {
    const RgbImage img = read_image_checked(args.input);
    const auto records = run_pipeline(img, stem_of(args.input), cfg, cls);
    std::ostringstream ss;
    write_detections(ss, records);
    rendered = ss.str();
    if (!args.annotate_path.empty()) {
      RgbImage annotated = img;
      for (const DetectionRecord& r : records) {
        if (r.accepted) draw_ellipse(annotated, r.ellipse, 0, 255, 0);
      }
      write_png(args.annotate_path, annotated);
    }
  }

  if (args.out_path.empty()) {
    std::cout << rendered;
  } else {
    open_output(args.out_path) << rendered;
  }
  return 0;
}

int cmd_train(const TrainArgs& args) {
  std::vector<std::pair<FeatureVector, int>> labeled;
  if (!args.features_path.empty()) {
    std::ifstream is = open_input(args.features_path);
    labeled = read_features_csv(is);
    for (const auto& [fv, label] : labeled) {
      (void)fv;
      if (label != 1 && label != -1) throw IoError("feature CSV row lacks a +1/-1 label");
    }
  } else {
    std::ifstream gt_is = open_input((fs::path(args.scenes_dir) / "gt.tsv").string());
    const std::vector<GroundTruth> all_gts = read_ground_truth(gt_is);
    PipelineConfig cfg = args.pipeline;
    cfg.rht.rng_seed = args.seed;
    for (const fs::path& file : list_images(args.scenes_dir)) {
      Scene scene{read_image_checked(file.string()), {}};
      const std::string id = stem_of(file);
      for (const GroundTruth& g : all_gts) {
        if (g.image_id == id) scene.ground_truth.push_back(g);
      }
      const auto samples = collect_training_samples(scene, cfg);
      labeled.insert(labeled.end(), samples.begin(), samples.end());
    }
  }
  const SignClassifier classifier =
      train_classifier(labeled, args.variance_keep, args.c_param, args.epochs, args.seed);
  std::ofstream os = open_output(args.out_path);
  classifier.save(os);
  return 0;
}

void check_ids_covered(const std::vector<DetectionRecord>& dets, const std::vector<GroundTruth>& gts) {
  std::set<std::string> ids;
  for (const GroundTruth& g : gts) ids.insert(g.image_id);
  for (const DetectionRecord& d : dets) {
    if (!ids.contains(d.image_id)) {
      throw MismatchError("detection image id not present in ground truth: " + d.image_id);
    }
  }
}

int cmd_eval(const std::string& det_path, const std::string& gt_path) {
  std::ifstream det_is = open_input(det_path);
  const std::vector<DetectionRecord> dets = read_detections(det_is);
  std::ifstream gt_is = open_input(gt_path);
  const std::vector<GroundTruth> gts = read_ground_truth(gt_is);
  check_ids_covered(dets, gts);

  std::vector<DetectionRecord> accepted;
  for (const DetectionRecord& d : dets) {
    if (d.accepted) accepted.push_back(d);
  }
  const MatchCounts counts = match_detections(accepted, gts);
  const auto [precision, recall] = precision_recall(counts);
  std::cout << counts.tp << ' ' << counts.fp << ' ' << counts.fn << ' ' << format_double(precision)
            << ' ' << format_double(recall) << '\n';
  return 0;
}

int cmd_pr_curve(const std::string& det_path, const std::string& gt_path, const std::string& out) {
  std::ifstream det_is = open_input(det_path);
  const std::vector<DetectionRecord> dets = read_detections(det_is);
  std::ifstream gt_is = open_input(gt_path);
  const std::vector<GroundTruth> gts = read_ground_truth(gt_is);
  check_ids_covered(dets, gts);

  const std::vector<PrPoint> curve = pr_curve(dets, gts);
  if (out.empty()) {
    write_pr_csv(std::cout, curve);
  } else {
    std::ofstream os = open_output(out);
    write_pr_csv(os, curve);
  }
  return 0;
}

int cmd_synth(const SynthArgs& args) {
  std::error_code ec;
  fs::create_directories(args.out_dir, ec);
  if (ec) throw IoError("cannot create directory: " + args.out_dir);

  std::vector<GroundTruth> all_gts;
  for (int i = 0; i < args.num; ++i) {
    SceneConfig cfg = args.scene;
    cfg.seed = args.scene.seed + static_cast<std::uint64_t>(i);
    Scene scene = synth_scene(cfg);
    char name[32];
    std::snprintf(name, sizeof name, "scene_%03d", i);
    write_png((fs::path(args.out_dir) / (std::string(name) + ".png")).string(), scene.image);
    for (GroundTruth& g : scene.ground_truth) {
      g.image_id = name;
      all_gts.push_back(g);
    }
  }
  std::ofstream os = open_output((fs::path(args.out_dir) / "gt.tsv").string());
  write_ground_truth(os, all_gts);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"two-stage road sign detector: color segmentation, randomized "
               "Hough ellipse search, texture-based false positive rejection"};
  app.set_version_flag("--version", kVersion);
  app.set_config("--config", "", "key=value file overriding flag defaults");
  app.require_subcommand(1);

  // segment
  std::string seg_input, seg_channel = "red", seg_mask_out;
  SegmentationConfig seg_cfg;
  CLI::App* seg = app.add_subcommand("segment", "write the color segmentation mask and blob boxes");
  seg->add_option("input", seg_input, "input image (png/ppm)")->required();
  seg->add_option("--channel", seg_channel, "red or blue")
      ->check(CLI::IsMember({"red", "blue"}))
      ->capture_default_str();
  seg->add_option("--out", seg_mask_out, "mask PNG path");
  add_segmentation_flags(seg, &seg_cfg);

  // detect
  DetectArgs det;
  CLI::App* detect = app.add_subcommand("detect", "detect signs in an image or directory");
  detect->add_option("input", det.input, "image file or directory")->required();
  detect->add_option("--model", det.model_path, "classifier model file");
  detect->add_flag("--no-classifier", det.no_classifier, "emit raw ellipse candidates");
  detect->add_option("--annotate", det.annotate_path, "write input with accepted ellipses drawn");
  detect->add_option("--out", det.out_path, "detections TSV path (default stdout)");
  detect->add_option("--threads", det.threads, "worker threads for directory input")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  detect->add_option("--seed", det.seed, "ellipse search seed")->capture_default_str();
  add_segmentation_flags(detect, &det.pipeline.seg);
  add_rht_flags(detect, &det.pipeline.rht);

  // train
  TrainArgs tr;
  CLI::App* train = app.add_subcommand("train", "fit the false-positive rejection model");
  train->add_option("--features", tr.features_path, "labeled feature CSV");
  train->add_option("--scenes", tr.scenes_dir, "directory of scenes plus gt.tsv");
  train->add_option("--out", tr.out_path, "model file path")->required();
  train->add_option("--c-param", tr.c_param, "soft margin penalty")->capture_default_str();
  train->add_option("--epochs", tr.epochs, "training passes")->capture_default_str();
  train->add_option("--variance-keep", tr.variance_keep, "PCA explained variance fraction")
      ->capture_default_str();
  train->add_option("--seed", tr.seed, "training seed")->capture_default_str();
  add_segmentation_flags(train, &tr.pipeline.seg);
  add_rht_flags(train, &tr.pipeline.rht);

  // eval
  std::string eval_dets, eval_gt;
  CLI::App* eval = app.add_subcommand("eval", "match detections against ground truth");
  eval->add_option("--detections", eval_dets, "detections TSV")->required();
  eval->add_option("--gt", eval_gt, "ground truth TSV")->required();

  // synth
  SynthArgs sy;
  CLI::App* synth = app.add_subcommand("synth", "generate benchmark scenes");
  synth->add_option("--out", sy.out_dir, "output directory")->required();
  synth->add_option("--num", sy.num, "number of scenes")->check(CLI::PositiveNumber)->capture_default_str();
  synth->add_option("--seed", sy.scene.seed, "base seed (scene i uses seed+i)")->capture_default_str();
  synth->add_option("--width", sy.scene.width, "frame width")->capture_default_str();
  synth->add_option("--height", sy.scene.height, "frame height")->capture_default_str();
  synth->add_option("--signs", sy.scene.n_signs, "signs per scene (1..3)")->capture_default_str();
  synth->add_option("--distractors", sy.scene.n_distractors, "distractors per scene")
      ->capture_default_str();
  synth->add_option("--noise", sy.scene.noise_level, "background noise level")->capture_default_str();

  // pr-curve
  std::string pr_dets, pr_gt, pr_out;
  CLI::App* pr = app.add_subcommand("pr-curve", "precision/recall sweep over detection scores");
  pr->add_option("--detections", pr_dets, "detections TSV")->required();
  pr->add_option("--gt", pr_gt, "ground truth TSV")->required();
  pr->add_option("--out", pr_out, "CSV path (default stdout)");

  CLI11_PARSE(app, argc, argv);

  try {
    if (seg->parsed()) return cmd_segment(seg_input, seg_channel, seg_mask_out, seg_cfg);
    if (detect->parsed()) {
      if (det.no_classifier != det.model_path.empty()) {
        throw IoError("detect needs exactly one of --model and --no-classifier");
      }
      return cmd_detect(det);
    }
    if (train->parsed()) {
      if (tr.features_path.empty() == tr.scenes_dir.empty()) {
        throw IoError("train needs exactly one of --features and --scenes");
      }
      return cmd_train(tr);
    }
    if (eval->parsed()) return cmd_eval(eval_dets, eval_gt);
    if (synth->parsed()) return cmd_synth(sy);
    if (pr->parsed()) return cmd_pr_curve(pr_dets, pr_gt, pr_out);
  } catch (const MismatchError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 4;
  } catch (const ModelFormatError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 3;
  } catch (const IoError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
