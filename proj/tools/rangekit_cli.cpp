// SPDX-License-Identifier: Apache-2.0
//
// Batch front-end for the range-view toolkit. Line-oriented key=value output
// on stdout; exit 0 on success, 1 on usage errors, 2 on data errors.

#include <atomic>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <mutex>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>

#include "rangekit/rangekit.hpp"

namespace fs = std::filesystem;
using namespace rangekit;

namespace {

// Bad flag values or combinations; distinct from data errors so the exit
// code can distinguish the two.
struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.12g", v);
  return buf;
}

void dump_raster(const std::string& path, const RangeImage& img) {
  std::vector<std::uint8_t> bytes;
  bytes.reserve(img.channels.size() * 4);
  for (double v : img.channels) detail::put_le_f32(bytes, static_cast<float>(v));
  detail::write_file_bytes(path, bytes);
}

void dump_grid_labels(const std::string& path, const std::vector<std::int32_t>& grid) {
  write_predictions(path, grid);
}

std::vector<int> parse_width_list(const std::string& text) {
  std::vector<int> widths;
  for (std::int32_t w : detail::parse_id_list(text)) widths.push_back(w);
  return widths;
}

std::vector<fs::path> list_label_files(const std::string& dir) {
  std::vector<fs::path> files;
  if (!fs::is_directory(dir)) throw IoError(dir + " is not a directory");
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (entry.is_regular_file() && entry.path().extension() == ".label") {
      files.push_back(entry.path());
    }
  }
  std::sort(files.begin(), files.end());
  return files;
}

std::vector<fs::path> list_scan_files(const std::string& dir) {
  std::vector<fs::path> files;
  if (!fs::is_directory(dir)) throw IoError(dir + " is not a directory");
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (entry.is_regular_file() && entry.path().extension() == ".bin") {
      files.push_back(entry.path());
    }
  }
  std::sort(files.begin(), files.end());
  return files;
}

// Runs fn(i) for i in [0, count) on `jobs` workers. Callers keep per-index
// results and merge them in index order, so output is job-count independent.
template <typename Fn>
void parallel_indexed(std::size_t count, int jobs, Fn&& fn) {
  if (jobs < 1) jobs = 1;
  if (jobs == 1 || count <= 1) {
    for (std::size_t i = 0; i < count; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::thread> pool;
  const auto workers = static_cast<std::size_t>(jobs) < count ? static_cast<std::size_t>(jobs) : count;
  std::exception_ptr failure;
  std::mutex failure_mutex;
  for (std::size_t t = 0; t < workers; ++t) {
    pool.emplace_back([&] {
      for (;;) {
        const std::size_t i = next.fetch_add(1);
        if (i >= count) return;
        try {
          fn(i);
        } catch (...) {
          std::lock_guard<std::mutex> lock(failure_mutex);
          if (!failure) failure = std::current_exception();
          return;
        }
      }
    });
  }
  for (auto& th : pool) th.join();
  if (failure) std::rethrow_exception(failure);
}

void print_semantic_report(const ConfusionMatrix& cm, const ClassTaxonomy& tax) {
  std::cout << "# per-class IoU\n";
  for (std::int32_t c = 0; c < tax.num_classes(); ++c) {
    if (tax.is_ignore(c)) continue;
    if (const auto v = cm.iou(c)) {
      std::cout << "# " << tax.name(c) << ": " << fmt(*v) << "\n";
      std::cout << "iou." << tax.name(c) << "=" << fmt(*v) << "\n";
    } else {
      std::cout << "# " << tax.name(c) << ": undefined\n";
    }
  }
  std::cout << "points=" << cm.total() << "\n";
  std::cout << "miou=" << fmt(cm.miou()) << "\n";
}

void print_panoptic_report(const PqReport& rep, const ClassTaxonomy& tax) {
  std::cout << "# per-class PQ / SQ / RQ / IoU\n";
  for (const PqClassReport& cr : rep.per_class) {
    std::cout << "# " << tax.name(cr.id) << ": ";
    if (cr.defined) {
      std::cout << fmt(cr.pq) << " / " << fmt(cr.sq) << " / " << fmt(cr.rq);
    } else {
      std::cout << "undefined";
    }
    std::cout << " / " << (cr.iou_defined ? fmt(cr.iou) : "undefined") << "\n";
    if (cr.defined) {
      std::cout << "pq." << tax.name(cr.id) << "=" << fmt(cr.pq) << "\n";
      std::cout << "sq." << tax.name(cr.id) << "=" << fmt(cr.sq) << "\n";
      std::cout << "rq." << tax.name(cr.id) << "=" << fmt(cr.rq) << "\n";
    }
  }
  std::cout << "pq=" << fmt(rep.pq) << "\n";
  std::cout << "pq_dagger=" << fmt(rep.pq_dagger) << "\n";
  std::cout << "rq=" << fmt(rep.rq) << "\n";
  std::cout << "sq=" << fmt(rep.sq) << "\n";
  std::cout << "pq_things=" << fmt(rep.pq_things) << "\n";
  std::cout << "rq_things=" << fmt(rep.rq_things) << "\n";
  std::cout << "sq_things=" << fmt(rep.sq_things) << "\n";
  std::cout << "pq_stuff=" << fmt(rep.pq_stuff) << "\n";
  std::cout << "rq_stuff=" << fmt(rep.rq_stuff) << "\n";
  std::cout << "sq_stuff=" << fmt(rep.sq_stuff) << "\n";
  std::cout << "miou=" << fmt(rep.miou) << "\n";
}

struct EvalInputs {
  std::string gt_file, pred_file, gt_dir, pred_dir;
  int jobs = 1;

  // Returns matching (gt, pred) path pairs.
  std::vector<std::pair<fs::path, fs::path>> resolve() const {
    std::vector<std::pair<fs::path, fs::path>> pairs;
    if (!gt_file.empty()) {
      pairs.emplace_back(gt_file, pred_file);
      return pairs;
    }
    for (const fs::path& gt : list_label_files(gt_dir)) {
      const fs::path pred = fs::path(pred_dir) / gt.filename();
      if (!fs::exists(pred)) throw IoError("missing prediction file " + pred.string());
      pairs.emplace_back(gt, pred);
    }
    if (pairs.empty()) throw IoError("no .label files in " + gt_dir);
    return pairs;
  }
};

void add_eval_inputs(CLI::App* cmd, EvalInputs& in) {
  auto* gt = cmd->add_option("--gt", in.gt_file, "ground-truth .label file");
  auto* pred = cmd->add_option("--pred", in.pred_file, "prediction .label file");
  auto* gtd = cmd->add_option("--gt-dir", in.gt_dir, "directory of ground-truth .label files");
  auto* predd = cmd->add_option("--pred-dir", in.pred_dir, "directory of prediction .label files");
  cmd->add_option("--jobs", in.jobs, "worker threads for directory mode")->default_val(1);
  pred->needs(gt);
  gt->needs(pred);
  predd->needs(gtd);
  gtd->needs(predd);
  gt->excludes(gtd);
}

int run_eval_sem(const EvalInputs& in, const std::string& taxonomy_path) {
  const ClassTaxonomy tax = read_taxonomy(taxonomy_path);
  const auto pairs = in.resolve();
  std::vector<ConfusionMatrix> parts(pairs.size(), ConfusionMatrix(tax.num_classes(), tax.ignore_id()));
  parallel_indexed(pairs.size(), in.jobs, [&](std::size_t i) {
    const LabelStream gt = read_labels(pairs[i].first.string());
    const LabelStream pred = read_labels(pairs[i].second.string(), gt.semantics.size());
    parts[i].update(pred.semantics, gt.semantics);
  });
  ConfusionMatrix cm(tax.num_classes(), tax.ignore_id());
  for (const ConfusionMatrix& part : parts) cm.merge(part);
  std::cout << "scans=" << pairs.size() << "\n";
  print_semantic_report(cm, tax);
  return 0;
}

int run_eval_pan(const EvalInputs& in, const std::string& taxonomy_path) {
  const ClassTaxonomy tax = read_taxonomy(taxonomy_path);
  const auto pairs = in.resolve();
  std::vector<PqAccumulator> parts(pairs.size(), PqAccumulator(tax));
  parallel_indexed(pairs.size(), in.jobs, [&](std::size_t i) {
    const LabelStream gt = read_labels(pairs[i].first.string());
    const LabelStream pred = read_labels(pairs[i].second.string(), gt.semantics.size());
    parts[i].add_scan(pred.semantics, pred.instances, gt.semantics, gt.instances);
  });
  PqAccumulator acc(tax);
  for (const PqAccumulator& part : parts) acc.merge(part);
  std::cout << "scans=" << pairs.size() << "\n";
  print_panoptic_report(acc.report(), tax);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"LiDAR range-view processing toolkit"};
  app.require_subcommand(1);

  // rasterize --------------------------------------------------------------
  struct {
    std::string scan, sensor, labels, out, out_labels;
    std::int32_t ignore = 0;
  } ras;
  auto* ras_cmd = app.add_subcommand("rasterize", "project a scan into a range image");
  ras_cmd->add_option("--scan", ras.scan, ".bin scan")->required();
  ras_cmd->add_option("--sensor", ras.sensor, "sensor spec file")->required();
  ras_cmd->add_option("--labels", ras.labels, "optional .label file for the scan");
  ras_cmd->add_option("--out", ras.out, "write the 6xHxW raster as float32");
  ras_cmd->add_option("--out-labels", ras.out_labels, "write the label grid as a .label stream");
  ras_cmd->add_option("--ignore", ras.ignore, "ignore class id")->default_val(0);

  // augment ----------------------------------------------------------------
  struct {
    std::string scan_a, labels_a, scan_b, labels_b, sensor, config, out, out_labels;
    std::uint64_t seed = 0;
    std::int32_t ignore = 0;
  } aug;
  auto* aug_cmd = app.add_subcommand("augment", "grid-level augmentation of a scan pair");
  aug_cmd->add_option("--scan-a", aug.scan_a, "base scan")->required();
  aug_cmd->add_option("--labels-a", aug.labels_a, "base labels")->required();
  aug_cmd->add_option("--scan-b", aug.scan_b, "second scan")->required();
  aug_cmd->add_option("--labels-b", aug.labels_b, "second labels")->required();
  aug_cmd->add_option("--sensor", aug.sensor, "sensor spec file")->required();
  aug_cmd->add_option("--config", aug.config, "augmentation config file");
  aug_cmd->add_option("--seed", aug.seed, "random seed")->required();
  aug_cmd->add_option("--out", aug.out, "write the augmented raster as float32");
  aug_cmd->add_option("--out-labels", aug.out_labels, "write the augmented label grid");
  aug_cmd->add_option("--ignore", aug.ignore, "ignore class id")->default_val(0);

  // str-split / str-stitch ---------------------------------------------------
  struct {
    std::string scan, labels, out_dir;
    int z = 1;
    int w_view = 0;
  } split;
  auto* split_cmd = app.add_subcommand("str-split", "split per-point labels into azimuth views");
  split_cmd->add_option("--scan", split.scan, ".bin scan (geometry source)")->required();
  split_cmd->add_option("--labels", split.labels, "per-point .label stream to split")->required();
  split_cmd->add_option("-Z,--views", split.z, "view count")->required();
  split_cmd->add_option("--w-view", split.w_view, "per-view raster width recorded in the manifest");
  split_cmd->add_option("--out-dir", split.out_dir, "output directory")->required();

  struct {
    std::string manifest, scan, out;
  } stitch_opt;
  auto* stitch_cmd = app.add_subcommand("str-stitch", "reassemble per-view label files");
  stitch_cmd->add_option("--manifest", stitch_opt.manifest, "manifest written by str-split")->required();
  stitch_cmd->add_option("--scan", stitch_opt.scan, ".bin scan (defaults to the manifest entry)");
  stitch_cmd->add_option("--out", stitch_opt.out, "output .label stream")->required();

  // postprocess --------------------------------------------------------------
  struct {
    std::string scan, sensor, grid_pred, out;
    int num_sub = 3;
    KnnParams knn;
    std::int32_t ignore = 0;
  } post;
  auto* post_cmd = app.add_subcommand("postprocess", "sub-cloud re-rasterization over a grid prediction");
  post_cmd->add_option("--scan", post.scan, ".bin scan")->required();
  post_cmd->add_option("--sensor", post.sensor, "sensor spec file")->required();
  post_cmd->add_option("--grid-pred", post.grid_pred, "row-major HxW grid prediction (.label stream)")->required();
  post_cmd->add_option("--out", post.out, "output per-point .label stream")->required();
  post_cmd->add_option("--num-sub", post.num_sub, "sub-cloud count")->default_val(3);
  post_cmd->add_option("--knn-k", post.knn.k, "vote count")->default_val(5);
  post_cmd->add_option("--knn-window", post.knn.window, "odd window size")->default_val(5);
  post_cmd->add_option("--knn-cutoff", post.knn.range_cutoff, "depth difference cutoff (m)")->default_val(1.0);
  post_cmd->add_option("--ignore", post.ignore, "ignore class id")->default_val(0);

  // eval ----------------------------------------------------------------------
  EvalInputs sem_in, pan_in;
  std::string sem_tax, pan_tax;
  auto* sem_cmd = app.add_subcommand("eval-sem", "semantic IoU evaluation");
  add_eval_inputs(sem_cmd, sem_in);
  sem_cmd->add_option("--classes", sem_tax, "taxonomy file")->required();
  auto* pan_cmd = app.add_subcommand("eval-pan", "panoptic quality evaluation");
  add_eval_inputs(pan_cmd, pan_in);
  pan_cmd->add_option("--classes", pan_tax, "taxonomy file")->required();

  // occupancy ------------------------------------------------------------------
  struct {
    std::string scan, scan_dir, sensor, widths, out, plot;
  } occ;
  auto* occ_cmd = app.add_subcommand("occupancy", "grid/point occupancy sweep over widths");
  auto* occ_scan = occ_cmd->add_option("--scan", occ.scan, ".bin scan");
  auto* occ_dir = occ_cmd->add_option("--scan-dir", occ.scan_dir, "directory of .bin scans");
  occ_scan->excludes(occ_dir);
  occ_cmd->add_option("--sensor", occ.sensor, "sensor spec file (width entry unused)")->required();
  occ_cmd->add_option("--widths", occ.widths, "comma-separated ascending widths")->required();
  occ_cmd->add_option("--out", occ.out, "write the CSV table here instead of stdout");
  occ_cmd->add_option("--plot", occ.plot, "write a two-block plot file");

  // toy-infer -------------------------------------------------------------------
  struct {
    std::string scan, sensor, weights, save_weights, out;
    std::uint64_t seed = 0;
    bool have_seed = false;
    int num_classes = 20;
    int num_sub = 3;
    KnnParams knn;
    std::int32_t ignore = 0;
  } infer;
  auto* infer_cmd = app.add_subcommand("toy-infer", "forward pass + postprocessing at desk scale");
  infer_cmd->add_option("--scan", infer.scan, ".bin scan")->required();
  infer_cmd->add_option("--sensor", infer.sensor, "sensor spec file")->required();
  infer_cmd->add_option("--weights", infer.weights, "weight file (otherwise random init from --seed)");
  auto* infer_seed = infer_cmd->add_option("--seed", infer.seed, "seed for random weight init");
  infer_cmd->add_option("--save-weights", infer.save_weights, "write the effective weights here");
  infer_cmd->add_option("--out", infer.out, "output per-point .label stream")->required();
  infer_cmd->add_option("--num-classes", infer.num_classes, "class count")->default_val(20);
  infer_cmd->add_option("--num-sub", infer.num_sub, "sub-cloud count")->default_val(3);
  infer_cmd->add_option("--knn-k", infer.knn.k, "vote count")->default_val(5);
  infer_cmd->add_option("--knn-window", infer.knn.window, "odd window size")->default_val(5);
  infer_cmd->add_option("--knn-cutoff", infer.knn.range_cutoff, "depth difference cutoff (m)")->default_val(1.0);
  infer_cmd->add_option("--ignore", infer.ignore, "ignore class id")->default_val(0);

  // render -------------------------------------------------------------------
  struct {
    std::string mode, scan, sensor, pred, gt, pred_grid, gt_grid, out;
    double extent = 50.0;
    int px = 500;
    std::int32_t ignore = 0;
  } ren;
  auto* ren_cmd = app.add_subcommand("render", "error-map images (PPM)");
  ren_cmd->add_option("--mode", ren.mode, "bev or range")->required()
      ->check(CLI::IsMember({"bev", "range"}));
  ren_cmd->add_option("--scan", ren.scan, ".bin scan")->required();
  ren_cmd->add_option("--sensor", ren.sensor, "sensor spec file (range mode)");
  ren_cmd->add_option("--pred", ren.pred, "per-point predictions (bev mode)");
  ren_cmd->add_option("--gt", ren.gt, "per-point ground truth (bev mode)");
  ren_cmd->add_option("--pred-grid", ren.pred_grid, "grid predictions (range mode)");
  ren_cmd->add_option("--gt-grid", ren.gt_grid, "grid ground truth (range mode)");
  ren_cmd->add_option("--out", ren.out, "output .ppm file")->required();
  ren_cmd->add_option("--extent", ren.extent, "square side length in meters (bev)")->default_val(50.0);
  ren_cmd->add_option("--px", ren.px, "image size in pixels (bev)")->default_val(500);
  ren_cmd->add_option("--ignore", ren.ignore, "ignore class id")->default_val(0);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 1;
  }

  try {
    if (*ras_cmd) {
      const PointCloud cloud = [&] {
        PointCloud c = read_scan(ras.scan);
        if (!ras.labels.empty()) {
          const LabelStream ls = read_labels(ras.labels, c.size());
          c.labels = ls.semantics;
          c.instances = ls.instances;
        }
        return c;
      }();
      const SensorSpec spec = read_sensor_spec(ras.sensor);
      const RangeImage img = rasterize(cloud, spec, ras.ignore);
      if (!ras.out.empty()) dump_raster(ras.out, img);
      if (!ras.out_labels.empty()) {
        if (!img.label_grid) throw Error("no labels given, so no label grid to write");
        dump_grid_labels(ras.out_labels, *img.label_grid);
      }
      const std::size_t occupied = img.occupied_count();
      std::cout << "n=" << cloud.size() << "\n";
      std::cout << "height=" << spec.height << "\n";
      std::cout << "width=" << spec.width << "\n";
      std::cout << "occupied=" << occupied << "\n";
      std::cout << "displaced=" << img.displaced.size() << "\n";
      std::cout << "out_of_fov=" << img.out_of_fov << "\n";
      std::cout << "undefined=" << img.undefined_points << "\n";
      std::cout << "grid_fill=" << fmt(static_cast<double>(occupied) / static_cast<double>(img.grid_count())) << "\n";
      std::cout << "point_retention="
                << fmt(cloud.empty() ? 1.0 : static_cast<double>(occupied) / static_cast<double>(cloud.size()))
                << "\n";
      return 0;
    }

    if (*aug_cmd) {
      const SensorSpec spec = read_sensor_spec(aug.sensor);
      const AugmentConfig cfg = aug.config.empty() ? AugmentConfig{} : load_augment_config(aug.config);
      cfg.validate();
      std::cout << "# p_mix = " << fmt(cfg.p_mix) << ", p_union = " << fmt(cfg.p_union)
                << ", p_paste = " << fmt(cfg.p_paste) << ", p_shift = " << fmt(cfg.p_shift) << "\n";
      std::cout << "# union_fill = " << fmt(cfg.union_fill) << ", shift = [" << fmt(cfg.shift_low)
                << ", " << fmt(cfg.shift_high) << "] * W\n";
      std::cout << "# mix_bands =";
      for (int k : cfg.mix_bands) std::cout << " " << k;
      std::cout << "\n";
      auto load = [&](const std::string& scan_path, const std::string& label_path) {
        PointCloud c = read_scan(scan_path);
        const LabelStream ls = read_labels(label_path, c.size());
        c.labels = ls.semantics;
        c.instances = ls.instances;
        return c;
      };
      const PointCloud a = load(aug.scan_a, aug.labels_a);
      const PointCloud b = load(aug.scan_b, aug.labels_b);
      const RangeImage ra = rasterize(a, spec, aug.ignore);
      const RangeImage rb = rasterize(b, spec, aug.ignore);
      Rng rng(aug.seed);
      const RangeImage result = apply_range_combo(ra, rb, cfg, rng);
      if (!aug.out.empty()) dump_raster(aug.out, result);
      if (!aug.out_labels.empty()) dump_grid_labels(aug.out_labels, *result.label_grid);
      std::cout << "occupied=" << result.occupied_count() << "\n";
      std::cout << "occupied_before=" << ra.occupied_count() << "\n";
      return 0;
    }

    if (*split_cmd) {
      const PointCloud cloud = read_scan(split.scan);
      const LabelStream ls = read_labels(split.labels, cloud.size());
      const ViewPartition part = partition(cloud, split.z);
      const auto by_view = split_by_view(ls.semantics, part);
      const auto inst_by_view = split_by_view(ls.instances, part);
      fs::create_directories(split.out_dir);
      std::ofstream manifest(fs::path(split.out_dir) / "views.manifest");
      if (!manifest) throw IoError("cannot write manifest in " + split.out_dir);
      manifest << "z = " << split.z << "\n";
      manifest << "bin_origin_rad = " << fmt(-kPi) << "\n";
      manifest << "points = " << cloud.size() << "\n";
      manifest << "scan = " << fs::absolute(split.scan).string() << "\n";
      if (split.w_view > 0) {
        // Both width conventions: per-view raster width and the equivalent
        // full-panorama width it corresponds to.
        manifest << "w_view = " << split.w_view << "\n";
        manifest << "w_full_equivalent = " << split.w_view * split.z << "\n";
      }
      for (int v = 0; v < split.z; ++v) {
        const std::string name = "view" + std::to_string(v) + ".label";
        write_labels((fs::path(split.out_dir) / name).string(),
                     by_view[static_cast<std::size_t>(v)], inst_by_view[static_cast<std::size_t>(v)]);
        manifest << "view." << v << ".file = " << name << "\n";
        manifest << "view." << v << ".count = " << by_view[static_cast<std::size_t>(v)].size() << "\n";
      }
      std::cout << "views=" << split.z << "\n";
      std::cout << "points=" << cloud.size() << "\n";
      return 0;
    }

    if (*stitch_cmd) {
      const auto kv = read_key_values(stitch_opt.manifest);
      const int z = static_cast<int>(detail::parse_int(kv, "z"));
      const auto points = static_cast<std::size_t>(detail::parse_int(kv, "points"));
      std::string scan_path = stitch_opt.scan;
      if (scan_path.empty()) {
        const auto it = kv.find("scan");
        if (it == kv.end()) throw FormatError("manifest has no scan entry; pass --scan");
        scan_path = it->second;
      }
      const PointCloud cloud = read_scan(scan_path);
      if (cloud.size() != points) {
        throw Error("scan has " + std::to_string(cloud.size()) + " points, manifest says " +
                    std::to_string(points));
      }
      const ViewPartition part = partition(cloud, z);
      const fs::path base = fs::path(stitch_opt.manifest).parent_path();
      std::vector<std::vector<std::int32_t>> sems, insts;
      for (int v = 0; v < z; ++v) {
        const auto it = kv.find("view." + std::to_string(v) + ".file");
        if (it == kv.end()) throw FormatError("manifest is missing view " + std::to_string(v));
        const LabelStream ls = read_labels((base / it->second).string());
        sems.push_back(ls.semantics);
        insts.push_back(ls.instances);
      }
      write_labels(stitch_opt.out, stitch(sems, part), stitch(insts, part));
      std::cout << "points=" << points << "\n";
      return 0;
    }

    if (*post_cmd) {
      std::cout << "# num_sub = " << post.num_sub << ", knn k = " << post.knn.k << ", window = "
                << post.knn.window << ", cutoff = " << fmt(post.knn.range_cutoff) << "\n";
      const PointCloud cloud = read_scan(post.scan);
      const SensorSpec spec = read_sensor_spec(post.sensor);
      const LabelStream grid = read_labels(post.grid_pred,
                                           static_cast<std::size_t>(spec.height) * spec.width);
      auto predictor = [&](const RangeImage&) { return grid.semantics; };
      const auto labels = range_post(cloud, spec, post.num_sub, predictor, post.knn, post.ignore);
      write_predictions(post.out, labels);
      std::cout << "points=" << labels.size() << "\n";
      return 0;
    }

    if (*sem_cmd) return run_eval_sem(sem_in, sem_tax);
    if (*pan_cmd) return run_eval_pan(pan_in, pan_tax);

    if (*occ_cmd) {
      const SensorSpec base = read_sensor_spec(occ.sensor);
      std::vector<int> widths;
      try {
        widths = parse_width_list(occ.widths);
      } catch (const Error& e) {
        throw UsageError(std::string("occupancy: bad --widths: ") + e.what());
      }
      if (widths.empty()) throw UsageError("occupancy: empty width list");
      std::vector<fs::path> scans;
      if (!occ.scan.empty()) {
        scans.emplace_back(occ.scan);
      } else if (!occ.scan_dir.empty()) {
        scans = list_scan_files(occ.scan_dir);
        if (scans.empty()) throw IoError("no .bin scans in " + occ.scan_dir);
      } else {
        throw UsageError("occupancy: need --scan or --scan-dir");
      }
      // Aggregate counts across scans, one sweep row per width.
      std::vector<OccupancyRow> rows;
      for (std::size_t wi = 0; wi < widths.size(); ++wi) {
        if (wi > 0 && widths[wi] <= widths[wi - 1]) throw UsageError("occupancy: widths must be ascending");
        const SensorSpec spec(base.fov_up_deg, base.fov_down_deg, base.height, widths[wi]);
        std::uint64_t occupied = 0, total_n = 0, grids = 0;
        for (const fs::path& path : scans) {
          const PointCloud cloud = read_scan(path.string());
          const OccupancyPoint p = occupancy_point(cloud, spec);
          occupied += p.occupied;
          total_n += p.n;
          grids += static_cast<std::uint64_t>(spec.height) * static_cast<std::uint64_t>(spec.width);
        }
        OccupancyRow row;
        row.width = widths[wi];
        row.grid_fill = static_cast<double>(occupied) / static_cast<double>(grids);
        row.point_retention = total_n > 0 ? static_cast<double>(occupied) / static_cast<double>(total_n) : 1.0;
        rows.push_back(row);
      }
      std::ostringstream csv;
      csv << "width,grid_fill,point_retention\n";
      for (const OccupancyRow& r : rows) {
        csv << r.width << "," << fmt(r.grid_fill) << "," << fmt(r.point_retention) << "\n";
      }
      if (occ.out.empty()) {
        std::cout << csv.str();
      } else {
        std::ofstream out(occ.out);
        if (!out) throw IoError("cannot open " + occ.out);
        out << csv.str();
      }
      if (!occ.plot.empty()) {
        std::ofstream plot(occ.plot);
        if (!plot) throw IoError("cannot open " + occ.plot);
        plot << "# grid_fill\n";
        for (const OccupancyRow& r : rows) plot << r.width << " " << fmt(r.grid_fill) << "\n";
        plot << "\n# point_retention\n";
        for (const OccupancyRow& r : rows) plot << r.width << " " << fmt(r.point_retention) << "\n";
      }
      const auto cross = find_crossover(rows);
      if (cross) {
        std::cout << "crossover_lo=" << cross->first << "\n";
        std::cout << "crossover_hi=" << cross->second << "\n";
      } else {
        std::cout << "crossover=none\n";
      }
      return 0;
    }

    if (*infer_cmd) {
      if (infer.weights.empty() && infer_seed->count() == 0) {
        std::cerr << "toy-infer: need --weights or --seed (random weights require an explicit seed)\n";
        return 1;
      }
      std::cout << "# num_sub = " << infer.num_sub << ", knn k = " << infer.knn.k << ", window = "
                << infer.knn.window << ", cutoff = " << fmt(infer.knn.range_cutoff) << "\n";
      const PointCloud cloud = read_scan(infer.scan);
      const SensorSpec spec = read_sensor_spec(infer.sensor);
      ModelConfig cfg;
      cfg.num_classes = infer.num_classes;
      cfg.validate();
      const Weights weights = infer.weights.empty() ? init_weights(cfg, infer.seed)
                                                    : load_weights(infer.weights, cfg);
      if (!infer.save_weights.empty()) save_weights(infer.save_weights, weights, cfg);
      auto predictor = [&](const RangeImage& img) { return forward(img, cfg, weights); };
      const auto labels = range_post(cloud, spec, infer.num_sub, predictor, infer.knn, infer.ignore);
      write_predictions(infer.out, labels);
      std::cout << "points=" << labels.size() << "\n";
      return 0;
    }

    if (*ren_cmd) {
      const PointCloud cloud = read_scan(ren.scan);
      if (ren.mode == "bev") {
        if (ren.pred.empty() || ren.gt.empty()) throw UsageError("bev mode needs --pred and --gt");
        const LabelStream pred = read_labels(ren.pred, cloud.size());
        const LabelStream gt = read_labels(ren.gt, cloud.size());
        const Image img = error_map_bev(cloud, pred.semantics, gt.semantics, ren.extent, ren.px, ren.ignore);
        write_ppm(img, ren.out);
      } else {
        if (ren.sensor.empty() || ren.pred_grid.empty() || ren.gt_grid.empty()) {
          throw UsageError("range mode needs --sensor, --pred-grid, and --gt-grid");
        }
        const SensorSpec spec = read_sensor_spec(ren.sensor);
        const RangeImage ri = rasterize(cloud, spec, ren.ignore);
        const std::size_t grids = ri.grid_count();
        const LabelStream pred = read_labels(ren.pred_grid, grids);
        const LabelStream gt = read_labels(ren.gt_grid, grids);
        const Image img = error_map_range(ri, pred.semantics, gt.semantics);
        write_ppm(img, ren.out);
      }
      std::cout << "out=" << ren.out << "\n";
      return 0;
    }
  } catch (const UsageError& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return 1;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
