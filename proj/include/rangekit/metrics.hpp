// SPDX-License-Identifier: Apache-2.0

#ifndef RANGEKIT_METRICS_HPP
#define RANGEKIT_METRICS_HPP

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "rangekit/core.hpp"

namespace rangekit {

// Per-class semantic tallies. Positions whose ground truth carries the
// ignore id are excluded from accumulation entirely.
class ConfusionMatrix {
public:
  ConfusionMatrix(std::int32_t num_classes, std::int32_t ignore_id)
      : num_classes_(num_classes), ignore_(ignore_id),
        counts_(static_cast<std::size_t>(num_classes) * num_classes, 0) {
    if (num_classes < 1) throw Error("confusion matrix: need at least one class");
    if (ignore_id < 0 || ignore_id >= num_classes) throw Error("confusion matrix: ignore id out of range");
  }

  std::int32_t num_classes() const { return num_classes_; }
  std::int32_t ignore_id() const { return ignore_; }

  void update(const std::vector<std::int32_t>& pred, const std::vector<std::int32_t>& gt) {
    if (pred.size() != gt.size()) throw Error("confusion update: length mismatch");
    for (std::size_t i = 0; i < pred.size(); ++i) {
      check_range(pred[i]);
      check_range(gt[i]);
      if (gt[i] == ignore_) continue;
      ++counts_[static_cast<std::size_t>(gt[i]) * num_classes_ + pred[i]];
    }
  }

  void merge(const ConfusionMatrix& other) {
    if (other.num_classes_ != num_classes_ || other.ignore_ != ignore_) {
      throw Error("confusion merge: shape mismatch");
    }
    for (std::size_t i = 0; i < counts_.size(); ++i) counts_[i] += other.counts_[i];
  }

  std::uint64_t count(std::int32_t gt, std::int32_t pred) const {
    check_range(gt);
    check_range(pred);
    return counts_[static_cast<std::size_t>(gt) * num_classes_ + pred];
  }

  std::uint64_t tp(std::int32_t c) const { return count(c, c); }

  std::uint64_t fp(std::int32_t c) const {
    std::uint64_t n = 0;
    for (std::int32_t g = 0; g < num_classes_; ++g)
      if (g != c) n += count(g, c);
    return n;
  }

  std::uint64_t fn(std::int32_t c) const {
    std::uint64_t n = 0;
    for (std::int32_t p = 0; p < num_classes_; ++p)
      if (p != c) n += count(c, p);
    return n;
  }

  std::uint64_t total() const {
    std::uint64_t n = 0;
    for (std::uint64_t v : counts_) n += v;
    return n;
  }

  // Classes with no true, predicted, or missed points stay undefined and do
  // not enter the mean. The ignore class never participates.
  std::optional<double> iou(std::int32_t c) const {
    if (c == ignore_) return std::nullopt;
    const std::uint64_t denom = tp(c) + fp(c) + fn(c);
    if (denom == 0) return std::nullopt;
    return static_cast<double>(tp(c)) / static_cast<double>(denom);
  }

  double miou() const {
    double sum = 0.0;
    int defined = 0;
    for (std::int32_t c = 0; c < num_classes_; ++c) {
      if (const auto v = iou(c)) {
        sum += *v;
        ++defined;
      }
    }
    return defined > 0 ? sum / defined : 0.0;
  }

private:
  void check_range(std::int32_t id) const {
    if (id < 0 || id >= num_classes_) {
      throw Error("confusion matrix: class id " + std::to_string(id) + " out of range");
    }
  }

  std::int32_t num_classes_;
  std::int32_t ignore_;
  std::vector<std::uint64_t> counts_;
};

struct PqClassReport {
  std::int32_t id = 0;
  std::uint64_t tp = 0;
  std::uint64_t fp = 0;
  std::uint64_t fn = 0;
  bool defined = false;       // any TP, FP, or FN seen
  double pq = 0.0;
  double sq = 0.0;
  double rq = 0.0;
  bool iou_defined = false;   // semantic IoU of the same class
  double iou = 0.0;
};

struct PqReport {
  std::vector<PqClassReport> per_class;  // every non-ignore class, in id order
  double pq = 0.0;
  double rq = 0.0;
  double sq = 0.0;
  double pq_dagger = 0.0;
  double pq_things = 0.0;
  double rq_things = 0.0;
  double sq_things = 0.0;
  double pq_stuff = 0.0;
  double rq_stuff = 0.0;
  double sq_stuff = 0.0;
  double miou = 0.0;
};

// Panoptic quality accumulation over one or more scans.
//
// Segments are maximal groups of points sharing (class, instance) for thing
// classes; all points of a stuff class in one scan form a single segment.
// A (prediction, truth) pair of the same class is a true positive when its
// IoU exceeds 0.5, which makes the matching unique. Ignore-labeled truth
// points are removed from the segment-IoU denominators, and an unmatched
// prediction overlapping that void region by more than half its size is not
// counted as a false positive.
class PqAccumulator {
public:
  explicit PqAccumulator(ClassTaxonomy taxonomy)
      : tax_(std::move(taxonomy)),
        stats_(static_cast<std::size_t>(tax_.num_classes())),
        cm_(tax_.num_classes(), tax_.ignore_id()) {}

  const ClassTaxonomy& taxonomy() const { return tax_; }
  const ConfusionMatrix& confusion() const { return cm_; }

  void add_scan(const std::vector<std::int32_t>& pred_sem, const std::vector<std::int32_t>& pred_inst,
                const std::vector<std::int32_t>& gt_sem, const std::vector<std::int32_t>& gt_inst) {
    const std::size_t n = pred_sem.size();
    if (pred_inst.size() != n || gt_sem.size() != n || gt_inst.size() != n) {
      throw Error("panoptic: length mismatch");
    }
    std::map<std::uint64_t, std::uint64_t> gt_area;
    std::map<std::uint64_t, std::uint64_t> pred_area;
    std::map<std::pair<std::uint64_t, std::uint64_t>, std::uint64_t> inter;
    for (std::size_t i = 0; i < n; ++i) {
      if (!tax_.in_range(pred_sem[i]) || !tax_.in_range(gt_sem[i])) {
        throw Error("panoptic: class id out of range");
      }
      const std::uint64_t g = segment_key(gt_sem[i], gt_inst[i]);
      const std::uint64_t p = segment_key(pred_sem[i], pred_inst[i]);
      if (g != kVoid) ++gt_area[g];
      if (p != kVoid) {
        ++pred_area[p];
        ++inter[{g, p}];
      }
    }

    std::map<std::uint64_t, std::uint64_t> pred_void;
    for (const auto& [gp, count] : inter) {
      if (gp.first == kVoid) pred_void[gp.second] += count;
    }

    std::map<std::uint64_t, bool> gt_matched;
    std::map<std::uint64_t, bool> pred_matched;
    for (const auto& [gp, count] : inter) {
      const auto [g, p] = gp;
      if (g == kVoid || key_class(g) != key_class(p)) continue;
      const double void_part = static_cast<double>(pred_void.count(p) ? pred_void.at(p) : 0);
      const double uni = static_cast<double>(gt_area.at(g)) + static_cast<double>(pred_area.at(p)) -
                         static_cast<double>(count) - void_part;
      const double iou = static_cast<double>(count) / uni;
      if (iou > 0.5) {
        PqClassStats& s = stats_[static_cast<std::size_t>(key_class(g))];
        ++s.tp;
        s.iou_sum += iou;
        gt_matched[g] = true;
        pred_matched[p] = true;
      }
    }
    for (const auto& [g, area] : gt_area) {
      if (!gt_matched.count(g)) ++stats_[static_cast<std::size_t>(key_class(g))].fn;
    }
    for (const auto& [p, area] : pred_area) {
      if (pred_matched.count(p)) continue;
      const std::uint64_t void_part = pred_void.count(p) ? pred_void.at(p) : 0;
      if (static_cast<double>(void_part) > 0.5 * static_cast<double>(area)) continue;
      ++stats_[static_cast<std::size_t>(key_class(p))].fp;
    }
    cm_.update(pred_sem, gt_sem);
  }

  void merge(const PqAccumulator& other) {
    if (other.tax_.num_classes() != tax_.num_classes() || other.tax_.ignore_id() != tax_.ignore_id()) {
      throw Error("panoptic merge: taxonomy mismatch");
    }
    for (std::size_t c = 0; c < stats_.size(); ++c) {
      stats_[c].tp += other.stats_[c].tp;
      stats_[c].fp += other.stats_[c].fp;
      stats_[c].fn += other.stats_[c].fn;
      stats_[c].iou_sum += other.stats_[c].iou_sum;
    }
    cm_.merge(other.cm_);
  }

  PqReport report() const {
    PqReport rep;
    double pq_sum = 0, rq_sum = 0, sq_sum = 0;
    int defined = 0;
    double pq_th = 0, rq_th = 0, sq_th = 0;
    int defined_th = 0;
    double pq_st = 0, rq_st = 0, sq_st = 0;
    int defined_st = 0;
    double dagger_sum = 0;
    int dagger_defined = 0;
    for (std::int32_t c = 0; c < tax_.num_classes(); ++c) {
      if (tax_.is_ignore(c)) continue;
      const PqClassStats& s = stats_[static_cast<std::size_t>(c)];
      PqClassReport cr;
      cr.id = c;
      cr.tp = s.tp;
      cr.fp = s.fp;
      cr.fn = s.fn;
      cr.defined = (s.tp + s.fp + s.fn) > 0;
      if (cr.defined) {
        const double denom = static_cast<double>(s.tp) + 0.5 * static_cast<double>(s.fp + s.fn);
        cr.pq = s.iou_sum / denom;
        cr.sq = s.tp > 0 ? s.iou_sum / static_cast<double>(s.tp) : 0.0;
        cr.rq = static_cast<double>(s.tp) / denom;
      }
      if (const auto v = cm_.iou(c)) {
        cr.iou_defined = true;
        cr.iou = *v;
      }
      if (cr.defined) {
        pq_sum += cr.pq;
        rq_sum += cr.rq;
        sq_sum += cr.sq;
        ++defined;
        if (tax_.is_thing(c)) {
          pq_th += cr.pq;
          rq_th += cr.rq;
          sq_th += cr.sq;
          ++defined_th;
        } else {
          pq_st += cr.pq;
          rq_st += cr.rq;
          sq_st += cr.sq;
          ++defined_st;
        }
      }
      // Stuff classes contribute their semantic IoU instead of PQ.
      if (tax_.is_stuff(c) ? cr.iou_defined : cr.defined) {
        dagger_sum += tax_.is_stuff(c) ? cr.iou : cr.pq;
        ++dagger_defined;
      }
      rep.per_class.push_back(cr);
    }
    rep.pq = defined ? pq_sum / defined : 0.0;
    rep.rq = defined ? rq_sum / defined : 0.0;
    rep.sq = defined ? sq_sum / defined : 0.0;
    rep.pq_things = defined_th ? pq_th / defined_th : 0.0;
    rep.rq_things = defined_th ? rq_th / defined_th : 0.0;
    rep.sq_things = defined_th ? sq_th / defined_th : 0.0;
    rep.pq_stuff = defined_st ? pq_st / defined_st : 0.0;
    rep.rq_stuff = defined_st ? rq_st / defined_st : 0.0;
    rep.sq_stuff = defined_st ? sq_st / defined_st : 0.0;
    rep.pq_dagger = dagger_defined ? dagger_sum / dagger_defined : 0.0;
    rep.miou = cm_.miou();
    return rep;
  }

private:
  struct PqClassStats {
    std::uint64_t tp = 0;
    std::uint64_t fp = 0;
    std::uint64_t fn = 0;
    double iou_sum = 0.0;
  };

  static constexpr std::uint64_t kVoid = ~0ULL;

  // Thing segments are (class, instance); a stuff class is one segment per
  // scan; ignore-labeled points are void.
  std::uint64_t segment_key(std::int32_t sem, std::int32_t inst) const {
    if (tax_.is_ignore(sem)) return kVoid;
    const std::uint64_t instance = tax_.is_thing(sem) ? static_cast<std::uint32_t>(inst) : 0u;
    return (static_cast<std::uint64_t>(static_cast<std::uint32_t>(sem)) << 32) | instance;
  }

  static std::int32_t key_class(std::uint64_t key) { return static_cast<std::int32_t>(key >> 32); }

  ClassTaxonomy tax_;
  std::vector<PqClassStats> stats_;
  ConfusionMatrix cm_;
};

inline PqReport panoptic_quality(const std::vector<std::int32_t>& pred_sem,
                                 const std::vector<std::int32_t>& pred_inst,
                                 const std::vector<std::int32_t>& gt_sem,
                                 const std::vector<std::int32_t>& gt_inst,
                                 const ClassTaxonomy& taxonomy) {
  PqAccumulator acc(taxonomy);
  acc.add_scan(pred_sem, pred_inst, gt_sem, gt_inst);
  return acc.report();
}

// Mean over classes of PQ for things and semantic IoU for stuff, taken from
// a report and the confusion matrix of the same data.
inline double pq_dagger(const PqReport& report, const ConfusionMatrix& cm,
                        const ClassTaxonomy& taxonomy) {
  double sum = 0.0;
  int defined = 0;
  for (const PqClassReport& cr : report.per_class) {
    if (taxonomy.is_stuff(cr.id)) {
      if (const auto v = cm.iou(cr.id)) {
        sum += *v;
        ++defined;
      }
    } else if (cr.defined) {
      sum += cr.pq;
      ++defined;
    }
  }
  return defined ? sum / defined : 0.0;
}

}  // namespace rangekit

#endif  // RANGEKIT_METRICS_HPP
