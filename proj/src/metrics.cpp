#include "seeds/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <string>
#include <unordered_map>

#include "seeds/errors.hpp"

namespace seeds {

namespace {

std::vector<std::int32_t> dense_ids(const std::vector<std::int32_t>& labels, int& count) {
  std::vector<std::int32_t> ids(labels);
  std::sort(ids.begin(), ids.end());
  ids.erase(std::unique(ids.begin(), ids.end()), ids.end());
  count = static_cast<int>(ids.size());
  std::unordered_map<std::int32_t, std::int32_t> index;
  index.reserve(ids.size());
  for (std::size_t i = 0; i < ids.size(); ++i) index.emplace(ids[i], static_cast<std::int32_t>(i));
  std::vector<std::int32_t> dense(labels.size());
  for (std::size_t i = 0; i < labels.size(); ++i) dense[i] = index.at(labels[i]);
  return dense;
}

// Overlap table between superpixels and ground-truth segments, both densely renumbered
// in increasing id order.
struct Overlaps {
  std::int64_t pixels = 0;
  int num_sp = 0;
  int num_gt = 0;
  std::vector<std::int32_t> gt_ids;
  std::vector<std::int64_t> sp_size;
  std::vector<std::int64_t> gt_size;
  // (superpixel, segment, count), sorted by superpixel then segment.
  struct Cell {
    std::int32_t sp;
    std::int32_t gt;
    std::int64_t count;
  };
  std::vector<Cell> cells;
};

void check_dimensions(const LabelMap& s, const GroundTruth& g) {
  if (s.width != g.width() || s.height != g.height()) {
    throw DimensionError("superpixels are " + std::to_string(s.width) + "x" + std::to_string(s.height) +
                         " but the ground truth is " + std::to_string(g.width()) + "x" +
                         std::to_string(g.height()));
  }
}

Overlaps overlaps(const LabelMap& s, const GroundTruth& g) {
  check_dimensions(s, g);
  Overlaps o;
  o.pixels = s.num_pixels();
  const auto sp = dense_ids(s.labels, o.num_sp);
  const auto gt = dense_ids(g.labels().labels, o.num_gt);

  o.gt_ids.assign(static_cast<std::size_t>(o.num_gt), 0);
  o.sp_size.assign(static_cast<std::size_t>(o.num_sp), 0);
  o.gt_size.assign(static_cast<std::size_t>(o.num_gt), 0);
  std::vector<std::uint64_t> keys(sp.size());
  for (std::size_t i = 0; i < sp.size(); ++i) {
    o.gt_ids[static_cast<std::size_t>(gt[i])] = g.labels().labels[i];
    ++o.sp_size[static_cast<std::size_t>(sp[i])];
    ++o.gt_size[static_cast<std::size_t>(gt[i])];
    keys[i] = (static_cast<std::uint64_t>(sp[i]) << 32) | static_cast<std::uint32_t>(gt[i]);
  }
  std::sort(keys.begin(), keys.end());
  for (std::size_t i = 0; i < keys.size();) {
    std::size_t j = i;
    while (j < keys.size() && keys[j] == keys[i]) ++j;
    o.cells.push_back({static_cast<std::int32_t>(keys[i] >> 32),
                       static_cast<std::int32_t>(keys[i] & 0xffffffffu),
                       static_cast<std::int64_t>(j - i)});
    i = j;
  }
  return o;
}

// Sum over superpixels of the largest overlap with one segment.
std::int64_t best_overlap_total(const Overlaps& o) {
  std::int64_t total = 0;
  for (std::size_t i = 0; i < o.cells.size();) {
    std::int64_t best = 0;
    const auto sp = o.cells[i].sp;
    for (; i < o.cells.size() && o.cells[i].sp == sp; ++i) best = std::max(best, o.cells[i].count);
    total += best;
  }
  return total;
}

std::int64_t leaked_total(const Overlaps& o) {
  std::int64_t total = 0;
  for (const auto& c : o.cells) total += o.sp_size[static_cast<std::size_t>(c.sp)] - c.count;
  return total;
}

double recall(const LabelMap& s, const GroundTruth& g, int eps) {
  check_dimensions(s, g);
  if (eps < 0) throw DomainError("boundary tolerance must be >= 0");
  const int w = s.width;
  const int h = s.height;
  const auto truth = boundary_mask(g.labels());
  const auto mine = boundary_mask(s);

  // Square dilation of the superpixel boundary, separable in x and y.
  std::vector<std::uint8_t> rows(mine.size(), 0);
  for (int y = 0; y < h; ++y) {
    int last = -1'000'000;
    for (int x = 0; x < w + eps; ++x) {
      if (x < w && mine[static_cast<std::size_t>(y) * w + x]) last = x;
      const int t = x - eps;
      if (t >= 0 && t < w) {
        // Any boundary in [t - eps, t + eps]: last seen up to t + eps.
        bool hit = last >= t - eps;
        rows[static_cast<std::size_t>(y) * w + t] = hit ? 1 : 0;
      }
    }
  }
  std::vector<std::uint8_t> near(mine.size(), 0);
  for (int x = 0; x < w; ++x) {
    int last = -1'000'000;
    for (int y = 0; y < h + eps; ++y) {
      if (y < h && rows[static_cast<std::size_t>(y) * w + x]) last = y;
      const int t = y - eps;
      if (t >= 0 && t < h) near[static_cast<std::size_t>(t) * w + x] = last >= t - eps ? 1 : 0;
    }
  }

  std::int64_t total = 0;
  std::int64_t hits = 0;
  for (std::size_t i = 0; i < truth.size(); ++i) {
    if (!truth[i]) continue;
    ++total;
    hits += near[i];
  }
  if (total == 0) return 1.0;
  return static_cast<double>(hits) / static_cast<double>(total);
}

}  // namespace

GroundTruth::GroundTruth(LabelMap labels) : labels_(std::move(labels)) {
  if (labels_.num_pixels() <= 0) throw DomainError("ground truth is empty");
  if (std::any_of(labels_.labels.begin(), labels_.labels.end(), [](std::int32_t v) { return v < 0; })) {
    throw DomainError("ground-truth ids must be non-negative");
  }
  std::vector<std::int32_t> ids(labels_.labels);
  std::sort(ids.begin(), ids.end());
  num_segments_ = static_cast<int>(std::unique(ids.begin(), ids.end()) - ids.begin());
}

GroundTruth read_ground_truth(const std::filesystem::path& path) {
  return GroundTruth(read_label_map(path));
}

double undersegmentation_error(const LabelMap& superpixels, const GroundTruth& truth) {
  const auto o = overlaps(superpixels, truth);
  return static_cast<double>(leaked_total(o)) / static_cast<double>(o.pixels);
}

double corrected_ue(const LabelMap& superpixels, const GroundTruth& truth) {
  const auto o = overlaps(superpixels, truth);
  return static_cast<double>(o.pixels - best_overlap_total(o)) / static_cast<double>(o.pixels);
}

double asa(const LabelMap& superpixels, const GroundTruth& truth) {
  const auto o = overlaps(superpixels, truth);
  return static_cast<double>(best_overlap_total(o)) / static_cast<double>(o.pixels);
}

double boundary_recall(const LabelMap& superpixels, const GroundTruth& truth, int eps) {
  return recall(superpixels, truth, eps);
}

MetricsReport evaluate(const LabelMap& superpixels, const GroundTruth& truth, int eps) {
  const auto o = overlaps(superpixels, truth);
  const auto n = static_cast<double>(o.pixels);
  const auto best = best_overlap_total(o);

  MetricsReport r;
  r.ue = static_cast<double>(leaked_total(o)) / n;
  r.cue = static_cast<double>(o.pixels - best) / n;
  r.asa = static_cast<double>(best) / n;
  r.br = recall(superpixels, truth, eps);
  r.k = o.num_sp;

  r.segments.resize(static_cast<std::size_t>(o.num_gt));
  for (int i = 0; i < o.num_gt; ++i) {
    auto& d = r.segments[static_cast<std::size_t>(i)];
    d.id = o.gt_ids[static_cast<std::size_t>(i)];
    d.size = o.gt_size[static_cast<std::size_t>(i)];
  }
  for (const auto& c : o.cells) {
    auto& d = r.segments[static_cast<std::size_t>(c.gt)];
    ++d.overlapping;
    d.leaked += o.sp_size[static_cast<std::size_t>(c.sp)] - c.count;
  }
  return r;
}

std::vector<std::uint8_t> boundary_mask(const LabelMap& labels) {
  const int w = labels.width;
  const int h = labels.height;
  std::vector<std::uint8_t> mask(static_cast<std::size_t>(labels.num_pixels()), 0);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const auto v = labels.at(x, y);
      if ((x + 1 < w && labels.at(x + 1, y) != v) || (y + 1 < h && labels.at(x, y + 1) != v)) {
        mask[static_cast<std::size_t>(y) * w + x] = 1;
      }
    }
  }
  return mask;
}

LabelMap grid_baseline(int width, int height, int target_k, int min_block) {
  const auto layout = make_grid_layout(width, height, target_k, min_block);
  const auto& xs = layout.x_edges.back();
  const auto& ys = layout.y_edges.back();
  const int cols = layout.superpixel_cols();
  LabelMap map(width, height, 0);
  for (int r = 0; r + 1 < static_cast<int>(ys.size()); ++r) {
    for (int c = 0; c + 1 < static_cast<int>(xs.size()); ++c) {
      for (int y = ys[static_cast<std::size_t>(r)]; y < ys[static_cast<std::size_t>(r) + 1]; ++y) {
        for (int x = xs[static_cast<std::size_t>(c)]; x < xs[static_cast<std::size_t>(c) + 1]; ++x) {
          map.at(x, y) = r * cols + c;
        }
      }
    }
  }
  return map;
}

ContourMap contour_map(const LabImage& image, std::span<const int> scales, const SeedsConfig& cfg) {
  if (scales.empty()) throw DomainError("contour map needs at least one scale");
  ContourMap out{image.width(), image.height(),
                 std::vector<double>(static_cast<std::size_t>(image.width()) * image.height(), 0.0)};
  auto shared = std::make_shared<const LabImage>(image);
  for (const int k : scales) {
    auto c = cfg;
    c.target_superpixels = k;
    const auto result = segment(shared, c);
    const auto mask = boundary_mask(result.partition.label_map());
    for (std::size_t i = 0; i < mask.size(); ++i) out.values[i] += mask[i];
  }
  for (auto& v : out.values) v /= static_cast<double>(scales.size());
  return out;
}

std::vector<int> default_contour_scales() {
  std::vector<int> scales;
  constexpr int kCount = 12;
  for (int i = 0; i < kCount; ++i) {
    const double t = static_cast<double>(i) / (kCount - 1);
    scales.push_back(static_cast<int>(std::lround(6.0 * std::pow(100.0, t))));
  }
  return scales;
}

std::vector<std::uint8_t> encode_contour_pgm(const ContourMap& map) {
  const std::string header = "P5\n" + std::to_string(map.width) + " " + std::to_string(map.height) + "\n255\n";
  std::vector<std::uint8_t> bytes(header.begin(), header.end());
  bytes.reserve(bytes.size() + map.values.size());
  for (const double v : map.values) {
    bytes.push_back(static_cast<std::uint8_t>(std::lround(std::clamp(v, 0.0, 1.0) * 255.0)));
  }
  return bytes;
}

}  // namespace seeds
