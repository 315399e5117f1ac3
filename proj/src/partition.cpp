#include "seeds/partition.hpp"

#include <algorithm>
#include <cassert>
#include <cmath>
#include <limits>
#include <string>

#include "seeds/errors.hpp"

namespace seeds {

// ---------------------------------------------------------------------------
// Grid geometry

namespace {

std::vector<int> split_edges(const std::vector<int>& edges) {
  std::vector<int> out;
  out.reserve(edges.size() * 2);
  for (std::size_t i = 0; i + 1 < edges.size(); ++i) {
    out.push_back(edges[i]);
    out.push_back(edges[i] + (edges[i + 1] - edges[i]) / 2);
  }
  out.push_back(edges.back());
  return out;
}

std::vector<int> uniform_edges(int length, int cells) {
  std::vector<int> edges;
  edges.reserve(static_cast<std::size_t>(cells) + 1);
  const int step = length / cells;
  for (int c = 0; c < cells; ++c) edges.push_back(c * step);
  edges.push_back(length);
  return edges;
}

}  // namespace

GridLayout make_grid_layout(int width, int height, int target_k, int min_block) {
  if (min_block != 2 && min_block != 3) throw ConfigError("min_block must be 2 or 3");
  if (target_k < 1) throw ConfigError("number of superpixels must be >= 1");
  if (width < 1 || height < 1) throw DimensionError("empty image");
  const int max_cols = width / (2 * min_block);
  const int max_rows = height / (2 * min_block);
  if (max_cols < 1 || max_rows < 1) {
    throw ConfigError("image " + std::to_string(width) + "x" + std::to_string(height) +
                      " is too small for min_block " + std::to_string(min_block));
  }
  if (static_cast<long>(target_k) > static_cast<long>(max_cols) * max_rows) {
    throw ConfigError("cannot fit " + std::to_string(target_k) + " superpixels; at most " +
                      std::to_string(max_cols * max_rows) + " for this image and min_block");
  }

  // Pick the grid minimising relative count error plus a penalty on non-square cells.
  int best_cols = 1;
  int best_rows = 1;
  double best_score = std::numeric_limits<double>::infinity();
  for (int cols = 1; cols <= max_cols; ++cols) {
    const int rows = std::clamp(static_cast<int>(std::lround(static_cast<double>(target_k) / cols)),
                                1, max_rows);
    const double count_error = std::abs(cols * rows - target_k) / static_cast<double>(target_k);
    const double aspect = (static_cast<double>(width) / cols) / (static_cast<double>(height) / rows);
    const double score = count_error + 0.5 * std::abs(std::log(aspect));
    if (score < best_score - 1e-12) {
      best_score = score;
      best_cols = cols;
      best_rows = rows;
    }
  }

  const int cell = std::min(width / best_cols, height / best_rows);
  int levels = 1;
  while ((cell >> (levels + 1)) >= min_block) ++levels;

  GridLayout layout;
  layout.width = width;
  layout.height = height;
  layout.min_block = min_block;
  layout.x_edges.resize(static_cast<std::size_t>(levels) + 1);
  layout.y_edges.resize(static_cast<std::size_t>(levels) + 1);
  layout.x_edges[static_cast<std::size_t>(levels)] = uniform_edges(width, best_cols);
  layout.y_edges[static_cast<std::size_t>(levels)] = uniform_edges(height, best_rows);
  for (int l = levels - 1; l >= 0; --l) {
    layout.x_edges[static_cast<std::size_t>(l)] = split_edges(layout.x_edges[static_cast<std::size_t>(l) + 1]);
    layout.y_edges[static_cast<std::size_t>(l)] = split_edges(layout.y_edges[static_cast<std::size_t>(l) + 1]);
  }
  return layout;
}

void BlockLevel::init_index() {
  col_of_x_.resize(static_cast<std::size_t>(x_edges_.back()));
  row_of_y_.resize(static_cast<std::size_t>(y_edges_.back()));
  for (int c = 0; c < cols(); ++c) {
    for (int x = x_edges_[static_cast<std::size_t>(c)]; x < x_edges_[static_cast<std::size_t>(c) + 1]; ++x) {
      col_of_x_[static_cast<std::size_t>(x)] = c;
    }
  }
  for (int r = 0; r < rows(); ++r) {
    for (int y = y_edges_[static_cast<std::size_t>(r)]; y < y_edges_[static_cast<std::size_t>(r) + 1]; ++y) {
      row_of_y_[static_cast<std::size_t>(y)] = r;
    }
  }
}

template <typename Visit>
void BlockLevel::accumulate(int num_bins, Visit visit) {
  offsets_.assign(1, 0);
  offsets_.reserve(static_cast<std::size_t>(num_blocks()) + 1);
  moments_.assign(static_cast<std::size_t>(num_blocks()), Moments{});
  std::vector<std::uint32_t> counts(static_cast<std::size_t>(num_bins), 0);
  std::vector<std::uint32_t> touched;
  for (int b = 0; b < num_blocks(); ++b) {
    auto& mo = moments_[static_cast<std::size_t>(b)];
    touched.clear();
    visit(bounds(b), [&](std::uint32_t bin, std::uint32_t count, const Moments& m) {
      if (counts[bin] == 0) touched.push_back(bin);
      counts[bin] += count;
      mo += m;
    });
    std::sort(touched.begin(), touched.end());
    for (const auto bin : touched) {
      entries_.push_back({bin, counts[bin]});
      counts[bin] = 0;
    }
    offsets_.push_back(entries_.size());
  }
}

BlockLevel::BlockLevel(std::vector<int> x_edges, std::vector<int> y_edges, const LabImage& image)
    : x_edges_(std::move(x_edges)), y_edges_(std::move(y_edges)) {
  init_index();
  const int w = image.width();
  accumulate(image.num_bins(), [&](const BlockRect& r, auto&& add) {
    for (int y = r.y0; y < r.y1; ++y) {
      for (int x = r.x0; x < r.x1; ++x) {
        const int i = y * w + x;
        Moments m;
        m.add(image.lab(i), x, y);
        add(static_cast<std::uint32_t>(image.bin(i)), 1u, m);
      }
    }
  });
}

BlockLevel::BlockLevel(std::vector<int> x_edges, std::vector<int> y_edges, const BlockLevel& finer)
    : x_edges_(std::move(x_edges)), y_edges_(std::move(y_edges)) {
  init_index();
  std::uint32_t bins = 0;
  for (const auto& e : finer.entries_) bins = std::max(bins, e.bin + 1);
  accumulate(static_cast<int>(bins), [&](const BlockRect& r, auto&& add) {
    for (int fr = finer.row_of(r.y0); fr <= finer.row_of(r.y1 - 1); ++fr) {
      for (int fc = finer.col_of(r.x0); fc <= finer.col_of(r.x1 - 1); ++fc) {
        const int fb = fr * finer.cols() + fc;
        const auto hist = finer.histogram(fb);
        for (std::size_t j = 0; j < hist.size(); ++j) {
          add(hist[j].bin, hist[j].count, j == 0 ? finer.moments(fb) : Moments{});
        }
      }
    }
  });
}

BlockRect BlockLevel::bounds(int block) const {
  const auto c = static_cast<std::size_t>(block % cols());
  const auto r = static_cast<std::size_t>(block / cols());
  return {x_edges_[c], y_edges_[r], x_edges_[c + 1], y_edges_[r + 1]};
}

int BlockLevel::neighbour(int block, int dx, int dy) const {
  const int c = block % cols() + dx;
  const int r = block / cols() + dy;
  if (c < 0 || r < 0 || c >= cols() || r >= rows()) return -1;
  return r * cols() + c;
}

BlockHierarchy::BlockHierarchy(const GridLayout& layout, const LabImage& image) {
  if (image.width() != layout.width || image.height() != layout.height) {
    throw DimensionError("block hierarchy: layout and image sizes differ");
  }
  levels_.reserve(static_cast<std::size_t>(layout.num_block_levels()));
  for (int l = 0; l < layout.num_block_levels(); ++l) {
    const auto i = static_cast<std::size_t>(l);
    if (l == 0) {
      levels_.emplace_back(layout.x_edges[i], layout.y_edges[i], image);
    } else {
      levels_.emplace_back(layout.x_edges[i], layout.y_edges[i], levels_.back());
    }
  }
}

// ---------------------------------------------------------------------------
// Partition

Partition::Partition(std::shared_ptr<const LabImage> image, LabelMap labels)
    : image_(std::move(image)), labels_(std::move(labels)) {
  if (!image_) throw DomainError("partition: null image");
  if (!image_->quantized()) throw DomainError("partition: image has no colour bins");
  if (image_->width() != labels_.width || image_->height() != labels_.height) {
    throw DimensionError("partition: label map and image sizes differ");
  }
  if (labels_.labels.empty()) throw DimensionError("partition: empty label map");
  num_bins_ = image_->num_bins();
  const auto [lo, hi] = std::minmax_element(labels_.labels.begin(), labels_.labels.end());
  if (*lo < 0) throw DomainError("partition: negative label");
  const auto k = static_cast<std::size_t>(*hi) + 1;
  sizes_.assign(k, 0);
  histograms_.assign(k * static_cast<std::size_t>(num_bins_), 0);
  moments_.assign(k, Moments{});
  const int w = labels_.width;
  for (int i = 0; i < num_pixels(); ++i) {
    const auto s = static_cast<std::size_t>(labels_.labels[static_cast<std::size_t>(i)]);
    ++sizes_[s];
    ++histograms_[s * num_bins_ + static_cast<std::size_t>(image_->bin(i))];
    moments_[s].add(image_->lab(i), i % w, i / w);
  }
  for (std::size_t s = 0; s < k; ++s) {
    if (sizes_[s] == 0) throw DomainError("partition: label " + std::to_string(s) + " is unused");
  }
  floors_.assign(k, 1);
}

void Partition::set_size_floors(std::vector<std::int32_t> floors) {
  if (floors.size() != sizes_.size()) throw DomainError("partition: one size floor per superpixel");
  for (std::size_t k = 0; k < floors.size(); ++k) {
    if (floors[k] < 1 || floors[k] > sizes_[k]) {
      throw DomainError("partition: size floor must lie in [1, size]");
    }
  }
  floors_ = std::move(floors);
}

GridInit init_grid(std::shared_ptr<const LabImage> image, int target_k, int min_block) {
  if (!image) throw DomainError("init_grid: null image");
  auto layout = make_grid_layout(image->width(), image->height(), target_k, min_block);
  const auto& xs = layout.x_edges.back();
  const auto& ys = layout.y_edges.back();
  const int cols = layout.superpixel_cols();

  LabelMap labels(image->width(), image->height(), 0);
  for (int r = 0; r + 1 < static_cast<int>(ys.size()); ++r) {
    for (int y = ys[static_cast<std::size_t>(r)]; y < ys[static_cast<std::size_t>(r) + 1]; ++y) {
      for (int c = 0; c < cols; ++c) {
        for (int x = xs[static_cast<std::size_t>(c)]; x < xs[static_cast<std::size_t>(c) + 1]; ++x) {
          labels.at(x, y) = r * cols + c;
        }
      }
    }
  }
  BlockHierarchy hierarchy(layout, *image);
  Partition partition(std::move(image), std::move(labels));
  std::vector<std::int32_t> floors(static_cast<std::size_t>(partition.num_superpixels()));
  for (std::int32_t k = 0; k < partition.num_superpixels(); ++k) {
    floors[static_cast<std::size_t>(k)] = (partition.size(k) + 3) / 4;
  }
  partition.set_size_floors(std::move(floors));
  return {std::move(layout), std::move(partition), std::move(hierarchy)};
}

// ---------------------------------------------------------------------------
// Unit queries

namespace {

/// Label of the block at (col + dx, row + dy) of a level, or -1 outside the grid.
std::int32_t block_neighbour_label(const Partition& p, const BlockLevel& level, int block, int dx,
                                   int dy) {
  const int n = level.neighbour(block, dx, dy);
  if (n < 0) return -1;
  const auto r = level.bounds(n);
  return p.label(r.x0, r.y0);
}

std::int32_t pixel_neighbour_label(const Partition& p, int index, int dx, int dy) {
  const int x = index % p.width() + dx;
  const int y = index / p.width() + dy;
  if (x < 0 || y < 0 || x >= p.width() || y >= p.height()) return -1;
  return p.label(x, y);
}

std::int32_t neighbour_label(const Partition& p, const BlockHierarchy& h, Unit unit, int dx, int dy) {
  if (unit.is_pixel()) return pixel_neighbour_label(p, unit.index, dx, dy);
  return block_neighbour_label(p, h.level(unit.level), unit.index, dx, dy);
}

// Ring of the 8-neighbourhood in circular order; consecutive entries are 4-adjacent.
constexpr std::array<std::array<int, 2>, 8> kRing{
    {{0, -1}, {1, -1}, {1, 0}, {1, 1}, {0, 1}, {-1, 1}, {-1, 0}, {-1, -1}}};

/// 3x3 simple-point test for 4-connectivity of the foreground `inside`.
bool ring_disconnects(const std::array<bool, 8>& inside) {
  // Even ring entries are the 4-neighbours.
  bool any_edge = false;
  for (int i = 0; i < 8; i += 2) any_edge = any_edge || inside[static_cast<std::size_t>(i)];
  if (!any_edge) return true;
  int start = -1;
  for (int i = 0; i < 8; ++i) {
    if (!inside[static_cast<std::size_t>(i)]) {
      start = i;
      break;
    }
  }
  if (start < 0) return false;
  int run = -1;
  int edge_run = -1;
  bool previous = false;
  for (int step = 1; step <= 8; ++step) {
    const int i = (start + step) % 8;
    const bool cur = inside[static_cast<std::size_t>(i)];
    if (cur && !previous) ++run;
    if (cur && i % 2 == 0) {
      if (edge_run < 0) {
        edge_run = run;
      } else if (edge_run != run) {
        return true;
      }
    }
    previous = cur;
  }
  return false;
}

}  // namespace

std::int32_t unit_label(const Partition& p, const BlockHierarchy& h, Unit unit) {
  if (unit.is_pixel()) return p.label(unit.index);
  const auto r = h.level(unit.level).bounds(unit.index);
  return p.label(r.x0, r.y0);
}

int unit_size(const BlockHierarchy& h, Unit unit) {
  return unit.is_pixel() ? 1 : h.level(unit.level).area(unit.index);
}

bool is_boundary_pixel(const Partition& p, int index) {
  const auto k = p.label(index);
  for (const auto& [dx, dy] : kNeighbourOffsets) {
    const auto n = pixel_neighbour_label(p, index, dx, dy);
    if (n >= 0 && n != k) return true;
  }
  return false;
}

bool is_boundary_unit(const Partition& p, const BlockHierarchy& h, Unit unit) {
  if (unit.is_pixel()) return is_boundary_pixel(p, unit.index);
  const auto k = unit_label(p, h, unit);
  for (const auto& [dx, dy] : kNeighbourOffsets) {
    const auto n = neighbour_label(p, h, unit, dx, dy);
    if (n >= 0 && n != k) return true;
  }
  return false;
}

bool unit_touches(const Partition& p, const BlockHierarchy& h, Unit unit, std::int32_t label) {
  for (const auto& [dx, dy] : kNeighbourOffsets) {
    if (neighbour_label(p, h, unit, dx, dy) == label) return true;
  }
  return false;
}

bool locally_disconnects(const Partition& p, const BlockHierarchy& h, const MoveProposal& m) {
  std::array<bool, 8> inside{};
  for (std::size_t i = 0; i < kRing.size(); ++i) {
    inside[i] = neighbour_label(p, h, m.unit, kRing[i][0], kRing[i][1]) == m.source;
  }
  return ring_disconnects(inside);
}

bool would_disconnect(const Partition& p, const BlockHierarchy& h, const MoveProposal& m) {
  if (!locally_disconnects(p, h, m)) return false;
  if (p.size(m.source) <= unit_size(h, m.unit)) return true;

  // Nodes are pixels or blocks of the unit's level; both live on a regular grid.
  const bool pixel = m.unit.is_pixel();
  const int cols = pixel ? p.width() : h.level(m.unit.level).cols();
  const int rows = pixel ? p.height() : h.level(m.unit.level).rows();
  auto label_of = [&](int node) {
    if (pixel) return p.label(node);
    const auto r = h.level(m.unit.level).bounds(node);
    return p.label(r.x0, r.y0);
  };

  const int ux = m.unit.index % cols;
  const int uy = m.unit.index / cols;
  std::vector<int> targets;
  for (const auto& [dx, dy] : kNeighbourOffsets) {
    const int x = ux + dx;
    const int y = uy + dy;
    if (x < 0 || y < 0 || x >= cols || y >= rows) continue;
    if (label_of(y * cols + x) == m.source) targets.push_back(y * cols + x);
  }
  if (targets.empty()) return true;

  std::vector<std::uint8_t> seen(static_cast<std::size_t>(cols) * rows, 0);
  seen[static_cast<std::size_t>(m.unit.index)] = 1;
  std::vector<int> stack{targets.front()};
  seen[static_cast<std::size_t>(targets.front())] = 1;
  std::size_t found = 1;
  while (!stack.empty()) {
    const int node = stack.back();
    stack.pop_back();
    const int x = node % cols;
    const int y = node / cols;
    for (const auto& [dx, dy] : kNeighbourOffsets) {
      const int nx = x + dx;
      const int ny = y + dy;
      if (nx < 0 || ny < 0 || nx >= cols || ny >= rows) continue;
      const int next = ny * cols + nx;
      if (seen[static_cast<std::size_t>(next)] || label_of(next) != m.source) continue;
      seen[static_cast<std::size_t>(next)] = 1;
      if (std::find(targets.begin(), targets.end(), next) != targets.end()) {
        if (++found == targets.size()) return false;
      }
      stack.push_back(next);
    }
  }
  return true;
}

bool is_legal_move(const Partition& p, const BlockHierarchy& h, const MoveProposal& m) {
  if (m.source == m.dest) return false;
  if (m.dest < 0 || m.dest >= p.num_superpixels()) return false;
  if (unit_label(p, h, m.unit) != m.source) return false;
  if (!unit_touches(p, h, m.unit, m.dest)) return false;
  if (!p.can_release(m.source, unit_size(h, m.unit))) return false;
  return !would_disconnect(p, h, m);
}

void apply_move(Partition& p, const BlockHierarchy& h, const MoveProposal& m) {
  assert(m.source != m.dest);
  assert(unit_label(p, h, m.unit) == m.source);
  const auto k = static_cast<std::size_t>(m.source);
  const auto n = static_cast<std::size_t>(m.dest);
  const auto bins = static_cast<std::size_t>(p.num_bins_);
  const LabImage& image = *p.image_;

  if (m.unit.is_pixel()) {
    const int i = m.unit.index;
    const auto bin = static_cast<std::size_t>(image.bin(i));
    p.labels_.labels[static_cast<std::size_t>(i)] = m.dest;
    --p.sizes_[k];
    ++p.sizes_[n];
    --p.histograms_[k * bins + bin];
    ++p.histograms_[n * bins + bin];
    Moments px;
    px.add(image.lab(i), i % p.width(), i / p.width());
    p.moments_[k] -= px;
    p.moments_[n] += px;
    return;
  }

  const auto& level = h.level(m.unit.level);
  const auto r = level.bounds(m.unit.index);
  for (int y = r.y0; y < r.y1; ++y) {
    for (int x = r.x0; x < r.x1; ++x) {
      assert(p.labels_.at(x, y) == m.source);
      p.labels_.at(x, y) = m.dest;
    }
  }
  for (const auto [bin, count] : level.histogram(m.unit.index)) {
    const auto c = static_cast<std::int32_t>(count);
    p.histograms_[k * bins + bin] -= c;
    p.histograms_[n * bins + bin] += c;
  }
  p.sizes_[k] -= r.area();
  p.sizes_[n] += r.area();
  p.moments_[k] -= level.moments(m.unit.index);
  p.moments_[n] += level.moments(m.unit.index);
}

}  // namespace seeds
