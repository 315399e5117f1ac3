#pragma once

#include <array>
#include <cstdint>
#include <memory>
#include <span>
#include <vector>

#include "seeds/image.hpp"
#include "seeds/label_io.hpp"

namespace seeds {

/// Level value that marks a single-pixel unit.
inline constexpr int kPixelLevel = -1;

/// Something that can be moved between superpixels: one pixel, or one block of a hierarchy level.
struct Unit {
  int level = kPixelLevel;
  int index = 0;

  bool is_pixel() const { return level == kPixelLevel; }
  static Unit pixel(int index) { return {kPixelLevel, index}; }
  static Unit block(int level, int index) { return {level, index}; }

  friend bool operator==(const Unit&, const Unit&) = default;
};

/// Proposal to relabel `unit` from superpixel `source` to its 4-neighbour superpixel `dest`.
struct MoveProposal {
  Unit unit;
  std::int32_t source = 0;
  std::int32_t dest = 0;

  static MoveProposal pixel(int index, std::int32_t source, std::int32_t dest) {
    return {Unit::pixel(index), source, dest};
  }
  static MoveProposal block(int level, int index, std::int32_t source, std::int32_t dest) {
    return {Unit::block(level, index), source, dest};
  }
};

/// 4-neighbour directions in the fixed order moves are tried: left, right, up, down.
inline constexpr std::array<std::array<int, 2>, 4> kNeighbourOffsets{{{-1, 0}, {1, 0}, {0, -1}, {0, 1}}};

/// Colour and coordinate sums of a pixel set, for means and centroids.
struct Moments {
  double l = 0.0;
  double a = 0.0;
  double b = 0.0;
  std::int64_t x = 0;
  std::int64_t y = 0;

  void add(const Lab& c, int px, int py) {
    l += c.l;
    a += c.a;
    b += c.b;
    x += px;
    y += py;
  }
  Moments& operator+=(const Moments& o) {
    l += o.l;
    a += o.a;
    b += o.b;
    x += o.x;
    y += o.y;
    return *this;
  }
  Moments& operator-=(const Moments& o) {
    l -= o.l;
    a -= o.a;
    b -= o.b;
    x -= o.x;
    y -= o.y;
    return *this;
  }
};

// ---------------------------------------------------------------------------
// Grid geometry

/// Cell edges of the initial grid and of every block level beneath it.
///
/// `x_edges[l]` holds the column boundaries of block level `l` (level 0 = smallest
/// blocks). The last entry, index num_block_levels(), is the superpixel grid itself.
/// Every interval of level l+1 is split in two halves to form level l; the right or
/// lower half absorbs an odd remainder, as does the last grid cell.
struct GridLayout {
  int width = 0;
  int height = 0;
  int min_block = 2;
  std::vector<std::vector<int>> x_edges;
  std::vector<std::vector<int>> y_edges;

  int num_block_levels() const { return static_cast<int>(x_edges.size()) - 1; }
  int superpixel_cols() const { return static_cast<int>(x_edges.back().size()) - 1; }
  int superpixel_rows() const { return static_cast<int>(y_edges.back().size()) - 1; }
  int num_superpixels() const { return superpixel_cols() * superpixel_rows(); }
};

/// Chooses a cols x rows grid close to `target_k` with roughly square cells, and as many
/// 2x2 block levels as fit while level-0 blocks stay at least `min_block` pixels wide.
/// Throws ConfigError when min_block is not 2 or 3, target_k < 1, or the grid would need
/// cells smaller than 2*min_block pixels (about target_k > N/16 for min_block 2).
GridLayout make_grid_layout(int width, int height, int target_k, int min_block);

struct BlockRect {
  int x0 = 0;
  int y0 = 0;
  int x1 = 0;  // exclusive
  int y1 = 0;  // exclusive

  int area() const { return (x1 - x0) * (y1 - y0); }
};

/// Non-zero entry of a sparse colour histogram.
struct BinCount {
  std::uint32_t bin = 0;
  std::uint32_t count = 0;
};

/// One level of the block hierarchy: a tensor-product grid of blocks with precomputed
/// colour histograms (sparse, sorted by bin) and moments.
class BlockLevel {
 public:
  BlockLevel(std::vector<int> x_edges, std::vector<int> y_edges, const LabImage& image);
  /// Aggregates a finer level whose edges refine these.
  BlockLevel(std::vector<int> x_edges, std::vector<int> y_edges, const BlockLevel& finer);

  int cols() const { return static_cast<int>(x_edges_.size()) - 1; }
  int rows() const { return static_cast<int>(y_edges_.size()) - 1; }
  int num_blocks() const { return cols() * rows(); }

  int col_of(int x) const { return col_of_x_[static_cast<std::size_t>(x)]; }
  int row_of(int y) const { return row_of_y_[static_cast<std::size_t>(y)]; }
  int block_at(int x, int y) const { return row_of(y) * cols() + col_of(x); }
  BlockRect bounds(int block) const;
  int area(int block) const { return bounds(block).area(); }
  /// Index of the adjacent block in direction (dx, dy) with |dx|,|dy| <= 1, or -1 outside the grid.
  int neighbour(int block, int dx, int dy) const;

  std::span<const BinCount> histogram(int block) const {
    const auto b = static_cast<std::size_t>(block);
    return {entries_.data() + offsets_[b], offsets_[b + 1] - offsets_[b]};
  }
  const Moments& moments(int block) const { return moments_[static_cast<std::size_t>(block)]; }

  const std::vector<int>& x_edges() const { return x_edges_; }
  const std::vector<int>& y_edges() const { return y_edges_; }

 private:
  void init_index();
  template <typename Visit>
  void accumulate(int num_bins, Visit visit);

  std::vector<int> x_edges_;
  std::vector<int> y_edges_;
  std::vector<int> col_of_x_;
  std::vector<int> row_of_y_;
  std::vector<std::size_t> offsets_;
  std::vector<BinCount> entries_;
  std::vector<Moments> moments_;
};

/// Block levels from smallest (0) to largest; 2x2 blocks of the largest level make a
/// superpixel of the initial grid.
class BlockHierarchy {
 public:
  BlockHierarchy() = default;
  BlockHierarchy(const GridLayout& layout, const LabImage& image);

  int num_levels() const { return static_cast<int>(levels_.size()); }
  const BlockLevel& level(int l) const { return levels_[static_cast<std::size_t>(l)]; }

 private:
  std::vector<BlockLevel> levels_;
};

// ---------------------------------------------------------------------------
// Partition

/// Superpixel label map with incrementally maintained per-superpixel statistics.
///
/// Invariants: labels lie in [0, K) and every label is used; size(k) equals the
/// number of pixels labelled k; histogram(k) sums to size(k); moments(k) are the
/// sums over those pixels. Connectivity is preserved by callers that only apply
/// moves for which would_disconnect() is false.
class Partition {
 public:
  /// Throws DimensionError on a size mismatch, DomainError when the image is not
  /// quantized or the labels are not exactly 0..K-1.
  Partition(std::shared_ptr<const LabImage> image, LabelMap labels);

  int width() const { return labels_.width; }
  int height() const { return labels_.height; }
  int num_pixels() const { return labels_.num_pixels(); }
  int num_superpixels() const { return static_cast<int>(sizes_.size()); }
  int num_bins() const { return num_bins_; }

  const LabImage& image() const { return *image_; }
  const std::shared_ptr<const LabImage>& image_ptr() const { return image_; }
  const LabelMap& label_map() const { return labels_; }
  std::int32_t label(int index) const { return labels_.labels[static_cast<std::size_t>(index)]; }
  std::int32_t label(int x, int y) const { return labels_.at(x, y); }

  std::int32_t size(std::int32_t k) const { return sizes_[static_cast<std::size_t>(k)]; }
  std::span<const std::int32_t> histogram(std::int32_t k) const {
    return {histograms_.data() + static_cast<std::size_t>(k) * num_bins_,
            static_cast<std::size_t>(num_bins_)};
  }
  std::int32_t count(std::int32_t k, int bin) const {
    return histograms_[static_cast<std::size_t>(k) * num_bins_ + static_cast<std::size_t>(bin)];
  }
  const Moments& moments(std::int32_t k) const { return moments_[static_cast<std::size_t>(k)]; }

  /// Smallest size moves may shrink superpixel k to. Defaults to 1.
  std::int32_t size_floor(std::int32_t k) const { return floors_[static_cast<std::size_t>(k)]; }
  void set_size_floors(std::vector<std::int32_t> floors);
  bool can_release(std::int32_t k, std::int32_t amount) const {
    return size(k) - amount >= size_floor(k);
  }

 private:
  friend void apply_move(Partition&, const BlockHierarchy&, const MoveProposal&);

  std::shared_ptr<const LabImage> image_;
  LabelMap labels_;
  int num_bins_ = 0;
  std::vector<std::int32_t> sizes_;
  std::vector<std::int32_t> histograms_;
  std::vector<Moments> moments_;
  std::vector<std::int32_t> floors_;
};

struct GridInit {
  GridLayout layout;
  Partition partition;
  BlockHierarchy hierarchy;
};

/// Regular grid partition plus its block hierarchy. Size floors are set to a quarter
/// of each initial superpixel (rounded up).
GridInit init_grid(std::shared_ptr<const LabImage> image, int target_k, int min_block);

/// Label of a unit: the pixel's label, or for a block the label of its top-left pixel.
/// Blocks of the level being swept are whole (single-label) by construction.
std::int32_t unit_label(const Partition& p, const BlockHierarchy& h, Unit unit);
int unit_size(const BlockHierarchy& h, Unit unit);

bool is_boundary_unit(const Partition& p, const BlockHierarchy& h, Unit unit);
bool is_boundary_pixel(const Partition& p, int index);

/// True when `label` occurs among the 4-neighbours of the unit.
bool unit_touches(const Partition& p, const BlockHierarchy& h, Unit unit, std::int32_t label);

/// Conservative O(1) split test on the 3x3 neighbourhood (pixels, or blocks at block
/// resolution): false guarantees the source stays 4-connected after the move. It may
/// return true for a removable unit whose neighbours connect outside the window.
bool locally_disconnects(const Partition& p, const BlockHierarchy& h, const MoveProposal& m);

/// Exact: true iff moving the unit out of its superpixel leaves that superpixel
/// not 4-connected (or empty). Uses the local test first and falls back to a flood
/// fill only when the window is inconclusive.
bool would_disconnect(const Partition& p, const BlockHierarchy& h, const MoveProposal& m);

/// Full precondition check for apply_move: unit labelled source, dest a different
/// adjacent label, size floor respected, and no split.
bool is_legal_move(const Partition& p, const BlockHierarchy& h, const MoveProposal& m);

/// Relabels the unit and transfers its histogram, size and moments from source to dest.
/// Preconditions are checked with assertions in debug builds only.
void apply_move(Partition& p, const BlockHierarchy& h, const MoveProposal& m);

}  // namespace seeds
