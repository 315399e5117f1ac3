#include "seeds/energy.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "seeds/errors.hpp"

namespace seeds {

namespace {
__extension__ using Int128 = __int128;
}  // namespace

void EnergyConfig::validate() const {
  if (!(gamma >= 0.0)) throw ConfigError("gamma must be non-negative");
  if (patch_size < 3 || patch_size % 2 == 0 || patch_size > 15) {
    throw ConfigError("patch size must be odd and in [3, 15]");
  }
  if (!(edge_quantile >= 0.0 && edge_quantile <= 1.0)) {
    throw ConfigError("edge quantile must lie in [0, 1]");
  }
}

double psi(std::span<const double> hist) {
  if (hist.empty()) throw DomainError("psi: empty histogram");
  double sum = 0.0;
  double squares = 0.0;
  for (const double v : hist) {
    sum += v;
    squares += v * v;
  }
  if (std::abs(sum - 1.0) > 1e-9) throw DomainError("psi: histogram is not normalized");
  return squares;
}

double intersection(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw DomainError("intersection: histogram sizes differ");
  double total = 0.0;
  for (std::size_t j = 0; j < a.size(); ++j) total += std::min(a[j], b[j]);
  return total;
}

namespace {

std::int64_t sum_of_squares(std::span<const std::int32_t> hist) {
  std::int64_t s = 0;
  for (const auto c : hist) s += static_cast<std::int64_t>(c) * c;
  return s;
}

/// Clipped patch of radius r around (x, y).
struct Window {
  int x0, y0, x1, y1;  // inclusive
  int area() const { return (x1 - x0 + 1) * (y1 - y0 + 1); }
};

Window window_around(int x, int y, int r, int width, int height) {
  return {std::max(0, x - r), std::max(0, y - r), std::min(width - 1, x + r),
          std::min(height - 1, y + r)};
}

/// Adds one to the entry of `label`, appending it when absent.
void bump(std::vector<std::pair<std::int32_t, int>>& counts, std::int32_t label) {
  for (auto& [l, c] : counts) {
    if (l == label) {
      ++c;
      return;
    }
  }
  counts.emplace_back(label, 1);
}

std::int64_t patch_sum_of_squares(const std::vector<std::pair<std::int32_t, int>>& counts) {
  std::int64_t s = 0;
  for (const auto& [l, c] : counts) s += static_cast<std::int64_t>(c) * c;
  return s;
}

}  // namespace

double color_energy(const Partition& p) {
  long double total = 0.0L;
  for (std::int32_t k = 0; k < p.num_superpixels(); ++k) {
    const long double size = p.size(k);
    total += static_cast<long double>(sum_of_squares(p.histogram(k))) / (size * size);
  }
  return static_cast<double>(total);
}

double boundary_energy(const Partition& p, int patch_size) {
  const int r = patch_size / 2;
  long double total = 0.0L;
  std::vector<std::pair<std::int32_t, int>> counts;
  for (int y = 0; y < p.height(); ++y) {
    for (int x = 0; x < p.width(); ++x) {
      const auto w = window_around(x, y, r, p.width(), p.height());
      counts.clear();
      for (int v = w.y0; v <= w.y1; ++v) {
        for (int u = w.x0; u <= w.x1; ++u) bump(counts, p.label(u, v));
      }
      const long double area = w.area();
      total += static_cast<long double>(patch_sum_of_squares(counts)) / (area * area);
    }
  }
  return static_cast<double>(total);
}

double total_energy(const Partition& p, const EnergyConfig& cfg) {
  double e = color_energy(p);
  if (cfg.prior == Prior::smooth3x3) e += cfg.gamma * boundary_energy(p, cfg.patch_size);
  return e;
}

// ---------------------------------------------------------------------------
// Patch histograms

PatchHistogramField::PatchHistogramField(const Partition& p, int patch_size)
    : partition_(&p), patch_size_(patch_size) {
  if (patch_size < 1 || patch_size % 2 == 0) throw ConfigError("patch size must be odd");
}

int PatchHistogramField::area(int pixel) const {
  const auto& p = *partition_;
  return window_around(pixel % p.width(), pixel / p.width(), radius(), p.width(), p.height()).area();
}

int PatchHistogramField::count(int pixel, std::int32_t label) const {
  const auto& p = *partition_;
  const auto w = window_around(pixel % p.width(), pixel / p.width(), radius(), p.width(), p.height());
  int c = 0;
  for (int v = w.y0; v <= w.y1; ++v) {
    for (int u = w.x0; u <= w.x1; ++u) c += p.label(u, v) == label ? 1 : 0;
  }
  return c;
}

std::vector<std::pair<std::int32_t, int>> PatchHistogramField::histogram(int pixel) const {
  const auto& p = *partition_;
  const auto w = window_around(pixel % p.width(), pixel / p.width(), radius(), p.width(), p.height());
  std::vector<std::pair<std::int32_t, int>> counts;
  for (int v = w.y0; v <= w.y1; ++v) {
    for (int u = w.x0; u <= w.x1; ++u) bump(counts, p.label(u, v));
  }
  std::sort(counts.begin(), counts.end());
  return counts;
}

// ---------------------------------------------------------------------------
// Fast tests

bool fast_color_test(const Partition& p, const BlockHierarchy& h, const MoveProposal& m) {
  if (m.unit.is_pixel()) {
    const int bin = p.image().bin(m.unit.index);
    const std::int64_t source_rest = p.size(m.source) - 1;
    if (source_rest < 1) return false;
    const std::int64_t in_dest = p.count(m.dest, bin);
    const std::int64_t in_source = p.count(m.source, bin) - 1;
    // in_dest / |dest| > in_source / |source \ pixel|, cross-multiplied.
    return in_dest * source_rest > in_source * static_cast<std::int64_t>(p.size(m.dest));
  }

  const auto& level = h.level(m.unit.level);
  const auto block = level.histogram(m.unit.index);
  const double block_size = level.area(m.unit.index);
  const double source_rest = static_cast<double>(p.size(m.source)) - block_size;
  if (source_rest < 1.0) return false;
  const double dest_size = p.size(m.dest);
  const auto dest = p.histogram(m.dest);
  const auto source = p.histogram(m.source);
  double to_dest = 0.0;
  double to_source = 0.0;
  for (const auto [j, count] : block) {
    const double cb = count / block_size;
    to_dest += std::min(dest[j] / dest_size, cb);
    to_source += std::min((source[j] - static_cast<double>(count)) / source_rest, cb);
  }
  return to_dest > to_source;
}

bool fast_boundary_test(const PatchHistogramField& field, const Partition& p, const MoveProposal& m) {
  if (!m.unit.is_pixel()) return true;
  const int r = field.radius();
  const int px = m.unit.index % p.width();
  const int py = m.unit.index / p.width();
  const auto cover = window_around(px, py, r, p.width(), p.height());

  struct Term {
    int area;
    int gain;  // b(dest) + 1 - b(source)
  };
  std::array<Term, 15 * 15> terms{};
  std::size_t count = 0;
  bool uniform = true;
  for (int y = cover.y0; y <= cover.y1; ++y) {
    for (int x = cover.x0; x <= cover.x1; ++x) {
      const auto w = window_around(x, y, r, p.width(), p.height());
      int in_dest = 0;
      int in_source = 0;
      for (int v = w.y0; v <= w.y1; ++v) {
        for (int u = w.x0; u <= w.x1; ++u) {
          const auto l = p.label(u, v);
          in_dest += l == m.dest ? 1 : 0;
          in_source += l == m.source ? 1 : 0;
        }
      }
      terms[count] = {w.area(), in_dest + 1 - in_source};
      uniform = uniform && terms[count].area == terms[0].area;
      ++count;
    }
  }

  if (uniform) {
    std::int64_t sum = 0;
    for (std::size_t i = 0; i < count; ++i) sum += terms[i].gain;
    return sum > 0;
  }
  // Clipped patches differ in area: weight each term by (L / area)^2 with L = lcm(areas).
  std::int64_t lcm = 1;
  for (std::size_t i = 0; i < count; ++i) lcm = std::lcm(lcm, static_cast<std::int64_t>(terms[i].area));
  Int128 sum = 0;
  for (std::size_t i = 0; i < count; ++i) {
    const Int128 scale = lcm / terms[i].area;
    sum += scale * scale * terms[i].gain;
  }
  return sum > 0;
}

// ---------------------------------------------------------------------------
// Exact deltas

double exact_color_delta(const Partition& p, const BlockHierarchy& h, const MoveProposal& m) {
  const auto source = p.histogram(m.source);
  const auto dest = p.histogram(m.dest);
  std::int64_t cross_source = 0;  // sum_j source(j) * unit(j)
  std::int64_t cross_dest = 0;
  std::int64_t unit_squares = 0;
  std::int64_t unit_size = 0;
  if (m.unit.is_pixel()) {
    const auto bin = static_cast<std::size_t>(p.image().bin(m.unit.index));
    cross_source = source[bin];
    cross_dest = dest[bin];
    unit_squares = 1;
    unit_size = 1;
  } else {
    const auto& level = h.level(m.unit.level);
    const auto unit = level.histogram(m.unit.index);
    for (const auto [j, count] : unit) {
      cross_source += static_cast<std::int64_t>(source[j]) * count;
      cross_dest += static_cast<std::int64_t>(dest[j]) * count;
      unit_squares += static_cast<std::int64_t>(count) * count;
    }
    unit_size = level.area(m.unit.index);
  }

  const std::int64_t ss = sum_of_squares(source);
  const std::int64_t sd = sum_of_squares(dest);
  const long double ns = p.size(m.source);
  const long double nd = p.size(m.dest);
  const long double ns_after = ns - static_cast<long double>(unit_size);
  const long double nd_after = nd + static_cast<long double>(unit_size);

  const long double before = ss / (ns * ns) + sd / (nd * nd);
  long double after = (sd + 2 * cross_dest + unit_squares) / (nd_after * nd_after);
  if (ns_after > 0) after += (ss - 2 * cross_source + unit_squares) / (ns_after * ns_after);
  return static_cast<double>(after - before);
}

double exact_boundary_delta(const Partition& p, const BlockHierarchy& h, const MoveProposal& m,
                            int patch_size) {
  const int r = patch_size / 2;
  BlockRect unit;
  if (m.unit.is_pixel()) {
    const int x = m.unit.index % p.width();
    const int y = m.unit.index / p.width();
    unit = {x, y, x + 1, y + 1};
  } else {
    unit = h.level(m.unit.level).bounds(m.unit.index);
  }
  auto moved = [&](int x, int y) { return x >= unit.x0 && x < unit.x1 && y >= unit.y0 && y < unit.y1; };

  long double delta = 0.0L;
  std::vector<std::pair<std::int32_t, int>> before;
  std::vector<std::pair<std::int32_t, int>> after;
  const int ax0 = std::max(0, unit.x0 - r);
  const int ay0 = std::max(0, unit.y0 - r);
  const int ax1 = std::min(p.width() - 1, unit.x1 - 1 + r);
  const int ay1 = std::min(p.height() - 1, unit.y1 - 1 + r);
  for (int y = ay0; y <= ay1; ++y) {
    for (int x = ax0; x <= ax1; ++x) {
      const auto w = window_around(x, y, r, p.width(), p.height());
      before.clear();
      after.clear();
      for (int v = w.y0; v <= w.y1; ++v) {
        for (int u = w.x0; u <= w.x1; ++u) {
          const auto l = p.label(u, v);
          bump(before, l);
          bump(after, moved(u, v) ? m.dest : l);
        }
      }
      const long double area = w.area();
      delta += static_cast<long double>(patch_sum_of_squares(after) - patch_sum_of_squares(before)) /
               (area * area);
    }
  }
  return static_cast<double>(delta);
}

// ---------------------------------------------------------------------------
// Priors

EdgeMap::EdgeMap(const LabImage& image, double quantile)
    : width_(image.width()), height_(image.height()) {
  const int n = image.num_pixels();
  magnitude_.assign(static_cast<std::size_t>(n), 0.0f);
  auto dist = [&](int i, int j) {
    const auto& a = image.lab(i);
    const auto& b = image.lab(j);
    return std::sqrt((a.l - b.l) * (a.l - b.l) + (a.a - b.a) * (a.a - b.a) + (a.b - b.b) * (a.b - b.b));
  };
  for (int y = 0; y < height_; ++y) {
    for (int x = 0; x < width_; ++x) {
      const int i = y * width_ + x;
      double m = 0.0;
      if (x + 1 < width_) m = std::max(m, dist(i, i + 1));
      if (y + 1 < height_) m = std::max(m, dist(i, i + width_));
      magnitude_[static_cast<std::size_t>(i)] = static_cast<float>(m);
    }
  }
  if (n > 0) {
    auto sorted = magnitude_;
    const auto rank = static_cast<std::size_t>(std::clamp(quantile, 0.0, 1.0) * (n - 1));
    std::nth_element(sorted.begin(), sorted.begin() + static_cast<std::ptrdiff_t>(rank), sorted.end());
    threshold_ = sorted[rank];
  }
  strong_.resize(static_cast<std::size_t>(n));
  for (std::size_t i = 0; i < strong_.size(); ++i) {
    strong_[i] = magnitude_[i] > threshold_ && magnitude_[i] > 0.0f ? 1 : 0;
  }
}

bool compactness_test(const Partition& p, const MoveProposal& m) {
  const std::int64_t px = m.unit.index % p.width();
  const std::int64_t py = m.unit.index / p.width();
  // |pixel - sum/size|^2 scaled by size^2, exact in integers.
  auto scaled = [&](std::int32_t k) {
    const std::int64_t s = p.size(k);
    const auto& mo = p.moments(k);
    const Int128 dx = px * s - mo.x;
    const Int128 dy = py * s - mo.y;
    return dx * dx + dy * dy;
  };
  const Int128 sd = p.size(m.dest);
  const Int128 ss = p.size(m.source);
  return scaled(m.dest) * ss * ss <= scaled(m.source) * sd * sd;
}

bool prior_test(const Partition& p, const MoveProposal& m, const EnergyConfig& cfg,
                const EdgeMap* edges) {
  auto smooth = [&] { return fast_boundary_test(PatchHistogramField(p, cfg.patch_size), p, m); };
  auto need_edges = [&] {
    if (edges == nullptr) throw ConfigError("edge prior requires an edge map");
  };
  switch (cfg.prior) {
    case Prior::none:
      return true;
    case Prior::smooth3x3:
      return smooth();
    case Prior::compactness:
      return compactness_test(p, m);
    case Prior::edge_snap:
      need_edges();
      if (edges->strong(m.unit.index)) return false;
      return smooth();
    case Prior::combined: {
      need_edges();
      const int votes = (smooth() ? 1 : 0) + (compactness_test(p, m) ? 1 : 0) +
                        (edges->strong(m.unit.index) ? 0 : 1);
      return votes >= 2;
    }
  }
  return true;
}

}  // namespace seeds
