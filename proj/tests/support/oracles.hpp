// Independent reference implementations used by the unit and acceptance tests.
// Everything here works from raw label maps and colour bins, never from the
// library's incremental statistics.
#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <memory>
#include <numeric>
#include <queue>
#include <random>
#include <set>
#include <string>
#include <vector>

#include "seeds/image.hpp"
#include "seeds/label_io.hpp"
#include "seeds/partition.hpp"

namespace oracle {

__extension__ using Int128 = __int128;

// ---------------------------------------------------------------------------
// Images

/// LAB value at the centre of a colour bin of the default quantizer.
inline seeds::Lab bin_centre(int bin, int bins_per_channel = 5) {
  const int b = bin % bins_per_channel;
  const int a = (bin / bins_per_channel) % bins_per_channel;
  const int l = bin / (bins_per_channel * bins_per_channel);
  const double wl = 100.0 / bins_per_channel;
  const double wab = 256.0 / bins_per_channel;
  return {wl * (l + 0.5), -128.0 + wab * (a + 0.5), -128.0 + wab * (b + 0.5)};
}

/// Quantized LAB image whose pixel i falls in colour bin bins[i].
inline std::shared_ptr<const seeds::LabImage> image_from_bins(int w, int h, const std::vector<int>& bins,
                                                              int bins_per_channel = 5) {
  std::vector<seeds::Lab> lab;
  lab.reserve(bins.size());
  for (const int b : bins) lab.push_back(bin_centre(b, bins_per_channel));
  seeds::Quantizer q;
  q.bins_per_channel = bins_per_channel;
  return std::make_shared<const seeds::LabImage>(seeds::quantize(seeds::LabImage(w, h, std::move(lab)), q));
}

/// Every pixel drawn uniformly from a palette of `colours` random bins.
inline std::vector<int> noise_bins(int w, int h, int colours, std::mt19937_64& rng, int bins_per_channel = 5) {
  const int total = bins_per_channel * bins_per_channel * bins_per_channel;
  std::vector<int> palette(static_cast<std::size_t>(total));
  std::iota(palette.begin(), palette.end(), 0);
  std::shuffle(palette.begin(), palette.end(), rng);
  palette.resize(static_cast<std::size_t>(std::min(colours, total)));
  std::uniform_int_distribution<std::size_t> pick(0, palette.size() - 1);
  std::vector<int> bins(static_cast<std::size_t>(w) * h);
  for (auto& b : bins) b = palette[pick(rng)];
  return bins;
}

/// Two flat colours split at row `seam` (rows < seam get `top`).
inline seeds::RgbImage two_tone(int w, int h, int seam, seeds::Rgb top, seeds::Rgb bottom) {
  seeds::RgbImage img(w, h, bottom);
  for (int y = 0; y < seam; ++y) {
    for (int x = 0; x < w; ++x) img.set(x, y, top);
  }
  return img;
}

struct Scene {
  seeds::RgbImage image;
  seeds::LabelMap truth;
};

/// Random piecewise-constant scene: a background plus `shapes` axis-aligned
/// rectangles and discs with distinct flat colours, with mild per-pixel noise.
/// The ground truth is the region id painted last at each pixel.
inline Scene multi_region_scene(int w, int h, int shapes, std::uint64_t seed, int noise = 6) {
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<int> channel(0, 255);
  std::vector<seeds::Rgb> colours;
  auto distinct_colour = [&] {
    for (;;) {
      const seeds::Rgb c{static_cast<std::uint8_t>(channel(rng)), static_cast<std::uint8_t>(channel(rng)),
                         static_cast<std::uint8_t>(channel(rng))};
      bool ok = true;
      for (const auto& o : colours) {
        const int d = std::abs(c.r - o.r) + std::abs(c.g - o.g) + std::abs(c.b - o.b);
        if (d < 150) ok = false;
      }
      if (ok) return c;
    }
  };
  seeds::LabelMap truth(w, h, 0);
  colours.push_back(distinct_colour());
  for (int s = 1; s <= shapes; ++s) {
    colours.push_back(distinct_colour());
    std::uniform_int_distribution<int> px(0, w - 1);
    std::uniform_int_distribution<int> py(0, h - 1);
    std::uniform_int_distribution<int> size(std::min(w, h) / 8, std::min(w, h) / 3);
    const int cx = px(rng);
    const int cy = py(rng);
    const int r = size(rng);
    const bool disc = s % 2 == 0;
    for (int y = 0; y < h; ++y) {
      for (int x = 0; x < w; ++x) {
        const bool inside = disc ? (x - cx) * (x - cx) + (y - cy) * (y - cy) <= r * r
                                 : std::abs(x - cx) <= r && std::abs(y - cy) <= r * 2 / 3;
        if (inside) truth.at(x, y) = s;
      }
    }
  }
  std::normal_distribution<double> jitter(0.0, noise);
  seeds::RgbImage img(w, h, seeds::Rgb{});
  auto clamp8 = [](double v) { return static_cast<std::uint8_t>(std::clamp(std::lround(v), 0L, 255L)); };
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const auto c = colours[static_cast<std::size_t>(truth.at(x, y))];
      img.set(x, y, {clamp8(c.r + jitter(rng)), clamp8(c.g + jitter(rng)), clamp8(c.b + jitter(rng))});
    }
  }
  return {std::move(img), std::move(truth)};
}

// ---------------------------------------------------------------------------
// Label maps

/// Random partition into exactly k 4-connected regions grown from random seeds.
inline seeds::LabelMap random_connected_labels(int w, int h, int k, std::mt19937_64& rng) {
  const int n = w * h;
  std::vector<int> cells(static_cast<std::size_t>(n));
  std::iota(cells.begin(), cells.end(), 0);
  std::shuffle(cells.begin(), cells.end(), rng);
  seeds::LabelMap map(w, h, -1);
  std::vector<int> frontier;
  for (int i = 0; i < k; ++i) {
    map.labels[static_cast<std::size_t>(cells[static_cast<std::size_t>(i)])] = i;
    frontier.push_back(cells[static_cast<std::size_t>(i)]);
  }
  while (!frontier.empty()) {
    std::uniform_int_distribution<std::size_t> pick(0, frontier.size() - 1);
    const std::size_t at = pick(rng);
    const int p = frontier[at];
    const int x = p % w;
    const int y = p / w;
    std::vector<int> free;
    for (const auto& [dx, dy] : seeds::kNeighbourOffsets) {
      const int nx = x + dx;
      const int ny = y + dy;
      if (nx >= 0 && ny >= 0 && nx < w && ny < h && map.at(nx, ny) < 0) free.push_back(ny * w + nx);
    }
    if (free.empty()) {
      frontier[at] = frontier.back();
      frontier.pop_back();
      continue;
    }
    std::uniform_int_distribution<std::size_t> pick_free(0, free.size() - 1);
    const int q = free[pick_free(rng)];
    map.labels[static_cast<std::size_t>(q)] = map.labels[static_cast<std::size_t>(p)];
    frontier.push_back(q);
  }
  return map;
}

/// Number of 4-connected components of each label (index = label).
inline std::map<std::int32_t, int> component_counts(const seeds::LabelMap& map) {
  const int w = map.width;
  const int h = map.height;
  std::vector<char> seen(map.labels.size(), 0);
  std::map<std::int32_t, int> counts;
  for (int start = 0; start < w * h; ++start) {
    if (seen[static_cast<std::size_t>(start)]) continue;
    const auto label = map.labels[static_cast<std::size_t>(start)];
    ++counts[label];
    std::queue<int> q;
    q.push(start);
    seen[static_cast<std::size_t>(start)] = 1;
    while (!q.empty()) {
      const int p = q.front();
      q.pop();
      const int x = p % w;
      const int y = p / w;
      for (const auto& [dx, dy] : seeds::kNeighbourOffsets) {
        const int nx = x + dx;
        const int ny = y + dy;
        if (nx < 0 || ny < 0 || nx >= w || ny >= h) continue;
        const int nq = ny * w + nx;
        if (!seen[static_cast<std::size_t>(nq)] && map.labels[static_cast<std::size_t>(nq)] == label) {
          seen[static_cast<std::size_t>(nq)] = 1;
          q.push(nq);
        }
      }
    }
  }
  return counts;
}

inline bool all_connected(const seeds::LabelMap& map) {
  for (const auto& [label, n] : component_counts(map)) {
    if (n != 1) return false;
  }
  return true;
}

/// Empty string when the partition's labels are 0..K-1, every superpixel is one
/// 4-connected blob, and sizes, histograms and moments match a recount.
inline std::string validate_partition(const seeds::Partition& p) {
  const auto& map = p.label_map();
  const int k = p.num_superpixels();
  std::vector<std::int64_t> sizes(static_cast<std::size_t>(k), 0);
  std::vector<std::map<int, std::int64_t>> hists(static_cast<std::size_t>(k));
  std::vector<std::array<double, 3>> colour(static_cast<std::size_t>(k), {0.0, 0.0, 0.0});
  std::vector<std::array<std::int64_t, 2>> coords(static_cast<std::size_t>(k), {0, 0});
  for (int i = 0; i < p.num_pixels(); ++i) {
    const auto s = map.labels[static_cast<std::size_t>(i)];
    if (s < 0 || s >= k) return "label " + std::to_string(s) + " outside [0, K)";
    const auto u = static_cast<std::size_t>(s);
    ++sizes[u];
    ++hists[u][p.image().bin(i)];
    const auto& c = p.image().lab(i);
    colour[u][0] += c.l;
    colour[u][1] += c.a;
    colour[u][2] += c.b;
    coords[u][0] += i % p.width();
    coords[u][1] += i / p.width();
  }
  for (int s = 0; s < k; ++s) {
    const auto u = static_cast<std::size_t>(s);
    if (sizes[u] == 0) return "label " + std::to_string(s) + " unused";
    if (sizes[u] != p.size(s)) return "size of " + std::to_string(s) + " differs from recount";
    for (int b = 0; b < p.num_bins(); ++b) {
      const auto it = hists[u].find(b);
      const std::int64_t want = it == hists[u].end() ? 0 : it->second;
      if (want != p.count(s, b)) return "histogram of " + std::to_string(s) + " differs from recount";
    }
    const auto& m = p.moments(s);
    const double tol = 1e-6 * static_cast<double>(sizes[u]) * 200.0;
    if (std::abs(m.l - colour[u][0]) > tol || std::abs(m.a - colour[u][1]) > tol ||
        std::abs(m.b - colour[u][2]) > tol || m.x != coords[u][0] || m.y != coords[u][1]) {
      return "moments of " + std::to_string(s) + " differ from recount";
    }
  }
  for (const auto& [label, n] : component_counts(map)) {
    if (n != 1) return "superpixel " + std::to_string(label) + " has " + std::to_string(n) + " components";
  }
  return {};
}

// ---------------------------------------------------------------------------
// Energies

/// Colour term straight from its definition, in doubles.
inline double color_energy(const seeds::LabelMap& map, const seeds::LabImage& image) {
  std::map<std::int32_t, std::map<int, double>> hist;
  std::map<std::int32_t, double> size;
  for (int i = 0; i < map.num_pixels(); ++i) {
    const auto s = map.labels[static_cast<std::size_t>(i)];
    hist[s][image.bin(i)] += 1.0;
    size[s] += 1.0;
  }
  double h = 0.0;
  for (const auto& [s, bins] : hist) {
    for (const auto& [b, c] : bins) h += (c / size[s]) * (c / size[s]);
  }
  return h;
}

inline double boundary_energy(const seeds::LabelMap& map, int patch) {
  const int r = patch / 2;
  double g = 0.0;
  for (int y = 0; y < map.height; ++y) {
    for (int x = 0; x < map.width; ++x) {
      std::map<std::int32_t, int> counts;
      int area = 0;
      for (int v = std::max(0, y - r); v <= std::min(map.height - 1, y + r); ++v) {
        for (int u = std::max(0, x - r); u <= std::min(map.width - 1, x + r); ++u) {
          ++counts[map.at(u, v)];
          ++area;
        }
      }
      for (const auto& [label, c] : counts) g += static_cast<double>(c) * c / (static_cast<double>(area) * area);
    }
  }
  return g;
}

/// Common multiple of every clipped patch area that can occur.
inline std::int64_t patch_area_lcm(int patch) {
  const int r = patch / 2;
  std::int64_t l = 1;
  for (int a = r + 1; a <= patch; ++a) {
    for (int b = r + 1; b <= patch; ++b) l = std::lcm(l, static_cast<std::int64_t>(a) * b);
  }
  return l;
}

/// Boundary term times patch_area_lcm(patch)^2, exactly, summed over the patch
/// centres in [x0, x1] x [y0, y1] (the whole image by default).
inline Int128 boundary_energy_scaled(const seeds::LabelMap& map, int patch, int x0 = 0, int y0 = 0,
                                     int x1 = 1 << 30, int y1 = 1 << 30) {
  const int r = patch / 2;
  const std::int64_t lcm = patch_area_lcm(patch);
  Int128 g = 0;
  for (int y = std::max(0, y0); y <= std::min(map.height - 1, y1); ++y) {
    for (int x = std::max(0, x0); x <= std::min(map.width - 1, x1); ++x) {
      std::map<std::int32_t, std::int64_t> counts;
      std::int64_t area = 0;
      for (int v = std::max(0, y - r); v <= std::min(map.height - 1, y + r); ++v) {
        for (int u = std::max(0, x - r); u <= std::min(map.width - 1, x + r); ++u) {
          ++counts[map.at(u, v)];
          ++area;
        }
      }
      const Int128 scale = lcm / area;
      for (const auto& [label, c] : counts) g += c * c * scale * scale;
    }
  }
  return g;
}

/// Size and sum of squared bin counts of one superpixel, recounted from the label map.
struct SquareStats {
  Int128 size = 0;
  Int128 squares = 0;
};

inline SquareStats square_stats(const seeds::LabelMap& map, const seeds::LabImage& image, std::int32_t label) {
  std::vector<std::int64_t> counts(static_cast<std::size_t>(image.num_bins()), 0);
  SquareStats s;
  for (int i = 0; i < map.num_pixels(); ++i) {
    if (map.labels[static_cast<std::size_t>(i)] != label) continue;
    ++counts[static_cast<std::size_t>(image.bin(i))];
    ++s.size;
  }
  for (const auto c : counts) s.squares += static_cast<Int128>(c) * c;
  return s;
}

/// Exact change of the colour term between two label maps that differ only in the
/// pixels of superpixels `source` and `dest`, as a fraction num/den with den > 0.
struct Fraction {
  Int128 num = 0;
  Int128 den = 1;
};

inline Fraction color_delta(const seeds::LabelMap& before, const seeds::LabelMap& after,
                            const seeds::LabImage& image, std::int32_t source, std::int32_t dest) {
  const auto sb = square_stats(before, image, source);
  const auto db = square_stats(before, image, dest);
  const auto sa = square_stats(after, image, source);
  const auto da = square_stats(after, image, dest);
  // terms: +sa.squares/sa.size^2 + da.squares/da.size^2 - sb.squares/sb.size^2 - db.squares/db.size^2
  // An emptied superpixel contributes nothing.
  struct Term {
    Int128 num;
    Int128 den;
  };
  std::vector<Term> terms;
  auto add = [&](const SquareStats& s, int sign) {
    if (s.size > 0) terms.push_back({sign * s.squares, s.size * s.size});
  };
  add(sa, 1);
  add(da, 1);
  add(sb, -1);
  add(db, -1);
  Fraction f{0, 1};
  for (const auto& t : terms) {
    f.num = f.num * t.den + t.num * f.den;
    f.den *= t.den;
  }
  return f;
}

inline int sign(Int128 v) { return (v > 0) - (v < 0); }

// ---------------------------------------------------------------------------
// Metrics by brute force over superpixel/segment pairs.

struct BruteMetrics {
  double ue = 0.0;
  double cue = 0.0;
  double asa = 0.0;
};

inline BruteMetrics brute_metrics(const seeds::LabelMap& s, const seeds::LabelMap& g) {
  std::set<std::int32_t> sp(s.labels.begin(), s.labels.end());
  std::set<std::int32_t> gt(g.labels.begin(), g.labels.end());
  const double n = s.num_pixels();
  BruteMetrics m;
  double best_total = 0.0;
  for (const auto a : sp) {
    double size = 0.0;
    for (const auto v : s.labels) size += v == a;
    double best = 0.0;
    for (const auto b : gt) {
      double overlap = 0.0;
      for (std::size_t i = 0; i < s.labels.size(); ++i) overlap += s.labels[i] == a && g.labels[i] == b;
      if (overlap > 0) m.ue += (size - overlap) / n;
      best = std::max(best, overlap);
    }
    best_total += best;
    m.cue += (size - best) / n;
  }
  m.asa = best_total / n;
  return m;
}

/// Boundary recall by direct distance search.
inline double brute_recall(const seeds::LabelMap& s, const seeds::LabelMap& g, int eps) {
  auto boundary = [](const seeds::LabelMap& m, int x, int y) {
    const auto v = m.at(x, y);
    return (x + 1 < m.width && m.at(x + 1, y) != v) || (y + 1 < m.height && m.at(x, y + 1) != v);
  };
  int total = 0;
  int hits = 0;
  for (int y = 0; y < g.height; ++y) {
    for (int x = 0; x < g.width; ++x) {
      if (!boundary(g, x, y)) continue;
      ++total;
      bool hit = false;
      for (int v = y - eps; v <= y + eps && !hit; ++v) {
        for (int u = x - eps; u <= x + eps && !hit; ++u) {
          if (u >= 0 && v >= 0 && u < s.width && v < s.height && boundary(s, u, v)) hit = true;
        }
      }
      hits += hit;
    }
  }
  return total == 0 ? 1.0 : static_cast<double>(hits) / total;
}

}  // namespace oracle
