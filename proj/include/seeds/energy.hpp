#pragma once

#include <cstdint>
#include <span>
#include <utility>
#include <vector>

#include "seeds/image.hpp"
#include "seeds/partition.hpp"

namespace seeds {

enum class Prior { none, smooth3x3, compactness, edge_snap, combined };
enum class EvaluationMode { fast, exact };

struct EnergyConfig {
  double gamma = 1.0;
  /// Side of the square label patch used by the boundary term. Odd, in [3, 15].
  int patch_size = 3;
  Prior prior = Prior::none;
  EvaluationMode mode = EvaluationMode::fast;
  /// Edge-magnitude quantile above which a pixel counts as lying on a strong edge.
  double edge_quantile = 0.9;

  void validate() const;
};

/// Sum of squares of a normalized histogram. Throws DomainError on an empty
/// histogram or one that does not sum to 1 within 1e-9.
double psi(std::span<const double> hist);

/// Sum of bin-wise minima. Throws DomainError on a size mismatch.
double intersection(std::span<const double> a, std::span<const double> b);

/// Colour term: sum over superpixels of psi of the size-normalized histogram.
double color_energy(const Partition& p);

/// Boundary term: sum over pixels of the squared label histogram of the patch around
/// the pixel, normalized by the patch area after clipping the patch to the image.
double boundary_energy(const Partition& p, int patch_size);

/// E = H + gamma * G when the prior is smooth3x3, otherwise H alone.
double total_energy(const Partition& p, const EnergyConfig& cfg);

/// Label counts of the patch around every pixel, read directly from the partition, so
/// the field is always consistent with it.
class PatchHistogramField {
 public:
  PatchHistogramField(const Partition& p, int patch_size);

  int patch_size() const { return patch_size_; }
  int radius() const { return patch_size_ / 2; }
  /// Number of pixels in the clipped patch around `pixel`.
  int area(int pixel) const;
  /// b_{N_i}(label) in unnormalized form.
  int count(int pixel, std::int32_t label) const;
  /// Sparse (label, count) list of the patch, sorted by label.
  std::vector<std::pair<std::int32_t, int>> histogram(int pixel) const;

  const Partition& partition() const { return *partition_; }

 private:
  const Partition* partition_;
  int patch_size_;
};

/// Histogram-intersection acceptance test with strict inequality.
///
/// Pixel move: compares the count of the pixel's bin in dest against the count in
/// source without the pixel, each divided by its superpixel size (one lookup per
/// side). Block move: full intersection of the block histogram with dest and with
/// source minus the block.
bool fast_color_test(const Partition& p, const BlockHierarchy& h, const MoveProposal& m);

/// Patch-count acceptance test for pixel moves: accept iff
///   sum_i (b_i(dest) + 1) > sum_i b_i(source)
/// over the pixels i whose patch contains the moved pixel. Where clipped patches of
/// different areas are involved, each term is weighted by 1/area_i^2 (scaled to
/// integers), which makes the test equal to the sign of the exact change of G.
/// Block moves are always accepted here.
bool fast_boundary_test(const PatchHistogramField& field, const Partition& p, const MoveProposal& m);

/// Exact change of color_energy caused by the move.
double exact_color_delta(const Partition& p, const BlockHierarchy& h, const MoveProposal& m);
/// Exact change of boundary_energy caused by the move (local recomputation).
double exact_boundary_delta(const Partition& p, const BlockHierarchy& h, const MoveProposal& m,
                            int patch_size);

/// Strong-edge mask from horizontal and vertical LAB colour differences.
class EdgeMap {
 public:
  EdgeMap() = default;
  EdgeMap(const LabImage& image, double quantile);

  int width() const { return width_; }
  int height() const { return height_; }
  float magnitude(int pixel) const { return magnitude_[static_cast<std::size_t>(pixel)]; }
  double threshold() const { return threshold_; }
  /// Magnitude strictly above the threshold (and non-zero).
  bool strong(int pixel) const { return strong_[static_cast<std::size_t>(pixel)] != 0; }

 private:
  int width_ = 0;
  int height_ = 0;
  double threshold_ = 0.0;
  std::vector<float> magnitude_;
  std::vector<std::uint8_t> strong_;
};

/// Squared distance of the pixel to dest's centroid is <= that to source's centroid.
bool compactness_test(const Partition& p, const MoveProposal& m);

/// Shape prior for a pixel move (cfg.prior must not be none):
///  smooth3x3   -> fast_boundary_test
///  compactness -> compactness_test
///  edge_snap   -> false on strong-edge pixels (frozen), else smooth3x3
///  combined    -> at least two of {smooth3x3, compactness, not on a strong edge}
/// Throws ConfigError for edge_snap/combined without an edge map.
bool prior_test(const Partition& p, const MoveProposal& m, const EnergyConfig& cfg,
                const EdgeMap* edges);

}  // namespace seeds
