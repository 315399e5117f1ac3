#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "seeds/image.hpp"
#include "seeds/label_io.hpp"
#include "seeds/partition.hpp"
#include "seeds/seeds.hpp"

namespace seeds {

/// Ground-truth segmentation. Segment ids are arbitrary non-negative integers; they
/// only matter for tie-breaking (smaller id wins).
class GroundTruth {
 public:
  /// Throws DomainError on an empty map or negative ids.
  explicit GroundTruth(LabelMap labels);

  int width() const { return labels_.width; }
  int height() const { return labels_.height; }
  const LabelMap& labels() const { return labels_; }
  int num_segments() const { return num_segments_; }

 private:
  LabelMap labels_;
  int num_segments_ = 0;
};

GroundTruth read_ground_truth(const std::filesystem::path& path);

struct SegmentDiagnostics {
  std::int32_t id = 0;
  std::int64_t size = 0;
  /// Superpixels overlapping the segment.
  int overlapping = 0;
  /// Pixels of those superpixels lying outside the segment (its share of UE, unnormalized).
  std::int64_t leaked = 0;
};

struct MetricsReport {
  double ue = 0.0;
  double cue = 0.0;
  double br = 0.0;
  double asa = 0.0;
  int k = 0;
  std::vector<SegmentDiagnostics> segments;
};

// All metrics throw DimensionError when the maps differ in size.

double undersegmentation_error(const LabelMap& superpixels, const GroundTruth& truth);
double corrected_ue(const LabelMap& superpixels, const GroundTruth& truth);
double asa(const LabelMap& superpixels, const GroundTruth& truth);
/// Fraction of ground-truth boundary pixels within Chebyshev distance `eps` of a
/// superpixel boundary pixel. 1 when the ground truth has no boundary.
double boundary_recall(const LabelMap& superpixels, const GroundTruth& truth, int eps = 2);

MetricsReport evaluate(const LabelMap& superpixels, const GroundTruth& truth, int eps = 2);
inline MetricsReport evaluate(const Partition& p, const GroundTruth& truth, int eps = 2) {
  return evaluate(p.label_map(), truth, eps);
}

/// 1 where the right or lower neighbour carries a different label.
std::vector<std::uint8_t> boundary_mask(const LabelMap& labels);

/// Initial grid labels without any optimization.
LabelMap grid_baseline(int width, int height, int target_k, int min_block = 2);

struct ContourMap {
  int width = 0;
  int height = 0;
  std::vector<double> values;

  double at(int x, int y) const { return values[static_cast<std::size_t>(y) * width + x]; }
};

/// Average boundary mask of segmentations at each K in `scales`.
/// Throws DomainError on an empty scale list.
ContourMap contour_map(const LabImage& image, std::span<const int> scales, const SeedsConfig& cfg);

/// 12 log-spaced scales from 6 to 600.
std::vector<int> default_contour_scales();

/// 8-bit PGM, value 255 for a contour strength of 1.
std::vector<std::uint8_t> encode_contour_pgm(const ContourMap& map);

}  // namespace seeds
