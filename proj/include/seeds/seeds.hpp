#pragma once

#include <chrono>
#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <random>

#include "seeds/energy.hpp"
#include "seeds/image.hpp"
#include "seeds/partition.hpp"

namespace seeds {

enum class Traversal { raster, seeded_random };

/// Acceptance rule of pixel-level sweeps.
enum class UpdateRule { histogram, means };

struct SeedsConfig {
  int target_superpixels = 200;
  int bins_per_channel = 5;
  int min_block = 2;
  EnergyConfig energy;
  /// Passes over each block level; a level also ends after a pass with no accepted move.
  int passes_per_level = 2;
  /// false skips every block level (pixel-only updating).
  bool block_levels = true;
  /// Histogram pixel passes; std::nullopt runs until convergence or the time budget.
  std::optional<int> pixel_passes = 4;
  UpdateRule pixel_rule = UpdateRule::histogram;
  /// Wall-clock budget in milliseconds measured from the start of segment().
  std::optional<double> time_budget_ms;
  std::uint64_t rng_seed = 0;
  Traversal traversal = Traversal::raster;
  /// Finish with `means_passes` pixel sweeps using the mean-colour rule.
  bool post_process_means = true;
  int means_passes = 2;

  /// Throws ConfigError on out-of-range values or when neither pixel_passes nor
  /// time_budget_ms bounds the run.
  void validate() const;
};

/// Pixel-only histogram updating.
SeedsConfig sph_config(SeedsConfig base = {});
/// Pixel-only mean-colour updating.
SeedsConfig spm_config(SeedsConfig base = {});

struct SegmentationResult {
  Partition partition;
  int achieved_k = 0;
  std::int64_t accepted_moves = 0;
  std::int64_t proposed_moves = 0;
  double elapsed_ms = 0.0;
  /// Recomputed energy at the end; set in exact evaluation mode only.
  std::optional<double> final_energy;
  bool budget_expired = false;
};

/// Observation points for tests and instrumentation.
struct SegmentHooks {
  /// Called after each applied move.
  std::function<void(const MoveProposal&, const Partition&)> on_move;
  /// Called after each sweep with the level swept (kPixelLevel for pixel sweeps).
  std::function<void(int level, int accepted, const Partition&, const BlockHierarchy&)> on_sweep;
};

/// Mean-colour rule: squared LAB distance of the pixel to dest's mean is strictly
/// smaller than to source's mean. Means come from the partition's running sums.
bool means_update_test(const Partition& p, const MoveProposal& m);

/// Checks the clock only every `kClockStride` calls so timing stays out of the inner loop.
class Deadline {
 public:
  static constexpr int kClockStride = 64;

  using Clock = std::chrono::steady_clock;

  explicit Deadline(std::optional<double> budget_ms, Clock::time_point start = Clock::now());

  /// True once the budget has run out; sticky. Reads the clock on every
  /// kClockStride-th call only.
  bool expired();
  /// Sticky flag without touching the clock.
  bool has_expired() const { return expired_; }
  double elapsed_ms() const;

 private:
  Clock::time_point start_;
  std::optional<Clock::time_point> end_;
  int calls_ = 0;
  bool expired_ = false;
};

/// One mutable segmentation: grid initialization, block and pixel sweeps.
/// Single-threaded; independent contexts may run on different threads.
class SegmentationContext {
 public:
  SegmentationContext(std::shared_ptr<const LabImage> image, const SeedsConfig& cfg,
                      SegmentHooks hooks = {});

  /// Visits every unit of the level once (block level index, or kPixelLevel) in the
  /// configured traversal order and, for boundary units, tries the neighbouring labels
  /// in order left, right, up, down, applying the first accepted move. Returns the
  /// number of accepted moves. Stops early when the deadline expires.
  int sweep_level(int level);
  int sweep_pixels(UpdateRule rule);

  /// Runs the full schedule: block levels coarse to fine, histogram pixel passes,
  /// then mean-colour passes.
  SegmentationResult run();

  const Partition& partition() const { return partition_; }
  const BlockHierarchy& hierarchy() const { return hierarchy_; }
  const GridLayout& layout() const { return layout_; }
  const SeedsConfig& config() const { return cfg_; }
  Deadline& deadline() { return deadline_; }
  std::int64_t accepted_moves() const { return accepted_; }
  std::int64_t proposed_moves() const { return proposed_; }

 private:
  int sweep_blocks(int level);
  bool accept(const MoveProposal& m, UpdateRule rule);
  bool try_unit(Unit unit, UpdateRule rule);
  std::vector<int> visit_order(int count);

  std::shared_ptr<const LabImage> image_;
  SeedsConfig cfg_;
  SegmentHooks hooks_;
  Deadline deadline_;
  GridLayout layout_;
  BlockHierarchy hierarchy_;
  Partition partition_;
  std::optional<EdgeMap> edges_;
  std::mt19937_64 rng_;
  std::int64_t accepted_ = 0;
  std::int64_t proposed_ = 0;
};

/// Runs the whole pipeline. The image is re-quantized when its bins do not match
/// cfg.bins_per_channel. The returned partition is always valid, also when the
/// time budget interrupts the run.
SegmentationResult segment(const LabImage& image, const SeedsConfig& cfg, const SegmentHooks& hooks = {});
SegmentationResult segment(std::shared_ptr<const LabImage> image, const SeedsConfig& cfg,
                           const SegmentHooks& hooks = {});
/// Colour conversion and quantization followed by segment(). The time budget and
/// elapsed_ms include the conversion.
SegmentationResult segment(const RgbImage& image, SeedsConfig cfg, const SegmentHooks& hooks = {});

}  // namespace seeds
