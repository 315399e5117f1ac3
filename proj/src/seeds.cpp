#include "seeds/seeds.hpp"

#include <algorithm>
#include <numeric>

#include "seeds/errors.hpp"

namespace seeds {

namespace {

// Exact mode only accepts moves that raise the energy by more than rounding noise.
constexpr double kExactMargin = 1e-12;
// Squared LAB distance below which two mean distances count as a tie.
constexpr double kMeansTie = 1e-9;

}  // namespace

void SeedsConfig::validate() const {
  if (target_superpixels < 1) throw ConfigError("number of superpixels must be >= 1");
  if (bins_per_channel < 1) throw ConfigError("bins per channel must be >= 1");
  if (min_block != 2 && min_block != 3) throw ConfigError("min_block must be 2 or 3");
  if (passes_per_level < 0) throw ConfigError("passes per level must be >= 0");
  if (pixel_passes && *pixel_passes < 0) throw ConfigError("pixel passes must be >= 0");
  if (means_passes < 0) throw ConfigError("means passes must be >= 0");
  if (time_budget_ms && !(*time_budget_ms >= 0.0)) throw ConfigError("time budget must be >= 0");
  if (!pixel_passes && !time_budget_ms) {
    throw ConfigError("unlimited pixel passes need a time budget");
  }
  energy.validate();
}

SeedsConfig sph_config(SeedsConfig base) {
  base.block_levels = false;
  base.pixel_rule = UpdateRule::histogram;
  base.post_process_means = false;
  return base;
}

SeedsConfig spm_config(SeedsConfig base) {
  base.block_levels = false;
  base.pixel_rule = UpdateRule::means;
  base.post_process_means = false;
  return base;
}

bool means_update_test(const Partition& p, const MoveProposal& m) {
  const auto& c = p.image().lab(m.unit.index);
  auto distance = [&](std::int32_t k) {
    const auto& mo = p.moments(k);
    const double s = p.size(k);
    const double dl = c.l - mo.l / s;
    const double da = c.a - mo.a / s;
    const double db = c.b - mo.b / s;
    return dl * dl + da * da + db * db;
  };
  return distance(m.dest) < distance(m.source) - kMeansTie;
}

// ---------------------------------------------------------------------------
// Deadline

Deadline::Deadline(std::optional<double> budget_ms, Clock::time_point start) : start_(start) {
  if (budget_ms) {
    end_ = start_ + std::chrono::duration_cast<Clock::duration>(
                        std::chrono::duration<double, std::milli>(*budget_ms));
  }
}

bool Deadline::expired() {
  if (expired_) return true;
  if (!end_) return false;
  if (calls_++ % kClockStride == 0) expired_ = Clock::now() >= *end_;
  return expired_;
}

double Deadline::elapsed_ms() const {
  return std::chrono::duration<double, std::milli>(Clock::now() - start_).count();
}

// ---------------------------------------------------------------------------
// Segmentation context

SegmentationContext::SegmentationContext(std::shared_ptr<const LabImage> image,
                                         const SeedsConfig& cfg, SegmentHooks hooks)
    : image_(std::move(image)),
      cfg_(cfg),
      hooks_(std::move(hooks)),
      deadline_(cfg.time_budget_ms),
      layout_(),
      hierarchy_(),
      partition_([&] {
        cfg_.validate();
        auto init = init_grid(image_, cfg_.target_superpixels, cfg_.min_block);
        layout_ = std::move(init.layout);
        hierarchy_ = std::move(init.hierarchy);
        return std::move(init.partition);
      }()),
      rng_(cfg.rng_seed) {
  const auto prior = cfg_.energy.prior;
  if (prior == Prior::edge_snap || prior == Prior::combined) {
    edges_.emplace(*image_, cfg_.energy.edge_quantile);
  }
}

std::vector<int> SegmentationContext::visit_order(int count) {
  std::vector<int> order(static_cast<std::size_t>(count));
  std::iota(order.begin(), order.end(), 0);
  if (cfg_.traversal == Traversal::seeded_random) std::shuffle(order.begin(), order.end(), rng_);
  return order;
}

bool SegmentationContext::accept(const MoveProposal& m, UpdateRule rule) {
  const Partition& p = partition_;
  if (!p.can_release(m.source, unit_size(hierarchy_, m.unit))) return false;

  if (rule == UpdateRule::means && m.unit.is_pixel()) {
    if (!means_update_test(p, m)) return false;
  } else if (cfg_.energy.mode == EvaluationMode::exact) {
    double delta = exact_color_delta(p, hierarchy_, m);
    if (cfg_.energy.prior == Prior::smooth3x3) {
      delta += cfg_.energy.gamma * exact_boundary_delta(p, hierarchy_, m, cfg_.energy.patch_size);
    }
    if (!(delta > kExactMargin)) return false;
    if (m.unit.is_pixel() && cfg_.energy.prior != Prior::none &&
        cfg_.energy.prior != Prior::smooth3x3 &&
        !prior_test(p, m, cfg_.energy, edges_ ? &*edges_ : nullptr)) {
      return false;
    }
  } else {
    if (!fast_color_test(p, hierarchy_, m)) return false;
    if (m.unit.is_pixel() && cfg_.energy.prior != Prior::none &&
        !prior_test(p, m, cfg_.energy, edges_ ? &*edges_ : nullptr)) {
      return false;
    }
  }
  return !locally_disconnects(p, hierarchy_, m);
}

bool SegmentationContext::try_unit(Unit unit, UpdateRule rule) {
  const auto k = unit_label(partition_, hierarchy_, unit);
  std::array<std::int32_t, 4> labels{};
  int count = 0;

  if (unit.is_pixel()) {
    const int w = partition_.width();
    const int x = unit.index % w;
    const int y = unit.index / w;
    for (const auto& [dx, dy] : kNeighbourOffsets) {
      const int nx = x + dx;
      const int ny = y + dy;
      if (nx < 0 || ny < 0 || nx >= w || ny >= partition_.height()) continue;
      const auto n = partition_.label(nx, ny);
      if (n != k && std::find(labels.begin(), labels.begin() + count, n) == labels.begin() + count) {
        labels[static_cast<std::size_t>(count++)] = n;
      }
    }
  } else {
    const auto& level = hierarchy_.level(unit.level);
    for (const auto& [dx, dy] : kNeighbourOffsets) {
      const int nb = level.neighbour(unit.index, dx, dy);
      if (nb < 0) continue;
      const auto r = level.bounds(nb);
      const auto n = partition_.label(r.x0, r.y0);
      if (n != k && std::find(labels.begin(), labels.begin() + count, n) == labels.begin() + count) {
        labels[static_cast<std::size_t>(count++)] = n;
      }
    }
  }
  if (count == 0) return false;
  if (cfg_.traversal == Traversal::seeded_random && count > 1) {
    std::shuffle(labels.begin(), labels.begin() + count, rng_);
  }

  for (int i = 0; i < count; ++i) {
    if (deadline_.expired()) return false;
    ++proposed_;
    const MoveProposal m{unit, k, labels[static_cast<std::size_t>(i)]};
    if (accept(m, rule)) {
      apply_move(partition_, hierarchy_, m);
      ++accepted_;
      if (hooks_.on_move) hooks_.on_move(m, partition_);
      return true;
    }
  }
  return false;
}

int SegmentationContext::sweep_level(int level) {
  return level == kPixelLevel ? sweep_pixels(cfg_.pixel_rule) : sweep_blocks(level);
}

int SegmentationContext::sweep_blocks(int level) {
  int accepted = 0;
  for (const int b : visit_order(hierarchy_.level(level).num_blocks())) {
    if (deadline_.expired()) break;
    if (try_unit(Unit::block(level, b), UpdateRule::histogram)) ++accepted;
  }
  if (hooks_.on_sweep) hooks_.on_sweep(level, accepted, partition_, hierarchy_);
  return accepted;
}

int SegmentationContext::sweep_pixels(UpdateRule rule) {
  int accepted = 0;
  if (cfg_.traversal == Traversal::raster) {
    for (int i = 0; i < partition_.num_pixels(); ++i) {
      if (deadline_.expired()) break;
      if (try_unit(Unit::pixel(i), rule)) ++accepted;
    }
  } else {
    for (const int i : visit_order(partition_.num_pixels())) {
      if (deadline_.expired()) break;
      if (try_unit(Unit::pixel(i), rule)) ++accepted;
    }
  }
  if (hooks_.on_sweep) hooks_.on_sweep(kPixelLevel, accepted, partition_, hierarchy_);
  return accepted;
}

SegmentationResult SegmentationContext::run() {
  if (cfg_.block_levels) {
    for (int level = hierarchy_.num_levels() - 1; level >= 0; --level) {
      for (int pass = 0; pass < cfg_.passes_per_level && !deadline_.expired(); ++pass) {
        if (sweep_level(level) == 0) break;
      }
    }
  }

  for (int pass = 0; !cfg_.pixel_passes || pass < *cfg_.pixel_passes; ++pass) {
    if (deadline_.expired()) break;
    if (sweep_pixels(cfg_.pixel_rule) == 0) break;
  }

  // Mean-colour moves do not ascend the histogram energy, so exact runs skip them.
  const bool post = cfg_.post_process_means && cfg_.pixel_rule == UpdateRule::histogram &&
                    cfg_.energy.mode == EvaluationMode::fast;
  if (post) {
    for (int pass = 0; pass < cfg_.means_passes; ++pass) {
      if (deadline_.expired()) break;
      if (sweep_pixels(UpdateRule::means) == 0) break;
    }
  }

  SegmentationResult result{partition_, partition_.num_superpixels(), accepted_, proposed_,
                            deadline_.elapsed_ms(), std::nullopt, deadline_.has_expired()};
  if (cfg_.energy.mode == EvaluationMode::exact) {
    result.final_energy = total_energy(partition_, cfg_.energy);
  }
  return result;
}

SegmentationResult segment(std::shared_ptr<const LabImage> image, const SeedsConfig& cfg,
                           const SegmentHooks& hooks) {
  if (!image) throw DomainError("segment: null image");
  cfg.validate();
  if (image->bins_per_channel() != cfg.bins_per_channel) {
    Quantizer q;
    q.bins_per_channel = cfg.bins_per_channel;
    image = std::make_shared<const LabImage>(quantize(*image, q));
  }
  SegmentationContext ctx(std::move(image), cfg, hooks);
  return ctx.run();
}

SegmentationResult segment(const LabImage& image, const SeedsConfig& cfg, const SegmentHooks& hooks) {
  return segment(std::make_shared<const LabImage>(image), cfg, hooks);
}

SegmentationResult segment(const RgbImage& image, SeedsConfig cfg, const SegmentHooks& hooks) {
  const auto start = Deadline::Clock::now();
  cfg.validate();
  auto lab = std::make_shared<const LabImage>(prepare_image(image, cfg.bins_per_channel));
  const std::chrono::duration<double, std::milli> spent = Deadline::Clock::now() - start;
  if (cfg.time_budget_ms) cfg.time_budget_ms = std::max(0.0, *cfg.time_budget_ms - spent.count());
  auto result = segment(std::move(lab), cfg, hooks);
  result.elapsed_ms += spent.count();
  return result;
}

}  // namespace seeds
