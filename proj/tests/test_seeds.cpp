#include <doctest.h>

#include <random>

#include "seeds/errors.hpp"
#include "seeds/metrics.hpp"
#include "seeds/seeds.hpp"
#include "support/oracles.hpp"

using namespace seeds;

namespace {

std::shared_ptr<const LabImage> lab_of(const RgbImage& rgb) {
  return std::make_shared<const LabImage>(prepare_image(rgb));
}

LabelMap seam_map(int w, int h, int seam) {
  LabelMap map(w, h, 0);
  for (int y = seam; y < h; ++y) {
    for (int x = 0; x < w; ++x) map.at(x, y) = 1;
  }
  return map;
}

SeedsConfig config(int k) {
  SeedsConfig cfg;
  cfg.target_superpixels = k;
  return cfg;
}

}  // namespace

TEST_CASE("constant image stays on the grid") {
  const auto image = lab_of(RgbImage(40, 30, Rgb{90, 140, 30}));
  for (const int k : {1, 4, 12, 30}) {
    const auto result = segment(image, config(k));
    const auto grid = init_grid(image, k, 2);
    CHECK(result.partition.label_map() == grid.partition.label_map());
    CHECK(result.accepted_moves == 0);
    CHECK(result.achieved_k == grid.partition.num_superpixels());
  }
}

TEST_CASE("two flat halves converge onto the colour seam") {
  for (const int seam : {13, 19}) {
    CAPTURE(seam);
    const auto image = lab_of(oracle::two_tone(32, 32, seam, Rgb{220, 30, 30}, Rgb{20, 40, 200}));
    const auto result = segment(image, config(2));
    REQUIRE(result.achieved_k == 2);
    auto want = seam_map(32, 32, seam);
    if (result.partition.label(0, 0) != 0) {
      for (auto& v : want.labels) v = 1 - v;
    }
    CHECK(result.partition.label_map() == want);
    CHECK(oracle::validate_partition(result.partition).empty());
  }
}

TEST_CASE("zero budget returns the grid") {
  const auto scene = oracle::multi_region_scene(96, 64, 5, 3);
  const auto image = lab_of(scene.image);
  auto cfg = config(24);
  cfg.time_budget_ms = 0.0;
  const auto result = segment(image, cfg);
  CHECK(result.partition.label_map() == init_grid(image, 24, 2).partition.label_map());
  CHECK(result.budget_expired);
  CHECK(result.elapsed_ms < 50.0);
  CHECK(oracle::validate_partition(result.partition).empty());
}

TEST_CASE("any budget yields a valid partition") {
  const auto scene = oracle::multi_region_scene(200, 150, 8, 4);
  const auto image = lab_of(scene.image);
  for (const double budget : {0.0, 0.05, 0.2, 1.0, 3.0}) {
    auto cfg = config(100);
    cfg.time_budget_ms = budget;
    cfg.pixel_passes.reset();
    const auto result = segment(image, cfg);
    CAPTURE(budget);
    CHECK(oracle::validate_partition(result.partition).empty());
  }
}

TEST_CASE("determinism") {
  const auto scene = oracle::multi_region_scene(80, 60, 6, 5);
  const auto image = lab_of(scene.image);
  auto cfg = config(40);
  CHECK(segment(image, cfg).partition.label_map() == segment(image, cfg).partition.label_map());
  cfg.traversal = Traversal::seeded_random;
  cfg.rng_seed = 7;
  const auto a = segment(image, cfg).partition.label_map();
  CHECK(a == segment(image, cfg).partition.label_map());
  cfg.rng_seed = 8;
  const auto b = segment(image, cfg).partition.label_map();
  MESSAGE("seed 7 vs seed 8 label maps " << std::string(a == b ? "equal" : "differ"));
}

TEST_CASE("sweeps") {
  const auto scene = oracle::multi_region_scene(64, 48, 4, 6);
  const auto image = lab_of(scene.image);

  SegmentationContext single(image, config(1));
  CHECK(single.sweep_level(kPixelLevel) == 0);
  for (int l = 0; l < single.hierarchy().num_levels(); ++l) CHECK(single.sweep_level(l) == 0);

  SegmentationContext ctx(image, config(12));
  int rounds = 0;
  while (ctx.sweep_level(kPixelLevel) != 0 && rounds < 1000) ++rounds;
  REQUIRE(rounds < 1000);
  const auto fixed = ctx.partition().label_map();
  CHECK(ctx.sweep_level(kPixelLevel) == 0);
  CHECK(ctx.partition().label_map() == fixed);
  CHECK(oracle::validate_partition(ctx.partition()).empty());
}

TEST_CASE("hooks see every move and sweep") {
  const auto scene = oracle::multi_region_scene(64, 48, 4, 7);
  const auto image = lab_of(scene.image);
  std::int64_t moves = 0;
  std::int64_t swept = 0;
  SegmentHooks hooks;
  hooks.on_move = [&](const MoveProposal&, const Partition&) { ++moves; };
  hooks.on_sweep = [&](int, int accepted, const Partition& p, const BlockHierarchy&) {
    swept += accepted;
    REQUIRE(oracle::validate_partition(p).empty());
  };
  const auto result = segment(image, config(12), hooks);
  CHECK(moves == result.accepted_moves);
  CHECK(swept == result.accepted_moves);
  CHECK(result.proposed_moves >= result.accepted_moves);
}

TEST_CASE("means update test") {
  std::vector<Lab> lab(4 * 2, Lab{50.0, 0.0, 0.0});
  lab[2] = lab[3] = lab[6] = lab[7] = Lab{50.0, 60.0, 0.0};
  lab[1] = Lab{50.0, 60.0, 0.0};
  Quantizer q;
  const auto image = std::make_shared<const LabImage>(quantize(LabImage(4, 2, lab), q));
  const LabelMap map(4, 2, std::vector<std::int32_t>{0, 0, 1, 1, 0, 0, 1, 1});
  const Partition p(image, map);
  // Source mean a = 15, dest mean a = 60.
  CHECK(means_update_test(p, MoveProposal::pixel(1, 0, 1)));
  CHECK_FALSE(means_update_test(p, MoveProposal::pixel(5, 0, 1)));

  std::vector<Lab> tie(4 * 1);
  tie[0] = Lab{10.0, 0.0, 0.0};
  tie[1] = Lab{20.0, 0.0, 0.0};
  tie[2] = Lab{30.0, 0.0, 0.0};
  tie[3] = Lab{40.0, 0.0, 0.0};
  const auto tie_image = std::make_shared<const LabImage>(quantize(LabImage(4, 1, tie), q));
  // Source {10, 20, 30} has mean 20, dest {40}: pixel 2 (30) is 10 from both.
  const Partition t(tie_image, LabelMap(4, 1, std::vector<std::int32_t>{0, 0, 0, 1}));
  CHECK_FALSE(means_update_test(t, MoveProposal::pixel(2, 0, 1)));

  std::mt19937_64 rng(31);
  std::uniform_real_distribution<double> u(-60.0, 60.0);
  for (int trial = 0; trial < 30; ++trial) {
    std::vector<Lab> values(10 * 10);
    for (auto& v : values) v = {50.0 + u(rng) / 2, u(rng), u(rng)};
    const auto img = std::make_shared<const LabImage>(quantize(LabImage(10, 10, values), q));
    const auto labels = oracle::random_connected_labels(10, 10, 6, rng);
    const Partition rp(img, labels);
    for (int i = 0; i < 100; ++i) {
      const int x = i % 10;
      if (x + 1 >= 10 || labels.at(x + 1, i / 10) == labels.labels[static_cast<std::size_t>(i)]) continue;
      const auto m = MoveProposal::pixel(i, labels.labels[static_cast<std::size_t>(i)], labels.at(x + 1, i / 10));
      auto dist = [&](std::int32_t k) {
        double s = 0, l = 0, a = 0, b = 0;
        for (int j = 0; j < 100; ++j) {
          if (labels.labels[static_cast<std::size_t>(j)] != k) continue;
          ++s;
          l += values[static_cast<std::size_t>(j)].l;
          a += values[static_cast<std::size_t>(j)].a;
          b += values[static_cast<std::size_t>(j)].b;
        }
        const auto& c = values[static_cast<std::size_t>(i)];
        return (c.l - l / s) * (c.l - l / s) + (c.a - a / s) * (c.a - a / s) + (c.b - b / s) * (c.b - b / s);
      };
      REQUIRE(means_update_test(rp, m) == (dist(m.dest) < dist(m.source)));
    }
  }
}

TEST_CASE("pixel-only baselines") {
  const auto scene = oracle::multi_region_scene(96, 64, 6, 8);
  const auto image = lab_of(scene.image);
  const GroundTruth truth(scene.truth);
  const auto grid = evaluate(grid_baseline(96, 64, 24), truth);
  for (const auto& cfg : {sph_config(config(24)), spm_config(config(24))}) {
    CHECK_FALSE(cfg.block_levels);
    std::int64_t block_moves = 0;
    SegmentHooks hooks;
    hooks.on_sweep = [&](int level, int accepted, const Partition&, const BlockHierarchy&) {
      if (level != kPixelLevel) block_moves += accepted;
    };
    const auto result = segment(image, cfg, hooks);
    CHECK(block_moves == 0);
    CHECK(oracle::validate_partition(result.partition).empty());
    CHECK(evaluate(result.partition, truth).cue <= grid.cue);
  }
}

TEST_CASE("exact mode never lowers the energy") {
  std::mt19937_64 rng(41);
  const auto image = oracle::image_from_bins(32, 32, oracle::noise_bins(32, 32, 6, rng));
  auto cfg = config(8);
  cfg.energy.mode = EvaluationMode::exact;
  const double start = total_energy(init_grid(image, 8, 2).partition, cfg.energy);
  const auto result = segment(image, cfg);
  REQUIRE(result.final_energy.has_value());
  CHECK(*result.final_energy >= start);
  CHECK(*result.final_energy == doctest::Approx(total_energy(result.partition, cfg.energy)).epsilon(1e-12));
}

TEST_CASE("pixel level does not lose boundary recall gained at block level") {
  struct Case {
    int side;
    int seam;
    int k;
  };
  for (const auto c : {Case{32, 13, 2}, Case{32, 19, 2}, Case{64, 37, 4}, Case{64, 23, 4}}) {
    CAPTURE(c.side);
    CAPTURE(c.seam);
    const auto image = lab_of(oracle::two_tone(c.side, c.side, c.seam, Rgb{200, 200, 40}, Rgb{30, 90, 160}));
    const GroundTruth truth(seam_map(c.side, c.side, c.seam));
    double after_blocks = -1.0;
    double last = -1.0;
    SegmentHooks hooks;
    hooks.on_sweep = [&](int level, int, const Partition& p, const BlockHierarchy&) {
      last = boundary_recall(p.label_map(), truth);
      if (level >= 0) after_blocks = last;
    };
    segment(image, config(c.k), hooks);
    REQUIRE(after_blocks >= 0.0);
    CHECK(last >= after_blocks);
    if (c.k == 2) CHECK(last == 1.0);
  }
}

TEST_CASE("config validation") {
  auto cfg = config(10);
  cfg.pixel_passes.reset();
  CHECK_THROWS_AS(cfg.validate(), ConfigError);
  cfg.time_budget_ms = 5.0;
  CHECK_NOTHROW(cfg.validate());
  cfg.bins_per_channel = 0;
  CHECK_THROWS_AS(cfg.validate(), ConfigError);
  cfg = config(0);
  CHECK_THROWS_AS(cfg.validate(), ConfigError);
  cfg = config(10);
  cfg.min_block = 5;
  CHECK_THROWS_AS(cfg.validate(), ConfigError);
  cfg = config(10);
  cfg.time_budget_ms = -1.0;
  CHECK_THROWS_AS(cfg.validate(), ConfigError);
}

TEST_CASE("deadline") {
  Deadline none(std::nullopt);
  for (int i = 0; i < 200; ++i) CHECK_FALSE(none.expired());
  Deadline zero(0.0);
  CHECK(zero.expired());
  CHECK(zero.has_expired());
  Deadline later(1e6);
  for (int i = 0; i < 200; ++i) CHECK_FALSE(later.expired());
  CHECK_FALSE(later.has_expired());
}

TEST_CASE("segment from RGB re-quantizes and accounts conversion time") {
  const auto scene = oracle::multi_region_scene(64, 48, 4, 9);
  auto cfg = config(12);
  cfg.bins_per_channel = 4;
  const auto from_rgb = segment(scene.image, cfg);
  const auto from_lab = segment(lab_of(scene.image), cfg);
  CHECK(from_rgb.partition.label_map() == from_lab.partition.label_map());
  CHECK(from_rgb.partition.num_bins() == 64);
  CHECK(from_rgb.elapsed_ms > 0.0);
}
