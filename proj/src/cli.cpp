#include "seeds/cli.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <exception>
#include <filesystem>
#include <fstream>
#include <map>
#include <mutex>
#include <ostream>
#include <sstream>
#include <thread>

#include <CLI11.hpp>
#include <json.hpp>

#include "log.hpp"
#include "seeds/errors.hpp"
#include "seeds/metrics.hpp"
#include "seeds/seeds.hpp"

namespace seeds::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

const std::map<std::string, Prior> kPriors{{"none", Prior::none},
                                           {"smooth", Prior::smooth3x3},
                                           {"compact", Prior::compactness},
                                           {"edge", Prior::edge_snap},
                                           {"combined", Prior::combined}};
const std::map<std::string, Traversal> kTraversals{{"raster", Traversal::raster},
                                                   {"random", Traversal::seeded_random}};

struct ConfigFlags {
  int superpixels = 200;
  int bins = 5;
  std::string prior = "none";
  double budget_ms = 0.0;
  CLI::Option* budget = nullptr;
  int pixel_passes = 4;
  std::uint64_t seed = 0;
  std::string traversal = "raster";
  bool no_post = false;

  void add_to(CLI::App& app) {
    app.add_option("--superpixels,-k", superpixels, "Target number of superpixels")
        ->check(CLI::PositiveNumber);
    app.add_option("--bins", bins, "Colour bins per LAB channel")->check(CLI::Range(1, 16));
    app.add_option("--prior", prior, "Shape prior")->check(CLI::IsMember({"none", "smooth", "compact", "edge", "combined"}));
    budget = app.add_option("--budget-ms", budget_ms, "Time budget in milliseconds")
                 ->check(CLI::NonNegativeNumber);
    app.add_option("--pixel-passes", pixel_passes, "Pixel-level passes")->check(CLI::NonNegativeNumber);
    app.add_option("--seed", seed, "Seed of the random traversal");
    app.add_option("--traversal", traversal, "Visiting order")->check(CLI::IsMember({"raster", "random"}));
    app.add_flag("--no-post", no_post, "Skip the mean-colour post-processing passes");
  }

  SeedsConfig config() const {
    SeedsConfig cfg;
    cfg.target_superpixels = superpixels;
    cfg.bins_per_channel = bins;
    cfg.energy.prior = kPriors.at(prior);
    if (budget->count() > 0) cfg.time_budget_ms = budget_ms;
    cfg.pixel_passes = pixel_passes;
    cfg.rng_seed = seed;
    cfg.traversal = kTraversals.at(traversal);
    cfg.post_process_means = !no_post;
    return cfg;
  }

  json to_json() const {
    return {{"superpixels", superpixels},
            {"bins", bins},
            {"prior", prior},
            {"budget_ms", budget->count() > 0 ? json(budget_ms) : json(nullptr)},
            {"pixel_passes", pixel_passes},
            {"seed", seed},
            {"traversal", traversal},
            {"post", !no_post}};
  }
};

std::string lower_extension(const fs::path& p) {
  auto ext = p.extension().string();
  std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char c) { return std::tolower(c); });
  return ext;
}

CLI::Validator extension_check(std::vector<std::string> allowed) {
  return CLI::Validator(
      [allowed](std::string& value) -> std::string {
        const auto ext = lower_extension(value);
        if (std::find(allowed.begin(), allowed.end(), ext) != allowed.end()) return {};
        std::string list;
        for (const auto& a : allowed) list += (list.empty() ? "" : ", ") + a;
        return "unsupported extension '" + ext + "' (expected " + list + ")";
      },
      "PATH", "extension");
}

std::vector<int> parse_int_list(const std::string& text, const char* what) {
  std::vector<int> values;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item.erase(0, item.find_first_not_of(" \t"));
    item.erase(item.find_last_not_of(" \t") + 1);
    if (item.empty()) continue;
    std::size_t used = 0;
    int v = 0;
    try {
      v = std::stoi(item, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used != item.size() || v < 1) {
      throw CLI::ValidationError(what, "'" + item + "' is not a positive integer");
    }
    values.push_back(v);
  }
  if (values.empty()) throw CLI::ValidationError(what, "empty list");
  return values;
}

void write_bytes(const fs::path& path, const std::vector<std::uint8_t>& bytes) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot open '" + path.string() + "' for writing");
  f.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!f) throw IoError("failed writing '" + path.string() + "'");
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream f(path);
  if (!f) throw IoError("cannot open '" + path.string() + "' for writing");
  f << text;
  if (!f) throw IoError("failed writing '" + path.string() + "'");
}

double elapsed_ms(std::chrono::steady_clock::time_point start) {
  return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
}

// The budget of a request covers colour conversion as well, so segment() gets what is left.
// ---------------------------------------------------------------------------
// segment

struct SegmentFlags {
  ConfigFlags config;
  std::string input;
  std::string labels_out;
  std::string overlay_out;
};

int cmd_segment(const SegmentFlags& f, std::ostream& out, spdlog::logger& log) {
  const auto rgb = load_image(f.input);
  const auto cfg = f.config.config();
  log.info("segmenting {} ({}x{}) into ~{} superpixels", f.input, rgb.width(), rgb.height(),
           cfg.target_superpixels);

  const auto start = std::chrono::steady_clock::now();
  const auto result = segment(rgb, cfg);
  const double ms = elapsed_ms(start);
  log.debug("{} of {} proposed moves accepted", result.accepted_moves, result.proposed_moves);

  const auto& labels = result.partition.label_map();
  if (!f.labels_out.empty()) write_label_map(f.labels_out, labels);
  if (!f.overlay_out.empty()) write_ppm(f.overlay_out, render_overlay(rgb, labels));

  const json line{{"K", result.achieved_k},
                  {"target_k", cfg.target_superpixels},
                  {"elapsed_ms", ms},
                  {"accepted_moves", result.accepted_moves},
                  {"budget_expired", result.budget_expired}};
  out << line.dump() << '\n';
  return kExitOk;
}

// ---------------------------------------------------------------------------
// bench

struct BenchFlags {
  ConfigFlags config;
  std::string images;
  std::string truth;
  std::string report;
  std::string sweep_k;
  std::string contour_scales;
  std::string contour_out;
  int jobs = 1;
};

struct BenchItem {
  std::string name;
  fs::path image;
  fs::path truth;
};

struct BenchRow {
  std::string name;
  int target_k = 0;
  MetricsReport metrics;
  double ms = 0.0;
};

std::vector<BenchItem> match_inputs(const fs::path& images, const fs::path& truths, std::ostream& err) {
  auto files = [](const fs::path& dir, auto keep) {
    if (!fs::is_directory(dir)) throw IoError("'" + dir.string() + "' is not a directory");
    std::map<std::string, fs::path> by_stem;
    for (const auto& e : fs::directory_iterator(dir)) {
      if (e.is_regular_file() && keep(lower_extension(e.path()))) by_stem[e.path().stem().string()] = e.path();
    }
    return by_stem;
  };
  const auto image_files = files(images, [](const std::string& e) { return e == ".ppm"; });
  const auto truth_files = files(truths, [](const std::string& e) { return e == ".pgm" || e == ".csv"; });

  std::vector<BenchItem> items;
  std::vector<std::string> offenders;
  for (const auto& [stem, path] : image_files) {
    const auto t = truth_files.find(stem);
    if (t == truth_files.end()) {
      offenders.push_back(path.string() + " (no ground truth)");
    } else {
      items.push_back({stem, path, t->second});
    }
  }
  for (const auto& [stem, path] : truth_files) {
    if (!image_files.contains(stem)) offenders.push_back(path.string() + " (no image)");
  }
  if (!offenders.empty()) {
    err << "unmatched inputs:\n";
    for (const auto& o : offenders) err << "  " << o << '\n';
    throw IoError(std::to_string(offenders.size()) + " unmatched image/truth files");
  }
  if (items.empty()) throw IoError("no .ppm images in '" + images.string() + "'");
  return items;
}

json aggregate_json(const std::vector<const BenchRow*>& rows) {
  double k = 0, ue = 0, cue = 0, br = 0, asa = 0, ms = 0;
  for (const auto* r : rows) {
    k += r->metrics.k;
    ue += r->metrics.ue;
    cue += r->metrics.cue;
    br += r->metrics.br;
    asa += r->metrics.asa;
    ms += r->ms;
  }
  const auto n = static_cast<double>(rows.size());
  return {{"count", rows.size()}, {"K", k / n},     {"ue", ue / n}, {"cue", cue / n},
          {"br", br / n},         {"asa", asa / n}, {"ms", ms / n}};
}

json report_json(const BenchFlags& f, const std::vector<int>& ks, const std::vector<BenchRow>& rows) {
  json config = f.config.to_json();
  config["sweep_k"] = ks;
  config["eps"] = 2;

  json images = json::array();
  std::vector<const BenchRow*> all;
  for (const auto& r : rows) {
    images.push_back({{"name", r.name},
                      {"target_k", r.target_k},
                      {"K", r.metrics.k},
                      {"ue", r.metrics.ue},
                      {"cue", r.metrics.cue},
                      {"br", r.metrics.br},
                      {"asa", r.metrics.asa},
                      {"ms", r.ms}});
    all.push_back(&r);
  }
  json by_k = json::array();
  for (const int k : ks) {
    std::vector<const BenchRow*> subset;
    for (const auto& r : rows) {
      if (r.target_k == k) subset.push_back(&r);
    }
    auto a = aggregate_json(subset);
    a["target_k"] = k;
    by_k.push_back(a);
  }
  auto aggregate = aggregate_json(all);
  aggregate["by_k"] = by_k;
  return {{"config", config}, {"images", images}, {"aggregate", aggregate}};
}

std::string report_csv(const json& report) {
  std::ostringstream s;
  s.precision(17);
  s << "name,target_k,K,ue,cue,br,asa,ms\n";
  for (const auto& r : report["images"]) {
    s << r["name"].get<std::string>() << ',' << r["target_k"].get<int>() << ',' << r["K"].get<int>() << ','
      << r["ue"].get<double>() << ',' << r["cue"].get<double>() << ',' << r["br"].get<double>() << ','
      << r["asa"].get<double>() << ',' << r["ms"].get<double>() << '\n';
  }
  for (const auto& a : report["aggregate"]["by_k"]) {
    s << "#mean," << a["target_k"].get<int>() << ',' << a["K"].get<double>() << ',' << a["ue"].get<double>()
      << ',' << a["cue"].get<double>() << ',' << a["br"].get<double>() << ',' << a["asa"].get<double>()
      << ',' << a["ms"].get<double>() << '\n';
  }
  return s.str();
}

int cmd_bench(const BenchFlags& f, std::ostream& out, std::ostream& err, spdlog::logger& log) {
  const auto base = f.config.config();
  const std::vector<int> ks = f.sweep_k.empty() ? std::vector<int>{base.target_superpixels}
                                                : parse_int_list(f.sweep_k, "--sweep-k");
  std::vector<int> scales;
  if (!f.contour_scales.empty()) scales = parse_int_list(f.contour_scales, "--contour-scales");
  fs::path contour_dir = f.contour_out.empty() ? fs::path(f.report).parent_path() : fs::path(f.contour_out);
  if (!scales.empty() && !contour_dir.empty()) fs::create_directories(contour_dir);

  const auto items = match_inputs(f.images, f.truth, err);
  log.info("benchmarking {} images at {} scale(s) with {} job(s)", items.size(), ks.size(), f.jobs);

  std::vector<std::vector<BenchRow>> per_item(items.size());
  std::vector<std::string> failures(items.size());
  std::atomic<std::size_t> next{0};
  std::mutex log_mutex;

  auto work = [&] {
    for (std::size_t i = next++; i < items.size(); i = next++) {
      const auto& item = items[i];
      try {
        const auto rgb = load_image(item.image);
        const GroundTruth truth = read_ground_truth(item.truth);
        for (const int k : ks) {
          auto cfg = base;
          cfg.target_superpixels = k;
          const auto start = std::chrono::steady_clock::now();
          const auto result = segment(rgb, cfg);
          const double ms = elapsed_ms(start);
          per_item[i].push_back({item.name, k, evaluate(result.partition, truth), ms});
          const std::lock_guard lock(log_mutex);
          log.info("{} K={}: {:.1f} ms", item.name, result.achieved_k, ms);
        }
        if (!scales.empty()) {
          const auto map = contour_map(prepare_image(rgb, base.bins_per_channel), scales, base);
          write_bytes(contour_dir / (item.name + ".contour.pgm"), encode_contour_pgm(map));
        }
      } catch (const std::exception& e) {
        failures[i] = e.what();
      }
    }
  };
  const int jobs = std::max(1, std::min<int>(f.jobs, static_cast<int>(items.size())));
  if (jobs == 1) {
    work();
  } else {
    std::vector<std::jthread> workers;
    for (int j = 0; j < jobs; ++j) workers.emplace_back(work);
  }

  bool failed = false;
  for (std::size_t i = 0; i < items.size(); ++i) {
    if (failures[i].empty()) continue;
    err << items[i].name << ": " << failures[i] << '\n';
    failed = true;
  }
  if (failed) return kExitRuntime;

  // Rows grouped by scale, then by image name.
  std::vector<BenchRow> rows;
  for (std::size_t s = 0; s < ks.size(); ++s) {
    for (const auto& item_rows : per_item) rows.push_back(item_rows[s]);
  }
  const auto report = report_json(f, ks, rows);
  if (lower_extension(f.report) == ".csv") {
    write_text(f.report, report_csv(report));
  } else {
    write_text(f.report, report.dump(2) + "\n");
  }
  out << json{{"images", items.size()}, {"rows", rows.size()}, {"report", f.report},
              {"aggregate", report["aggregate"]}}.dump()
      << '\n';
  return kExitOk;
}

}  // namespace

RgbImage render_overlay(const RgbImage& image, const LabelMap& labels) {
  if (image.width() != labels.width || image.height() != labels.height) {
    throw DimensionError("overlay: image and labels differ in size");
  }
  RgbImage out = image;
  const auto mask = boundary_mask(labels);
  for (int y = 0; y < image.height(); ++y) {
    for (int x = 0; x < image.width(); ++x) {
      if (mask[static_cast<std::size_t>(y) * image.width() + x]) out.set(x, y, {255, 255, 255});
    }
  }
  return out;
}

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"SEEDS superpixel segmentation and benchmarking", "seeds"};
  app.require_subcommand(1);

  SegmentFlags seg;
  auto* segment_cmd = app.add_subcommand("segment", "Segment one image");
  segment_cmd->add_option("--input,-i", seg.input, "Input image (binary PPM)")->required();
  seg.config.add_to(*segment_cmd);
  segment_cmd->add_option("--labels-out", seg.labels_out, "Label map output (.pgm or .csv)")
      ->check(extension_check({".pgm", ".csv"}));
  segment_cmd->add_option("--overlay-out", seg.overlay_out, "Boundary overlay output (.ppm)")
      ->check(extension_check({".ppm"}));

  BenchFlags bench;
  auto* bench_cmd = app.add_subcommand("bench", "Evaluate against ground truth");
  bench_cmd->add_option("--images", bench.images, "Directory of .ppm images")->required();
  bench_cmd->add_option("--truth", bench.truth, "Directory of ground-truth label maps")->required();
  bench_cmd->add_option("--report", bench.report, "Report output (.json or .csv)")
      ->required()
      ->check(extension_check({".json", ".csv"}));
  bench.config.add_to(*bench_cmd);
  bench_cmd->add_option("--sweep-k", bench.sweep_k, "Comma-separated superpixel counts");
  bench_cmd->add_option("--contour-scales", bench.contour_scales, "Comma-separated scales for contour maps");
  bench_cmd->add_option("--contour-out", bench.contour_out, "Directory for contour maps");
  bench_cmd->add_option("--jobs,-j", bench.jobs, "Images processed in parallel")->check(CLI::PositiveNumber);

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n\n" << app.help();
    return kExitUsage;
  }

  auto log = make_logger(err);
  try {
    if (*segment_cmd) return cmd_segment(seg, out, *log);
    return cmd_bench(bench, out, err, *log);
  } catch (const CLI::ValidationError& e) {
    err << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const ConfigError& e) {
    err << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitRuntime;
  }
}

}  // namespace seeds::cli
