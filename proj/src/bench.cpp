#include "guidemap/bench.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <iomanip>
#include <numbers>
#include <set>
#include <sstream>
#include <thread>

#include "guidemap/color.hpp"
#include "guidemap/error.hpp"
#include "guidemap/imaging.hpp"
#include "guidemap/io.hpp"

namespace guidemap::bench {

namespace fs = std::filesystem;
using nlohmann::json;

// Dataset loading ---------------------------------------------------------------

namespace {

bool is_mask_file(const fs::path& p) {
  return p.extension() == ".pgm" || p.extension() == ".png";
}

std::optional<fs::path> find_mask(const fs::path& dir, const std::string& stem) {
  for (const char* ext : {".pgm", ".png"}) {
    fs::path p = dir / (stem + ext);
    if (fs::exists(p)) return p;
  }
  return std::nullopt;
}

}  // namespace

DatasetLoad load_dataset(const fs::path& root) {
  DatasetLoad out;
  const fs::path images = root / "images";
  const fs::path masks = root / "masks";
  const fs::path instances = root / "instances";
  if (!fs::is_directory(images)) return out;

  std::vector<fs::path> image_files;
  for (const auto& e : fs::directory_iterator(images)) {
    if (e.is_regular_file() && e.path().extension() == ".png") image_files.push_back(e.path());
  }
  std::sort(image_files.begin(), image_files.end());

  std::set<std::string> stems;
  for (const auto& img_path : image_files) {
    const std::string id = img_path.stem().string();
    stems.insert(id);
    const auto mask_path = find_mask(masks, id);
    if (!mask_path) {
      out.errors.push_back({id, "missing ground-truth mask in " + masks.string()});
      continue;
    }
    try {
      const ImageBuffer image = io::read_png(img_path);
      const BinaryMask mask = io::read_mask(*mask_path);
      if (mask.width() != image.width() || mask.height() != image.height()) {
        out.errors.push_back({id, "mask is " + std::to_string(mask.width()) + "x" +
                                      std::to_string(mask.height()) + " but image is " +
                                      std::to_string(image.width()) + "x" +
                                      std::to_string(image.height())});
        continue;
      }
      if (mask.empty()) {
        out.errors.push_back({id, "ground-truth mask has no foreground"});
        continue;
      }
      DatasetInstance inst{id, img_path, *mask_path, {}};
      const fs::path other_dir = instances / id;
      if (fs::is_directory(other_dir)) {
        for (const auto& e : fs::directory_iterator(other_dir)) {
          if (e.is_regular_file() && is_mask_file(e.path())) {
            inst.other_instances.push_back(e.path());
          }
        }
        std::sort(inst.other_instances.begin(), inst.other_instances.end());
        for (const auto& o : inst.other_instances) {
          const BinaryMask om = io::read_mask(o);
          if (om.width() != image.width() || om.height() != image.height()) {
            throw Error(Errc::kShape, "instance mask " + o.filename().string() +
                                          " does not match the image");
          }
        }
      }
      out.instances.push_back(std::move(inst));
    } catch (const std::exception& e) {
      out.errors.push_back({id, e.what()});
    }
  }
  if (fs::is_directory(masks)) {
    for (const auto& e : fs::directory_iterator(masks)) {
      if (e.is_regular_file() && is_mask_file(e.path()) &&
          !stems.contains(e.path().stem().string())) {
        out.errors.push_back({e.path().stem().string(), "mask without a matching image"});
      }
    }
  }
  return out;
}

// Synthetic data ----------------------------------------------------------------

namespace {

struct Rgb {
  std::uint8_t r, g, b;
};

enum class ShapeType { kDisc, kRect, kLShape };

struct Shape {
  ShapeType type;
  int x0, y0, w, h;  // bounding box
  int notch_w = 0, notch_h = 0;  // removed top-right corner for L-shapes
  Rgb color;

  bool covers(int x, int y) const {
    if (x < x0 || y < y0 || x >= x0 + w || y >= y0 + h) return false;
    switch (type) {
      case ShapeType::kRect: return true;
      case ShapeType::kLShape:
        return !(x >= x0 + w - notch_w && y < y0 + notch_h);
      case ShapeType::kDisc: {
        const double rx = w / 2.0;
        const double ry = h / 2.0;
        const double dx = (x + 0.5 - x0 - rx) / rx;
        const double dy = (y + 0.5 - y0 - ry) / ry;
        return dx * dx + dy * dy <= 1.0;
      }
    }
    return false;
  }
};

int uniform_int(Rng& rng, int lo, int hi) {  // inclusive
  return lo + static_cast<int>(rng.index(static_cast<std::size_t>(hi - lo + 1)));
}

Shape random_shape(Rng& rng, bool small, int size) {
  Shape s{};
  s.type = static_cast<ShapeType>(rng.index(3));
  int extent_lo = small ? 10 : 30;
  int extent_hi = small ? 30 : 72;
  s.w = uniform_int(rng, extent_lo, extent_hi);
  s.h = s.type == ShapeType::kDisc ? s.w : uniform_int(rng, extent_lo, extent_hi);
  if (s.type == ShapeType::kLShape) {
    s.notch_w = s.w / 2;
    s.notch_h = s.h / 2;
  }
  // Keep the whole shape in frame.
  s.x0 = uniform_int(rng, 2, size - s.w - 2);
  s.y0 = uniform_int(rng, 2, size - s.h - 2);
  return s;
}

// True when some pixel of `a` lies within `gap` (Chebyshev) of a pixel of `b`.
bool shapes_near(const Shape& a, const Shape& b, int gap) {
  const int x_lo = std::max(a.x0, b.x0 - gap);
  const int x_hi = std::min(a.x0 + a.w, b.x0 + b.w + gap);
  const int y_lo = std::max(a.y0, b.y0 - gap);
  const int y_hi = std::min(a.y0 + a.h, b.y0 + b.h + gap);
  for (int y = y_lo; y < y_hi; ++y) {
    for (int x = x_lo; x < x_hi; ++x) {
      if (!a.covers(x, y)) continue;
      for (int dy = -gap; dy <= gap; ++dy) {
        for (int dx = -gap; dx <= gap; ++dx) {
          if (b.covers(x + dx, y + dy)) return true;
        }
      }
    }
  }
  return false;
}

const Rgb kPalette[] = {
    {220, 40, 40},  {40, 170, 60},  {40, 70, 220},  {235, 200, 30}, {200, 60, 200},
    {30, 200, 210}, {240, 130, 20}, {130, 60, 20},  {250, 250, 250}, {20, 20, 20},
};

double color_gap(Rgb a, Rgb b) {
  return lab_distance(srgb_to_lab(a.r, a.g, a.b), srgb_to_lab(b.r, b.g, b.b));
}

std::uint8_t clamp8(double v) {
  return static_cast<std::uint8_t>(std::clamp(std::lround(v), 0L, 255L));
}

}  // namespace

std::vector<DatasetInstance> make_synthetic_dataset(int n, std::uint64_t seed,
                                                    const fs::path& out) {
  if (n < 1) throw Error(Errc::kParameter, "synthetic dataset needs n >= 1");
  std::error_code ec;
  for (const char* sub : {"images", "masks", "instances"}) {
    fs::create_directories(out / sub, ec);
    if (ec) throw Error(Errc::kIo, "cannot create " + (out / sub).string() + ": " + ec.message());
  }
  constexpr int kSize = kSyntheticSize;
  constexpr std::size_t kPaletteSize = std::size(kPalette);
  Rng rng(seed);
  std::vector<DatasetInstance> result;
  for (int i = 0; i < n; ++i) {
    std::ostringstream name;
    name << std::setw(4) << std::setfill('0') << i;
    const std::string id = name.str();

    // Background: muted base colour, diagonal stripes and mild noise.
    const Rgb base{clamp8(60 + rng.index(140)), clamp8(60 + rng.index(140)),
                   clamp8(60 + rng.index(140))};
    const double stripe_amp = 6.0 + static_cast<double>(rng.index(10));
    const double period = 10.0 + static_cast<double>(rng.index(20));
    const double angle = rng.uniform() * std::numbers::pi;
    const double cx = std::cos(angle);
    const double cy = std::sin(angle);

    const int n_shapes = 1 + static_cast<int>(rng.index(3));
    const bool small_target = i % 4 == 0;
    std::vector<Shape> shapes;
    for (int k = 0; k < n_shapes; ++k) {
      const bool is_target = k == n_shapes - 1;
      shapes.push_back(random_shape(rng, is_target ? small_target : rng.index(2) == 0, kSize));
    }
    // Target colour first; each distractor either repeats it (another
    // instance of the same kind) or takes a fresh colour.
    std::vector<std::size_t> used;
    auto fresh_color = [&] {
      std::size_t c = 0;
      do {
        c = rng.index(kPaletteSize);
      } while (std::find(used.begin(), used.end(), c) != used.end() ||
               color_gap(kPalette[c], base) < 35.0);
      used.push_back(c);
      return kPalette[c];
    };
    shapes.back().color = fresh_color();
    for (int k = 0; k + 1 < n_shapes; ++k) {
      // A same-coloured instance needs a visible gap to the target.
      const bool repeat = rng.index(2) == 0 && !shapes_near(shapes[k], shapes.back(), 3);
      shapes[k].color = repeat ? shapes.back().color : fresh_color();
    }

    ImageBuffer image(kSize, kSize);
    std::vector<int> owner(static_cast<std::size_t>(kSize) * kSize, -1);
    for (int y = 0; y < kSize; ++y) {
      for (int x = 0; x < kSize; ++x) {
        const double t = std::sin(2.0 * std::numbers::pi * (x * cx + y * cy) / period);
        const double noise[3] = {static_cast<double>(rng.index(9)) - 4.0,
                                 static_cast<double>(rng.index(9)) - 4.0,
                                 static_cast<double>(rng.index(9)) - 4.0};
        image.set(x, y, clamp8(base.r + stripe_amp * t + noise[0]),
                  clamp8(base.g + stripe_amp * t + noise[1]),
                  clamp8(base.b + stripe_amp * t + noise[2]));
        for (int k = 0; k < n_shapes; ++k) {
          if (shapes[k].covers(x, y)) owner[static_cast<std::size_t>(y) * kSize + x] = k;
        }
      }
    }
    for (int y = 0; y < kSize; ++y) {
      for (int x = 0; x < kSize; ++x) {
        const int k = owner[static_cast<std::size_t>(y) * kSize + x];
        if (k < 0) continue;
        const Rgb c = shapes[k].color;
        const double shade = static_cast<double>(rng.index(7)) - 3.0;
        image.set(x, y, clamp8(c.r + shade), clamp8(c.g + shade), clamp8(c.b + shade));
      }
    }

    DatasetInstance inst;
    inst.id = id;
    inst.image = out / "images" / (id + ".png");
    inst.mask = out / "masks" / (id + ".pgm");
    io::write_png(inst.image, image);
    const int target = n_shapes - 1;
    auto mask_of = [&](int k) {
      BinaryMask m(kSize, kSize);
      for (std::size_t p = 0; p < owner.size(); ++p) {
        if (owner[p] == k) m.set(static_cast<int>(p % kSize), static_cast<int>(p / kSize), true);
      }
      return m;
    };
    io::write_mask_pgm(inst.mask, mask_of(target));
    const fs::path other_dir = out / "instances" / id;
    for (int k = 0; k < target; ++k) {
      const BinaryMask m = mask_of(k);
      if (m.empty()) continue;
      fs::create_directories(other_dir, ec);
      const fs::path p = other_dir / ("object_" + std::to_string(k) + ".pgm");
      io::write_mask_pgm(p, m);
      inst.other_instances.push_back(p);
    }
    result.push_back(std::move(inst));
  }
  return result;
}

// Segmenter factories -------------------------------------------------------------

SegmenterFactory reference_factory(ReferenceSegmenterConfig config) {
  return [config](const Scene&, const BinaryMask&) -> std::unique_ptr<Segmenter> {
    return std::make_unique<ReferenceSegmenter>(config);
  };
}

SegmenterFactory oracle_factory() {
  return [](const Scene&, const BinaryMask& gt) -> std::unique_ptr<Segmenter> {
    return std::make_unique<OracleSegmenter>(gt);
  };
}

SegmenterFactory empty_factory() {
  return [](const Scene&, const BinaryMask&) -> std::unique_ptr<Segmenter> {
    return std::make_unique<EmptySegmenter>();
  };
}

// Benchmark -----------------------------------------------------------------------

namespace {

json config_to_json(const BenchmarkConfig& c) {
  json j;
  j["layout"] = layout_to_string(c.layout);
  j["threshold"] = c.threshold;
  j["seed"] = c.seed;
  j["k"] = c.slic.k;
  j["compactness"] = c.slic.compactness;
  j["slic_iterations"] = c.slic.iterations;
  j["max_proposals"] = c.max_proposals ? json(*c.max_proposals) : json("2*superpixels");
  j["f"] = c.factors.f;
  j["f1"] = c.factors.f1;
  j["f2"] = std::isinf(c.factors.f2) ? json("inf") : json(c.factors.f2);
  j["scale_mode"] = c.scale_mode == ScaleMode::kEstimated     ? "estimated"
                    : c.scale_mode == ScaleMode::kGroundTruth ? "ground_truth"
                                                               : "none";
  j["policy"] = c.policy == ClickPolicy::kDeterministic ? "deterministic" : "randomized";
  j["truncation"] = c.guidance.truncation == TruncationMode::kSaturate ? "saturate" : "literal_max";
  j["budget"] = c.budget;
  j["notes"] = {
      "NoC counts the budget for instances that never reach the threshold",
      "mIoU is computed per instance, then averaged",
      "object proposals come from greedy superpixel merging, not MCG",
  };
  return j;
}

InstanceResult evaluate_instance(const DatasetInstance& inst, const SegmenterFactory& factory,
                                 const BenchmarkConfig& config) {
  InstanceResult r;
  r.id = inst.id;
  r.noc = config.budget;
  try {
    Scene scene = Scene::build(io::read_png(inst.image), config.slic, config.max_proposals);
    const BinaryMask gt = io::read_mask(inst.mask);
    r.object_pixels = static_cast<std::int64_t>(gt.count());
    auto segmenter = factory(scene, gt);

    SessionConfig sc;
    sc.budget = config.budget;
    sc.iou_target = config.threshold;
    sc.layout = config.layout;
    sc.guidance = config.guidance;
    sc.factors = config.factors;
    sc.scale_mode = config.scale_mode;
    sc.policy = config.policy;
    sc.seed = config.seed;

    // Zero-click prediction, reported separately from NoC.
    {
      std::optional<ScaleEstimate> scale;
      if (config.scale_mode == ScaleMode::kGroundTruth) scale = scale_from_mask(gt, config.factors);
      const BinaryMask prev(scene.width(), scene.height());
      const auto stack = assemble_stack(scene, ClickSet{}, scale, &prev, config.layout,
                                        config.guidance);
      r.zero_click_miou = miou(segmenter->predict(scene, stack), gt);
      r.zero_click_success = r.zero_click_miou >= config.threshold;
    }

    const SessionState state = run_session(scene, gt, *segmenter, sc);
    if (state.error) throw Error(Errc::kConfiguration, *state.error);
    r.noc = state.noc(config.budget);
    r.success = state.reached_target;
    for (const auto& t : state.trace) r.miou_per_click.push_back(t.miou);
    r.final_miou = r.miou_per_click.empty() ? 0.0 : r.miou_per_click.back();
    r.trace_jsonl = trace_to_jsonl(state);
  } catch (const std::exception& e) {
    r.error = e.what();
    r.noc = config.budget;
    r.success = false;
  }
  return r;
}

}  // namespace

BenchmarkReport run_benchmark(std::span<const DatasetInstance> dataset,
                              const SegmenterFactory& factory, const BenchmarkConfig& config) {
  if (dataset.empty()) throw Error(Errc::kParameter, "benchmark dataset is empty");
  if (config.budget < 1) throw Error(Errc::kParameter, "click budget must be at least 1");

  std::vector<const DatasetInstance*> order;
  for (const auto& d : dataset) order.push_back(&d);
  std::stable_sort(order.begin(), order.end(),
                   [](const auto* a, const auto* b) { return a->id < b->id; });

  std::vector<InstanceResult> results(order.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < order.size(); i = next++) {
      results[i] = evaluate_instance(*order[i], factory, config);
    }
  };
  unsigned threads = config.threads > 0 ? static_cast<unsigned>(config.threads)
                                        : std::max(1u, std::thread::hardware_concurrency());
  threads = std::min<unsigned>(threads, static_cast<unsigned>(order.size()));
  {
    std::vector<std::jthread> pool;
    for (unsigned t = 1; t < threads; ++t) pool.emplace_back(worker);
    worker();
  }

  BenchmarkReport report;
  report.config = config_to_json(config);
  report.curve.assign(static_cast<std::size_t>(config.budget), 0.0);
  double noc_sum = 0.0;
  for (const auto& r : results) {
    noc_sum += r.noc;
    report.successes += r.success ? 1 : 0;
    report.zero_click_successes += r.zero_click_success ? 1 : 0;
    report.failures += r.error ? 1 : 0;
    double last = 0.0;
    for (std::size_t c = 0; c < report.curve.size(); ++c) {
      if (c < r.miou_per_click.size()) last = r.miou_per_click[c];
      report.curve[c] += last;
    }
  }
  const double n = static_cast<double>(results.size());
  report.mean_noc = noc_sum / n;
  for (double& v : report.curve) v /= n;
  report.instances = std::move(results);
  return report;
}

json report_to_json(const BenchmarkReport& report) {
  json instances = json::array();
  for (const auto& r : report.instances) {
    json j;
    j["id"] = r.id;
    j["noc"] = r.noc;
    j["success"] = r.success;
    j["final_miou"] = r.final_miou;
    j["zero_click_miou"] = r.zero_click_miou;
    j["zero_click_success"] = r.zero_click_success;
    j["object_pixels"] = r.object_pixels;
    j["miou_per_click"] = r.miou_per_click;
    if (r.error) j["error"] = *r.error;
    instances.push_back(std::move(j));
  }
  json j;
  j["config"] = report.config;
  j["instances_evaluated"] = report.instances.size();
  j["mean_noc"] = report.mean_noc;
  j["successes"] = report.successes;
  j["zero_click_successes"] = report.zero_click_successes;
  j["failures"] = report.failures;
  j["miou_vs_clicks"] = report.curve;
  j["instances"] = std::move(instances);
  return j;
}

std::string report_to_csv(const BenchmarkReport& report) {
  std::ostringstream out;
  out << "id,noc,success,final_miou,zero_click_miou,object_pixels,error\n";
  out << std::setprecision(6);
  for (const auto& r : report.instances) {
    out << r.id << ',' << r.noc << ',' << (r.success ? 1 : 0) << ',' << r.final_miou << ','
        << r.zero_click_miou << ',' << r.object_pixels << ',' << (r.error ? "\"" + *r.error + "\"" : "")
        << '\n';
  }
  return out.str();
}

// Sweeps --------------------------------------------------------------------------

std::optional<SweepParam> parse_sweep_param(std::string_view name) {
  if (name == "layout") return SweepParam::kLayout;
  if (name == "k") return SweepParam::kK;
  if (name == "f2") return SweepParam::kF2;
  return std::nullopt;
}

std::string_view sweep_param_name(SweepParam param) {
  switch (param) {
    case SweepParam::kLayout: return "layout";
    case SweepParam::kK: return "k";
    case SweepParam::kF2: return "f2";
  }
  return "unknown";
}

SweepResult sweep(std::span<const DatasetInstance> dataset, const SegmenterFactory& factory,
                  SweepParam param, std::span<const std::string> values,
                  const BenchmarkConfig& base) {
  if (values.empty()) throw Error(Errc::kParameter, "sweep needs at least one value");
  SweepResult result;
  result.param = param;
  for (const std::string& v : values) {
    BenchmarkConfig cfg = base;
    switch (param) {
      case SweepParam::kLayout: {
        auto layout = layout_by_name(v);
        if (!layout) throw Error(Errc::kParameter, "unknown layout: " + v);
        cfg.layout = *layout;
        break;
      }
      case SweepParam::kK:
        try {
          cfg.slic.k = std::stoi(v);
        } catch (const std::exception&) {
          throw Error(Errc::kParameter, "invalid k value: " + v);
        }
        break;
      case SweepParam::kF2:
        if (v == "inf" || v == "+inf" || v == "infinity") {
          cfg.factors.f2 = kInfinity;
        } else {
          try {
            cfg.factors.f2 = std::stod(v);
          } catch (const std::exception&) {
            throw Error(Errc::kParameter, "invalid f2 value: " + v);
          }
        }
        break;
    }
    result.values.push_back(v);
    result.reports.push_back(run_benchmark(dataset, factory, cfg));
  }
  return result;
}

std::string sweep_table_csv(const SweepResult& result) {
  std::ostringstream out;
  out << sweep_param_name(result.param)
      << ",mean_noc,successes,zero_click_successes,failures,miou@1,miou@5,miou@10,miou@20\n";
  out << std::setprecision(6);
  for (std::size_t i = 0; i < result.reports.size(); ++i) {
    const auto& r = result.reports[i];
    auto at = [&](std::size_t c) { return c <= r.curve.size() ? r.curve[c - 1] : 0.0; };
    out << '"' << result.values[i] << '"' << ',' << r.mean_noc << ',' << r.successes << ','
        << r.zero_click_successes << ',' << r.failures << ',' << at(1) << ',' << at(5) << ','
        << at(10) << ',' << at(20) << '\n';
  }
  return out.str();
}

json sweep_to_json(const SweepResult& result) {
  json reports = json::array();
  for (std::size_t i = 0; i < result.reports.size(); ++i) {
    json r = report_to_json(result.reports[i]);
    r["sweep_value"] = result.values[i];
    reports.push_back(std::move(r));
  }
  return json{{"param", sweep_param_name(result.param)}, {"reports", std::move(reports)}};
}

}  // namespace guidemap::bench
