#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"

#include "guidemap/guidance.hpp"
#include "guidemap/interaction.hpp"
#include "guidemap/superpixels.hpp"

namespace guidemap::bench {

struct DatasetInstance {
  std::string id;
  std::filesystem::path image;
  std::filesystem::path mask;
  std::vector<std::filesystem::path> other_instances;
};

struct LoadError {
  std::string instance;
  std::string message;
};

struct DatasetLoad {
  std::vector<DatasetInstance> instances;  // sorted by id
  std::vector<LoadError> errors;
};

/// Expects root/images/<id>.png with root/masks/<id>.{pgm,png} and optional
/// root/instances/<id>/*.{pgm,png} (other objects, for negative clicks).
/// Every pair is validated; problems are itemised rather than thrown.
DatasetLoad load_dataset(const std::filesystem::path& root);

inline constexpr int kSyntheticSize = 128;

/// Writes n synthetic 128x128 instances (1-3 coloured discs, rectangles and
/// L-shapes over textured backgrounds) in the load_dataset layout. The target
/// is drawn last; other shapes repeat its colour half of the time when they
/// keep a visible gap to it. Every fourth instance targets an object smaller
/// than 32x32 pixels.
std::vector<DatasetInstance> make_synthetic_dataset(int n, std::uint64_t seed,
                                                    const std::filesystem::path& out);

/// Builds a segmenter for one image; the ground truth is passed for test
/// doubles that need it.
using SegmenterFactory =
    std::function<std::unique_ptr<Segmenter>(const Scene& scene, const BinaryMask& gt)>;

SegmenterFactory reference_factory(ReferenceSegmenterConfig config = {});
SegmenterFactory oracle_factory();
SegmenterFactory empty_factory();

struct BenchmarkConfig {
  Layout layout = full_layout();
  double threshold = 0.90;
  std::uint64_t seed = 0;
  SlicParams slic{.k = 400, .compactness = 10.0, .iterations = 10};
  std::optional<std::size_t> max_proposals;
  ScaleFactors factors;
  ScaleMode scale_mode = ScaleMode::kEstimated;
  ClickPolicy policy = ClickPolicy::kDeterministic;
  GuidanceConfig guidance{.scale_fallback = true};
  int budget = kEvaluationClickBudget;
  int threads = 0;  // 0: hardware concurrency
};

struct InstanceResult {
  std::string id;
  int noc = 0;
  bool success = false;
  double final_miou = 0.0;
  double zero_click_miou = 0.0;
  bool zero_click_success = false;
  std::int64_t object_pixels = 0;
  std::vector<double> miou_per_click;
  std::string trace_jsonl;
  std::optional<std::string> error;
};

struct BenchmarkReport {
  std::vector<InstanceResult> instances;  // in dataset (id) order
  double mean_noc = 0.0;
  std::vector<double> curve;  // mean mIoU after 1..budget clicks
  int successes = 0;
  int zero_click_successes = 0;
  int failures = 0;  // instances that errored
  nlohmann::json config;
};

/// clicks@mIoU protocol: one simulated session per instance, NoC capped at
/// the budget, curve carries each instance's last mIoU forward once it stops.
BenchmarkReport run_benchmark(std::span<const DatasetInstance> dataset,
                              const SegmenterFactory& factory, const BenchmarkConfig& config);

nlohmann::json report_to_json(const BenchmarkReport& report);
/// One row per instance.
std::string report_to_csv(const BenchmarkReport& report);

enum class SweepParam { kLayout, kK, kF2 };

std::optional<SweepParam> parse_sweep_param(std::string_view name);
std::string_view sweep_param_name(SweepParam param);

struct SweepResult {
  SweepParam param = SweepParam::kLayout;
  std::vector<std::string> values;
  std::vector<BenchmarkReport> reports;
};

/// One report per value with the base configuration otherwise unchanged.
/// f2 values accept "inf".
SweepResult sweep(std::span<const DatasetInstance> dataset, const SegmenterFactory& factory,
                  SweepParam param, std::span<const std::string> values,
                  const BenchmarkConfig& base);

/// Combined table: value, mean NoC, successes, zero-click successes, curve
/// at 1/5/10/20 clicks.
std::string sweep_table_csv(const SweepResult& result);
nlohmann::json sweep_to_json(const SweepResult& result);

}  // namespace guidemap::bench
