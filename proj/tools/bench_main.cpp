// Benchmark command line: synthetic data, clicks@mIoU runs and ablation sweeps.
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "guidemap/bench.hpp"
#include "guidemap/error.hpp"
#include "guidemap/io.hpp"

namespace fs = std::filesystem;
using namespace guidemap;
using namespace guidemap::bench;

namespace {

struct CommonOptions {
  std::string dataset;
  std::string layout = "full";
  double threshold = 0.90;
  std::uint64_t seed = 0;
  int k = 400;
  std::string f2 = "1.5";
  double f = 2.0;
  double f1 = 0.0;
  std::string segmenter = "reference";
  std::string scale_mode = "estimated";
  std::string policy = "deterministic";
  std::string truncation = "saturate";
  int threads = 0;
  int budget = kEvaluationClickBudget;
  ReferenceSegmenterConfig weights;
};

void add_common(CLI::App* cmd, CommonOptions& o) {
  cmd->add_option("--dataset", o.dataset, "Dataset root (images/, masks/, instances/)")->required();
  cmd->add_option("--layout", o.layout, "Guidance layout name or comma-separated channel kinds");
  cmd->add_option("--threshold", o.threshold, "Target mIoU")->check(CLI::Range(0.0, 1.0));
  cmd->add_option("--seed", o.seed, "Random seed");
  cmd->add_option("--k", o.k, "Superpixel count");
  cmd->add_option("--f", o.f, "Superpixel truncation factor");
  cmd->add_option("--f1", o.f1, "Lower proposal size factor");
  cmd->add_option("--f2", o.f2, "Upper proposal size factor (number or inf)");
  cmd->add_option("--segmenter", o.segmenter, "reference | oracle | empty")
      ->check(CLI::IsMember({"reference", "oracle", "empty"}));
  cmd->add_option("--scale-mode", o.scale_mode, "estimated | ground_truth | none")
      ->check(CLI::IsMember({"estimated", "ground_truth", "none"}));
  cmd->add_option("--policy", o.policy, "deterministic | randomized")
      ->check(CLI::IsMember({"deterministic", "randomized"}));
  cmd->add_option("--truncation", o.truncation, "saturate | literal_max")
      ->check(CLI::IsMember({"saturate", "literal_max"}));
  cmd->add_option("--threads", o.threads, "Worker threads (0: all cores)");
  cmd->add_option("--budget", o.budget, "Click budget per instance")->check(CLI::PositiveNumber);
  cmd->add_option("--w-distance", o.weights.w_distance, "Reference segmenter distance weight");
  cmd->add_option("--w-object", o.weights.w_object, "Reference segmenter object weight");
  cmd->add_option("--w-color", o.weights.w_color, "Reference segmenter colour weight");
  cmd->add_option("--color-scale", o.weights.color_scale, "Colour similarity scale (CIELAB units)")
      ->check(CLI::PositiveNumber);
  cmd->add_option("--missing-similarity", o.weights.missing_similarity,
                  "Colour similarity of a polarity without clicks");
  cmd->add_option("--object-offset", o.weights.object_offset, "Offset subtracted from obj/255");
  cmd->add_option("--distance-needs-both", o.weights.distance_needs_both,
                  "Use the distance term only once both polarities have clicks (true/false)");
}

BenchmarkConfig make_config(const CommonOptions& o) {
  BenchmarkConfig c;
  auto layout = layout_by_name(o.layout);
  if (!layout) throw Error(Errc::kParameter, "unknown layout: " + o.layout);
  c.layout = *layout;
  c.threshold = o.threshold;
  c.seed = o.seed;
  c.slic.k = o.k;
  c.factors.f = o.f;
  c.factors.f1 = o.f1;
  c.factors.f2 = o.f2 == "inf" ? kInfinity : std::stod(o.f2);
  c.scale_mode = o.scale_mode == "estimated"      ? ScaleMode::kEstimated
                 : o.scale_mode == "ground_truth" ? ScaleMode::kGroundTruth
                                                  : ScaleMode::kNone;
  c.policy = o.policy == "deterministic" ? ClickPolicy::kDeterministic : ClickPolicy::kRandomized;
  c.guidance.truncation =
      o.truncation == "saturate" ? TruncationMode::kSaturate : TruncationMode::kLiteralMax;
  c.threads = o.threads;
  c.budget = o.budget;
  return c;
}

SegmenterFactory make_factory(const CommonOptions& o) {
  if (o.segmenter == "oracle") return oracle_factory();
  if (o.segmenter == "empty") return empty_factory();
  return reference_factory(o.weights);
}

// Loads the dataset and reports itemised errors; returns false when any occurred.
bool load(const std::string& root, DatasetLoad& out) {
  if (!fs::is_directory(root)) throw Error(Errc::kIo, "dataset root not found: " + root);
  out = load_dataset(root);
  for (const auto& e : out.errors) {
    std::cerr << "load error [" << e.instance << "]: " << e.message << '\n';
  }
  return out.errors.empty();
}

fs::path csv_path(const fs::path& json_path) {
  fs::path p = json_path;
  return p.replace_extension(".csv");
}

void print_summary(const BenchmarkReport& r) {
  std::printf("instances=%zu mean_noc=%.3f successes=%d zero_click=%d failures=%d\n",
              r.instances.size(), r.mean_noc, r.successes, r.zero_click_successes, r.failures);
  std::printf("mIoU@1=%.3f @5=%.3f @10=%.3f @20=%.3f\n", r.curve.size() > 0 ? r.curve[0] : 0.0,
              r.curve.size() > 4 ? r.curve[4] : 0.0, r.curve.size() > 9 ? r.curve[9] : 0.0,
              r.curve.size() > 19 ? r.curve[19] : 0.0);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Guidance-map benchmark harness"};
  app.require_subcommand(1);

  CommonOptions run_opts;
  std::string run_out = "report.json";
  std::string trace_dir;
  auto* run = app.add_subcommand("run", "Evaluate one configuration");
  add_common(run, run_opts);
  run->add_option("--out", run_out, "Report path (JSON; a CSV table is written alongside)");
  run->add_option("--trace-dir", trace_dir, "Write one JSONL click trace per instance");

  CommonOptions sweep_opts;
  std::string param;
  std::vector<std::string> values;
  std::string sweep_out = "sweep.json";
  auto* sw = app.add_subcommand("sweep", "Evaluate one parameter over several values");
  add_common(sw, sweep_opts);
  sw->add_option("--param", param, "layout | k | f2")
      ->required()
      ->check(CLI::IsMember({"layout", "k", "f2"}));
  sw->add_option("--values", values, "Values to sweep")->required();
  sw->add_option("--out", sweep_out, "Report path (JSON; a CSV table is written alongside)");

  int synth_n = 100;
  std::uint64_t synth_seed = 0;
  std::string synth_out;
  auto* synth = app.add_subcommand("synth", "Write a synthetic dataset");
  synth->add_option("--n", synth_n, "Number of instances")->check(CLI::PositiveNumber);
  synth->add_option("--seed", synth_seed, "Random seed");
  synth->add_option("--out", synth_out, "Output directory")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (*synth) {
      const auto instances = make_synthetic_dataset(synth_n, synth_seed, synth_out);
      std::printf("wrote %zu instances to %s\n", instances.size(), synth_out.c_str());
      return 0;
    }

    if (*run) {
      DatasetLoad data;
      const bool clean = load(run_opts.dataset, data);
      if (data.instances.empty()) {
        std::cerr << "no valid instances in " << run_opts.dataset << '\n';
        return 2;
      }
      const auto report =
          run_benchmark(data.instances, make_factory(run_opts), make_config(run_opts));
      io::write_text(run_out, report_to_json(report).dump(2) + "\n");
      io::write_text(csv_path(run_out), report_to_csv(report));
      if (!trace_dir.empty()) {
        fs::create_directories(trace_dir);
        for (const auto& r : report.instances) {
          io::write_text(fs::path(trace_dir) / (r.id + ".jsonl"), r.trace_jsonl);
        }
      }
      print_summary(report);
      return clean && report.failures == 0 ? 0 : 2;
    }

    if (*sw) {
      DatasetLoad data;
      const bool clean = load(sweep_opts.dataset, data);
      if (data.instances.empty()) {
        std::cerr << "no valid instances in " << sweep_opts.dataset << '\n';
        return 2;
      }
      const auto result = sweep(data.instances, make_factory(sweep_opts),
                                *parse_sweep_param(param), values, make_config(sweep_opts));
      io::write_text(sweep_out, sweep_to_json(result).dump(2) + "\n");
      const std::string table = sweep_table_csv(result);
      io::write_text(csv_path(sweep_out), table);
      std::cout << table;
      bool failed = false;
      for (const auto& r : result.reports) failed |= r.failures > 0;
      return clean && !failed ? 0 : 2;
    }
  } catch (const Error& e) {
    std::cerr << "error (" << errc_name(e.code()) << "): " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
