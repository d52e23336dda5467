#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "guidemap/guidance.hpp"
#include "guidemap/types.hpp"

namespace guidemap {

// Randomness -------------------------------------------------------------------

/// 64-bit Mersenne Twister with hand-rolled draws, so sequences do not depend
/// on the standard library's distribution implementations.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next() { return engine_(); }
  /// Uniform integer in [0, n); n >= 1.
  std::size_t index(std::size_t n);
  /// Uniform double in [0, 1).
  double uniform();

  template <typename T>
  const T& pick(std::span<const T> items) {
    return items[index(items.size())];
  }
  template <typename T>
  void shuffle(std::vector<T>& items) {
    for (std::size_t i = items.size(); i > 1; --i) {
      std::swap(items[i - 1], items[index(i)]);
    }
  }

 private:
  std::mt19937_64 engine_;
};

// Scale ------------------------------------------------------------------------

/// Factors copied into every scale estimate.
struct ScaleFactors {
  double f = 2.0;
  double f1 = 0.0;
  double f2 = 1.5;
};

/// s = sqrt(pi) * |first_pos - first_neg|. Throws kDegenerateScale when the
/// clicks coincide.
ScaleEstimate estimate_scale(Point first_pos, Point first_neg,
                             const ScaleFactors& factors = {});

/// Ground-truth scale: square root of the object's pixel count.
ScaleEstimate scale_from_mask(const BinaryMask& gt, const ScaleFactors& factors = {});

// Click simulation -------------------------------------------------------------

/// Choice sets the simulator draws from, one value per instance.
struct SamplingConfig {
  std::vector<int> n_pos{2, 3, 4, 5};
  std::vector<int> n_neg1{5, 10};
  std::vector<int> n_neg2{3, 5};
  std::vector<double> d_in1{15, 20, 40};
  std::vector<double> d_in2{7, 10, 20};
  std::vector<double> d_out1{15, 40, 60};
  std::vector<double> d_out2{10, 15, 25};
  double replace_prob = 0.3;
  int n_iter = 5;
  std::uint64_t rng_seed = 0;

  /// Throws kParameter on empty choice sets, non-positive distances or a
  /// probability outside [0,1].
  void validate() const;
};

/// Distance from every pixel to the nearest object boundary pixel (a
/// foreground pixel with a 4-neighbour in the background). +inf everywhere
/// when the object has no boundary.
std::vector<double> boundary_distance(const BinaryMask& gt);

/// Foreground pixel farthest from the boundary (raster-order tie break).
/// Throws kEmptyObject for an empty mask.
Point interior_point(const BinaryMask& gt);

struct PositiveSample {
  std::vector<Point> clicks;
  double d1 = 0.0;  // effective boundary distance after relaxation
  double d2 = 0.0;  // effective pairwise distance after relaxation
};

/// Up to n clicks inside the object, at least d1 from the boundary and d2
/// from each other. Unsatisfiable constraints are halved until a click fits;
/// at minimum the interior point is returned.
PositiveSample sample_positive_clicks(const BinaryMask& gt, int n, double d1,
                                      double d2, Rng& rng);
PositiveSample sample_positive_clicks(const BinaryMask& gt, const SamplingConfig& cfg,
                                      Rng& rng);

enum class NegativeStrategy { kBackground = 1, kOtherObjects = 2 };

struct NegativeSample {
  std::vector<Point> clicks;
  std::string diagnostic;  // set when no valid candidate region existed
};

NegativeSample sample_negative_clicks(const BinaryMask& gt,
                                      std::span<const BinaryMask> other_instances,
                                      NegativeStrategy strategy,
                                      const SamplingConfig& cfg, Rng& rng);

struct Correction {
  Point pixel;
  bool positive = true;

  friend bool operator==(const Correction&, const Correction&) = default;
};

/// Click at the pixel of the largest 4-connected error region nearest to
/// that region's centroid. nullopt when pred == gt.
std::optional<Correction> correction_click(const BinaryMask& pred, const BinaryMask& gt);

/// Uniformly random error pixel; nullopt when pred == gt.
std::optional<Correction> random_correction_click(const BinaryMask& pred,
                                                  const BinaryMask& gt, Rng& rng);

/// Initial training-style clicks: positives plus negatives from both strategies.
ClickSet simulate_initial_clicks(const BinaryMask& gt,
                                 std::span<const BinaryMask> other_instances,
                                 const SamplingConfig& cfg, Rng& rng);

/// n_iter error-driven clicks sampled from pred vs gt. Each new click
/// replaces a random existing click of its polarity with probability
/// replace_prob, otherwise it is appended.
ClickSet add_iteration_clicks(ClickSet clicks, const BinaryMask& pred,
                              const BinaryMask& gt, const SamplingConfig& cfg, Rng& rng);

// Segmenters -------------------------------------------------------------------

/// Anything that maps an image and its guidance stack to a mask. Must be
/// deterministic for fixed inputs.
class Segmenter {
 public:
  virtual ~Segmenter() = default;
  virtual BinaryMask predict(const Scene& scene, const GuidanceStack& stack) = 0;
  virtual std::string name() const = 0;
};

/// Test double that always answers with the ground truth.
class OracleSegmenter final : public Segmenter {
 public:
  explicit OracleSegmenter(BinaryMask gt) : gt_(std::move(gt)) {}
  BinaryMask predict(const Scene&, const GuidanceStack&) override { return gt_; }
  std::string name() const override { return "oracle"; }

 private:
  BinaryMask gt_;
};

/// Test double that never predicts any foreground.
class EmptySegmenter final : public Segmenter {
 public:
  BinaryMask predict(const Scene& scene, const GuidanceStack&) override {
    return BinaryMask(scene.width(), scene.height());
  }
  std::string name() const override { return "empty"; }
};

struct ReferenceSegmenterConfig {
  double w_distance = 1.0;
  double w_object = 1.0;
  double w_color = 1.0;
  /// CIELAB distance at which colour similarity falls to exp(-1).
  double color_scale = 20.0;
  /// Similarity assigned to a polarity without clicks: exp(-1), the level of
  /// a colour exactly color_scale away.
  double missing_similarity = 0.36787944117144233;
  /// Subtracted from obj/255 so that only superpixels sharing most of the
  /// clicked superpixel's proposals gain support.
  double object_offset = 0.5;
  /// With one polarity the distance term is positive everywhere, so it is
  /// skipped until both polarities have clicks.
  bool distance_needs_both = true;
};

/// Classical per-superpixel classifier over the guidance stack:
///   score = w1 (neg - pos)/255 + w2 (obj/255 - object_offset) + w3 (sim_pos - sim_neg)
/// with pos/neg the superpixel-mean distance channels and sim the colour
/// similarity to the most similar clicked superpixel of each polarity
/// (missing_similarity for a polarity without clicks). Foreground iff
/// score > 0. Clicked superpixels are read off the stack (zero distance) and
/// forced to their polarity.
class ReferenceSegmenter final : public Segmenter {
 public:
  explicit ReferenceSegmenter(ReferenceSegmenterConfig config = {}) : config_(config) {}
  BinaryMask predict(const Scene& scene, const GuidanceStack& stack) override;
  std::string name() const override { return "reference"; }

 private:
  ReferenceSegmenterConfig config_;
};

/// Free-function form of the reference segmenter.
BinaryMask reference_segmenter(const Scene& scene, const GuidanceStack& stack,
                               const ReferenceSegmenterConfig& config = {});

// Sessions ---------------------------------------------------------------------

inline constexpr int kEvaluationClickBudget = 20;

enum class ScaleMode { kEstimated, kGroundTruth, kNone };
enum class ClickPolicy { kDeterministic, kRandomized };

struct SessionConfig {
  int budget = kEvaluationClickBudget;
  double iou_target = 0.90;
  Layout layout = full_layout();
  GuidanceConfig guidance{.scale_fallback = true};
  ScaleFactors factors;
  ScaleMode scale_mode = ScaleMode::kEstimated;
  ClickPolicy policy = ClickPolicy::kDeterministic;
  bool zero_click_prediction = false;
  std::uint64_t seed = 0;
};

struct TraceRecord {
  int index = 0;  // 1-based click count
  Point click;
  bool positive = true;
  double miou = 0.0;

  friend bool operator==(const TraceRecord&, const TraceRecord&) = default;
};

struct SessionState {
  ClickSet clicks;
  std::optional<ScaleEstimate> scale;
  BinaryMask prev_mask;
  int click_budget_used = 0;
  std::vector<TraceRecord> trace;
  std::optional<double> initial_miou;  // zero-click prediction, when run
  bool reached_target = false;
  std::optional<std::string> error;    // set when the segmenter failed

  /// Clicks needed to reach the target; the budget when never reached.
  int noc(int budget) const;
};

/// Simulated-user evaluation loop. The first click is the interior point of
/// the object, later clicks follow the correction policy. Stops when the
/// target IoU is reached or the budget is spent.
SessionState run_session(const Scene& scene, const BinaryMask& gt, Segmenter& segmenter,
                         const SessionConfig& config);

/// One JSON object per line: {"index","x","y","polarity","miou"}.
std::string trace_to_jsonl(const SessionState& state);

}  // namespace guidemap
