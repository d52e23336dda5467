#pragma once

#include <limits>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "guidemap/color.hpp"
#include "guidemap/proposals.hpp"
#include "guidemap/superpixels.hpp"
#include "guidemap/types.hpp"

namespace guidemap {

/// Ordered positive and negative clicks. The first positive and first
/// negative click drive scale estimation.
struct ClickSet {
  std::vector<Point> positives;
  std::vector<Point> negatives;

  std::size_t size() const noexcept { return positives.size() + negatives.size(); }
  bool empty() const noexcept { return size() == 0; }
  friend bool operator==(const ClickSet&, const ClickSet&) = default;
};

inline constexpr double kInfinity = std::numeric_limits<double>::infinity();

/// Object scale s in pixels with the truncation factor f (superpixel maps)
/// and the accepted proposal-size band [f1, f2] in units of s^2.
struct ScaleEstimate {
  double s = 0.0;
  double f = 2.0;
  double f1 = 0.0;
  double f2 = 1.5;
};

enum class TruncationMode {
  kSaturate,    // min(G, f*s): distances beyond f*s are cut off
  kLiteralMax,  // max(G, f*s): the formula exactly as printed
};

/// Image plus everything precomputed once per image.
struct Scene {
  ImageBuffer image;
  LabImage lab;
  std::shared_ptr<const SuperpixelPartition> partition;
  std::shared_ptr<const ProposalSet> proposals;

  static Scene build(ImageBuffer image, const SlicParams& slic_params,
                     std::optional<std::size_t> max_proposals = std::nullopt);
  int width() const noexcept { return image.width(); }
  int height() const noexcept { return image.height(); }
};

// Superpixel guidance ---------------------------------------------------------

/// Per-superpixel raw distance: min over clicked superpixels of the distance
/// between centroids. `clicks` must be non-empty.
std::vector<double> superpixel_distance_table(const SuperpixelPartition& partition,
                                              std::span<const Point> clicks);

/// The same distances broadcast to pixels; empty when there are no clicks.
std::vector<double> raw_superpixel_distances(const SuperpixelPartition& partition,
                                             std::span<const Point> clicks);

/// Superpixel map rescaled to [0,255]; uniform 255 without clicks.
GuidanceChannel superpixel_guidance(const SuperpixelPartition& partition,
                                    std::span<const Point> clicks,
                                    ChannelKind kind = ChannelKind::kSpPos);

/// Scale-aware superpixel map from raw (pre-rescale) pixel distances.
GuidanceChannel scale_truncate_sp(std::span<const double> raw, int width, int height,
                                  const ScaleEstimate& scale,
                                  TruncationMode mode = TruncationMode::kSaturate,
                                  ChannelKind kind = ChannelKind::kSpPosScaled);

/// Scale-aware superpixel map from clicks. Without a scale estimate this is
/// the plain superpixel map.
GuidanceChannel scale_truncate_sp(const SuperpixelPartition& partition,
                                  std::span<const Point> clicks,
                                  const std::optional<ScaleEstimate>& scale,
                                  TruncationMode mode = TruncationMode::kSaturate,
                                  ChannelKind kind = ChannelKind::kSpPosScaled);

// Object guidance -------------------------------------------------------------

/// Raw per-pixel proposal counts: for each positive click, the number of
/// proposals containing both the click and the pixel. With a scale, only
/// proposals whose area/s^2 lies in [f1, f2] count.
std::vector<std::int32_t> raw_object_counts(const ProposalSet& proposals,
                                            std::span<const Point> positives,
                                            const std::optional<ScaleEstimate>& scale = std::nullopt);

/// Object map rescaled to [0,255]; all zeros without positive clicks.
GuidanceChannel object_guidance(const ProposalSet& proposals,
                                std::span<const Point> positives,
                                ChannelKind kind = ChannelKind::kObject);

/// Object map restricted to proposals of plausible size. Without a scale
/// estimate this is the plain object map.
GuidanceChannel scale_filtered_object(const ProposalSet& proposals,
                                      std::span<const Point> positives,
                                      const std::optional<ScaleEstimate>& scale,
                                      ChannelKind kind = ChannelKind::kObjectScaled);

// Stack assembly --------------------------------------------------------------

struct GuidanceConfig {
  double gaussian_sigma = 10.0;
  TruncationMode truncation = TruncationMode::kSaturate;
  /// Scale-aware kinds requested without a scale estimate fall back to their
  /// scale-agnostic counterparts instead of failing.
  bool scale_fallback = false;
};

using Layout = std::vector<ChannelKind>;

/// Named channel layouts: euclidean, gaussian, sp, sp_obj, sp_obj_iter,
/// scale_aware (the full configuration) and euclidean_iter.
std::optional<Layout> layout_by_name(std::string_view name);
std::vector<std::string> layout_names();
std::string layout_to_string(const Layout& layout);

/// Layout of the full method: scaled superpixel pair, scaled object map and
/// the previous-mask channel.
Layout full_layout();

/// Builds the requested channels in layout order. `prev_mask` may be null
/// (treated as an empty previous prediction).
GuidanceStack assemble_stack(const Scene& scene, const ClickSet& clicks,
                             const std::optional<ScaleEstimate>& scale,
                             const BinaryMask* prev_mask, const Layout& layout,
                             const GuidanceConfig& config = {});

/// Single channel of any kind, computed like assemble_stack would.
GuidanceChannel compute_channel(const Scene& scene, const ClickSet& clicks,
                                const std::optional<ScaleEstimate>& scale,
                                const BinaryMask* prev_mask, ChannelKind kind,
                                const GuidanceConfig& config = {});

}  // namespace guidemap
