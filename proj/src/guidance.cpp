#include "guidemap/guidance.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <sstream>

#include "guidemap/error.hpp"
#include "guidemap/imaging.hpp"
#include "guidemap/simd/kernels.hpp"

namespace guidemap {

Scene Scene::build(ImageBuffer image, const SlicParams& slic_params,
                   std::optional<std::size_t> max_proposals) {
  Scene s;
  s.lab = to_lab(image);
  s.image = std::move(image);
  auto partition = std::make_shared<const SuperpixelPartition>(slic(s.lab, slic_params));
  s.proposals = std::make_shared<const ProposalSet>(
      generate_proposals(s.lab, partition, max_proposals));
  s.partition = std::move(partition);
  return s;
}

namespace {

std::vector<double> broadcast(const SuperpixelPartition& partition,
                              std::span<const double> table) {
  const auto labels = partition.labels();
  std::vector<double> out(labels.size());
  simd::kernels().gather(labels.data(), labels.size(), table.data(), out.data());
  return out;
}

void check_scale(const ScaleEstimate& scale) {
  if (!(scale.s > 0.0) || !std::isfinite(scale.s)) {
    throw Error(Errc::kParameter, "scale estimate must be positive and finite");
  }
  if (!(scale.f > 0.0)) throw Error(Errc::kParameter, "truncation factor f must be positive");
  if (!(scale.f1 >= 0.0) || !(scale.f1 <= scale.f2)) {
    throw Error(Errc::kParameter, "proposal size band requires 0 <= f1 <= f2");
  }
}

}  // namespace

std::vector<double> superpixel_distance_table(const SuperpixelPartition& partition,
                                              std::span<const Point> clicks) {
  if (clicks.empty()) {
    throw Error(Errc::kParameter, "superpixel_distance_table needs at least one click");
  }
  std::vector<std::int32_t> clicked;
  for (Point c : clicks) clicked.push_back(pixel_to_superpixel(partition, c));
  std::sort(clicked.begin(), clicked.end());
  clicked.erase(std::unique(clicked.begin(), clicked.end()), clicked.end());

  const auto centroids = partition.centroids();
  std::vector<double> table(centroids.size());
  for (std::size_t i = 0; i < centroids.size(); ++i) {
    double best = kInfinity;
    for (std::int32_t s : clicked) {
      const double dx = centroids[i].x - centroids[s].x;
      const double dy = centroids[i].y - centroids[s].y;
      best = std::min(best, std::sqrt(dx * dx + dy * dy));
    }
    table[i] = best;
  }
  return table;
}

std::vector<double> raw_superpixel_distances(const SuperpixelPartition& partition,
                                             std::span<const Point> clicks) {
  if (clicks.empty()) return {};
  const auto table = superpixel_distance_table(partition, clicks);
  return broadcast(partition, table);
}

GuidanceChannel superpixel_guidance(const SuperpixelPartition& partition,
                                    std::span<const Point> clicks, ChannelKind kind) {
  if (clicks.empty()) {
    return GuidanceChannel::filled(partition.width(), partition.height(), kChannelMax, kind);
  }
  const auto raw = raw_superpixel_distances(partition, clicks);
  return rescale_to_255(raw, partition.width(), partition.height(), kind);
}

GuidanceChannel scale_truncate_sp(std::span<const double> raw, int width, int height,
                                  const ScaleEstimate& scale, TruncationMode mode,
                                  ChannelKind kind) {
  check_scale(scale);
  const double cap = scale.f * scale.s;
  std::vector<double> values(raw.begin(), raw.end());
  if (mode == TruncationMode::kSaturate) {
    for (double& v : values) v = std::min(v, cap);
  } else {
    for (double& v : values) v = std::max(v, cap);
  }
  return rescale_to_255(values, width, height, kind);
}

GuidanceChannel scale_truncate_sp(const SuperpixelPartition& partition,
                                  std::span<const Point> clicks,
                                  const std::optional<ScaleEstimate>& scale,
                                  TruncationMode mode, ChannelKind kind) {
  if (clicks.empty() || !scale) return superpixel_guidance(partition, clicks, kind);
  const auto raw = raw_superpixel_distances(partition, clicks);
  return scale_truncate_sp(raw, partition.width(), partition.height(), *scale, mode, kind);
}

std::vector<std::int32_t> raw_object_counts(const ProposalSet& proposals,
                                            std::span<const Point> positives,
                                            const std::optional<ScaleEstimate>& scale) {
  const auto& partition = proposals.partition();
  if (scale) check_scale(*scale);
  const double s2 = scale ? scale->s * scale->s : 1.0;
  const auto props = proposals.proposals();

  std::vector<std::int32_t> per_superpixel(static_cast<std::size_t>(partition.count()), 0);
  for (Point p : positives) {
    const std::int32_t clicked = pixel_to_superpixel(partition, p);
    for (std::int32_t idx : proposals.containing(clicked)) {
      const Proposal& prop = props[idx];
      if (scale) {
        const double ratio = static_cast<double>(prop.area) / s2;
        if (!(scale->f1 <= ratio && ratio <= scale->f2)) continue;
      }
      for (std::int32_t m : prop.members) ++per_superpixel[m];
    }
  }
  const auto labels = partition.labels();
  std::vector<std::int32_t> out(labels.size());
  for (std::size_t i = 0; i < labels.size(); ++i) out[i] = per_superpixel[labels[i]];
  return out;
}

namespace {

GuidanceChannel counts_to_channel(const SuperpixelPartition& partition,
                                  std::span<const std::int32_t> counts, ChannelKind kind) {
  std::vector<double> raw(counts.begin(), counts.end());
  return rescale_to_255(raw, partition.width(), partition.height(), kind);
}

}  // namespace

GuidanceChannel object_guidance(const ProposalSet& proposals,
                                std::span<const Point> positives, ChannelKind kind) {
  const auto& partition = proposals.partition();
  if (positives.empty()) {
    return GuidanceChannel::filled(partition.width(), partition.height(), 0.0, kind);
  }
  return counts_to_channel(partition, raw_object_counts(proposals, positives), kind);
}

GuidanceChannel scale_filtered_object(const ProposalSet& proposals,
                                      std::span<const Point> positives,
                                      const std::optional<ScaleEstimate>& scale,
                                      ChannelKind kind) {
  const auto& partition = proposals.partition();
  if (positives.empty()) {
    return GuidanceChannel::filled(partition.width(), partition.height(), 0.0, kind);
  }
  return counts_to_channel(partition, raw_object_counts(proposals, positives, scale), kind);
}

// Layouts ----------------------------------------------------------------------

namespace {

struct NamedLayout {
  std::string_view name;
  Layout layout;
};

const std::vector<NamedLayout>& named_layouts() {
  using K = ChannelKind;
  static const std::vector<NamedLayout> layouts = {
      {"euclidean", {K::kEuclideanPos, K::kEuclideanNeg}},
      {"euclidean_iter", {K::kEuclideanPos, K::kEuclideanNeg, K::kPrevMask}},
      {"gaussian", {K::kGaussianPos, K::kGaussianNeg}},
      {"sp", {K::kSpPos, K::kSpNeg}},
      {"sp_obj", {K::kSpPos, K::kSpNeg, K::kObject}},
      {"sp_obj_iter", {K::kSpPos, K::kSpNeg, K::kObject, K::kPrevMask}},
      {"scale_aware", {K::kSpPosScaled, K::kSpNegScaled, K::kObjectScaled}},
      {"full", {K::kSpPosScaled, K::kSpNegScaled, K::kObjectScaled, K::kPrevMask}},
  };
  return layouts;
}

bool is_scale_aware(ChannelKind k) {
  return k == ChannelKind::kSpPosScaled || k == ChannelKind::kSpNegScaled ||
         k == ChannelKind::kObjectScaled;
}

}  // namespace

std::optional<Layout> layout_by_name(std::string_view name) {
  for (const auto& l : named_layouts()) {
    if (l.name == name) return l.layout;
  }
  // Also accept a comma-separated list of channel kinds.
  Layout custom;
  std::string token;
  std::istringstream in{std::string(name)};
  while (std::getline(in, token, ',')) {
    auto kind = parse_channel_kind(token);
    if (!kind) return std::nullopt;
    custom.push_back(*kind);
  }
  if (custom.empty()) return std::nullopt;
  return custom;
}

std::vector<std::string> layout_names() {
  std::vector<std::string> out;
  for (const auto& l : named_layouts()) out.emplace_back(l.name);
  return out;
}

std::string layout_to_string(const Layout& layout) {
  for (const auto& l : named_layouts()) {
    if (l.layout == layout) return std::string(l.name);
  }
  std::string out;
  for (ChannelKind k : layout) {
    if (!out.empty()) out += ',';
    out += channel_name(k);
  }
  return out;
}

Layout full_layout() { return *layout_by_name("full"); }

GuidanceChannel compute_channel(const Scene& scene, const ClickSet& clicks,
                                const std::optional<ScaleEstimate>& scale,
                                const BinaryMask* prev_mask, ChannelKind kind,
                                const GuidanceConfig& config) {
  using K = ChannelKind;
  const int w = scene.width();
  const int h = scene.height();
  if (is_scale_aware(kind) && !scale && !config.scale_fallback) {
    throw Error(Errc::kConfiguration,
                std::string("channel ") + std::string(channel_name(kind)) +
                    " requires a scale estimate");
  }
  auto need_partition = [&]() -> const SuperpixelPartition& {
    if (!scene.partition) throw Error(Errc::kConfiguration, "scene has no superpixel partition");
    return *scene.partition;
  };
  auto need_proposals = [&]() -> const ProposalSet& {
    if (!scene.proposals) throw Error(Errc::kConfiguration, "scene has no proposals");
    return *scene.proposals;
  };
  switch (kind) {
    case K::kEuclideanPos: return euclidean_guidance(clicks.positives, w, h, kind);
    case K::kEuclideanNeg: return euclidean_guidance(clicks.negatives, w, h, kind);
    case K::kGaussianPos:
      return gaussian_guidance(clicks.positives, config.gaussian_sigma, w, h, kind);
    case K::kGaussianNeg:
      return gaussian_guidance(clicks.negatives, config.gaussian_sigma, w, h, kind);
    case K::kSpPos: return superpixel_guidance(need_partition(), clicks.positives, kind);
    case K::kSpNeg: return superpixel_guidance(need_partition(), clicks.negatives, kind);
    case K::kObject: return object_guidance(need_proposals(), clicks.positives, kind);
    case K::kSpPosScaled:
      return scale_truncate_sp(need_partition(), clicks.positives, scale, config.truncation, kind);
    case K::kSpNegScaled:
      return scale_truncate_sp(need_partition(), clicks.negatives, scale, config.truncation, kind);
    case K::kObjectScaled:
      return scale_filtered_object(need_proposals(), clicks.positives, scale, kind);
    case K::kPrevMask:
      if (prev_mask != nullptr) {
        if (prev_mask->width() != w || prev_mask->height() != h) {
          throw Error(Errc::kShape, "previous mask does not match image");
        }
        return prev_mask_channel(*prev_mask);
      }
      return GuidanceChannel::filled(w, h, kChannelMax, K::kPrevMask);
  }
  throw Error(Errc::kConfiguration, "unknown channel kind");
}

GuidanceStack assemble_stack(const Scene& scene, const ClickSet& clicks,
                             const std::optional<ScaleEstimate>& scale,
                             const BinaryMask* prev_mask, const Layout& layout,
                             const GuidanceConfig& config) {
  std::set<ChannelKind> seen;
  for (ChannelKind k : layout) {
    if (!seen.insert(k).second) {
      throw Error(Errc::kConfiguration,
                  "layout repeats channel " + std::string(channel_name(k)));
    }
    if (is_scale_aware(k) && !scale && !config.scale_fallback) {
      throw Error(Errc::kConfiguration,
                  "layout requests scale-aware channels but no scale estimate is available");
    }
  }
  for (Point p : clicks.positives) check_in_bounds(p, scene.width(), scene.height());
  for (Point p : clicks.negatives) check_in_bounds(p, scene.width(), scene.height());
  GuidanceStack stack;
  for (ChannelKind k : layout) {
    stack.push(compute_channel(scene, clicks, scale, prev_mask, k, config));
  }
  return stack;
}

}  // namespace guidemap
