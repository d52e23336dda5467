#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "guidemap/color.hpp"
#include "guidemap/types.hpp"

namespace guidemap {

struct Centroid {
  double x = 0.0;
  double y = 0.0;
};

/// Complete labelling of the pixel grid into `count` superpixels together
/// with the per-superpixel bookkeeping the guidance maps consume.
class SuperpixelPartition {
 public:
  SuperpixelPartition() = default;

  /// Builds a partition from a label grid. Ids must cover [0,count) with no
  /// gaps; throws kShape otherwise. Connectivity is not required here; see
  /// is_four_connected().
  static SuperpixelPartition from_labels(int width, int height,
                                         std::vector<std::int32_t> labels);

  /// Every pixel its own superpixel, id = y*width + x.
  static SuperpixelPartition single_pixel(int width, int height);

  int width() const noexcept { return width_; }
  int height() const noexcept { return height_; }
  int count() const noexcept { return static_cast<int>(sizes_.size()); }

  std::span<const std::int32_t> labels() const noexcept { return labels_; }
  std::int32_t label(int x, int y) const noexcept {
    return labels_[static_cast<std::size_t>(y) * width_ + x];
  }
  std::span<const Centroid> centroids() const noexcept { return centroids_; }
  std::span<const std::int64_t> sizes() const noexcept { return sizes_; }
  const std::vector<std::vector<std::int32_t>>& adjacency() const noexcept {
    return adjacency_;
  }

  /// True when every superpixel is a single 4-connected region.
  bool is_four_connected() const;

 private:
  int width_ = 0;
  int height_ = 0;
  std::vector<std::int32_t> labels_;
  std::vector<Centroid> centroids_;
  std::vector<std::int64_t> sizes_;
  std::vector<std::vector<std::int32_t>> adjacency_;
};

/// f_SP: superpixel id at `p`. Throws kCoordinateRange when out of bounds.
std::int32_t pixel_to_superpixel(const SuperpixelPartition& partition, Point p);

struct SlicParams {
  int k = 1000;
  double compactness = 10.0;
  int iterations = 10;
};

/// SLIC superpixels over CIELAB + position, seeded on a regular grid (no
/// randomness), followed by connectivity enforcement.
SuperpixelPartition slic(const ImageBuffer& image, const SlicParams& params);
SuperpixelPartition slic(const LabImage& lab, const SlicParams& params);

}  // namespace guidemap
