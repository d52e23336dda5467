#pragma once

#include <span>
#include <vector>

#include "guidemap/types.hpp"

namespace guidemap {

/// Values above this saturate in every distance-style channel.
inline constexpr double kChannelMax = 255.0;

/// Pixelwise Euclidean guidance: min distance to any click, clamped at 255.
/// An empty click list yields a uniform 255 channel.
GuidanceChannel euclidean_guidance(std::span<const Point> clicks, int width,
                                   int height,
                                   ChannelKind kind = ChannelKind::kEuclideanPos);

/// 255 * max_c exp(-|p-c|^2 / (2 sigma^2)); all zeros without clicks.
GuidanceChannel gaussian_guidance(std::span<const Point> clicks, double sigma,
                                  int width, int height,
                                  ChannelKind kind = ChannelKind::kGaussianPos);

/// Squared exact Euclidean distance from every pixel to the nearest set pixel
/// of `mask`. Pixels are +inf when the mask is empty.
std::vector<double> squared_distance_transform(const BinaryMask& mask);

/// Distance transform of the previous prediction, clamped at 255.
GuidanceChannel prev_mask_channel(const BinaryMask& mask);

/// Linear map of non-negative raw values onto [0,255] by the grid maximum.
/// A zero maximum gives all zeros. `invert` yields 255 - v'.
GuidanceChannel rescale_to_255(std::span<const double> raw, int width,
                               int height, ChannelKind kind, bool invert = false);

/// Intersection over union. Two empty masks score 1.0.
double miou(const BinaryMask& pred, const BinaryMask& gt);

/// Returns kCoordinateRange error if `p` is outside a width x height grid.
void check_in_bounds(Point p, int width, int height);

}  // namespace guidemap
