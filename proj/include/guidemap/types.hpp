#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace guidemap {

/// Integer pixel coordinate, origin top-left.
struct Point {
  int x = 0;
  int y = 0;

  friend bool operator==(const Point&, const Point&) = default;
};

/// Dense 8-bit RGB image, row-major interleaved triplets.
class ImageBuffer {
 public:
  ImageBuffer() = default;
  ImageBuffer(int width, int height);
  ImageBuffer(int width, int height, std::vector<std::uint8_t> rgb);

  int width() const noexcept { return width_; }
  int height() const noexcept { return height_; }
  std::size_t pixel_count() const noexcept {
    return static_cast<std::size_t>(width_) * static_cast<std::size_t>(height_);
  }
  bool contains(Point p) const noexcept {
    return p.x >= 0 && p.y >= 0 && p.x < width_ && p.y < height_;
  }

  std::span<const std::uint8_t> rgb() const noexcept { return rgb_; }
  std::span<std::uint8_t> rgb() noexcept { return rgb_; }

  const std::uint8_t* pixel(int x, int y) const noexcept {
    return rgb_.data() + 3 * (static_cast<std::size_t>(y) * width_ + x);
  }
  void set(int x, int y, std::uint8_t r, std::uint8_t g, std::uint8_t b) noexcept;

  friend bool operator==(const ImageBuffer&, const ImageBuffer&) = default;

 private:
  int width_ = 0;
  int height_ = 0;
  std::vector<std::uint8_t> rgb_;
};

/// Per-pixel boolean instance mask; stored as bytes holding 0 or 1.
class BinaryMask {
 public:
  BinaryMask() = default;
  BinaryMask(int width, int height, bool fill = false);
  BinaryMask(int width, int height, std::vector<std::uint8_t> bits);

  int width() const noexcept { return width_; }
  int height() const noexcept { return height_; }
  std::size_t pixel_count() const noexcept { return bits_.size(); }
  bool contains(Point p) const noexcept {
    return p.x >= 0 && p.y >= 0 && p.x < width_ && p.y < height_;
  }

  bool at(int x, int y) const noexcept {
    return bits_[static_cast<std::size_t>(y) * width_ + x] != 0;
  }
  bool at(Point p) const noexcept { return at(p.x, p.y); }
  void set(int x, int y, bool value) noexcept {
    bits_[static_cast<std::size_t>(y) * width_ + x] = value ? 1 : 0;
  }

  std::span<const std::uint8_t> bits() const noexcept { return bits_; }
  std::size_t count() const noexcept;
  bool empty() const noexcept { return count() == 0; }

  friend bool operator==(const BinaryMask&, const BinaryMask&) = default;

 private:
  int width_ = 0;
  int height_ = 0;
  std::vector<std::uint8_t> bits_;
};

enum class ChannelKind {
  kEuclideanPos,
  kEuclideanNeg,
  kGaussianPos,
  kGaussianNeg,
  kSpPos,
  kSpNeg,
  kObject,
  kSpPosScaled,
  kSpNegScaled,
  kObjectScaled,
  kPrevMask,
};

inline constexpr ChannelKind kAllChannelKinds[] = {
    ChannelKind::kEuclideanPos, ChannelKind::kEuclideanNeg,
    ChannelKind::kGaussianPos,  ChannelKind::kGaussianNeg,
    ChannelKind::kSpPos,        ChannelKind::kSpNeg,
    ChannelKind::kObject,       ChannelKind::kSpPosScaled,
    ChannelKind::kSpNegScaled,  ChannelKind::kObjectScaled,
    ChannelKind::kPrevMask,
};

std::string_view channel_name(ChannelKind kind) noexcept;
std::optional<ChannelKind> parse_channel_kind(std::string_view name) noexcept;

/// One guidance map. Values are kept in double precision and only quantized
/// to 8 bits when written out.
class GuidanceChannel {
 public:
  GuidanceChannel() = default;
  /// Throws kNumericDomain if any value is outside [0,255] or NaN.
  GuidanceChannel(int width, int height, std::vector<double> values,
                  ChannelKind kind);

  static GuidanceChannel filled(int width, int height, double value,
                                ChannelKind kind);

  int width() const noexcept { return width_; }
  int height() const noexcept { return height_; }
  ChannelKind kind() const noexcept { return kind_; }
  std::span<const double> values() const noexcept { return values_; }
  double at(int x, int y) const noexcept {
    return values_[static_cast<std::size_t>(y) * width_ + x];
  }

  /// Values rounded to the nearest integer and clamped to [0,255].
  std::vector<std::uint8_t> quantized() const;

  friend bool operator==(const GuidanceChannel&, const GuidanceChannel&) = default;

 private:
  int width_ = 0;
  int height_ = 0;
  std::vector<double> values_;
  ChannelKind kind_ = ChannelKind::kEuclideanPos;
};

class GuidanceStack {
 public:
  GuidanceStack() = default;

  /// Throws kShape on dimension mismatch, kConfiguration on a duplicate kind.
  void push(GuidanceChannel channel);

  std::span<const GuidanceChannel> channels() const noexcept { return channels_; }
  std::vector<ChannelKind> layout() const;
  std::size_t size() const noexcept { return channels_.size(); }
  int width() const noexcept { return channels_.empty() ? 0 : channels_.front().width(); }
  int height() const noexcept { return channels_.empty() ? 0 : channels_.front().height(); }

  const GuidanceChannel* find(ChannelKind kind) const noexcept;

 private:
  std::vector<GuidanceChannel> channels_;
};

}  // namespace guidemap
