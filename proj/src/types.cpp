#include "guidemap/types.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "guidemap/error.hpp"

namespace guidemap {

const char* errc_name(Errc code) noexcept {
  switch (code) {
    case Errc::kCoordinateRange: return "coordinate_range";
    case Errc::kParameter: return "parameter";
    case Errc::kNumericDomain: return "numeric_domain";
    case Errc::kShape: return "shape";
    case Errc::kConfiguration: return "configuration";
    case Errc::kDegenerateScale: return "degenerate_scale";
    case Errc::kEmptyObject: return "empty_object";
    case Errc::kIo: return "io";
    case Errc::kDecode: return "decode";
    case Errc::kNotFound: return "not_found";
    case Errc::kPayloadTooLarge: return "payload_too_large";
  }
  return "unknown";
}

namespace {

void check_dims(int width, int height) {
  if (width < 1 || height < 1) {
    throw Error(Errc::kShape, "grid dimensions must be at least 1x1, got " +
                                  std::to_string(width) + "x" +
                                  std::to_string(height));
  }
}

}  // namespace

ImageBuffer::ImageBuffer(int width, int height)
    : width_(width), height_(height) {
  check_dims(width, height);
  rgb_.assign(3 * pixel_count(), 0);
}

ImageBuffer::ImageBuffer(int width, int height, std::vector<std::uint8_t> rgb)
    : width_(width), height_(height), rgb_(std::move(rgb)) {
  check_dims(width, height);
  if (rgb_.size() != 3 * pixel_count()) {
    throw Error(Errc::kShape, "rgb buffer length does not match 3*width*height");
  }
}

void ImageBuffer::set(int x, int y, std::uint8_t r, std::uint8_t g,
                      std::uint8_t b) noexcept {
  std::uint8_t* p = rgb_.data() + 3 * (static_cast<std::size_t>(y) * width_ + x);
  p[0] = r;
  p[1] = g;
  p[2] = b;
}

BinaryMask::BinaryMask(int width, int height, bool fill)
    : width_(width), height_(height) {
  check_dims(width, height);
  bits_.assign(static_cast<std::size_t>(width) * height, fill ? 1 : 0);
}

BinaryMask::BinaryMask(int width, int height, std::vector<std::uint8_t> bits)
    : width_(width), height_(height), bits_(std::move(bits)) {
  check_dims(width, height);
  if (bits_.size() != static_cast<std::size_t>(width) * height) {
    throw Error(Errc::kShape, "mask length does not match width*height");
  }
  for (auto& b : bits_) b = b != 0 ? 1 : 0;
}

std::size_t BinaryMask::count() const noexcept {
  return static_cast<std::size_t>(
      std::count_if(bits_.begin(), bits_.end(), [](std::uint8_t b) { return b != 0; }));
}

std::string_view channel_name(ChannelKind kind) noexcept {
  switch (kind) {
    case ChannelKind::kEuclideanPos: return "euclidean_pos";
    case ChannelKind::kEuclideanNeg: return "euclidean_neg";
    case ChannelKind::kGaussianPos: return "gaussian_pos";
    case ChannelKind::kGaussianNeg: return "gaussian_neg";
    case ChannelKind::kSpPos: return "sp_pos";
    case ChannelKind::kSpNeg: return "sp_neg";
    case ChannelKind::kObject: return "object";
    case ChannelKind::kSpPosScaled: return "sp_pos_scaled";
    case ChannelKind::kSpNegScaled: return "sp_neg_scaled";
    case ChannelKind::kObjectScaled: return "object_scaled";
    case ChannelKind::kPrevMask: return "prev_mask";
  }
  return "unknown";
}

std::optional<ChannelKind> parse_channel_kind(std::string_view name) noexcept {
  for (ChannelKind k : kAllChannelKinds) {
    if (channel_name(k) == name) return k;
  }
  return std::nullopt;
}

GuidanceChannel::GuidanceChannel(int width, int height,
                                 std::vector<double> values, ChannelKind kind)
    : width_(width), height_(height), values_(std::move(values)), kind_(kind) {
  check_dims(width, height);
  if (values_.size() != static_cast<std::size_t>(width) * height) {
    throw Error(Errc::kShape, "channel length does not match width*height");
  }
  for (double v : values_) {
    if (!(v >= 0.0 && v <= 255.0)) {
      throw Error(Errc::kNumericDomain,
                  "guidance value outside [0,255]: " + std::to_string(v));
    }
  }
}

GuidanceChannel GuidanceChannel::filled(int width, int height, double value,
                                        ChannelKind kind) {
  check_dims(width, height);
  return GuidanceChannel(width, height,
                         std::vector<double>(static_cast<std::size_t>(width) * height, value),
                         kind);
}

std::vector<std::uint8_t> GuidanceChannel::quantized() const {
  std::vector<std::uint8_t> out(values_.size());
  std::transform(values_.begin(), values_.end(), out.begin(), [](double v) {
    return static_cast<std::uint8_t>(std::clamp(std::lround(v), 0L, 255L));
  });
  return out;
}

void GuidanceStack::push(GuidanceChannel channel) {
  if (!channels_.empty() && (channel.width() != width() || channel.height() != height())) {
    throw Error(Errc::kShape, "stack channels must share dimensions");
  }
  if (find(channel.kind()) != nullptr) {
    throw Error(Errc::kConfiguration,
                "duplicate channel kind in stack: " + std::string(channel_name(channel.kind())));
  }
  channels_.push_back(std::move(channel));
}

std::vector<ChannelKind> GuidanceStack::layout() const {
  std::vector<ChannelKind> out;
  out.reserve(channels_.size());
  for (const auto& c : channels_) out.push_back(c.kind());
  return out;
}

const GuidanceChannel* GuidanceStack::find(ChannelKind kind) const noexcept {
  for (const auto& c : channels_) {
    if (c.kind() == kind) return &c;
  }
  return nullptr;
}

}  // namespace guidemap
