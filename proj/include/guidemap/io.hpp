#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"

#include "guidemap/guidance.hpp"
#include "guidemap/proposals.hpp"
#include "guidemap/superpixels.hpp"
#include "guidemap/types.hpp"

namespace guidemap::io {

using Bytes = std::vector<std::uint8_t>;

// PNG ---------------------------------------------------------------------------

/// Decodes any PNG to 8-bit RGB (alpha dropped, grey expanded).
/// Throws kDecode on malformed data.
ImageBuffer decode_png(std::span<const std::uint8_t> data);
Bytes encode_png(const ImageBuffer& image);
/// 8-bit greyscale PNG.
Bytes encode_png_gray(int width, int height, std::span<const std::uint8_t> gray);

ImageBuffer read_png(const std::filesystem::path& path);
void write_png(const std::filesystem::path& path, const ImageBuffer& image);

/// Mask from a PNG: a pixel is foreground when its first channel is non-zero.
BinaryMask decode_png_mask(std::span<const std::uint8_t> data);
Bytes encode_png_mask(const BinaryMask& mask);

// PGM (binary P5) ---------------------------------------------------------------

struct GrayImage {
  int width = 0;
  int height = 0;
  int maxval = 255;
  std::vector<std::uint16_t> values;
};

GrayImage read_pgm(const std::filesystem::path& path);
GrayImage parse_pgm(std::span<const std::uint8_t> data);
/// maxval <= 255 writes one byte per sample, otherwise two (big-endian).
void write_pgm(const std::filesystem::path& path, const GrayImage& image);
Bytes serialize_pgm(const GrayImage& image);

/// Masks are stored 0 = background, 255 = foreground. Reading rejects any
/// other sample value (kDecode).
BinaryMask read_mask_pgm(const std::filesystem::path& path);
void write_mask_pgm(const std::filesystem::path& path, const BinaryMask& mask);

/// Any mask file: .pgm or .png by extension.
BinaryMask read_mask(const std::filesystem::path& path);

void write_channel_pgm(const std::filesystem::path& path, const GuidanceChannel& channel);

// Partitions, proposals, stacks -------------------------------------------------

/// 16-bit PGM label grid plus `<stem>.json` sidecar (count, centroids, sizes).
void save_partition(const std::filesystem::path& pgm_path, const SuperpixelPartition& partition);
SuperpixelPartition load_partition(const std::filesystem::path& pgm_path);
nlohmann::json partition_summary(const SuperpixelPartition& partition);

/// Row-major run-length encoding of a mask: [[start, length], ...].
nlohmann::json mask_to_rle(const BinaryMask& mask);
BinaryMask mask_from_rle(const nlohmann::json& j);

/// Proposals as run-length-encoded supports plus member superpixel ids.
nlohmann::json proposals_to_json(const ProposalSet& set);
ProposalSet proposals_from_json(const nlohmann::json& j,
                                std::shared_ptr<const SuperpixelPartition> partition);

/// Directory with one PGM per channel and manifest.json describing the
/// layout, scale parameters and click list.
void save_stack(const std::filesystem::path& dir, const GuidanceStack& stack,
                const ClickSet& clicks, const std::optional<ScaleEstimate>& scale);

struct LoadedStack {
  std::vector<GrayImage> channels;
  std::vector<ChannelKind> layout;
  ClickSet clicks;
  std::optional<ScaleEstimate> scale;
};
LoadedStack load_stack(const std::filesystem::path& dir);

nlohmann::json clicks_to_json(const ClickSet& clicks);
nlohmann::json scale_to_json(const std::optional<ScaleEstimate>& scale);

Bytes read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, std::span<const std::uint8_t> data);
void write_text(const std::filesystem::path& path, const std::string& text);

}  // namespace guidemap::io
