#include "guidemap/io.hpp"

#include <png.h>

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <iterator>

#include "guidemap/error.hpp"

namespace guidemap::io {

namespace fs = std::filesystem;
using nlohmann::json;

Bytes read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(Errc::kIo, "cannot open " + path.string());
  return Bytes(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
}

void write_file(const fs::path& path, std::span<const std::uint8_t> data) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(Errc::kIo, "cannot write " + path.string());
  out.write(reinterpret_cast<const char*>(data.data()),
            static_cast<std::streamsize>(data.size()));
  if (!out) throw Error(Errc::kIo, "write failed for " + path.string());
}

void write_text(const fs::path& path, const std::string& text) {
  write_file(path, std::span(reinterpret_cast<const std::uint8_t*>(text.data()), text.size()));
}

// PNG ---------------------------------------------------------------------------

namespace {

struct PngImage {
  png_image image{};
  PngImage() {
    image.version = PNG_IMAGE_VERSION;
  }
  ~PngImage() { png_image_free(&image); }
  PngImage(const PngImage&) = delete;
  PngImage& operator=(const PngImage&) = delete;
};

Bytes decode_png_format(std::span<const std::uint8_t> data, png_uint_32 format,
                        int& width, int& height) {
  PngImage png;
  if (data.empty() ||
      !png_image_begin_read_from_memory(&png.image, data.data(), data.size())) {
    throw Error(Errc::kDecode, std::string("PNG decode failed: ") + png.image.message);
  }
  png.image.format = format;
  Bytes pixels(PNG_IMAGE_SIZE(png.image));
  if (!png_image_finish_read(&png.image, nullptr, pixels.data(), 0, nullptr)) {
    throw Error(Errc::kDecode, std::string("PNG decode failed: ") + png.image.message);
  }
  width = static_cast<int>(png.image.width);
  height = static_cast<int>(png.image.height);
  if (width < 1 || height < 1) throw Error(Errc::kDecode, "PNG has no pixels");
  return pixels;
}

Bytes encode_png_format(int width, int height, png_uint_32 format, const void* pixels) {
  PngImage png;
  png.image.width = static_cast<png_uint_32>(width);
  png.image.height = static_cast<png_uint_32>(height);
  png.image.format = format;
  png_alloc_size_t size = 0;
  if (!png_image_write_to_memory(&png.image, nullptr, &size, 0, pixels, 0, nullptr)) {
    throw Error(Errc::kIo, std::string("PNG encode failed: ") + png.image.message);
  }
  Bytes out(size);
  if (!png_image_write_to_memory(&png.image, out.data(), &size, 0, pixels, 0, nullptr)) {
    throw Error(Errc::kIo, std::string("PNG encode failed: ") + png.image.message);
  }
  out.resize(size);
  return out;
}

}  // namespace

ImageBuffer decode_png(std::span<const std::uint8_t> data) {
  int w = 0;
  int h = 0;
  auto rgb = decode_png_format(data, PNG_FORMAT_RGB, w, h);
  return ImageBuffer(w, h, std::move(rgb));
}

Bytes encode_png(const ImageBuffer& image) {
  return encode_png_format(image.width(), image.height(), PNG_FORMAT_RGB, image.rgb().data());
}

Bytes encode_png_gray(int width, int height, std::span<const std::uint8_t> gray) {
  if (gray.size() != static_cast<std::size_t>(width) * height) {
    throw Error(Errc::kShape, "grey buffer does not match dimensions");
  }
  return encode_png_format(width, height, PNG_FORMAT_GRAY, gray.data());
}

ImageBuffer read_png(const fs::path& path) { return decode_png(read_file(path)); }

void write_png(const fs::path& path, const ImageBuffer& image) {
  write_file(path, encode_png(image));
}

BinaryMask decode_png_mask(std::span<const std::uint8_t> data) {
  int w = 0;
  int h = 0;
  auto gray = decode_png_format(data, PNG_FORMAT_GRAY, w, h);
  return BinaryMask(w, h, std::move(gray));
}

Bytes encode_png_mask(const BinaryMask& mask) {
  Bytes gray(mask.pixel_count());
  std::transform(mask.bits().begin(), mask.bits().end(), gray.begin(),
                 [](std::uint8_t b) { return b ? 255 : 0; });
  return encode_png_gray(mask.width(), mask.height(), gray);
}

// PGM ---------------------------------------------------------------------------

GrayImage parse_pgm(std::span<const std::uint8_t> data) {
  std::size_t pos = 0;
  auto skip_space = [&] {
    while (pos < data.size()) {
      if (data[pos] == '#') {
        while (pos < data.size() && data[pos] != '\n') ++pos;
      } else if (std::isspace(data[pos])) {
        ++pos;
      } else {
        break;
      }
    }
  };
  auto read_int = [&]() -> long {
    skip_space();
    long v = 0;
    bool any = false;
    while (pos < data.size() && std::isdigit(data[pos])) {
      v = v * 10 + (data[pos] - '0');
      ++pos;
      any = true;
      if (v > 1L << 30) throw Error(Errc::kDecode, "PGM header value too large");
    }
    if (!any) throw Error(Errc::kDecode, "malformed PGM header");
    return v;
  };
  if (data.size() < 2 || data[0] != 'P' || data[1] != '5') {
    throw Error(Errc::kDecode, "not a binary PGM (P5)");
  }
  pos = 2;
  GrayImage img;
  img.width = static_cast<int>(read_int());
  img.height = static_cast<int>(read_int());
  img.maxval = static_cast<int>(read_int());
  if (img.width < 1 || img.height < 1 || img.maxval < 1 || img.maxval > 65535) {
    throw Error(Errc::kDecode, "invalid PGM header values");
  }
  ++pos;  // single whitespace byte before the raster
  const std::size_t n = static_cast<std::size_t>(img.width) * img.height;
  const std::size_t bytes = img.maxval < 256 ? 1 : 2;
  if (data.size() < pos + n * bytes) throw Error(Errc::kDecode, "truncated PGM raster");
  img.values.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    img.values[i] = bytes == 1 ? data[pos + i]
                               : static_cast<std::uint16_t>((data[pos + 2 * i] << 8) |
                                                            data[pos + 2 * i + 1]);
  }
  return img;
}

GrayImage read_pgm(const fs::path& path) {
  try {
    return parse_pgm(read_file(path));
  } catch (const Error& e) {
    if (e.code() == Errc::kDecode) throw Error(Errc::kDecode, path.string() + ": " + e.what());
    throw;
  }
}

Bytes serialize_pgm(const GrayImage& image) {
  const std::string header = "P5\n" + std::to_string(image.width) + " " +
                             std::to_string(image.height) + "\n" +
                             std::to_string(image.maxval) + "\n";
  Bytes out(header.begin(), header.end());
  const bool wide = image.maxval > 255;
  for (std::uint16_t v : image.values) {
    if (wide) out.push_back(static_cast<std::uint8_t>(v >> 8));
    out.push_back(static_cast<std::uint8_t>(v & 0xff));
  }
  return out;
}

void write_pgm(const fs::path& path, const GrayImage& image) {
  write_file(path, serialize_pgm(image));
}

BinaryMask read_mask_pgm(const fs::path& path) {
  const GrayImage g = read_pgm(path);
  std::vector<std::uint8_t> bits(g.values.size());
  for (std::size_t i = 0; i < bits.size(); ++i) {
    const auto v = g.values[i];
    if (v != 0 && v != g.maxval) {
      throw Error(Errc::kDecode, path.string() + ": mask is not binary (value " +
                                     std::to_string(v) + ")");
    }
    bits[i] = v != 0;
  }
  return BinaryMask(g.width, g.height, std::move(bits));
}

void write_mask_pgm(const fs::path& path, const BinaryMask& mask) {
  GrayImage g{mask.width(), mask.height(), 255, {}};
  g.values.reserve(mask.pixel_count());
  for (auto b : mask.bits()) g.values.push_back(b ? 255 : 0);
  write_pgm(path, g);
}

BinaryMask read_mask(const fs::path& path) {
  if (path.extension() == ".png") {
    const auto data = read_file(path);
    int w = 0;
    int h = 0;
    auto gray = decode_png_format(data, PNG_FORMAT_GRAY, w, h);
    for (auto v : gray) {
      if (v != 0 && v != 255) {
        throw Error(Errc::kDecode, path.string() + ": mask is not binary");
      }
    }
    return BinaryMask(w, h, std::move(gray));
  }
  return read_mask_pgm(path);
}

void write_channel_pgm(const fs::path& path, const GuidanceChannel& channel) {
  GrayImage g{channel.width(), channel.height(), 255, {}};
  const auto q = channel.quantized();
  g.values.assign(q.begin(), q.end());
  write_pgm(path, g);
}

// Partitions --------------------------------------------------------------------

json partition_summary(const SuperpixelPartition& partition) {
  json centroids = json::array();
  for (const auto& c : partition.centroids()) centroids.push_back({c.x, c.y});
  json j;
  j["width"] = partition.width();
  j["height"] = partition.height();
  j["count"] = partition.count();
  j["centroids"] = std::move(centroids);
  j["sizes"] = std::vector<std::int64_t>(partition.sizes().begin(), partition.sizes().end());
  return j;
}

void save_partition(const fs::path& pgm_path, const SuperpixelPartition& partition) {
  if (partition.count() > 65536) {
    throw Error(Errc::kParameter, "partition has too many superpixels for a 16-bit grid");
  }
  GrayImage g{partition.width(), partition.height(), 65535, {}};
  g.values.reserve(partition.labels().size());
  for (auto id : partition.labels()) g.values.push_back(static_cast<std::uint16_t>(id));
  write_pgm(pgm_path, g);
  auto sidecar = pgm_path;
  sidecar.replace_extension(".json");
  write_text(sidecar, partition_summary(partition).dump(2));
}

SuperpixelPartition load_partition(const fs::path& pgm_path) {
  const GrayImage g = read_pgm(pgm_path);
  std::vector<std::int32_t> labels(g.values.begin(), g.values.end());
  auto partition = SuperpixelPartition::from_labels(g.width, g.height, std::move(labels));
  auto sidecar = pgm_path;
  sidecar.replace_extension(".json");
  if (fs::exists(sidecar)) {
    const auto bytes = read_file(sidecar);
    const json j = json::parse(bytes.begin(), bytes.end());
    if (j.at("count").get<int>() != partition.count()) {
      throw Error(Errc::kDecode, "partition sidecar count disagrees with label grid");
    }
  }
  return partition;
}

// RLE / proposals ---------------------------------------------------------------

json mask_to_rle(const BinaryMask& mask) {
  json runs = json::array();
  const auto bits = mask.bits();
  std::size_t i = 0;
  while (i < bits.size()) {
    if (!bits[i]) {
      ++i;
      continue;
    }
    std::size_t j = i;
    while (j < bits.size() && bits[j]) ++j;
    runs.push_back({i, j - i});
    i = j;
  }
  json j;
  j["width"] = mask.width();
  j["height"] = mask.height();
  j["runs"] = std::move(runs);
  return j;
}

BinaryMask mask_from_rle(const json& j) {
  const int w = j.at("width").get<int>();
  const int h = j.at("height").get<int>();
  BinaryMask mask(w, h);
  std::vector<std::uint8_t> bits(mask.pixel_count(), 0);
  for (const auto& run : j.at("runs")) {
    const auto start = run.at(0).get<std::size_t>();
    const auto len = run.at(1).get<std::size_t>();
    if (start + len > bits.size()) throw Error(Errc::kDecode, "RLE run out of range");
    std::fill_n(bits.begin() + static_cast<std::ptrdiff_t>(start), len, 1);
  }
  return BinaryMask(w, h, std::move(bits));
}

json proposals_to_json(const ProposalSet& set) {
  json props = json::array();
  for (std::size_t i = 0; i < set.size(); ++i) {
    const auto& p = set.proposals()[i];
    json entry;
    entry["area"] = p.area;
    entry["superpixels"] = p.members;
    entry["support"] = mask_to_rle(set.support_mask(i))["runs"];
    props.push_back(std::move(entry));
  }
  json j;
  j["width"] = set.partition().width();
  j["height"] = set.partition().height();
  j["superpixel_count"] = set.partition().count();
  j["proposals"] = std::move(props);
  return j;
}

ProposalSet proposals_from_json(const json& j,
                                std::shared_ptr<const SuperpixelPartition> partition) {
  if (!partition || j.at("width").get<int>() != partition->width() ||
      j.at("height").get<int>() != partition->height()) {
    throw Error(Errc::kShape, "proposal file does not match the partition");
  }
  std::vector<Proposal> props;
  for (const auto& e : j.at("proposals")) {
    props.push_back(Proposal{e.at("superpixels").get<std::vector<std::int32_t>>(),
                             e.at("area").get<std::int64_t>()});
  }
  return ProposalSet(std::move(partition), std::move(props));
}

// Stacks ------------------------------------------------------------------------

json clicks_to_json(const ClickSet& clicks) {
  auto list = [](const std::vector<Point>& pts) {
    json a = json::array();
    for (Point p : pts) a.push_back({{"x", p.x}, {"y", p.y}});
    return a;
  };
  return json{{"positives", list(clicks.positives)}, {"negatives", list(clicks.negatives)}};
}

json scale_to_json(const std::optional<ScaleEstimate>& scale) {
  if (!scale) return nullptr;
  json j;
  j["s"] = scale->s;
  j["f"] = scale->f;
  j["f1"] = scale->f1;
  if (std::isinf(scale->f2)) {
    j["f2"] = "inf";
  } else {
    j["f2"] = scale->f2;
  }
  return j;
}

void save_stack(const fs::path& dir, const GuidanceStack& stack, const ClickSet& clicks,
                const std::optional<ScaleEstimate>& scale) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw Error(Errc::kIo, "cannot create " + dir.string() + ": " + ec.message());
  json layout = json::array();
  json files = json::array();
  for (const auto& c : stack.channels()) {
    const std::string file = std::string(channel_name(c.kind())) + ".pgm";
    write_channel_pgm(dir / file, c);
    layout.push_back(channel_name(c.kind()));
    files.push_back(file);
  }
  json manifest;
  manifest["width"] = stack.width();
  manifest["height"] = stack.height();
  manifest["layout"] = std::move(layout);
  manifest["files"] = std::move(files);
  manifest["clicks"] = clicks_to_json(clicks);
  manifest["scale"] = scale_to_json(scale);
  write_text(dir / "manifest.json", manifest.dump(2));
}

LoadedStack load_stack(const fs::path& dir) {
  const auto bytes = read_file(dir / "manifest.json");
  const json m = json::parse(bytes.begin(), bytes.end());
  LoadedStack out;
  const auto& layout = m.at("layout");
  const auto& files = m.at("files");
  for (std::size_t i = 0; i < layout.size(); ++i) {
    const auto kind = parse_channel_kind(layout[i].get<std::string>());
    if (!kind) throw Error(Errc::kDecode, "unknown channel kind in manifest");
    out.layout.push_back(*kind);
    out.channels.push_back(read_pgm(dir / files.at(i).get<std::string>()));
  }
  for (const auto& p : m.at("clicks").at("positives")) {
    out.clicks.positives.push_back(Point{p.at("x").get<int>(), p.at("y").get<int>()});
  }
  for (const auto& p : m.at("clicks").at("negatives")) {
    out.clicks.negatives.push_back(Point{p.at("x").get<int>(), p.at("y").get<int>()});
  }
  if (!m.at("scale").is_null()) {
    const auto& s = m.at("scale");
    ScaleEstimate est{s.at("s").get<double>(), s.at("f").get<double>(),
                      s.at("f1").get<double>(), 0.0};
    est.f2 = s.at("f2").is_string() ? kInfinity : s.at("f2").get<double>();
    out.scale = est;
  }
  return out;
}

}  // namespace guidemap::io
