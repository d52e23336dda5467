#include <filesystem>
#include <random>

#include <gtest/gtest.h>

#include "guidemap/error.hpp"
#include "guidemap/guidance.hpp"
#include "guidemap/io.hpp"
#include "oracles.hpp"

using namespace guidemap;
namespace fs = std::filesystem;

namespace {

template <typename F>
void expect_errc(Errc code, F&& f) {
  try {
    f();
    ADD_FAILURE() << "expected " << errc_name(code);
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), code) << e.what();
  }
}

class TempDir : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() /
           ("guidemap_io_" + std::to_string(::testing::UnitTest::GetInstance()->random_seed()) +
            "_" + ::testing::UnitTest::GetInstance()->current_test_info()->name());
    fs::remove_all(dir_);
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }
  fs::path dir_;
};

ImageBuffer noise_image(int w, int h, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::vector<std::uint8_t> rgb(static_cast<std::size_t>(w) * h * 3);
  for (auto& v : rgb) v = static_cast<std::uint8_t>(rng());
  return ImageBuffer(w, h, std::move(rgb));
}

BinaryMask noise_mask(int w, int h, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  BinaryMask m(w, h);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) m.set(x, y, rng() % 3 == 0);
  }
  return m;
}

TEST(Png, RoundTrip) {
  const auto img = noise_image(17, 9, 1);
  EXPECT_EQ(io::decode_png(io::encode_png(img)), img);
}

TEST(Png, GrayExpandsToRgb) {
  const std::vector<std::uint8_t> gray = {0, 50, 100, 255};
  const auto img = io::decode_png(io::encode_png_gray(2, 2, gray));
  ASSERT_EQ(img.width(), 2);
  for (int i = 0; i < 4; ++i) {
    const auto* p = img.pixel(i % 2, i / 2);
    EXPECT_EQ(p[0], gray[i]);
    EXPECT_EQ(p[1], gray[i]);
    EXPECT_EQ(p[2], gray[i]);
  }
}

TEST(Png, MalformedDataRejected) {
  const std::vector<std::uint8_t> junk = {1, 2, 3, 4, 5};
  expect_errc(Errc::kDecode, [&] { io::decode_png(junk); });
  auto truncated = io::encode_png(noise_image(8, 8, 2));
  truncated.resize(truncated.size() / 2);
  expect_errc(Errc::kDecode, [&] { io::decode_png(truncated); });
  expect_errc(Errc::kDecode, [] { io::decode_png({}); });
}

TEST(Png, MaskRoundTrip) {
  const auto m = noise_mask(13, 7, 3);
  EXPECT_EQ(io::decode_png_mask(io::encode_png_mask(m)), m);
}

TEST(Pgm, EightAndSixteenBit) {
  io::GrayImage g8{3, 2, 255, {0, 1, 2, 253, 254, 255}};
  const auto back8 = io::parse_pgm(io::serialize_pgm(g8));
  EXPECT_EQ(back8.values, g8.values);
  EXPECT_EQ(back8.maxval, 255);
  io::GrayImage g16{2, 2, 65535, {0, 256, 4097, 65535}};
  const auto back16 = io::parse_pgm(io::serialize_pgm(g16));
  EXPECT_EQ(back16.values, g16.values);
  EXPECT_EQ(back16.width, 2);
}

TEST(Pgm, HeaderComments) {
  const std::string text = "P5\n# comment\n2 1\n255\n";
  std::vector<std::uint8_t> data(text.begin(), text.end());
  data.push_back(7);
  data.push_back(9);
  const auto g = io::parse_pgm(data);
  EXPECT_EQ(g.values, (std::vector<std::uint16_t>{7, 9}));
}

TEST(Pgm, Errors) {
  const std::string ascii = "P2\n1 1\n255\n0\n";
  expect_errc(Errc::kDecode,
              [&] { io::parse_pgm(std::vector<std::uint8_t>(ascii.begin(), ascii.end())); });
  const std::string short_body = "P5\n4 4\n255\n";
  expect_errc(Errc::kDecode, [&] {
    io::parse_pgm(std::vector<std::uint8_t>(short_body.begin(), short_body.end()));
  });
}

TEST_F(TempDir, MaskPgm) {
  const auto m = noise_mask(10, 6, 4);
  io::write_mask_pgm(dir_ / "m.pgm", m);
  EXPECT_EQ(io::read_mask_pgm(dir_ / "m.pgm"), m);
  EXPECT_EQ(io::read_mask(dir_ / "m.pgm"), m);
  io::write_file(dir_ / "m.png", io::encode_png_mask(m));
  EXPECT_EQ(io::read_mask(dir_ / "m.png"), m);

  io::write_pgm(dir_ / "bad.pgm", io::GrayImage{2, 1, 255, {0, 128}});
  expect_errc(Errc::kDecode, [&] { io::read_mask_pgm(dir_ / "bad.pgm"); });
  expect_errc(Errc::kIo, [&] { io::read_mask_pgm(dir_ / "missing.pgm"); });
}

TEST(Rle, RoundTripAndShape) {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const auto m = noise_mask(1 + seed % 9, 1 + seed % 5, seed);
    EXPECT_EQ(io::mask_from_rle(io::mask_to_rle(m)), m);
  }
  BinaryMask m(4, 2);
  m.set(1, 0, true);
  m.set(2, 0, true);
  m.set(3, 0, true);
  m.set(0, 1, true);
  const auto j = io::mask_to_rle(m);
  EXPECT_EQ(j.dump().find("[[1,4]]") != std::string::npos, true) << j.dump();
}

TEST_F(TempDir, PartitionRoundTrip) {
  std::mt19937_64 rng(5);
  const auto f = oracle::random_fixture(rng, 30);
  const auto part = oracle::make_partition(f);
  io::save_partition(dir_ / "p.pgm", *part);
  const auto back = io::load_partition(dir_ / "p.pgm");
  EXPECT_EQ(back.count(), part->count());
  EXPECT_TRUE(std::equal(back.labels().begin(), back.labels().end(), part->labels().begin()));
  EXPECT_TRUE(std::equal(back.sizes().begin(), back.sizes().end(), part->sizes().begin()));
}

TEST(Proposals, JsonRoundTrip) {
  std::mt19937_64 rng(6);
  const auto f = oracle::random_fixture(rng);
  const auto part = oracle::make_partition(f);
  const auto set = oracle::make_proposals(f, part);
  const auto back = io::proposals_from_json(io::proposals_to_json(set), part);
  ASSERT_EQ(back.size(), set.size());
  for (std::size_t i = 0; i < set.size(); ++i) {
    EXPECT_EQ(back.proposals()[i].members, set.proposals()[i].members);
    EXPECT_EQ(back.proposals()[i].area, set.proposals()[i].area);
  }
}

TEST_F(TempDir, StackRoundTrip) {
  std::mt19937_64 rng(7);
  const auto img = noise_image(20, 14, 7);
  const Scene scene = Scene::build(img, SlicParams{.k = 12});
  const ClickSet clicks{{{3, 4}, {10, 10}}, {{19, 0}}};
  const auto scale = ScaleEstimate{.s = 12.5, .f = 2.0, .f1 = 0.0, .f2 = 1.5};
  const auto stack = assemble_stack(scene, clicks, scale, nullptr, full_layout());
  io::save_stack(dir_ / "stack", stack, clicks, scale);
  const auto loaded = io::load_stack(dir_ / "stack");
  EXPECT_EQ(loaded.layout, full_layout());
  EXPECT_EQ(loaded.clicks.positives, clicks.positives);
  EXPECT_EQ(loaded.clicks.negatives, clicks.negatives);
  ASSERT_TRUE(loaded.scale.has_value());
  EXPECT_DOUBLE_EQ(loaded.scale->s, 12.5);
  ASSERT_EQ(loaded.channels.size(), stack.size());
  for (std::size_t i = 0; i < stack.size(); ++i) {
    const auto q = stack.channels()[i].quantized();
    EXPECT_TRUE(std::equal(q.begin(), q.end(), loaded.channels[i].values.begin()));
  }
}

}  // namespace
