#include <cmath>
#include <random>
#include <vector>

#include <gtest/gtest.h>

#include "guidemap/error.hpp"
#include "guidemap/guidance.hpp"
#include "guidemap/imaging.hpp"
#include "oracles.hpp"

using namespace guidemap;

namespace {

// 4x4 image of four 2x2 cells; left column red, right column blue.
struct FourCells {
  std::shared_ptr<const SuperpixelPartition> partition;
  ProposalSet proposals;
  Scene scene;

  FourCells() {
    std::vector<std::int32_t> labels(16);
    ImageBuffer img(4, 4);
    for (int y = 0; y < 4; ++y) {
      for (int x = 0; x < 4; ++x) {
        labels[y * 4 + x] = (y / 2) * 2 + x / 2;
        if (x < 2) {
          img.set(x, y, 220, 20, 20);
        } else {
          img.set(x, y, 20, 20, 220);
        }
      }
    }
    partition = std::make_shared<SuperpixelPartition>(SuperpixelPartition::from_labels(4, 4, labels));
    proposals = generate_proposals(img, partition);
    scene.lab = to_lab(img);
    scene.image = img;
    scene.partition = partition;
    scene.proposals = std::make_shared<ProposalSet>(proposals);
  }

  // Value of a channel at the top-left pixel of each cell.
  static std::vector<double> cells(const GuidanceChannel& c) {
    return {c.at(0, 0), c.at(2, 0), c.at(0, 2), c.at(2, 2)};
  }
};

void expect_values_near(const std::vector<double>& got, const std::vector<double>& want,
                        double tol = 1e-9) {
  ASSERT_EQ(got.size(), want.size());
  for (std::size_t i = 0; i < got.size(); ++i) EXPECT_NEAR(got[i], want[i], tol) << i;
}

template <typename F>
void expect_errc(Errc code, F&& f) {
  try {
    f();
    ADD_FAILURE() << "expected " << errc_name(code);
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), code) << e.what();
  }
}

const Point kTopLeft[] = {{0, 0}};

// Superpixel guidance -----------------------------------------------------------------

TEST(SuperpixelGuidance, FourCellExample) {
  FourCells f;
  const auto raw = raw_superpixel_distances(*f.partition, kTopLeft);
  EXPECT_EQ(raw[0], 0.0);
  EXPECT_EQ(raw[2], 2.0);
  EXPECT_EQ(raw[8], 2.0);
  EXPECT_EQ(raw[15], std::sqrt(8.0));
  const auto ch = superpixel_guidance(*f.partition, kTopLeft);
  expect_values_near(FourCells::cells(ch), {0.0, 255.0 / std::sqrt(2.0), 255.0 / std::sqrt(2.0), 255.0});
  EXPECT_NEAR(ch.at(2, 0), 180.3, 0.05);
}

TEST(SuperpixelGuidance, ClickedSuperpixelIsZeroEverywhere) {
  FourCells f;
  const Point c[] = {{3, 2}};
  const auto ch = superpixel_guidance(*f.partition, c);
  for (int y = 2; y < 4; ++y) {
    for (int x = 2; x < 4; ++x) EXPECT_EQ(ch.at(x, y), 0.0);
  }
}

TEST(SuperpixelGuidance, NoClicksIs255) {
  FourCells f;
  const auto ch = superpixel_guidance(*f.partition, {});
  for (double v : ch.values()) EXPECT_EQ(v, 255.0);
}

TEST(SuperpixelGuidance, RejectsOutOfBounds) {
  FourCells f;
  const Point c[] = {{0, 4}};
  expect_errc(Errc::kCoordinateRange, [&] { superpixel_guidance(*f.partition, c); });
}

TEST(SuperpixelGuidance, DegeneratesToEuclideanOnSinglePixels) {
  std::mt19937_64 rng(1);
  const auto part = SuperpixelPartition::single_pixel(32, 32);
  for (int t = 0; t < 20; ++t) {
    auto clicks = oracle::random_points(rng, 32, 32, 4);
    if (clicks.empty()) clicks.push_back({5, 9});
    std::vector<double> pixel_raw(32 * 32);
    for (int y = 0; y < 32; ++y) {
      for (int x = 0; x < 32; ++x) {
        double best = kInfinity;
        for (Point c : clicks) {
          const double dx = x - c.x, dy = y - c.y;
          best = std::min(best, std::sqrt(dx * dx + dy * dy));
        }
        pixel_raw[y * 32 + x] = best;
      }
    }
    const auto expected = rescale_to_255(pixel_raw, 32, 32, ChannelKind::kSpPos);
    const auto sp = superpixel_guidance(part, clicks);
    for (std::size_t i = 0; i < pixel_raw.size(); ++i) {
      ASSERT_EQ(sp.values()[i], expected.values()[i]);
    }
  }
}

TEST(SuperpixelGuidance, ConstantWithinSuperpixels) {
  std::mt19937_64 rng(2);
  for (int t = 0; t < 50; ++t) {
    const auto f = oracle::random_fixture(rng);
    const auto part = oracle::make_partition(f);
    const auto clicks = oracle::random_points(rng, f.width, f.height, 3);
    const auto ch = superpixel_guidance(*part, clicks);
    std::vector<double> seen(part->count(), -1.0);
    for (std::size_t i = 0; i < f.labels.size(); ++i) {
      double& s = seen[f.labels[i]];
      if (s < 0) s = ch.values()[i];
      ASSERT_EQ(ch.values()[i], s);
    }
  }
}

TEST(SuperpixelGuidance, RawNonIncreasingUnderClickGrowth) {
  std::mt19937_64 rng(3);
  for (int t = 0; t < 50; ++t) {
    const auto f = oracle::random_fixture(rng);
    const auto part = oracle::make_partition(f);
    auto clicks = oracle::random_points(rng, f.width, f.height, 3);
    clicks.push_back({static_cast<int>(rng() % f.width), static_cast<int>(rng() % f.height)});
    const auto before = raw_superpixel_distances(*part, clicks);
    clicks.push_back({static_cast<int>(rng() % f.width), static_cast<int>(rng() % f.height)});
    const auto after = raw_superpixel_distances(*part, clicks);
    for (std::size_t i = 0; i < before.size(); ++i) ASSERT_LE(after[i], before[i]);
  }
}

// Scale truncation ----------------------------------------------------------------------

TEST(ScaleTruncation, SaturatesRawDistances) {
  FourCells f;
  const ScaleEstimate scale{.s = 1.0, .f = 2.0};
  const auto ch = scale_truncate_sp(*f.partition, kTopLeft, scale);
  expect_values_near(FourCells::cells(ch), {0.0, 255.0, 255.0, 255.0});
}

TEST(ScaleTruncation, InactiveWhenCapExceedsMax) {
  FourCells f;
  const ScaleEstimate scale{.s = 10.0, .f = 2.0};
  EXPECT_EQ(scale_truncate_sp(*f.partition, kTopLeft, scale).values()[15],
            superpixel_guidance(*f.partition, kTopLeft).values()[15]);
  const auto a = scale_truncate_sp(*f.partition, kTopLeft, scale);
  const auto b = superpixel_guidance(*f.partition, kTopLeft);
  EXPECT_TRUE(std::equal(a.values().begin(), a.values().end(), b.values().begin()));
}

TEST(ScaleTruncation, TinyCapFlattensEverythingButClicked) {
  FourCells f;
  const ScaleEstimate scale{.s = 1e-9, .f = 1.0};
  const auto ch = scale_truncate_sp(*f.partition, kTopLeft, scale);
  expect_values_near(FourCells::cells(ch), {0.0, 255.0, 255.0, 255.0});
}

TEST(ScaleTruncation, LiteralMaxMode) {
  FourCells f;
  const ScaleEstimate scale{.s = 1.0, .f = 2.0};
  const auto ch = scale_truncate_sp(*f.partition, kTopLeft, scale, TruncationMode::kLiteralMax);
  const double low = 255.0 * 2.0 / std::sqrt(8.0);
  expect_values_near(FourCells::cells(ch), {low, low, low, 255.0});
}

TEST(ScaleTruncation, MissingScaleFallsBack) {
  FourCells f;
  const auto a = scale_truncate_sp(*f.partition, kTopLeft, std::nullopt);
  const auto b = superpixel_guidance(*f.partition, kTopLeft);
  EXPECT_TRUE(std::equal(a.values().begin(), a.values().end(), b.values().begin()));
}

TEST(ScaleTruncation, RejectsBadScale) {
  FourCells f;
  const auto raw = raw_superpixel_distances(*f.partition, kTopLeft);
  expect_errc(Errc::kParameter, [&] { scale_truncate_sp(raw, 4, 4, ScaleEstimate{.s = 0.0}); });
  expect_errc(Errc::kParameter,
              [&] { scale_truncate_sp(raw, 4, 4, ScaleEstimate{.s = 1.0, .f = 0.0}); });
}

// Object guidance -----------------------------------------------------------------------

TEST(ObjectGuidance, FourCellExample) {
  FourCells f;
  const auto raw = raw_object_counts(f.proposals, kTopLeft);
  EXPECT_EQ(raw[0], 3);
  EXPECT_EQ(raw[8], 2);
  EXPECT_EQ(raw[2], 1);
  EXPECT_EQ(raw[15], 1);
  const auto ch = object_guidance(f.proposals, kTopLeft);
  // clicked red, other red, blue, blue
  expect_values_near({ch.at(0, 0), ch.at(0, 2), ch.at(2, 0), ch.at(2, 2)}, {255.0, 170.0, 85.0, 85.0});
}

TEST(ObjectGuidance, NoPositivesIsZero) {
  FourCells f;
  const auto ch = object_guidance(f.proposals, {});
  for (double v : ch.values()) EXPECT_EQ(v, 0.0);
}

TEST(ObjectGuidance, WholeImageProposalIsUniform) {
  auto part = std::make_shared<SuperpixelPartition>(
      SuperpixelPartition::from_labels(3, 1, {0, 1, 2}));
  ProposalSet set(part, {Proposal{{0, 1, 2}, 3}});
  const Point c[] = {{1, 0}};
  const auto ch = object_guidance(set, c);
  for (double v : ch.values()) EXPECT_EQ(v, 255.0);
}

TEST(ObjectGuidance, ScaleFilterExamples) {
  FourCells f;
  const auto filtered =
      scale_filtered_object(f.proposals, kTopLeft, ScaleEstimate{.s = 2.0, .f1 = 0.0, .f2 = 1.0});
  expect_values_near(FourCells::cells(filtered), {255.0, 0.0, 0.0, 0.0});
  const auto none =
      scale_filtered_object(f.proposals, kTopLeft, ScaleEstimate{.s = 100.0, .f1 = 0.0, .f2 = 1e-4});
  for (double v : none.values()) EXPECT_EQ(v, 0.0);
}

TEST(ObjectGuidance, UnboundedFilterIsBitIdentical) {
  std::mt19937_64 rng(4);
  for (int t = 0; t < 60; ++t) {
    const auto f = oracle::random_fixture(rng);
    const auto set = oracle::make_proposals(f, oracle::make_partition(f));
    const auto pos = oracle::random_points(rng, f.width, f.height, 3);
    const double s = 0.5 + 10.0 * std::uniform_real_distribution<double>()(rng);
    const auto a = scale_filtered_object(set, pos, ScaleEstimate{.s = s, .f1 = 0.0, .f2 = kInfinity});
    const auto b = object_guidance(set, pos, ChannelKind::kObjectScaled);
    ASSERT_EQ(a, b);
  }
}

TEST(ObjectGuidance, FilteredCountsNeverExceedUnfiltered) {
  std::mt19937_64 rng(5);
  for (int t = 0; t < 60; ++t) {
    const auto f = oracle::random_fixture(rng);
    const auto set = oracle::make_proposals(f, oracle::make_partition(f));
    const auto pos = oracle::random_points(rng, f.width, f.height, 3);
    std::uniform_real_distribution<double> u(0.0, 3.0);
    double f1 = u(rng), f2 = u(rng);
    if (f1 > f2) std::swap(f1, f2);
    const auto all = raw_object_counts(set, pos);
    const auto some = raw_object_counts(set, pos, ScaleEstimate{.s = 2.0, .f1 = f1, .f2 = f2});
    for (std::size_t i = 0; i < all.size(); ++i) ASSERT_LE(some[i], all[i]);
  }
}

// Oracle equivalence -----------------------------------------------------------------------

TEST(GuidanceOracle, MatchesDirectSummation) {
  std::mt19937_64 rng(6);
  for (int t = 0; t < 80; ++t) {
    const auto f = oracle::random_fixture(rng);
    const auto part = oracle::make_partition(f);
    const auto set = oracle::make_proposals(f, part);
    auto clicks = oracle::random_points(rng, f.width, f.height, 4);
    if (clicks.empty()) clicks.push_back({0, 0});

    const auto sp_raw = oracle::sp_raw(f, clicks);
    ASSERT_EQ(raw_superpixel_distances(*part, clicks), sp_raw);
    const auto sp = superpixel_guidance(*part, clicks);
    const auto sp_expected = oracle::rescale(sp_raw);
    for (std::size_t i = 0; i < sp_raw.size(); ++i) ASSERT_NEAR(sp.values()[i], sp_expected[i], 1e-9);

    const auto obj_raw = oracle::object_raw(f, clicks);
    const auto counts = raw_object_counts(set, clicks);
    for (std::size_t i = 0; i < counts.size(); ++i) ASSERT_EQ(counts[i], obj_raw[i]);
    const auto obj_expected = oracle::rescale(obj_raw);
    const auto obj = object_guidance(set, clicks);
    for (std::size_t i = 0; i < counts.size(); ++i) ASSERT_NEAR(obj.values()[i], obj_expected[i], 1e-9);

    const ScaleEstimate scale{.s = 0.5 + 6.0 * std::uniform_real_distribution<double>()(rng),
                              .f = 2.0, .f1 = 0.2, .f2 = 1.5};
    const auto trunc = scale_truncate_sp(*part, clicks, scale);
    const auto trunc_expected = oracle::rescale(oracle::saturate(sp_raw, scale.f * scale.s));
    for (std::size_t i = 0; i < sp_raw.size(); ++i) {
      ASSERT_NEAR(trunc.values()[i], trunc_expected[i], 1e-9);
    }
    const auto filt_raw = oracle::object_raw(f, clicks, oracle::SizeBand{scale.s, scale.f1, scale.f2});
    const auto filt_counts = raw_object_counts(set, clicks, scale);
    for (std::size_t i = 0; i < filt_counts.size(); ++i) ASSERT_EQ(filt_counts[i], filt_raw[i]);
    const auto filt = scale_filtered_object(set, clicks, scale);
    const auto filt_expected = oracle::rescale(filt_raw);
    for (std::size_t i = 0; i < filt_counts.size(); ++i) {
      ASSERT_NEAR(filt.values()[i], filt_expected[i], 1e-9);
    }
  }
}

// Stacks and layouts ----------------------------------------------------------------------

TEST(Stack, FullLayoutWithoutClicks) {
  FourCells f;
  const auto stack = assemble_stack(f.scene, ClickSet{}, std::nullopt, nullptr, full_layout(),
                                    GuidanceConfig{.scale_fallback = true});
  ASSERT_EQ(stack.size(), 4u);
  for (double v : stack.find(ChannelKind::kSpPosScaled)->values()) EXPECT_EQ(v, 255.0);
  for (double v : stack.find(ChannelKind::kSpNegScaled)->values()) EXPECT_EQ(v, 255.0);
  for (double v : stack.find(ChannelKind::kObjectScaled)->values()) EXPECT_EQ(v, 0.0);
  for (double v : stack.find(ChannelKind::kPrevMask)->values()) EXPECT_EQ(v, 255.0);
}

TEST(Stack, ScaleAwareNeedsScaleUnlessFallback) {
  FourCells f;
  expect_errc(Errc::kConfiguration,
              [&] { assemble_stack(f.scene, ClickSet{}, std::nullopt, nullptr, full_layout()); });
  const auto with_scale = assemble_stack(f.scene, ClickSet{{{0, 0}}, {{3, 3}}},
                                         ScaleEstimate{.s = 1.0}, nullptr, full_layout());
  EXPECT_EQ(with_scale.size(), 4u);
}

TEST(Stack, DuplicateKindsRejected) {
  FourCells f;
  const Layout dup = {ChannelKind::kSpPos, ChannelKind::kSpPos};
  expect_errc(Errc::kConfiguration,
              [&] { assemble_stack(f.scene, ClickSet{}, std::nullopt, nullptr, dup); });
}

TEST(Stack, EuclideanLayoutMatchesBaseline) {
  FourCells f;
  const ClickSet clicks{{{0, 0}, {1, 3}}, {{3, 3}}};
  const auto stack =
      assemble_stack(f.scene, clicks, std::nullopt, nullptr, *layout_by_name("euclidean"));
  ASSERT_EQ(stack.layout(), (Layout{ChannelKind::kEuclideanPos, ChannelKind::kEuclideanNeg}));
  EXPECT_EQ(stack.channels()[0], euclidean_guidance(clicks.positives, 4, 4));
  EXPECT_EQ(stack.channels()[1],
            euclidean_guidance(clicks.negatives, 4, 4, ChannelKind::kEuclideanNeg));
}

TEST(Stack, EveryLayoutHasMatchingShape) {
  FourCells f;
  const ClickSet clicks{{{1, 1}}, {{3, 0}}};
  for (const auto& name : layout_names()) {
    const auto layout = *layout_by_name(name);
    const auto stack = assemble_stack(f.scene, clicks, ScaleEstimate{.s = 2.0}, nullptr, layout);
    EXPECT_EQ(stack.size(), layout.size()) << name;
    EXPECT_EQ(stack.layout(), layout);
    for (const auto& c : stack.channels()) {
      EXPECT_EQ(c.width(), 4);
      EXPECT_EQ(c.height(), 4);
      for (double v : c.values()) ASSERT_TRUE(v >= 0.0 && v <= 255.0);
    }
  }
}

TEST(Stack, RejectsOutOfBoundsClicks) {
  FourCells f;
  expect_errc(Errc::kCoordinateRange, [&] {
    assemble_stack(f.scene, ClickSet{{{4, 0}}, {}}, std::nullopt, nullptr, *layout_by_name("sp"));
  });
}

TEST(Layouts, NamesAndCustomLists) {
  EXPECT_EQ(layout_to_string(full_layout()), "full");
  EXPECT_EQ(*layout_by_name("sp_obj"),
            (Layout{ChannelKind::kSpPos, ChannelKind::kSpNeg, ChannelKind::kObject}));
  const auto custom = layout_by_name("gaussian_pos,prev_mask");
  ASSERT_TRUE(custom.has_value());
  EXPECT_EQ(*custom, (Layout{ChannelKind::kGaussianPos, ChannelKind::kPrevMask}));
  EXPECT_EQ(*layout_by_name(layout_to_string(*custom)), *custom);
  EXPECT_FALSE(layout_by_name("bogus").has_value());
  EXPECT_FALSE(layout_by_name("").has_value());
}

}  // namespace
