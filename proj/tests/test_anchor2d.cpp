#include <gtest/gtest.h>

#include "support.hpp"

using namespace hfsg;
using test::make_det;

namespace {

// Pixel-counting oracle: dilate the object raster with a square element by
// brute force and count fine pixels that land inside.
double containment_oracle(const Mask& fine, const Mask& object, int delta) {
  const int w = fine.width(), h = fine.height();
  const auto f = fine.to_raster();
  const auto o = object.to_raster();
  std::size_t in = 0, total = 0;
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      if (!f[static_cast<std::size_t>(y * w + x)]) continue;
      ++total;
      bool hit = false;
      for (int dy = -delta; dy <= delta && !hit; ++dy) {
        for (int dx = -delta; dx <= delta && !hit; ++dx) {
          const int yy = y + dy, xx = x + dx;
          if (yy >= 0 && yy < h && xx >= 0 && xx < w && o[static_cast<std::size_t>(yy * w + xx)]) hit = true;
        }
      }
      if (hit) ++in;
    }
  }
  return static_cast<double>(in) / static_cast<double>(total);
}

Mask pixels(int w, int h, std::initializer_list<std::pair<int, int>> xy) {
  std::vector<std::uint8_t> r(static_cast<std::size_t>(w * h), 0);
  for (auto [x, y] : xy) r[static_cast<std::size_t>(y * w + x)] = 1;
  return Mask::from_raster(w, h, r);
}

FramePacket packet_with(std::vector<Detection2D> dets) {
  FramePacket p;
  p.detections = std::move(dets);
  p.imap = builtin_interactability();
  return p;
}

}  // namespace

TEST(MaskContainment, FullyInsideIsOne) {
  const auto o = Mask::rectangle(40, 30, {5, 5, 30, 25});
  const auto f = Mask::rectangle(40, 30, {10, 10, 12, 12});
  EXPECT_DOUBLE_EQ(mask_containment(f, o, DilationRadius(0)), 1.0);
}

TEST(MaskContainment, DisjointIsZero) {
  const auto o = Mask::rectangle(40, 30, {0, 0, 10, 10});
  const auto f = Mask::rectangle(40, 30, {20, 20, 25, 25});
  EXPECT_DOUBLE_EQ(mask_containment(f, o, DilationRadius(0)), 0.0);
}

TEST(MaskContainment, FourPixelFixtureHalfInside) {
  // Object occupies columns 0..4; delta 1 reaches column 5. Fine pixels at
  // columns 5 and 6 on two rows: two of four fall inside the dilation.
  const auto o = Mask::rectangle(12, 8, {0, 0, 5, 8});
  const auto f = pixels(12, 8, {{5, 2}, {6, 2}, {5, 3}, {6, 3}});
  const double oracle = containment_oracle(f, o, 1);
  EXPECT_DOUBLE_EQ(oracle, 0.5);
  EXPECT_DOUBLE_EQ(mask_containment(f, o, DilationRadius(1)), 0.5);
}

TEST(MaskContainment, EmptyFineMaskIsDegenerate) {
  const auto o = Mask::rectangle(10, 10, {0, 0, 5, 5});
  EXPECT_THROW(mask_containment(Mask::empty(10, 10), o, DilationRadius(0)), DegenerateInputError);
}

TEST(MaskContainment, GridMismatchRejected) {
  EXPECT_THROW(mask_containment(Mask::rectangle(10, 10, {0, 0, 2, 2}), Mask::rectangle(11, 10, {0, 0, 5, 5}),
                                DilationRadius(0)),
               ValidationError);
}

TEST(MaskContainment, MatchesOracleAndIsMonotoneInDelta) {
  Rng rng(11);
  for (int trial = 0; trial < 60; ++trial) {
    const int w = 24, h = 18;
    std::vector<std::uint8_t> fr(w * h), orr(w * h);
    for (auto& v : fr) v = rng.bernoulli(0.2);
    for (auto& v : orr) v = rng.bernoulli(0.15);
    fr[0] = 1;
    const auto f = Mask::from_raster(w, h, fr);
    const auto o = Mask::from_raster(w, h, orr);
    double prev = -1.0;
    for (int d = 0; d <= 4; ++d) {
      const double g = mask_containment(f, o, DilationRadius(d));
      EXPECT_NEAR(g, containment_oracle(f, o, d), 1e-15) << "trial " << trial << " delta " << d;
      EXPECT_GE(g, prev);
      prev = g;
    }
  }
}

TEST(DilationRadius, DefaultsAndBounds) {
  EXPECT_EQ(DilationRadius::for_image(640, 480).value(), 3);
  EXPECT_EQ(DilationRadius::for_image(1280, 960).value(), 6);
  EXPECT_EQ(DilationRadius::for_image(320, 240).value(), 2);
  EXPECT_THROW(DilationRadius(-1), ValidationError);
  EXPECT_THROW(DilationRadius(50, 160, 120), ValidationError);
  EXPECT_NO_THROW(DilationRadius(30, 160, 120));
}

TEST(GenerateCandidates, CabinetAndContainedHandle) {
  auto p = packet_with({make_det(NodeKind::Object, "cabinet", {100, 100, 300, 300}, 0.9),
                        make_det(NodeKind::InteractiveUnit, "handle", {150, 150, 180, 160}, 0.8)});
  const auto c = generate_candidates(p);
  ASSERT_EQ(c.size(), 1u);
  EXPECT_EQ(c[0].object_det, 0u);
  EXPECT_EQ(c[0].fine_det, 1u);
  EXPECT_DOUBLE_EQ(c[0].s_det, 0.8);
  EXPECT_DOUBLE_EQ(c[0].g_camc, 1.0);
  EXPECT_FALSE(c[0].s_2d);
}

TEST(GenerateCandidates, LowConfidencePartFiltered) {
  auto p = packet_with({make_det(NodeKind::Object, "cabinet", {100, 100, 300, 300}, 0.9),
                        make_det(NodeKind::InteractiveUnit, "handle", {150, 150, 180, 160}, 0.2)});
  EXPECT_TRUE(generate_candidates(p).empty());
}

TEST(GenerateCandidates, ConfidenceGateIsStrict) {
  auto p = packet_with({make_det(NodeKind::Object, "cabinet", {100, 100, 300, 300}, 0.9),
                        make_det(NodeKind::InteractiveUnit, "handle", {150, 150, 180, 160}, 0.25)});
  EXPECT_TRUE(generate_candidates(p).empty());
}

TEST(GenerateCandidates, ImapRestrictsCategories) {
  auto p = packet_with({make_det(NodeKind::Object, "bottle", {100, 100, 300, 300}, 0.9),
                        make_det(NodeKind::InteractiveUnit, "handle", {150, 150, 180, 160}, 0.8)});
  EXPECT_TRUE(generate_candidates(p).empty());
}

TEST(GenerateCandidates, TwoObjectsThreePartsFourContainments) {
  // Cabinet spans x 0..200, oven x 150..400. The drawer lies in the cabinet
  // only, the knob in both, the handle in the oven only.
  auto p = packet_with({make_det(NodeKind::Object, "cabinet", {0, 100, 200, 300}),
                        make_det(NodeKind::Object, "oven", {150, 100, 400, 300}),
                        make_det(NodeKind::FunctionalCarrier, "drawer", {20, 120, 100, 200}),
                        make_det(NodeKind::InteractiveUnit, "knob", {160, 150, 190, 170}),
                        make_det(NodeKind::InteractiveUnit, "handle", {300, 150, 330, 170})});
  // Oracle: enumerate all object x fine pairs with the pixel oracle.
  const int delta = DilationRadius::for_image(640, 480).value();
  std::vector<std::pair<std::size_t, std::size_t>> expected;
  for (std::size_t o : {0u, 1u}) {
    for (std::size_t f : {2u, 3u, 4u}) {
      const auto& od = p.detections[o];
      const auto& fd = p.detections[f];
      if (!p.imap.permits(od.category, fd.category)) continue;
      if (containment_oracle(fd.mask, od.mask, delta) > 0.9) expected.emplace_back(o, f);
    }
  }
  ASSERT_EQ(expected.size(), 4u);
  const auto c = generate_candidates(p);
  ASSERT_EQ(c.size(), expected.size());
  for (std::size_t i = 0; i < c.size(); ++i) {
    EXPECT_EQ(c[i].object_det, expected[i].first);
    EXPECT_EQ(c[i].fine_det, expected[i].second);
  }
}

TEST(GenerateCandidates, NoCarrierUnitPairsAndRemovalNeverAdds) {
  auto p = packet_with({make_det(NodeKind::Object, "oven", {100, 100, 400, 400}),
                        make_det(NodeKind::FunctionalCarrier, "control panel", {120, 110, 380, 160}),
                        make_det(NodeKind::InteractiveUnit, "knob", {150, 120, 170, 140}),
                        make_det(NodeKind::InteractiveUnit, "knob", {300, 120, 320, 140})});
  const auto all = generate_candidates(p);
  EXPECT_EQ(all.size(), 3u);
  for (const auto& c : all) EXPECT_EQ(p.detections[c.object_det].kind, NodeKind::Object);
  for (std::size_t drop = 0; drop < p.detections.size(); ++drop) {
    auto q = p;
    q.detections.erase(q.detections.begin() + static_cast<std::ptrdiff_t>(drop));
    EXPECT_LE(generate_candidates(q).size(), all.size());
  }
  EXPECT_EQ(generate_candidates(p), all);
}

TEST(AttachScore, DomainIsHalfOpen) {
  const EdgeCandidate2D c{0, 0, 1, 0.8, 1.0, std::nullopt};
  EXPECT_EQ(*attach_score(c, 1.0).s_2d, 1.0);
  EXPECT_EQ(*attach_score(c, 0.73).s_2d, 0.73);
  EXPECT_THROW(attach_score(c, 0.0), ValidationError);
  EXPECT_THROW(attach_score(c, 1.5), ValidationError);
  EXPECT_THROW(attach_score(c, -0.1), ValidationError);
}

TEST(MockScorer, TableLookupWithClampedNoise) {
  auto p = packet_with({make_det(NodeKind::Object, "cabinet", {100, 100, 300, 300}),
                        make_det(NodeKind::InteractiveUnit, "handle", {150, 150, 180, 160})});
  MockScorer exact({{{"cabinet", "handle"}, 0.7}});
  auto scored = exact.score_all(p, generate_candidates(p));
  ASSERT_EQ(scored.size(), 1u);
  EXPECT_DOUBLE_EQ(*scored[0].s_2d, 0.7);
  MockScorer noisy({{{"cabinet", "handle"}, 0.99}}, 0.5, 0.5, 3);
  for (int i = 0; i < 50; ++i) {
    const double s = noisy.score(p, scored[0]);
    EXPECT_GT(s, 0.0);
    EXPECT_LE(s, 1.0);
  }
}
