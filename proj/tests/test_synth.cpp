#include <gtest/gtest.h>

#include "support.hpp"

using namespace hfsg;

namespace {

int count_kind(const GroundTruthScene& s, NodeKind k) {
  return static_cast<int>(std::count_if(s.nodes.begin(), s.nodes.end(), [&](const GtNode& n) { return n.kind == k; }));
}

}  // namespace

TEST(Recipes, CabinetThreeDrawers) {
  const auto s = generate_scene("cabinet-3drawer", 0);
  EXPECT_EQ(count_kind(s, NodeKind::Object), 1);
  EXPECT_EQ(count_kind(s, NodeKind::FunctionalCarrier), 3);
  EXPECT_EQ(count_kind(s, NodeKind::InteractiveUnit), 3);
  EXPECT_EQ(s.triplets.size(), 3u);
  EXPECT_TRUE(s.pairs.empty());
  for (const auto& t : s.triplets) EXPECT_TRUE(std::find(t.tags.begin(), t.tags.end(), "hierarchical") != t.tags.end());
}

TEST(Recipes, BottleIsTabletopPair) {
  const auto s = generate_scene("bottle", 0);
  EXPECT_EQ(count_kind(s, NodeKind::Object), 1);
  EXPECT_EQ(count_kind(s, NodeKind::InteractiveUnit), 1);
  ASSERT_EQ(s.pairs.size(), 1u);
  EXPECT_TRUE(s.triplets.empty());
  EXPECT_TRUE(std::find(s.pairs[0].tags.begin(), s.pairs[0].tags.end(), "tabletop") != s.pairs[0].tags.end());
}

TEST(Recipes, UnknownNameRejected) {
  EXPECT_THROW(generate_scene("spaceship", 0), RecipeError);
  SceneRecipe r{"bad", {{"no-such-template", {0, 0, 0}}}};
  EXPECT_THROW(generate_scene(r, 0), RecipeError);
}

TEST(Recipes, EveryBuiltinGeneratesConsistentScene) {
  for (const auto& name : builtin_recipe_names()) {
    const auto s = generate_scene(name, 1);
    EXPECT_EQ(s.recipe, name);
    EXPECT_FALSE(s.nodes.empty());
    for (const auto& [p, c] : s.edges()) {
      ASSERT_TRUE(s.find(p) && s.find(c)) << name;
    }
    EXPECT_NO_THROW(validate_graph(graph_from_gt(s))) << name;
  }
}

TEST(Determinism, ScenesAndStreamsAreByteIdentical) {
  const auto a = generate_scene("kitchen-small", 7);
  const auto b = generate_scene("kitchen-small", 7);
  EXPECT_EQ(to_json(a).dump(), to_json(b).dump());
  const auto sa = render_stream(a, test::noisy_profile(7), 30);
  const auto sb = render_stream(b, test::noisy_profile(7), 30);
  EXPECT_EQ(serialize_packets(sa.packets), serialize_packets(sb.packets));
  const auto sc = render_stream(a, test::noisy_profile(8), 30);
  EXPECT_NE(serialize_packets(sa.packets), serialize_packets(sc.packets));
}

TEST(GroundTruthJson, RoundTrip) {
  const auto s = generate_scene("kitchen-small", 2);
  const auto back = gt_from_json(json::parse(to_json(s).dump()));
  EXPECT_EQ(to_json(back).dump(), to_json(s).dump());
}

TEST(RenderStream, NoiselessFramesAreExactGroundTruth) {
  const auto s = generate_scene("kitchen-small", 0);
  const auto st = render_stream(s, NoiseProfile::noiseless(0), 40);
  for (std::size_t t = 0; t < st.packets.size(); ++t) {
    const auto& p = st.packets[t];
    EXPECT_NO_THROW(validate_packet(p));
    std::set<NodeId> seen(st.det_gt_ids[t].begin(), st.det_gt_ids[t].end());
    for (const auto& n : s.nodes) {
      EXPECT_EQ(seen.contains(n.id), visible(n.box, p.pose, s.intrinsics)) << "frame " << t << " node " << n.id;
    }
    for (std::size_t i = 0; i < p.detections.size(); ++i) {
      const auto* g = s.find(st.det_gt_ids[t][i]);
      const auto& d = p.detections[i];
      EXPECT_EQ(d.category, g->category);
      EXPECT_EQ(d.kind, g->kind);
      EXPECT_LT(distance(*d.centroid3d, g->box.center()), 1e-12);
    }
    // Every scored candidate is a true edge.
    for (const auto& c : p.edge_candidates) {
      EXPECT_EQ(s.object_of(st.det_gt_ids[t][c.fine_det]), st.det_gt_ids[t][c.object_det]);
    }
  }
}

TEST(RenderStream, DropoutIsBinomial) {
  const auto s = generate_scene("cabinet-3drawer", 0);
  NoiseProfile drop;
  drop.dropout_p = 0.3;
  drop.seed = 5;
  const auto full = render_stream(s, NoiseProfile::noiseless(5), 100);
  const auto thin = render_stream(s, drop, 100);
  std::map<NodeId, int> visible_n, seen_n;
  for (const auto& ids : full.det_gt_ids)
    for (auto id : ids) ++visible_n[id];
  for (const auto& ids : thin.det_gt_ids)
    for (auto id : ids) ++seen_n[id];
  for (const auto& [id, v] : visible_n) {
    const double mean = 0.7 * v;
    const double sd = std::sqrt(v * 0.7 * 0.3);
    EXPECT_NEAR(seen_n[id], mean, 2.0 * sd) << "node " << id << " visible in " << v;
  }
}

TEST(RenderStream, FlipRateMatchesProfile) {
  const auto s = generate_scene("kitchen-small", 0);
  NoiseProfile flip;
  flip.score_flip_p = 0.2;
  flip.score_sigma = 0.05;
  flip.seed = 3;
  const auto st = render_stream(s, flip, 100);
  int evidenced = 0, wrong = 0;
  for (std::size_t t = 0; t < st.packets.size(); ++t) {
    const auto& p = st.packets[t];
    const auto cands = generate_candidates(p);
    std::map<std::size_t, std::vector<EdgeCandidate2D>> by_fine;
    for (const auto& c : cands) by_fine[c.fine_det].push_back(c);
    for (const auto& [fd, cs] : by_fine) {
      const auto parent = s.object_of(st.det_gt_ids[t][fd]);
      const bool has_true = std::any_of(cs.begin(), cs.end(), [&](const auto& c) { return st.det_gt_ids[t][c.object_det] == parent; });
      if (!has_true || cs.size() < 2) continue;
      const EdgeCandidate2D* best = nullptr;
      for (const auto& c : p.edge_candidates) {
        if (c.fine_det == fd && (!best || *c.s_2d > *best->s_2d)) best = &c;
      }
      ASSERT_TRUE(best);
      ++evidenced;
      if (st.det_gt_ids[t][best->object_det] != parent) ++wrong;
    }
  }
  ASSERT_GT(evidenced, 100);
  const double rate = static_cast<double>(wrong) / evidenced;
  EXPECT_NEAR(rate, 0.2, 3.0 * std::sqrt(0.2 * 0.8 / evidenced)) << wrong << "/" << evidenced;
}

TEST(NoiseProfile, ValidationRejectsBadValues) {
  NoiseProfile p;
  p.dropout_p = 1.0;
  EXPECT_THROW(p.validate(), ValidationError);
  p = {};
  p.centroid_sigma = -0.1;
  EXPECT_THROW(p.validate(), ValidationError);
  EXPECT_THROW(render_stream(generate_scene("bottle", 0), {}, 0), ValidationError);
}
