#include <gtest/gtest.h>

#include <sstream>

#include "support.hpp"

using namespace hfsg;

namespace {

RenderedStream noiseless(const std::string& recipe, int frames, std::uint64_t seed = 0) {
  return render_stream(generate_scene(recipe, seed), NoiseProfile::noiseless(seed), frames);
}

std::size_t count_events(const std::vector<json>& ev, const std::string& type) {
  return static_cast<std::size_t>(std::count_if(ev.begin(), ev.end(), [&](const json& e) { return e["type"] == type; }));
}

}  // namespace

TEST(Engine, RejectsOutOfOrderFrames) {
  const auto st = noiseless("bottle", 3);
  Engine e;
  e.ingest(st.packets[1]);
  EXPECT_THROW(e.ingest(st.packets[0]), ValidationError);
  EXPECT_THROW(e.ingest(st.packets[1]), ValidationError);
  auto reversed = st.packets;
  std::swap(reversed[0], reversed[2]);
  EXPECT_THROW(run_pipeline(reversed, {}), ValidationError);
}

TEST(Engine, RejectsIngestAfterFinalize) {
  const auto st = noiseless("bottle", 2);
  Engine e;
  e.ingest(st.packets[0]);
  e.finalize();
  EXPECT_THROW(e.ingest(st.packets[1]), ValidationError);
}

TEST(Engine, NoiselessStreamsReproduceGroundTruth) {
  for (const auto& name : builtin_recipe_names()) {
    const auto scene = generate_scene(name, 0);
    const auto st = render_stream(scene, NoiseProfile::noiseless(0), 60);
    const auto r = run_pipeline(st.packets, {});
    std::string why;
    EXPECT_TRUE(structurally_equal(scene, r.graph, &why)) << name << ": " << why;
    EXPECT_NO_THROW(validate_graph(r.graph));
  }
}

TEST(Engine, StrideThreeMatchesEveryFrameWhenNoiseless) {
  for (const auto& name : {"cabinet-3drawer", "oven-panel-switch", "kitchen-small"}) {
    const auto st = noiseless(name, 90);
    EngineConfig every, third;
    third.stride = 3;
    const auto a = run_pipeline(st.packets, every);
    const auto b = run_pipeline(st.packets, third);
    EXPECT_EQ(b.frames_processed, 30u);
    std::string why;
    EXPECT_TRUE(test::same_structure(a.graph, b.graph, &why)) << name << ": " << why;
  }
}

TEST(Engine, DeterministicOutput) {
  const auto scene = generate_scene("kitchen-small", 1);
  const auto st = render_stream(scene, test::noisy_profile(1), 40);
  const auto a = run_pipeline(st.packets, {});
  const auto b = run_pipeline(st.packets, {});
  EXPECT_EQ(serialize_graph(a.graph), serialize_graph(b.graph));
  EXPECT_EQ(serialize_events(a.events), serialize_events(b.events));
}

TEST(Engine, EveryFinalEdgeHasEnoughEvidence) {
  const auto scene = generate_scene("kitchen-small", 2);
  const auto st = render_stream(scene, test::noisy_profile(2), 60);
  const auto r = run_pipeline(st.packets, {});
  std::map<NodeId, int> evidence;
  for (const auto& e : r.events) {
    if (e["type"] == "evidence") ++evidence[e["fine"].get<NodeId>()];
  }
  const int min_obs = EngineConfig{}.edge.min_obs;
  for (const auto& e : r.graph.edges) {
    // Carrier-unit edges come from pairing; the unit's own object evidence backs them.
    EXPECT_GE(evidence[e.child], min_obs) << e.parent << "<-" << e.child;
  }
  EXPECT_GE(count_events(r.events, "spawn"), r.graph.nodes.size());
}

TEST(Engine, DepthlessDetectionsUseSameFrameOrPending) {
  auto st = noiseless("bottle", 10);
  // Frame 3: strip the cap's depth; the node already exists, so it matches
  // in the same frame on 2D cues.
  auto& f3 = st.packets[3];
  for (auto& d : f3.detections) {
    if (d.category == "cap") {
      d.centroid3d.reset();
      d.points.clear();
    }
  }
  Engine e;
  for (int t = 0; t <= 3; ++t) e.ingest(st.packets[static_cast<std::size_t>(t)]);
  const auto& ev = e.events();
  EXPECT_TRUE(std::any_of(ev.begin(), ev.end(), [](const json& x) {
    return x["type"] == "match" && x["frame"] == 3 && x.contains("depth");
  }));
  EXPECT_EQ(e.pending(), 0u);
}

TEST(Engine, UnmatchedDepthlessDetectionIsDroppedAfterRetries) {
  auto st = noiseless("bottle", 12);
  // An object in an empty image corner that no node projects onto.
  Detection2D ghost = test::make_det(NodeKind::Object, "kettle", {600, 10, 630, 40});
  ghost.centroid3d.reset();
  ghost.points.clear();
  st.packets[2].detections.push_back(ghost);
  st.packets[2].detections.back().frame_id = 2;
  Engine e;
  e.ingest(st.packets[0]);
  e.ingest(st.packets[1]);
  e.ingest(st.packets[2]);
  EXPECT_EQ(e.pending(), 1u);
  for (std::size_t t = 3; t < 12; ++t) e.ingest(st.packets[t]);
  EXPECT_EQ(e.pending(), 0u);
  EXPECT_EQ(count_events(e.events(), "pending"), 1u);
  EXPECT_EQ(count_events(e.events(), "pending-dropped"), 1u);
  const auto g = e.finalize();
  EXPECT_TRUE(std::none_of(g.nodes.begin(), g.nodes.end(), [](const MapNode& n) { return n.category == "kettle"; }));
}

TEST(Engine, AblationModesRun) {
  const auto scene = generate_scene("cabinet-3drawer", 0);
  const auto st = render_stream(scene, NoiseProfile::noiseless(0), 40);
  for (auto m : {AblationMode::AssocBaseline, AblationMode::NoGoCount, AblationMode::Hierarchy2dOff}) {
    EngineConfig c;
    c.mode = m;
    const auto r = run_pipeline(st.packets, c);
    std::string why;
    EXPECT_TRUE(structurally_equal(scene, r.graph, &why)) << to_string(m) << ": " << why;
  }
}

TEST(Config, SetAndLoad) {
  EngineConfig c;
  c.set("assoc.sigma = 0.2");
  EXPECT_DOUBLE_EQ(c.weights.sigma, 0.2);
  c.set("engine.mode", "no-go-count");
  EXPECT_EQ(c.mode, AblationMode::NoGoCount);
  c.set("gate.same_kind=false");
  EXPECT_FALSE(c.gate.same_kind);
  EXPECT_THROW(c.set("assoc.nope=1"), ValidationError);
  EXPECT_THROW(c.set("assoc.sigma=abc"), ValidationError);
  EXPECT_THROW(c.set("edge.min_obs=1.5"), ValidationError);
  EXPECT_THROW(c.set("engine.mode=fast"), ValidationError);
  EXPECT_THROW(c.set("novalue"), ValidationError);

  std::istringstream good("# tuned\nedge.lambda_h = 0.5\n\nengine.stride=2  # every other frame\n");
  c.load(good);
  EXPECT_DOUBLE_EQ(c.edge.lambda_h, 0.5);
  EXPECT_EQ(c.stride, 2);

  std::istringstream bad("edge.lambda_h = 0.5\nedge.lambda_x = 1\n");
  try {
    c.load(bad);
    FAIL() << "expected ParseError";
  } catch (const ParseError& e) {
    EXPECT_NE(std::string(e.what()).find("config line 2"), std::string::npos);
  }
}

TEST(Config, EngineValidatesOnConstruction) {
  EngineConfig c;
  c.weights.w_iou = 0.9;
  EXPECT_THROW(Engine{c}, ValidationError);
  c = {};
  c.stride = 0;
  EXPECT_THROW(Engine{c}, ValidationError);
  c = {};
  c.edge.eps_clamp = 0.6;
  EXPECT_THROW(Engine{c}, ValidationError);
}
