#pragma once

#include <algorithm>
#include <cmath>
#include <map>
#include <numbers>
#include <optional>
#include <string>
#include <vector>

#include "hfsg/anchor2d.hpp"
#include "hfsg/rng.hpp"
#include "hfsg/serialize.hpp"
#include "hfsg/types.hpp"

namespace hfsg {

// Per-stream corruption applied by render_stream.
struct NoiseProfile {
  double dropout_p = 0.0;       // per node per frame
  double centroid_sigma = 0.0;  // metres, RMS of the 3D centroid displacement
  double bbox_jitter = 0.0;     // pixels, per box edge
  double score_flip_p = 0.0;    // a frame's s_2d favors a wrong neighboring object
  double score_sigma = 0.0;     // spread of detection and s_2d scores
  double distractor_p = 0.0;    // a geometrically valid wrong pair receives a weak score
  double embedding_sigma = 0.0;  // semantic-embedding noise for a 32x32 px crop; grows on smaller crops
  std::uint64_t seed = 0;

  static NoiseProfile noiseless(std::uint64_t seed = 0) {
    NoiseProfile p;
    p.seed = seed;
    return p;
  }

  void validate() const {
    auto prob = [](double p, const char* name) {
      if (!(p >= 0.0 && p < 1.0)) throw ValidationError(std::string(name) + " must lie in [0,1)");
    };
    prob(dropout_p, "dropout_p");
    prob(score_flip_p, "score_flip_p");
    if (!(distractor_p >= 0.0 && distractor_p <= 1.0)) throw ValidationError("distractor_p must lie in [0,1]");
    if (centroid_sigma < 0 || bbox_jitter < 0 || score_sigma < 0 || embedding_sigma < 0) {
      throw ValidationError("noise sigmas must be >= 0");
    }
  }
};

struct GtNode {
  NodeId id = 0;
  NodeKind kind = NodeKind::Object;
  std::string category;
  Box3 box;
  std::vector<std::string> tags;
  std::vector<double> appearance;

  bool operator==(const GtNode&) const = default;
  bool tagged(std::string_view t) const { return std::find(tags.begin(), tags.end(), t) != tags.end(); }
};

struct GtTriplet {
  NodeId object = 0;
  NodeId carrier = 0;
  NodeId unit = 0;
  std::vector<std::string> tags;

  bool operator==(const GtTriplet&) const = default;
};

struct GtPair {
  NodeId object = 0;
  NodeId unit = 0;
  std::vector<std::string> tags;

  bool operator==(const GtPair&) const = default;
};

// Camera path around the scene: an arc at fixed radius and height.
struct OrbitRig {
  Vec3 center;
  double radius = 2.5;
  double height = 1.4;
  double arc_start = -0.7;  // radians, 0 = straight in front (-y side)
  double arc_end = 0.7;
  double height_swing = 0.0;  // metres; camera height oscillates by this much
  int sweeps = 0;             // full up-down cycles over the path

  bool operator==(const OrbitRig&) const = default;
};

struct GroundTruthScene {
  std::string recipe;
  std::uint64_t seed = 0;
  std::vector<GtNode> nodes;
  std::vector<GtTriplet> triplets;
  std::vector<GtPair> pairs;
  InteractabilityMap imap;
  Intrinsics intrinsics;
  OrbitRig rig;
  std::vector<Pose> trajectory;

  bool operator==(const GroundTruthScene&) const = default;

  const GtNode* find(NodeId id) const {
    for (const auto& n : nodes) {
      if (n.id == id) return &n;
    }
    return nullptr;
  }

  // Parent object of a fine node (carriers included).
  std::optional<NodeId> object_of(NodeId fine) const {
    for (const auto& t : triplets) {
      if (t.carrier == fine || t.unit == fine) return t.object;
    }
    for (const auto& p : pairs) {
      if (p.unit == fine) return p.object;
    }
    return std::nullopt;
  }

  // Expected edges (parent, child): o<-c and c<-u per triplet, o<-u per pair.
  std::vector<std::pair<NodeId, NodeId>> edges() const {
    std::vector<std::pair<NodeId, NodeId>> out;
    for (const auto& t : triplets) {
      out.emplace_back(t.object, t.carrier);
      out.emplace_back(t.carrier, t.unit);
    }
    for (const auto& p : pairs) out.emplace_back(p.object, p.unit);
    std::sort(out.begin(), out.end());
    out.erase(std::unique(out.begin(), out.end()), out.end());
    return out;
  }
};

// ---- built-in knowledge ----------------------------------------------------

inline InteractabilityMap builtin_interactability() {
  InteractabilityMap m;
  auto add = [&](const std::string& o, std::set<std::string> cs, std::set<std::string> us) {
    m.objects.insert(o);
    m.carriers_of[o] = std::move(cs);
    m.units_of[o] = std::move(us);
  };
  add("cabinet", {"drawer", "door"}, {"handle", "knob"});
  add("oven", {"control panel", "door"}, {"knob", "switch", "handle"});
  add("kettle", {"lid"}, {"handle", "switch", "knob"});
  add("pot", {"lid"}, {"handle", "knob"});
  add("bottle", {}, {"cap"});
  for (auto [c, u] : std::vector<std::pair<const char*, const char*>>{{"drawer", "handle"},
                                                                       {"drawer", "knob"},
                                                                       {"door", "handle"},
                                                                       {"door", "knob"},
                                                                       {"control panel", "knob"},
                                                                       {"control panel", "switch"},
                                                                       {"lid", "knob"}}) {
    m.prior[{c, u}] = 1.0;
  }
  return m;
}

struct PartSpec {
  NodeKind kind = NodeKind::InteractiveUnit;
  std::string category;
  Box3 box;         // relative to the object origin
  int carrier = -1;  // index of the carrier part a unit hangs from, -1 for o<-u
};

struct ObjectTemplate {
  std::string category;
  Box3 body;  // relative to the object origin; encloses all parts
  std::vector<PartSpec> parts;
  bool tabletop = false;
};

struct Placement {
  std::string object_template;
  Vec3 origin;
};

struct SceneRecipe {
  std::string name;
  std::vector<Placement> objects;
};

namespace synth_detail {

inline Box3 box(double x0, double y0, double z0, double x1, double y1, double z1) { return {{x0, y0, z0}, {x1, y1, z1}}; }

}  // namespace synth_detail

// Object templates. Origins sit at the front-left-bottom corner of the body
// front face; +y points away from the camera side, +z up.
inline std::optional<ObjectTemplate> builtin_template(const std::string& name) {
  using synth_detail::box;
  using K = NodeKind;
  if (name == "cabinet-3drawer") {
    ObjectTemplate t{"cabinet", box(0, -0.04, 0, 1.0, 0.55, 0.8), {}, false};
    for (int k = 0; k < 3; ++k) {
      const double z0 = 0.02 + 0.26 * k;
      const int drawer = static_cast<int>(t.parts.size());
      t.parts.push_back({K::FunctionalCarrier, "drawer", box(0.05, 0.0, z0, 0.95, 0.5, z0 + 0.24), -1});
      const double zc = z0 + 0.12;
      t.parts.push_back({K::InteractiveUnit, "handle", box(0.42, -0.035, zc - 0.0125, 0.58, -0.005, zc + 0.0125), drawer});
    }
    return t;
  }
  if (name == "cabinet-2door") {
    // Knobs sit close to the seam, so oblique views project them onto the
    // neighboring door.
    ObjectTemplate t{"cabinet", box(0, -0.04, 0, 0.8, 0.35, 0.7), {}, false};
    t.parts.push_back({K::FunctionalCarrier, "door", box(0.02, -0.02, 0.02, 0.395, 0.0, 0.68), -1});
    t.parts.push_back({K::InteractiveUnit, "knob", box(0.34, -0.05, 0.33, 0.37, -0.02, 0.36), 0});
    t.parts.push_back({K::FunctionalCarrier, "door", box(0.405, -0.02, 0.02, 0.78, 0.0, 0.68), -1});
    t.parts.push_back({K::InteractiveUnit, "knob", box(0.43, -0.05, 0.33, 0.46, -0.02, 0.36), 2});
    return t;
  }
  if (name == "oven") {
    ObjectTemplate t{"oven", box(0, -0.04, 0, 0.6, 0.6, 0.9), {}, false};
    t.parts.push_back({K::FunctionalCarrier, "control panel", box(0.02, -0.01, 0.76, 0.58, 0.04, 0.88), -1});
    t.parts.push_back({K::InteractiveUnit, "knob", box(0.125, -0.04, 0.795, 0.175, -0.01, 0.845), 0});
    t.parts.push_back({K::InteractiveUnit, "knob", box(0.425, -0.04, 0.795, 0.475, -0.01, 0.845), 0});
    t.parts.push_back({K::FunctionalCarrier, "door", box(0.02, -0.01, 0.05, 0.58, 0.05, 0.72), -1});
    t.parts.push_back({K::InteractiveUnit, "handle", box(0.1, -0.04, 0.64, 0.5, -0.01, 0.67), 3});
    return t;
  }
  if (name == "oven-panel-switch") {
    ObjectTemplate t{"oven", box(0, -0.04, 0, 0.6, 0.6, 0.9), {}, false};
    t.parts.push_back({K::FunctionalCarrier, "control panel", box(0.02, -0.01, 0.76, 0.58, 0.04, 0.88), -1});
    t.parts.push_back({K::InteractiveUnit, "switch", box(0.27, -0.04, 0.8, 0.33, -0.01, 0.84), 0});
    return t;
  }
  if (name == "kettle") {
    ObjectTemplate t{"kettle", box(0, 0, 0, 0.24, 0.16, 0.27), {}, true};
    t.parts.push_back({K::FunctionalCarrier, "lid", box(0.07, 0.03, 0.22, 0.17, 0.13, 0.25), -1});
    t.parts.push_back({K::InteractiveUnit, "knob", box(0.105, 0.065, 0.25, 0.135, 0.095, 0.27), 0});
    t.parts.push_back({K::InteractiveUnit, "handle", box(0.19, 0.06, 0.06, 0.24, 0.10, 0.2), -1});
    return t;
  }
  if (name == "pot") {
    ObjectTemplate t{"pot", box(0, 0, 0, 0.34, 0.22, 0.18), {}, true};
    t.parts.push_back({K::FunctionalCarrier, "lid", box(0.06, 0.01, 0.13, 0.28, 0.21, 0.15), -1});
    t.parts.push_back({K::InteractiveUnit, "knob", box(0.15, 0.09, 0.15, 0.19, 0.13, 0.18), 0});
    t.parts.push_back({K::InteractiveUnit, "handle", box(0.0, 0.08, 0.10, 0.05, 0.14, 0.13), -1});
    t.parts.push_back({K::InteractiveUnit, "handle", box(0.29, 0.08, 0.10, 0.34, 0.14, 0.13), -1});
    return t;
  }
  if (name == "bottle") {
    ObjectTemplate t{"bottle", box(0, 0, 0, 0.07, 0.07, 0.25), {}, true};
    t.parts.push_back({K::InteractiveUnit, "cap", box(0.02, 0.02, 0.22, 0.05, 0.05, 0.25), -1});
    return t;
  }
  return std::nullopt;
}

inline std::vector<std::string> builtin_recipe_names() {
  return {"bottle", "cabinet-2door", "cabinet-3drawer", "kettle", "kitchen-small", "oven-panel-switch", "pot-lid"};
}

inline std::optional<SceneRecipe> builtin_recipe(const std::string& name) {
  if (name == "bottle") return SceneRecipe{name, {{"bottle", {0, 0, 0.45}}}};
  if (name == "cabinet-2door") return SceneRecipe{name, {{"cabinet-2door", {0, 0, 0}}}};
  if (name == "cabinet-3drawer") return SceneRecipe{name, {{"cabinet-3drawer", {0, 0, 0}}}};
  if (name == "kettle") return SceneRecipe{name, {{"kettle", {0, 0, 0.45}}}};
  if (name == "pot-lid") return SceneRecipe{name, {{"pot", {0, 0, 0.45}}}};
  if (name == "oven-panel-switch") return SceneRecipe{name, {{"oven-panel-switch", {0, 0, 0}}}};
  if (name == "kitchen-small") {
    // Tabletop items stand on a counter in front of the drawer cabinet, so
    // from most viewpoints they overlap it in the image. The bottles form a
    // tight same-category row.
    return SceneRecipe{name,
                       {{"cabinet-3drawer", {-1.1, 0, 0}},
                        {"cabinet-2door", {-1.0, 0.15, 1.35}},
                        {"oven", {0.1, 0, 0}},
                        {"kettle", {-0.95, -0.5, 0.45}},
                        {"pot", {-0.6, -0.5, 0.45}},
                        {"bottle", {-0.2, -0.45, 0.45}},
                        {"bottle", {-0.11, -0.45, 0.45}},
                        {"bottle", {-0.02, -0.45, 0.45}}}};
  }
  return std::nullopt;
}

namespace synth_detail {

inline std::uint64_t category_hash(const std::string& category) {
  std::uint64_t h = 1469598103934665603ULL;
  for (char c : category) h = (h ^ static_cast<unsigned char>(c)) * 1099511628211ULL;
  return h;
}

inline std::vector<double> histogram_for(const std::string& category, std::uint64_t seed) {
  Rng r = Rng(seed).split(category_hash(category));
  std::vector<double> bins(8);
  double s = 0.0;
  for (double& b : bins) {
    b = 0.05 + r.uniform();
    s += b;
  }
  for (double& b : bins) b /= s;
  return bins;
}

constexpr std::size_t kEmbeddingDim = 16;

// Unit vector per category, independent of the scene seed.
inline std::vector<double> embedding_for(const std::string& category) {
  Rng r = Rng(0xE3BEDULL).split(category_hash(category));
  std::vector<double> e(kEmbeddingDim);
  double n = 0.0;
  for (double& x : e) {
    x = r.normal(0.0, 1.0);
    n += x * x;
  }
  for (double& x : e) x /= std::sqrt(n);
  return e;
}

}  // namespace synth_detail

// Builds a labeled scene. Deterministic in (recipe, seed): the seed jitters
// object placement by up to 2 cm and picks per-category color histograms.
inline GroundTruthScene generate_scene(const SceneRecipe& recipe, std::uint64_t seed) {
  GroundTruthScene s;
  s.recipe = recipe.name;
  s.seed = seed;
  s.imap = builtin_interactability();
  Rng rng(seed);
  NodeId next = 0;
  for (std::size_t oi = 0; oi < recipe.objects.size(); ++oi) {
    const auto& pl = recipe.objects[oi];
    auto tmpl = builtin_template(pl.object_template);
    if (!tmpl) throw RecipeError("unknown object template '" + pl.object_template + "'");
    if (!s.imap.objects.contains(tmpl->category)) throw RecipeError("unknown object category '" + tmpl->category + "'");
    Rng r = rng.split(oi);
    const Vec3 origin = pl.origin + Vec3{r.uniform(-0.02, 0.02), r.uniform(-0.02, 0.02), 0.0};
    std::vector<std::string> tags;
    if (tmpl->tabletop) tags.push_back("tabletop");
    const NodeId oid = next++;
    s.nodes.push_back({oid, NodeKind::Object, tmpl->category, tmpl->body.shifted(origin), tags,
                       synth_detail::histogram_for(tmpl->category, seed)});
    std::vector<NodeId> part_ids;
    for (const auto& part : tmpl->parts) {
      const bool ok = part.kind == NodeKind::FunctionalCarrier ? s.imap.role_c(part.category, tmpl->category)
                                                               : s.imap.role_u(part.category, tmpl->category);
      if (!ok) throw RecipeError("category '" + part.category + "' not admitted by '" + tmpl->category + "'");
      const NodeId pid = next++;
      part_ids.push_back(pid);
      s.nodes.push_back({pid, part.kind, part.category, part.box.shifted(origin), tags,
                         synth_detail::histogram_for(part.category, seed)});
    }
    for (std::size_t pi = 0; pi < tmpl->parts.size(); ++pi) {
      const auto& part = tmpl->parts[pi];
      if (part.kind != NodeKind::InteractiveUnit) continue;
      if (part.carrier >= 0) {
        auto t = tags;
        t.push_back("hierarchical");
        s.triplets.push_back({oid, part_ids[static_cast<std::size_t>(part.carrier)], part_ids[pi], t});
      } else {
        s.pairs.push_back({oid, part_ids[pi], tags});
      }
    }
  }

  if (!s.nodes.empty()) {
    Box3 all = s.nodes.front().box;
    for (const auto& n : s.nodes) {
      all.min = {std::min(all.min.x, n.box.min.x), std::min(all.min.y, n.box.min.y), std::min(all.min.z, n.box.min.z)};
      all.max = {std::max(all.max.x, n.box.max.x), std::max(all.max.y, n.box.max.y), std::max(all.max.z, n.box.max.z)};
    }
    s.rig.center = all.center();
    s.rig.radius = std::max(1.0, 1.3 * all.diagonal());
    s.rig.height = all.center().z + 0.45 * s.rig.radius;
    s.rig.height_swing = 0.2 * s.rig.radius;
    s.rig.sweeps = 2;
  }
  return s;
}

inline GroundTruthScene generate_scene(const std::string& recipe, std::uint64_t seed) {
  auto r = builtin_recipe(recipe);
  if (!r) throw RecipeError("unknown recipe '" + recipe + "'");
  return generate_scene(*r, seed);
}

inline std::vector<Pose> orbit_trajectory(const OrbitRig& rig, int n_frames) {
  std::vector<Pose> out;
  for (int t = 0; t < n_frames; ++t) {
    const double a = n_frames == 1 ? 0.5 * (rig.arc_start + rig.arc_end)
                                   : rig.arc_start + (rig.arc_end - rig.arc_start) * t / (n_frames - 1);
    const double phase = n_frames == 1 ? 0.0 : static_cast<double>(t) / (n_frames - 1);
    const double h = rig.height + rig.height_swing * std::sin(2.0 * std::numbers::pi * rig.sweeps * phase);
    const Vec3 eye{rig.center.x + rig.radius * std::sin(a), rig.center.y - rig.radius * std::cos(a), h};
    out.push_back(Pose::look_at(eye, rig.center));
  }
  return out;
}

constexpr double kMaxRange = 8.0;

// Frustum-plus-distance visibility of a box center.
inline bool visible(const Box3& b, const Pose& pose, const Intrinsics& k) {
  const Vec3 c = b.center();
  if (distance(c, pose.translation()) > kMaxRange) return false;
  auto px = project(c, pose, k);
  return px && px->u >= 0 && px->u < k.width && px->v >= 0 && px->v < k.height;
}

struct RenderedStream {
  std::vector<FramePacket> packets;
  std::vector<Pose> trajectory;
  // Ground-truth node id behind each detection, per packet.
  std::vector<std::vector<NodeId>> det_gt_ids;
};

namespace synth_detail {

inline double score_draw(Rng& r, double mean, double sigma) { return std::clamp(r.normal(mean, sigma), 0.01, 1.0); }

inline std::vector<Vec3> lattice(const Box3& b) {
  std::vector<Vec3> pts;
  for (int i = 0; i < 3; ++i) {
    for (int j = 0; j < 3; ++j) {
      for (int k = 0; k < 3; ++k) {
        pts.push_back({b.min.x + 0.5 * i * (b.max.x - b.min.x), b.min.y + 0.5 * j * (b.max.y - b.min.y),
                       b.min.z + 0.5 * k * (b.max.z - b.min.z)});
      }
    }
  }
  return pts;
}

}  // namespace synth_detail

constexpr double kTrueScoreMean = 0.8;
constexpr double kFlipScoreMean = 0.6;
constexpr double kDistractorScoreMean = 0.3;
constexpr double kConfidenceMean = 0.85;

// Renders a packet stream. Per frame, each visible node is detected unless
// dropped; its box is shifted by centroid noise and its 2D box jittered;
// masks are the projected-box rectangles. Edge candidates come from the same
// 2D pre-filter the engine applies; true pairs score around 0.8. With
// probability score_flip_p a wrong neighbor outscores the true pair in that
// frame (0.8 vs 0.6); otherwise wrong pairs get a weak score around 0.3 with
// probability distractor_p.
inline RenderedStream render_stream(const GroundTruthScene& scene, const NoiseProfile& profile, int n_frames) {
  if (n_frames < 1) throw ValidationError("n_frames must be >= 1");
  profile.validate();
  RenderedStream out;
  out.trajectory = orbit_trajectory(scene.rig, n_frames);
  const Rng root(profile.seed);
  const auto& k = scene.intrinsics;
  for (int t = 0; t < n_frames; ++t) {
    FramePacket p;
    p.frame_id = t;
    p.timestamp = t / 30.0;
    p.pose = out.trajectory[static_cast<std::size_t>(t)];
    p.intrinsics = k;
    p.imap = scene.imap;
    std::vector<NodeId> gt_ids;
    for (const auto& n : scene.nodes) {
      if (!visible(n.box, p.pose, k)) continue;
      Rng r = root.split(static_cast<std::uint64_t>(t), static_cast<std::uint64_t>(n.id));
      if (r.bernoulli(profile.dropout_p)) continue;
      const double axis_sigma = profile.centroid_sigma / std::sqrt(3.0);
      const Vec3 off{r.normal(0, axis_sigma), r.normal(0, axis_sigma), r.normal(0, axis_sigma)};
      const Box3 b = n.box.shifted(off);
      BBox2 rect{1e18, 1e18, -1e18, -1e18};
      bool in_front = true;
      for (const auto& c : b.corners()) {
        auto px = project(c, p.pose, k);
        if (!px) {
          in_front = false;
          break;
        }
        rect = {std::min(rect.x_min, px->u), std::min(rect.y_min, px->v), std::max(rect.x_max, px->u),
                std::max(rect.y_max, px->v)};
      }
      if (!in_front) continue;
      rect.x_min += r.normal(0, profile.bbox_jitter);
      rect.y_min += r.normal(0, profile.bbox_jitter);
      rect.x_max += r.normal(0, profile.bbox_jitter);
      rect.y_max += r.normal(0, profile.bbox_jitter);
      rect = {std::clamp(rect.x_min, 0.0, double(k.width)), std::clamp(rect.y_min, 0.0, double(k.height)),
              std::clamp(rect.x_max, 0.0, double(k.width)), std::clamp(rect.y_max, 0.0, double(k.height))};
      if (rect.width() < 1.0 || rect.height() < 1.0) continue;
      Detection2D d;
      d.frame_id = t;
      d.bbox = rect;
      d.category = n.category;
      d.confidence = std::clamp(r.normal(kConfidenceMean, profile.score_sigma), 0.3, 1.0);
      d.mask = Mask::rectangle(k.width, k.height, rect);
      d.appearance = n.appearance;
      {
        // Small crops give less reliable semantic features.
        const double scale = std::clamp(std::sqrt(1024.0 / std::max(rect.area(), 1.0)), 0.5, 3.0);
        const double es = profile.embedding_sigma * scale / std::sqrt(double(synth_detail::kEmbeddingDim));
        auto e = synth_detail::embedding_for(n.category);
        double norm = 0.0;
        for (double& x : e) {
          x += r.normal(0.0, es);
          norm += x * x;
        }
        for (double& x : e) x /= std::sqrt(norm);
        d.embedding = std::move(e);
      }
      d.points = synth_detail::lattice(b);
      d.centroid3d = mean(d.points);
      d.kind = n.kind;
      p.detections.push_back(std::move(d));
      gt_ids.push_back(n.id);
    }

    auto cands = generate_candidates(p);
    std::map<std::size_t, std::vector<std::size_t>> by_fine;
    for (std::size_t i = 0; i < cands.size(); ++i) by_fine[cands[i].fine_det].push_back(i);
    std::vector<EdgeCandidate2D> scored;
    for (const auto& [fd, idxs] : by_fine) {
      const NodeId fid = gt_ids[fd];
      const auto parent = scene.object_of(fid);
      Rng r = root.split(static_cast<std::uint64_t>(t), 0x5C0E0000ULL + static_cast<std::uint64_t>(fid));
      std::optional<std::size_t> truth;
      std::vector<std::size_t> wrong;
      for (auto i : idxs) {
        if (parent && gt_ids[cands[i].object_det] == *parent) {
          truth = i;
        } else {
          wrong.push_back(i);
        }
      }
      const bool flip = !wrong.empty() && r.bernoulli(profile.score_flip_p);
      std::optional<std::size_t> favored;
      if (flip) {
        favored = wrong[static_cast<std::size_t>(r.uniform() * static_cast<double>(wrong.size())) % wrong.size()];
        double hi = synth_detail::score_draw(r, kTrueScoreMean, profile.score_sigma);
        double lo = synth_detail::score_draw(r, kFlipScoreMean, profile.score_sigma);
        if (lo > hi) std::swap(lo, hi);
        if (lo == hi) lo = std::max(0.005, hi - 0.01);
        scored.push_back(attach_score(cands[*favored], hi));
        if (truth) scored.push_back(attach_score(cands[*truth], lo));
      } else if (truth) {
        scored.push_back(attach_score(cands[*truth], synth_detail::score_draw(r, kTrueScoreMean, profile.score_sigma)));
      }
      for (auto i : wrong) {
        if (favored && i == *favored) continue;
        if (r.bernoulli(profile.distractor_p)) {
          scored.push_back(attach_score(cands[i], synth_detail::score_draw(r, kDistractorScoreMean, profile.score_sigma)));
        }
      }
    }
    std::sort(scored.begin(), scored.end(), [](const auto& a, const auto& b) {
      return std::tie(a.object_det, a.fine_det) < std::tie(b.object_det, b.fine_det);
    });
    p.edge_candidates = std::move(scored);
    out.packets.push_back(std::move(p));
    out.det_gt_ids.push_back(std::move(gt_ids));
  }
  return out;
}

// ---- ground-truth files ---------------------------------------------------------

inline json to_json(const GroundTruthScene& s) {
  json nodes = json::array();
  for (const auto& n : s.nodes) {
    nodes.push_back({{"id", n.id},
                     {"kind", std::string(to_string(n.kind))},
                     {"category", n.category},
                     {"box", {{"min", io_detail::to_json(n.box.min)}, {"max", io_detail::to_json(n.box.max)}}},
                     {"tags", n.tags},
                     {"appearance", n.appearance}});
  }
  json triplets = json::array();
  for (const auto& t : s.triplets) {
    triplets.push_back({{"object", t.object}, {"carrier", t.carrier}, {"unit", t.unit}, {"tags", t.tags}});
  }
  json pairs = json::array();
  for (const auto& p : s.pairs) pairs.push_back({{"object", p.object}, {"unit", p.unit}, {"tags", p.tags}});
  json traj = json::array();
  for (const auto& p : s.trajectory) traj.push_back(p.m);
  const auto& k = s.intrinsics;
  return json{{"recipe", s.recipe},
              {"seed", s.seed},
              {"nodes", nodes},
              {"triplets", triplets},
              {"pairs", pairs},
              {"imap", to_json(s.imap)},
              {"intrinsics", {{"fx", k.fx}, {"fy", k.fy}, {"cx", k.cx}, {"cy", k.cy}, {"width", k.width}, {"height", k.height}}},
              {"rig",
               {{"center", io_detail::to_json(s.rig.center)},
                {"radius", s.rig.radius},
                {"height", s.rig.height},
                {"arc_start", s.rig.arc_start},
                {"arc_end", s.rig.arc_end},
                {"height_swing", s.rig.height_swing},
                {"sweeps", s.rig.sweeps}}},
              {"trajectory", traj}};
}

inline GroundTruthScene gt_from_json(const json& j) {
  io_detail::Reader r(j, "gt");
  GroundTruthScene s;
  s.recipe = r.string("recipe");
  const auto& seed = r.raw("seed");
  if (!seed.is_number_unsigned() && !seed.is_number_integer()) r.fail("seed", "expected an integer");
  s.seed = seed.get<std::uint64_t>();
  const auto& nodes = r.array("nodes");
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    io_detail::Reader n(nodes[i], io_detail::idx("gt.nodes", i));
    GtNode g;
    g.id = n.integer("id");
    g.kind = io_detail::kind_from(n, "kind");
    g.category = n.string("category");
    auto b = n.child("box");
    g.box = {b.vec3("min"), b.vec3("max")};
    g.tags = n.strings("tags");
    if (n.has("appearance")) g.appearance = n.numbers("appearance");
    s.nodes.push_back(std::move(g));
  }
  const auto& trip = r.array("triplets");
  for (std::size_t i = 0; i < trip.size(); ++i) {
    io_detail::Reader t(trip[i], io_detail::idx("gt.triplets", i));
    s.triplets.push_back({t.integer("object"), t.integer("carrier"), t.integer("unit"), t.strings("tags")});
  }
  const auto& pairs = r.array("pairs");
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    io_detail::Reader t(pairs[i], io_detail::idx("gt.pairs", i));
    s.pairs.push_back({t.integer("object"), t.integer("unit"), t.strings("tags")});
  }
  if (r.has("imap")) s.imap = imap_from_json(r.raw("imap"), "gt.imap");
  if (r.has("intrinsics")) {
    auto k = r.child("intrinsics");
    s.intrinsics = {k.number("fx"), k.number("fy"), k.number("cx"), k.number("cy"),
                    static_cast<int>(k.integer("width")), static_cast<int>(k.integer("height"))};
  }
  if (r.has("rig")) {
    auto g = r.child("rig");
    s.rig = {g.vec3("center"),    g.number("radius"),       g.number("height"),
             g.number("arc_start"), g.number("arc_end"),      g.number("height_swing"),
             static_cast<int>(g.integer("sweeps"))};
  }
  if (r.has("trajectory")) {
    for (const auto& p : r.array("trajectory")) {
      if (!p.is_array() || p.size() != 16) r.fail("trajectory", "expected 16-number poses");
      Pose pose;
      for (std::size_t i = 0; i < 16; ++i) pose.m[i] = p[i].get<double>();
      s.trajectory.push_back(pose);
    }
  }
  // Referential integrity.
  auto known = [&](NodeId id) { return s.find(id) != nullptr; };
  for (std::size_t i = 0; i < s.triplets.size(); ++i) {
    const auto& t = s.triplets[i];
    if (!known(t.object) || !known(t.carrier) || !known(t.unit)) {
      throw ParseError("gt.triplets[" + std::to_string(i) + "]: references a missing node");
    }
  }
  for (std::size_t i = 0; i < s.pairs.size(); ++i) {
    if (!known(s.pairs[i].object) || !known(s.pairs[i].unit)) {
      throw ParseError("gt.pairs[" + std::to_string(i) + "]: references a missing node");
    }
  }
  return s;
}

}  // namespace hfsg
