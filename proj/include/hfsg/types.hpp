#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "hfsg/error.hpp"
#include "hfsg/geometry.hpp"
#include "hfsg/mask.hpp"

namespace hfsg {

using NodeId = std::int64_t;
using FrameId = std::int64_t;

// Carriers and units are jointly "fine-grained".
enum class NodeKind { Object, FunctionalCarrier, InteractiveUnit };

inline bool is_fine(NodeKind k) { return k != NodeKind::Object; }

inline std::string_view to_string(NodeKind k) {
  switch (k) {
    case NodeKind::Object: return "object";
    case NodeKind::FunctionalCarrier: return "carrier";
    case NodeKind::InteractiveUnit: return "unit";
  }
  return "object";
}

inline std::optional<NodeKind> parse_node_kind(std::string_view s) {
  if (s == "object") return NodeKind::Object;
  if (s == "carrier") return NodeKind::FunctionalCarrier;
  if (s == "unit") return NodeKind::InteractiveUnit;
  return std::nullopt;
}

struct Detection2D {
  FrameId frame_id = 0;
  BBox2 bbox;
  std::string category;
  double confidence = 0.0;
  Mask mask;
  std::vector<double> appearance;               // normalized color histogram
  std::optional<std::vector<double>> embedding;  // unit-norm semantic vector
  std::optional<Vec3> centroid3d;                // world frame, absent without valid depth
  std::vector<Vec3> points;                      // back-projected observation, may be empty
  NodeKind kind = NodeKind::Object;

  bool operator==(const Detection2D&) const = default;
};

// Per-frame table of manipulable object categories and the carrier/unit
// categories each admits. `prior` is directed: (carrier, unit) -> [0,1].
struct InteractabilityMap {
  std::set<std::string> objects;
  std::map<std::string, std::set<std::string>> carriers_of;
  std::map<std::string, std::set<std::string>> units_of;
  std::map<std::pair<std::string, std::string>, double> prior;

  bool operator==(const InteractabilityMap&) const = default;

  bool role_c(const std::string& fine, const std::string& object) const {
    auto it = carriers_of.find(object);
    return it != carriers_of.end() && it->second.contains(fine);
  }
  bool role_u(const std::string& fine, const std::string& object) const {
    auto it = units_of.find(object);
    return it != units_of.end() && it->second.contains(fine);
  }
  bool permits(const std::string& object, const std::string& fine) const {
    return objects.contains(object) && (role_c(fine, object) || role_u(fine, object));
  }
  double compatibility(const std::string& carrier, const std::string& unit) const {
    auto it = prior.find({carrier, unit});
    return it == prior.end() ? 0.0 : it->second;
  }

  // Union; on prior conflicts the larger compatibility wins.
  void merge(const InteractabilityMap& other) {
    objects.insert(other.objects.begin(), other.objects.end());
    for (const auto& [o, cs] : other.carriers_of) carriers_of[o].insert(cs.begin(), cs.end());
    for (const auto& [o, us] : other.units_of) units_of[o].insert(us.begin(), us.end());
    for (const auto& [k, v] : other.prior) {
      auto [it, inserted] = prior.emplace(k, v);
      if (!inserted) it->second = std::max(it->second, v);
    }
  }
};

// A candidate o <- f edge observed in one frame. Detection references are
// indices into the owning packet's detection list.
struct EdgeCandidate2D {
  FrameId frame_id = 0;
  std::size_t object_det = 0;
  std::size_t fine_det = 0;
  double s_det = 0.0;
  double g_camc = 0.0;
  std::optional<double> s_2d;

  bool operator==(const EdgeCandidate2D&) const = default;
};

struct FramePacket {
  FrameId frame_id = 0;
  double timestamp = 0.0;
  Pose pose;
  Intrinsics intrinsics;
  std::vector<Detection2D> detections;
  std::vector<EdgeCandidate2D> edge_candidates;
  InteractabilityMap imap;

  bool operator==(const FramePacket&) const = default;
};

struct MapNode {
  NodeId id = 0;
  NodeKind kind = NodeKind::Object;
  std::string category;
  std::vector<Vec3> points;
  Vec3 centroid;
  Box3 bbox3d;
  double diag = 0.0;
  std::vector<double> appearance;
  std::vector<double> embedding;  // empty when no semantic features were seen
  std::int64_t obs_count = 0;
  FrameId last_seen = 0;

  bool operator==(const MapNode&) const = default;
};

enum class Relation { Functional, CarrierOf, UnitOf };

inline std::string_view to_string(Relation r) {
  switch (r) {
    case Relation::Functional: return "functional";
    case Relation::CarrierOf: return "carrier-of";
    case Relation::UnitOf: return "unit-of";
  }
  return "functional";
}

inline std::optional<Relation> parse_relation(std::string_view s) {
  if (s == "functional") return Relation::Functional;
  if (s == "carrier-of") return Relation::CarrierOf;
  if (s == "unit-of") return Relation::UnitOf;
  return std::nullopt;
}

// Directed edge parent <- child.
struct Edge {
  NodeId parent = 0;
  NodeId child = 0;
  Relation relation = Relation::Functional;

  bool operator==(const Edge&) const = default;
  auto operator<=>(const Edge&) const = default;
};

struct Provenance {
  NodeId parent = 0;
  NodeId child = 0;
  double score = 0.0;

  bool operator==(const Provenance&) const = default;
};

struct SceneGraph {
  std::vector<MapNode> nodes;
  std::vector<Edge> edges;
  std::vector<Provenance> provenance;

  bool operator==(const SceneGraph&) const = default;

  const MapNode* find(NodeId id) const {
    for (const auto& n : nodes) {
      if (n.id == id) return &n;
    }
    return nullptr;
  }
  std::optional<NodeId> parent_of(NodeId child) const {
    for (const auto& e : edges) {
      if (e.child == child) return e.parent;
    }
    return std::nullopt;
  }
  bool has_edge(NodeId parent, NodeId child) const {
    for (const auto& e : edges) {
      if (e.parent == parent && e.child == child) return true;
    }
    return false;
  }
};

// Temporal belief over the parent object of one fine-grained node. Per-candidate
// vectors are index-aligned with `candidates`, which keeps creation order.
struct EdgeBelief {
  NodeId fine_id = 0;
  std::vector<NodeId> candidates;
  std::vector<double> logodds;
  std::vector<double> z;
  std::vector<double> z_prev;
  std::vector<std::set<FrameId>> obs_frames;

  bool operator==(const EdgeBelief&) const = default;

  std::optional<std::size_t> index_of(NodeId object) const {
    for (std::size_t i = 0; i < candidates.size(); ++i) {
      if (candidates[i] == object) return i;
    }
    return std::nullopt;
  }
  std::size_t total_observations() const {
    std::size_t n = 0;
    for (const auto& s : obs_frames) n += s.size();
    return n;
  }
};

}  // namespace hfsg
