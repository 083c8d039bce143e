#pragma once

#include <cmath>
#include <map>
#include <numeric>
#include <set>
#include <string>
#include <vector>

#include "hfsg/types.hpp"

namespace hfsg {

namespace detail {

inline void check(bool ok, const std::string& what) {
  if (!ok) throw ValidationError(what);
}

inline std::string at(std::string_view field, std::size_t i) {
  return std::string(field) + "[" + std::to_string(i) + "]";
}

}  // namespace detail

constexpr double kHistogramTol = 1e-6;
constexpr double kUnitNormTol = 1e-6;
constexpr double kRotationTol = 1e-5;

inline void validate_detection(const Detection2D& d, const Intrinsics& k, const std::string& where) {
  using detail::check;
  check(d.bbox.well_ordered(), where + ".bbox: not well-ordered");
  check(d.confidence >= 0.0 && d.confidence <= 1.0, where + ".confidence: outside [0,1]");
  check(d.mask.consistent(), where + ".mask: run lengths do not cover the grid");
  check(d.mask.width() == k.width && d.mask.height() == k.height, where + ".mask: grid differs from image size");
  for (const auto& s : d.mask.spans()) {
    const bool inside = s.x0 >= d.bbox.x_min - 1.0 && s.x1 <= d.bbox.x_max + 1.0 &&
                        s.y >= d.bbox.y_min - 1.0 && s.y + 1 <= d.bbox.y_max + 1.0;
    check(inside, where + ".mask: pixels outside bbox");
  }
  const double hsum = std::accumulate(d.appearance.begin(), d.appearance.end(), 0.0);
  check(!d.appearance.empty() && std::abs(hsum - 1.0) <= kHistogramTol, where + ".appearance: does not sum to 1");
  for (double h : d.appearance) check(h >= 0.0, where + ".appearance: negative bin");
  if (d.embedding) {
    double n2 = 0.0;
    for (double e : *d.embedding) n2 += e * e;
    check(std::abs(std::sqrt(n2) - 1.0) <= kUnitNormTol, where + ".embedding: not unit norm");
  }
  if (d.centroid3d) {
    check(std::isfinite(d.centroid3d->x) && std::isfinite(d.centroid3d->y) && std::isfinite(d.centroid3d->z),
          where + ".centroid3d: non-finite");
  }
}

// Throws ValidationError naming the offending field.
inline void validate_packet(const FramePacket& p) {
  using detail::at;
  using detail::check;
  const std::string base = "frame " + std::to_string(p.frame_id);
  check(p.pose.orthonormality_error() <= kRotationTol, base + ": pose rotation not orthonormal");
  check(p.intrinsics.width > 0 && p.intrinsics.height > 0 && p.intrinsics.fx > 0 && p.intrinsics.fy > 0,
        base + ": invalid intrinsics");
  for (std::size_t i = 0; i < p.detections.size(); ++i) {
    validate_detection(p.detections[i], p.intrinsics, base + ": " + at("detections", i));
  }
  for (std::size_t i = 0; i < p.edge_candidates.size(); ++i) {
    const auto& c = p.edge_candidates[i];
    const std::string where = base + ": " + at("edge_candidates", i);
    check(c.object_det < p.detections.size(), where + ".object_det: references a missing detection");
    check(c.fine_det < p.detections.size(), where + ".fine_det: references a missing detection");
    check(c.object_det != c.fine_det, where + ": object and fine detection coincide");
    if (c.s_2d) check(*c.s_2d > 0.0 && *c.s_2d <= 1.0, where + ".s_2d: outside (0,1]");
  }
}

// Structural checks on a scene graph: edges reference existing nodes, every
// node has at most one parent, no cycles, chains terminate at an Object no
// more than two hops up, and Objects never have parents.
inline std::vector<std::string> graph_problems(const SceneGraph& g) {
  std::vector<std::string> out;
  std::map<NodeId, const MapNode*> by_id;
  for (const auto& n : g.nodes) {
    if (!by_id.emplace(n.id, &n).second) out.push_back("duplicate node id " + std::to_string(n.id));
  }
  std::map<NodeId, NodeId> parent;
  for (const auto& e : g.edges) {
    if (!by_id.contains(e.parent) || !by_id.contains(e.child)) {
      out.push_back("edge " + std::to_string(e.parent) + "<-" + std::to_string(e.child) + " references a missing node");
      continue;
    }
    if (!parent.emplace(e.child, e.parent).second) {
      out.push_back("node " + std::to_string(e.child) + " has more than one parent");
    }
    if (by_id[e.child]->kind == NodeKind::Object) {
      out.push_back("object node " + std::to_string(e.child) + " has a parent");
    }
  }
  for (const auto& [child, p] : parent) {
    NodeId cur = child;
    int hops = 0;
    std::set<NodeId> seen{cur};
    while (parent.contains(cur)) {
      cur = parent[cur];
      ++hops;
      if (!seen.insert(cur).second) {
        out.push_back("cycle through node " + std::to_string(child));
        break;
      }
    }
    if (hops > 2) out.push_back("node " + std::to_string(child) + " is more than two hops from its root");
    if (by_id.contains(cur) && by_id[cur]->kind != NodeKind::Object) {
      out.push_back("chain from node " + std::to_string(child) + " is not rooted at an object");
    }
  }
  return out;
}

inline void validate_graph(const SceneGraph& g) {
  auto problems = graph_problems(g);
  if (!problems.empty()) throw InvariantViolation("scene graph invalid: " + problems.front());
}

}  // namespace hfsg
