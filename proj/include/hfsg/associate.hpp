#pragma once

#include <algorithm>
#include <cmath>
#include <map>
#include <optional>
#include <tuple>
#include <vector>

#include "hfsg/assignment.hpp"
#include "hfsg/types.hpp"

namespace hfsg {

struct AssociationWeights {
  double w_iou = 0.5;
  double w_geo = 0.5 / 3.0;
  double w_app = 0.5 / 3.0;
  double w_sem = 0.5 / 3.0;
  double sigma = 0.10;  // Gaussian kernel width, metres

  void validate() const {
    if (w_iou < 0 || w_geo < 0 || w_app < 0 || w_sem < 0) throw ValidationError("association weights must be >= 0");
    if (std::abs(w_iou + w_geo + w_app + w_sem - 1.0) > 1e-9) throw ValidationError("association weights must sum to 1");
    if (!(sigma > 0)) throw ValidationError("association sigma must be > 0");
  }
};

struct GateParams {
  double tau_ass = 0.45;
  double dist_cap = 0.15;
  double dist_frac = 0.5;
  bool same_kind = true;  // a node's role is fixed at spawn

  void validate() const {
    if (!(tau_ass > 0 && tau_ass < 1)) throw ValidationError("tau_ass must lie in (0,1)");
    if (!(dist_cap > 0 && dist_frac > 0)) throw ValidationError("gate distances must be > 0");
  }

  double distance_threshold(double node_diag) const { return std::min(dist_cap, dist_frac * node_diag); }
};

struct NodeUpdateParams {
  double alpha = 0.3;   // appearance EMA factor
  double voxel = 0.01;  // point-set cap, metres
};

// 2D box of a node's points as seen from a frame: 5th-95th percentile of the
// projected coordinates, ignoring points behind the camera. Empty if fewer
// than three points project.
inline std::optional<BBox2> project_node(const MapNode& node, const Pose& pose, const Intrinsics& k) {
  std::vector<double> us, vs;
  us.reserve(node.points.size());
  vs.reserve(node.points.size());
  for (const auto& p : node.points) {
    if (auto px = project(p, pose, k)) {
      us.push_back(px->u);
      vs.push_back(px->v);
    }
  }
  if (us.size() < 3) return std::nullopt;
  BBox2 b;
  b.x_min = percentile(us, 0.05);
  b.x_max = percentile(us, 0.95);
  b.y_min = percentile(vs, 0.05);
  b.y_max = percentile(vs, 0.95);
  return b;
}

struct ScoreTerms {
  double iou = 0.0;
  double geo = 0.0;
  double app = 0.0;
  double sem = 0.0;
  double total = 0.0;
};

// Embedding cosine when both sides carry embeddings, exact category match otherwise.
inline double semantic_similarity(const Detection2D& det, const MapNode& node) {
  if (det.embedding && !det.embedding->empty() && !node.embedding.empty()) {
    return std::max(0.0, cosine(*det.embedding, node.embedding));
  }
  return det.category == node.category ? 1.0 : 0.0;
}

// Multi-cue score; `projected` is the node's projection in the detection's
// frame (IoU term is 0 when absent). Requires det.centroid3d.
inline ScoreTerms association_terms(const Detection2D& det, const MapNode& node, const AssociationWeights& w,
                                    const std::optional<BBox2>& projected) {
  ScoreTerms t;
  t.iou = projected ? iou(det.bbox, *projected) : 0.0;
  const double d = det.centroid3d ? distance(*det.centroid3d, node.centroid) : std::numeric_limits<double>::infinity();
  t.geo = std::exp(-d * d / (2.0 * w.sigma * w.sigma));
  t.app = std::max(0.0, cosine(det.appearance, node.appearance));
  t.sem = semantic_similarity(det, node);
  t.total = w.w_iou * t.iou + w.w_geo * t.geo + w.w_app * t.app + w.w_sem * t.sem;
  return t;
}

inline double association_score(const Detection2D& det, const MapNode& node, const AssociationWeights& w,
                                const Pose& pose, const Intrinsics& k) {
  return association_terms(det, node, w, project_node(node, pose, k)).total;
}

// Scale-adaptive distance gate, projection overlap and score floor, plus
// kind consistency when enabled.
inline bool gate(const Detection2D& det, const MapNode& node, const GateParams& g, double score, double iou2d) {
  if (!det.centroid3d) return false;
  if (g.same_kind && det.kind != node.kind) return false;
  const double d = distance(*det.centroid3d, node.centroid);
  return d < g.distance_threshold(node.diag) && iou2d > 0.0 && score >= g.tau_ass;
}

struct FrameMatch {
  std::vector<std::pair<std::size_t, std::size_t>> pairs;  // (detection, node) indices
  std::vector<std::size_t> unmatched_dets;
  std::vector<std::size_t> unmatched_nodes;
  double total = 0.0;
};

// One-to-one maximum-score matching on a gated score matrix (rows =
// detections, cols = nodes, NaN = gated out).
inline FrameMatch match_frame(const WeightMatrix& gated_scores) {
  auto a = max_weight_matching(gated_scores);
  return {std::move(a.pairs), std::move(a.unmatched_rows), std::move(a.unmatched_cols), a.total};
}

// Builds the gated matrix for a frame and matches it.
inline FrameMatch match_frame(const std::vector<Detection2D>& dets, const std::vector<MapNode>& nodes,
                              const AssociationWeights& w, const GateParams& g, const Pose& pose,
                              const Intrinsics& k) {
  WeightMatrix m(dets.size(), nodes.size());
  std::vector<std::optional<std::optional<BBox2>>> proj(nodes.size());
  for (std::size_t i = 0; i < dets.size(); ++i) {
    if (!dets[i].centroid3d) continue;
    for (std::size_t j = 0; j < nodes.size(); ++j) {
      if (g.same_kind && dets[i].kind != nodes[j].kind) continue;
      if (distance(*dets[i].centroid3d, nodes[j].centroid) >= g.distance_threshold(nodes[j].diag)) continue;
      if (!proj[j]) proj[j] = project_node(nodes[j], pose, k);
      const auto t = association_terms(dets[i], nodes[j], w, *proj[j]);
      if (gate(dets[i], nodes[j], g, t.total, t.iou)) m.at(i, j) = t.total;
    }
  }
  return match_frame(m);
}

// Voxel-grid cap: one representative (the mean of its members) per occupied
// voxel, emitted in voxel-key order.
inline std::vector<Vec3> voxel_downsample(const std::vector<Vec3>& pts, double voxel) {
  if (voxel <= 0.0) return pts;
  std::map<std::tuple<long, long, long>, std::pair<Vec3, int>> cells;
  for (const auto& p : pts) {
    auto key = std::make_tuple(static_cast<long>(std::floor(p.x / voxel)), static_cast<long>(std::floor(p.y / voxel)),
                               static_cast<long>(std::floor(p.z / voxel)));
    auto& [sum, n] = cells[key];
    sum += p;
    ++n;
  }
  std::vector<Vec3> out;
  out.reserve(cells.size());
  for (const auto& [key, acc] : cells) out.push_back((1.0 / acc.second) * acc.first);
  return out;
}

namespace assoc_detail {

inline void normalize_l1(std::vector<double>& h) {
  double s = 0.0;
  for (double x : h) s += x;
  if (s > 0.0) {
    for (double& x : h) x /= s;
  }
}

inline void normalize_l2(std::vector<double>& e) {
  double s = 0.0;
  for (double x : e) s += x * x;
  s = std::sqrt(s);
  if (s > 0.0) {
    for (double& x : e) x /= s;
  }
}

inline std::vector<Vec3> observation_points(const Detection2D& det) {
  if (!det.points.empty()) return det.points;
  if (det.centroid3d) return {*det.centroid3d};
  return {};
}

inline void refresh_geometry(MapNode& node) {
  node.centroid = mean(node.points);
  node.bbox3d = bounding_box(node.points);
  node.diag = node.bbox3d.diagonal();
}

}  // namespace assoc_detail

// Fuses a matched detection into its node.
inline void update_node(MapNode& node, const Detection2D& det, FrameId frame, const NodeUpdateParams& params = {}) {
  auto merged = node.points;
  const auto obs = assoc_detail::observation_points(det);
  merged.insert(merged.end(), obs.begin(), obs.end());
  node.points = voxel_downsample(merged, params.voxel);
  assoc_detail::refresh_geometry(node);

  if (node.appearance.size() == det.appearance.size()) {
    for (std::size_t i = 0; i < node.appearance.size(); ++i) {
      node.appearance[i] = (1.0 - params.alpha) * node.appearance[i] + params.alpha * det.appearance[i];
    }
  } else {
    node.appearance = det.appearance;
  }
  assoc_detail::normalize_l1(node.appearance);

  if (det.embedding && !det.embedding->empty()) {
    if (node.embedding.size() != det.embedding->size()) {
      node.embedding = *det.embedding;
    } else {
      const double n = static_cast<double>(node.obs_count);
      for (std::size_t i = 0; i < node.embedding.size(); ++i) {
        node.embedding[i] = (node.embedding[i] * n + (*det.embedding)[i]) / (n + 1.0);
      }
    }
    assoc_detail::normalize_l2(node.embedding);
  }
  node.obs_count += 1;
  node.last_seen = frame;
}

// New node from an unmatched detection; empty when the detection has no 3D
// evidence (the caller keeps it pending).
inline std::optional<MapNode> spawn_node(const Detection2D& det, NodeId id, const NodeUpdateParams& params = {}) {
  if (!det.centroid3d) return std::nullopt;
  MapNode n;
  n.id = id;
  n.kind = det.kind;
  n.category = det.category;
  n.points = voxel_downsample(assoc_detail::observation_points(det), params.voxel);
  assoc_detail::refresh_geometry(n);
  n.appearance = det.appearance;
  assoc_detail::normalize_l1(n.appearance);
  if (det.embedding) {
    n.embedding = *det.embedding;
    assoc_detail::normalize_l2(n.embedding);
  }
  n.obs_count = 1;
  n.last_seen = det.frame_id;
  return n;
}

// Score used by the assoc-baseline ablation: 3D box overlap plus semantics.
inline double baseline_score(const Detection2D& det, const MapNode& node) {
  const auto obs = assoc_detail::observation_points(det);
  const double overlap = obs.empty() ? 0.0 : iou(bounding_box(obs), node.bbox3d);
  return 0.5 * overlap + 0.5 * semantic_similarity(det, node);
}

inline double baseline_overlap(const Detection2D& det, const MapNode& node) {
  const auto obs = assoc_detail::observation_points(det);
  return obs.empty() ? 0.0 : iou(bounding_box(obs), node.bbox3d);
}

}  // namespace hfsg
