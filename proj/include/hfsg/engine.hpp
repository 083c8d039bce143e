#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "hfsg/anchor2d.hpp"
#include "hfsg/associate.hpp"
#include "hfsg/config.hpp"
#include "hfsg/edgeopt.hpp"
#include "hfsg/hierarchy.hpp"
#include "hfsg/serialize.hpp"
#include "hfsg/validate.hpp"

namespace hfsg {

// Incremental fusion: feed packets in frame order, then finalize once.
class Engine {
 public:
  explicit Engine(EngineConfig config = {}) : cfg_(std::move(config)) { cfg_.validate(); }

  void ingest(const FramePacket& packet) {
    validate_packet(packet);
    if (last_frame_ && packet.frame_id <= *last_frame_) {
      throw ValidationError("frames out of order: frame " + std::to_string(packet.frame_id) + " after frame " +
                            std::to_string(*last_frame_));
    }
    if (finalized_) throw ValidationError("engine already finalized");
    last_frame_ = packet.frame_id;
    imap_.merge(packet.imap);

    const auto det_node = associate(packet);
    retry_pending(packet.frame_id);
    fuse_edges(packet, det_node);
    if (cfg_.mode == AblationMode::Hierarchy2dOff) vote_2d(packet, det_node);
  }

  SceneGraph finalize() {
    finalized_ = true;
    SceneGraph g;
    g.nodes = nodes_;
    std::map<NodeId, const MapNode*> by_id;
    for (const auto& n : nodes_) by_id[n.id] = &n;

    std::map<std::pair<NodeId, NodeId>, double> score;
    std::map<NodeId, std::vector<NodeId>> children;
    for (const auto& [fid, b] : beliefs_) {
      const auto d = decide(b);
      if (!d) continue;
      const MapNode& f = *by_id.at(fid);
      g.edges.push_back({d->object, fid, f.kind == NodeKind::FunctionalCarrier ? Relation::CarrierOf : Relation::Functional});
      score[{d->object, fid}] = d->score;
      children[d->object].push_back(fid);
    }

    for (const auto& [oid, kids] : children) {
      const MapNode& o = *by_id.at(oid);
      std::vector<const MapNode*> ks;
      for (NodeId k : kids) ks.push_back(by_id.at(k));
      const auto roles = partition_roles(o, ks, imap_);
      std::vector<std::pair<NodeId, NodeId>> pairs;
      std::vector<double> pair_scores;
      if (cfg_.mode == AblationMode::Hierarchy2dOff) {
        std::tie(pairs, pair_scores) = pair_by_votes(oid, roles, g.edges);
      } else {
        auto r = shape_hierarchy(o, roles, by_id, imap_, g.edges, cfg_.hierarchy);
        pairs = r.rewired;
        pair_scores = r.rewired_scores;
        if (r.pairing.greedy) log({{"type", "pairing-greedy"}, {"object", oid}});
      }
      for (std::size_t i = 0; i < pairs.size(); ++i) {
        const auto [c, u] = pairs[i];
        score.erase({oid, u});
        score[{c, u}] = pair_scores[i];
        log({{"type", "pairing"}, {"object", oid}, {"carrier", c}, {"unit", u}, {"score", pair_scores[i]}});
      }
    }

    std::sort(g.edges.begin(), g.edges.end());
    for (const auto& e : g.edges) g.provenance.push_back({e.parent, e.child, score.at({e.parent, e.child})});
    auto problems = graph_problems(g);
    if (!problems.empty()) throw InvariantViolation("output graph: " + problems.front());
    return g;
  }

  const std::vector<MapNode>& nodes() const { return nodes_; }
  const std::map<NodeId, EdgeBelief>& beliefs() const { return beliefs_; }
  const std::vector<json>& events() const { return events_; }
  const EngineConfig& config() const { return cfg_; }
  std::size_t pending() const { return pending_.size(); }

  // Current Top-1 parent of a fine node, by the active selection rule.
  std::optional<NodeId> current_parent(NodeId fine) const {
    auto it = beliefs_.find(fine);
    if (it == beliefs_.end()) return std::nullopt;
    auto d = decide(it->second);
    if (!d) return std::nullopt;
    return d->object;
  }

 private:
  struct Pending {
    Detection2D det;
    Pose pose;
    Intrinsics intrinsics;
    int age = 0;
  };

  std::optional<EdgeDecision> decide(const EdgeBelief& b) const {
    return cfg_.mode == AblationMode::NoGoCount ? select_by_count(b, cfg_.edge) : select_edge(b, cfg_.edge);
  }

  void log(json e) { events_.push_back(std::move(e)); }

  std::size_t index_of(NodeId id) const {
    auto it = std::lower_bound(nodes_.begin(), nodes_.end(), id, [](const MapNode& n, NodeId v) { return n.id < v; });
    return static_cast<std::size_t>(it - nodes_.begin());
  }

  // Matches detections to nodes, updates or spawns nodes. Returns the node id
  // each detection resolved to in this frame.
  std::vector<std::optional<NodeId>> associate(const FramePacket& p) {
    const auto& dets = p.detections;
    std::vector<std::optional<NodeId>> out(dets.size());
    FrameMatch m;
    if (cfg_.mode == AblationMode::AssocBaseline) {
      WeightMatrix w(dets.size(), nodes_.size());
      for (std::size_t i = 0; i < dets.size(); ++i) {
        if (!dets[i].centroid3d) continue;
        for (std::size_t j = 0; j < nodes_.size(); ++j) {
          if (cfg_.gate.same_kind && dets[i].kind != nodes_[j].kind) continue;
          if (baseline_overlap(dets[i], nodes_[j]) <= 0.0) continue;
          const double s = baseline_score(dets[i], nodes_[j]);
          if (s >= cfg_.gate.tau_ass) w.at(i, j) = s;
        }
      }
      m = match_frame(w);
    } else {
      m = match_frame(dets, nodes_, cfg_.weights, cfg_.gate, p.pose, p.intrinsics);
    }

    for (auto [i, j] : m.pairs) {
      update_node(nodes_[j], dets[i], p.frame_id, cfg_.update);
      out[i] = nodes_[j].id;
      log({{"type", "match"}, {"frame", p.frame_id}, {"det", i}, {"node", nodes_[j].id}});
    }
    for (std::size_t i : m.unmatched_dets) {
      if (auto n = spawn_node(dets[i], next_id_, cfg_.update)) {
        out[i] = n->id;
        log({{"type", "spawn"}, {"frame", p.frame_id}, {"det", i}, {"node", n->id}, {"category", n->category}});
        nodes_.push_back(std::move(*n));
        ++next_id_;
      } else if (auto j = best_without_depth(dets[i], p.pose, p.intrinsics, m)) {
        update_node(nodes_[*j], dets[i], p.frame_id, cfg_.update);
        out[i] = nodes_[*j].id;
        log({{"type", "match"}, {"frame", p.frame_id}, {"det", i}, {"node", nodes_[*j].id}, {"depth", false}});
      } else {
        pending_.push_back({dets[i], p.pose, p.intrinsics, 0});
        log({{"type", "pending"}, {"frame", p.frame_id}, {"det", i}});
      }
    }
    return out;
  }

  // Association without the geometric term, for detections lacking depth.
  std::optional<std::size_t> best_without_depth(const Detection2D& det, const Pose& pose, const Intrinsics& k,
                                                const FrameMatch& taken) {
    std::optional<std::size_t> best;
    double best_score = 0.0;
    for (std::size_t j = 0; j < nodes_.size(); ++j) {
      const bool used = std::any_of(taken.pairs.begin(), taken.pairs.end(), [&](const auto& pr) { return pr.second == j; });
      if (used || (cfg_.gate.same_kind && det.kind != nodes_[j].kind)) continue;
      const auto t = association_terms(det, nodes_[j], cfg_.weights, project_node(nodes_[j], pose, k));
      if (t.iou <= 0.0 || t.total < cfg_.gate.tau_ass) continue;
      if (!best || t.total > best_score) {
        best = j;
        best_score = t.total;
      }
    }
    return best;
  }

  void retry_pending(FrameId frame) {
    std::vector<Pending> keep;
    for (auto& pd : pending_) {
      if (pd.det.frame_id == frame) {
        keep.push_back(std::move(pd));
        continue;
      }
      if (auto j = best_without_depth(pd.det, pd.pose, pd.intrinsics, FrameMatch{})) {
        update_node(nodes_[*j], pd.det, nodes_[*j].last_seen, cfg_.update);
        log({{"type", "pending-resolved"}, {"frame", frame}, {"from_frame", pd.det.frame_id}, {"node", nodes_[*j].id}});
        continue;
      }
      if (++pd.age >= cfg_.pending_frames) {
        log({{"type", "pending-dropped"}, {"frame", frame}, {"from_frame", pd.det.frame_id}});
        continue;
      }
      keep.push_back(std::move(pd));
    }
    pending_ = std::move(keep);
  }

  // Scored candidates the engine's own pre-filter also admits, resolved to
  // map nodes, become log-odds evidence.
  void fuse_edges(const FramePacket& p, const std::vector<std::optional<NodeId>>& det_node) {
    std::set<std::pair<std::size_t, std::size_t>> admitted;
    for (const auto& c : generate_candidates(p, cfg_.anchor)) admitted.insert({c.object_det, c.fine_det});
    std::set<NodeId> touched;
    for (const auto& c : p.edge_candidates) {
      if (!c.s_2d || !admitted.contains({c.object_det, c.fine_det})) continue;
      const auto o = det_node[c.object_det];
      const auto f = det_node[c.fine_det];
      if (!o || !f) continue;
      const MapNode& on = nodes_[index_of(*o)];
      const MapNode& fn = nodes_[index_of(*f)];
      if (on.kind != NodeKind::Object || !is_fine(fn.kind)) continue;
      if (static_cast<int>(on.points.size()) < cfg_.min_object_points) continue;
      auto& b = beliefs_[*f];
      b.fine_id = *f;
      accumulate(b, *o, *c.s_2d, p.frame_id, cfg_.edge);
      touched.insert(*f);
      log({{"type", "evidence"}, {"frame", p.frame_id}, {"fine", *f}, {"object", *o}, {"s_2d", *c.s_2d},
           {"logodds", b.logodds[*b.index_of(*o)]}});
    }
    for (NodeId f : touched) {
      auto& b = beliefs_[f];
      if (cfg_.mode != AblationMode::NoGoCount) optimize_step(b, cfg_.edge);
      const auto d = decide(b);
      const std::optional<NodeId> now = d ? std::optional<NodeId>(d->object) : std::nullopt;
      auto& last = decided_[f];
      if (now != last) {
        last = now;
        log({{"type", "decision"}, {"frame", p.frame_id}, {"fine", f},
             {"object", now ? json(*now) : json(nullptr)},
             {"score", d ? io_detail::number_or_null(d->score) : json(nullptr)}});
      }
    }
  }

  // Per-frame 2D carrier choice for each unit detection: the fine detection
  // whose mask best contains it (prior plus containment; ties to the smaller
  // mask), counted as a vote.
  void vote_2d(const FramePacket& p, const std::vector<std::optional<NodeId>>& det_node) {
    const auto& dets = p.detections;
    const auto radius = cfg_.anchor.radius(p.intrinsics);
    for (std::size_t u = 0; u < dets.size(); ++u) {
      if (dets[u].kind != NodeKind::InteractiveUnit || !det_node[u] || dets[u].mask.area() == 0) continue;
      std::optional<std::size_t> best;
      double best_score = 0.0;
      for (std::size_t c = 0; c < dets.size(); ++c) {
        if (c == u || dets[c].kind != NodeKind::FunctionalCarrier || !det_node[c]) continue;
        const double g = mask_containment(dets[u].mask, dets[c].mask, radius);
        if (!(g > cfg_.anchor.tau_geo)) continue;
        const double s = imap_.compatibility(dets[c].category, dets[u].category) + g;
        if (!best || s > best_score || (s == best_score && dets[c].mask.area() < dets[*best].mask.area())) {
          best = c;
          best_score = s;
        }
      }
      if (best) votes_[*det_node[u]][*det_node[*best]] += 1;
    }
  }

  // Greedy pairing on accumulated 2D votes, restricted to the object's
  // feasible roles; each unit takes its most-voted carrier.
  std::pair<std::vector<std::pair<NodeId, NodeId>>, std::vector<double>> pair_by_votes(NodeId object,
                                                                                     const RolePartition& roles,
                                                                                     std::vector<Edge>& edges) {
    std::vector<std::pair<NodeId, NodeId>> pairs;
    std::vector<double> scores;
    std::set<NodeId> as_carrier, as_unit;
    for (NodeId u : roles.units) {
      if (as_carrier.contains(u)) continue;
      auto vit = votes_.find(u);
      if (vit == votes_.end()) continue;
      std::optional<NodeId> best;
      int best_votes = 0;
      for (NodeId c : roles.carriers) {
        if (c == u || as_unit.contains(c)) continue;
        auto it = vit->second.find(c);
        if (it == vit->second.end()) continue;
        if (!best || it->second > best_votes) {
          best = c;
          best_votes = it->second;
        }
      }
      if (!best) continue;
      as_carrier.insert(*best);
      as_unit.insert(u);
      pairs.emplace_back(*best, u);
      scores.push_back(best_votes);
    }
    for (auto& e : edges) {
      if (e.parent != object) continue;
      for (auto [c, u] : pairs) {
        if (e.child == u) {
          e.parent = c;
          e.relation = Relation::UnitOf;
        }
      }
    }
    for (auto& e : edges) {
      if (e.parent == object && as_carrier.contains(e.child)) e.relation = Relation::CarrierOf;
    }
    return {pairs, scores};
  }

  EngineConfig cfg_;
  InteractabilityMap imap_;
  std::vector<MapNode> nodes_;  // ascending id
  NodeId next_id_ = 0;
  std::map<NodeId, EdgeBelief> beliefs_;
  std::map<NodeId, std::optional<NodeId>> decided_;
  std::map<NodeId, std::map<NodeId, int>> votes_;  // unit -> carrier -> frames
  std::vector<Pending> pending_;
  std::vector<json> events_;
  std::optional<FrameId> last_frame_;
  bool finalized_ = false;
};

struct PipelineResult {
  SceneGraph graph;
  std::vector<json> events;
  std::size_t frames_processed = 0;
};

// Runs every stride-th packet (by position) through the engine. Frame order
// is checked over the whole stream, skipped packets included.
inline PipelineResult run_pipeline(const std::vector<FramePacket>& packets, const EngineConfig& config) {
  for (std::size_t i = 1; i < packets.size(); ++i) {
    if (packets[i].frame_id <= packets[i - 1].frame_id) {
      throw ValidationError("frames out of order: frame " + std::to_string(packets[i].frame_id) + " after frame " +
                            std::to_string(packets[i - 1].frame_id));
    }
  }
  Engine engine(config);
  PipelineResult r;
  for (std::size_t i = 0; i < packets.size(); i += static_cast<std::size_t>(config.stride)) {
    engine.ingest(packets[i]);
    ++r.frames_processed;
  }
  r.graph = engine.finalize();
  r.events = engine.events();
  return r;
}

inline std::string serialize_events(const std::vector<json>& events) {
  std::string out;
  for (const auto& e : events) {
    out += e.dump();
    out += '\n';
  }
  return out;
}

}  // namespace hfsg
