#pragma once

#include <algorithm>
#include <cctype>
#include <functional>
#include <iomanip>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "hfsg/assignment.hpp"
#include "hfsg/serialize.hpp"
#include "hfsg/synth.hpp"

namespace hfsg {

using LabelScorer = std::function<double(std::string_view, std::string_view)>;

namespace eval_detail {

inline std::string normalize_label(std::string_view s) {
  std::string out;
  bool space = false;
  for (char ch : s) {
    char c = static_cast<char>(std::tolower(static_cast<unsigned char>(ch)));
    if (c == '_' || c == '-' || std::isspace(static_cast<unsigned char>(c))) {
      space = !out.empty();
      continue;
    }
    if (space) out += ' ';
    space = false;
    out += c;
  }
  return out;
}

inline std::set<std::string> tokens(const std::string& s) {
  std::set<std::string> out;
  std::istringstream in(s);
  for (std::string t; in >> t;) out.insert(t);
  return out;
}

// Labels within a group are treated as synonyms.
inline const std::vector<std::set<std::string>>& synonym_groups() {
  static const std::vector<std::set<std::string>> groups = {
      {"handle", "drawer handle", "door handle", "pull", "grip"},
      {"knob", "dial", "control knob", "lid knob"},
      {"switch", "button", "power switch"},
      {"control panel", "panel"},
      {"cap", "bottle cap"},
      {"door", "oven door", "cabinet door"},
      {"lid", "pot lid", "kettle lid"},
  };
  return groups;
}

}  // namespace eval_detail

constexpr double kSynonymScore = 0.9;

// max(exact match, token Jaccard, synonym table). Symmetric, 1 on identical labels.
inline double label_similarity(std::string_view a, std::string_view b) {
  const auto na = eval_detail::normalize_label(a);
  const auto nb = eval_detail::normalize_label(b);
  if (na == nb) return 1.0;
  double best = 0.0;
  const auto ta = eval_detail::tokens(na);
  const auto tb = eval_detail::tokens(nb);
  std::size_t common = 0;
  for (const auto& t : ta) common += tb.count(t);
  const std::size_t uni = ta.size() + tb.size() - common;
  if (uni > 0) best = static_cast<double>(common) / static_cast<double>(uni);
  for (const auto& g : eval_detail::synonym_groups()) {
    if (g.contains(na) && g.contains(nb)) best = std::max(best, kSynonymScore);
  }
  return best;
}

struct EvalParams {
  double node_threshold = 0.75;
  double triplet_threshold = 0.70;
  double centroid_gate = 0.25;  // metres; alternative to 3D box overlap
  double spatial_weight = 0.5;  // cost blend inside the matching
  int recall_k = 0;             // >0 also accepts pairs whose GT label ranks within the top k
  LabelScorer scorer = label_similarity;
};

struct EvalNode {
  NodeId id = 0;
  std::string label;
  Box3 box;
};

struct NodeMatch {
  NodeId gt = 0;
  NodeId pred = 0;
  double similarity = 0.0;
  double iou = 0.0;

  bool operator==(const NodeMatch&) const = default;
};

// Rank (1-based) of `gt_label` among the distinct GT labels ordered by
// similarity to `pred_label`; ties share the better rank.
inline int label_rank(const std::string& pred_label, const std::string& gt_label, const std::set<std::string>& gt_labels,
                      const LabelScorer& scorer) {
  const double s = scorer(pred_label, gt_label);
  int rank = 1;
  for (const auto& l : gt_labels) {
    if (scorer(pred_label, l) > s) ++rank;
  }
  return rank;
}

// One-to-one GT/prediction matching. A pair is admissible when it passes the
// spatial gate and is a hit (similarity above `threshold` or the rank
// criterion); among admissible pairs the matching maximizes the number of
// hits first, then the blended overlap/similarity score.
inline std::vector<NodeMatch> match_nodes(const std::vector<EvalNode>& gt, const std::vector<EvalNode>& pred,
                                          double threshold, const EvalParams& params = {}) {
  std::set<std::string> gt_labels;
  for (const auto& g : gt) gt_labels.insert(g.label);
  WeightMatrix m(gt.size(), pred.size());
  std::vector<double> sims(gt.size() * pred.size(), 0.0), ious(gt.size() * pred.size(), 0.0);
  const double k = static_cast<double>(std::min(gt.size(), pred.size())) + 1.0;
  for (std::size_t i = 0; i < gt.size(); ++i) {
    for (std::size_t j = 0; j < pred.size(); ++j) {
      const double o = iou(gt[i].box, pred[j].box);
      const bool near = o > 0.0 || distance(gt[i].box.center(), pred[j].box.center()) < params.centroid_gate;
      if (!near) continue;
      const double s = params.scorer(pred[j].label, gt[i].label);
      bool hit = s > threshold;
      if (!hit && params.recall_k > 0) hit = label_rank(pred[j].label, gt[i].label, gt_labels, params.scorer) <= params.recall_k;
      if (!hit) continue;
      sims[i * pred.size() + j] = s;
      ious[i * pred.size() + j] = o;
      m.at(i, j) = k + params.spatial_weight * o + (1.0 - params.spatial_weight) * s;
    }
  }
  std::vector<NodeMatch> out;
  for (auto [i, j] : max_weight_matching(m).pairs) {
    out.push_back({gt[i].id, pred[j].id, sims[i * pred.size() + j], ious[i * pred.size() + j]});
  }
  return out;
}

struct RecallStat {
  std::size_t hits = 0;
  std::size_t total = 0;

  bool operator==(const RecallStat&) const = default;

  // Empty when there is nothing to recall.
  std::optional<double> recall() const {
    if (total == 0) return std::nullopt;
    return static_cast<double>(hits) / static_cast<double>(total);
  }
  void add(bool hit) {
    ++total;
    if (hit) ++hits;
  }
};

struct TripletHit {
  NodeId object = 0;
  std::optional<NodeId> carrier;
  NodeId unit = 0;
  bool hit = false;

  bool operator==(const TripletHit&) const = default;
};

struct EvalReport {
  RecallStat objects, carriers, units, tabletop_nodes, overall_nodes;
  RecallStat triplets_overall, triplets_hierarchical, triplets_tabletop;
  std::vector<NodeMatch> node_matches;
  std::vector<NodeMatch> triplet_node_matches;
  std::vector<TripletHit> triplets;

  bool operator==(const EvalReport&) const = default;
};

inline std::vector<EvalNode> eval_nodes(const GroundTruthScene& gt) {
  std::vector<EvalNode> out;
  for (const auto& n : gt.nodes) out.push_back({n.id, n.category, n.box});
  return out;
}

inline std::vector<EvalNode> eval_nodes(const SceneGraph& g) {
  std::vector<EvalNode> out;
  for (const auto& n : g.nodes) out.push_back({n.id, n.category, n.bbox3d});
  return out;
}

// Triplet and pair hits given a node matching computed at the triplet threshold.
inline void triplet_recall(const GroundTruthScene& gt, const SceneGraph& pred, const std::vector<NodeMatch>& matches,
                           EvalReport& report) {
  std::map<NodeId, NodeId> to_pred;
  for (const auto& m : matches) to_pred[m.gt] = m.pred;
  auto mapped = [&](NodeId id) -> std::optional<NodeId> {
    auto it = to_pred.find(id);
    if (it == to_pred.end()) return std::nullopt;
    return it->second;
  };
  auto tagged = [](const std::vector<std::string>& tags, const char* t) {
    return std::find(tags.begin(), tags.end(), t) != tags.end();
  };
  for (const auto& t : gt.triplets) {
    const auto o = mapped(t.object), c = mapped(t.carrier), u = mapped(t.unit);
    const bool hit = o && c && u && pred.has_edge(*o, *c) && pred.has_edge(*c, *u);
    report.triplets.push_back({t.object, t.carrier, t.unit, hit});
    report.triplets_overall.add(hit);
    if (tagged(t.tags, "hierarchical")) report.triplets_hierarchical.add(hit);
    if (tagged(t.tags, "tabletop")) report.triplets_tabletop.add(hit);
  }
  for (const auto& p : gt.pairs) {
    const auto o = mapped(p.object), u = mapped(p.unit);
    const bool hit = o && u && pred.has_edge(*o, *u);
    report.triplets.push_back({p.object, std::nullopt, p.unit, hit});
    report.triplets_overall.add(hit);
    if (tagged(p.tags, "hierarchical")) report.triplets_hierarchical.add(hit);
    if (tagged(p.tags, "tabletop")) report.triplets_tabletop.add(hit);
  }
}

inline EvalReport evaluate(const GroundTruthScene& gt, const SceneGraph& pred, const EvalParams& params = {}) {
  EvalReport r;
  const auto g = eval_nodes(gt);
  const auto p = eval_nodes(pred);
  r.node_matches = match_nodes(g, p, params.node_threshold, params);
  std::set<NodeId> hit;
  for (const auto& m : r.node_matches) hit.insert(m.gt);
  for (const auto& n : gt.nodes) {
    const bool h = hit.contains(n.id);
    switch (n.kind) {
      case NodeKind::Object: r.objects.add(h); break;
      case NodeKind::FunctionalCarrier: r.carriers.add(h); break;
      case NodeKind::InteractiveUnit: r.units.add(h); break;
    }
    if (n.tagged("tabletop")) r.tabletop_nodes.add(h);
    r.overall_nodes.add(h);
  }
  r.triplet_node_matches = match_nodes(g, p, params.triplet_threshold, params);
  triplet_recall(gt, pred, r.triplet_node_matches, r);
  return r;
}

// ---- report files ---------------------------------------------------------------

inline json to_json(const RecallStat& s) {
  const auto r = s.recall();
  return json{{"hits", s.hits}, {"total", s.total}, {"recall", r ? json(*r) : json(nullptr)}};
}

inline json to_json(const EvalReport& r) {
  auto matches = [](const std::vector<NodeMatch>& ms) {
    json a = json::array();
    for (const auto& m : ms) a.push_back({{"gt", m.gt}, {"pred", m.pred}, {"similarity", m.similarity}, {"iou", m.iou}});
    return a;
  };
  json trip = json::array();
  for (const auto& t : r.triplets) {
    trip.push_back({{"object", t.object},
                    {"carrier", t.carrier ? json(*t.carrier) : json(nullptr)},
                    {"unit", t.unit},
                    {"hit", t.hit}});
  }
  return json{{"nodes",
               {{"objects", to_json(r.objects)},
                {"carriers", to_json(r.carriers)},
                {"units", to_json(r.units)},
                {"tabletop", to_json(r.tabletop_nodes)},
                {"overall", to_json(r.overall_nodes)}}},
              {"triplets",
               {{"overall", to_json(r.triplets_overall)},
                {"hierarchical", to_json(r.triplets_hierarchical)},
                {"tabletop", to_json(r.triplets_tabletop)}}},
              {"matches", {{"nodes", matches(r.node_matches)}, {"triplet_nodes", matches(r.triplet_node_matches)}}},
              {"triplet_hits", trip}};
}

inline std::string serialize_report(const EvalReport& r) { return to_json(r).dump(2) + "\n"; }

// One header row and one value row; recalls in percent, "-" when undefined.
inline std::string report_csv(const EvalReport& r) {
  std::ostringstream out;
  out << "objects,carriers,interactive_elements,tabletop_nodes,overall_nodes,"
         "triplets_overall,triplets_hierarchical,triplets_tabletop\n";
  const RecallStat* cols[] = {&r.objects,          &r.carriers,          &r.units,
                              &r.tabletop_nodes,   &r.overall_nodes,     &r.triplets_overall,
                              &r.triplets_hierarchical, &r.triplets_tabletop};
  bool first = true;
  for (const auto* c : cols) {
    if (!first) out << ',';
    first = false;
    if (auto v = c->recall()) {
      out << std::fixed << std::setprecision(1) << 100.0 * *v;
    } else {
      out << '-';
    }
  }
  out << '\n';
  return out.str();
}

// Builds the graph the engine should produce for a scene: one node per GT
// node with its box as geometry, and the GT edges with their relations.
inline SceneGraph graph_from_gt(const GroundTruthScene& gt) {
  SceneGraph g;
  for (const auto& n : gt.nodes) {
    MapNode m;
    m.id = n.id;
    m.kind = n.kind;
    m.category = n.category;
    m.bbox3d = n.box;
    m.centroid = n.box.center();
    m.diag = n.box.diagonal();
    m.appearance = n.appearance;
    g.nodes.push_back(std::move(m));
  }
  for (const auto& t : gt.triplets) {
    g.edges.push_back({t.object, t.carrier, Relation::CarrierOf});
    g.edges.push_back({t.carrier, t.unit, Relation::UnitOf});
  }
  for (const auto& p : gt.pairs) g.edges.push_back({p.object, p.unit, Relation::Functional});
  std::sort(g.edges.begin(), g.edges.end());
  g.edges.erase(std::unique(g.edges.begin(), g.edges.end()), g.edges.end());
  return g;
}

// Structural equality with the GT graph: a one-to-one correspondence of
// nodes by category and spatial overlap (nearest box center) under which the
// edge sets, relations included, coincide.
inline bool structurally_equal(const GroundTruthScene& gt, const SceneGraph& pred, std::string* why = nullptr) {
  auto fail = [&](std::string m) {
    if (why) *why = std::move(m);
    return false;
  };
  if (gt.nodes.size() != pred.nodes.size()) {
    return fail("node count " + std::to_string(pred.nodes.size()) + " != " + std::to_string(gt.nodes.size()));
  }
  std::map<NodeId, NodeId> to_gt;
  std::set<NodeId> used;
  for (const auto& p : pred.nodes) {
    const GtNode* best = nullptr;
    double bd = 0.0;
    for (const auto& g : gt.nodes) {
      if (g.category != p.category || g.kind != p.kind || used.contains(g.id)) continue;
      if (iou(g.box, p.bbox3d) <= 0.0) continue;
      const double d = distance(g.box.center(), p.bbox3d.center());
      if (!best || d < bd) {
        best = &g;
        bd = d;
      }
    }
    if (!best) return fail("no GT counterpart for node " + std::to_string(p.id) + " (" + p.category + ")");
    used.insert(best->id);
    to_gt[p.id] = best->id;
  }
  std::vector<Edge> mapped;
  for (const auto& e : pred.edges) mapped.push_back({to_gt.at(e.parent), to_gt.at(e.child), e.relation});
  std::sort(mapped.begin(), mapped.end());
  const auto expected = graph_from_gt(gt).edges;
  if (mapped != expected) {
    std::ostringstream m;
    m << "edge sets differ:";
    for (const auto& e : mapped) {
      if (!std::binary_search(expected.begin(), expected.end(), e)) {
        m << " extra " << e.parent << "<-" << e.child << " (" << to_string(e.relation) << ")";
      }
    }
    for (const auto& e : expected) {
      if (!std::binary_search(mapped.begin(), mapped.end(), e)) {
        m << " missing " << e.parent << "<-" << e.child << " (" << to_string(e.relation) << ")";
      }
    }
    return fail(m.str());
  }
  return true;
}

}  // namespace hfsg
