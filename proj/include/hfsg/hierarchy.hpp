#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <optional>
#include <set>
#include <vector>

#include "hfsg/types.hpp"

namespace hfsg {

struct HierarchyParams {
  double pairing_floor = 0.5;
  int max_dual_exhaustive = 16;  // beyond 2^16 dual-role subsets fall back to greedy
};

struct RolePartition {
  std::vector<NodeId> carriers;  // C_o
  std::vector<NodeId> units;     // U_o
};

// Splits an object's fine-grained children by role feasibility. A child whose
// category is listed both ways lands in both sets; unknown categories in neither.
inline RolePartition partition_roles(const MapNode& object, const std::vector<const MapNode*>& children,
                                     const InteractabilityMap& imap) {
  RolePartition out;
  for (const MapNode* f : children) {
    if (imap.role_c(f->category, object.category)) out.carriers.push_back(f->id);
    if (imap.role_u(f->category, object.category)) out.units.push_back(f->id);
  }
  return out;
}

// Gaussian in centroid distance with width a quarter of the carrier diagonal.
inline double geometric_proximity(const MapNode& c, const MapNode& u) {
  const double d = distance(c.centroid, u.centroid);
  const double s = 0.25 * c.diag;
  if (s <= 0.0) return d == 0.0 ? 1.0 : 0.0;
  return std::exp(-d * d / (2.0 * s * s));
}

struct PairingScore {
  double c_prior = 0.0;
  double g_near = 0.0;
  double total = 0.0;
};

inline PairingScore pairing_score(const MapNode& c, const MapNode& u, const InteractabilityMap& imap) {
  PairingScore s;
  s.c_prior = imap.compatibility(c.category, u.category);
  s.g_near = geometric_proximity(c, u);
  s.total = s.c_prior + s.g_near;
  return s;
}

// Carrier/unit pairing instance. score is |carriers| x |units| row-major.
// An id present in both lists is dual-role.
struct PairingProblem {
  std::vector<NodeId> carriers;
  std::vector<NodeId> units;
  std::vector<double> score;
  double floor = 0.5;

  double at(std::size_t c, std::size_t u) const { return score[c * units.size() + u]; }
  bool feasible(std::size_t c, std::size_t u) const { return carriers[c] != units[u] && at(c, u) >= floor; }
};

struct Pairing {
  std::vector<int> carrier_of;  // per unit: carrier index or -1
  double total = 0.0;           // summed in unit order
  bool greedy = false;
};

namespace hierarchy_detail {

inline double total_of(const PairingProblem& p, const std::vector<int>& a) {
  double t = 0.0;
  for (std::size_t u = 0; u < a.size(); ++u) {
    if (a[u] >= 0) t += p.at(static_cast<std::size_t>(a[u]), u);
  }
  return t;
}

inline Pairing greedy(const PairingProblem& p) {
  struct Cand {
    double s;
    std::size_t u, c;
  };
  std::vector<Cand> cands;
  for (std::size_t c = 0; c < p.carriers.size(); ++c) {
    for (std::size_t u = 0; u < p.units.size(); ++u) {
      if (p.feasible(c, u)) cands.push_back({p.at(c, u), u, c});
    }
  }
  std::stable_sort(cands.begin(), cands.end(), [](const Cand& a, const Cand& b) {
    if (a.s != b.s) return a.s > b.s;
    if (a.u != b.u) return a.u < b.u;
    return a.c < b.c;
  });
  Pairing out;
  out.greedy = true;
  out.carrier_of.assign(p.units.size(), -1);
  std::set<NodeId> acting_carrier, acting_unit;
  for (const auto& k : cands) {
    if (out.carrier_of[k.u] >= 0) continue;
    const NodeId uid = p.units[k.u];
    const NodeId cid = p.carriers[k.c];
    if (acting_carrier.contains(uid) || acting_unit.contains(cid)) continue;
    out.carrier_of[k.u] = static_cast<int>(k.c);
    acting_carrier.insert(cid);
    acting_unit.insert(uid);
  }
  out.total = total_of(p, out.carrier_of);
  return out;
}

}  // namespace hierarchy_detail

// Maximizes the summed pairing score with each unit assigned to at most one
// carrier (a carrier may take several units). Dual-role nodes act as a carrier
// only when they receive a unit, and then are not paired as units.
//
// Given the set S of dual-role nodes acting as carriers, the problem separates
// per unit (best feasible carrier outside the other dual nodes), so it is
// solved exactly by enumerating S; assignments in which some member of S ends
// up with no unit are dominated by a smaller S and skipped.
inline Pairing solve_pairing(const PairingProblem& p, const HierarchyParams& params = {}) {
  std::vector<NodeId> dual;
  for (NodeId c : p.carriers) {
    if (std::find(p.units.begin(), p.units.end(), c) != p.units.end()) dual.push_back(c);
  }
  if (static_cast<int>(dual.size()) > params.max_dual_exhaustive) return hierarchy_detail::greedy(p);

  Pairing best;
  best.carrier_of.assign(p.units.size(), -1);
  best.total = -1.0;
  const std::uint64_t subsets = 1ULL << dual.size();
  for (std::uint64_t mask = 0; mask < subsets; ++mask) {
    auto in_s = [&](NodeId id) {
      for (std::size_t k = 0; k < dual.size(); ++k) {
        if (dual[k] == id) return ((mask >> k) & 1ULL) != 0;
      }
      return true;  // plain carriers are always available
    };
    std::vector<int> a(p.units.size(), -1);
    std::set<NodeId> received;
    for (std::size_t u = 0; u < p.units.size(); ++u) {
      const NodeId uid = p.units[u];
      const bool is_dual = std::find(dual.begin(), dual.end(), uid) != dual.end();
      if (is_dual && in_s(uid)) continue;
      int pick = -1;
      for (std::size_t c = 0; c < p.carriers.size(); ++c) {
        if (!p.feasible(c, u) || !in_s(p.carriers[c])) continue;
        if (pick < 0 || p.at(c, u) > p.at(static_cast<std::size_t>(pick), u)) pick = static_cast<int>(c);
      }
      a[u] = pick;
      if (pick >= 0) received.insert(p.carriers[static_cast<std::size_t>(pick)]);
    }
    bool ok = true;
    for (std::size_t k = 0; k < dual.size() && ok; ++k) {
      if (((mask >> k) & 1ULL) && !received.contains(dual[k])) ok = false;
    }
    if (!ok) continue;
    const double t = hierarchy_detail::total_of(p, a);
    if (t > best.total) {
      best.carrier_of = std::move(a);
      best.total = t;
    }
  }
  if (best.total < 0.0) best.total = 0.0;
  return best;
}

struct ShapeResult {
  Pairing pairing;
  std::vector<std::pair<NodeId, NodeId>> rewired;  // (carrier, unit) pairs now chained
  std::vector<double> rewired_scores;
};

// Pairs an object's carriers and units and rewrites o <- u into o <- c <- u
// inside `edges` (only edges owned by `object` are touched).
inline ShapeResult shape_hierarchy(const MapNode& object, const RolePartition& roles,
                                   const std::map<NodeId, const MapNode*>& nodes, const InteractabilityMap& imap,
                                   std::vector<Edge>& edges, const HierarchyParams& params = {}) {
  ShapeResult out;
  PairingProblem p;
  p.carriers = roles.carriers;
  p.units = roles.units;
  p.floor = params.pairing_floor;
  p.score.resize(p.carriers.size() * p.units.size(), 0.0);
  for (std::size_t c = 0; c < p.carriers.size(); ++c) {
    for (std::size_t u = 0; u < p.units.size(); ++u) {
      p.score[c * p.units.size() + u] = pairing_score(*nodes.at(p.carriers[c]), *nodes.at(p.units[u]), imap).total;
    }
  }
  out.pairing = p.carriers.empty() || p.units.empty() ? Pairing{std::vector<int>(p.units.size(), -1), 0.0, false}
                                                      : solve_pairing(p, params);
  for (std::size_t u = 0; u < p.units.size(); ++u) {
    const int c = out.pairing.carrier_of[u];
    if (c < 0) continue;
    const NodeId cid = p.carriers[static_cast<std::size_t>(c)];
    const NodeId uid = p.units[u];
    for (auto& e : edges) {
      if (e.parent == object.id && e.child == uid) {
        e.parent = cid;
        e.relation = Relation::UnitOf;
      }
    }
    out.rewired.emplace_back(cid, uid);
    out.rewired_scores.push_back(p.at(static_cast<std::size_t>(c), u));
  }
  // Direct children that now carry units are carriers of the object.
  for (auto& e : edges) {
    if (e.parent != object.id) continue;
    const bool has_units = std::any_of(out.rewired.begin(), out.rewired.end(),
                                       [&](const auto& cu) { return cu.first == e.child; });
    if (has_units) e.relation = Relation::CarrierOf;
  }
  return out;
}

}  // namespace hfsg
