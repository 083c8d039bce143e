#pragma once

#include <cmath>
#include <istream>
#include <limits>
#include <string>
#include <vector>

#include <json.hpp>

#include "hfsg/types.hpp"
#include "hfsg/validate.hpp"

namespace hfsg {

using json = nlohmann::json;

namespace io_detail {

// Reads typed fields out of a json object, reporting failures with a
// dotted path so the caller can tell which record and field broke.
class Reader {
 public:
  Reader(const json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) fail("", "expected an object");
  }

  [[noreturn]] void fail(std::string_view field, std::string_view why) const {
    std::string where = path_;
    if (!field.empty()) where += (where.empty() ? "" : ".") + std::string(field);
    throw ParseError(where + ": " + std::string(why));
  }

  bool has(const char* key) const { return j_.contains(key) && !j_.at(key).is_null(); }

  const json& raw(const char* key) const {
    if (!j_.contains(key)) fail(key, "missing field");
    return j_.at(key);
  }

  Reader child(const char* key) const { return Reader(raw(key), sub(key)); }
  std::string sub(std::string_view key) const { return path_.empty() ? std::string(key) : path_ + "." + std::string(key); }

  double number(const char* key) const {
    const auto& v = raw(key);
    if (v.is_null()) return std::numeric_limits<double>::quiet_NaN();
    if (!v.is_number()) fail(key, "expected a number");
    return v.get<double>();
  }

  std::int64_t integer(const char* key) const {
    const auto& v = raw(key);
    if (!v.is_number_integer()) fail(key, "expected an integer");
    return v.get<std::int64_t>();
  }

  std::string string(const char* key) const {
    const auto& v = raw(key);
    if (!v.is_string()) fail(key, "expected a string");
    return v.get<std::string>();
  }

  std::vector<double> numbers(const char* key) const {
    const auto& v = raw(key);
    if (!v.is_array()) fail(key, "expected an array");
    std::vector<double> out;
    out.reserve(v.size());
    for (const auto& x : v) {
      if (!x.is_number()) fail(key, "expected numeric entries");
      out.push_back(x.get<double>());
    }
    return out;
  }

  const json& array(const char* key) const {
    const auto& v = raw(key);
    if (!v.is_array()) fail(key, "expected an array");
    return v;
  }

  Vec3 vec3(const char* key) const {
    auto v = numbers(key);
    if (v.size() != 3) fail(key, "expected 3 numbers");
    return {v[0], v[1], v[2]};
  }

  std::vector<std::string> strings(const char* key) const {
    std::vector<std::string> out;
    for (const auto& x : array(key)) {
      if (!x.is_string()) fail(key, "expected string entries");
      out.push_back(x.get<std::string>());
    }
    return out;
  }

  const std::string& path() const { return path_; }

 private:
  const json& j_;
  std::string path_;
};

inline std::string idx(std::string_view base, std::size_t i) {
  return std::string(base) + "[" + std::to_string(i) + "]";
}

inline json number_or_null(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

inline json to_json(const Vec3& v) { return json::array({v.x, v.y, v.z}); }

inline Vec3 vec3_from(const json& j, const std::string& path) {
  if (!j.is_array() || j.size() != 3) throw ParseError(path + ": expected 3 numbers");
  for (const auto& x : j) {
    if (!x.is_number()) throw ParseError(path + ": expected 3 numbers");
  }
  return {j[0].get<double>(), j[1].get<double>(), j[2].get<double>()};
}

inline json points_to_json(const std::vector<Vec3>& pts) {
  json a = json::array();
  for (const auto& p : pts) a.push_back(to_json(p));
  return a;
}

inline std::vector<Vec3> points_from(const json& j, const std::string& path) {
  if (!j.is_array()) throw ParseError(path + ": expected an array");
  std::vector<Vec3> out;
  out.reserve(j.size());
  for (std::size_t i = 0; i < j.size(); ++i) out.push_back(vec3_from(j[i], idx(path, i)));
  return out;
}

inline NodeKind kind_from(const Reader& r, const char* key) {
  auto k = parse_node_kind(r.string(key));
  if (!k) r.fail(key, "unknown node kind");
  return *k;
}

}  // namespace io_detail

// ---- masks, detections, maps ----------------------------------------------

inline json to_json(const Mask& m) {
  return json{{"width", m.width()}, {"height", m.height()}, {"counts", m.counts()}};
}

inline Mask mask_from_json(const json& j, const std::string& path) {
  io_detail::Reader r(j, path);
  std::vector<std::uint32_t> counts;
  for (const auto& c : r.array("counts")) {
    if (!c.is_number_unsigned() && !(c.is_number_integer() && c.get<std::int64_t>() >= 0)) {
      r.fail("counts", "expected non-negative integers");
    }
    counts.push_back(c.get<std::uint32_t>());
  }
  Mask m(static_cast<int>(r.integer("width")), static_cast<int>(r.integer("height")), std::move(counts));
  if (!m.consistent()) r.fail("counts", "run lengths do not cover the grid");
  return m;
}

inline json to_json(const Detection2D& d) {
  json j{{"frame_id", d.frame_id},
         {"bbox", {d.bbox.x_min, d.bbox.y_min, d.bbox.x_max, d.bbox.y_max}},
         {"category", d.category},
         {"confidence", d.confidence},
         {"kind", std::string(to_string(d.kind))},
         {"mask", to_json(d.mask)},
         {"appearance", d.appearance}};
  if (d.embedding) j["embedding"] = *d.embedding;
  if (d.centroid3d) j["centroid3d"] = io_detail::to_json(*d.centroid3d);
  if (!d.points.empty()) j["points"] = io_detail::points_to_json(d.points);
  return j;
}

inline Detection2D detection_from_json(const json& j, const std::string& path) {
  io_detail::Reader r(j, path);
  Detection2D d;
  d.frame_id = r.integer("frame_id");
  auto b = r.numbers("bbox");
  if (b.size() != 4) r.fail("bbox", "expected 4 numbers");
  d.bbox = {b[0], b[1], b[2], b[3]};
  d.category = r.string("category");
  d.confidence = r.number("confidence");
  d.kind = io_detail::kind_from(r, "kind");
  d.mask = mask_from_json(r.raw("mask"), r.sub("mask"));
  d.appearance = r.numbers("appearance");
  if (r.has("embedding")) d.embedding = r.numbers("embedding");
  if (r.has("centroid3d")) d.centroid3d = r.vec3("centroid3d");
  if (r.has("points")) d.points = io_detail::points_from(r.raw("points"), r.sub("points"));
  return d;
}

inline json to_json(const InteractabilityMap& m) {
  json carriers = json::object();
  for (const auto& [o, cs] : m.carriers_of) carriers[o] = cs;
  json units = json::object();
  for (const auto& [o, us] : m.units_of) units[o] = us;
  json prior = json::array();
  for (const auto& [k, v] : m.prior) prior.push_back({{"carrier", k.first}, {"unit", k.second}, {"score", v}});
  return json{{"objects", m.objects}, {"carriers_of", carriers}, {"units_of", units}, {"prior", prior}};
}

inline InteractabilityMap imap_from_json(const json& j, const std::string& path) {
  io_detail::Reader r(j, path);
  InteractabilityMap m;
  for (auto& s : r.strings("objects")) m.objects.insert(s);
  auto read_table = [&](const char* key, auto& table) {
    const auto& t = r.raw(key);
    if (!t.is_object()) r.fail(key, "expected an object");
    for (auto it = t.begin(); it != t.end(); ++it) {
      if (!it.value().is_array()) r.fail(key, "expected string arrays");
      auto& set = table[it.key()];  // an empty list still names the object
      for (const auto& s : it.value()) {
        if (!s.is_string()) r.fail(key, "expected string arrays");
        set.insert(s.get<std::string>());
      }
    }
  };
  read_table("carriers_of", m.carriers_of);
  read_table("units_of", m.units_of);
  const auto& pr = r.array("prior");
  for (std::size_t i = 0; i < pr.size(); ++i) {
    io_detail::Reader e(pr[i], io_detail::idx(r.sub("prior"), i));
    const double s = e.number("score");
    if (!(s >= 0.0 && s <= 1.0)) e.fail("score", "outside [0,1]");
    m.prior[{e.string("carrier"), e.string("unit")}] = s;
  }
  return m;
}

inline json to_json(const EdgeCandidate2D& c) {
  json j{{"frame_id", c.frame_id}, {"object_det", c.object_det}, {"fine_det", c.fine_det},
         {"s_det", c.s_det},       {"g_camc", c.g_camc}};
  if (c.s_2d) j["s_2d"] = *c.s_2d;
  return j;
}

inline EdgeCandidate2D candidate_from_json(const json& j, const std::string& path) {
  io_detail::Reader r(j, path);
  EdgeCandidate2D c;
  c.frame_id = r.integer("frame_id");
  const auto o = r.integer("object_det");
  const auto f = r.integer("fine_det");
  if (o < 0) r.fail("object_det", "negative index");
  if (f < 0) r.fail("fine_det", "negative index");
  c.object_det = static_cast<std::size_t>(o);
  c.fine_det = static_cast<std::size_t>(f);
  c.s_det = r.number("s_det");
  c.g_camc = r.number("g_camc");
  if (r.has("s_2d")) c.s_2d = r.number("s_2d");
  return c;
}

// ---- packets ---------------------------------------------------------------

inline json to_json(const FramePacket& p) {
  json dets = json::array();
  for (const auto& d : p.detections) dets.push_back(to_json(d));
  json cands = json::array();
  for (const auto& c : p.edge_candidates) cands.push_back(to_json(c));
  const auto& k = p.intrinsics;
  return json{{"frame_id", p.frame_id},
              {"timestamp", p.timestamp},
              {"pose", p.pose.m},
              {"intrinsics", {{"fx", k.fx}, {"fy", k.fy}, {"cx", k.cx}, {"cy", k.cy}, {"width", k.width}, {"height", k.height}}},
              {"detections", dets},
              {"edge_candidates", cands},
              {"imap", to_json(p.imap)}};
}

// Parses one packet; `record` labels errors (e.g. "line 12"). Validates the
// result, so dangling detection references surface here as ParseError.
inline FramePacket packet_from_json(const json& j, const std::string& record) {
  io_detail::Reader r(j, record);
  FramePacket p;
  p.frame_id = r.integer("frame_id");
  p.timestamp = r.number("timestamp");
  auto m = r.numbers("pose");
  if (m.size() != 16) r.fail("pose", "expected 16 numbers");
  std::copy(m.begin(), m.end(), p.pose.m.begin());
  auto k = r.child("intrinsics");
  p.intrinsics = {k.number("fx"), k.number("fy"), k.number("cx"), k.number("cy"),
                  static_cast<int>(k.integer("width")), static_cast<int>(k.integer("height"))};
  const auto& dets = r.array("detections");
  for (std::size_t i = 0; i < dets.size(); ++i) {
    p.detections.push_back(detection_from_json(dets[i], io_detail::idx(r.sub("detections"), i)));
  }
  const auto& cands = r.array("edge_candidates");
  for (std::size_t i = 0; i < cands.size(); ++i) {
    p.edge_candidates.push_back(candidate_from_json(cands[i], io_detail::idx(r.sub("edge_candidates"), i)));
  }
  p.imap = imap_from_json(r.raw("imap"), r.sub("imap"));
  try {
    validate_packet(p);
  } catch (const ValidationError& e) {
    throw ParseError(record + ": " + e.what());
  }
  return p;
}

inline std::string serialize_packet(const FramePacket& p) { return to_json(p).dump(); }

inline FramePacket deserialize_packet(std::string_view text, const std::string& record = "packet") {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ParseError(record + ": " + e.what());
  }
  return packet_from_json(j, record);
}

inline std::string serialize_packets(const std::vector<FramePacket>& ps) {
  std::string out;
  for (const auto& p : ps) {
    out += serialize_packet(p);
    out += '\n';
  }
  return out;
}

// JSONL reader; blank lines are skipped, errors name the 1-based line.
inline std::vector<FramePacket> read_packets(std::istream& in) {
  std::vector<FramePacket> out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    out.push_back(deserialize_packet(line, "line " + std::to_string(lineno)));
  }
  return out;
}

// ---- scene graphs ------------------------------------------------------------

inline json to_json(const MapNode& n) {
  json j{{"id", n.id},
         {"kind", std::string(to_string(n.kind))},
         {"category", n.category},
         {"centroid", io_detail::to_json(n.centroid)},
         {"bbox3d", {{"min", io_detail::to_json(n.bbox3d.min)}, {"max", io_detail::to_json(n.bbox3d.max)}}},
         {"diag", n.diag},
         {"appearance", n.appearance},
         {"embedding", n.embedding},
         {"obs_count", n.obs_count},
         {"last_seen", n.last_seen},
         {"points", io_detail::points_to_json(n.points)}};
  return j;
}

inline MapNode node_from_json(const json& j, const std::string& path) {
  io_detail::Reader r(j, path);
  MapNode n;
  n.id = r.integer("id");
  n.kind = io_detail::kind_from(r, "kind");
  n.category = r.string("category");
  n.centroid = r.vec3("centroid");
  auto b = r.child("bbox3d");
  n.bbox3d = {b.vec3("min"), b.vec3("max")};
  n.diag = r.number("diag");
  n.appearance = r.numbers("appearance");
  n.embedding = r.numbers("embedding");
  n.obs_count = r.integer("obs_count");
  n.last_seen = r.integer("last_seen");
  n.points = io_detail::points_from(r.raw("points"), r.sub("points"));
  return n;
}

inline json to_json(const SceneGraph& g) {
  json nodes = json::array();
  for (const auto& n : g.nodes) nodes.push_back(to_json(n));
  json edges = json::array();
  for (const auto& e : g.edges) {
    edges.push_back({{"parent", e.parent}, {"child", e.child}, {"relation", std::string(to_string(e.relation))}});
  }
  json prov = json::array();
  for (const auto& p : g.provenance) {
    prov.push_back({{"parent", p.parent}, {"child", p.child}, {"score", io_detail::number_or_null(p.score)}});
  }
  return json{{"nodes", nodes}, {"edges", edges}, {"provenance", prov}};
}

inline SceneGraph graph_from_json(const json& j) {
  io_detail::Reader r(j, "");
  SceneGraph g;
  const auto& nodes = r.array("nodes");
  for (std::size_t i = 0; i < nodes.size(); ++i) g.nodes.push_back(node_from_json(nodes[i], io_detail::idx("nodes", i)));
  const auto& edges = r.array("edges");
  for (std::size_t i = 0; i < edges.size(); ++i) {
    io_detail::Reader e(edges[i], io_detail::idx("edges", i));
    auto rel = parse_relation(e.string("relation"));
    if (!rel) e.fail("relation", "unknown relation");
    g.edges.push_back({e.integer("parent"), e.integer("child"), *rel});
  }
  const auto& prov = r.array("provenance");
  for (std::size_t i = 0; i < prov.size(); ++i) {
    io_detail::Reader p(prov[i], io_detail::idx("provenance", i));
    double s = p.has("score") ? p.number("score") : -std::numeric_limits<double>::infinity();
    g.provenance.push_back({p.integer("parent"), p.integer("child"), s});
  }
  return g;
}

inline std::string serialize_graph(const SceneGraph& g) { return to_json(g).dump(2) + "\n"; }

inline SceneGraph deserialize_graph(std::string_view text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ParseError(std::string("graph: ") + e.what());
  }
  return graph_from_json(j);
}

}  // namespace hfsg
