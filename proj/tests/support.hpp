#pragma once

// Fixtures and brute-force oracles shared by the unit tests and the
// acceptance binary. Oracles here never call the solver they check.

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <limits>
#include <numeric>
#include <optional>
#include <random>
#include <set>
#include <vector>

#include <unistd.h>

#include "hfsg/hfsg.hpp"

namespace hfsg::test {

inline std::vector<double> flat_histogram(std::size_t bins = 8) { return std::vector<double>(bins, 1.0 / bins); }

inline Detection2D make_det(NodeKind kind, const std::string& category, BBox2 box, double confidence = 0.9,
                            const Intrinsics& k = {}) {
  Detection2D d;
  d.kind = kind;
  d.category = category;
  d.bbox = box;
  d.confidence = confidence;
  d.mask = Mask::rectangle(k.width, k.height, box);
  d.appearance = flat_histogram();
  return d;
}

// A node holding the 8 corners of a cube around `center`.
inline MapNode make_cube_node(NodeId id, const Vec3& center, double half, NodeKind kind = NodeKind::Object,
                              const std::string& category = "cabinet") {
  MapNode n;
  n.id = id;
  n.kind = kind;
  n.category = category;
  const Box3 b{center - Vec3{half, half, half}, center + Vec3{half, half, half}};
  for (const auto& c : b.corners()) n.points.push_back(c);
  n.centroid = mean(n.points);
  n.bbox3d = bounding_box(n.points);
  n.diag = n.bbox3d.diagonal();
  n.appearance = flat_histogram();
  n.obs_count = 1;
  return n;
}

// Maximum total over all partial one-to-one assignments, by recursion over
// rows (each row takes an unused allowed column or nothing).
inline double brute_force_matching(const WeightMatrix& m) {
  std::vector<char> used(m.cols, 0);
  double best = 0.0;
  auto rec = [&](auto&& self, std::size_t row, double acc) -> void {
    if (row == m.rows) {
      best = std::max(best, acc);
      return;
    }
    self(self, row + 1, acc);
    for (std::size_t c = 0; c < m.cols; ++c) {
      if (used[c] || !m.allowed(row, c)) continue;
      used[c] = 1;
      self(self, row + 1, acc + m.at(row, c));
      used[c] = 0;
    }
  };
  rec(rec, 0, 0.0);
  return best;
}

// Dense grid over the 2- or 3-simplex; returns the best objective value and
// its argmax.
struct GridResult {
  double value = -std::numeric_limits<double>::infinity();
  std::vector<double> z;
};

inline GridResult grid_search_simplex(const std::vector<double>& L, const std::vector<double>& z_prev, double lambda_h,
                                      double lambda_d, double step) {
  GridResult best;
  const int n = static_cast<int>(std::lround(1.0 / step));
  auto objective = [&](const std::vector<double>& z) {
    double v = 0.0;
    for (std::size_t i = 0; i < z.size(); ++i) {
      v += z[i] * L[i];
      if (z[i] > 0) v -= lambda_h * z[i] * std::log(z[i]);
      v -= lambda_d * 0.5 * (z[i] - z_prev[i]) * (z[i] - z_prev[i]);
    }
    return v;
  };
  auto consider = [&](std::vector<double> z) {
    const double v = objective(z);
    if (v > best.value) {
      best.value = v;
      best.z = std::move(z);
    }
  };
  if (L.size() == 2) {
    for (int i = 0; i <= n; ++i) consider({i * step, 1.0 - i * step});
  } else if (L.size() == 3) {
    for (int i = 0; i <= n; ++i) {
      for (int j = 0; i + j <= n; ++j) consider({i * step, j * step, std::max(0.0, 1.0 - (i + j) * step)});
    }
  }
  return best;
}

inline double objective_value(const std::vector<double>& L, const std::vector<double>& z,
                              const std::vector<double>& z_prev, double lambda_h, double lambda_d) {
  double v = 0.0;
  for (std::size_t i = 0; i < z.size(); ++i) {
    v += z[i] * L[i];
    if (z[i] > 0) v -= lambda_h * z[i] * std::log(z[i]);
    v -= lambda_d * 0.5 * (z[i] - z_prev[i]) * (z[i] - z_prev[i]);
  }
  return v;
}

// Exhaustive pairing: every unit picks a carrier index or none; a node used as
// a carrier (receiving a unit) may not also be assigned as a unit, no node
// carries itself, and only pairs at or above the floor are allowed. Totals are
// summed in unit order to match the solver bit for bit.
struct BrutePairing {
  double total = 0.0;
  std::vector<int> carrier_of;
};

inline BrutePairing brute_force_pairing(const PairingProblem& p) {
  BrutePairing best;
  best.total = -1.0;
  std::vector<int> a(p.units.size(), -1);
  auto rec = [&](auto&& self, std::size_t u) -> void {
    if (u == p.units.size()) {
      std::set<NodeId> acting;
      for (std::size_t k = 0; k < a.size(); ++k) {
        if (a[k] >= 0) acting.insert(p.carriers[static_cast<std::size_t>(a[k])]);
      }
      for (std::size_t k = 0; k < a.size(); ++k) {
        if (a[k] >= 0 && acting.contains(p.units[k])) return;
      }
      double t = 0.0;
      for (std::size_t k = 0; k < a.size(); ++k) {
        if (a[k] >= 0) t += p.at(static_cast<std::size_t>(a[k]), k);
      }
      if (t > best.total) {
        best.total = t;
        best.carrier_of = a;
      }
      return;
    }
    a[u] = -1;
    self(self, u + 1);
    for (std::size_t c = 0; c < p.carriers.size(); ++c) {
      if (p.carriers[c] == p.units[u] || p.at(c, u) < p.floor) continue;
      a[u] = static_cast<int>(c);
      self(self, u + 1);
    }
    a[u] = -1;
  };
  rec(rec, 0);
  return best;
}

// Two-candidate evidence stream for one fine node: the true object (id 0)
// scores around 0.8 and the other (id 1) around 0.6; with probability flip_p
// the means swap for that frame.
struct FlipStream {
  std::vector<double> true_scores;
  std::vector<double> other_scores;
};

inline FlipStream make_flip_stream(std::uint64_t seed, int frames, double flip_p, double sigma = 0.05) {
  FlipStream s;
  Rng rng(seed);
  for (int t = 0; t < frames; ++t) {
    Rng r = rng.split(static_cast<std::uint64_t>(t));
    const bool flip = r.bernoulli(flip_p);
    const double hi = std::clamp(r.normal(0.8, sigma), 0.01, 1.0);
    const double lo = std::clamp(r.normal(0.6, sigma), 0.01, 1.0);
    s.true_scores.push_back(flip ? lo : hi);
    s.other_scores.push_back(flip ? hi : lo);
  }
  return s;
}

struct SwitchCounts {
  int instantaneous = 0;
  int selected = 0;
};

// Feeds a flip stream through accumulate/optimize_step/select_edge and counts
// how often the per-frame argmax and the selected edge change.
inline SwitchCounts count_switches(const FlipStream& s, const EdgeOptParams& params = {}) {
  SwitchCounts c;
  EdgeBelief b;
  b.fine_id = 100;
  std::optional<NodeId> inst_prev, sel_prev;
  for (std::size_t t = 0; t < s.true_scores.size(); ++t) {
    const auto f = static_cast<FrameId>(t);
    accumulate(b, 0, s.true_scores[t], f, params);
    accumulate(b, 1, s.other_scores[t], f, params);
    optimize_step(b, params);
    const NodeId inst = s.true_scores[t] >= s.other_scores[t] ? 0 : 1;
    if (inst_prev && *inst_prev != inst) ++c.instantaneous;
    inst_prev = inst;
    const auto d = select_edge(b, params);
    const std::optional<NodeId> sel = d ? std::optional<NodeId>(d->object) : std::nullopt;
    if (sel_prev && sel && *sel_prev != *sel) ++c.selected;
    if (sel) sel_prev = sel;
  }
  return c;
}

inline NoiseProfile noisy_profile(std::uint64_t seed) {
  NoiseProfile p;
  p.dropout_p = 0.3;
  p.centroid_sigma = 0.03;
  p.score_flip_p = 0.2;
  p.bbox_jitter = 2.0;
  p.score_sigma = 0.05;
  p.distractor_p = 1.0;
  p.embedding_sigma = 0.3;
  p.seed = seed;
  return p;
}

// Same node ids, kinds, categories, point sets and edges. Observation
// counts, timestamps and provenance scores are ignored.
inline bool same_structure(const SceneGraph& a, const SceneGraph& b, std::string* why = nullptr) {
  auto fail = [&](const std::string& m) {
    if (why) *why = m;
    return false;
  };
  if (a.nodes.size() != b.nodes.size()) return fail("node counts differ");
  for (std::size_t i = 0; i < a.nodes.size(); ++i) {
    const auto& x = a.nodes[i];
    const auto& y = b.nodes[i];
    if (x.id != y.id || x.kind != y.kind || x.category != y.category) {
      return fail("node " + std::to_string(x.id) + " differs in identity");
    }
    if (x.points != y.points) return fail("node " + std::to_string(x.id) + " differs in points");
  }
  auto ea = a.edges, eb = b.edges;
  std::sort(ea.begin(), ea.end());
  std::sort(eb.begin(), eb.end());
  if (ea != eb) return fail("edge sets differ");
  return true;
}

// Scratch directory removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    static int counter = 0;
    path_ = std::filesystem::temp_directory_path() /
            ("hfsg-" + tag + "-" + std::to_string(::getpid()) + "-" + std::to_string(counter++));
    std::filesystem::remove_all(path_);
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  const std::filesystem::path& path() const { return path_; }
  std::string operator/(const std::string& name) const { return (path_ / name).string(); }

 private:
  std::filesystem::path path_;
};

}  // namespace hfsg::test
