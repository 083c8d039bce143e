#pragma once

#include <algorithm>
#include <cmath>
#include <map>
#include <vector>

#include "hfsg/mask.hpp"
#include "hfsg/rng.hpp"
#include "hfsg/types.hpp"

namespace hfsg {

// Square dilation radius in pixels.
class DilationRadius {
 public:
  explicit DilationRadius(int delta) : delta_(delta) {
    if (delta < 0) throw ValidationError("dilation radius must be >= 0");
  }

  // Bounded by a quarter of the smaller image side.
  DilationRadius(int delta, int width, int height) : DilationRadius(delta) {
    if (delta > std::min(width, height) / 4) throw ValidationError("dilation radius exceeds min(width,height)/4");
  }

  // 3 px at 640 px width, scaled with resolution.
  static DilationRadius for_image(int width, int height) {
    const int d = static_cast<int>(std::lround(3.0 * static_cast<double>(width) / 640.0));
    return DilationRadius(std::min(d, std::min(width, height) / 4), width, height);
  }

  int value() const { return delta_; }

 private:
  int delta_ = 0;
};

struct AnchorParams {
  double tau_det = 0.25;
  double tau_geo = 0.90;
  int delta = -1;  // < 0 selects DilationRadius::for_image

  DilationRadius radius(const Intrinsics& k) const {
    return delta < 0 ? DilationRadius::for_image(k.width, k.height) : DilationRadius(delta, k.width, k.height);
  }
};

namespace anchor_detail {

// Foreground intervals per row.
using RowIntervals = std::map<int, std::vector<std::pair<int, int>>>;

inline RowIntervals rows_of(const Mask& m) {
  RowIntervals rows;
  for (const auto& s : m.spans()) rows[s.y].emplace_back(s.x0, s.x1);
  return rows;
}

}  // namespace anchor_detail

// |M_f ∩ (M_o ⊕ Δ)| / |M_f| with a square structuring element.
inline double mask_containment(const Mask& fine, const Mask& object, DilationRadius delta) {
  if (fine.width() != object.width() || fine.height() != object.height()) {
    throw ValidationError("masks are on different grids");
  }
  const auto fine_spans = fine.spans();
  std::size_t fine_area = 0;
  for (const auto& s : fine_spans) fine_area += static_cast<std::size_t>(s.x1 - s.x0);
  if (fine_area == 0) throw DegenerateInputError("fine mask is empty; containment ratio undefined");

  const int d = delta.value();
  const int w = object.width();
  const auto obj_rows = anchor_detail::rows_of(object);
  std::size_t inside = 0;
  std::vector<std::pair<int, int>> dil;
  int cached_row = -1;
  for (const auto& s : fine_spans) {
    if (s.y != cached_row) {
      cached_row = s.y;
      dil.clear();
      for (auto it = obj_rows.lower_bound(s.y - d); it != obj_rows.end() && it->first <= s.y + d; ++it) {
        for (auto [a, b] : it->second) dil.emplace_back(std::max(0, a - d), std::min(w, b + d));
      }
      std::sort(dil.begin(), dil.end());
      std::vector<std::pair<int, int>> merged;
      for (auto iv : dil) {
        if (!merged.empty() && iv.first <= merged.back().second) {
          merged.back().second = std::max(merged.back().second, iv.second);
        } else {
          merged.push_back(iv);
        }
      }
      dil.swap(merged);
    }
    for (auto [a, b] : dil) {
      const int lo = std::max(a, s.x0);
      const int hi = std::min(b, s.x1);
      if (hi > lo) inside += static_cast<std::size_t>(hi - lo);
    }
  }
  return static_cast<double>(inside) / static_cast<double>(fine_area);
}

// Pre-filtered (object, fine) candidate pairs for one frame, ordered by
// object detection index then fine detection index. s_2d is left unset.
inline std::vector<EdgeCandidate2D> generate_candidates(const FramePacket& packet, const AnchorParams& params = {}) {
  std::vector<EdgeCandidate2D> out;
  const auto radius = params.radius(packet.intrinsics);
  const auto& dets = packet.detections;
  for (std::size_t o = 0; o < dets.size(); ++o) {
    if (dets[o].kind != NodeKind::Object) continue;
    for (std::size_t f = 0; f < dets.size(); ++f) {
      if (!is_fine(dets[f].kind)) continue;
      if (!packet.imap.permits(dets[o].category, dets[f].category)) continue;
      const double s_det = std::min(dets[o].confidence, dets[f].confidence);
      if (!(s_det > params.tau_det)) continue;
      if (dets[f].mask.area() == 0) continue;
      const double g = mask_containment(dets[f].mask, dets[o].mask, radius);
      if (!(g > params.tau_geo)) continue;
      out.push_back({packet.frame_id, o, f, s_det, g, std::nullopt});
    }
  }
  return out;
}

// Completes a candidate with its visual-semantic score; s must lie in (0,1].
inline EdgeCandidate2D attach_score(EdgeCandidate2D candidate, double s) {
  if (!(s > 0.0 && s <= 1.0)) throw ValidationError("s_2d outside (0,1]: " + std::to_string(s));
  candidate.s_2d = s;
  return candidate;
}

// Stand-in for the visual-semantic scorer: looks the (object, fine) category
// pair up in a table and adds seeded Gaussian noise, clamped into (0,1].
class MockScorer {
 public:
  MockScorer(std::map<std::pair<std::string, std::string>, double> table, double fallback = 0.5,
             double noise_sigma = 0.0, std::uint64_t seed = 0)
      : table_(std::move(table)), fallback_(fallback), noise_sigma_(noise_sigma), rng_(seed) {}

  double score(const FramePacket& packet, const EdgeCandidate2D& c) {
    const auto& o = packet.detections.at(c.object_det).category;
    const auto& f = packet.detections.at(c.fine_det).category;
    auto it = table_.find({o, f});
    const double base = it == table_.end() ? fallback_ : it->second;
    return std::clamp(rng_.normal(base, noise_sigma_), 1e-3, 1.0);
  }

  std::vector<EdgeCandidate2D> score_all(const FramePacket& packet, std::vector<EdgeCandidate2D> cands) {
    for (auto& c : cands) c = attach_score(c, score(packet, c));
    return cands;
  }

 private:
  std::map<std::pair<std::string, std::string>, double> table_;
  double fallback_;
  double noise_sigma_;
  Rng rng_;
};

}  // namespace hfsg
