#pragma once

#include <charconv>
#include <functional>
#include <istream>
#include <map>
#include <sstream>
#include <string>

#include "hfsg/anchor2d.hpp"
#include "hfsg/associate.hpp"
#include "hfsg/edgeopt.hpp"
#include "hfsg/hierarchy.hpp"

namespace hfsg {

enum class AblationMode { Full, AssocBaseline, NoGoCount, Hierarchy2dOff };

inline std::string_view to_string(AblationMode m) {
  switch (m) {
    case AblationMode::Full: return "full";
    case AblationMode::AssocBaseline: return "assoc-baseline";
    case AblationMode::NoGoCount: return "no-go-count";
    case AblationMode::Hierarchy2dOff: return "hierarchy-2d-off";
  }
  return "full";
}

inline std::optional<AblationMode> parse_ablation_mode(std::string_view s) {
  for (auto m : {AblationMode::Full, AblationMode::AssocBaseline, AblationMode::NoGoCount, AblationMode::Hierarchy2dOff}) {
    if (to_string(m) == s) return m;
  }
  return std::nullopt;
}

struct EngineConfig {
  AssociationWeights weights;
  GateParams gate;
  NodeUpdateParams update;
  EdgeOptParams edge;
  HierarchyParams hierarchy;
  AnchorParams anchor;
  int min_object_points = 10;  // an object needs this many fused points to anchor edges
  int pending_frames = 5;      // depthless detections are retried this long
  int stride = 1;
  AblationMode mode = AblationMode::Full;

  void validate() const {
    weights.validate();
    gate.validate();
    edge.validate();
    if (stride < 1) throw ValidationError("engine.stride must be >= 1");
    if (min_object_points < 0) throw ValidationError("edge.min_object_points must be >= 0");
    if (pending_frames < 0) throw ValidationError("engine.pending_frames must be >= 0");
    if (!(update.alpha >= 0 && update.alpha <= 1)) throw ValidationError("assoc.alpha must lie in [0,1]");
  }

  // Applies one `key=value` setting. Unknown keys and malformed values throw.
  void set(std::string_view key, std::string_view value) {
    auto num = [&]() {
      double v = 0.0;
      auto [p, ec] = std::from_chars(value.data(), value.data() + value.size(), v);
      if (ec != std::errc() || p != value.data() + value.size()) {
        throw ValidationError("config " + std::string(key) + ": expected a number, got '" + std::string(value) + "'");
      }
      return v;
    };
    auto integer = [&]() {
      long v = 0;
      auto [p, ec] = std::from_chars(value.data(), value.data() + value.size(), v);
      if (ec != std::errc() || p != value.data() + value.size()) {
        throw ValidationError("config " + std::string(key) + ": expected an integer, got '" + std::string(value) + "'");
      }
      return static_cast<int>(v);
    };
    auto boolean = [&]() {
      if (value == "true" || value == "1") return true;
      if (value == "false" || value == "0") return false;
      throw ValidationError("config " + std::string(key) + ": expected true or false, got '" + std::string(value) + "'");
    };
    const std::map<std::string_view, std::function<void()>> table = {
        {"assoc.w_iou", [&] { weights.w_iou = num(); }},
        {"assoc.w_geo", [&] { weights.w_geo = num(); }},
        {"assoc.w_app", [&] { weights.w_app = num(); }},
        {"assoc.w_sem", [&] { weights.w_sem = num(); }},
        {"assoc.sigma", [&] { weights.sigma = num(); }},
        {"assoc.alpha", [&] { update.alpha = num(); }},
        {"assoc.voxel", [&] { update.voxel = num(); }},
        {"gate.tau_ass", [&] { gate.tau_ass = num(); }},
        {"gate.dist_cap", [&] { gate.dist_cap = num(); }},
        {"gate.dist_frac", [&] { gate.dist_frac = num(); }},
        {"gate.same_kind", [&] { gate.same_kind = boolean(); }},
        {"edge.lambda_h", [&] { edge.lambda_h = num(); }},
        {"edge.lambda_d", [&] { edge.lambda_d = num(); }},
        {"edge.eps_clamp", [&] { edge.eps_clamp = num(); }},
        {"edge.solver_iters", [&] { edge.solver_iters = integer(); }},
        {"edge.solver_tol", [&] { edge.solver_tol = num(); }},
        {"edge.min_obs", [&] { edge.min_obs = integer(); }},
        {"edge.min_object_points", [&] { min_object_points = integer(); }},
        {"anchor.tau_det", [&] { anchor.tau_det = num(); }},
        {"anchor.tau_geo", [&] { anchor.tau_geo = num(); }},
        {"anchor.delta", [&] { anchor.delta = integer(); }},
        {"hierarchy.pairing_floor", [&] { hierarchy.pairing_floor = num(); }},
        {"hierarchy.max_dual_exhaustive", [&] { hierarchy.max_dual_exhaustive = integer(); }},
        {"engine.stride", [&] { stride = integer(); }},
        {"engine.pending_frames", [&] { pending_frames = integer(); }},
        {"engine.mode",
         [&] {
           auto m = parse_ablation_mode(value);
           if (!m) throw ValidationError("config engine.mode: unknown mode '" + std::string(value) + "'");
           mode = *m;
         }},
    };
    auto it = table.find(key);
    if (it == table.end()) throw ValidationError("config: unknown key '" + std::string(key) + "'");
    it->second();
  }

  // Applies a "key=value" assignment.
  void set(std::string_view assignment) {
    const auto eq = assignment.find('=');
    if (eq == std::string_view::npos) throw ValidationError("config: expected key=value, got '" + std::string(assignment) + "'");
    set(trim(assignment.substr(0, eq)), trim(assignment.substr(eq + 1)));
  }

  // Reads a key=value file; '#' starts a comment, blank lines are ignored.
  void load(std::istream& in) {
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
      ++lineno;
      auto s = std::string_view(line);
      if (auto h = s.find('#'); h != std::string_view::npos) s = s.substr(0, h);
      s = trim(s);
      if (s.empty()) continue;
      try {
        set(s);
      } catch (const ValidationError& e) {
        throw ParseError("config line " + std::to_string(lineno) + ": " + e.what());
      }
    }
  }

  static std::string_view trim(std::string_view s) {
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
    return s;
  }
};

}  // namespace hfsg
