#pragma once

#include <sstream>
#include <string>

#include "hfsg/types.hpp"

namespace hfsg {

namespace dot_detail {

inline std::string quote(const std::string& s) {
  std::string out = "\"";
  for (char c : s) {
    if (c == '"' || c == '\\') out += '\\';
    out += c;
  }
  return out + "\"";
}

inline const char* shape(NodeKind k) {
  switch (k) {
    case NodeKind::Object: return "box";
    case NodeKind::FunctionalCarrier: return "ellipse";
    case NodeKind::InteractiveUnit: return "diamond";
  }
  return "box";
}

}  // namespace dot_detail

// Graphviz description; edges point from parent to child.
inline std::string to_dot(const SceneGraph& g) {
  std::ostringstream out;
  out << "digraph scene {\n  rankdir=TB;\n";
  for (const auto& n : g.nodes) {
    out << "  n" << n.id << " [label=" << dot_detail::quote(n.category + " #" + std::to_string(n.id))
        << ", shape=" << dot_detail::shape(n.kind) << "];\n";
  }
  for (const auto& e : g.edges) {
    out << "  n" << e.parent << " -> n" << e.child << " [label=" << dot_detail::quote(std::string(to_string(e.relation)))
        << "];\n";
  }
  out << "}\n";
  return out.str();
}

}  // namespace hfsg
