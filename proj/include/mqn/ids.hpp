#pragma once

#include <array>
#include <stdexcept>
#include <string>

namespace mqn {

enum class NodeId { A = 0, B = 1, C = 2 };
// Links are oriented: the first node's arm carries the server EOM. The third
// link is oriented C->B so that the three locked links close with a pi/2 delay.
enum class LinkId { AB = 0, AC = 1, CB = 2 };

inline constexpr std::array<NodeId, 3> kAllNodes{NodeId::A, NodeId::B, NodeId::C};
inline constexpr std::array<LinkId, 3> kAllLinks{LinkId::AB, LinkId::AC, LinkId::CB};

inline std::string to_string(NodeId n) {
  static const char* names[] = {"A", "B", "C"};
  return names[static_cast<int>(n)];
}

inline std::string to_string(LinkId l) {
  static const char* names[] = {"AB", "AC", "CB"};
  return names[static_cast<int>(l)];
}

inline NodeId node_from_string(const std::string& s) {
  if (s == "A") return NodeId::A;
  if (s == "B") return NodeId::B;
  if (s == "C") return NodeId::C;
  throw std::invalid_argument("unknown node: " + s);
}

// "BC" is accepted as an alias of the C->B link
inline LinkId link_from_string(const std::string& s) {
  if (s == "AB") return LinkId::AB;
  if (s == "AC") return LinkId::AC;
  if (s == "CB" || s == "BC") return LinkId::CB;
  throw std::invalid_argument("unknown link: " + s);
}

inline NodeId first_node(LinkId l) {
  static const NodeId f[] = {NodeId::A, NodeId::A, NodeId::C};
  return f[static_cast<int>(l)];
}

inline NodeId second_node(LinkId l) {
  static const NodeId s[] = {NodeId::B, NodeId::C, NodeId::B};
  return s[static_cast<int>(l)];
}

inline int index(NodeId n) { return static_cast<int>(n); }
inline int index(LinkId l) { return static_cast<int>(l); }

}  // namespace mqn
