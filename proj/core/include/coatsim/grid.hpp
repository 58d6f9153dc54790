#pragma once

#include <array>
#include <cassert>
#include <compare>
#include <cstdint>
#include <cstdlib>
#include <functional>
#include <unordered_set>
#include <vector>

namespace coatsim {

/// A node of the infinite triangular grid, in axial coordinates.
struct Node {
  int q = 0;
  int r = 0;

  friend bool operator==(const Node&, const Node&) = default;
  friend auto operator<=>(const Node&, const Node&) = default;
};

struct NodeHash {
  size_t operator()(const Node& v) const noexcept {
    uint64_t x = (static_cast<uint64_t>(static_cast<uint32_t>(v.q)) << 32) |
                 static_cast<uint32_t>(v.r);
    x ^= x >> 33;
    x *= 0xff51afd7ed558ccdULL;
    x ^= x >> 33;
    return static_cast<size_t>(x);
  }
};

using NodeSet = std::unordered_set<Node, NodeHash>;

/// One of the six global lattice directions, indexed 0..5 in clockwise
/// order. Index 0 is the fixed global East; particle-local port labels are
/// offsets against this table.
class Direction {
 public:
  constexpr Direction() = default;
  constexpr explicit Direction(int index) : index_(((index % 6) + 6) % 6) {}

  constexpr int index() const { return index_; }
  constexpr Direction opposite() const { return Direction(index_ + 3); }
  /// Rotate k steps clockwise (decreasing angle in the standard embedding).
  constexpr Direction rotated_cw(int k = 1) const { return Direction(index_ + k); }
  constexpr Direction rotated_ccw(int k = 1) const { return Direction(index_ - k); }

  friend bool operator==(const Direction&, const Direction&) = default;

 private:
  int index_ = 0;
};

/// Unit offsets per direction index; successive entries are one 60-degree
/// clockwise rotation apart.
inline constexpr std::array<Node, 6> kDirectionOffsets = {{
    {1, 0}, {1, -1}, {0, -1}, {-1, 0}, {-1, 1}, {0, 1},
}};

inline Node neighbor(Node v, Direction d) {
  const Node& o = kDirectionOffsets[static_cast<size_t>(d.index())];
  return Node{v.q + o.q, v.r + o.r};
}

/// Hex-grid shortest path length between two nodes.
inline int distance(Node v, Node w) {
  int dq = v.q - w.q;
  int dr = v.r - w.r;
  int ds = dq + dr;
  return (std::abs(dq) + std::abs(dr) + std::abs(ds)) / 2;
}

/// min over U of distance(v, .). U must be nonempty.
int distance_to_set(Node v, const NodeSet& set);

/// Distance of v to the object O (0 for object nodes).
int layer_of(Node v, const NodeSet& object);

/// All nodes at distance exactly i from O, computed by bounded BFS.
/// Returned sorted for canonical ordering.
std::vector<Node> layer_nodes(int i, const NodeSet& object);

/// Count of nodes in layer i (B_i).
inline int layer_size(int i, const NodeSet& object) {
  return static_cast<int>(layer_nodes(i, object).size());
}

}  // namespace coatsim
