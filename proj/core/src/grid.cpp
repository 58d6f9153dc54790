#include "coatsim/grid.hpp"

#include <algorithm>
#include <deque>
#include <limits>
#include <stdexcept>

namespace coatsim {

int distance_to_set(Node v, const NodeSet& set) {
  if (set.empty()) throw std::invalid_argument("distance_to_set: empty set");
  int best = std::numeric_limits<int>::max();
  for (const Node& w : set) best = std::min(best, distance(v, w));
  return best;
}

int layer_of(Node v, const NodeSet& object) {
  return distance_to_set(v, object);
}

std::vector<Node> layer_nodes(int i, const NodeSet& object) {
  if (i < 1) throw std::invalid_argument("layer_nodes: i must be >= 1");
  if (object.empty()) throw std::invalid_argument("layer_nodes: empty object");

  // Bounded multi-source BFS outward from the object, depth i.
  NodeSet seen = object;
  std::vector<Node> frontier(object.begin(), object.end());
  for (int depth = 0; depth < i; ++depth) {
    std::vector<Node> next;
    for (const Node& v : frontier) {
      for (int d = 0; d < 6; ++d) {
        Node w = neighbor(v, Direction(d));
        if (seen.insert(w).second) next.push_back(w);
      }
    }
    frontier = std::move(next);
  }
  std::sort(frontier.begin(), frontier.end());
  return frontier;
}

}  // namespace coatsim
