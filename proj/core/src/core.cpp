#include "coatsim/core.hpp"

#include <algorithm>
#include <deque>
#include <stdexcept>

namespace coatsim {

const char* to_string(ParticleState s) {
  switch (s) {
    case ParticleState::Idle: return "idle";
    case ParticleState::Follower: return "follower";
    case ParticleState::Root: return "root";
    case ParticleState::Retired: return "retired";
  }
  return "?";
}

const char* to_string(MovementKind k) {
  switch (k) {
    case MovementKind::SoleContraction: return "sole_contraction";
    case MovementKind::SoleExpansion: return "sole_expansion";
    case MovementKind::HandoverContraction: return "handover_contraction";
    case MovementKind::HandoverExpansion: return "handover_expansion";
  }
  return "?";
}

const char* to_string(MoveResult r) {
  switch (r) {
    case MoveResult::Ok: return "ok";
    case MoveResult::TargetOccupied: return "target_occupied";
    case MoveResult::AlreadyExpanded: return "already_expanded";
    case MoveResult::AlreadyContracted: return "already_contracted";
    case MoveResult::IllegalHandover: return "illegal_handover";
  }
  return "?";
}

Configuration::Configuration(NodeSet object, std::vector<Node> particle_nodes)
    : object_(std::move(object)) {
  particles_.reserve(particle_nodes.size());
  for (size_t i = 0; i < particle_nodes.size(); ++i) {
    Node v = particle_nodes[i];
    if (is_object(v)) throw std::invalid_argument("particle placed on object node");
    Particle p;
    p.id = static_cast<ParticleId>(i);
    p.head = p.tail = v;
    if (!occupancy_.emplace(v, p.id).second)
      throw std::invalid_argument("two particles on one node");
    particles_.push_back(p);
  }
}

ParticleId Configuration::occupant(Node v) const {
  auto it = occupancy_.find(v);
  return it == occupancy_.end() ? kNoParticle : it->second;
}

MoveResult Configuration::expand(ParticleId id, Direction d, EventSink* sink,
                                 int consumed_flag) {
  Particle& p = particle(id);
  if (p.expanded()) return MoveResult::AlreadyExpanded;
  Node target = neighbor(p.head, d);
  if (!is_empty(target)) return MoveResult::TargetOccupied;
  p.tail = p.head;
  p.head = target;
  occupancy_.emplace(target, id);
  if (sink)
    sink->on_movement({MovementKind::SoleExpansion, id, kNoParticle, p.tail, target,
                       consumed_flag});
  return MoveResult::Ok;
}

MoveResult Configuration::contract(ParticleId id, EventSink* sink) {
  Particle& p = particle(id);
  if (p.contracted()) return MoveResult::AlreadyContracted;
  Node freed = p.tail;
  occupancy_.erase(freed);
  p.tail = p.head;
  if (sink)
    sink->on_movement({MovementKind::SoleContraction, id, kNoParticle, freed, p.head, -1});
  return MoveResult::Ok;
}

MoveResult Configuration::handover(ParticleId a, ParticleId b, EventSink* sink) {
  Particle& pa = particle(a);
  Particle& pb = particle(b);
  if (pa.expanded() == pb.expanded()) return MoveResult::IllegalHandover;
  Particle& exp = pa.expanded() ? pa : pb;
  Particle& con = pa.expanded() ? pb : pa;
  Node vacated = exp.tail;
  if (distance(con.head, vacated) != 1) return MoveResult::IllegalHandover;

  // Expanded party contracts onto its head; contracted party expands into
  // the vacated node.
  occupancy_[vacated] = con.id;
  exp.tail = exp.head;
  Node con_origin = con.head;
  con.tail = con.head;
  con.head = vacated;

  // Re-aim the moving party's pointer flag so the predecessor relation
  // survives the swap: from its new head toward the partner's head.
  Direction toward_partner = Direction(-1);
  for (int d = 0; d < 6; ++d)
    if (neighbor(vacated, Direction(d)) == exp.head) toward_partner = Direction(d);
  int local = con.global_to_local(toward_partner);
  if (con.state == ParticleState::Follower) {
    con.parent_port = local;
  } else if (con.state == ParticleState::Root) {
    con.dir_port = local;
    con.adopted_ac_parent = true;  // A(C) parent adoption, first handover expansion
  }

  if (sink) {
    sink->on_movement(
        {MovementKind::HandoverContraction, exp.id, con.id, vacated, exp.head, -1});
    sink->on_movement(
        {MovementKind::HandoverExpansion, con.id, exp.id, con_origin, vacated, -1});
  }
  return MoveResult::Ok;
}

bool Configuration::system_connected() const {
  NodeSet all = object_;
  for (const Particle& p : particles_) {
    all.insert(p.head);
    all.insert(p.tail);
  }
  if (all.empty()) return true;
  NodeSet seen;
  std::deque<Node> queue{*all.begin()};
  seen.insert(*all.begin());
  while (!queue.empty()) {
    Node v = queue.front();
    queue.pop_front();
    for (int d = 0; d < 6; ++d) {
      Node w = neighbor(v, Direction(d));
      if (all.count(w) && seen.insert(w).second) queue.push_back(w);
    }
  }
  return seen.size() == all.size();
}

ForestGraph build_forest_graph(const Configuration& cfg) {
  ForestGraph fg;
  for (const Particle& p : cfg.particles()) {
    if (!p.active()) continue;
    fg.vertices.push_back(p.head);
    if (p.expanded()) {
      fg.vertices.push_back(p.tail);
      fg.edges.emplace(p.tail, p.head);
    }
    std::optional<int> out_port;
    if (p.state == ParticleState::Follower) {
      out_port = p.parent_port;
    } else if (p.adopted_ac_parent) {
      out_port = p.dir_port;  // re-derived from the current dir each snapshot
    }
    if (out_port) {
      Node target = neighbor(p.head, p.local_to_global(*out_port));
      ParticleId occ = cfg.occupant(target);
      if (occ != kNoParticle && cfg.particle(occ).active())
        fg.edges.emplace(p.head, target);
    }
  }
  std::sort(fg.vertices.begin(), fg.vertices.end());
  fg.vertices.erase(std::unique(fg.vertices.begin(), fg.vertices.end()),
                    fg.vertices.end());
  return fg;
}

std::vector<Node> ForestGraph::cycle_nodes() const {
  // Nodes whose forward walk never leaves the edge map are on (or feed) a
  // cycle; keep only those actually on one.
  std::unordered_map<Node, int, NodeHash> color;  // 0 unseen, 1 in progress, 2 done
  std::vector<Node> on_cycle;
  NodeSet cyc;
  for (const Node& start : vertices) {
    if (color[start]) continue;
    std::vector<Node> path;
    Node v = start;
    while (true) {
      int& c = color[v];
      if (c == 2) break;
      if (c == 1) {
        // found a new cycle: the tail of `path` from v onward
        auto it = std::find(path.begin(), path.end(), v);
        for (; it != path.end(); ++it) cyc.insert(*it);
        break;
      }
      c = 1;
      path.push_back(v);
      auto e = edges.find(v);
      if (e == edges.end()) break;
      v = e->second;
    }
    for (const Node& u : path) color[u] = 2;
  }
  on_cycle.assign(cyc.begin(), cyc.end());
  std::sort(on_cycle.begin(), on_cycle.end());
  return on_cycle;
}

bool ForestGraph::is_forest_or_ring() const {
  auto cyc = cycle_nodes();
  if (cyc.empty()) return true;
  // A single ring: every cycle node reaches back to itself through the
  // unique out-edges, forming one loop.
  NodeSet cs(cyc.begin(), cyc.end());
  Node v = cyc.front();
  size_t steps = 0;
  Node w = v;
  do {
    auto e = edges.find(w);
    if (e == edges.end() || !cs.count(e->second)) return false;
    w = e->second;
    if (++steps > cyc.size()) return false;
  } while (!(w == v));
  return steps == cyc.size();
}

std::vector<ParticleId> super_roots(const ForestGraph& /*fg*/, const Configuration& cfg) {
  std::vector<ParticleId> out;
  for (const Particle& p : cfg.particles()) {
    if (p.state != ParticleState::Root) continue;
    if (!p.dir_port) {
      out.push_back(p.id);
      continue;
    }
    Node pred = neighbor(p.head, p.local_to_global(*p.dir_port));
    if (cfg.occupant(pred) == kNoParticle) out.push_back(p.id);
  }
  return out;
}

}  // namespace coatsim
