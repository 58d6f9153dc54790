#pragma once

#include <map>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "coatsim/grid.hpp"

namespace coatsim {

using ParticleId = int;
inline constexpr ParticleId kNoParticle = -1;

enum class ParticleState { Idle, Follower, Root, Retired };

const char* to_string(ParticleState s);

/// A particle and its constant-size, neighbor-visible memory. Port-label
/// flags (parent, dir, down, marker, cw, ccw) are local labels anchored at
/// the head node; local label L maps to global direction
/// (L + chirality_offset) mod 6.
struct Particle {
  ParticleId id = kNoParticle;  // simulator bookkeeping only; the algorithm never reads it
  Node head;
  Node tail;
  int chirality_offset = 0;
  ParticleState state = ParticleState::Idle;

  std::optional<int> parent_port;
  std::optional<int> dir_port;
  std::optional<int> down_port;
  std::optional<int> marker_port;
  std::optional<int> cw_port;
  std::optional<int> ccw_port;
  int layer_mod4 = -1;  // -1 until first computed
  bool is_leader = false;
  bool is_marker = false;
  bool adopted_ac_parent = false;  // set on a root's first handover expansion

  // Complaint flags carried, oldest first; ids exist for trace bookkeeping.
  std::vector<int> flags;

  bool expanded() const { return !(head == tail); }
  bool contracted() const { return head == tail; }
  bool active() const {
    return state == ParticleState::Follower || state == ParticleState::Root;
  }
  int flag_count() const { return static_cast<int>(flags.size()); }

  Direction local_to_global(int local) const {
    return Direction(local + chirality_offset);
  }
  int global_to_local(Direction g) const {
    return ((g.index() - chirality_offset) % 6 + 6) % 6;
  }
};

enum class MovementKind {
  SoleContraction,
  SoleExpansion,
  HandoverContraction,
  HandoverExpansion,
};

const char* to_string(MovementKind k);

struct Movement {
  MovementKind kind;
  ParticleId actor = kNoParticle;
  ParticleId partner = kNoParticle;  // handover kinds only
  Node node_from;
  Node node_to;
  int consumed_flag = -1;  // flag id consumed by this expansion, or -1

  friend bool operator==(const Movement&, const Movement&) = default;
};

enum class MoveResult {
  Ok,
  TargetOccupied,
  AlreadyExpanded,
  AlreadyContracted,
  IllegalHandover,
};

const char* to_string(MoveResult r);

/// Receives fine-grained events from movement primitives and the coating
/// algorithm; implemented by the trace recorder.
class EventSink {
 public:
  virtual ~EventSink() = default;
  virtual void on_movement(const Movement&) {}
  virtual void on_flag_created(int flag_id, ParticleId at) { (void)flag_id, (void)at; }
  virtual void on_flag_forwarded(int flag_id, ParticleId from, ParticleId to) {
    (void)flag_id, (void)from, (void)to;
  }
  virtual void on_flag_consumed(int flag_id, ParticleId at) { (void)flag_id, (void)at; }
  virtual void on_flag_cleared(int flag_id, ParticleId at) { (void)flag_id, (void)at; }
  virtual void on_state_change(ParticleId p, ParticleState from, ParticleState to) {
    (void)p, (void)from, (void)to;
  }
};

/// Object nodes plus the particle system plus the occupancy index.
class Configuration {
 public:
  Configuration() = default;
  Configuration(NodeSet object, std::vector<Node> particle_nodes);

  const NodeSet& object() const { return object_; }
  const std::vector<Particle>& particles() const { return particles_; }
  Particle& particle(ParticleId id) { return particles_.at(static_cast<size_t>(id)); }
  const Particle& particle(ParticleId id) const {
    return particles_.at(static_cast<size_t>(id));
  }
  int particle_count() const { return static_cast<int>(particles_.size()); }

  bool is_object(Node v) const { return object_.count(v) > 0; }
  bool is_empty(Node v) const { return !is_object(v) && occupant(v) == kNoParticle; }
  ParticleId occupant(Node v) const;

  /// Movement primitives. Each returns a status and leaves the
  /// configuration untouched on failure.
  MoveResult expand(ParticleId p, Direction d, EventSink* sink = nullptr,
                    int consumed_flag = -1);
  MoveResult contract(ParticleId p, EventSink* sink = nullptr);
  MoveResult handover(ParticleId initiator, ParticleId partner, EventSink* sink = nullptr);

  int next_flag_id() { return next_flag_id_++; }

  /// Connectivity of V(P) u V(O), checked by BFS. Test/validation helper.
  bool system_connected() const;

 private:
  NodeSet object_;
  std::vector<Particle> particles_;
  std::unordered_map<Node, ParticleId, NodeHash> occupancy_;
  int next_flag_id_ = 0;
};

/// The directed graph A(C) over nodes occupied by active particles.
struct ForestGraph {
  std::vector<Node> vertices;                      // sorted
  std::unordered_map<Node, Node, NodeHash> edges;  // out-degree <= 1 per node

  /// Nodes on directed cycles. A(C) must be a forest (empty) or a single
  /// ring of trees (one cycle).
  std::vector<Node> cycle_nodes() const;
  bool is_forest_or_ring() const;
};

ForestGraph build_forest_graph(const Configuration& cfg);

/// Root particles with no predecessor in direction dir_port.
std::vector<ParticleId> super_roots(const ForestGraph& fg, const Configuration& cfg);

/// A (P, O) problem instance: object node list plus initial (contracted,
/// idle) particle node list.
struct Instance {
  std::vector<Node> object;
  std::vector<Node> particles;
  uint64_t seed = 0;
  std::map<std::string, std::string> meta;

  NodeSet object_set() const { return NodeSet(object.begin(), object.end()); }
  int n() const { return static_cast<int>(particles.size()); }
};

}  // namespace coatsim
