#pragma once

#include <memory>
#include <optional>
#include <random>
#include <set>

#include "coatsim/core.hpp"

namespace coatsim {

struct CoatingConfig {
  enum class Election { Oracle, Randomized };
  Election election = Election::Randomized;
  /// Roots also generate a complaint flag when they turn active.
  bool root_generates_flag = true;
  /// Max complaint flags a particle accepts via forwarding (2 async, 1 in
  /// complaint-based parallel mode).
  int flag_capacity = 2;
};

/// Elects a node in layer 1 as the leader position. Implementations must
/// terminate only once every layer-1 position holds a contracted particle,
/// and must elect exactly one position.
class LeaderElectionStrategy {
 public:
  virtual ~LeaderElectionStrategy() = default;
  virtual void register_candidate(Node v) = 0;
  /// Advance the election; returns true if any internal state changed.
  virtual bool step(const Configuration& cfg) = 0;
  virtual bool terminated() const = 0;
  virtual std::optional<Node> leader_position() const = 0;
};

/// Non-local referee: once layer 1 is filled by contracted particles, the
/// lexicographically least candidate node wins in one sweep.
class OracleStrategy : public LeaderElectionStrategy {
 public:
  void register_candidate(Node v) override { candidates_.insert(v); }
  bool step(const Configuration& cfg) override;
  bool terminated() const override { return leader_.has_value(); }
  std::optional<Node> leader_position() const override { return leader_; }

 private:
  std::set<Node> candidates_;
  std::optional<Node> leader_;
  std::vector<Node> layer1_;
};

/// Candidate nodes repeatedly flip fair coins in phases; a candidate
/// withdraws when its flip differs from its successor's along the layer-1
/// cycle. Completeness of layer 1 gates every phase.
class RandomizedStrategy : public LeaderElectionStrategy {
 public:
  explicit RandomizedStrategy(uint64_t seed) : rng_(seed) {}
  void register_candidate(Node v) override { candidates_.insert(v); }
  bool step(const Configuration& cfg) override;
  bool terminated() const override { return leader_.has_value(); }
  std::optional<Node> leader_position() const override { return leader_; }

 private:
  std::mt19937_64 rng_;
  std::set<Node> candidates_;
  std::vector<Node> survivors_;
  bool survivors_ready_ = false;
  std::optional<Node> leader_;
  std::vector<Node> layer1_;
};

std::unique_ptr<LeaderElectionStrategy> make_election_strategy(
    CoatingConfig::Election kind, uint64_t seed);

/// Local view plus write access for one activation of one particle. All
/// queries are expressed through local port labels; no coordinates, ids, or
/// totals are visible to the algorithm branch.
struct ActivationContext {
  Configuration& cfg;
  ParticleId self;
  const CoatingConfig& config;
  LeaderElectionStrategy& election;
  EventSink* sink = nullptr;

  Particle& particle() { return cfg.particle(self); }
  const Particle& particle() const { return cfg.particle(self); }
  Node head_nbr(int local) const {
    const Particle& p = particle();
    return neighbor(p.head, p.local_to_global(local));
  }
  Node tail_nbr(int local) const {
    const Particle& p = particle();
    return neighbor(p.tail, p.local_to_global(local));
  }
};

/// Results of the clockwise port computation (Clockwise primitive).
struct ClockwisePorts {
  int cw;
  int ccw;
};

/// First port from `down_local`, decrementing labels, whose edge is not
/// incident to the object or to a retired particle of the layer below;
/// `ccw` symmetric with incrementing labels. nullopt when every port is
/// incident (enclosed particle; degenerate instance).
std::optional<ClockwisePorts> clockwise(const ActivationContext& ctx, int down_local,
                                        int lower_layer_mod4);

/// Transfers one complaint flag to the particle at `local_port` iff self
/// holds one and the target holds fewer than the configured capacity.
bool forward_complaint(ActivationContext& ctx, int local_port);

/// Recomputes down/layer/dir and, when `move` is set, expands into dir when
/// permitted. Pass move=false to refresh the compass alone.
bool layer_extension(ActivationContext& ctx, bool move = true);

/// First marker, extending-layer-marker, and retired conditions. Returns
/// true iff the particle retired.
bool marker_retired_conditions(ActivationContext& ctx);

/// Executes one full activation (the state-dispatch of the spanning forest
/// primitive). Returns true iff anything observable changed.
bool activate(ActivationContext& ctx);

/// True iff every layer-1 node holds a contracted particle.
bool layer1_filled_contracted(const Configuration& cfg, const std::vector<Node>& layer1);

}  // namespace coatsim
