#pragma once

#include <optional>
#include <string>
#include <vector>

#include "coatsim/coating.hpp"
#include "coatsim/core.hpp"

namespace coatsim {

enum class SchedulerPolicy { RandomPermutationRounds, UniformRandomSingles, Scripted };

const char* to_string(SchedulerPolicy p);
std::optional<SchedulerPolicy> scheduler_policy_from_string(const std::string& s);

/// Fair asynchronous activation order. RandomPermutationRounds draws a new
/// uniform permutation each round; UniformRandomSingles activates uniformly
/// random particles and closes a round once everyone has been hit at least
/// once; Scripted replays `script` (one particle list per round) for tests.
struct ActivationSequence {
  SchedulerPolicy policy = SchedulerPolicy::RandomPermutationRounds;
  uint64_t seed = 0;
  std::vector<std::vector<ParticleId>> script;
};

struct FlagEvent {
  enum class Kind { Created, Forwarded, Consumed, Cleared };
  Kind kind = Kind::Created;
  int flag_id = -1;
  ParticleId from = kNoParticle;  // holder (Created/Consumed/Cleared) or sender
  ParticleId to = kNoParticle;    // receiver (Forwarded only)

  friend bool operator==(const FlagEvent&, const FlagEvent&) = default;
};

struct StateChange {
  ParticleId particle = kNoParticle;
  ParticleState from = ParticleState::Idle;
  ParticleState to = ParticleState::Idle;

  friend bool operator==(const StateChange&, const StateChange&) = default;
};

struct RoundRecord {
  std::vector<Movement> movements;
  std::vector<FlagEvent> flag_events;
  std::vector<StateChange> state_changes;

  bool any() const {
    return !movements.empty() || !flag_events.empty() || !state_changes.empty();
  }
  friend bool operator==(const RoundRecord&, const RoundRecord&) = default;
};

/// One movement of a particle's recorded sequence M(p), reduced to what a
/// parallel replay needs.
struct PathMove {
  bool is_expansion = false;
  Node target;           // expansion head target; contraction resulting node
  bool consuming = false;  // expansion consumed a complaint flag
};

struct Trace {
  Instance instance;
  CoatingConfig config;
  SchedulerPolicy policy = SchedulerPolicy::RandomPermutationRounds;
  uint64_t scheduler_seed = 0;
  std::vector<int> chirality_offsets;  // one per particle, drawn from the seed
  std::vector<RoundRecord> rounds;
  bool quiesced = false;
  bool round_limit_exceeded = false;

  /// Index of the last round containing any event, plus one.
  int rounds_to_quiescence() const;
  Configuration initial_configuration() const;
  /// Position-only replay of the first `round_count` rounds of movements.
  Configuration configuration_after(int round_count) const;
  /// M(p) for every particle, in trace order.
  std::vector<std::vector<PathMove>> movement_sequences() const;
};

/// Applies one recorded round (movements then state changes) to a live
/// configuration; used for incremental replay.
void apply_round(Configuration& cfg, const RoundRecord& round);

/// Runs the coating algorithm under the given activation policy until a
/// full round passes with no observable change, or `max_rounds` is hit
/// (trace flagged round_limit_exceeded).
Trace run_async(const Instance& inst, const ActivationSequence& seq,
                const CoatingConfig& config, int max_rounds);

enum class ScheduleMode { Parallel, ComplaintBasedParallel };

struct ParticlePlacement {
  Node head;
  Node tail;
  bool contracted() const { return head == tail; }
  friend bool operator==(const ParticlePlacement&, const ParticlePlacement&) = default;
};

struct ParallelStep {
  std::vector<Movement> movements;
  std::vector<FlagEvent> flag_events;  // complaint mode only
};

/// A synchronous schedule C_0..C_t with explicit per-step configurations.
/// flag_holders[i][f] is the particle holding flag f at C_i (-1 when not
/// yet created, consumed, or cleared); empty outside complaint mode.
struct ParallelSchedule {
  ScheduleMode mode = ScheduleMode::Parallel;
  NodeSet object;
  std::vector<std::vector<ParticlePlacement>> configs;
  std::vector<ParallelStep> steps;
  std::vector<std::vector<int>> flag_holders;
  bool complete = false;  // every recorded movement was executed

  int step_count() const { return static_cast<int>(steps.size()); }
};

struct ScheduleBuildResult {
  std::optional<ParallelSchedule> schedule;
  std::string error;  // nonempty iff !schedule (IncompatibleTrace)
};

/// Replays each particle's recorded movement sequence greedily: every step
/// applies a maximal compatible subset of next-pending movements, iterating
/// particles in a fixed seeded order.
ScheduleBuildResult build_greedy_forest_schedule(
    const Trace& trace, ScheduleMode mode = ScheduleMode::Parallel);

struct CheckReport {
  bool ok = true;
  std::string message;  // first violation, empty when ok
};

/// Verifies consecutive configurations against the movement properties of
/// the schedule's mode, plus single-movement-per-particle and, in complaint
/// mode, flag capacity/forwarding/consumption rules.
CheckReport validate_parallel_schedule(const ParallelSchedule& sched);

/// Dominance of the async trace over the parallel schedule: for every index
/// i and particle p, d_h/d_t along P_p in the async execution are <= their
/// parallel counterparts; complaint mode compares the sorted multisets of
/// complaint distances as well.
CheckReport check_dominance(const Trace& trace, const ParallelSchedule& sched);

/// Every expanded particle that has children has at least one contracted
/// child, at every configuration of the schedule. Children are particles
/// whose next pending movement is a handover expansion into the parent.
CheckReport check_expanded_parent_invariant(const Trace& trace,
                                            const ParallelSchedule& sched);

/// Layer-1 progress property of the execution, truncated before layer 1
/// completes: every 3-round window consumes a flag, lands one more flag in
/// layer 1, moves every layer-1 flag closer to consumption, or finishes
/// layer 1.
CheckReport check_layer1_progress_window(const Trace& trace);

}  // namespace coatsim
