#include "coatsim/scheduler.hpp"

#include <algorithm>
#include <deque>
#include <limits>
#include <numeric>
#include <random>
#include <sstream>

namespace coatsim {

const char* to_string(SchedulerPolicy p) {
  switch (p) {
    case SchedulerPolicy::RandomPermutationRounds: return "random_permutation_rounds";
    case SchedulerPolicy::UniformRandomSingles: return "uniform_random_singles";
    case SchedulerPolicy::Scripted: return "scripted";
  }
  return "?";
}

std::optional<SchedulerPolicy> scheduler_policy_from_string(const std::string& s) {
  if (s == "random_permutation_rounds" || s == "rounds")
    return SchedulerPolicy::RandomPermutationRounds;
  if (s == "uniform_random_singles" || s == "singles")
    return SchedulerPolicy::UniformRandomSingles;
  if (s == "scripted") return SchedulerPolicy::Scripted;
  return std::nullopt;
}

// ---------------------------------------------------------------------------
// Trace

int Trace::rounds_to_quiescence() const {
  for (int i = static_cast<int>(rounds.size()); i > 0; --i)
    if (rounds[static_cast<size_t>(i - 1)].any()) return i;
  return 0;
}

Configuration Trace::initial_configuration() const {
  Configuration cfg(instance.object_set(), instance.particles);
  for (int i = 0; i < cfg.particle_count(); ++i)
    if (i < static_cast<int>(chirality_offsets.size()))
      cfg.particle(i).chirality_offset = chirality_offsets[static_cast<size_t>(i)];
  return cfg;
}

void apply_round(Configuration& cfg, const RoundRecord& round) {
  for (const Movement& m : round.movements) {
    switch (m.kind) {
      case MovementKind::SoleExpansion:
      case MovementKind::HandoverExpansion: {
        Node from = m.node_from;
        Direction d(0);
        for (int i = 0; i < 6; ++i)
          if (neighbor(from, Direction(i)) == m.node_to) d = Direction(i);
        cfg.expand(m.actor, d);
        break;
      }
      case MovementKind::SoleContraction:
      case MovementKind::HandoverContraction:
        cfg.contract(m.actor);
        break;
    }
  }
  for (const StateChange& s : round.state_changes) cfg.particle(s.particle).state = s.to;
}

Configuration Trace::configuration_after(int round_count) const {
  Configuration cfg = initial_configuration();
  int upto = std::min<int>(round_count, static_cast<int>(rounds.size()));
  for (int i = 0; i < upto; ++i) apply_round(cfg, rounds[static_cast<size_t>(i)]);
  return cfg;
}

std::vector<std::vector<PathMove>> Trace::movement_sequences() const {
  std::vector<std::vector<PathMove>> m(instance.particles.size());
  for (const RoundRecord& r : rounds) {
    for (const Movement& mv : r.movements) {
      bool exp = mv.kind == MovementKind::SoleExpansion ||
                 mv.kind == MovementKind::HandoverExpansion;
      m[static_cast<size_t>(mv.actor)].push_back(
          {exp, mv.node_to, exp && mv.consumed_flag >= 0});
    }
  }
  return m;
}

// ---------------------------------------------------------------------------
// run_async

namespace {

class RoundRecorder : public EventSink {
 public:
  RoundRecord record;

  void on_movement(const Movement& m) override { record.movements.push_back(m); }
  void on_flag_created(int f, ParticleId at) override {
    record.flag_events.push_back({FlagEvent::Kind::Created, f, at, kNoParticle});
  }
  void on_flag_forwarded(int f, ParticleId from, ParticleId to) override {
    record.flag_events.push_back({FlagEvent::Kind::Forwarded, f, from, to});
  }
  void on_flag_consumed(int f, ParticleId at) override {
    record.flag_events.push_back({FlagEvent::Kind::Consumed, f, at, kNoParticle});
  }
  void on_flag_cleared(int f, ParticleId at) override {
    record.flag_events.push_back({FlagEvent::Kind::Cleared, f, at, kNoParticle});
  }
  void on_state_change(ParticleId p, ParticleState from, ParticleState to) override {
    record.state_changes.push_back({p, from, to});
  }
};

}  // namespace

Trace run_async(const Instance& inst, const ActivationSequence& seq,
                const CoatingConfig& config, int max_rounds) {
  Trace trace;
  trace.instance = inst;
  trace.config = config;
  trace.policy = seq.policy;
  trace.scheduler_seed = seq.seed;

  std::mt19937_64 chir_rng(seq.seed ^ 0x9e3779b97f4a7c15ULL);
  trace.chirality_offsets.resize(inst.particles.size());
  for (int& c : trace.chirality_offsets) c = static_cast<int>(chir_rng() % 6);

  Configuration cfg = trace.initial_configuration();
  auto election = make_election_strategy(config.election, seq.seed ^ 0xc2b2ae3d27d4eb4fULL);

  std::mt19937_64 order_rng(seq.seed);
  int n = cfg.particle_count();
  std::vector<ParticleId> perm(static_cast<size_t>(n));
  std::iota(perm.begin(), perm.end(), 0);

  for (int round = 0; round < max_rounds; ++round) {
    RoundRecorder rec;
    bool changed = false;
    auto run_one = [&](ParticleId id) {
      ActivationContext ctx{cfg, id, config, *election, &rec};
      if (activate(ctx)) changed = true;
    };

    switch (seq.policy) {
      case SchedulerPolicy::RandomPermutationRounds:
        std::shuffle(perm.begin(), perm.end(), order_rng);
        for (ParticleId id : perm) run_one(id);
        break;
      case SchedulerPolicy::UniformRandomSingles: {
        std::vector<bool> hit(static_cast<size_t>(n), false);
        int covered = 0;
        std::uniform_int_distribution<int> pick(0, n - 1);
        while (covered < n) {
          ParticleId id = pick(order_rng);
          if (!hit[static_cast<size_t>(id)]) {
            hit[static_cast<size_t>(id)] = true;
            ++covered;
          }
          run_one(id);
        }
        break;
      }
      case SchedulerPolicy::Scripted: {
        if (round >= static_cast<int>(seq.script.size())) {
          trace.quiesced = true;
          return trace;
        }
        for (ParticleId id : seq.script[static_cast<size_t>(round)]) run_one(id);
        break;
      }
    }

    trace.rounds.push_back(std::move(rec.record));
    if (!changed && seq.policy != SchedulerPolicy::Scripted) {
      trace.quiesced = true;
      trace.rounds.pop_back();  // the closing no-op round carries no information
      return trace;
    }
  }
  if (seq.policy == SchedulerPolicy::Scripted &&
      static_cast<int>(seq.script.size()) <= max_rounds) {
    trace.quiesced = true;
  } else {
    trace.round_limit_exceeded = true;
  }
  return trace;
}

// ---------------------------------------------------------------------------
// Greedy forest schedule replay

namespace {

struct FlagInfo {
  int creation_round = 0;
  ParticleId creator = kNoParticle;
  std::vector<ParticleId> chain;  // successive holders; chain[0] == creator
  std::vector<int> hop_rounds;    // round of each custody hop
  int end_round = -1;             // round of consumption/clearing, -1 if alive at end
  bool cleared = false;
};

std::vector<FlagInfo> collect_flags(const Trace& trace) {
  std::vector<FlagInfo> flags;
  auto at = [&flags](int id) -> FlagInfo& {
    if (id >= static_cast<int>(flags.size())) flags.resize(static_cast<size_t>(id) + 1);
    return flags[static_cast<size_t>(id)];
  };
  for (size_t r = 0; r < trace.rounds.size(); ++r)
    for (const FlagEvent& e : trace.rounds[r].flag_events) {
      FlagInfo& f = at(e.flag_id);
      switch (e.kind) {
        case FlagEvent::Kind::Created:
          f.creation_round = static_cast<int>(r);
          f.creator = e.from;
          f.chain = {e.from};
          break;
        case FlagEvent::Kind::Forwarded:
          f.chain.push_back(e.to);
          f.hop_rounds.push_back(static_cast<int>(r));
          break;
        case FlagEvent::Kind::Consumed:
          f.end_round = static_cast<int>(r);
          break;
        case FlagEvent::Kind::Cleared:
          f.end_round = static_cast<int>(r);
          f.cleared = true;
          break;
      }
    }
  return flags;
}

bool nodes_adjacent(const ParticlePlacement& a, const ParticlePlacement& b) {
  return distance(a.head, b.head) == 1 || distance(a.head, b.tail) == 1 ||
         distance(a.tail, b.head) == 1 || distance(a.tail, b.tail) == 1;
}

}  // namespace

ScheduleBuildResult build_greedy_forest_schedule(const Trace& trace, ScheduleMode mode) {
  const bool complaint = mode == ScheduleMode::ComplaintBasedParallel;
  const int n = trace.instance.n();
  const auto M = trace.movement_sequences();
  const NodeSet object = trace.instance.object_set();

  ParallelSchedule sched;
  sched.mode = mode;
  sched.object = object;

  std::vector<ParticlePlacement> pos(static_cast<size_t>(n));
  for (int i = 0; i < n; ++i) {
    Node v = trace.instance.particles[static_cast<size_t>(i)];
    pos[static_cast<size_t>(i)] = {v, v};
  }
  std::vector<size_t> next(static_cast<size_t>(n), 0);

  // Per-node entry order: when several particles pass through one node,
  // replayed entries must keep the async order, or an early entrant can
  // settle on a node a predecessor still has to cross.
  std::unordered_map<Node, std::deque<ParticleId>, NodeHash> entries;
  // Release times: a movement may not be replayed before the round that
  // performed it asynchronously. Without this gate the parallel schedule
  // overtakes the asynchronous execution wherever the algorithm paused for
  // state transitions or complaint flags, and the dominance guarantee
  // (async ahead at every index) would not hold.
  std::vector<std::vector<int>> release(static_cast<size_t>(n));
  for (size_t r = 0; r < trace.rounds.size(); ++r)
    for (const Movement& m : trace.rounds[r].movements) {
      if (m.kind == MovementKind::SoleExpansion ||
          m.kind == MovementKind::HandoverExpansion)
        entries[m.node_to].push_back(m.actor);
      release[static_cast<size_t>(m.actor)].push_back(static_cast<int>(r) + 1);
    }

  // Fixed seeded iteration order for the greedy subset selection.
  std::vector<ParticleId> order(static_cast<size_t>(n));
  std::iota(order.begin(), order.end(), 0);
  std::mt19937_64 order_rng(trace.scheduler_seed ^ 0x5bf0363546f94a1fULL);
  std::shuffle(order.begin(), order.end(), order_rng);

  // Complaint flags replay the exact event sequence of the trace: creations,
  // custody hops and clearings are retried in trace order, no earlier than
  // the round that performed them asynchronously. When nothing lags, every
  // event fires exactly at its own round, custody matches the rounds
  // config-for-config, and the two-flag buffering bound carries over. A
  // flag may hop several times in one step; the pipelined passes mirror
  // what one asynchronous round did.
  const std::vector<FlagInfo> flags = complaint ? collect_flags(trace) : std::vector<FlagInfo>{};
  struct FEv {
    int flag;
    int ord;  // position in this flag's own event sequence
    FlagEvent::Kind kind;
    ParticleId from, to;
  };
  std::vector<std::vector<FEv>> evs;  // flag events per trace round
  std::vector<int> evt_done(flags.size(), 0), evt_total(flags.size(), 0);
  std::vector<int> holder(flags.size(), -1);  // -1: absent (uncreated or ended)
  std::vector<bool> ended(flags.size(), false);
  std::vector<int> load(static_cast<size_t>(n), 0);  // flags currently held
  // Which flag each particle's successive consuming expansions consumed.
  std::vector<std::deque<int>> to_consume(static_cast<size_t>(n));
  if (complaint) {
    evs.resize(trace.rounds.size());
    for (size_t r = 0; r < trace.rounds.size(); ++r)
      for (const FlagEvent& e : trace.rounds[r].flag_events)
        evs[r].push_back({e.flag_id, evt_total[static_cast<size_t>(e.flag_id)]++,
                          e.kind, e.from, e.to});
    for (const RoundRecord& r : trace.rounds)
      for (const Movement& m : r.movements)
        if (m.consumed_flag >= 0)
          to_consume[static_cast<size_t>(m.actor)].push_back(m.consumed_flag);
  }

  auto flag_pass = [&](ParallelStep& step, int step_index, bool& progressed) {
    if (!complaint) return;
    bool again = true;
    while (again) {
      again = false;
      size_t rmax = std::min(static_cast<size_t>(step_index) + 1, evs.size());
      for (size_t r = 0; r < rmax; ++r)
        for (const FEv& e : evs[r]) {
          size_t f = static_cast<size_t>(e.flag);
          if (e.ord != evt_done[f]) continue;  // not this flag's next event
          size_t sfrom = static_cast<size_t>(e.from);
          switch (e.kind) {
            case FlagEvent::Kind::Created:
              if (load[sfrom] >= 2) continue;
              holder[f] = e.from;
              ++load[sfrom];
              break;
            case FlagEvent::Kind::Forwarded: {
              size_t sto = static_cast<size_t>(e.to);
              // A receiver that still has to consume a flag may buffer a
              // third one: its own consumption can lag a step whenever a
              // passive handover contraction already spent its movement,
              // and holding the overdue hop back instead would break the
              // complaint-distance dominance on uphill custody chains.
              if (load[sto] >= 2 && (load[sto] >= 3 || to_consume[sto].empty()))
                continue;
              // Final delivery of a flag that gets consumed must not starve
              // the flag the consumer needs first: deliver out of recorded
              // consumption order only while the earlier flag is already
              // here or a buffer slot stays free for it.
              if (e.ord + 2 == evt_total[f] && !flags[f].cleared &&
                  flags[f].end_round >= 0) {
                if (to_consume[sto].empty()) continue;
                int front = to_consume[sto].front();
                if (front != e.flag &&
                    holder[static_cast<size_t>(front)] != e.to && load[sto] >= 1)
                  continue;
              }
              --load[sfrom];
              ++load[sto];
              holder[f] = e.to;
              break;
            }
            case FlagEvent::Kind::Consumed:
              continue;  // emitted by the consuming expansion itself
            case FlagEvent::Kind::Cleared:
              --load[sfrom];
              holder[f] = -1;
              ended[f] = true;
              break;
          }
          ++evt_done[f];
          step.flag_events.push_back({e.kind, e.flag, e.from, e.to});
          progressed = true;
          again = true;
        }
    }
  };

  auto snapshot_flags = [&]() {
    if (complaint) sched.flag_holders.push_back(holder);
  };

  sched.configs.push_back(pos);
  snapshot_flags();

  size_t total_moves = 0;
  for (const auto& m : M) total_moves += m.size();
  size_t done_moves = 0;
  const size_t step_cap = 4 * (total_moves + trace.rounds.size() + flags.size()) + 64;

  while (done_moves < total_moves) {
    if (sched.steps.size() > step_cap) {
      std::ostringstream os;
      os << "IncompatibleTrace: replay exceeded " << step_cap << " steps with "
         << (total_moves - done_moves) << " movements pending";
      return {std::nullopt, os.str()};
    }
    ParallelStep step;
    bool progressed = false;
    int step_index = static_cast<int>(sched.steps.size());

    // Occupancy at step start.
    std::unordered_map<Node, ParticleId, NodeHash> occ;
    for (int i = 0; i < n; ++i) {
      occ[pos[static_cast<size_t>(i)].head] = i;
      occ[pos[static_cast<size_t>(i)].tail] = i;
    }

    // Flag transport first, so a flag delivered this step can be consumed
    // by an expansion in the same step, as the asynchronous round did.
    flag_pass(step, step_index, progressed);

    std::vector<bool> moved(static_cast<size_t>(n), false);
    std::unordered_map<Node, size_t, NodeHash> vacated;  // node -> movement index in step
    NodeSet claimed;

    // Contractions first.
    for (ParticleId p : order) {
      size_t sp = static_cast<size_t>(p);
      if (next[sp] >= M[sp].size()) continue;
      const PathMove& mv = M[sp][next[sp]];
      if (mv.is_expansion) continue;
      if (release[sp][next[sp]] > step_index + 1) continue;
      Node freed = pos[sp].tail;
      step.movements.push_back(
          {MovementKind::SoleContraction, p, kNoParticle, freed, mv.target, -1});
      vacated[freed] = step.movements.size() - 1;
      pos[sp].tail = pos[sp].head;
      moved[sp] = true;
      ++next[sp];
      ++done_moves;
      progressed = true;
    }

    // Expansions: into nodes empty at step start, or into a node vacated by
    // a contraction in this step (a handover).
    for (ParticleId p : order) {
      size_t sp = static_cast<size_t>(p);
      if (moved[sp] || next[sp] >= M[sp].size()) continue;
      const PathMove& mv = M[sp][next[sp]];
      if (!mv.is_expansion) continue;
      if (release[sp][next[sp]] > step_index + 1) continue;
      if (complaint && mv.consuming &&
          (to_consume[sp].empty() || holder[static_cast<size_t>(to_consume[sp].front())] != p))
        continue;
      Node target = mv.target;
      if (object.count(target) || claimed.count(target)) continue;
      if (entries[target].front() != p) continue;  // keep per-node entry order
      auto occ_it = occ.find(target);
      bool occupied_at_start = occ_it != occ.end();
      auto vac_it = vacated.find(target);
      bool is_handover = vac_it != vacated.end();
      if (occupied_at_start && !is_handover) continue;
      int consumed = -1;
      if (complaint && mv.consuming) {
        consumed = to_consume[sp].front();
        to_consume[sp].pop_front();
        holder[static_cast<size_t>(consumed)] = -1;
        ended[static_cast<size_t>(consumed)] = true;
        --load[sp];
        ++evt_done[static_cast<size_t>(consumed)];
        step.flag_events.push_back({FlagEvent::Kind::Consumed, consumed, p, kNoParticle});
      }
      MovementKind kind = MovementKind::SoleExpansion;
      ParticleId partner = kNoParticle;
      if (is_handover) {
        Movement& cm = step.movements[vac_it->second];
        cm.kind = MovementKind::HandoverContraction;
        cm.partner = p;
        kind = MovementKind::HandoverExpansion;
        partner = cm.actor;
      }
      step.movements.push_back({kind, p, partner, pos[sp].head, target, consumed});
      entries[target].pop_front();
      claimed.insert(target);
      pos[sp].tail = pos[sp].head;
      pos[sp].head = target;
      moved[sp] = true;
      ++next[sp];
      ++done_moves;
      progressed = true;
    }

    // Consumptions free capacity, so retry pending flag events.
    flag_pass(step, step_index, progressed);

    if (!progressed) {
      // A step may legitimately pass with nothing to do while the replay
      // waits for a release time still ahead of it; only a stall with every
      // pending movement already released is an error.
      bool waiting = false;
      for (int i = 0; i < n && !waiting; ++i) {
        size_t si = static_cast<size_t>(i);
        if (next[si] < M[si].size() && release[si][next[si]] > step_index + 1)
          waiting = true;
      }
      // A flag may also wait several steps for capacity downstream or for
      // an event round still ahead of the replay.
      if (complaint && !waiting)
        for (size_t f = 0; f < flags.size() && !waiting; ++f)
          waiting = evt_done[f] < evt_total[f];
      if (!waiting) {
        std::ostringstream os;
        os << "IncompatibleTrace: stalled at step " << step_index << " with "
           << (total_moves - done_moves) << " movements pending;";
        int listed = 0;
        for (int i = 0; i < n && listed < 8; ++i) {
          size_t si = static_cast<size_t>(i);
          if (next[si] >= M[si].size()) continue;
          const PathMove& mv = M[si][next[si]];
          os << " p" << i << (mv.is_expansion ? " E(" : " C(") << mv.target.q << ","
             << mv.target.r << ")" << (mv.consuming ? "*" : "") << " rel="
             << release[si][next[si]] << " held=" << load[si];
          ++listed;
        }
        return {std::nullopt, os.str()};
      }
    }
    sched.steps.push_back(std::move(step));
    sched.configs.push_back(pos);
    snapshot_flags();
  }

  sched.complete = true;
  return {std::move(sched), ""};
}

// ---------------------------------------------------------------------------
// validate_parallel_schedule

CheckReport validate_parallel_schedule(const ParallelSchedule& sched) {
  auto fail = [](std::string msg) { return CheckReport{false, std::move(msg)}; };
  if (sched.configs.size() != sched.steps.size() + 1)
    return fail("config/step count mismatch");
  const bool complaint = sched.mode == ScheduleMode::ComplaintBasedParallel;

  for (size_t ci = 0; ci < sched.configs.size(); ++ci) {
    const auto& cfg = sched.configs[ci];
    std::unordered_map<Node, int, NodeHash> occ;
    for (size_t p = 0; p < cfg.size(); ++p) {
      for (Node v : {cfg[p].head, cfg[p].tail}) {
        if (sched.object.count(v))
          return fail("config " + std::to_string(ci) + ": particle on object node");
        auto [it, fresh] = occ.emplace(v, static_cast<int>(p));
        if (!fresh && it->second != static_cast<int>(p))
          return fail("config " + std::to_string(ci) + ": node occupied twice");
        if (cfg[p].contracted()) break;
      }
      if (!cfg[p].contracted() && distance(cfg[p].head, cfg[p].tail) != 1)
        return fail("config " + std::to_string(ci) + ": head/tail not adjacent");
    }
    if (complaint && ci < sched.flag_holders.size()) {
      std::vector<int> count(cfg.size(), 0);
      for (int h : sched.flag_holders[ci])
        if (h >= 0) ++count[static_cast<size_t>(h)];
      for (size_t p = 0; p < cfg.size(); ++p) {
        if (count[p] <= 2) continue;
        if (count[p] > 3)
          return fail("config " + std::to_string(ci) +
                      ": particle holds more than three complaint flags");
        // A third flag may buffer only while the holder still has a
        // consumption ahead of it (its consuming movement lags whenever a
        // passive handover contraction spent the one movement per step).
        bool pending = false;
        for (size_t s = ci; s < sched.steps.size() && !pending; ++s)
          for (const FlagEvent& e : sched.steps[s].flag_events)
            if (e.kind == FlagEvent::Kind::Consumed &&
                e.from == static_cast<ParticleId>(p)) {
              pending = true;
              break;
            }
        if (!pending)
          return fail("config " + std::to_string(ci) +
                      ": particle buffers a third complaint flag with no "
                      "pending consumption");
      }
    }
  }

  for (size_t si = 0; si < sched.steps.size(); ++si) {
    const auto& before = sched.configs[si];
    const auto& after = sched.configs[si + 1];
    const ParallelStep& step = sched.steps[si];
    std::string at = "step " + std::to_string(si) + ": ";

    std::unordered_map<Node, int, NodeHash> occ_before;
    for (size_t p = 0; p < before.size(); ++p) {
      occ_before[before[p].head] = static_cast<int>(p);
      occ_before[before[p].tail] = static_cast<int>(p);
    }

    std::vector<int> moves_per(before.size(), 0);
    NodeSet vacated, expansion_targets;
    for (const Movement& m : step.movements)
      if (m.kind == MovementKind::SoleContraction ||
          m.kind == MovementKind::HandoverContraction)
        vacated.insert(m.node_from);

    std::vector<ParticlePlacement> sim = before;
    for (const Movement& m : step.movements) {
      size_t a = static_cast<size_t>(m.actor);
      if (a >= sim.size()) return fail(at + "unknown actor");
      if (++moves_per[a] > 1)
        return fail(at + "particle " + std::to_string(m.actor) +
                    " performs more than one movement");
      switch (m.kind) {
        case MovementKind::SoleExpansion:
        case MovementKind::HandoverExpansion: {
          if (!sim[a].contracted()) return fail(at + "expansion of expanded particle");
          if (distance(sim[a].head, m.node_to) != 1)
            return fail(at + "expansion target not adjacent");
          if (!expansion_targets.insert(m.node_to).second)
            return fail(at + "two expansions into one node");
          bool empty_before = occ_before.find(m.node_to) == occ_before.end() &&
                              !sched.object.count(m.node_to);
          if (!empty_before && !vacated.count(m.node_to))
            return fail(at + "expansion into occupied, non-vacated node");
          if (m.kind == MovementKind::HandoverExpansion && !vacated.count(m.node_to))
            return fail(at + "handover expansion without matching contraction");
          sim[a].tail = sim[a].head;
          sim[a].head = m.node_to;
          break;
        }
        case MovementKind::SoleContraction:
        case MovementKind::HandoverContraction:
          if (sim[a].contracted()) return fail(at + "contraction of contracted particle");
          if (!(sim[a].tail == m.node_from)) return fail(at + "contraction frees wrong node");
          sim[a].tail = sim[a].head;
          break;
      }
    }
    if (sim != after) return fail(at + "movements do not produce the next configuration");

    if (complaint) {
      const auto& hb = sched.flag_holders[si];
      const auto& ha = sched.flag_holders[si + 1];
      // Replay the step's flag events in order. Creations, custody hops,
      // clearings and consumptions pipeline freely within one step, exactly
      // as they do within one asynchronous round; custody must stay
      // consistent, and the two-flag buffering bound is checked at the
      // configuration boundaries (in-step events count as simultaneous).
      std::vector<int> sim_h = hb;
      for (const FlagEvent& e : step.flag_events) {
        size_t f = static_cast<size_t>(e.flag_id);
        if (f >= sim_h.size()) return fail(at + "unknown flag");
        switch (e.kind) {
          case FlagEvent::Kind::Created:
            if (sim_h[f] != -1) return fail(at + "bad flag creation");
            sim_h[f] = e.from;
            break;
          case FlagEvent::Kind::Forwarded:
            if (sim_h[f] != e.from) return fail(at + "bad flag forward");
            sim_h[f] = e.to;
            break;
          case FlagEvent::Kind::Consumed: {
            if (sim_h[f] != e.from) return fail(at + "bad flag consumption");
            sim_h[f] = -1;
            bool expanded_now =
                std::any_of(step.movements.begin(), step.movements.end(), [&](const Movement& m) {
                  return m.actor == e.from && m.consumed_flag == e.flag_id;
                });
            if (!expanded_now)
              return fail(at + "flag consumed without a consuming expansion");
            break;
          }
          case FlagEvent::Kind::Cleared:
            if (sim_h[f] != e.from) return fail(at + "bad flag clearing");
            sim_h[f] = -1;
            break;
        }
      }
      for (size_t f = 0; f < hb.size(); ++f)
        if (sim_h[f] != ha[f])
          return fail(at + "flag holders do not match the step's events");
    }
  }
  return {};
}

// ---------------------------------------------------------------------------
// check_dominance

namespace {

struct CumCounts {
  std::vector<int> exp, con;  // per particle
};

/// Cumulative movement counts after each index (size = len+1, index 0 = C_0).
template <typename Seq, typename GetMovements>
std::vector<CumCounts> cumulative(const Seq& seq, int n, GetMovements get) {
  std::vector<CumCounts> out;
  CumCounts cur{std::vector<int>(static_cast<size_t>(n), 0),
                std::vector<int>(static_cast<size_t>(n), 0)};
  out.push_back(cur);
  for (const auto& rec : seq) {
    for (const Movement& m : get(rec)) {
      size_t a = static_cast<size_t>(m.actor);
      if (m.kind == MovementKind::SoleExpansion ||
          m.kind == MovementKind::HandoverExpansion)
        ++cur.exp[a];
      else
        ++cur.con[a];
    }
    out.push_back(cur);
  }
  return out;
}

/// Holder of every flag after each index; -1 uncreated, -2 gone.
template <typename Seq, typename GetEvents>
std::vector<std::vector<int>> flag_history(const Seq& seq, size_t flag_count,
                                           GetEvents get) {
  std::vector<std::vector<int>> out;
  std::vector<int> cur(flag_count, -1);
  out.push_back(cur);
  for (const auto& rec : seq) {
    for (const FlagEvent& e : get(rec)) {
      size_t f = static_cast<size_t>(e.flag_id);
      if (f >= cur.size()) continue;
      switch (e.kind) {
        case FlagEvent::Kind::Created: cur[f] = e.from; break;
        case FlagEvent::Kind::Forwarded: cur[f] = e.to; break;
        case FlagEvent::Kind::Consumed:
        case FlagEvent::Kind::Cleared: cur[f] = -2; break;
      }
    }
    out.push_back(cur);
  }
  return out;
}

}  // namespace

CheckReport check_dominance(const Trace& trace, const ParallelSchedule& sched) {
  const int n = trace.instance.n();
  auto a_cum = cumulative(trace.rounds, n, [](const RoundRecord& r) -> const auto& {
    return r.movements;
  });
  auto p_cum = cumulative(sched.steps, n, [](const ParallelStep& s) -> const auto& {
    return s.movements;
  });
  const auto M = trace.movement_sequences();

  size_t len = std::max(a_cum.size(), p_cum.size());
  for (size_t i = 0; i < len; ++i) {
    const CumCounts& a = a_cum[std::min(i, a_cum.size() - 1)];
    const CumCounts& p = p_cum[std::min(i, p_cum.size() - 1)];
    for (int q = 0; q < n; ++q) {
      size_t sq = static_cast<size_t>(q);
      // Equal totals at the end; async must never be behind (its head/tail
      // distances along P_q must be <= the parallel ones).
      if (a.exp[sq] < p.exp[sq] || a.con[sq] < p.con[sq]) {
        std::ostringstream os;
        os << "dominance violation at index " << i << ", particle " << q
           << " (async exp/con " << a.exp[sq] << "/" << a.con[sq] << ", parallel "
           << p.exp[sq] << "/" << p.con[sq] << ")";
        return {false, os.str()};
      }
    }
  }

  if (sched.mode == ScheduleMode::ComplaintBasedParallel) {
    const auto flags = collect_flags(trace);
    auto a_flags = flag_history(trace.rounds, flags.size(), [](const RoundRecord& r) -> const auto& {
      return r.flag_events;
    });
    auto p_flags = flag_history(sched.steps, flags.size(), [](const ParallelStep& s) -> const auto& {
      return s.flag_events;
    });
    std::vector<int> total_exp(static_cast<size_t>(n), 0);
    for (int q = 0; q < n; ++q) {
      for (const PathMove& m : M[static_cast<size_t>(q)])
        if (m.is_expansion) ++total_exp[static_cast<size_t>(q)];
    }
    auto dc_of = [&](int h, size_t f, const CumCounts& cum) {
      if (h == -2) return 0;                            // consumed or cleared
      if (h == -1) h = flags[f].creator;                // not yet created: rides its creator
      size_t sh = static_cast<size_t>(h);
      return total_exp[sh] - cum.exp[sh];
    };
    for (size_t i = 0; i < len; ++i) {
      const auto& ah = a_flags[std::min(i, a_flags.size() - 1)];
      const auto& ph = p_flags[std::min(i, p_flags.size() - 1)];
      const CumCounts& ac = a_cum[std::min(i, a_cum.size() - 1)];
      const CumCounts& pc = p_cum[std::min(i, p_cum.size() - 1)];
      for (size_t f = 0; f < flags.size(); ++f) {
        int a_dc = dc_of(ah[f], f, ac);
        int p_dc = dc_of(ph[f], f, pc);
        if (a_dc > p_dc) {
          std::ostringstream os;
          os << "complaint-distance dominance violation at index " << i << ", flag " << f
             << " (async " << a_dc << " > parallel " << p_dc << ")";
          return {false, os.str()};
        }
      }
    }
  }
  return {};
}

// ---------------------------------------------------------------------------
// check_expanded_parent_invariant

CheckReport check_expanded_parent_invariant(const Trace& trace,
                                            const ParallelSchedule& sched) {
  const int n = trace.instance.n();
  const auto M = trace.movement_sequences();
  auto p_cum = cumulative(sched.steps, n, [](const ParallelStep& s) -> const auto& {
    return s.movements;
  });

  for (size_t ci = 0; ci < sched.configs.size(); ++ci) {
    const auto& cfg = sched.configs[ci];
    const CumCounts& cum = p_cum[ci];
    std::unordered_map<Node, int, NodeHash> occ;
    for (size_t p = 0; p < cfg.size(); ++p) {
      occ[cfg[p].head] = static_cast<int>(p);
      occ[cfg[p].tail] = static_cast<int>(p);
    }
    // children[q] = next pending movement of q expands into a node occupied
    // by its parent.
    std::vector<std::vector<int>> children(cfg.size());
    for (int q = 0; q < n; ++q) {
      size_t sq = static_cast<size_t>(q);
      size_t done = static_cast<size_t>(cum.exp[sq] + cum.con[sq]);
      if (done >= M[sq].size()) continue;
      const PathMove& mv = M[sq][done];
      if (!mv.is_expansion) continue;
      auto it = occ.find(mv.target);
      if (it != occ.end() && it->second != q)
        children[static_cast<size_t>(it->second)].push_back(q);
    }
    for (size_t p = 0; p < cfg.size(); ++p) {
      if (cfg[p].contracted() || children[p].empty()) continue;
      bool has_contracted = std::any_of(children[p].begin(), children[p].end(), [&](int q) {
        return cfg[static_cast<size_t>(q)].contracted();
      });
      if (!has_contracted) {
        std::ostringstream os;
        os << (ci == 0 ? "precondition violated" : "violation") << " at configuration "
           << ci << ": expanded parent " << p << " has only expanded children";
        return {false, os.str()};
      }
    }
  }
  return {};
}

// ---------------------------------------------------------------------------
// check_layer1_progress_window

CheckReport check_layer1_progress_window(const Trace& trace) {
  NodeSet object = trace.instance.object_set();
  std::vector<Node> layer1 = layer_nodes(1, object);
  NodeSet l1set(layer1.begin(), layer1.end());

  // Per-round snapshots of what the window test needs: flag holders,
  // layer-1 fullness, and which particles did what.
  size_t rounds = trace.rounds.size();
  Configuration cfg = trace.initial_configuration();

  auto layer1_full = [&]() {
    return std::all_of(layer1.begin(), layer1.end(),
                       [&](Node v) { return !cfg.is_empty(v); });
  };
  auto in_l1 = [&](const Configuration& c, ParticleId p) {
    const Particle& q = c.particle(p);
    return l1set.count(q.head) > 0 || l1set.count(q.tail) > 0;
  };

  std::unordered_map<int, ParticleId> holder;
  // holders[r][f] = holder of flag f at configuration r (absent if dead).
  std::vector<std::unordered_map<int, ParticleId>> holders(rounds + 1);
  std::vector<bool> full(rounds + 1, false);
  // events[r] summarised per flag / per particle.
  struct RoundFacts {
    std::set<int> hopped;             // forwarded, consumed, or cleared
    std::set<ParticleId> shed;        // gave up some flag
    std::set<ParticleId> advanced;    // expanded
    bool consumed = false;
  };
  std::vector<RoundFacts> facts(rounds);

  holders[0] = holder;
  full[0] = layer1_full();
  for (size_t r = 0; r < rounds; ++r) {
    for (const FlagEvent& e : trace.rounds[r].flag_events) {
      switch (e.kind) {
        case FlagEvent::Kind::Created:
          holder[e.flag_id] = e.from;
          break;
        case FlagEvent::Kind::Forwarded:
          holder[e.flag_id] = e.to;
          facts[r].hopped.insert(e.flag_id);
          facts[r].shed.insert(e.from);
          break;
        case FlagEvent::Kind::Consumed:
          facts[r].consumed = true;
          [[fallthrough]];
        case FlagEvent::Kind::Cleared:
          holder.erase(e.flag_id);
          facts[r].hopped.insert(e.flag_id);
          facts[r].shed.insert(e.from);
          break;
      }
    }
    for (const Movement& m : trace.rounds[r].movements)
      if (m.kind == MovementKind::SoleExpansion ||
          m.kind == MovementKind::HandoverExpansion)
        facts[r].advanced.insert(m.actor);
    apply_round(cfg, trace.rounds[r]);
    holders[r + 1] = holder;
    full[r + 1] = layer1_full();
  }

  // Recompute layer-1 membership of holders, particle positions, and the
  // nodes of saturated layer-1 particles (buffering two flags) per
  // configuration.
  cfg = trace.initial_configuration();
  std::vector<std::unordered_map<int, char>> l1_held(rounds + 1);
  std::vector<std::unordered_map<ParticleId, std::pair<Node, Node>>> spots(rounds + 1);
  std::vector<NodeSet> saturated(rounds + 1);
  for (size_t r = 0; r <= rounds; ++r) {
    std::unordered_map<ParticleId, int> count;
    for (const auto& [f, p] : holders[r]) {
      l1_held[r][f] = in_l1(cfg, p) ? 1 : 0;
      const Particle& q = cfg.particle(p);
      spots[r][p] = {q.head, q.tail};
      ++count[p];
    }
    for (const auto& [p, k] : count)
      if (k >= 2 && in_l1(cfg, p)) {
        const Particle& q = cfg.particle(p);
        saturated[r].insert(q.head);
        saturated[r].insert(q.tail);
      }
    if (r < rounds) apply_round(cfg, trace.rounds[r]);
  }

  // The property describes runs with enough particles to finish layer 1;
  // with fewer, flags legitimately park at super-roots that have nobody
  // left to admit. Nothing to assert in that regime.
  size_t horizon = rounds + 1;
  for (size_t r = 0; r <= rounds; ++r)
    if (full[r]) {
      horizon = r;
      break;
    }
  if (horizon > rounds) return {};

  // The two-round window of the capacity-one analysis stretches by one
  // round here: a holder buffering two flags forwards one per round, so
  // the other can wait a full extra round before it is this flag's turn.
  constexpr size_t kWindow = 3;
  for (size_t i = 0; i + kWindow <= std::min(horizon, rounds); ++i) {
    // (i): a complaint flag is consumed within the window.
    bool consumed = false;
    for (size_t s = i; s < i + kWindow && !consumed; ++s) consumed = facts[s].consumed;
    if (consumed) continue;
    // (ii): some flag newly reaches a particle in layer 1.
    bool arrived = false;
    for (const auto& [f, held] : l1_held[i + kWindow]) {
      if (!held) continue;
      auto it = l1_held[i].find(f);
      if (it == l1_held[i].end() || !it->second) {
        arrived = true;
        break;
      }
    }
    if (arrived) continue;
    // (iv): layer 1 completely filled (possibly with expanded particles).
    bool filled = false;
    for (size_t c = i + 1; c <= i + kWindow && !filled; ++c) filled = full[c];
    if (filled) continue;
    // (iii): every flag held in layer 1 moves closer to a super-root. A
    // flag progresses by hopping down its custody chain or by riding a
    // holder that expands; a holder buffering two flags forwards one per
    // round, which counts as progress for the pair it rotates. A flag
    // stalled next to a saturated layer-1 particle is legitimate
    // back-pressure: the queue ahead of it must drain first.
    bool all_progress = true;
    for (const auto& [f, held] : l1_held[i]) {
      if (!held) continue;
      bool ok = false;
      ParticleId h = holders[i].at(f);
      for (size_t s = i; s < i + kWindow && !ok; ++s)
        ok = facts[s].hopped.count(f) > 0 || facts[s].advanced.count(h) > 0 ||
             facts[s].shed.count(h) > 0;
      for (size_t c = i; c <= i + kWindow && !ok; ++c) {
        auto it = spots[c].find(h);
        if (it == spots[c].end()) continue;
        for (Node u : {it->second.first, it->second.second})
          for (int d = 0; d < 6 && !ok; ++d)
            ok = saturated[c].count(neighbor(u, Direction(d))) > 0;
      }
      if (!ok) {
        all_progress = false;
        break;
      }
    }
    if (all_progress) continue;
    std::ostringstream os;
    os << "no layer-1 progress in window [" << i << ", " << i + kWindow << ")";
    return {false, os.str()};
  }
  return {};
}

}  // namespace coatsim
