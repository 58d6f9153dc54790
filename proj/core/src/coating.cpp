#include "coatsim/coating.hpp"

#include <algorithm>
#include <cstdlib>

namespace coatsim {

namespace {

/// The port a particle's successor flag points through: parent for
/// followers, dir for roots.
std::optional<int> pointer_port(const Particle& q) {
  if (q.state == ParticleState::Follower) return q.parent_port;
  if (q.state == ParticleState::Root) return q.dir_port;
  return std::nullopt;
}

bool node_occupied_by_state(const Configuration& cfg, Node v, ParticleState s) {
  ParticleId id = cfg.occupant(v);
  return id != kNoParticle && cfg.particle(id).state == s;
}

bool node_adjacent_to_object(const Configuration& cfg, Node v) {
  for (int d = 0; d < 6; ++d)
    if (cfg.is_object(neighbor(v, Direction(d)))) return true;
  return false;
}

bool adjacent_to_object(const Configuration& cfg, const Particle& p) {
  for (int d = 0; d < 6; ++d) {
    if (cfg.is_object(neighbor(p.head, Direction(d)))) return true;
    if (p.expanded() && cfg.is_object(neighbor(p.tail, Direction(d)))) return true;
  }
  return false;
}

bool adjacent_to_state(const Configuration& cfg, const Particle& p, ParticleState s) {
  for (int d = 0; d < 6; ++d) {
    if (node_occupied_by_state(cfg, neighbor(p.head, Direction(d)), s)) return true;
    if (p.expanded() &&
        node_occupied_by_state(cfg, neighbor(p.tail, Direction(d)), s))
      return true;
  }
  return false;
}

void become(ActivationContext& ctx, ParticleState next) {
  Particle& p = ctx.particle();
  ParticleState prev = p.state;
  p.state = next;
  if (ctx.sink) ctx.sink->on_state_change(p.id, prev, next);
}

void gain_flag(ActivationContext& ctx) {
  Particle& p = ctx.particle();
  int id = ctx.cfg.next_flag_id();
  p.flags.push_back(id);
  if (ctx.sink) ctx.sink->on_flag_created(id, p.id);
}

void on_become_active_root(ActivationContext& ctx) {
  become(ctx, ParticleState::Root);
  if (ctx.config.root_generates_flag) gain_flag(ctx);
}

/// Contracted child of an expanded particle whose parent flag aims at the
/// expanded particle's tail. Only the parent flag makes a child; a root
/// whose dir happens to aim here is a predecessor relation, not a child
/// one, and counting it would let a closed ring of roots hand over in a
/// cycle forever. Enumerated by the acting particle's local labels around
/// its tail; smallest label wins ties.
ParticleId select_handover_child(const ActivationContext& ctx, bool followers_only) {
  const Particle& p = ctx.particle();
  for (int l = 0; l < 6; ++l) {
    Node w = ctx.tail_nbr(l);
    if (w == p.head) continue;
    ParticleId qid = ctx.cfg.occupant(w);
    if (qid == kNoParticle || qid == p.id) continue;
    const Particle& q = ctx.cfg.particle(qid);
    if (!q.contracted() || !q.active()) continue;
    if (followers_only && q.state != ParticleState::Follower) continue;
    // Followers aim at p's tail through their parent pointer; roots are
    // successors on the layer path and aim at it through dir.
    std::optional<int> aim =
        q.state == ParticleState::Follower ? q.parent_port : q.dir_port;
    if (!aim) continue;
    if (neighbor(q.head, q.local_to_global(*aim)) == p.tail) return qid;
  }
  return kNoParticle;
}

/// Any active particle aiming at p's tail (followers through parent, roots
/// through dir), regardless of expansion state. Used by the
/// sole-contraction guard.
bool has_tail_child(const ActivationContext& ctx) {
  const Particle& p = ctx.particle();
  for (int l = 0; l < 6; ++l) {
    Node w = ctx.tail_nbr(l);
    if (w == p.head) continue;
    ParticleId qid = ctx.cfg.occupant(w);
    if (qid == kNoParticle || qid == p.id) continue;
    const Particle& q = ctx.cfg.particle(qid);
    if (!q.active()) continue;
    std::optional<int> aim =
        q.state == ParticleState::Follower ? q.parent_port : q.dir_port;
    if (!aim) continue;
    if (neighbor(q.head, q.local_to_global(*aim)) == p.tail) return true;
  }
  return false;
}

bool has_idle_neighbor(const Configuration& cfg, const Particle& p) {
  return adjacent_to_state(cfg, p, ParticleState::Idle);
}

/// Whether anyone is still waiting to enter layer 1. Once every particle is
/// a root (or retired) the layer-1 demand is met and spent flags stay spent,
/// which is what lets the super-roots run dry and the system settle.
bool entrants_pending(const Configuration& cfg) {
  for (int i = 0; i < cfg.particle_count(); ++i) {
    ParticleState s = cfg.particle(i).state;
    if (s == ParticleState::Idle || s == ParticleState::Follower) return true;
  }
  return false;
}

/// Whether this expanded particle occupies layer 1 (tail touching the
/// object), for the follower-first handover preference.
bool tail_on_layer1(const Configuration& cfg, const Particle& p) {
  for (int d = 0; d < 6; ++d)
    if (cfg.is_object(neighbor(p.tail, Direction(d)))) return true;
  return false;
}

/// Alg. 2 expanded branch: follower child first if on layer 1, else any
/// contracted child aimed at the tail. Returns true when a handover ran.
bool try_handover_with_child(ActivationContext& ctx) {
  Particle& p = ctx.particle();
  if (p.state == ParticleState::Root && tail_on_layer1(ctx.cfg, p)) {
    // Follower children present? They take precedence; if all of them are
    // expanded no handover happens this activation.
    bool any_follower_child = false;
    for (int l = 0; l < 6; ++l) {
      Node w = ctx.tail_nbr(l);
      if (w == p.head) continue;
      ParticleId qid = ctx.cfg.occupant(w);
      if (qid == kNoParticle) continue;
      const Particle& q = ctx.cfg.particle(qid);
      if (q.state == ParticleState::Follower && q.parent_port &&
          neighbor(q.head, q.local_to_global(*q.parent_port)) == p.tail) {
        any_follower_child = true;
        break;
      }
    }
    if (any_follower_child) {
      ParticleId q = select_handover_child(ctx, /*followers_only=*/true);
      if (q == kNoParticle) return false;
      return ctx.cfg.handover(p.id, q, ctx.sink) == MoveResult::Ok;
    }
  }
  ParticleId q = select_handover_child(ctx, /*followers_only=*/false);
  if (q == kNoParticle) return false;
  return ctx.cfg.handover(p.id, q, ctx.sink) == MoveResult::Ok;
}

/// Alg. 2 contracted branch: handover with an expanded parent/predecessor
/// whose tail sits at the pointed node.
bool try_handover_with_predecessor(ActivationContext& ctx, int pointer_port) {
  Particle& p = ctx.particle();
  Node target = ctx.head_nbr(pointer_port);
  ParticleId qid = ctx.cfg.occupant(target);
  if (qid == kNoParticle) return false;
  const Particle& q = ctx.cfg.particle(qid);
  if (!q.expanded() || !(q.tail == target)) return false;
  return ctx.cfg.handover(p.id, qid, ctx.sink) == MoveResult::Ok;
}

struct DownLayer {
  int down_local;
  int layer_mod4;
  bool on_layer1;  // down points at an object node
};

/// Alg. 4 head: pick the neighbor with the smallest layer number (mod 4).
/// Evidence comes from object nodes (layer 0) and neighbors with a known
/// layer flag; among mod-4 residues present, the start of the consecutive
/// run is the minimum. Object neighbors are preferred as the down target,
/// then retired ones.
std::optional<DownLayer> compute_down_layer(const ActivationContext& ctx) {
  const Particle& p = ctx.particle();
  struct Evidence {
    int local;
    int value;
    int pref;  // 0 object, 1 retired, 2 active
  };
  std::vector<Evidence> ev;
  bool present[4] = {false, false, false, false};
  for (int l = 0; l < 6; ++l) {
    Node w = ctx.head_nbr(l);
    if (ctx.cfg.is_object(w)) {
      ev.push_back({l, 0, 0});
      present[0] = true;
      continue;
    }
    ParticleId qid = ctx.cfg.occupant(w);
    if (qid == kNoParticle) continue;
    const Particle& q = ctx.cfg.particle(qid);
    if (q.layer_mod4 < 0) continue;
    if (q.state == ParticleState::Retired)
      ev.push_back({l, q.layer_mod4, 1});
    else if (q.state == ParticleState::Root)
      ev.push_back({l, q.layer_mod4, 2});
    else
      continue;
    present[q.layer_mod4] = true;
  }
  if (ev.empty()) return std::nullopt;
  int chosen = -1;
  for (int v = 0; v < 4; ++v) {
    if (present[v] && !present[(v + 3) % 4]) {
      chosen = v;
      break;
    }
  }
  if (chosen == -1) chosen = present[0] ? 0 : ev.front().value;
  const Evidence* best = nullptr;
  for (const Evidence& e : ev) {
    if (e.value != chosen) continue;
    if (!best || e.pref < best->pref || (e.pref == best->pref && e.local < best->local))
      best = &e;
  }
  return DownLayer{best->local, (chosen + 1) % 4, best->pref == 0};
}

}  // namespace

std::optional<ClockwisePorts> clockwise(const ActivationContext& ctx, int down_local,
                                        int lower_layer_mod4) {
  auto incident = [&](int l) {
    Node w = ctx.head_nbr(l);
    if (ctx.cfg.is_object(w)) return true;
    ParticleId qid = ctx.cfg.occupant(w);
    if (qid == kNoParticle) return false;
    const Particle& q = ctx.cfg.particle(qid);
    return q.state == ParticleState::Retired && q.layer_mod4 == lower_layer_mod4;
  };
  int j = down_local, steps = 0;
  while (incident(j)) {
    j = (j + 5) % 6;
    if (++steps > 6) return std::nullopt;  // enclosed: every edge incident
  }
  int k = down_local;
  steps = 0;
  while (incident(k)) {
    k = (k + 1) % 6;
    if (++steps > 6) return std::nullopt;
  }
  return ClockwisePorts{j, k};
}

bool forward_complaint(ActivationContext& ctx, int local_port) {
  Particle& p = ctx.particle();
  if (p.flag_count() < 1) return false;
  ParticleId qid = ctx.cfg.occupant(ctx.head_nbr(local_port));
  if (qid == kNoParticle || qid == p.id) return false;
  Particle& q = ctx.cfg.particle(qid);
  if (q.flag_count() >= ctx.config.flag_capacity) return false;
  int fid = p.flags.front();
  p.flags.erase(p.flags.begin());
  q.flags.push_back(fid);
  if (ctx.sink) ctx.sink->on_flag_forwarded(fid, p.id, qid);
  return true;
}

bool layer_extension(ActivationContext& ctx, bool move) {
  Particle& p = ctx.particle();
  auto dl = compute_down_layer(ctx);
  if (!dl) return false;
  bool changed = false;
  auto set_port = [&changed](std::optional<int>& port, int v) {
    if (!port || *port != v) {
      port = v;
      changed = true;
    }
  };
  set_port(p.down_port, dl->down_local);
  if (p.layer_mod4 != dl->layer_mod4) {
    p.layer_mod4 = dl->layer_mod4;
    changed = true;
  }
  auto ports = clockwise(ctx, dl->down_local, (dl->layer_mod4 + 3) % 4);
  if (!ports) return changed;  // enclosed by surface; degenerate instance
  set_port(p.cw_port, ports->cw);
  set_port(p.ccw_port, ports->ccw);
  bool odd = (p.layer_mod4 % 2) == 1;
  set_port(p.dir_port, odd ? ports->cw : ports->ccw);
  if (!move) return changed;

  Node target = ctx.head_nbr(*p.dir_port);
  if (ctx.cfg.is_empty(target) && (!dl->on_layer1 || p.flag_count() > 0)) {
    int fid = dl->on_layer1 ? p.flags.front() : -1;
    Direction d = p.local_to_global(*p.dir_port);
    if (ctx.cfg.expand(p.id, d, ctx.sink, fid) == MoveResult::Ok) {
      changed = true;
      if (fid >= 0) {
        p.flags.erase(p.flags.begin());
        if (ctx.sink) ctx.sink->on_flag_consumed(fid, p.id);
      }
    }
  }
  return changed;
}

namespace {

void retire(ActivationContext& ctx) { become(ctx, ParticleState::Retired); }

/// Marker port for the retiring leader: the middle of the arc of ports not
/// incident to the object, i.e. the average direction of its two layer-1
/// neighbors pointing away from the surface. With an even arc the middle
/// farther from down wins, ties broken toward the CW side.
int leader_marker_port(const ActivationContext& ctx, int down_local,
                       const ClockwisePorts& ports) {
  std::vector<int> arc;  // ports strictly between cw and ccw, away side
  for (int l = (ports.cw + 5) % 6; l != ports.ccw; l = (l + 5) % 6) arc.push_back(l);
  if (arc.empty()) return (down_local + 3) % 6;
  if (arc.size() % 2 == 1) return arc[arc.size() / 2];
  int m1 = arc[arc.size() / 2 - 1];
  int m2 = arc[arc.size() / 2];
  auto circ = [&](int a) {
    int d = std::abs(a - down_local) % 6;
    return std::min(d, 6 - d);
  };
  if (circ(m2) > circ(m1)) return m2;
  return m1;
}

}  // namespace

bool marker_retired_conditions(ActivationContext& ctx) {
  Particle& p = ctx.particle();

  // First Marker Condition: the leader retires and marks the start of the
  // next layer.
  if (p.is_leader) {
    int down = -1;
    for (int l = 0; l < 6; ++l)
      if (ctx.cfg.is_object(ctx.head_nbr(l))) {
        down = l;
        break;
      }
    if (down >= 0) {
      p.down_port = down;
      p.layer_mod4 = 1;
      auto ports = clockwise(ctx, down, 0);
      if (ports) {
        p.cw_port = ports->cw;
        p.ccw_port = ports->ccw;
        p.marker_port = leader_marker_port(ctx, down, *ports);
      } else {
        p.marker_port = (down + 3) % 6;
      }
      p.is_marker = true;
      retire(ctx);
      return true;
    }
  }

  // Extending Layer Markers: a root at a marked position retires once the
  // marker below reports its whole layer retired (both its CW and CCW
  // neighbors are retired).
  for (int l = 0; l < 6; ++l) {
    Node w = ctx.head_nbr(l);
    ParticleId qid = ctx.cfg.occupant(w);
    if (qid == kNoParticle) continue;
    const Particle& q = ctx.cfg.particle(qid);
    if (q.state != ParticleState::Retired || !q.is_marker || !q.marker_port) continue;
    if (!(neighbor(q.head, q.local_to_global(*q.marker_port)) == p.head)) continue;
    if (!q.cw_port || !q.ccw_port) continue;
    Node cw_node = neighbor(q.head, q.local_to_global(*q.cw_port));
    Node ccw_node = neighbor(q.head, q.local_to_global(*q.ccw_port));
    if (!node_occupied_by_state(ctx.cfg, cw_node, ParticleState::Retired)) continue;
    if (!node_occupied_by_state(ctx.cfg, ccw_node, ParticleState::Retired)) continue;
    p.layer_mod4 = (q.layer_mod4 + 1) % 4;
    p.down_port = l;
    auto ports = clockwise(ctx, l, q.layer_mod4);
    if (ports) {
      p.cw_port = ports->cw;
      p.ccw_port = ports->ccw;
    }
    p.marker_port = (l + 3) % 6;
    p.is_marker = true;
    retire(ctx);
    return true;
  }

  // Retired Condition: a retired particle sits in direction dir.
  if (p.dir_port &&
      node_occupied_by_state(ctx.cfg, ctx.head_nbr(*p.dir_port), ParticleState::Retired)) {
    retire(ctx);
    return true;
  }
  return false;
}

bool layer1_filled_contracted(const Configuration& cfg, const std::vector<Node>& layer1) {
  for (const Node& v : layer1) {
    ParticleId id = cfg.occupant(v);
    if (id == kNoParticle || !cfg.particle(id).contracted()) return false;
  }
  return true;
}

bool OracleStrategy::step(const Configuration& cfg) {
  if (leader_) return false;
  if (layer1_.empty()) layer1_ = layer_nodes(1, cfg.object());
  if (candidates_.empty()) return false;
  if (!layer1_filled_contracted(cfg, layer1_)) return false;
  leader_ = *candidates_.begin();
  return true;
}

namespace {

/// Order nodes along the layer-1 cycle when the layer is a plain ring
/// (every node has exactly two layer-1 neighbors); lexicographic fallback
/// otherwise.
std::vector<Node> cycle_order(const std::vector<Node>& layer1) {
  NodeSet in_layer(layer1.begin(), layer1.end());
  std::unordered_map<Node, std::vector<Node>, NodeHash> adj;
  for (const Node& v : layer1) {
    for (int d = 0; d < 6; ++d) {
      Node w = neighbor(v, Direction(d));
      if (in_layer.count(w)) adj[v].push_back(w);
    }
  }
  for (const Node& v : layer1)
    if (adj[v].size() != 2) return layer1;  // not a simple ring; keep sorted order
  std::vector<Node> order;
  Node start = layer1.front();
  Node prev = start;
  Node cur = std::min(adj[start][0], adj[start][1]);
  order.push_back(start);
  while (!(cur == start)) {
    order.push_back(cur);
    const auto& ns = adj[cur];
    Node next = (ns[0] == prev) ? ns[1] : ns[0];
    prev = cur;
    cur = next;
  }
  return order;
}

}  // namespace

bool RandomizedStrategy::step(const Configuration& cfg) {
  if (leader_) return false;
  if (layer1_.empty()) layer1_ = layer_nodes(1, cfg.object());
  if (candidates_.empty()) return false;
  if (!layer1_filled_contracted(cfg, layer1_)) return false;
  if (!survivors_ready_) {
    std::vector<Node> order = cycle_order(layer1_);
    for (const Node& v : order)
      if (candidates_.count(v)) survivors_.push_back(v);
    survivors_ready_ = true;
  }
  if (survivors_.size() == 1) {
    leader_ = survivors_.front();
    return true;
  }
  // One phase of fair coin flips; a candidate withdraws when it flipped 0
  // and its successor along the cycle flipped 1.
  size_t m = survivors_.size();
  std::vector<int> flip(m);
  for (size_t i = 0; i < m; ++i) flip[i] = static_cast<int>(rng_() & 1u);
  std::vector<Node> next;
  for (size_t i = 0; i < m; ++i)
    if (!(flip[i] == 0 && flip[(i + 1) % m] == 1)) next.push_back(survivors_[i]);
  survivors_ = std::move(next);
  if (survivors_.size() == 1) leader_ = survivors_.front();
  return true;
}

std::unique_ptr<LeaderElectionStrategy> make_election_strategy(
    CoatingConfig::Election kind, uint64_t seed) {
  if (kind == CoatingConfig::Election::Oracle) return std::make_unique<OracleStrategy>();
  return std::make_unique<RandomizedStrategy>(seed);
}

namespace {

/// Election tick for a layer-1 root: advance the strategy and, on
/// termination, crown whatever contracted particle occupies the winner.
bool election_tick(ActivationContext& ctx) {
  bool changed = ctx.election.step(ctx.cfg);
  if (ctx.election.terminated()) {
    Node pos = *ctx.election.leader_position();
    ParticleId id = ctx.cfg.occupant(pos);
    if (id != kNoParticle) {
      Particle& winner = ctx.cfg.particle(id);
      if (winner.contracted() && !winner.is_leader &&
          winner.state == ParticleState::Root) {
        winner.is_leader = true;
        changed = true;
      }
    }
  }
  return changed;
}

bool activate_idle(ActivationContext& ctx) {
  Particle& p = ctx.particle();
  if (adjacent_to_object(ctx.cfg, p)) {
    on_become_active_root(ctx);
    ctx.election.register_candidate(p.head);
    return true;
  }
  if (adjacent_to_state(ctx.cfg, p, ParticleState::Retired)) {
    on_become_active_root(ctx);
    return true;
  }
  for (int l = 0; l < 6; ++l) {
    ParticleId qid = ctx.cfg.occupant(ctx.head_nbr(l));
    if (qid == kNoParticle) continue;
    if (ctx.cfg.particle(qid).active()) {
      p.parent_port = l;
      gain_flag(ctx);
      become(ctx, ParticleState::Follower);
      return true;
    }
  }
  return false;
}

bool activate_follower(ActivationContext& ctx) {
  Particle& p = ctx.particle();
  if (p.contracted() && (adjacent_to_object(ctx.cfg, p) ||
                         adjacent_to_state(ctx.cfg, p, ParticleState::Retired))) {
    // A promoted follower generated its complaint flag when it joined the
    // forest; generating another here could push its buffer past two.
    become(ctx, ParticleState::Root);
    return true;
  }
  bool changed = false;
  if (p.contracted() && p.parent_port) {
    if (try_handover_with_predecessor(ctx, *p.parent_port)) changed = true;
  } else if (p.expanded()) {
    if (try_handover_with_child(ctx)) {
      changed = true;
    } else if (!has_tail_child(ctx) && !has_idle_neighbor(ctx.cfg, p)) {
      if (ctx.cfg.contract(p.id, ctx.sink) == MoveResult::Ok) changed = true;
    }
  }
  if (p.contracted() && p.parent_port)
    if (forward_complaint(ctx, *p.parent_port)) changed = true;
  return changed;
}

bool activate_root(ActivationContext& ctx) {
  Particle& p = ctx.particle();
  bool changed = false;
  if (adjacent_to_object(ctx.cfg, p)) changed |= election_tick(ctx);

  if (p.contracted()) {
    // Refresh the compass first: dir from the node we left is stale and the
    // retired conditions below must not act on it.
    changed |= layer_extension(ctx, /*move=*/false);
    if (marker_retired_conditions(ctx)) return true;
    Node at_dir{};
    bool handed = false;
    if (p.dir_port) {
      at_dir = ctx.head_nbr(*p.dir_port);
      ParticleId qid = ctx.cfg.occupant(at_dir);
      if (qid != kNoParticle) {
        const Particle& q = ctx.cfg.particle(qid);
        if (q.state == ParticleState::Root && q.expanded() && q.tail == at_dir) {
          if (try_handover_with_predecessor(ctx, *p.dir_port)) {
            changed = true;
            handed = true;
          }
        }
      }
    }
    if (!handed) changed |= layer_extension(ctx);
  } else {
    if (try_handover_with_child(ctx)) {
      changed = true;
    } else if (!has_tail_child(ctx) && !has_idle_neighbor(ctx.cfg, p)) {
      // A sole contraction that vacates a layer-1 node hands back a spot the
      // complaint mechanism paid for; the flag is regenerated so the demand
      // it stood for is not lost. Postponed while the buffer is full.
      bool refund = node_adjacent_to_object(ctx.cfg, p.tail);
      if (!refund || p.flag_count() < 2) {
        if (ctx.cfg.contract(p.id, ctx.sink) == MoveResult::Ok) {
          changed = true;
          if (refund) gain_flag(ctx);
        }
      }
    }
  }
  if (std::getenv("COATSIM_DEBUG_FWD")) {
    Node t = p.dir_port ? ctx.head_nbr(*p.dir_port) : Node{99, 99};
    fprintf(stderr, "FWD p%d ctr=%d dir=%d tgt=(%d,%d) occ=%d fl=%d\n", p.id,
            (int)p.contracted(), p.dir_port ? *p.dir_port : -9, t.q, t.r,
            p.dir_port ? (int)ctx.cfg.occupant(t) : -7, p.flag_count());
  }
  if (p.contracted() && p.dir_port)
    if (forward_complaint(ctx, *p.dir_port)) changed = true;
  return changed;
}

bool activate_retired(ActivationContext& ctx) {
  Particle& p = ctx.particle();
  if (p.flag_count() > 0) {
    int fid = p.flags.front();
    p.flags.erase(p.flags.begin());
    if (ctx.sink) ctx.sink->on_flag_cleared(fid, p.id);
    return true;
  }
  return false;
}

}  // namespace

bool activate(ActivationContext& ctx) {
  switch (ctx.particle().state) {
    case ParticleState::Idle: return activate_idle(ctx);
    case ParticleState::Follower: return activate_follower(ctx);
    case ParticleState::Root: return activate_root(ctx);
    case ParticleState::Retired: return activate_retired(ctx);
  }
  return false;
}

}  // namespace coatsim
