#include "coatsim/analysis.hpp"

#include <algorithm>
#include <deque>
#include <stdexcept>

namespace coatsim {

LayerStats compute_layer_stats(const NodeSet& object, int n) {
  LayerStats stats;
  int cum = 0;
  for (int i = 1;; ++i) {
    int b = layer_size(i, object);
    stats.B.push_back(b);
    if (stats.N == 0) {
      stats.n_i.push_back(n - cum);
      cum += b;
      if (cum >= n) stats.N = i;
    } else {
      break;  // B_{N+1} recorded, done
    }
    if (b == 0) throw std::runtime_error("empty layer below demand; object malformed");
  }
  return stats;
}

bool is_legal(const Configuration& cfg) {
  int max_layer = 0;
  NodeSet occupied;
  for (const Particle& p : cfg.particles()) {
    if (!p.contracted()) return false;
    occupied.insert(p.head);
    max_layer = std::max(max_layer, layer_of(p.head, cfg.object()));
  }
  for (int i = 1; i < max_layer; ++i)
    for (const Node& v : layer_nodes(i, cfg.object()))
      if (!occupied.count(v)) return false;
  return true;
}

bool layer_complete(const Configuration& cfg, int i, const LayerStats& stats,
                    bool quiesced) {
  if (i == stats.N) {
    if (!quiesced) return false;
    return is_legal(cfg);
  }
  for (const Node& v : layer_nodes(i, cfg.object())) {
    ParticleId id = cfg.occupant(v);
    if (id == kNoParticle) return false;
    const Particle& p = cfg.particle(id);
    if (!p.contracted() || p.state != ParticleState::Retired) return false;
  }
  return true;
}

// ---------------------------------------------------------------------------
// Matching dilation

namespace {

/// Hopcroft-Karp maximum matching; left vertices 0..L-1, adjacency by index
/// into the right side. Returns match_left (right index or -1).
struct HopcroftKarp {
  const std::vector<std::vector<int>>& adj;
  int left, right;
  std::vector<int> match_l, match_r, dist;

  HopcroftKarp(const std::vector<std::vector<int>>& a, int l, int r)
      : adj(a), left(l), right(r), match_l(static_cast<size_t>(l), -1),
        match_r(static_cast<size_t>(r), -1), dist(static_cast<size_t>(l)) {}

  bool bfs() {
    std::deque<int> q;
    bool found = false;
    for (int u = 0; u < left; ++u) {
      if (match_l[static_cast<size_t>(u)] == -1) {
        dist[static_cast<size_t>(u)] = 0;
        q.push_back(u);
      } else {
        dist[static_cast<size_t>(u)] = -1;
      }
    }
    while (!q.empty()) {
      int u = q.front();
      q.pop_front();
      for (int v : adj[static_cast<size_t>(u)]) {
        int w = match_r[static_cast<size_t>(v)];
        if (w == -1) {
          found = true;
        } else if (dist[static_cast<size_t>(w)] == -1) {
          dist[static_cast<size_t>(w)] = dist[static_cast<size_t>(u)] + 1;
          q.push_back(w);
        }
      }
    }
    return found;
  }

  bool dfs(int u) {
    for (int v : adj[static_cast<size_t>(u)]) {
      int w = match_r[static_cast<size_t>(v)];
      if (w == -1 || (dist[static_cast<size_t>(w)] == dist[static_cast<size_t>(u)] + 1 &&
                      dfs(w))) {
        match_l[static_cast<size_t>(u)] = v;
        match_r[static_cast<size_t>(v)] = u;
        return true;
      }
    }
    dist[static_cast<size_t>(u)] = -1;
    return false;
  }

  int run() {
    int size = 0;
    while (bfs())
      for (int u = 0; u < left; ++u)
        if (match_l[static_cast<size_t>(u)] == -1 && dfs(u)) ++size;
    return size;
  }
};

struct SlotModel {
  std::vector<Node> slots;  // required first, then optional (layer N)
  int required = 0;
};

SlotModel build_slots(const Instance& inst) {
  NodeSet object = inst.object_set();
  LayerStats stats = compute_layer_stats(object, inst.n());
  SlotModel model;
  for (int i = 1; i < stats.N; ++i)
    for (const Node& v : layer_nodes(i, object)) model.slots.push_back(v);
  model.required = static_cast<int>(model.slots.size());
  for (const Node& v : layer_nodes(stats.N, object)) model.slots.push_back(v);
  return model;
}

std::vector<std::vector<int>> edges_within(const Instance& inst, const SlotModel& model,
                                           int c, bool required_only) {
  int limit = required_only ? model.required : static_cast<int>(model.slots.size());
  std::vector<std::vector<int>> adj(inst.particles.size());
  for (size_t p = 0; p < inst.particles.size(); ++p)
    for (int s = 0; s < limit; ++s)
      if (distance(inst.particles[p], model.slots[static_cast<size_t>(s)]) <= c)
        adj[p].push_back(s);
  return adj;
}

bool feasible(const Instance& inst, const SlotModel& model, int c) {
  auto adj_all = edges_within(inst, model, c, false);
  HopcroftKarp hk_all(adj_all, inst.n(), static_cast<int>(model.slots.size()));
  if (hk_all.run() != inst.n()) return false;
  auto adj_req = edges_within(inst, model, c, true);
  HopcroftKarp hk_req(adj_req, inst.n(), model.required);
  return hk_req.run() == model.required;
}

/// Mendelsohn-Dulmage merge: starting from a particle-saturating matching,
/// repair every unmatched required slot via alternating paths through a
/// required-slot-saturating matching. Particles stay saturated throughout.
std::vector<int> merged_witness(const Instance& inst, const SlotModel& model, int c) {
  auto adj_all = edges_within(inst, model, c, false);
  HopcroftKarp hk_all(adj_all, inst.n(), static_cast<int>(model.slots.size()));
  hk_all.run();
  auto adj_req = edges_within(inst, model, c, true);
  HopcroftKarp hk_req(adj_req, inst.n(), model.required);
  hk_req.run();

  std::vector<int>& match_l = hk_all.match_l;   // particle -> slot
  std::vector<int>& match_r = hk_all.match_r;   // slot -> particle
  for (int s = 0; s < model.required; ++s) {
    if (match_r[static_cast<size_t>(s)] != -1) continue;
    int cur = s;
    while (cur != -1 && match_r[static_cast<size_t>(cur)] == -1) {
      int p = hk_req.match_r[static_cast<size_t>(cur)];
      int old = match_l[static_cast<size_t>(p)];
      match_l[static_cast<size_t>(p)] = cur;
      match_r[static_cast<size_t>(cur)] = p;
      if (old != -1) match_r[static_cast<size_t>(old)] = -1;
      cur = old;
      if (cur != -1 && cur >= model.required) {
        // Freed an optional slot: the path ends here.
        break;
      }
    }
  }
  return match_l;
}

}  // namespace

bool md_bottleneck_feasible(const Instance& inst, int c) {
  if (c < 0) return false;
  SlotModel model = build_slots(inst);
  if (static_cast<int>(model.slots.size()) < inst.n())
    throw std::runtime_error("infeasible: particle count exceeds slot capacity");
  return feasible(inst, model, c);
}

MatchingDilationResult matching_dilation(const Instance& inst) {
  SlotModel model = build_slots(inst);
  if (static_cast<int>(model.slots.size()) < inst.n())
    throw std::runtime_error("infeasible: particle count exceeds slot capacity");

  int hi = 0;
  for (const Node& p : inst.particles)
    for (const Node& s : model.slots) hi = std::max(hi, distance(p, s));
  int lo = 0;
  while (lo < hi) {
    int mid = lo + (hi - lo) / 2;
    if (feasible(inst, model, mid))
      hi = mid;
    else
      lo = mid + 1;
  }

  MatchingDilationResult result;
  result.value = lo;
  std::vector<int> match = merged_witness(inst, model, lo);
  result.witness.reserve(match.size());
  for (int s : match) result.witness.push_back(model.slots[static_cast<size_t>(s)]);
  return result;
}

std::optional<double> competitive_ratio_estimate(const Trace& trace,
                                                 const MatchingDilationResult& md) {
  if (md.value < 1) return std::nullopt;
  return static_cast<double>(trace.rounds_to_quiescence()) / md.value;
}

std::vector<int> layer_completion_rounds(const Trace& trace) {
  Configuration cfg = trace.initial_configuration();
  LayerStats stats = compute_layer_stats(cfg.object(), trace.instance.n());
  std::vector<int> t(static_cast<size_t>(stats.N), -1);

  auto scan = [&](int round_count) {
    for (int i = 1; i <= stats.N; ++i) {
      size_t idx = static_cast<size_t>(i - 1);
      if (t[idx] != -1) continue;
      bool quiesced = trace.quiesced && round_count >= trace.rounds_to_quiescence();
      if (layer_complete(cfg, i, stats, quiesced)) t[idx] = round_count;
    }
  };
  scan(0);
  for (size_t r = 0; r < trace.rounds.size(); ++r) {
    apply_round(cfg, trace.rounds[r]);
    scan(static_cast<int>(r) + 1);
  }
  if (trace.quiesced) scan(static_cast<int>(trace.rounds.size()));
  return t;
}

}  // namespace coatsim
