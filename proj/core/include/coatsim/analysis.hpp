#pragma once

#include <optional>
#include <vector>

#include "coatsim/core.hpp"
#include "coatsim/scheduler.hpp"

namespace coatsim {

/// Layer sizes B_1..B_{N+1} and per-layer particle demand for n particles
/// around an object: N is the final layer, the smallest index with
/// sum(B_1..B_N) >= n; n_i = n - sum(B_1..B_{i-1}).
struct LayerStats {
  std::vector<int> B;    // B[i-1] = B_i, i = 1..N+1
  int N = 0;
  std::vector<int> n_i;  // per layer 1..N

  int layer_size(int i) const { return B.at(static_cast<size_t>(i - 1)); }
};

LayerStats compute_layer_stats(const NodeSet& object, int n);

/// All particles contracted and no unoccupied non-object node closer to the
/// object than the farthest particle.
bool is_legal(const Configuration& cfg);

/// Layers below N need every node held by a contracted retired particle;
/// layer N itself is complete when the run has quiesced in a legal
/// configuration.
bool layer_complete(const Configuration& cfg, int i, const LayerStats& stats,
                    bool quiesced);

struct MatchingDilationResult {
  int value = 0;
  /// witness[p] = coating node assigned to particle p; covers every node of
  /// layers 1..N-1 and max assigned distance == value.
  std::vector<Node> witness;
};

/// Bottleneck assignment of particles to coating positions: minimal c such
/// that a matching with all distances <= c saturates every particle and
/// every node of layers 1..N-1 (layer N supplies the optional remainder).
/// A lower bound on optimal coating time, not OPT itself.
MatchingDilationResult matching_dilation(const Instance& inst);

/// Feasibility of the bottleneck threshold c; monotone in c.
bool md_bottleneck_feasible(const Instance& inst, int c);

/// rounds_to_quiescence / MD; nullopt when MD == 0 (undefined).
std::optional<double> competitive_ratio_estimate(const Trace& trace,
                                                 const MatchingDilationResult& md);

/// t_i per layer 1..N: the first round count after which layer i is
/// complete (0 when already complete at the start, -1 when never).
std::vector<int> layer_completion_rounds(const Trace& trace);

}  // namespace coatsim
