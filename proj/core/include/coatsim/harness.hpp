#pragma once

#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "coatsim/analysis.hpp"
#include "coatsim/core.hpp"
#include "coatsim/scheduler.hpp"

namespace coatsim {

// ---------------------------------------------------------------------------
// File formats (UTF-8 JSON; canonical, bit-exact round-trip)

std::string instance_to_json(const Instance& inst);
Instance instance_from_json(const std::string& text);
void save_instance(const Instance& inst, const std::string& path);
Instance load_instance(const std::string& path);

/// Line-delimited: one header object, then one object per round.
std::string trace_to_json_lines(const Trace& trace);
Trace trace_from_json_lines(const std::string& text);
void save_trace(const Trace& trace, const std::string& path);
Trace load_trace(const std::string& path);

// ---------------------------------------------------------------------------
// Generators

/// Hexagonal object of the given radius (3r(r+1)+1 nodes) with n particles
/// grown by seeded random connected accretion from the perimeter.
Instance gen_hexagon(int radius, int n, uint64_t seed);

/// Straight-line object with a perpendicular chain of n particles hanging
/// off one end; the farthest particle sits at distance n and B_1 > n.
Instance gen_line_lemma1(int n);

class BadParity : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Line object whose first layer is fully occupied except one node below
/// the midpoint, plus one extra particle above the midpoint in layer 2.
/// Requires n = 2m+2 with m even (throws BadParity otherwise).
Instance gen_gap_theorem1(int n);

// ---------------------------------------------------------------------------
// Validation

struct ValidationIssue {
  int property = 0;  // 1..4
  std::string message;
};

struct ValidationResult {
  std::vector<ValidationIssue> violations;
  bool property4_checked = false;
  bool ok() const { return violations.empty(); }
};

/// Properties 1-3 exactly (distinct contracted placements, system
/// connectivity, hole-free object); property 4 (tunnel width) only under
/// strict, via node-capacity max-flow on the region within distance
/// ceil(n/B_1)+2 of the object.
ValidationResult validate_instance(const Instance& inst, bool strict = false);

// ---------------------------------------------------------------------------
// Experiments

struct ExperimentPlan {
  std::string generator = "hexagon";  // hexagon | line_lemma1 | gap_theorem1
  std::vector<int> radii = {4};       // hexagon only
  std::vector<int> n_values;
  int trials = 20;
  uint64_t seed_base = 1;
  SchedulerPolicy policy = SchedulerPolicy::RandomPermutationRounds;
  CoatingConfig::Election election = CoatingConfig::Election::Randomized;
  int max_rounds_factor = 50;  // round limit = factor * n
};

ExperimentPlan plan_from_json(const std::string& text);

struct RunRow {
  std::string instance_id;
  uint64_t seed = 0;
  int n = 0;
  int radius = 0;  // 0 for non-hexagon generators
  int rounds = 0;
  int md = 0;
  std::optional<double> ratio;
  std::vector<int> t;  // per-layer completion rounds
  bool limit_exceeded = false;
};

struct CellAggregate {
  std::string generator;
  int radius = 0;
  int n = 0;
  int trials = 0;
  int completed = 0;  // runs that quiesced within the limit
  double mean_rounds = 0, ci_rounds = 0;
  double mean_md = 0;
  double mean_ratio = 0, ci_ratio = 0;
};

struct ExperimentResult {
  std::vector<RunRow> runs;
  std::vector<CellAggregate> cells;

  std::string runs_csv() const;
  std::string summary_csv() const;
  std::string svg_rounds_vs_n() const;
  std::string svg_ratio_vs_n() const;  // log-scale y
  std::string svg_rounds_vs_radius() const;
};

ExperimentResult run_experiment(const ExperimentPlan& plan);

/// Mean and 95% confidence half-width (Student t); ci = 0 when fewer than
/// two samples.
std::pair<double, double> mean_ci95(const std::vector<double>& samples);

}  // namespace coatsim
