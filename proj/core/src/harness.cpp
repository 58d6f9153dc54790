#include "coatsim/harness.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <deque>
#include <fstream>
#include <random>
#include <sstream>

#include "json.hpp"

namespace coatsim {

using nlohmann::json;

// ---------------------------------------------------------------------------
// Instance JSON

namespace {

json nodes_to_json(const std::vector<Node>& nodes) {
  json arr = json::array();
  for (const Node& v : nodes) arr.push_back(json::array({v.q, v.r}));
  return arr;
}

std::vector<Node> nodes_from_json(const json& arr) {
  std::vector<Node> out;
  out.reserve(arr.size());
  for (const auto& e : arr) out.push_back({e.at(0).get<int>(), e.at(1).get<int>()});
  return out;
}

json instance_to_json_value(const Instance& inst) {
  json j;
  j["object"] = nodes_to_json(inst.object);
  j["particles"] = nodes_to_json(inst.particles);
  j["seed"] = inst.seed;
  j["meta"] = json::object();
  for (const auto& [k, v] : inst.meta) j["meta"][k] = v;
  return j;
}

Instance instance_from_json_value(const json& j) {
  Instance inst;
  inst.object = nodes_from_json(j.at("object"));
  inst.particles = nodes_from_json(j.at("particles"));
  inst.seed = j.at("seed").get<uint64_t>();
  if (j.contains("meta"))
    for (const auto& [k, v] : j.at("meta").items()) inst.meta[k] = v.get<std::string>();
  return inst;
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path);
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

void write_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << text;
}

}  // namespace

std::string instance_to_json(const Instance& inst) {
  return instance_to_json_value(inst).dump() + "\n";
}

Instance instance_from_json(const std::string& text) {
  return instance_from_json_value(json::parse(text));
}

void save_instance(const Instance& inst, const std::string& path) {
  write_file(path, instance_to_json(inst));
}

Instance load_instance(const std::string& path) {
  return instance_from_json(read_file(path));
}

// ---------------------------------------------------------------------------
// Trace JSON lines

std::string trace_to_json_lines(const Trace& trace) {
  std::ostringstream os;
  json header;
  header["type"] = "coatsim_trace";
  header["instance"] = instance_to_json_value(trace.instance);
  header["config"] = {{"election", static_cast<int>(trace.config.election)},
                      {"root_flag", trace.config.root_generates_flag},
                      {"flag_capacity", trace.config.flag_capacity}};
  header["policy"] = static_cast<int>(trace.policy);
  header["scheduler_seed"] = trace.scheduler_seed;
  header["chirality"] = trace.chirality_offsets;
  header["quiesced"] = trace.quiesced;
  header["limit_exceeded"] = trace.round_limit_exceeded;
  os << header.dump() << "\n";

  for (size_t r = 0; r < trace.rounds.size(); ++r) {
    const RoundRecord& round = trace.rounds[r];
    json j;
    j["round"] = r;
    json moves = json::array();
    for (const Movement& m : round.movements)
      moves.push_back(json::array({static_cast<int>(m.kind), m.actor, m.partner,
                                   m.node_from.q, m.node_from.r, m.node_to.q,
                                   m.node_to.r, m.consumed_flag}));
    j["movements"] = moves;
    json flags = json::array();
    for (const FlagEvent& e : round.flag_events)
      flags.push_back(json::array({static_cast<int>(e.kind), e.flag_id, e.from, e.to}));
    j["flags"] = flags;
    json states = json::array();
    for (const StateChange& s : round.state_changes)
      states.push_back(
          json::array({s.particle, static_cast<int>(s.from), static_cast<int>(s.to)}));
    j["states"] = states;
    os << j.dump() << "\n";
  }
  return os.str();
}

Trace trace_from_json_lines(const std::string& text) {
  std::istringstream is(text);
  std::string line;
  if (!std::getline(is, line)) throw std::runtime_error("empty trace file");
  json header = json::parse(line);
  if (header.value("type", "") != "coatsim_trace")
    throw std::runtime_error("not a trace file");

  Trace trace;
  trace.instance = instance_from_json_value(header.at("instance"));
  trace.config.election =
      static_cast<CoatingConfig::Election>(header.at("config").at("election").get<int>());
  trace.config.root_generates_flag = header.at("config").at("root_flag").get<bool>();
  trace.config.flag_capacity = header.at("config").at("flag_capacity").get<int>();
  trace.policy = static_cast<SchedulerPolicy>(header.at("policy").get<int>());
  trace.scheduler_seed = header.at("scheduler_seed").get<uint64_t>();
  trace.chirality_offsets = header.at("chirality").get<std::vector<int>>();
  trace.quiesced = header.at("quiesced").get<bool>();
  trace.round_limit_exceeded = header.at("limit_exceeded").get<bool>();

  while (std::getline(is, line)) {
    if (line.empty()) continue;
    json j = json::parse(line);
    RoundRecord round;
    for (const auto& m : j.at("movements"))
      round.movements.push_back({static_cast<MovementKind>(m.at(0).get<int>()),
                                 m.at(1).get<int>(), m.at(2).get<int>(),
                                 {m.at(3).get<int>(), m.at(4).get<int>()},
                                 {m.at(5).get<int>(), m.at(6).get<int>()},
                                 m.at(7).get<int>()});
    for (const auto& e : j.at("flags"))
      round.flag_events.push_back({static_cast<FlagEvent::Kind>(e.at(0).get<int>()),
                                   e.at(1).get<int>(), e.at(2).get<int>(),
                                   e.at(3).get<int>()});
    for (const auto& s : j.at("states"))
      round.state_changes.push_back({s.at(0).get<int>(),
                                     static_cast<ParticleState>(s.at(1).get<int>()),
                                     static_cast<ParticleState>(s.at(2).get<int>())});
    trace.rounds.push_back(std::move(round));
  }
  return trace;
}

void save_trace(const Trace& trace, const std::string& path) {
  write_file(path, trace_to_json_lines(trace));
}

Trace load_trace(const std::string& path) {
  return trace_from_json_lines(read_file(path));
}

// ---------------------------------------------------------------------------
// Generators

Instance gen_hexagon(int radius, int n, uint64_t seed) {
  if (radius < 1 || n < 1) throw std::invalid_argument("gen_hexagon: bad parameters");
  Instance inst;
  for (int q = -radius; q <= radius; ++q)
    for (int r = -radius; r <= radius; ++r)
      if (distance({q, r}, {0, 0}) <= radius) inst.object.push_back({q, r});
  std::sort(inst.object.begin(), inst.object.end());
  NodeSet object(inst.object.begin(), inst.object.end());

  // Random connected accretion from perimeter contacts.
  std::mt19937_64 rng(seed);
  NodeSet placed;
  std::vector<Node> candidates = layer_nodes(1, object);
  NodeSet in_candidates(candidates.begin(), candidates.end());
  for (int i = 0; i < n; ++i) {
    if (candidates.empty()) throw std::runtime_error("gen_hexagon: accretion starved");
    size_t pick = static_cast<size_t>(rng() % candidates.size());
    Node v = candidates[pick];
    candidates[pick] = candidates.back();
    candidates.pop_back();
    placed.insert(v);
    inst.particles.push_back(v);
    for (int d = 0; d < 6; ++d) {
      Node w = neighbor(v, Direction(d));
      if (!object.count(w) && !placed.count(w) && in_candidates.insert(w).second)
        candidates.push_back(w);
    }
  }
  // Drop placed nodes that linger in the candidate pool copy semantics: the
  // pool never re-offers placed nodes because they are removed on pick.
  std::sort(inst.particles.begin(), inst.particles.end());
  inst.seed = seed;
  inst.meta["generator"] = "hexagon";
  inst.meta["radius"] = std::to_string(radius);
  inst.meta["n"] = std::to_string(n);
  return inst;
}

Instance gen_line_lemma1(int n) {
  if (n < 1) throw std::invalid_argument("gen_line_lemma1: n must be positive");
  Instance inst;
  for (int i = 0; i < n; ++i) inst.object.push_back({i, 0});
  for (int k = 1; k <= n; ++k) inst.particles.push_back({0, k});
  inst.meta["generator"] = "line_lemma1";
  inst.meta["n"] = std::to_string(n);
  return inst;
}

Instance gen_gap_theorem1(int n) {
  if (n < 8 || n % 4 != 0)
    throw BadParity("gen_gap_theorem1: requires n >= 8 with n divisible by 4");
  int m = (n - 4) / 2;  // object length; even, so the midpoints are exact
  Instance inst;
  for (int i = 0; i < m; ++i) inst.object.push_back({i, 0});
  NodeSet object(inst.object.begin(), inst.object.end());

  Node hole{(m - 2) / 2, 1};                // below the midpoint
  Node extra{m / 2, -2};                    // above the midpoint, layer 2
  for (const Node& v : layer_nodes(1, object))
    if (!(v == hole)) inst.particles.push_back(v);
  inst.particles.push_back(extra);
  std::sort(inst.particles.begin(), inst.particles.end());
  if (static_cast<int>(inst.particles.size()) != n)
    throw std::logic_error("gen_gap_theorem1: size mismatch");
  inst.meta["generator"] = "gap_theorem1";
  inst.meta["n"] = std::to_string(n);
  return inst;
}

// ---------------------------------------------------------------------------
// Validation

namespace {

bool connected(const NodeSet& nodes) {
  if (nodes.empty()) return true;
  NodeSet seen{*nodes.begin()};
  std::deque<Node> q{*nodes.begin()};
  while (!q.empty()) {
    Node v = q.front();
    q.pop_front();
    for (int d = 0; d < 6; ++d) {
      Node w = neighbor(v, Direction(d));
      if (nodes.count(w) && seen.insert(w).second) q.push_back(w);
    }
  }
  return seen.size() == nodes.size();
}

/// Holes: complement nodes inside an inflated bounding box not reachable
/// from the box frame.
bool object_hole_free(const NodeSet& object) {
  if (object.empty()) return true;
  int min_q = 1 << 30, max_q = -(1 << 30), min_r = 1 << 30, max_r = -(1 << 30);
  for (const Node& v : object) {
    min_q = std::min(min_q, v.q);
    max_q = std::max(max_q, v.q);
    min_r = std::min(min_r, v.r);
    max_r = std::max(max_r, v.r);
  }
  min_q -= 2, max_q += 2, min_r -= 2, max_r += 2;
  auto inside = [&](Node v) {
    return v.q >= min_q && v.q <= max_q && v.r >= min_r && v.r <= max_r;
  };
  Node start{min_q, min_r};
  NodeSet seen{start};
  std::deque<Node> q{start};
  while (!q.empty()) {
    Node v = q.front();
    q.pop_front();
    for (int d = 0; d < 6; ++d) {
      Node w = neighbor(v, Direction(d));
      if (inside(w) && !object.count(w) && seen.insert(w).second) q.push_back(w);
    }
  }
  size_t complement = 0;
  for (int qq = min_q; qq <= max_q; ++qq)
    for (int rr = min_r; rr <= max_r; ++rr)
      if (!object.count({qq, rr})) ++complement;
  return seen.size() == complement;
}

/// Unit-vertex-capacity max flow (node-split, BFS augmentation) between two
/// region nodes, capped at `need`.
int vertex_connectivity(const std::vector<Node>& region, Node a, Node b, int need) {
  std::unordered_map<Node, int, NodeHash> index;
  for (size_t i = 0; i < region.size(); ++i) index[region[i]] = static_cast<int>(i);
  int n = static_cast<int>(region.size());
  // Vertices: 2*i (in), 2*i+1 (out). Edge capacities in a flat adjacency map.
  std::vector<std::unordered_map<int, int>> cap(static_cast<size_t>(2 * n));
  for (int i = 0; i < n; ++i) {
    bool terminal = region[static_cast<size_t>(i)] == a || region[static_cast<size_t>(i)] == b;
    cap[static_cast<size_t>(2 * i)][2 * i + 1] = terminal ? need : 1;
    for (int d = 0; d < 6; ++d) {
      auto it = index.find(neighbor(region[static_cast<size_t>(i)], Direction(d)));
      if (it != index.end()) cap[static_cast<size_t>(2 * i + 1)][2 * it->second] = 1;
    }
  }
  int src = 2 * index[a] + 1, dst = 2 * index[b];
  int flow = 0;
  while (flow < need) {
    std::vector<int> prev(static_cast<size_t>(2 * n), -1);
    std::deque<int> q{src};
    prev[static_cast<size_t>(src)] = src;
    while (!q.empty() && prev[static_cast<size_t>(dst)] == -1) {
      int v = q.front();
      q.pop_front();
      for (const auto& [w, c] : cap[static_cast<size_t>(v)]) {
        if (c > 0 && prev[static_cast<size_t>(w)] == -1) {
          prev[static_cast<size_t>(w)] = v;
          q.push_back(w);
        }
      }
    }
    if (prev[static_cast<size_t>(dst)] == -1) break;
    for (int v = dst; v != src; v = prev[static_cast<size_t>(v)]) {
      int u = prev[static_cast<size_t>(v)];
      --cap[static_cast<size_t>(u)][v];
      ++cap[static_cast<size_t>(v)][u];
    }
    ++flow;
  }
  return flow;
}

}  // namespace

ValidationResult validate_instance(const Instance& inst, bool strict) {
  ValidationResult result;
  auto flag = [&](int prop, std::string msg) {
    result.violations.push_back({prop, std::move(msg)});
  };

  NodeSet object(inst.object.begin(), inst.object.end());
  if (object.size() != inst.object.size()) flag(1, "duplicate object nodes");
  if (object.empty()) flag(1, "empty object");
  NodeSet particles;
  for (const Node& v : inst.particles) {
    if (object.count(v)) flag(1, "particle on object node");
    if (!particles.insert(v).second) flag(1, "two particles on one node");
  }

  if (!connected(object)) flag(2, "object not connected");
  NodeSet all = object;
  all.insert(particles.begin(), particles.end());
  if (!connected(all)) flag(2, "particle system not connected to object");

  if (!object_hole_free(object)) flag(3, "object complement not connected (hole)");

  if (strict && result.violations.empty() && !inst.particles.empty()) {
    result.property4_checked = true;
    int b1 = layer_size(1, object);
    int demand = (inst.n() + b1 - 1) / b1;
    int depth = demand + 2;
    int need = 2 * (demand + 1);
    std::vector<Node> region;
    {
      // All nodes within distance `depth` of the object.
      NodeSet seen = object;
      std::deque<std::pair<Node, int>> q;
      for (const Node& v : inst.object) q.push_back({v, 0});
      while (!q.empty()) {
        auto [v, d] = q.front();
        q.pop_front();
        if (d == depth) continue;
        for (int dir = 0; dir < 6; ++dir) {
          Node w = neighbor(v, Direction(dir));
          if (seen.insert(w).second) {
            region.push_back(w);
            q.push_back({w, d + 1});
          }
        }
      }
    }
    std::vector<Node> layer1 = layer_nodes(1, object);
    Node a = *std::min_element(layer1.begin(), layer1.end());
    Node b = a;
    for (const Node& v : layer1)
      if (distance(a, v) > distance(a, b)) b = v;
    if (!(a == b)) {
      int conn = vertex_connectivity(region, a, b, need);
      if (conn < need) {
        std::ostringstream os;
        os << "tunnel narrower than " << need << " (connectivity " << conn
           << " between far surface nodes)";
        flag(4, os.str());
      }
    }
  }
  return result;
}

// ---------------------------------------------------------------------------
// Experiments

ExperimentPlan plan_from_json(const std::string& text) {
  json j = json::parse(text);
  ExperimentPlan plan;
  plan.generator = j.value("generator", plan.generator);
  if (j.contains("radii")) plan.radii = j.at("radii").get<std::vector<int>>();
  if (j.contains("n_values")) plan.n_values = j.at("n_values").get<std::vector<int>>();
  plan.trials = j.value("trials", plan.trials);
  plan.seed_base = j.value("seed_base", plan.seed_base);
  if (j.contains("policy")) {
    auto p = scheduler_policy_from_string(j.at("policy").get<std::string>());
    if (!p) throw std::runtime_error("unknown policy in plan");
    plan.policy = *p;
  }
  if (j.contains("election")) {
    std::string e = j.at("election").get<std::string>();
    if (e == "oracle")
      plan.election = CoatingConfig::Election::Oracle;
    else if (e == "randomized")
      plan.election = CoatingConfig::Election::Randomized;
    else
      throw std::runtime_error("unknown election in plan");
  }
  plan.max_rounds_factor = j.value("max_rounds_factor", plan.max_rounds_factor);
  return plan;
}

std::pair<double, double> mean_ci95(const std::vector<double>& samples) {
  if (samples.empty()) return {0.0, 0.0};
  double mean = 0;
  for (double s : samples) mean += s;
  mean /= static_cast<double>(samples.size());
  if (samples.size() < 2) return {mean, 0.0};
  double var = 0;
  for (double s : samples) var += (s - mean) * (s - mean);
  var /= static_cast<double>(samples.size() - 1);
  // Two-sided 95% Student-t quantiles for df = 1..30, then the normal value.
  static const double t95[] = {12.706, 4.303, 3.182, 2.776, 2.571, 2.447, 2.365,
                               2.306,  2.262, 2.228, 2.201, 2.179, 2.160, 2.145,
                               2.131,  2.120, 2.110, 2.101, 2.093, 2.086, 2.080,
                               2.074,  2.069, 2.064, 2.060, 2.056, 2.052, 2.048,
                               2.045,  2.042};
  size_t df = samples.size() - 1;
  double t = df <= 30 ? t95[df - 1] : 1.96;
  return {mean, t * std::sqrt(var / static_cast<double>(samples.size()))};
}

ExperimentResult run_experiment(const ExperimentPlan& plan) {
  ExperimentResult result;
  std::vector<int> radii = plan.generator == "hexagon" ? plan.radii : std::vector<int>{0};

  for (int radius : radii) {
    for (int n : plan.n_values) {
      CellAggregate cell;
      cell.generator = plan.generator;
      cell.radius = radius;
      cell.n = n;
      cell.trials = plan.trials;
      std::vector<double> rounds_s, md_s, ratio_s;

      for (int trial = 0; trial < plan.trials; ++trial) {
        uint64_t seed = plan.seed_base + static_cast<uint64_t>(trial);
        Instance inst;
        if (plan.generator == "hexagon")
          inst = gen_hexagon(radius, n, seed);
        else if (plan.generator == "line_lemma1")
          inst = gen_line_lemma1(n);
        else if (plan.generator == "gap_theorem1")
          inst = gen_gap_theorem1(n);
        else
          throw std::runtime_error("unknown generator: " + plan.generator);

        CoatingConfig config;
        config.election = plan.election;
        ActivationSequence seq{plan.policy, seed, {}};
        Trace trace = run_async(inst, seq, config, plan.max_rounds_factor * n);

        RunRow row;
        {
          std::ostringstream id;
          id << plan.generator;
          if (radius > 0) id << "_r" << radius;
          id << "_n" << n << "_t" << trial;
          row.instance_id = id.str();
        }
        row.seed = seed;
        row.n = n;
        row.radius = radius;
        row.rounds = trace.rounds_to_quiescence();
        row.limit_exceeded = trace.round_limit_exceeded;
        MatchingDilationResult md = matching_dilation(inst);
        row.md = md.value;
        row.ratio = competitive_ratio_estimate(trace, md);
        row.t = layer_completion_rounds(trace);
        result.runs.push_back(row);

        if (!row.limit_exceeded) {
          ++cell.completed;
          rounds_s.push_back(row.rounds);
          md_s.push_back(row.md);
          if (row.ratio) ratio_s.push_back(*row.ratio);
        }
      }
      std::tie(cell.mean_rounds, cell.ci_rounds) = mean_ci95(rounds_s);
      cell.mean_md = mean_ci95(md_s).first;
      std::tie(cell.mean_ratio, cell.ci_ratio) = mean_ci95(ratio_s);
      result.cells.push_back(cell);
    }
  }
  return result;
}

// ---------------------------------------------------------------------------
// CSV / SVG emission

namespace {

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

}  // namespace

std::string ExperimentResult::runs_csv() const {
  size_t max_t = 0;
  for (const RunRow& r : runs) max_t = std::max(max_t, r.t.size());
  std::ostringstream os;
  os << "instance_id,seed,n,radius,rounds,md,ratio";
  for (size_t i = 1; i <= max_t; ++i) os << ",t_" << i;
  os << ",limit_exceeded\n";
  for (const RunRow& r : runs) {
    os << r.instance_id << ',' << r.seed << ',' << r.n << ',' << r.radius << ','
       << r.rounds << ',' << r.md << ',';
    if (r.ratio) os << fmt(*r.ratio);
    for (size_t i = 0; i < max_t; ++i) {
      os << ',';
      if (i < r.t.size() && r.t[i] >= 0) os << r.t[i];
    }
    os << ',' << (r.limit_exceeded ? 1 : 0) << '\n';
  }
  return os.str();
}

std::string ExperimentResult::summary_csv() const {
  std::ostringstream os;
  os << "generator,radius,n,trials,completed,mean_rounds,ci95_rounds,mean_md,"
        "mean_ratio,ci95_ratio\n";
  for (const CellAggregate& c : cells) {
    os << c.generator << ',' << c.radius << ',' << c.n << ',' << c.trials << ','
       << c.completed << ',' << fmt(c.mean_rounds) << ',';
    if (c.completed > 1) os << fmt(c.ci_rounds);
    os << ',' << fmt(c.mean_md) << ',' << fmt(c.mean_ratio) << ',';
    if (c.completed > 1) os << fmt(c.ci_ratio);
    os << '\n';
  }
  return os.str();
}

namespace {

struct SeriesPoint {
  double x, y, ci;
};

struct Series {
  std::string name;
  std::vector<SeriesPoint> points;
};

std::string svg_chart(const std::string& title, const std::string& xlab,
                      const std::string& ylab, const std::vector<Series>& series,
                      bool logy) {
  const double W = 640, H = 480, ml = 70, mr = 20, mt = 40, mb = 50;
  static const char* colors[] = {"#1b6ca8", "#c0392b", "#27856a", "#8e44ad", "#b7770d"};

  double xmin = 1e300, xmax = -1e300, ymin = 1e300, ymax = -1e300;
  for (const Series& s : series)
    for (const SeriesPoint& p : s.points) {
      double y = logy ? std::log10(std::max(p.y, 1e-9)) : p.y;
      xmin = std::min(xmin, p.x), xmax = std::max(xmax, p.x);
      ymin = std::min(ymin, y), ymax = std::max(ymax, y);
    }
  if (xmin > xmax) xmin = 0, xmax = 1;
  if (ymin > ymax) ymin = 0, ymax = 1;
  if (xmax - xmin < 1e-12) xmax = xmin + 1;
  if (ymax - ymin < 1e-12) ymax = ymin + 1;
  auto X = [&](double x) { return ml + (x - xmin) / (xmax - xmin) * (W - ml - mr); };
  auto Y = [&](double y) {
    double v = logy ? std::log10(std::max(y, 1e-9)) : y;
    return H - mb - (v - ymin) / (ymax - ymin) * (H - mt - mb);
  };

  std::ostringstream os;
  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << H
     << "\" viewBox=\"0 0 " << W << " " << H << "\">\n"
     << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n"
     << "<text x=\"" << W / 2 << "\" y=\"24\" text-anchor=\"middle\" font-size=\"16\">"
     << title << "</text>\n"
     << "<line x1=\"" << ml << "\" y1=\"" << H - mb << "\" x2=\"" << W - mr << "\" y2=\""
     << H - mb << "\" stroke=\"black\"/>\n"
     << "<line x1=\"" << ml << "\" y1=\"" << mt << "\" x2=\"" << ml << "\" y2=\""
     << H - mb << "\" stroke=\"black\"/>\n"
     << "<text x=\"" << W / 2 << "\" y=\"" << H - 12
     << "\" text-anchor=\"middle\" font-size=\"13\">" << xlab << "</text>\n"
     << "<text x=\"18\" y=\"" << H / 2 << "\" text-anchor=\"middle\" font-size=\"13\" "
     << "transform=\"rotate(-90 18 " << H / 2 << ")\">" << ylab
     << (logy ? " (log scale)" : "") << "</text>\n";
  // Min/max tick labels.
  auto ylabel = [&](double v) { return logy ? fmt(std::pow(10.0, v)) : fmt(v); };
  os << "<text x=\"" << ml - 6 << "\" y=\"" << H - mb + 4
     << "\" text-anchor=\"end\" font-size=\"11\">" << ylabel(ymin) << "</text>\n"
     << "<text x=\"" << ml - 6 << "\" y=\"" << mt + 4
     << "\" text-anchor=\"end\" font-size=\"11\">" << ylabel(ymax) << "</text>\n"
     << "<text x=\"" << ml << "\" y=\"" << H - mb + 16
     << "\" text-anchor=\"middle\" font-size=\"11\">" << fmt(xmin) << "</text>\n"
     << "<text x=\"" << W - mr << "\" y=\"" << H - mb + 16
     << "\" text-anchor=\"middle\" font-size=\"11\">" << fmt(xmax) << "</text>\n";

  for (size_t si = 0; si < series.size(); ++si) {
    const char* color = colors[si % 5];
    std::ostringstream pts;
    for (const SeriesPoint& p : series[si].points)
      pts << X(p.x) << ',' << Y(p.y) << ' ';
    os << "<polyline points=\"" << pts.str() << "\" fill=\"none\" stroke=\"" << color
       << "\" stroke-width=\"1.5\"/>\n";
    for (const SeriesPoint& p : series[si].points) {
      os << "<circle cx=\"" << X(p.x) << "\" cy=\"" << Y(p.y) << "\" r=\"3\" fill=\""
         << color << "\"/>\n";
      if (p.ci > 0)
        os << "<line x1=\"" << X(p.x) << "\" y1=\"" << Y(p.y - p.ci) << "\" x2=\""
           << X(p.x) << "\" y2=\"" << Y(p.y + p.ci) << "\" stroke=\"" << color
           << "\" stroke-width=\"1\"/>\n";
    }
    os << "<text x=\"" << W - mr - 4 << "\" y=\"" << mt + 16 + 16 * si
       << "\" text-anchor=\"end\" font-size=\"12\" fill=\"" << color << "\">"
       << series[si].name << "</text>\n";
  }
  os << "</svg>\n";
  return os.str();
}

std::vector<Series> per_radius_series(const std::vector<CellAggregate>& cells,
                                      bool ratio) {
  std::vector<Series> out;
  for (const CellAggregate& c : cells) {
    std::string name = c.radius > 0 ? "radius " + std::to_string(c.radius) : c.generator;
    auto it = std::find_if(out.begin(), out.end(),
                           [&](const Series& s) { return s.name == name; });
    if (it == out.end()) {
      out.push_back({name, {}});
      it = out.end() - 1;
    }
    if (ratio)
      it->points.push_back({static_cast<double>(c.n), c.mean_ratio, c.ci_ratio});
    else
      it->points.push_back({static_cast<double>(c.n), c.mean_rounds, c.ci_rounds});
  }
  return out;
}

}  // namespace

std::string ExperimentResult::svg_rounds_vs_n() const {
  return svg_chart("Rounds to quiescence vs particle count", "n", "rounds",
                   per_radius_series(cells, false), false);
}

std::string ExperimentResult::svg_ratio_vs_n() const {
  return svg_chart("rounds / MD vs particle count (MD is a lower bound, not OPT)", "n",
                   "rounds / MD", per_radius_series(cells, true), true);
}

std::string ExperimentResult::svg_rounds_vs_radius() const {
  std::vector<Series> series;
  for (const CellAggregate& c : cells) {
    std::string name = "n " + std::to_string(c.n);
    auto it = std::find_if(series.begin(), series.end(),
                           [&](const Series& s) { return s.name == name; });
    if (it == series.end()) {
      series.push_back({name, {}});
      it = series.end() - 1;
    }
    it->points.push_back({static_cast<double>(c.radius), c.mean_rounds, c.ci_rounds});
  }
  return svg_chart("Rounds to quiescence vs object radius", "radius", "rounds", series,
                   false);
}

}  // namespace coatsim
