// coatsim command line: run single instances, sweep experiments, validate
// instances, compute the matching-dilation metric, and check recorded traces
// against the parallel-schedule invariants.
//
// Exit codes: 0 success, 2 validation failure, 3 round limit exceeded,
// 4 internal invariant violation.

#include <filesystem>
#include <fstream>
#include <iostream>

#include "CLI11.hpp"
#include "coatsim/analysis.hpp"
#include "coatsim/harness.hpp"
#include "coatsim/scheduler.hpp"

namespace fs = std::filesystem;
using namespace coatsim;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitValidation = 2;
constexpr int kExitRoundLimit = 3;
constexpr int kExitInvariant = 4;

struct CommonOpts {
  std::string instance_path;
  std::string generator = "hexagon";
  int radius = 2;
  int n = 18;
  uint64_t seed = 1;
  std::string scheduler = "random_permutation_rounds";
  std::string election = "randomized";
  int max_rounds = 0;  // 0 -> 50 * n
  bool skip_validation = false;
};

Instance make_instance(const CommonOpts& opts) {
  if (!opts.instance_path.empty()) return load_instance(opts.instance_path);
  if (opts.generator == "hexagon") return gen_hexagon(opts.radius, opts.n, opts.seed);
  if (opts.generator == "line_lemma1") return gen_line_lemma1(opts.n);
  if (opts.generator == "gap_theorem1") return gen_gap_theorem1(opts.n);
  throw std::runtime_error("unknown generator: " + opts.generator);
}

CoatingConfig make_config(const CommonOpts& opts) {
  CoatingConfig config;
  if (opts.election == "oracle")
    config.election = CoatingConfig::Election::Oracle;
  else if (opts.election == "randomized")
    config.election = CoatingConfig::Election::Randomized;
  else
    throw std::runtime_error("unknown election strategy: " + opts.election);
  return config;
}

ActivationSequence make_sequence(const CommonOpts& opts) {
  auto policy = scheduler_policy_from_string(opts.scheduler);
  if (!policy) throw std::runtime_error("unknown scheduler policy: " + opts.scheduler);
  return {*policy, opts.seed, {}};
}

int report_validation(const ValidationResult& v) {
  for (const ValidationIssue& issue : v.violations)
    std::cerr << "property " << issue.property << ": " << issue.message << "\n";
  return v.ok() ? kExitOk : kExitValidation;
}

void add_common(CLI::App* cmd, CommonOpts& opts, bool with_run_flags) {
  cmd->add_option("--instance", opts.instance_path, "instance JSON file");
  cmd->add_option("--generator", opts.generator, "hexagon|line_lemma1|gap_theorem1");
  cmd->add_option("--radius", opts.radius, "hexagon radius");
  cmd->add_option("-n,--particles", opts.n, "particle count");
  cmd->add_option("--seed", opts.seed, "seed");
  if (with_run_flags) {
    cmd->add_option("--scheduler", opts.scheduler,
                    "random_permutation_rounds|uniform_random_singles");
    cmd->add_option("--election", opts.election, "randomized|oracle");
    cmd->add_option("--max-rounds", opts.max_rounds, "round limit (default 50*n)");
    cmd->add_flag("--skip-validation", opts.skip_validation,
                  "run even if the instance is invalid");
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"coatsim: universal-coating simulator and analysis toolkit"};
  app.require_subcommand(1);

  CommonOpts opts;
  std::string emit = "none";
  std::string out_path = ".";
  std::string plan_path;
  std::string trace_path;
  bool strict = false;

  CLI::App* run = app.add_subcommand("run", "simulate one instance");
  add_common(run, opts, true);
  run->add_option("--emit", emit, "none|json (write the trace)");
  run->add_option("--out", out_path, "output file or directory");

  CLI::App* experiment = app.add_subcommand("experiment", "run a sweep plan");
  experiment->add_option("--plan", plan_path, "plan JSON file")->required();
  experiment->add_option("--out", out_path, "output directory");
  std::string exp_emit = "csv";
  experiment->add_option("--emit", exp_emit, "csv|svg|csv,svg");

  CLI::App* validate = app.add_subcommand("validate", "check instance validity");
  add_common(validate, opts, false);
  validate->add_flag("--strict", strict, "also check tunnel width (property 4)");

  CLI::App* md = app.add_subcommand("md", "matching dilation of an instance");
  add_common(md, opts, false);

  CLI::App* check = app.add_subcommand("check", "replay a trace and verify invariants");
  check->add_option("--trace", trace_path, "trace file")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (run->parsed()) {
      Instance inst = make_instance(opts);
      if (!opts.skip_validation) {
        ValidationResult v = validate_instance(inst);
        if (!v.ok()) return report_validation(v);
      }
      int limit = opts.max_rounds > 0 ? opts.max_rounds : 50 * inst.n();
      Trace trace = run_async(inst, make_sequence(opts), make_config(opts), limit);
      Configuration final_cfg = trace.configuration_after(
          static_cast<int>(trace.rounds.size()));
      MatchingDilationResult mdr = matching_dilation(inst);
      auto ratio = competitive_ratio_estimate(trace, mdr);

      std::cout << "n=" << inst.n() << " rounds=" << trace.rounds_to_quiescence()
                << " quiesced=" << (trace.quiesced ? "yes" : "no")
                << " legal=" << (is_legal(final_cfg) ? "yes" : "no") << " md=" << mdr.value
                << " (lower bound, not OPT)"
                << " ratio=";
      if (ratio)
        std::cout << *ratio;
      else
        std::cout << "undefined";
      std::cout << "\n";
      if (emit == "json") {
        fs::path p(out_path);
        if (fs::is_directory(p)) p /= "trace.jsonl";
        save_trace(trace, p.string());
        std::cout << "trace written to " << p.string() << "\n";
      }
      return trace.round_limit_exceeded ? kExitRoundLimit : kExitOk;
    }

    if (experiment->parsed()) {
      ExperimentPlan plan = plan_from_json([&] {
        std::ifstream in(plan_path);
        if (!in) throw std::runtime_error("cannot open plan " + plan_path);
        return std::string(std::istreambuf_iterator<char>(in), {});
      }());
      ExperimentResult result = run_experiment(plan);
      fs::path dir(out_path);
      fs::create_directories(dir);
      if (exp_emit.find("csv") != std::string::npos) {
        std::ofstream(dir / "runs.csv") << result.runs_csv();
        std::ofstream(dir / "summary.csv") << result.summary_csv();
        std::cout << "wrote " << (dir / "runs.csv").string() << ", "
                  << (dir / "summary.csv").string() << "\n";
      }
      if (exp_emit.find("svg") != std::string::npos) {
        std::ofstream(dir / "rounds_vs_n.svg") << result.svg_rounds_vs_n();
        std::ofstream(dir / "ratio_vs_n.svg") << result.svg_ratio_vs_n();
        std::ofstream(dir / "rounds_vs_radius.svg") << result.svg_rounds_vs_radius();
        std::cout << "wrote SVG charts to " << dir.string() << "\n";
      }
      bool any_limit = std::any_of(result.runs.begin(), result.runs.end(),
                                   [](const RunRow& r) { return r.limit_exceeded; });
      return any_limit ? kExitRoundLimit : kExitOk;
    }

    if (validate->parsed()) {
      Instance inst = make_instance(opts);
      ValidationResult v = validate_instance(inst, strict);
      if (v.ok()) {
        std::cout << "valid (properties 1-3"
                  << (v.property4_checked ? ", 4 checked" : "; 4 unchecked") << ")\n";
      }
      return report_validation(v);
    }

    if (md->parsed()) {
      Instance inst = make_instance(opts);
      MatchingDilationResult mdr = matching_dilation(inst);
      std::cout << "md=" << mdr.value << " (lower bound, not OPT)\n";
      return kExitOk;
    }

    if (check->parsed()) {
      Trace trace = load_trace(trace_path);
      for (ScheduleMode mode :
           {ScheduleMode::Parallel, ScheduleMode::ComplaintBasedParallel}) {
        const char* name =
            mode == ScheduleMode::Parallel ? "parallel" : "complaint-based";
        ScheduleBuildResult built = build_greedy_forest_schedule(trace, mode);
        if (!built.schedule) {
          std::cerr << name << ": " << built.error << "\n";
          return kExitInvariant;
        }
        for (auto [label, report] :
             {std::pair{"schedule validity", validate_parallel_schedule(*built.schedule)},
              std::pair{"dominance", check_dominance(trace, *built.schedule)},
              std::pair{"expanded-parent invariant",
                        check_expanded_parent_invariant(trace, *built.schedule)}}) {
          if (!report.ok) {
            std::cerr << name << " " << label << ": " << report.message << "\n";
            return kExitInvariant;
          }
        }
        std::cout << name << ": ok (" << built.schedule->step_count() << " steps vs "
                  << trace.rounds_to_quiescence() << " rounds)\n";
      }
      return kExitOk;
    }
  } catch (const BadParity& e) {
    std::cerr << e.what() << "\n";
    return kExitValidation;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitInvariant;
  }
  return kExitOk;
}
