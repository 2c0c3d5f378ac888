#include <CLI11.hpp>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include "foldcont/errors.hpp"
#include "foldcont/format.hpp"
#include "foldcont/io.hpp"
#include "foldcont/runs.hpp"

using namespace foldcont;
namespace fs = std::filesystem;

namespace {

enum ExitCode { kOk = 0, kFailure = 1, kDegenerate = 2, kThresholdMiss = 3 };

struct Options {
  std::string config_path;
  std::vector<std::string> sets;
  std::optional<std::uint64_t> seed;
  std::optional<int> jobs;
  std::optional<std::string> out;
  bool verbose = false;
  bool quiet = false;
  bool dump_config = false;
  // trace
  std::string resume;
  bool self_test = false;
  bool dump_operator = false;
  // spectrum
  std::string point;
};

std::string error_name(const std::exception& e) {
  if (dynamic_cast<const ConfigError*>(&e)) return "ConfigError";
  if (dynamic_cast<const DomainError*>(&e)) return "DomainError";
  if (dynamic_cast<const DegenerateMapError*>(&e)) return "DegenerateMapError";
  if (dynamic_cast<const SingularJacobian*>(&e)) return "SingularJacobian";
  if (dynamic_cast<const NoConvergence*>(&e)) return "NoConvergence";
  if (dynamic_cast<const SingularBordered*>(&e)) return "SingularBordered";
  if (dynamic_cast<const EigSolverFailure*>(&e)) return "EigSolverFailure";
  if (dynamic_cast<const BracketError*>(&e)) return "BracketError";
  if (dynamic_cast<const InsufficientSamples*>(&e)) return "InsufficientSamples";
  if (dynamic_cast<const NotAFold*>(&e)) return "NotAFold";
  if (dynamic_cast<const BlowupError*>(&e)) return "BlowupError";
  if (dynamic_cast<const StepFailure*>(&e)) return "StepFailure";
  if (dynamic_cast<const Error*>(&e)) return "Error";
  return "InternalError";
}

RunConfig resolve_config(const Options& o) {
  RunConfig c = o.config_path.empty() ? RunConfig{} : load_run_config(o.config_path);
  for (const std::string& s : o.sets) {
    const auto eq = s.find('=');
    if (eq == std::string::npos) throw ConfigError("--set expects key=value, got '" + s + "'");
    c.set(s.substr(0, eq), s.substr(eq + 1));
  }
  if (o.seed) c.seed = *o.seed;
  if (o.jobs) c.jobs = *o.jobs;
  if (o.out) c.out = *o.out;
  if (o.verbose) c.log_level = "verbose";
  if (o.quiet) c.log_level = "quiet";
  c.validate();
  return c;
}

void log_line(const std::string& line) { std::cerr << line << '\n'; }

std::string read_file(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read '" + path.string() + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

BranchPoint load_point(const fs::path& path) {
  try {
    return branch_point_from_json(Json::parse(read_file(path)));
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
}

int cmd_trace(const RunConfig& c, const Options& o) {
  const fs::path out = c.out;
  const MappedProblem mp = build_problem(c);
  const Problem& p = mp.problem;
  write_atomic(out / "run_config.txt", to_text(c));
  if (o.dump_operator) {
    write_atomic(out / "operator.txt", operator_triplets(*p.op));
    write_atomic(out / "mesh.txt", mesh_nodes(*p.op->mesh));
  }
  std::optional<BranchPoint> resume;
  if (!o.resume.empty()) resume = load_point(o.resume);
  const Branch br = trace_continuum(p, continuation_config(c, log_line), resume ? &*resume : nullptr);

  Json events = Json::array();
  for (const BranchEvent& e : br.events) events.push_back(to_json(e));
  Json folds = Json::array();
  for (const FoldRecord& f : br.folds) folds.push_back(to_json(f));
  const std::string jsonl = branch_jsonl(br);
  const std::string csv = branch_csv(br);
  write_atomic(out / "branch.jsonl", jsonl);
  write_atomic(out / "branch.csv", csv);
  write_atomic(out / "events.json", dump_json(events) + "\n");
  write_atomic(out / "folds.json", dump_json(folds) + "\n");
  write_atomic(out / "last_point.json", dump_json(to_json(br.points.back(), true)) + "\n");
  write_atomic(out / "snapshots.txt", snapshot_text(br));

  for (const FoldRecord& f : br.folds) {
    std::cout << "fold " << f.id << " mu=" << format_real(f.mu_fold) << " sup_norm=" << format_real(f.sup_norm)
              << " gap=" << format_real(f.spectral_gap)
              << " transversality=" << format_real(f.transversality.normalized) << "\n";
  }
  const BranchPoint& last = br.points.back();
  std::cout << "points=" << br.points.size() << " last mu=" << format_real(last.mu)
            << " sup_norm=" << format_real(last.sup_norm) << " terminal="
            << (br.events.empty() ? "none" : to_string(br.events.back().kind)) << "\n";

  if (o.self_test) {
    const std::string mismatch =
        compare_branch_dumps(read_file(out / "branch.jsonl"), read_file(out / "branch.csv"));
    if (!mismatch.empty()) {
      std::cerr << "self-test failed: " << mismatch << "\n";
      return kFailure;
    }
    std::cout << "self-test: branch.jsonl and branch.csv agree\n";
  }
  if (br.count(EventKind::DegeneratePoint) > 0) return kDegenerate;
  if (br.count(EventKind::MaxSteps) > 0 || br.count(EventKind::NewtonFailure) > 0) return kFailure;
  return kOk;
}

int cmd_shape_check(const RunConfig& c) {
  const ShapeCheck sc = run_shape_check(c, continuation_config(c, log_line));
  write_atomic(fs::path(c.out) / "run_config.txt", to_text(c));
  write_atomic(fs::path(c.out) / "shape_report.json", dump_json(sc.json) + "\n");
  std::cout << "observed_order=" << format_real(sc.report.observed_order)
            << " richardson_gap=" << format_real(sc.report.richardson_gap)
            << " hadamard_gap=" << format_real(sc.report.hadamard.relative_gap) << "\n";
  return sc.passed ? kOk : kThresholdMiss;
}

int cmd_generic_exp(const RunConfig& c) {
  const ExperimentReport rep = run_experiment(c);
  write_atomic(fs::path(c.out) / "run_config.txt", to_text(c));
  write_atomic(fs::path(c.out) / "experiment.json", dump_json(to_json(rep)) + "\n");
  const ExperimentSummary& s = rep.summary;
  std::cout << "samples=" << s.n_samples << " failed=" << s.n_failed << " folds=" << s.n_folds
            << " degenerate_halts=" << s.degenerate_halts << " min_gap=" << format_real(s.min_spectral_gap)
            << " min_transversality=" << format_real(s.min_transversality) << "\n";
  return kOk;
}

int cmd_oracle(const RunConfig& c) {
  const OracleTables t = run_oracle(c);
  const fs::path out = c.out;
  write_atomic(out / "radial.csv", t.radial_csv);
  write_atomic(out / "shooting.csv", t.shooting_csv);
  write_atomic(out / "oracle.json", dump_json(t.json) + "\n");
  std::cout << t.radial_csv << "\n" << t.shooting_csv << "\nfold_mu," << format_real(t.json["fold_mu"].get<double>())
            << "\n";
  return kOk;
}

int cmd_spectrum(const RunConfig& c, const Options& o) {
  std::optional<BranchPoint> point;
  if (!o.point.empty()) point = load_point(o.point);
  const Spectrum sp = run_spectrum(c, continuation_config(c, log_line), point ? &*point : nullptr);
  write_atomic(fs::path(c.out) / "spectrum.csv", sp.csv);
  std::cout << "mu=" << format_real(sp.mu) << " morse_index=" << sp.morse_index << "\n" << sp.csv;
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Fold continuation for semilinear Dirichlet problems on mapped domains"};
  app.require_subcommand(1);
  app.fallthrough();
  Options o;
  app.add_option("--config", o.config_path, "Config file (sectioned key = value)")->check(CLI::ExistingFile);
  app.add_option("--set", o.sets, "Override a config key: section.key=value");
  app.add_option("--seed", o.seed, "Master seed");
  app.add_option("--jobs", o.jobs, "Worker threads");
  app.add_option("--out", o.out, "Output directory");
  auto* verbose = app.add_flag("--verbose", o.verbose, "Stream per-iteration JSON lines to stderr");
  app.add_flag("--quiet", o.quiet, "No progress output")->excludes(verbose);
  app.add_flag("--dump-config", o.dump_config, "Print the resolved config and exit");

  auto* trace = app.add_subcommand("trace", "Trace the solution continuum through its folds");
  trace->add_option("--resume", o.resume, "Continue from a last_point.json")->check(CLI::ExistingFile);
  trace->add_flag("--self-test", o.self_test, "Cross-check branch.csv against branch.jsonl");
  trace->add_flag("--dump-operator", o.dump_operator, "Write operator.txt and mesh.txt");
  auto* shape = app.add_subcommand("shape-check", "Check the domain derivative at the first fold");
  auto* generic = app.add_subcommand("generic-exp", "Trace folds on randomly perturbed domains");
  auto* oracle = app.add_subcommand("oracle", "Radial family and shooting tables");
  auto* spectrum = app.add_subcommand("spectrum", "Eigenvalue table at a branch point");
  spectrum->add_option("--point", o.point, "Branch point JSON with a stored state")->check(CLI::ExistingFile);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kFailure;
  }

  std::string out_dir = o.out.value_or("out");
  try {
    const RunConfig c = resolve_config(o);
    out_dir = c.out;
    if (o.dump_config) {
      std::cout << to_text(c);
      return kOk;
    }
    if (trace->parsed()) return cmd_trace(c, o);
    if (shape->parsed()) return cmd_shape_check(c);
    if (generic->parsed()) return cmd_generic_exp(c);
    if (oracle->parsed()) return cmd_oracle(c);
    if (spectrum->parsed()) return cmd_spectrum(c, o);
    return kFailure;
  } catch (const std::exception& e) {
    const std::string name = error_name(e);
    std::cerr << name << ": " << e.what() << "\n";
    const std::string command = app.get_subcommands().empty() ? "" : app.get_subcommands().front()->get_name();
    try {
      write_atomic(fs::path(out_dir) / "error.json",
                   dump_json(Json{{"command", command}, {"error", name}, {"message", e.what()}, {"exit_code", 1}}) +
                       "\n");
    } catch (const std::exception&) {
    }
    return kFailure;
  }
}
