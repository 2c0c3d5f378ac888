#include "foldcont/io.hpp"

#include <unistd.h>

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <functional>
#include <map>
#include <set>
#include <sstream>
#include <tuple>

#include "foldcont/errors.hpp"
#include "foldcont/format.hpp"

namespace foldcont {
namespace {

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

void parse_value(std::string_view key, std::string_view text, double& out) {
  const std::string t = trim(text);
  char* end = nullptr;
  out = std::strtod(t.c_str(), &end);
  if (t.empty() || end != t.c_str() + t.size()) throw ConfigError(std::string(key) + ": expected a number, got '" + t + "'");
}

void parse_value(std::string_view key, std::string_view text, int& out) {
  const std::string t = trim(text);
  const auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), out);
  if (t.empty() || ec != std::errc() || ptr != t.data() + t.size()) {
    throw ConfigError(std::string(key) + ": expected an integer, got '" + t + "'");
  }
}

void parse_value(std::string_view key, std::string_view text, std::uint64_t& out) {
  const std::string t = trim(text);
  const auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), out);
  if (t.empty() || ec != std::errc() || ptr != t.data() + t.size()) {
    throw ConfigError(std::string(key) + ": expected an unsigned integer, got '" + t + "'");
  }
}

void parse_value(std::string_view key, std::string_view text, bool& out) {
  const std::string t = trim(text);
  if (t == "true" || t == "1" || t == "yes") {
    out = true;
  } else if (t == "false" || t == "0" || t == "no") {
    out = false;
  } else {
    throw ConfigError(std::string(key) + ": expected true or false, got '" + t + "'");
  }
}

void parse_value(std::string_view, std::string_view text, std::string& out) { out = trim(text); }

void parse_value(std::string_view key, std::string_view text, std::vector<double>& out) {
  out.clear();
  const std::string t = trim(text);
  if (t.empty()) return;
  std::size_t start = 0;
  while (start <= t.size()) {
    const std::size_t comma = std::min(t.find(',', start), t.size());
    double x = 0.0;
    parse_value(key, std::string_view(t).substr(start, comma - start), x);
    out.push_back(x);
    start = comma + 1;
  }
}

std::string show(double x) { return format_real(x); }
std::string show(int x) { return std::to_string(x); }
std::string show(std::uint64_t x) { return std::to_string(x); }
std::string show(bool x) { return x ? "true" : "false"; }
std::string show(const std::string& x) { return x; }
std::string show(const std::vector<double>& xs) {
  std::string out;
  for (std::size_t i = 0; i < xs.size(); ++i) out += (i ? "," : "") + format_real(xs[i]);
  return out;
}

struct Field {
  std::string key;
  std::function<std::string(const RunConfig&)> get;
  std::function<void(RunConfig&, std::string_view)> set;
};

template <class T>
Field field(const char* key, T RunConfig::*member) {
  return {key, [member](const RunConfig& c) { return show(c.*member); },
          [member, key](RunConfig& c, std::string_view v) { parse_value(key, v, c.*member); }};
}

const std::vector<Field>& fields() {
  static const std::vector<Field> table = {
      field("problem.nonlinearity", &RunConfig::nonlinearity),
      field("problem.domain", &RunConfig::domain),
      field("problem.diffeo", &RunConfig::diffeo),
      field("continuation.ds_init", &RunConfig::ds_init),
      field("continuation.ds_min", &RunConfig::ds_min),
      field("continuation.ds_max", &RunConfig::ds_max),
      field("continuation.dmu_init", &RunConfig::dmu_init),
      field("continuation.mu_floor", &RunConfig::mu_floor),
      field("continuation.norm_cap", &RunConfig::norm_cap),
      field("continuation.max_steps", &RunConfig::max_steps),
      field("continuation.omega", &RunConfig::omega),
      field("continuation.switch_fraction", &RunConfig::switch_fraction),
      field("continuation.snapshot_every", &RunConfig::snapshot_every),
      field("newton.tol", &RunConfig::newton_tol),
      field("newton.max_iter", &RunConfig::newton_max_iter),
      field("newton.max_halvings", &RunConfig::newton_max_halvings),
      field("newton.linear_solver", &RunConfig::linear_solver),
      field("spectral.eig_tol", &RunConfig::eig_tol),
      field("spectral.fold_tol", &RunConfig::fold_tol),
      field("spectral.transversal_threshold", &RunConfig::transversal_threshold),
      field("spectral.cr_check", &RunConfig::cr_check),
      field("spectral.cr_window", &RunConfig::cr_window),
      field("spectral.cr_step", &RunConfig::cr_step),
      field("shape.epsilons", &RunConfig::shape_epsilons),
      field("shape.mode", &RunConfig::shape_mode),
      field("shape.sine", &RunConfig::shape_sine),
      field("shape.tangential", &RunConfig::shape_tangential),
      field("shape.scale", &RunConfig::shape_scale),
      field("shape.order_threshold", &RunConfig::shape_order_threshold),
      field("shape.hadamard_threshold", &RunConfig::shape_hadamard_threshold),
      field("experiment.domain", &RunConfig::experiment_domain),
      field("experiment.n_samples", &RunConfig::experiment_samples),
      field("experiment.amplitude", &RunConfig::experiment_amplitude),
      field("experiment.n_modes", &RunConfig::experiment_modes),
      field("oracle.b_grid", &RunConfig::oracle_b_grid),
      field("oracle.mu_grid", &RunConfig::oracle_mu_grid),
      field("oracle.fold_tol", &RunConfig::oracle_fold_tol),
      field("spectrum.k", &RunConfig::spectrum_k),
      field("spectrum.mu", &RunConfig::spectrum_mu),
      field("run.seed", &RunConfig::seed),
      field("run.jobs", &RunConfig::jobs),
      field("run.out", &RunConfig::out),
      field("run.log_level", &RunConfig::log_level),
  };
  return table;
}

const Field& find_field(std::string_view key) {
  for (const Field& f : fields()) {
    if (f.key == key) return f;
  }
  throw ConfigError("unknown key '" + std::string(key) + "'");
}

template <class Fn>
void with_key(const std::string& key, Fn fn) {
  try {
    fn();
  } catch (const ConfigError& e) {
    throw ConfigError(key + ": " + e.what());
  }
}

void dump_into(const Json& j, int indent, int depth, std::string& out) {
  const std::string pad = indent >= 0 ? "\n" + std::string(static_cast<std::size_t>(indent * (depth + 1)), ' ') : "";
  const std::string close = indent >= 0 ? "\n" + std::string(static_cast<std::size_t>(indent * depth), ' ') : "";
  const char* colon = indent >= 0 ? ": " : ":";
  switch (j.type()) {
    case Json::value_t::number_float: {
      const double x = j.get<double>();
      out += std::isfinite(x) ? format_real(x) : "null";
      return;
    }
    case Json::value_t::array: {
      if (j.empty()) {
        out += "[]";
        return;
      }
      // Numeric arrays stay on one line.
      const bool flat = std::all_of(j.begin(), j.end(), [](const Json& e) { return e.is_primitive(); });
      out += '[';
      bool first = true;
      for (const Json& e : j) {
        if (!first) out += ',';
        if (!flat) out += pad;
        dump_into(e, indent, depth + 1, out);
        first = false;
      }
      if (!flat) out += close;
      out += ']';
      return;
    }
    case Json::value_t::object: {
      if (j.empty()) {
        out += "{}";
        return;
      }
      out += '{';
      bool first = true;
      for (auto it = j.begin(); it != j.end(); ++it) {
        if (!first) out += ',';
        out += pad;
        out += Json(it.key()).dump();
        out += colon;
        dump_into(it.value(), indent, depth + 1, out);
        first = false;
      }
      out += close;
      out += '}';
      return;
    }
    default:
      out += j.dump();
  }
}

Json vector_json(const Vector& v) {
  Json a = Json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(v[i]);
  return a;
}

Vector vector_from_json(const Json& j) {
  Vector v(static_cast<Eigen::Index>(j.size()));
  for (std::size_t i = 0; i < j.size(); ++i) v[static_cast<Eigen::Index>(i)] = j[i].is_null() ? NAN : j[i].get<double>();
  return v;
}

Json scalar_row(const BranchPoint& p) {
  return Json{{"s", p.s}, {"mu", p.mu}, {"sup_norm", p.sup_norm}, {"sigma1", p.sigma1}, {"morse_index", p.morse_index}};
}

}  // namespace

void RunConfig::set(std::string_view dotted_key, std::string_view value) { find_field(dotted_key).set(*this, value); }

std::string RunConfig::get(std::string_view dotted_key) const { return find_field(dotted_key).get(*this); }

std::vector<std::string> RunConfig::keys() {
  std::vector<std::string> out;
  for (const Field& f : fields()) out.push_back(f.key);
  return out;
}

ContinuationConfig RunConfig::continuation() const {
  ContinuationConfig c;
  c.ds_init = ds_init;
  c.ds_min = ds_min;
  c.ds_max = ds_max;
  c.dmu_init = dmu_init;
  c.mu_floor = mu_floor;
  c.norm_cap = norm_cap;
  c.max_steps = max_steps;
  c.omega = omega;
  c.switch_fraction = switch_fraction;
  c.snapshot_every = snapshot_every;
  c.fold_tol = fold_tol;
  c.transversal_threshold = transversal_threshold;
  c.cr_check = cr_check;
  c.cr_window = cr_window;
  c.cr_step = cr_step;
  c.newton.tol = newton_tol;
  c.newton.max_iter = newton_max_iter;
  c.newton.max_halvings = newton_max_halvings;
  c.newton.solver = parse_linear_solver(linear_solver);
  c.eig.tol = eig_tol;
  return c;
}

void RunConfig::validate() const {
  with_key("newton.linear_solver", [&] { parse_linear_solver(linear_solver); });
  try {
    continuation().validate();
  } catch (const ConfigError& e) {
    throw ConfigError(std::string("continuation.") + e.what());
  }
  with_key("problem.nonlinearity", [&] { parse_nonlinearity(nonlinearity); });
  ReferenceDomain d;
  with_key("problem.domain", [&] { d = parse_domain(domain); });
  with_key("problem.diffeo", [&] { parse_diffeomorphism(diffeo, d); });
  with_key("experiment.domain", [&] { parse_domain(experiment_domain); });
  auto require = [](bool ok, const char* key, const char* what) {
    if (!ok) throw ConfigError(std::string(key) + ": " + what);
  };
  require(eig_tol > 0.0, "spectral.eig_tol", "must be positive");
  require(newton_max_halvings >= 0, "newton.max_halvings", "must be non-negative");
  require(shape_epsilons.size() >= 2, "shape.epsilons", "needs at least two values");
  for (double e : shape_epsilons) require(e > 0.0, "shape.epsilons", "values must be positive");
  require(shape_mode >= 0, "shape.mode", "must be non-negative");
  require(std::isfinite(shape_scale), "shape.scale", "must be finite");
  require(shape_hadamard_threshold > 0.0, "shape.hadamard_threshold", "must be positive");
  require(experiment_samples >= 1, "experiment.n_samples", "must be at least 1");
  require(experiment_amplitude >= 0.0, "experiment.amplitude", "must be non-negative");
  require(experiment_modes >= 1, "experiment.n_modes", "must be at least 1");
  for (double b : oracle_b_grid) require(b > 0.0, "oracle.b_grid", "values must be positive");
  for (double mu : oracle_mu_grid) require(mu >= 0.0, "oracle.mu_grid", "values must be non-negative");
  require(oracle_fold_tol > 0.0, "oracle.fold_tol", "must be positive");
  require(spectrum_k >= 1, "spectrum.k", "must be at least 1");
  require(spectrum_mu >= 0.0, "spectrum.mu", "must be non-negative");
  require(jobs >= 1, "run.jobs", "must be at least 1");
  require(!out.empty(), "run.out", "must not be empty");
  require(log_level == "quiet" || log_level == "normal" || log_level == "verbose", "run.log_level",
          "expected quiet | normal | verbose");
}

RunConfig parse_run_config(std::string_view text) {
  RunConfig c;
  std::string section;
  std::set<std::string> seen;
  std::istringstream in{std::string(text)};
  std::string raw;
  int line_no = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    const std::string line = trim(raw);
    if (line.empty() || line[0] == '#' || line[0] == ';') continue;
    const std::string where = " (line " + std::to_string(line_no) + ")";
    if (line.front() == '[') {
      if (line.back() != ']') throw ConfigError("malformed section header" + where);
      section = trim(std::string_view(line).substr(1, line.size() - 2));
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ConfigError("expected key = value" + where);
    const std::string key = (section.empty() ? "" : section + ".") + trim(std::string_view(line).substr(0, eq));
    if (!seen.insert(key).second) throw ConfigError("repeated key '" + key + "'" + where);
    try {
      c.set(key, std::string_view(line).substr(eq + 1));
    } catch (const ConfigError& e) {
      throw ConfigError(e.what() + where);
    }
  }
  return c;
}

RunConfig load_run_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config file '" + path.string() + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_run_config(ss.str());
}

std::string to_text(const RunConfig& config) {
  std::string out;
  std::string section;
  for (const Field& f : fields()) {
    const auto dot = f.key.find('.');
    const std::string sec = f.key.substr(0, dot);
    if (sec != section) {
      if (!section.empty()) out += '\n';
      out += "[" + sec + "]\n";
      section = sec;
    }
    out += f.key.substr(dot + 1) + " = " + f.get(config) + "\n";
  }
  return out;
}

std::string dump_json(const Json& value, int indent) {
  std::string out;
  dump_into(value, indent, 0, out);
  return out;
}

void write_atomic(const std::filesystem::path& path, const std::string& content) {
  namespace fs = std::filesystem;
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  const fs::path tmp = path.string() + ".tmp." + std::to_string(::getpid());
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot write '" + tmp.string() + "'");
    out << content;
    out.flush();
    if (!out) throw Error("write failed for '" + tmp.string() + "'");
  }
  fs::rename(tmp, path);
}

Json to_json(const BranchPoint& p, bool with_state) {
  Json j = scalar_row(p);
  j["tangent_mu"] = p.tangent_mu;
  j["newton_iterations"] = p.newton_iterations;
  j["minimal"] = p.minimal;
  j["fold"] = p.fold;
  if (with_state) {
    j["v"] = vector_json(p.v);
    j["tangent_v"] = vector_json(p.tangent_v);
    j["newton_history"] = p.newton_history;
  }
  return j;
}

BranchPoint branch_point_from_json(const Json& j) {
  try {
    BranchPoint p;
    p.s = j.at("s").get<double>();
    p.mu = j.at("mu").get<double>();
    p.sup_norm = j.at("sup_norm").get<double>();
    p.sigma1 = j.at("sigma1").get<double>();
    p.morse_index = j.at("morse_index").get<int>();
    p.tangent_mu = j.value("tangent_mu", 0.0);
    p.newton_iterations = j.value("newton_iterations", 0);
    p.minimal = j.value("minimal", false);
    p.fold = j.value("fold", false);
    if (j.contains("v")) p.v = vector_from_json(j.at("v"));
    if (j.contains("tangent_v")) p.tangent_v = vector_from_json(j.at("tangent_v"));
    if (j.contains("newton_history")) p.newton_history = j.at("newton_history").get<std::vector<double>>();
    return p;
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("branch point: ") + e.what());
  }
}

Json to_json(const BranchEvent& e) {
  Json j{{"kind", to_string(e.kind)}, {"s_at", e.s_at}};
  if (e.fold_id >= 0) j["fold_id"] = e.fold_id;
  j["message"] = e.message;
  return j;
}

Json to_json(const FoldRecord& f, bool with_eigenfunction) {
  Json j{{"id", f.id},
         {"s_fold", f.s_fold},
         {"mu_fold", f.mu_fold},
         {"sup_norm", f.sup_norm},
         {"sigma", f.eigenpair.sigma},
         {"eigen_residual", f.eigenpair.residual},
         {"spectral_gap", f.spectral_gap},
         {"transversality", f.transversality.value},
         {"transversality_normalized", f.transversality.normalized},
         {"morse_before", f.morse_before},
         {"morse_after", f.morse_after},
         {"mu_dot_changes_sign", f.mu_dot_changes_sign},
         {"simple", f.simple},
         {"transversal", f.transversal}};
  Json cr = nullptr;
  if (f.cr.populated) {
    cr = Json{{"mu_prime_at_fold", f.cr.mu_prime_at_fold},
              {"mu_second_at_fold", f.cr.mu_second_at_fold},
              {"mu_prime_scaled", f.cr.mu_prime_scaled},
              {"xi_second_order_slope", f.cr.xi_second_order_slope},
              {"ratio_law_error", f.cr.ratio_law_error},
              {"ratio_expected", f.cr.ratio_expected}};
  }
  j["cr"] = cr;
  if (with_eigenfunction) j["phi"] = vector_json(f.eigenpair.phi);
  return j;
}

Json to_json(const ShapeDerivativeReport& r) {
  Json j{{"epsilons", r.epsilons},       {"fd_values", r.fd_values},
         {"errors", r.errors},           {"formula_value", r.formula_value},
         {"observed_order", r.observed_order}, {"richardson_gap", r.richardson_gap}};
  j["hadamard"] = r.has_hadamard ? Json{{"lhs", r.hadamard.lhs},
                                        {"rhs", r.hadamard.rhs},
                                        {"relative_gap", r.hadamard.relative_gap}}
                                 : Json(nullptr);
  return j;
}

Json to_json(const ExperimentReport& r) {
  Json samples = Json::array();
  for (const SampleReport& s : r.samples) {
    Json folds = Json::array();
    for (const FoldSummary& f : s.folds) {
      folds.push_back({{"mu_fold", f.mu_fold},
                       {"sup_norm", f.sup_norm},
                       {"spectral_gap", f.spectral_gap},
                       {"transversality", f.transversality},
                       {"ratio_law_error", f.ratio_law_error},
                       {"simple", f.simple},
                       {"transversal", f.transversal}});
    }
    samples.push_back({{"index", s.index},
                       {"seed", s.seed},
                       {"status", s.status},
                       {"message", s.message},
                       {"max_amplitude", s.max_amplitude},
                       {"coefficients", s.coefficients},
                       {"events", s.events},
                       {"degenerate_points", s.degenerate_points},
                       {"folds", folds}});
  }
  const ExperimentSummary& m = r.summary;
  return Json{{"samples", samples},
              {"summary",
               {{"n_samples", m.n_samples},
                {"n_failed", m.n_failed},
                {"n_folds", m.n_folds},
                {"degenerate_halts", m.degenerate_halts},
                {"min_spectral_gap", m.min_spectral_gap},
                {"min_transversality", m.min_transversality},
                {"all_simple", m.all_simple},
                {"all_transversal", m.all_transversal}}}};
}

std::string branch_jsonl(const Branch& br) {
  std::string out;
  for (const BranchPoint& p : br.points) out += dump_json(scalar_row(p), -1) + "\n";
  return out;
}

std::string branch_csv(const Branch& br) {
  std::string out = "s,mu,sup_norm,sigma1,morse_index\n";
  for (const BranchPoint& p : br.points) {
    out += format_real(p.s) + "," + format_real(p.mu) + "," + format_real(p.sup_norm) + "," + format_real(p.sigma1) +
           "," + std::to_string(p.morse_index) + "\n";
  }
  return out;
}

std::string snapshot_text(const Branch& br) {
  std::string out;
  for (std::size_t i = 0; i < br.points.size(); ++i) {
    const BranchPoint& p = br.points[i];
    if (!p.has_snapshot()) continue;
    out += std::to_string(i);
    for (Eigen::Index k = 0; k < p.v.size(); ++k) out += " " + format_real(p.v[k]);
    out += "\n";
  }
  return out;
}

std::string compare_branch_dumps(const std::string& jsonl, const std::string& csv) {
  std::istringstream js(jsonl), cs(csv);
  std::string jline, cline;
  if (!std::getline(cs, cline) || trim(cline) != "s,mu,sup_norm,sigma1,morse_index") return "csv header mismatch";
  const char* names[] = {"s", "mu", "sup_norm", "sigma1", "morse_index"};
  int row = 0;
  while (true) {
    const bool has_j = static_cast<bool>(std::getline(js, jline));
    const bool has_c = static_cast<bool>(std::getline(cs, cline));
    if (!has_j && !has_c) return {};
    if (has_j != has_c) return "row count mismatch at row " + std::to_string(row);
    Json j;
    try {
      j = Json::parse(jline);
    } catch (const nlohmann::json::exception&) {
      return "unparsable jsonl row " + std::to_string(row);
    }
    std::vector<std::string> cols;
    std::stringstream cstream(cline);
    std::string cell;
    while (std::getline(cstream, cell, ',')) cols.push_back(trim(cell));
    if (cols.size() != 5) return "csv row " + std::to_string(row) + " has " + std::to_string(cols.size()) + " columns";
    for (int k = 0; k < 5; ++k) {
      const Json& v = j.at(names[k]);
      const double a = v.is_null() ? NAN : v.get<double>();
      const double b = std::strtod(cols[static_cast<std::size_t>(k)].c_str(), nullptr);
      const bool same = (std::isnan(a) && std::isnan(b)) || format_real(a) == format_real(b);
      if (!same) return "row " + std::to_string(row) + " column " + names[k] + " differs";
    }
    ++row;
  }
}

std::string operator_triplets(const DiscreteOperator& op) {
  std::vector<std::tuple<int, int, double>> t;
  for (int k = 0; k < op.stiffness.outerSize(); ++k) {
    for (SparseMatrix::InnerIterator it(op.stiffness, k); it; ++it) {
      t.emplace_back(static_cast<int>(it.row()), static_cast<int>(it.col()), it.value());
    }
  }
  std::sort(t.begin(), t.end());
  std::string out = "# stiffness row col value\n";
  for (const auto& [r, c, v] : t) out += std::to_string(r) + " " + std::to_string(c) + " " + format_real(v) + "\n";
  out += "# weights i i w\n";
  for (int i = 0; i < op.size(); ++i) out += std::to_string(i) + " " + std::to_string(i) + " " + format_real(op.weights[i]) + "\n";
  return out;
}

std::string mesh_nodes(const Mesh& mesh) {
  std::string out = "# node x y kind\n";
  for (int i = 0; i < mesh.num_nodes(); ++i) {
    out += std::to_string(i) + " " + format_real(mesh.nodes[i].x()) + " " + format_real(mesh.nodes[i].y()) + " " +
           (mesh.unknown_of_node[i] < 0 ? "1" : "0") + "\n";
  }
  return out;
}

}  // namespace foldcont
