#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "foldcont/continuation.hpp"
#include "foldcont/shape.hpp"

namespace foldcont {

using Json = nlohmann::ordered_json;

/// Everything a run needs. Serialized as sectioned key = value text.
struct RunConfig {
  // [problem]
  std::string nonlinearity = "exp";
  std::string domain = "interval:512";
  std::string diffeo = "none";
  // [continuation]
  double ds_init = 0.05;
  double ds_min = 1e-6;
  double ds_max = 0.5;
  double dmu_init = 0.1;
  double mu_floor = 0.05;
  double norm_cap = 20.0;
  int max_steps = 2000;
  double omega = 0.5;
  double switch_fraction = 0.3;
  int snapshot_every = 1;
  // [newton]
  double newton_tol = 1e-10;
  int newton_max_iter = 25;
  int newton_max_halvings = 8;
  std::string linear_solver = "auto";
  // [spectral]
  double eig_tol = 1e-8;
  double fold_tol = 1e-8;
  double transversal_threshold = 1e-3;
  bool cr_check = true;
  int cr_window = 4;
  double cr_step = 0.01;
  // [shape]
  std::vector<double> shape_epsilons = {1e-2, 1e-3, 1e-4};
  int shape_mode = 1;
  bool shape_sine = false;
  bool shape_tangential = false;
  double shape_scale = 1.0;
  double shape_order_threshold = 0.9;
  double shape_hadamard_threshold = 0.05;
  // [experiment]
  std::string experiment_domain = "rect:32x32:1x1";
  int experiment_samples = 20;
  double experiment_amplitude = 0.02;
  int experiment_modes = 4;
  // [oracle]
  std::vector<double> oracle_b_grid = {0.5, 1.0, 2.0};
  std::vector<double> oracle_mu_grid = {0.5, 1.0, 2.0, 3.0, 3.5};
  double oracle_fold_tol = 1e-9;
  // [spectrum]
  int spectrum_k = 6;
  double spectrum_mu = 1.0;
  // [run]
  std::uint64_t seed = 0;
  int jobs = 1;
  std::string out = "out";
  std::string log_level = "normal";  // quiet | normal | verbose

  /// Sets `section.key` from text. Throws ConfigError naming the key.
  void set(std::string_view dotted_key, std::string_view value);
  /// All `section.key` names in serialization order.
  static std::vector<std::string> keys();
  std::string get(std::string_view dotted_key) const;

  /// Checks every value that can be checked without building a mesh.
  void validate() const;
  ContinuationConfig continuation() const;
};

/// Throws ConfigError on syntax errors, unknown or repeated keys.
RunConfig parse_run_config(std::string_view text);
RunConfig load_run_config(const std::filesystem::path& path);
std::string to_text(const RunConfig& config);

/// JSON text with every double printed to 17 significant digits and
/// non-finite values as null.
std::string dump_json(const Json& value, int indent = 2);

/// Writes to a temporary file in the same directory, then renames.
void write_atomic(const std::filesystem::path& path, const std::string& content);

Json to_json(const BranchPoint& p, bool with_state);
BranchPoint branch_point_from_json(const Json& j);
Json to_json(const BranchEvent& e);
Json to_json(const FoldRecord& f, bool with_eigenfunction = false);
Json to_json(const ShapeDerivativeReport& r);
Json to_json(const ExperimentReport& r);

/// One JSON object per line: {s, mu, sup_norm, sigma1, morse_index}.
std::string branch_jsonl(const Branch& br);
/// Same series, columns s,mu,sup_norm,sigma1,morse_index.
std::string branch_csv(const Branch& br);
/// One line per stored state: point index, then the values.
std::string snapshot_text(const Branch& br);

/// Compares the scalar series of a JSONL and a CSV branch dump.
/// Returns an empty string when they agree, otherwise the first mismatch.
std::string compare_branch_dumps(const std::string& jsonl, const std::string& csv);

/// Sorted "row col value" triplets of the stiffness matrix, then the
/// weights as "i i w" lines under a separate header.
std::string operator_triplets(const DiscreteOperator& op);
/// "node x y kind" lines, kind 0 interior and 1 boundary.
std::string mesh_nodes(const Mesh& mesh);

}  // namespace foldcont
