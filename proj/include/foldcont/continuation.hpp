#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "foldcont/elliptic.hpp"
#include "foldcont/spectral.hpp"

namespace foldcont {

struct BranchPoint {
  double s = 0.0;
  double mu = 0.0;
  Vector v;  // empty when the snapshot was thinned out
  double sup_norm = 0.0;
  double sigma1 = 0.0;  // stability convention
  int morse_index = 0;
  Vector tangent_v;
  double tangent_mu = 0.0;
  int newton_iterations = 0;
  std::vector<double> newton_history;
  bool minimal = false;  // produced by natural continuation
  bool fold = false;     // refined fold point

  bool has_snapshot() const { return v.size() > 0; }
};

enum class EventKind { Fold, MuFloor, NormCap, MaxSteps, NewtonFailure, DegeneratePoint };

std::string to_string(EventKind kind);

struct BranchEvent {
  EventKind kind = EventKind::Fold;
  double s_at = 0.0;
  int fold_id = -1;
  std::string message;
};

struct Branch {
  std::vector<BranchPoint> points;
  std::vector<BranchEvent> events;
  std::vector<FoldRecord> folds;
  std::vector<std::string> warnings;

  const BranchEvent* terminal() const { return events.empty() ? nullptr : &events.back(); }
  int count(EventKind kind) const;
};

struct ContinuationConfig {
  double ds_init = 0.05;
  double ds_min = 1e-6;
  double ds_max = 0.5;
  double dmu_init = 0.1;  // first natural-continuation step
  double mu_floor = 0.05;
  double norm_cap = 20.0;
  int max_steps = 2000;
  double omega = 0.5;  // weight of the mu component in the arclength norm
  double switch_fraction = 0.3;
  double fold_tol = 1e-8;
  double transversal_threshold = 1e-3;
  int snapshot_every = 1;
  bool cr_check = true;
  int cr_window = 4;
  double cr_step = 0.01;
  int stop_after_folds = 0;  // 0: run to a terminal event
  NewtonOptions newton;
  EigOptions eig;
  std::function<void(const std::string&)> log;

  /// Throws ConfigError naming the offending key.
  void validate() const;
};

/// Weighted inner product of two (v, mu) pairs for the arclength norm.
double arclength_dot(const DiscreteOperator& op, double omega, const Vector& a_v, double a_mu, const Vector& b_v,
                     double b_mu);

/// Fills sup_norm, sigma1 and morse_index of `p` (needs p.v).
void annotate(const Problem& problem, BranchPoint& p, const ContinuationConfig& config,
              std::optional<double> sigma_hint = std::nullopt);

struct MinimalBranch {
  std::vector<BranchPoint> points;
  bool switched = false;  // sigma1 dropped below switch_fraction * sigma1(0)
};

/// Natural continuation in mu from (0, 0). With an explicit `mu_grid` the
/// branch is solved exactly at those values instead.
MinimalBranch trace_minimal_branch(const Problem& problem, const ContinuationConfig& config,
                                   const std::vector<double>& mu_grid = {});

/// One predictor-corrector step of length ds. Throws StepFailure (caller
/// halves ds) and SingularBordered (degenerate point).
BranchPoint step_pseudoarclength(const Problem& problem, const BranchPoint& last, double ds,
                                 const ContinuationConfig& config);

struct RefinedFold {
  FoldRecord record;
  BranchPoint point;
};

/// Secant (Illinois) iteration on sigma1 between two consecutive points
/// with opposite sigma1 signs. Throws BracketError.
RefinedFold refine_fold(const Problem& problem, const BranchPoint& lo, const BranchPoint& hi,
                        const ContinuationConfig& config);

/// `window` pseudo-arclength samples of length `step` on each side of a
/// refined fold point; offsets are stored in s relative to the fold.
std::vector<BranchPoint> fold_neighbourhood(const Problem& problem, const BranchPoint& fold, double step,
                                            int window, const ContinuationConfig& config);

/// Full continuum from (0, 0), or from `resume` when given.
Branch trace_continuum(const Problem& problem, const ContinuationConfig& config,
                       const BranchPoint* resume = nullptr);

}  // namespace foldcont
