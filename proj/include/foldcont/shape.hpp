#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "foldcont/continuation.hpp"
#include "foldcont/diffeomorphism.hpp"
#include "foldcont/elliptic.hpp"
#include "foldcont/spectral.hpp"

namespace foldcont {

/// A solved problem on the domain h(Omega_0): the map is needed to build
/// perturbed pullbacks on the same reference mesh.
struct MappedProblem {
  Problem problem;
  Diffeomorphism h;
};

MappedProblem make_mapped_problem(const ReferenceDomain& domain, const Diffeomorphism& h, Nonlinearity nl);

/// hdot(h(x)) . grad v on every node, v extended by zero to the boundary.
Vector transport_field(const DiscreteOperator& op, const Vector& v, const VectorField& hdot);

/// (Delta_h + mu f'(v)) (hdot . grad v) on interior nodes. Throws
/// DomainError when `state` is not a solution.
Vector transport_term(const DiscreteOperator& op, const Nonlinearity& nl, const StateVector& state,
                      const VectorField& hdot);

/// Domain derivative of the residual at fixed (mu, v), formula form:
/// -(Delta_h + mu f') (hdot . grad v).
Vector domain_derivative(const DiscreteOperator& op, const Nonlinearity& nl, const StateVector& state,
                         const VectorField& hdot);

/// (residual on (id + eps hdot) o h - residual on h) / eps at fixed (mu, v)
/// on the reference grid. Throws DegenerateMapError.
Vector fd_domain_derivative(const MappedProblem& mp, const StateVector& state, const VectorField& hdot, double eps);

struct HadamardPairing {
  double lhs = 0.0;  // int phi (Delta + mu f') (hdot . grad v)
  double rhs = 0.0;  // -oint (d_nu phi)(d_nu v)(hdot . nu)
  double relative_gap = 0.0;
};

/// Throws NotAFold when ||L phi||_w > 10 fold_tol.
HadamardPairing hadamard_pairing(const DiscreteOperator& op, const Nonlinearity& nl, const StateVector& state,
                                 const EigenPair& phi, const VectorField& hdot, double fold_tol = 1e-8);

struct ShapeDerivativeReport {
  std::vector<double> epsilons;
  std::vector<double> fd_values;      // ||FD_eps||_w
  std::vector<double> errors;         // ||FD_eps - formula||_w / ||formula||_w
  double formula_value = 0.0;         // ||formula||_w
  double observed_order = 0.0;        // least-squares slope of log error vs log eps
  double richardson_gap = 0.0;        // 2 FD(eps/2) - FD(eps) against the formula, smallest eps pair
  bool has_hadamard = false;
  HadamardPairing hadamard;
};

/// FD sweep over `epsilons` (at least two), plus the Hadamard pairing when
/// `fold_pair` is given. Throws DomainError for hdot == 0.
ShapeDerivativeReport shape_derivative_report(const MappedProblem& mp, const StateVector& state,
                                              const VectorField& hdot, const std::vector<double>& epsilons,
                                              const EigenPair* fold_pair = nullptr, double fold_tol = 1e-8);

/// Least-squares slope of log y against log x.
double loglog_slope(const std::vector<double>& x, const std::vector<double>& y);

struct FoldSummary {
  double mu_fold = 0.0;
  double sup_norm = 0.0;
  double spectral_gap = 0.0;
  double transversality = 0.0;  // normalized, absolute value
  double ratio_law_error = 0.0;
  bool simple = false;
  bool transversal = false;
};

struct SampleReport {
  int index = 0;
  std::uint64_t seed = 0;
  std::string status = "ok";  // "ok" or the error class name
  std::string message;
  double max_amplitude = 0.0;
  std::vector<double> coefficients;
  std::vector<FoldSummary> folds;
  std::vector<std::string> events;
  int degenerate_points = 0;
};

struct ExperimentSummary {
  int n_samples = 0;
  int n_failed = 0;
  int n_folds = 0;
  int degenerate_halts = 0;
  double min_spectral_gap = 0.0;
  double min_transversality = 0.0;
  bool all_simple = true;
  bool all_transversal = true;
};

struct ExperimentReport {
  std::vector<SampleReport> samples;
  ExperimentSummary summary;
};

struct ExperimentOptions {
  ReferenceDomain domain;
  Nonlinearity nl = Nonlinearity::exponential();
  int n_samples = 20;
  double amplitude = 0.02;
  int n_modes = 4;
  std::uint64_t seed = 0;
  int jobs = 1;
};

/// Traces the continuum on randomly perturbed domains. Sample i uses the
/// seed derive_seed(seed, i); failures are recorded per sample. The result
/// does not depend on `jobs`.
ExperimentReport genericity_experiment(const ExperimentOptions& options, const ContinuationConfig& config);

}  // namespace foldcont
