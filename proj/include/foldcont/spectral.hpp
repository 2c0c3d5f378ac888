#pragma once

#include <optional>
#include <vector>

#include "foldcont/elliptic.hpp"

namespace foldcont {

/// Eigenpair of the linearization in the stability convention:
/// -L phi = sigma phi, normalized so that int phi^2 = 1 in the quadrature.
struct EigenPair {
  double sigma = 0.0;
  Vector phi;
  double residual = 0.0;  // || L phi + sigma phi ||_w
};

struct EigOptions {
  double tol = 1e-8;
  int max_restarts = 20;
  int krylov_dim = 0;  // 0: chosen from k and the problem size
};

/// Generalized pairs A phi = sigma W phi closest to `shift` (A symmetric,
/// W > 0 diagonal). Shift-invert Lanczos in the W inner product with full
/// reorthogonalization; further passes with locked vectors pick up repeated
/// eigenvalues. Sorted by distance to the shift. Throws EigSolverFailure.
std::vector<EigenPair> generalized_pairs(const SparseMatrix& a, const Vector& w, double shift, int k,
                                         const EigOptions& options = {});

/// Number of negative eigenvalues of A - shift W (Sylvester inertia from an
/// LDL^T factorization). Throws EigSolverFailure when the factorization
/// breaks down (shift on an eigenvalue).
int inertia_below(const SparseMatrix& a, const Vector& w, double shift);

/// The k smallest stability-convention eigenvalues sigma_1 <= sigma_2 <= ...
/// `shift_hint` (e.g. the previous sigma_1 along a branch) speeds up the
/// search for a shift below the spectrum.
std::vector<EigenPair> eigenpairs(const LinearizedOperator& lin, int k, const EigOptions& options = {},
                                  std::optional<double> shift_hint = std::nullopt);

/// The k eigenpairs with |sigma| smallest.
std::vector<EigenPair> nearest_zero_pairs(const LinearizedOperator& lin, int k, const EigOptions& options = {});

struct MorseResult {
  int index = 0;
  bool near_singular = false;  // some |sigma| <= shift_tol
};

/// Number of negative stability-convention eigenvalues (unstable directions).
MorseResult morse_index(const LinearizedOperator& lin, double shift_tol = 1e-8);

struct Transversality {
  double value = 0.0;       // int f(v) phi
  double normalized = 0.0;  // value / (||f(v)||_w ||phi||_w)
};

Transversality transversality(const DiscreteOperator& op, const Nonlinearity& nl, const StateVector& state,
                              const EigenPair& pair);

struct CRDiagnostics {
  double mu_prime_at_fold = 0.0;
  double mu_second_at_fold = 0.0;
  double mu_prime_scaled = 0.0;  // |mu'| / (|mu''| ds)
  double xi_second_order_slope = 0.0;
  double ratio_law_error = 0.0;
  double ratio_expected = 0.0;  // int f phi / int phi^2 at the fold
  bool populated = false;
};

struct FoldRecord {
  int id = 0;
  double s_fold = 0.0;
  double mu_fold = 0.0;
  double sup_norm = 0.0;
  EigenPair eigenpair;
  double spectral_gap = 0.0;
  Transversality transversality;
  int morse_before = 0;
  int morse_after = 0;
  bool mu_dot_changes_sign = true;
  bool simple = true;
  bool transversal = true;
  CRDiagnostics cr;
};

struct BranchPoint;

/// Checks the local fold expansion on samples around `fold`. Each sample
/// carries its offset `s` relative to the fold, its state, tangent and
/// sigma (the tracked crossing eigenvalue). Needs `window` samples on each
/// side. Throws InsufficientSamples.
CRDiagnostics cr_expansion_check(const Problem& problem, const std::vector<BranchPoint>& samples,
                                 const BranchPoint& fold_point, const FoldRecord& fold, int window);

struct Sigma1Sample {
  double s = 0.0;
  double sigma1 = 0.0;
  bool sign_change = false;  // sign differs from the previous sample
};

struct Sigma1Track {
  std::vector<Sigma1Sample> samples;
  std::vector<std::pair<int, int>> brackets;  // index pairs around each sign change
  bool identically_zero = false;              // |sigma1| < tol on more than 10 consecutive points
};

Sigma1Track track_sigma1(const std::vector<BranchPoint>& branch, double zero_tol = 1e-8);

}  // namespace foldcont
