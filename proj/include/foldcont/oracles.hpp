#pragma once

#include <cstdint>
#include <vector>

#include "foldcont/continuation.hpp"
#include "foldcont/elliptic.hpp"
#include "foldcont/nonlinearity.hpp"

namespace foldcont {

/// Closed-form radial solutions of -Delta u = mu e^u on the unit disk:
/// u_b(r) = 2 ln((1 + b) / (1 + b r^2)), mu = 8b / (1 + b)^2.
struct RadialFamilyPoint {
  double b = 0.0;
  double mu = 0.0;
  double sup = 0.0;  // u_b(0) = 2 ln(1 + b)

  double u(double r) const;
  double u_rr(double r) const;
};

/// Throws DomainError for b <= 0.
RadialFamilyPoint radial_family(double b);

/// Family parameter with u_b(0) = sup.
double radial_b_from_sup(double sup);

/// Sup norm of the discrete residual of u_b interpolated to a disk grid.
double radial_residual(const DiscreteOperator& op, double b);

struct ShootResult {
  double end_value = 0.0;  // v(1)
  double end_slope = 0.0;  // v'(1)
  double sup = 0.0;
  std::vector<double> x;
  std::vector<double> v;
  int steps = 0;
};

struct ShootOptions {
  double rtol = 1e-10;
  double atol = 1e-12;
  double blowup_cap = 1e3;
  bool keep_profile = false;
};

/// v'' = -mu f(v), v(0) = 0, v'(0) = alpha on [0, 1] with an adaptive
/// Dormand-Prince 5(4) pair. Throws BlowupError.
ShootResult shoot_1d(const Nonlinearity& nl, double mu, double alpha, const ShootOptions& options = {});

/// All slopes alpha in [0, alpha_max] with v(1) = 0, from a scan of
/// `n_scan` intervals refined by bisection.
std::vector<double> shooting_roots(const Nonlinearity& nl, double mu, double alpha_max = 40.0, int n_scan = 400,
                                   const ShootOptions& options = {});

/// Largest mu with a shooting root, by bisection on existence.
double shooting_fold(const Nonlinearity& nl, double mu_lo = 0.5, double mu_hi = 6.0, double tol = 1e-9,
                     const ShootOptions& options = {});

struct MultistartOptions {
  int n_starts = 500;
  std::uint64_t seed = 0;
  double max_amplitude = 12.0;
  double dedup_tol = 1e-6;
  int jobs = 1;
};

/// Newton from random initial states; converged solutions deduplicated by
/// sup distance, sorted by sup norm. Non-convergent starts are dropped.
std::vector<Vector> multistart_enumerate(const Problem& problem, double mu, const MultistartOptions& options = {});

/// Solutions on a traced branch at parameter mu: every segment whose mu
/// range contains it is interpolated and corrected at fixed mu. Needs
/// stored states on the segment endpoints.
std::vector<Vector> branch_solutions_at(const Problem& problem, const std::vector<BranchPoint>& points, double mu,
                                        const NewtonOptions& newton = {});

}  // namespace foldcont
