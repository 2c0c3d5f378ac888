#pragma once

#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "foldcont/nonlinearity.hpp"
#include "foldcont/operator.hpp"

namespace foldcont {

/// Discrete problem Delta_h v + mu f(v) = 0 on a (mapped) domain.
struct Problem {
  std::shared_ptr<const DiscreteOperator> op;
  Nonlinearity nl;

  int size() const { return op->size(); }
};

Problem make_problem(const ReferenceDomain& domain, const Diffeomorphism& h, Nonlinearity nl);

struct StateVector {
  double mu = 0.0;
  Vector v;  // interior nodes
};

enum class LinearSolverKind { Auto, Direct, Iterative };

LinearSolverKind parse_linear_solver(std::string_view key);
std::string to_string(LinearSolverKind kind);

/// L = Delta_h + mu diag(f'(v)) together with the data needed for bordered
/// solves. `stability_matrix()` is W(-L) = K - mu W diag(f'), the symmetric form
/// whose generalized eigenvalues against W are the stability eigenvalues sigma.
struct LinearizedOperator {
  const DiscreteOperator* op = nullptr;
  double mu = 0.0;
  Vector f;       // f(v)
  Vector fprime;  // f'(v)

  SparseMatrix stability_matrix() const;
  SparseRowMatrix matrix() const;
  Vector apply(const Vector& x) const;
  const Vector& weights() const { return op->weights; }
};

/// Delta_h v + mu f(v). Throws DomainError when v leaves the domain of f.
Vector residual(const DiscreteOperator& op, const Nonlinearity& nl, const StateVector& state);
LinearizedOperator linearize(const DiscreteOperator& op, const Nonlinearity& nl, const StateVector& state);

/// Round-off level of the residual at `state`; tolerances below it are
/// unreachable in floating point.
double residual_floor(const DiscreteOperator& op, const Nonlinearity& nl, const StateVector& state);

struct NewtonOptions {
  double tol = 1e-10;
  int max_iter = 25;
  int max_halvings = 8;
  LinearSolverKind solver = LinearSolverKind::Auto;
  std::function<void(const std::string&)> log;  // one JSON object per iteration
};

struct NewtonResult {
  Vector v;
  int iterations = 0;
  std::vector<double> residual_history;  // sup norms, initial guess first
  double tolerance_used = 0.0;
};

/// Throws SingularJacobian, NoConvergence, DomainError.
NewtonResult newton_correct(const DiscreteOperator& op, const Nonlinearity& nl, double mu, const Vector& v0,
                            const NewtonOptions& options = {});

/// Solves L x = rhs with L = Delta_h + mu f' (so W L = -stability_matrix()).
/// Throws SingularJacobian.
Vector solve_linearized(const LinearizedOperator& lin, const Vector& rhs,
                        LinearSolverKind kind = LinearSolverKind::Auto);

struct BorderedSolution {
  Vector v_dot;
  double mu_dot = 0.0;
};

/// Solves
///   L v_dot + f(v) mu_dot = rhs_v
///   <c_v, v_dot>_w + c_mu mu_dot = rhs_s.
/// Throws SingularBordered.
BorderedSolution bordered_solve(const LinearizedOperator& lin, const Vector& rhs_v, double rhs_s, const Vector& c_v,
                                double c_mu);

/// Returns the bordered matrix with its first n rows scaled by W, which
/// makes the leading block symmetric. Exposed for conditioning studies.
SparseMatrix bordered_matrix(const LinearizedOperator& lin, const Vector& c_v, double c_mu);

}  // namespace foldcont
