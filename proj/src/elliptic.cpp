#include "foldcont/elliptic.hpp"

#include <Eigen/IterativeLinearSolvers>
#include <Eigen/SparseCholesky>
#include <Eigen/SparseLU>
#include <cmath>
#include <limits>

#include "foldcont/errors.hpp"
#include "foldcont/format.hpp"

namespace foldcont {
namespace {

using Triplet = Eigen::Triplet<double>;

double sup_norm(const Vector& x) { return x.size() == 0 ? 0.0 : x.lpNorm<Eigen::Infinity>(); }

bool all_finite(const Vector& x) { return x.allFinite(); }

// W L x = rhs_w with W L = -A.
Vector solve_direct(const SparseMatrix& a, const Vector& rhs_w) {
  Eigen::SimplicialLDLT<SparseMatrix> ldlt(a);
  if (ldlt.info() == Eigen::Success) {
    Vector x = ldlt.solve(rhs_w);
    if (ldlt.info() == Eigen::Success && all_finite(x)) {
      const double res = sup_norm(a * x - rhs_w);
      if (res <= 1e-6 * std::max(sup_norm(rhs_w), std::numeric_limits<double>::min())) return x;
    }
  }
  Eigen::SparseLU<SparseMatrix> lu;
  lu.analyzePattern(a);
  lu.factorize(a);
  if (lu.info() != Eigen::Success) throw SingularJacobian("linearized operator is singular: " + lu.lastErrorMessage());
  Vector x = lu.solve(rhs_w);
  if (lu.info() != Eigen::Success || !all_finite(x)) throw SingularJacobian("linearized solve produced non-finite values");
  return x;
}

}  // namespace

Problem make_problem(const ReferenceDomain& domain, const Diffeomorphism& h, Nonlinearity nl) {
  auto mesh = std::make_shared<const Mesh>(build_mesh(domain));
  return {std::make_shared<const DiscreteOperator>(assemble_mapped(mesh, h)), std::move(nl)};
}

LinearSolverKind parse_linear_solver(std::string_view key) {
  if (key == "auto") return LinearSolverKind::Auto;
  if (key == "direct") return LinearSolverKind::Direct;
  if (key == "iterative" || key == "cg") return LinearSolverKind::Iterative;
  throw ConfigError("linear_solver: expected auto | direct | iterative, got '" + std::string(key) + "'");
}

std::string to_string(LinearSolverKind kind) {
  switch (kind) {
    case LinearSolverKind::Auto:
      return "auto";
    case LinearSolverKind::Direct:
      return "direct";
    case LinearSolverKind::Iterative:
      return "iterative";
  }
  return "auto";
}

SparseMatrix LinearizedOperator::stability_matrix() const {
  SparseMatrix a = op->stiffness;
  const Vector d = mu * op->weights.cwiseProduct(fprime);
  for (int i = 0; i < a.outerSize(); ++i) a.coeffRef(i, i) -= d[i];
  a.makeCompressed();
  return a;
}

SparseRowMatrix LinearizedOperator::matrix() const {
  SparseRowMatrix l = op->laplacian();
  for (int i = 0; i < l.outerSize(); ++i) l.coeffRef(i, i) += mu * fprime[i];
  l.makeCompressed();
  return l;
}

Vector LinearizedOperator::apply(const Vector& x) const {
  return op->apply_laplacian(x) + mu * fprime.cwiseProduct(x);
}

Vector residual(const DiscreteOperator& op, const Nonlinearity& nl, const StateVector& state) {
  if (state.v.size() != op.size()) throw DomainError("state size does not match the operator");
  Vector r = op.apply_laplacian(state.v);
  if (state.mu != 0.0) {
    for (int i = 0; i < r.size(); ++i) r[i] += state.mu * nl.f(state.v[i]);
  }
  return r;
}

LinearizedOperator linearize(const DiscreteOperator& op, const Nonlinearity& nl, const StateVector& state) {
  if (state.v.size() != op.size()) throw DomainError("state size does not match the operator");
  LinearizedOperator lin;
  lin.op = &op;
  lin.mu = state.mu;
  lin.f.resize(op.size());
  lin.fprime.resize(op.size());
  for (int i = 0; i < op.size(); ++i) {
    const FDerivs d = nl.eval(state.v[i], 1);
    lin.f[i] = d.f;
    lin.fprime[i] = d.df;
  }
  return lin;
}

double residual_floor(const DiscreteOperator& op, const Nonlinearity& nl, const StateVector& state) {
  const SparseMatrix abs_k = op.stiffness.cwiseAbs();
  const Vector row = (abs_k * state.v.cwiseAbs()).cwiseQuotient(op.weights);
  double worst = 0.0;
  for (int i = 0; i < row.size(); ++i) {
    worst = std::max(worst, row[i] + std::abs(state.mu) * nl.f(state.v[i]));
  }
  return 100.0 * std::numeric_limits<double>::epsilon() * worst;
}

Vector solve_linearized(const LinearizedOperator& lin, const Vector& rhs, LinearSolverKind kind) {
  const SparseMatrix a = lin.stability_matrix();
  const Vector rhs_w = -lin.weights().cwiseProduct(rhs);
  if (kind == LinearSolverKind::Iterative) {
    Eigen::ConjugateGradient<SparseMatrix, Eigen::Lower | Eigen::Upper, Eigen::IncompleteCholesky<double>> cg;
    cg.setTolerance(1e-13);
    cg.setMaxIterations(4 * static_cast<int>(rhs.size()));
    cg.compute(a);
    if (cg.info() == Eigen::Success) {
      Vector x = cg.solve(rhs_w);
      if (cg.info() == Eigen::Success && all_finite(x)) return x;
    }
    // Indefinite past a fold; fall through to the direct path.
  }
  return solve_direct(a, rhs_w);
}

NewtonResult newton_correct(const DiscreteOperator& op, const Nonlinearity& nl, double mu, const Vector& v0,
                            const NewtonOptions& options) {
  NewtonResult out;
  StateVector state{mu, v0};
  Vector r = residual(op, nl, state);
  double rn = sup_norm(r);
  out.residual_history.push_back(rn);
  auto tolerance = [&]() { return std::max(options.tol, residual_floor(op, nl, state)); };
  out.tolerance_used = tolerance();

  for (int it = 0; it < options.max_iter; ++it) {
    if (rn <= out.tolerance_used) break;
    const LinearizedOperator lin = linearize(op, nl, state);
    const Vector delta = solve_linearized(lin, -r, options.solver);

    double step = 1.0;
    bool accepted = false;
    bool domain_failure = false;
    StateVector trial{mu, Vector()};
    Vector r_trial;
    double rn_trial = 0.0;
    for (int h = 0; h <= options.max_halvings; ++h, step *= 0.5) {
      trial.v = state.v + step * delta;
      try {
        r_trial = residual(op, nl, trial);
        domain_failure = false;
      } catch (const DomainError&) {
        domain_failure = true;
        continue;
      }
      rn_trial = sup_norm(r_trial);
      if (!std::isfinite(rn_trial)) continue;
      accepted = rn_trial < rn || h == options.max_halvings;
      if (accepted) break;
    }
    if (!accepted) {
      if (domain_failure) throw DomainError("Newton iterate left the domain of f at mu = " + format_real(mu));
      throw NoConvergence("Newton line search failed at mu = " + format_real(mu));
    }
    state.v = std::move(trial.v);
    r = std::move(r_trial);
    rn = rn_trial;
    out.iterations = it + 1;
    out.residual_history.push_back(rn);
    out.tolerance_used = tolerance();
    if (options.log) {
      options.log("{\"event\":\"newton\",\"mu\":" + format_real(mu) + ",\"iter\":" + std::to_string(it + 1) +
                  ",\"residual\":" + format_real(rn) + ",\"step\":" + format_real(step) + "}");
    }
  }
  if (!(rn <= out.tolerance_used)) {
    throw NoConvergence("Newton did not converge at mu = " + format_real(mu) + " (residual " + format_real(rn) +
                        " after " + std::to_string(out.iterations) + " iterations)");
  }
  out.v = std::move(state.v);
  return out;
}

SparseMatrix bordered_matrix(const LinearizedOperator& lin, const Vector& c_v, double c_mu) {
  const SparseMatrix a = lin.stability_matrix();
  const int n = static_cast<int>(a.rows());
  std::vector<Triplet> t;
  t.reserve(a.nonZeros() + 2 * n + 1);
  for (int k = 0; k < a.outerSize(); ++k) {
    for (SparseMatrix::InnerIterator it(a, k); it; ++it) t.emplace_back(it.row(), it.col(), -it.value());
  }
  const Vector wf = lin.weights().cwiseProduct(lin.f);
  const Vector wc = lin.weights().cwiseProduct(c_v);
  for (int i = 0; i < n; ++i) {
    if (wf[i] != 0.0) t.emplace_back(i, n, wf[i]);
    if (wc[i] != 0.0) t.emplace_back(n, i, wc[i]);
  }
  t.emplace_back(n, n, c_mu);
  SparseMatrix m(n + 1, n + 1);
  m.setFromTriplets(t.begin(), t.end());
  m.makeCompressed();
  return m;
}

BorderedSolution bordered_solve(const LinearizedOperator& lin, const Vector& rhs_v, double rhs_s, const Vector& c_v,
                                double c_mu) {
  const SparseMatrix m = bordered_matrix(lin, c_v, c_mu);
  const int n = lin.op->size();
  Vector b(n + 1);
  b.head(n) = lin.weights().cwiseProduct(rhs_v);
  b[n] = rhs_s;
  Eigen::SparseLU<SparseMatrix> lu;
  lu.analyzePattern(m);
  lu.factorize(m);
  if (lu.info() != Eigen::Success) throw SingularBordered("bordered matrix is singular: " + lu.lastErrorMessage());
  const Vector x = lu.solve(b);
  if (lu.info() != Eigen::Success || !all_finite(x)) throw SingularBordered("bordered solve produced non-finite values");
  const double scale = std::max(sup_norm(b), std::numeric_limits<double>::min());
  const double res = sup_norm(m * x - b);
  double m_norm = 0.0;
  for (int k = 0; k < m.outerSize(); ++k) {
    for (SparseMatrix::InnerIterator it(m, k); it; ++it) m_norm = std::max(m_norm, std::abs(it.value()));
  }
  if (res > 1e-6 * scale || sup_norm(x) * m_norm > 1e14 * scale) {
    throw SingularBordered("bordered matrix is numerically singular (solution norm " + format_real(sup_norm(x)) + ")");
  }
  return {x.head(n), x[n]};
}

}  // namespace foldcont
