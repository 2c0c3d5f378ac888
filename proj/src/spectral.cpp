#include "foldcont/spectral.hpp"

#include <Eigen/Dense>
#include <Eigen/SparseCholesky>
#include <Eigen/SparseLU>
#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "foldcont/continuation.hpp"
#include "foldcont/errors.hpp"
#include "foldcont/format.hpp"

namespace foldcont {
namespace {

constexpr double kEps = std::numeric_limits<double>::epsilon();
constexpr int kDenseLimit = 160;

double wdot(const Vector& w, const Vector& a, const Vector& b) { return (a.array() * b.array() * w.array()).sum(); }

SparseMatrix shifted(const SparseMatrix& a, const Vector& w, double shift) {
  SparseMatrix m = a;
  if (shift != 0.0) {
    for (int i = 0; i < m.outerSize(); ++i) m.coeffRef(i, i) -= shift * w[i];
  }
  m.makeCompressed();
  return m;
}

// x -> (A - sW)^-1 W x
class ShiftInvert {
 public:
  ShiftInvert(const SparseMatrix& a, const Vector& w, double shift) : w_(w) {
    const SparseMatrix m = shifted(a, w, shift);
    ldlt_.compute(m);
    use_ldlt_ = ldlt_.info() == Eigen::Success;
    if (!use_ldlt_) {
      lu_.analyzePattern(m);
      lu_.factorize(m);
      if (lu_.info() != Eigen::Success) {
        throw EigSolverFailure("shift " + format_real(shift) + " coincides with an eigenvalue");
      }
    }
  }

  Vector apply(const Vector& x) const {
    const Vector b = w_.cwiseProduct(x);
    Vector y = use_ldlt_ ? Vector(ldlt_.solve(b)) : Vector(lu_.solve(b));
    if (!y.allFinite()) throw EigSolverFailure("shift-invert solve produced non-finite values");
    return y;
  }

 private:
  const Vector& w_;
  Eigen::SimplicialLDLT<SparseMatrix> ldlt_;
  mutable Eigen::SparseLU<SparseMatrix> lu_;
  bool use_ldlt_ = true;
};

Vector start_vector(int n, int seed) {
  Vector v(n);
  for (int i = 0; i < n; ++i) v[i] = 1.0 + 0.5 * std::sin(1.7 * (i + 1) * (seed + 1) + 0.3 * seed);
  return v;
}

void orthogonalize(const Vector& w, const std::vector<Vector>& basis, Vector& z) {
  for (int pass = 0; pass < 2; ++pass) {
    for (const Vector& q : basis) z -= wdot(w, q, z) * q;
  }
}

void fix_sign(const Vector& w, Vector& phi) {
  const double scale = phi.cwiseAbs().maxCoeff();
  const double cut = 1e-10 * scale;
  const bool nonneg = (phi.array() >= -cut).all();
  const bool nonpos = (phi.array() <= cut).all();
  if (nonneg || nonpos) {
    if (phi.dot(w) < 0.0) phi = -phi;
    return;
  }
  for (int i = 0; i < phi.size(); ++i) {
    if (std::abs(phi[i]) > cut) {
      if (phi[i] < 0.0) phi = -phi;
      return;
    }
  }
}

// || W^-1 A phi - sigma phi ||_w and its round-off floor.
std::pair<double, double> eig_residual(const SparseMatrix& a, const SparseMatrix& abs_a, const Vector& w,
                                       double sigma, const Vector& phi) {
  const Vector r = (a * phi).cwiseQuotient(w) - sigma * phi;
  const Vector scale = (abs_a * phi.cwiseAbs()).cwiseQuotient(w) + std::abs(sigma) * phi.cwiseAbs();
  return {std::sqrt(wdot(w, r, r)), 100.0 * kEps * std::sqrt(wdot(w, scale, scale))};
}

struct Ritz {
  double theta = 0.0;
  Vector x;
};

std::vector<Ritz> lanczos(const ShiftInvert& op, const Vector& w, Vector q, const std::vector<Vector>& locked,
                          int m) {
  const int n = static_cast<int>(w.size());
  m = std::min(m, n - static_cast<int>(locked.size()));
  std::vector<Vector> basis;
  std::vector<double> alpha, beta;
  orthogonalize(w, locked, q);
  double nq = std::sqrt(wdot(w, q, q));
  if (!(nq > 0.0)) return {};
  q /= nq;
  basis.push_back(q);
  for (int j = 0; j < m; ++j) {
    Vector z = op.apply(basis[j]);
    orthogonalize(w, locked, z);
    const double a = wdot(w, basis[j], z);
    alpha.push_back(a);
    orthogonalize(w, basis, z);
    const double b = std::sqrt(wdot(w, z, z));
    if (j + 1 == m || b <= 1e-13 * std::max(std::abs(a), 1e-300)) break;
    beta.push_back(b);
    basis.push_back(z / b);
  }
  const int k = static_cast<int>(alpha.size());
  Eigen::MatrixXd t = Eigen::MatrixXd::Zero(k, k);
  for (int i = 0; i < k; ++i) {
    t(i, i) = alpha[i];
    if (i + 1 < k) t(i, i + 1) = t(i + 1, i) = beta[i];
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(t);
  std::vector<Ritz> out;
  for (int i = 0; i < k; ++i) {
    Ritz r;
    r.theta = es.eigenvalues()[i];
    r.x = Vector::Zero(n);
    for (int j = 0; j < k; ++j) r.x += es.eigenvectors()(j, i) * basis[j];
    r.x /= std::sqrt(wdot(w, r.x, r.x));
    out.push_back(std::move(r));
  }
  std::sort(out.begin(), out.end(), [](const Ritz& a, const Ritz& b) { return std::abs(a.theta) > std::abs(b.theta); });
  return out;
}

std::vector<EigenPair> dense_pairs(const SparseMatrix& a, const Vector& w, double shift, int k) {
  const Eigen::MatrixXd ad(a);
  const Eigen::MatrixXd wd = w.asDiagonal();
  Eigen::GeneralizedSelfAdjointEigenSolver<Eigen::MatrixXd> es(ad, wd);
  if (es.info() != Eigen::Success) throw EigSolverFailure("dense generalized eigensolver failed");
  std::vector<int> order(static_cast<std::size_t>(w.size()));
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](int i, int j) {
    return std::abs(es.eigenvalues()[i] - shift) < std::abs(es.eigenvalues()[j] - shift);
  });
  const SparseMatrix abs_a = a.cwiseAbs();
  std::vector<EigenPair> out;
  for (int i = 0; i < k; ++i) {
    EigenPair p;
    p.sigma = es.eigenvalues()[order[i]];
    p.phi = es.eigenvectors().col(order[i]);
    p.phi /= std::sqrt(wdot(w, p.phi, p.phi));
    fix_sign(w, p.phi);
    p.residual = eig_residual(a, abs_a, w, p.sigma, p.phi).first;
    out.push_back(std::move(p));
  }
  return out;
}

}  // namespace

std::vector<EigenPair> generalized_pairs(const SparseMatrix& a, const Vector& w, double shift, int k,
                                         const EigOptions& options) {
  const int n = static_cast<int>(w.size());
  if (k < 1 || k > n) throw EigSolverFailure("requested " + std::to_string(k) + " eigenpairs of a size-" + std::to_string(n) + " problem");
  if (n <= kDenseLimit) return dense_pairs(a, w, shift, k);

  const ShiftInvert op(a, w, shift);
  const SparseMatrix abs_a = a.cwiseAbs();
  const int m = options.krylov_dim > 0 ? options.krylov_dim : std::max(2 * k + 30, 40);

  std::vector<EigenPair> locked;
  std::vector<Vector> locked_vecs;
  Vector start = start_vector(n, 0);
  int fresh_seed = 1;
  for (int pass = 0; pass <= options.max_restarts; ++pass) {
    const std::vector<Ritz> ritz = lanczos(op, w, start, locked_vecs, m);
    // Distance to the shift of the k-th locked value; nearer Ritz values are wanted.
    double bound = std::numeric_limits<double>::infinity();
    if (static_cast<int>(locked.size()) >= k) {
      std::vector<double> d;
      for (const EigenPair& p : locked) d.push_back(std::abs(p.sigma - shift));
      std::nth_element(d.begin(), d.begin() + (k - 1), d.end());
      bound = d[k - 1] * (1.0 - 1e-10);
    }
    bool found_wanted = false;
    const Ritz* unconverged = nullptr;
    const int budget = std::max(1, k - static_cast<int>(locked.size()));
    int taken = 0;
    for (const Ritz& r : ritz) {
      if (r.theta == 0.0) continue;
      const double sigma = shift + 1.0 / r.theta;
      if (std::abs(sigma - shift) >= bound) break;
      if (taken >= budget && std::isinf(bound)) break;
      found_wanted = true;
      ++taken;
      Vector phi = r.x;
      orthogonalize(w, locked_vecs, phi);
      phi /= std::sqrt(wdot(w, phi, phi));
      const auto [res, floor] = eig_residual(a, abs_a, w, sigma, phi);
      if (res <= std::max(options.tol, floor)) {
        EigenPair p;
        p.sigma = sigma;
        p.phi = phi;
        p.residual = res;
        locked_vecs.push_back(phi);
        locked.push_back(std::move(p));
      } else if (!unconverged) {
        unconverged = &r;
      }
    }
    if (unconverged) {
      start = unconverged->x;
      continue;
    }
    if (!found_wanted && static_cast<int>(locked.size()) >= k) break;
    start = start_vector(n, fresh_seed++);
    if (pass == options.max_restarts) break;
  }
  if (static_cast<int>(locked.size()) < k) {
    throw EigSolverFailure("eigensolver did not converge " + std::to_string(k) + " pairs near " + format_real(shift));
  }
  std::sort(locked.begin(), locked.end(),
            [&](const EigenPair& x, const EigenPair& y) { return std::abs(x.sigma - shift) < std::abs(y.sigma - shift); });
  locked.resize(static_cast<std::size_t>(k));
  for (EigenPair& p : locked) fix_sign(w, p.phi);
  return locked;
}

int inertia_below(const SparseMatrix& a, const Vector& w, double shift) {
  Eigen::SimplicialLDLT<SparseMatrix> ldlt(shifted(a, w, shift));
  if (ldlt.info() != Eigen::Success) {
    throw EigSolverFailure("LDL^T breakdown at shift " + format_real(shift));
  }
  const Vector d = ldlt.vectorD();
  if (!d.allFinite() || (d.array() == 0.0).any()) {
    throw EigSolverFailure("singular LDL^T at shift " + format_real(shift));
  }
  return static_cast<int>((d.array() < 0.0).count());
}

std::vector<EigenPair> eigenpairs(const LinearizedOperator& lin, int k, const EigOptions& options,
                                  std::optional<double> shift_hint) {
  const SparseMatrix a = lin.stability_matrix();
  const Vector& w = lin.weights();
  auto below = [&](double s) {
    try {
      return inertia_below(a, w, s) == 0;
    } catch (const EigSolverFailure&) {
      return false;
    }
  };
  double shift = 0.0;
  bool found = false;
  if (shift_hint && std::isfinite(*shift_hint)) {
    shift = *shift_hint - std::max(1.0, 0.5 * std::abs(*shift_hint));
    found = below(shift);
  }
  if (!found) {
    shift = -1.0;
    for (int i = 0; i < 40 && !(found = below(shift)); ++i) shift *= 4.0;
  }
  if (!found) throw EigSolverFailure("no shift below the spectrum found");
  std::vector<EigenPair> out = generalized_pairs(a, w, shift, k, options);
  std::sort(out.begin(), out.end(), [](const EigenPair& x, const EigenPair& y) { return x.sigma < y.sigma; });
  return out;
}

std::vector<EigenPair> nearest_zero_pairs(const LinearizedOperator& lin, int k, const EigOptions& options) {
  const SparseMatrix a = lin.stability_matrix();
  try {
    return generalized_pairs(a, lin.weights(), 0.0, k, options);
  } catch (const EigSolverFailure&) {
    // Exactly singular at zero: step off by a relative hair.
    const double off = 1e-10 * std::max(1.0, a.diagonal().cwiseQuotient(lin.weights()).cwiseAbs().maxCoeff());
    std::vector<EigenPair> out = generalized_pairs(a, lin.weights(), off, k + 1, options);
    std::sort(out.begin(), out.end(),
              [](const EigenPair& x, const EigenPair& y) { return std::abs(x.sigma) < std::abs(y.sigma); });
    out.resize(static_cast<std::size_t>(k));
    return out;
  }
}

MorseResult morse_index(const LinearizedOperator& lin, double shift_tol) {
  const SparseMatrix a = lin.stability_matrix();
  const Vector& w = lin.weights();
  MorseResult out;
  const int lo = inertia_below(a, w, -shift_tol);
  const int hi = inertia_below(a, w, shift_tol);
  out.near_singular = lo != hi;
  try {
    out.index = inertia_below(a, w, 0.0);
  } catch (const EigSolverFailure&) {
    out.index = lo;
    out.near_singular = true;
  }
  return out;
}

Transversality transversality(const DiscreteOperator& op, const Nonlinearity& nl, const StateVector& state,
                              const EigenPair& pair) {
  Vector f(state.v.size());
  for (int i = 0; i < f.size(); ++i) f[i] = nl.f(state.v[i]);
  Transversality t;
  t.value = op.dot(f, pair.phi);
  t.normalized = t.value / (op.norm(f) * op.norm(pair.phi));
  return t;
}

CRDiagnostics cr_expansion_check(const Problem& problem, const std::vector<BranchPoint>& samples,
                                 const BranchPoint& fold_point, const FoldRecord& fold, int window) {
  const DiscreteOperator& op = *problem.op;
  if (window < 3) throw InsufficientSamples("the ratio law needs a window of at least 3");
  if (!fold_point.has_snapshot()) throw InsufficientSamples("fold point has no stored state");
  std::vector<const BranchPoint*> left, right;
  for (const BranchPoint& p : samples) {
    if (!p.has_snapshot() || p.tangent_v.size() == 0) continue;
    (p.s < 0.0 ? left : right).push_back(&p);
  }
  if (static_cast<int>(left.size()) < window || static_cast<int>(right.size()) < window) {
    throw InsufficientSamples("need " + std::to_string(window) + " samples on each side of the fold, have " +
                              std::to_string(left.size()) + " and " + std::to_string(right.size()));
  }
  auto by_distance = [](const BranchPoint* a, const BranchPoint* b) { return std::abs(a->s) < std::abs(b->s); };
  std::sort(left.begin(), left.end(), by_distance);
  std::sort(right.begin(), right.end(), by_distance);
  left.resize(static_cast<std::size_t>(window));
  right.resize(static_cast<std::size_t>(window));
  std::vector<const BranchPoint*> used(left);
  used.insert(used.end(), right.begin(), right.end());

  CRDiagnostics cr;
  const Vector& phi = fold.eigenpair.phi;
  const double phi2 = op.dot(phi, phi);

  // Polynomial fit of mu(s) through the fold point and the samples. The
  // quadratic model is extended by cubic and quartic terms so that the
  // asymmetry of the fold does not leak into the linear coefficient.
  Eigen::MatrixXd design(static_cast<Eigen::Index>(used.size() + 1), 5);
  Vector mu(design.rows());
  design.row(0) << 1.0, 0.0, 0.0, 0.0, 0.0;
  mu[0] = fold_point.mu;
  double step = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < used.size(); ++i) {
    const double s = used[i]->s;
    design.row(static_cast<Eigen::Index>(i + 1)) << 1.0, s, s * s, s * s * s, s * s * s * s;
    mu[static_cast<Eigen::Index>(i + 1)] = used[i]->mu;
    step = std::min(step, std::abs(s));
  }
  const Vector coef = design.colPivHouseholderQr().solve(mu);
  cr.mu_prime_at_fold = coef[1];
  cr.mu_second_at_fold = 2.0 * coef[2];
  cr.mu_prime_scaled = std::abs(coef[1]) / std::max(std::abs(cr.mu_second_at_fold) * step, 1e-300);

  // v(s) - v_fold = c phi + xi with <xi, phi>_w = 0.
  double sxx = 0.0, sxy = 0.0, sx = 0.0, sy = 0.0;
  int count = 0;
  for (const BranchPoint* p : used) {
    const Vector d = p->v - fold_point.v;
    const double c = op.dot(d, phi) / phi2;
    const Vector xi = d - c * phi;
    const double x = std::log(std::abs(c));
    const double y = std::log(op.norm(xi));
    if (!std::isfinite(x) || !std::isfinite(y)) continue;
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
    ++count;
  }
  if (count < 3) throw InsufficientSamples("too few usable samples for the remainder slope");
  cr.xi_second_order_slope = (count * sxy - sx * sy) / (count * sxx - sx * sx);

  // sigma(s) / mu'(s) against int f phi / int phi^2, mu' taken along phi.
  cr.ratio_expected = fold.transversality.value / phi2;
  double worst = 0.0;
  for (const auto* side : {&left, &right}) {
    for (int rank : {2, 3}) {
      const BranchPoint& p = *(*side)[static_cast<std::size_t>(rank - 1)];
      const double c_dot = op.dot(p.tangent_v, phi) / phi2;
      const double mu_prime = p.tangent_mu / c_dot;
      const double ratio = p.sigma1 / mu_prime;
      worst = std::max(worst, std::abs(ratio - cr.ratio_expected) / std::abs(cr.ratio_expected));
    }
  }
  cr.ratio_law_error = worst;
  cr.populated = std::isfinite(cr.mu_prime_at_fold) && std::isfinite(cr.xi_second_order_slope) &&
                 std::isfinite(cr.ratio_law_error);
  return cr;
}

Sigma1Track track_sigma1(const std::vector<BranchPoint>& branch, double zero_tol) {
  Sigma1Track out;
  int zero_run = 0;
  for (std::size_t i = 0; i < branch.size(); ++i) {
    Sigma1Sample s;
    s.s = branch[i].s;
    s.sigma1 = branch[i].sigma1;
    if (i > 0) {
      const double prev = branch[i - 1].sigma1;
      s.sign_change = (prev > 0.0 && s.sigma1 < 0.0) || (prev < 0.0 && s.sigma1 > 0.0);
      if (s.sign_change) out.brackets.emplace_back(static_cast<int>(i - 1), static_cast<int>(i));
    }
    zero_run = std::abs(s.sigma1) < zero_tol ? zero_run + 1 : 0;
    if (zero_run > 10) out.identically_zero = true;
    out.samples.push_back(s);
  }
  return out;
}

}  // namespace foldcont
