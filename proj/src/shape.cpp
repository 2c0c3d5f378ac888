#include "foldcont/shape.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <limits>
#include <thread>

#include "foldcont/errors.hpp"
#include "foldcont/format.hpp"
#include "foldcont/random.hpp"

namespace foldcont {
namespace {

void require_solution(const DiscreteOperator& op, const Nonlinearity& nl, const StateVector& state) {
  const double rn = residual(op, nl, state).lpNorm<Eigen::Infinity>();
  const double tol = std::max(1e-7, 100.0 * residual_floor(op, nl, state));
  if (!(rn <= tol)) throw DomainError("state is not a solution (residual " + format_real(rn) + ")");
}

double sample_dot(const VectorField& field, const Point& at, const Point& dir) {
  return field.eval(at).value.dot(dir);
}

}  // namespace

MappedProblem make_mapped_problem(const ReferenceDomain& domain, const Diffeomorphism& h, Nonlinearity nl) {
  return {make_problem(domain, h, std::move(nl)), h};
}

Vector transport_field(const DiscreteOperator& op, const Vector& v, const VectorField& hdot) {
  const Mesh& mesh = *op.mesh;
  const std::vector<Point> grad = physical_gradient(op, mesh.extend(v));
  const bool one_d = mesh.domain.dimension() == 1;
  Vector g(mesh.num_nodes());
  for (int i = 0; i < mesh.num_nodes(); ++i) {
    Point dir = hdot.eval(op.coeffs.mapped[i]).value;
    if (one_d) dir.y() = 0.0;
    g[i] = dir.dot(grad[i]);
  }
  return g;
}

Vector transport_term(const DiscreteOperator& op, const Nonlinearity& nl, const StateVector& state,
                      const VectorField& hdot) {
  require_solution(op, nl, state);
  const Vector g = transport_field(op, state.v, hdot);
  Vector out = op.apply_laplacian_full(g);
  const Mesh& mesh = *op.mesh;
  for (int k = 0; k < op.size(); ++k) out[k] += state.mu * nl.eval(state.v[k], 1).df * g[mesh.interior[k]];
  return out;
}

Vector domain_derivative(const DiscreteOperator& op, const Nonlinearity& nl, const StateVector& state,
                         const VectorField& hdot) {
  return -transport_term(op, nl, state, hdot);
}

Vector fd_domain_derivative(const MappedProblem& mp, const StateVector& state, const VectorField& hdot, double eps) {
  const DiscreteOperator& op = *mp.problem.op;
  const DiscreteOperator moved = assemble_mapped(op.mesh, mp.h.perturbed(hdot, eps));
  // mu f(v) is the same on both domains.
  return (moved.apply_laplacian(state.v) - op.apply_laplacian(state.v)) / eps;
}

HadamardPairing hadamard_pairing(const DiscreteOperator& op, const Nonlinearity& nl, const StateVector& state,
                                 const EigenPair& phi, const VectorField& hdot, double fold_tol) {
  const LinearizedOperator lin = linearize(op, nl, state);
  const double defect = op.norm(lin.apply(phi.phi));
  if (defect > 10.0 * fold_tol) {
    throw NotAFold("||L phi|| = " + format_real(defect) + " exceeds 10 fold_tol");
  }
  HadamardPairing out;
  out.lhs = op.dot(phi.phi, transport_term(op, nl, state, hdot));

  const Mesh& mesh = *op.mesh;
  const Vector dphi = normal_derivative(op, mesh.extend(phi.phi));
  const Vector dv = normal_derivative(op, mesh.extend(state.v));
  const bool one_d = mesh.domain.dimension() == 1;
  double rhs = 0.0;
  for (std::size_t b = 0; b < op.boundary.size(); ++b) {
    const PhysicalBoundaryNode& node = op.boundary[b];
    Point nu = node.normal;
    if (one_d) nu.y() = 0.0;
    const double hn = sample_dot(hdot, op.coeffs.mapped[node.node], nu);
    rhs -= node.arc * dphi[static_cast<Eigen::Index>(b)] * dv[static_cast<Eigen::Index>(b)] * hn;
  }
  out.rhs = rhs;
  const double scale = std::max({std::abs(out.lhs), std::abs(out.rhs), 1e-12});
  out.relative_gap = std::abs(out.lhs - out.rhs) / scale;
  return out;
}

double loglog_slope(const std::vector<double>& x, const std::vector<double>& y) {
  const std::size_t n = std::min(x.size(), y.size());
  if (n < 2) return std::numeric_limits<double>::quiet_NaN();
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const double lx = std::log(x[i]);
    const double ly = std::log(y[i]);
    sx += lx;
    sy += ly;
    sxx += lx * lx;
    sxy += lx * ly;
  }
  const double dn = static_cast<double>(n);
  return (dn * sxy - sx * sy) / (dn * sxx - sx * sx);
}

ShapeDerivativeReport shape_derivative_report(const MappedProblem& mp, const StateVector& state,
                                              const VectorField& hdot, const std::vector<double>& epsilons,
                                              const EigenPair* fold_pair, double fold_tol) {
  if (epsilons.size() < 2) throw ConfigError("shape.epsilons: need at least two values");
  for (double e : epsilons) {
    if (!(e > 0.0)) throw ConfigError("shape.epsilons: values must be positive");
  }
  const DiscreteOperator& op = *mp.problem.op;
  const Nonlinearity& nl = mp.problem.nl;
  const Vector formula = domain_derivative(op, nl, state, hdot);
  ShapeDerivativeReport rep;
  rep.formula_value = op.norm(formula);
  if (transport_field(op, state.v, hdot).lpNorm<Eigen::Infinity>() == 0.0) {
    throw DomainError("perturbation field vanishes on the solution support");
  }

  std::vector<Vector> fds;
  for (double e : epsilons) {
    fds.push_back(fd_domain_derivative(mp, state, hdot, e));
    rep.epsilons.push_back(e);
    rep.fd_values.push_back(op.norm(fds.back()));
    rep.errors.push_back(op.norm(fds.back() - formula) / rep.formula_value);
  }
  rep.observed_order = loglog_slope(rep.epsilons, rep.errors);

  // Linear extrapolation to eps = 0 from the two smallest step sizes.
  std::vector<std::size_t> order(epsilons.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return epsilons[a] < epsilons[b]; });
  const double e1 = epsilons[order[0]], e2 = epsilons[order[1]];
  const Vector extrapolated = (e2 * fds[order[0]] - e1 * fds[order[1]]) / (e2 - e1);
  rep.richardson_gap = op.norm(extrapolated - formula) / rep.formula_value;

  if (fold_pair) {
    rep.hadamard = hadamard_pairing(op, nl, state, *fold_pair, hdot, fold_tol);
    rep.has_hadamard = true;
  }
  return rep;
}

namespace {

SampleReport run_sample(const ExperimentOptions& options, const ContinuationConfig& config, int index) {
  SampleReport rep;
  rep.index = index;
  rep.seed = derive_seed(options.seed, static_cast<std::uint64_t>(index));
  try {
    const Diffeomorphism h =
        Diffeomorphism::random_fourier(options.domain, rep.seed, options.amplitude, options.n_modes);
    rep.max_amplitude = h.max_amplitude();
    rep.coefficients = h.coefficients();
    const Problem problem = make_problem(options.domain, h, options.nl);
    const Branch br = trace_continuum(problem, config);
    for (const FoldRecord& f : br.folds) {
      rep.folds.push_back({f.mu_fold, f.sup_norm, f.spectral_gap, std::abs(f.transversality.normalized),
                           f.cr.ratio_law_error, f.simple, f.transversal});
    }
    for (const BranchEvent& e : br.events) rep.events.push_back(to_string(e.kind));
    rep.degenerate_points = br.count(EventKind::DegeneratePoint);
  } catch (const DegenerateMapError& e) {
    rep.status = "DegenerateMapError";
    rep.message = e.what();
  } catch (const Error& e) {
    rep.status = "Error";
    rep.message = e.what();
  }
  return rep;
}

}  // namespace

ExperimentReport genericity_experiment(const ExperimentOptions& options, const ContinuationConfig& config) {
  if (options.n_samples < 1) throw ConfigError("experiment.n_samples: must be at least 1");
  if (!(options.amplitude >= 0.0)) throw ConfigError("experiment.amplitude: must be non-negative");
  if (options.n_modes < 1) throw ConfigError("experiment.n_modes: must be at least 1");
  options.domain.validate();
  config.validate();

  ContinuationConfig worker_config = config;
  worker_config.log = nullptr;
  worker_config.newton.log = nullptr;

  ExperimentReport out;
  out.samples.resize(static_cast<std::size_t>(options.n_samples));
  std::atomic<int> next{0};
  auto worker = [&] {
    for (int i = next++; i < options.n_samples; i = next++) {
      out.samples[static_cast<std::size_t>(i)] = run_sample(options, worker_config, i);
    }
  };
  const int jobs = std::clamp(options.jobs, 1, options.n_samples);
  std::vector<std::thread> pool;
  for (int j = 1; j < jobs; ++j) pool.emplace_back(worker);
  worker();
  for (std::thread& t : pool) t.join();

  ExperimentSummary& s = out.summary;
  s.n_samples = options.n_samples;
  s.min_spectral_gap = std::numeric_limits<double>::infinity();
  s.min_transversality = std::numeric_limits<double>::infinity();
  for (const SampleReport& r : out.samples) {
    if (r.status != "ok") ++s.n_failed;
    s.degenerate_halts += r.degenerate_points;
    for (const FoldSummary& f : r.folds) {
      ++s.n_folds;
      s.min_spectral_gap = std::min(s.min_spectral_gap, f.spectral_gap);
      s.min_transversality = std::min(s.min_transversality, f.transversality);
      s.all_simple = s.all_simple && f.simple;
      s.all_transversal = s.all_transversal && f.transversal;
    }
  }
  if (s.n_folds == 0) {
    s.min_spectral_gap = 0.0;
    s.min_transversality = 0.0;
  }
  return out;
}

}  // namespace foldcont
