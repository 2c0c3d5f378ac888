#include "foldcont/runs.hpp"

#include <cmath>

#include "foldcont/errors.hpp"
#include "foldcont/format.hpp"
#include "foldcont/oracles.hpp"

namespace foldcont {

MappedProblem build_problem(const RunConfig& c) {
  const ReferenceDomain d = parse_domain(c.domain);
  return make_mapped_problem(d, parse_diffeomorphism(c.diffeo, d), parse_nonlinearity(c.nonlinearity));
}

ContinuationConfig continuation_config(const RunConfig& c, std::function<void(const std::string&)> sink) {
  ContinuationConfig cc = c.continuation();
  if (sink && c.log_level != "quiet") cc.log = sink;
  if (sink && c.log_level == "verbose") cc.newton.log = sink;
  return cc;
}

ShapeCheck run_shape_check(const RunConfig& c, const ContinuationConfig& config) {
  const MappedProblem mp = build_problem(c);
  ContinuationConfig cc = config;
  cc.stop_after_folds = 1;
  cc.snapshot_every = 1;
  const Branch br = trace_continuum(mp.problem, cc);
  if (br.folds.empty()) throw Error("no fold reached before the branch terminated");
  const FoldRecord& fold = br.folds.front();
  StateVector state;
  for (const BranchPoint& q : br.points) {
    if (q.fold) {
      state = {q.mu, q.v};
      break;
    }
  }

  const VectorField mode = collar_mode(mp.problem.op->mesh->domain, c.shape_mode, c.shape_sine, c.shape_tangential);
  const double scale = c.shape_scale;
  const VectorField hdot{[mode, scale](const Point& x) {
                           FieldValue fv = mode.eval(x);
                           return FieldValue{scale * fv.value, scale * fv.jacobian};
                         },
                         format_real(scale) + " * " + mode.label};
  ShapeCheck out;
  out.report = shape_derivative_report(mp, state, hdot, c.shape_epsilons, &fold.eigenpair, c.fold_tol);
  const bool order_ok = out.report.observed_order >= c.shape_order_threshold;
  const bool hadamard_ok = out.report.hadamard.relative_gap <= c.shape_hadamard_threshold;
  out.passed = order_ok && hadamard_ok;

  out.json = Json{{"domain", c.domain}, {"field", hdot.label}, {"mu_fold", fold.mu_fold}, {"sup_norm", fold.sup_norm}};
  const Json body = to_json(out.report);
  for (auto it = body.begin(); it != body.end(); ++it) out.json[it.key()] = it.value();
  out.json["order_threshold"] = c.shape_order_threshold;
  out.json["hadamard_threshold"] = c.shape_hadamard_threshold;
  out.json["order_ok"] = order_ok;
  out.json["hadamard_ok"] = hadamard_ok;
  return out;
}

ExperimentReport run_experiment(const RunConfig& c) {
  ExperimentOptions opt;
  opt.domain = parse_domain(c.experiment_domain);
  opt.nl = parse_nonlinearity(c.nonlinearity);
  opt.n_samples = c.experiment_samples;
  opt.amplitude = c.experiment_amplitude;
  opt.n_modes = c.experiment_modes;
  opt.seed = c.seed;
  opt.jobs = c.jobs;
  return genericity_experiment(opt, c.continuation());
}

OracleTables run_oracle(const RunConfig& c) {
  if (c.oracle_b_grid.empty()) throw ConfigError("oracle.b_grid: must not be empty");
  const Nonlinearity nl = parse_nonlinearity(c.nonlinearity);
  OracleTables out;
  out.radial_csv = "b,mu,sup\n";
  Json radial = Json::array();
  for (double b : c.oracle_b_grid) {
    const RadialFamilyPoint rf = radial_family(b);
    out.radial_csv += format_real(b) + "," + format_real(rf.mu) + "," + format_real(rf.sup) + "\n";
    radial.push_back({{"b", b}, {"mu", rf.mu}, {"sup", rf.sup}});
  }
  out.shooting_csv = "mu,root,alpha\n";
  Json shooting = Json::array();
  for (double mu : c.oracle_mu_grid) {
    const std::vector<double> roots = shooting_roots(nl, mu);
    for (std::size_t i = 0; i < roots.size(); ++i) {
      out.shooting_csv += format_real(mu) + "," + std::to_string(i) + "," + format_real(roots[i]) + "\n";
    }
    shooting.push_back({{"mu", mu}, {"roots", roots}});
  }
  const double fold = shooting_fold(nl, 0.5, 6.0, c.oracle_fold_tol);
  out.json = Json{{"radial", radial}, {"shooting", shooting}, {"fold_mu", fold}};
  return out;
}

Spectrum run_spectrum(const RunConfig& c, const ContinuationConfig& cc, const BranchPoint* point) {
  const MappedProblem mp = build_problem(c);
  const Problem& p = mp.problem;
  StateVector state;
  if (point) {
    if (point->v.size() != p.size()) throw ConfigError("point: stored state does not match the mesh");
    state = {point->mu, point->v};
  } else {
    std::vector<double> grid;
    const int n = std::max(1, static_cast<int>(std::ceil(c.spectrum_mu / c.dmu_init)));
    for (int i = 1; i <= n; ++i) grid.push_back(c.spectrum_mu * i / n);
    state = {c.spectrum_mu, trace_minimal_branch(p, cc, grid).points.back().v};
  }
  const LinearizedOperator lin = linearize(*p.op, p.nl, state);
  Spectrum out;
  out.mu = state.mu;
  out.pairs = eigenpairs(lin, c.spectrum_k, cc.eig);
  out.morse_index = morse_index(lin, c.fold_tol).index;
  out.csv = "index,sigma,residual\n";
  for (std::size_t i = 0; i < out.pairs.size(); ++i) {
    out.csv += std::to_string(i) + "," + format_real(out.pairs[i].sigma) + "," + format_real(out.pairs[i].residual) +
               "\n";
  }
  return out;
}

}  // namespace foldcont
