#include "foldcont/continuation.hpp"

#include <algorithm>
#include <cmath>

#include "foldcont/errors.hpp"
#include "foldcont/format.hpp"

namespace foldcont {
namespace {

double sup_norm(const Vector& x) { return x.size() == 0 ? 0.0 : x.lpNorm<Eigen::Infinity>(); }

bool opposite(double a, double b) { return (a > 0.0 && b < 0.0) || (a < 0.0 && b > 0.0); }

void normalize_tangent(const DiscreteOperator& op, double omega, Vector& tv, double& tmu) {
  const double n = std::sqrt(arclength_dot(op, omega, tv, tmu, tv, tmu));
  tv /= n;
  tmu /= n;
}

// Tangent of the solution curve at `p`, oriented along `ref`.
void update_tangent(const Problem& problem, BranchPoint& p, const LinearizedOperator& lin, const Vector& ref_v,
                    double ref_mu, double omega) {
  const BorderedSolution t =
      bordered_solve(lin, Vector::Zero(problem.size()), 1.0, (1.0 - omega) * ref_v, omega * ref_mu);
  p.tangent_v = t.v_dot;
  p.tangent_mu = t.mu_dot;
  normalize_tangent(*problem.op, omega, p.tangent_v, p.tangent_mu);
}

struct Corrected {
  StateVector state;
  int iterations = 0;
  std::vector<double> history;
};

// Newton on { residual = 0, <tau, x - anchor> = offset } from `guess`.
Corrected correct_on_hyperplane(const Problem& problem, const BranchPoint& anchor, double offset, StateVector guess,
                                const ContinuationConfig& config) {
  const DiscreteOperator& op = *problem.op;
  const double omega = config.omega;
  const Vector c_v = (1.0 - omega) * anchor.tangent_v;
  const double c_mu = omega * anchor.tangent_mu;
  Corrected out;
  out.state = std::move(guess);
  const int max_iter = std::min(config.newton.max_iter, 12);
  for (int it = 0;; ++it) {
    Vector r;
    try {
      r = residual(op, problem.nl, out.state);
    } catch (const DomainError& e) {
      throw StepFailure(std::string("corrector left the domain of f: ") + e.what());
    }
    const double rn = sup_norm(r);
    if (!std::isfinite(rn)) throw StepFailure("corrector diverged");
    const double constraint = arclength_dot(op, omega, anchor.tangent_v, anchor.tangent_mu,
                                            out.state.v - anchor.v, out.state.mu - anchor.mu) -
                              offset;
    out.history.push_back(rn);
    const double tol = std::max(config.newton.tol, residual_floor(op, problem.nl, out.state));
    if (rn <= tol && std::abs(constraint) <= 1e-10 * std::max(1.0, std::abs(offset))) break;
    if (it >= max_iter) throw StepFailure("corrector did not converge (residual " + format_real(rn) + ")");
    const LinearizedOperator lin = linearize(op, problem.nl, out.state);
    const BorderedSolution d = bordered_solve(lin, -r, -constraint, c_v, c_mu);
    out.state.v += d.v_dot;
    out.state.mu += d.mu_dot;
    out.iterations = it + 1;
    if (config.newton.log) {
      config.newton.log("{\"event\":\"corrector\",\"mu\":" + format_real(out.state.mu) + ",\"iter\":" +
                        std::to_string(it + 1) + ",\"residual\":" + format_real(rn) + "}");
    }
  }
  return out;
}

BranchPoint finish_point(const Problem& problem, const BranchPoint& anchor, Corrected c,
                         const ContinuationConfig& config) {
  const DiscreteOperator& op = *problem.op;
  BranchPoint p;
  p.mu = c.state.mu;
  p.v = std::move(c.state.v);
  p.newton_iterations = c.iterations;
  p.newton_history = std::move(c.history);
  const Vector dv = p.v - anchor.v;
  const double dmu = p.mu - anchor.mu;
  p.s = anchor.s + std::sqrt(arclength_dot(op, config.omega, dv, dmu, dv, dmu));
  const LinearizedOperator lin = linearize(op, problem.nl, {p.mu, p.v});
  update_tangent(problem, p, lin, anchor.tangent_v, anchor.tangent_mu, config.omega);
  annotate(problem, p, config, anchor.sigma1);
  return p;
}

}  // namespace

std::string to_string(EventKind kind) {
  switch (kind) {
    case EventKind::Fold:
      return "Fold";
    case EventKind::MuFloor:
      return "MuFloor";
    case EventKind::NormCap:
      return "NormCap";
    case EventKind::MaxSteps:
      return "MaxSteps";
    case EventKind::NewtonFailure:
      return "NewtonFailure";
    case EventKind::DegeneratePoint:
      return "DegeneratePoint";
  }
  return "Fold";
}

int Branch::count(EventKind kind) const {
  return static_cast<int>(std::count_if(events.begin(), events.end(), [&](const BranchEvent& e) { return e.kind == kind; }));
}

void ContinuationConfig::validate() const {
  auto require = [](bool ok, const std::string& key, const std::string& what) {
    if (!ok) throw ConfigError(key + ": " + what);
  };
  require(ds_min > 0.0, "ds_min", "must be positive");
  require(ds_min <= ds_init, "ds_init", "must be at least ds_min");
  require(ds_init <= ds_max, "ds_max", "must be at least ds_init");
  require(dmu_init > 0.0, "dmu_init", "must be positive");
  require(mu_floor > 0.0, "mu_floor", "must be positive");
  require(norm_cap > 0.0, "norm_cap", "must be positive");
  require(max_steps > 0, "max_steps", "must be positive");
  require(omega > 0.0 && omega < 1.0, "omega", "must lie in (0, 1)");
  require(switch_fraction > 0.0 && switch_fraction < 1.0, "switch_fraction", "must lie in (0, 1)");
  require(fold_tol > 0.0, "fold_tol", "must be positive");
  require(transversal_threshold >= 0.0, "transversal_threshold", "must be non-negative");
  require(snapshot_every >= 1, "snapshot_every", "must be at least 1");
  require(cr_window >= 3, "cr_window", "must be at least 3");
  require(cr_step > 0.0, "cr_step", "must be positive");
  require(stop_after_folds >= 0, "stop_after_folds", "must be non-negative");
  require(newton.tol > 0.0, "newton_tol", "must be positive");
  require(newton.max_iter > 0, "newton_max_iter", "must be positive");
}

double arclength_dot(const DiscreteOperator& op, double omega, const Vector& a_v, double a_mu, const Vector& b_v,
                     double b_mu) {
  return omega * a_mu * b_mu + (1.0 - omega) * op.dot(a_v, b_v);
}

void annotate(const Problem& problem, BranchPoint& p, const ContinuationConfig& config,
              std::optional<double> sigma_hint) {
  const LinearizedOperator lin = linearize(*problem.op, problem.nl, {p.mu, p.v});
  p.sup_norm = sup_norm(p.v);
  p.sigma1 = eigenpairs(lin, 1, config.eig, sigma_hint).front().sigma;
  p.morse_index = morse_index(lin, config.fold_tol).index;
}

MinimalBranch trace_minimal_branch(const Problem& problem, const ContinuationConfig& config,
                                   const std::vector<double>& mu_grid) {
  const DiscreteOperator& op = *problem.op;
  const double omega = config.omega;
  MinimalBranch out;

  auto make_point = [&](double mu, Vector v, const NewtonResult* nr, const BranchPoint* prev) {
    BranchPoint p;
    p.mu = mu;
    p.v = std::move(v);
    p.minimal = true;
    if (nr) {
      p.newton_iterations = nr->iterations;
      p.newton_history = nr->residual_history;
    }
    const LinearizedOperator lin = linearize(op, problem.nl, {mu, p.v});
    p.tangent_v = solve_linearized(lin, -lin.f, config.newton.solver);
    p.tangent_mu = 1.0;
    normalize_tangent(op, omega, p.tangent_v, p.tangent_mu);
    if (prev) {
      const Vector dv = p.v - prev->v;
      p.s = prev->s + std::sqrt(arclength_dot(op, omega, dv, mu - prev->mu, dv, mu - prev->mu));
    }
    annotate(problem, p, config, prev ? std::optional<double>(prev->sigma1) : std::nullopt);
    return p;
  };
  auto predict = [&](const BranchPoint& from, double mu) {
    return Vector(from.v + ((mu - from.mu) / from.tangent_mu) * from.tangent_v);
  };

  std::vector<double> grid = mu_grid;
  if (!grid.empty() && grid.front() != 0.0) grid.insert(grid.begin(), 0.0);
  out.points.push_back(make_point(0.0, Vector::Zero(problem.size()), nullptr, nullptr));
  const double sigma0 = out.points.front().sigma1;

  if (!grid.empty()) {
    for (std::size_t i = 1; i < grid.size(); ++i) {
      const BranchPoint& prev = out.points.back();
      const NewtonResult nr = newton_correct(op, problem.nl, grid[i], predict(prev, grid[i]), config.newton);
      out.points.push_back(make_point(grid[i], nr.v, &nr, &prev));
    }
    return out;
  }

  double dmu = config.dmu_init;
  for (int step = 0; step < config.max_steps; ++step) {
    const BranchPoint& prev = out.points.back();
    const double mu = prev.mu + dmu;
    NewtonResult nr;
    bool ok = true;
    try {
      nr = newton_correct(op, problem.nl, mu, predict(prev, mu), config.newton);
    } catch (const Error&) {
      ok = false;
    }
    BranchPoint p;
    if (ok) {
      p = make_point(mu, nr.v, &nr, &prev);
      // Landing on another branch shows up as a lost sign or a non-monotone jump.
      ok = p.sigma1 > 0.0 && ((p.v - prev.v).array() >= -1e-10).all();
    }
    if (!ok) {
      dmu *= 0.5;
      if (dmu < config.ds_min) break;
      continue;
    }
    if (p.sup_norm > config.norm_cap) break;
    const bool done = p.sigma1 < config.switch_fraction * sigma0;
    out.points.push_back(std::move(p));
    if (done) {
      out.switched = true;
      break;
    }
    if (nr.iterations <= 3) dmu *= 1.3;
    if (nr.iterations > 8) dmu *= 0.5;
    // Keep the arclength of one step within ds_max.
    const BranchPoint& last = out.points.back();
    const double per_mu = std::sqrt(arclength_dot(op, omega, last.tangent_v, last.tangent_mu, last.tangent_v,
                                                  last.tangent_mu)) /
                          std::abs(last.tangent_mu);
    dmu = std::min(dmu, config.ds_max / per_mu);
  }
  return out;
}

BranchPoint step_pseudoarclength(const Problem& problem, const BranchPoint& last, double ds,
                                 const ContinuationConfig& config) {
  if (last.tangent_v.size() != problem.size() || !last.has_snapshot()) {
    throw StepFailure("step needs a point with state and tangent");
  }
  StateVector guess{last.mu + ds * last.tangent_mu, last.v + ds * last.tangent_v};
  Corrected c = correct_on_hyperplane(problem, last, ds, std::move(guess), config);
  BranchPoint p = finish_point(problem, last, std::move(c), config);
  if (p.s - last.s > 1.1 * ds) {
    throw StepFailure("chord " + format_real(p.s - last.s) + " exceeds step " + format_real(ds));
  }
  return p;
}

RefinedFold refine_fold(const Problem& problem, const BranchPoint& lo, const BranchPoint& hi,
                        const ContinuationConfig& config) {
  if (!opposite(lo.sigma1, hi.sigma1)) {
    throw BracketError("sigma1 does not change sign between s = " + format_real(lo.s) + " and s = " + format_real(hi.s));
  }
  if (!lo.has_snapshot() || !hi.has_snapshot()) throw BracketError("bracket points need stored states");
  const DiscreteOperator& op = *problem.op;
  const Vector dv = hi.v - lo.v;
  const double dmu = hi.mu - lo.mu;
  const double span = arclength_dot(op, config.omega, lo.tangent_v, lo.tangent_mu, dv, dmu);
  if (!(span > 0.0)) throw BracketError("bracket is not ahead of its lower point");

  auto evaluate = [&](double delta) {
    const double t = delta / span;
    Corrected c = correct_on_hyperplane(problem, lo, delta, {lo.mu + t * dmu, lo.v + t * dv}, config);
    return finish_point(problem, lo, std::move(c), config);
  };

  double a = 0.0, fa = lo.sigma1;
  double b = span, fb = hi.sigma1;
  BranchPoint best = std::abs(fa) < std::abs(fb) ? lo : hi;
  for (int it = 0; it < 60 && std::abs(best.sigma1) > config.fold_tol; ++it) {
    const double c = b - fb * (b - a) / (fb - fa);
    BranchPoint pc = evaluate(c);
    const double fc = pc.sigma1;
    if (std::abs(fc) < std::abs(best.sigma1)) best = pc;
    if (opposite(fc, fb)) {
      a = b;
      fa = fb;
    } else {
      fa *= 0.5;
    }
    b = c;
    fb = fc;
    if (std::abs(b - a) <= 1e-15 * span) break;
  }
  if (std::abs(best.sigma1) > config.fold_tol && config.log) {
    config.log("{\"event\":\"warning\",\"message\":\"fold refinement stopped at |sigma1| = " +
               format_real(std::abs(best.sigma1)) + "\"}");
  }

  RefinedFold out;
  best.fold = true;
  best.minimal = false;
  const LinearizedOperator lin = linearize(op, problem.nl, {best.mu, best.v});
  const std::vector<EigenPair> near = nearest_zero_pairs(lin, 2, config.eig);
  FoldRecord& rec = out.record;
  rec.s_fold = best.s;
  rec.mu_fold = best.mu;
  rec.sup_norm = best.sup_norm;
  rec.eigenpair = near[0];
  rec.spectral_gap = std::abs(near[1].sigma);
  rec.transversality = transversality(op, problem.nl, {best.mu, best.v}, near[0]);
  rec.morse_before = lo.morse_index;
  rec.morse_after = hi.morse_index;
  rec.mu_dot_changes_sign = opposite(lo.tangent_mu, hi.tangent_mu);
  rec.simple = rec.spectral_gap > 10.0 * config.fold_tol;
  rec.transversal = std::abs(rec.transversality.normalized) >= config.transversal_threshold;
  best.sigma1 = near[0].sigma;
  out.point = std::move(best);
  return out;
}

std::vector<BranchPoint> fold_neighbourhood(const Problem& problem, const BranchPoint& fold, double step,
                                            int window, const ContinuationConfig& config) {
  std::vector<BranchPoint> out;
  for (double dir : {-1.0, 1.0}) {
    BranchPoint cur = fold;
    cur.s = 0.0;
    cur.tangent_v *= dir;
    cur.tangent_mu *= dir;
    for (int k = 0; k < window; ++k) {
      BranchPoint p = step_pseudoarclength(problem, cur, step, config);
      cur = p;
      p.s *= dir;
      p.tangent_v *= dir;
      p.tangent_mu *= dir;
      p.fold = false;
      out.push_back(std::move(p));
    }
  }
  return out;
}

Branch trace_continuum(const Problem& problem, const ContinuationConfig& config, const BranchPoint* resume) {
  config.validate();
  Branch br;
  auto log = [&](const std::string& line) {
    if (config.log) config.log(line);
  };
  auto add_event = [&](EventKind kind, double s, const std::string& message, int fold_id = -1) {
    br.events.push_back({kind, s, fold_id, message});
    log("{\"event\":\"" + to_string(kind) + "\",\"s\":" + format_real(s) + "}");
  };
  auto warn = [&](const std::string& message) {
    br.warnings.push_back(message);
    log("{\"event\":\"warning\",\"message\":\"" + message + "\"}");
  };

  BranchPoint last;
  if (resume) {
    if (!resume->has_snapshot() || resume->tangent_v.size() != problem.size()) {
      throw ConfigError("resume: point needs a stored state and tangent of matching size");
    }
    last = *resume;
    br.points.push_back(last);
  } else {
    MinimalBranch mb = trace_minimal_branch(problem, config);
    br.points = mb.points;
    last = br.points.back();
  }
  for (std::size_t i = 0; i + 1 < br.points.size(); ++i) {
    if (i % static_cast<std::size_t>(config.snapshot_every) != 0) br.points[i].v.resize(0);
  }
  if (last.sup_norm > config.norm_cap) {
    add_event(EventKind::NormCap, last.s, "sup norm above cap on the minimal branch");
    return br;
  }

  double ds = config.ds_init;
  int steps = 0;
  int singular_streak = 0;
  while (true) {
    if (steps >= config.max_steps) {
      add_event(EventKind::MaxSteps, last.s, "step budget exhausted");
      break;
    }
    BranchPoint p;
    try {
      p = step_pseudoarclength(problem, last, ds, config);
      singular_streak = 0;
    } catch (const SingularBordered& e) {
      ++singular_streak;
      ds *= 0.5;
      if (ds < config.ds_min) {
        add_event(EventKind::DegeneratePoint, last.s, e.what());
        break;
      }
      continue;
    } catch (const Error& e) {
      ds *= 0.5;
      if (ds < config.ds_min) {
        add_event(singular_streak > 0 ? EventKind::DegeneratePoint : EventKind::NewtonFailure, last.s, e.what());
        break;
      }
      continue;
    }
    ++steps;

    bool stop = false;
    if (opposite(last.sigma1, p.sigma1)) {
      try {
        RefinedFold rf = refine_fold(problem, last, p, config);
        FoldRecord& rec = rf.record;
        rec.id = static_cast<int>(br.folds.size());
        if (std::abs(rec.morse_after - rec.morse_before) != 1) {
          warn("Morse index changes by " + std::to_string(rec.morse_after - rec.morse_before) + " across fold " +
               std::to_string(rec.id));
        }
        if (!rec.mu_dot_changes_sign) warn("mu_dot keeps its sign across fold " + std::to_string(rec.id));
        if (config.cr_check) {
          try {
            const std::vector<BranchPoint> samples =
                fold_neighbourhood(problem, rf.point, config.cr_step, config.cr_window, config);
            rec.cr = cr_expansion_check(problem, samples, rf.point, rec, config.cr_window);
          } catch (const Error& e) {
            warn(std::string("fold expansion check skipped: ") + e.what());
          }
        }
        br.points.push_back(rf.point);
        br.folds.push_back(rec);
        add_event(EventKind::Fold, rec.s_fold, "mu = " + format_real(rec.mu_fold), rec.id);
        if (config.stop_after_folds > 0 && static_cast<int>(br.folds.size()) >= config.stop_after_folds) stop = true;
        if (!rec.simple || !rec.transversal) {
          add_event(EventKind::DegeneratePoint, rec.s_fold,
                    !rec.simple ? "fold eigenvalue is not simple" : "fold is not transversal");
          stop = true;
        }
      } catch (const Error& e) {
        add_event(EventKind::DegeneratePoint, p.s, std::string("fold refinement failed: ") + e.what());
        stop = true;
      }
    } else if (p.morse_index != last.morse_index) {
      warn("Morse index changes without a sigma1 sign change near s = " + format_real(p.s));
    }

    last = p;
    BranchPoint stored = p;
    if (static_cast<int>(br.points.size()) % config.snapshot_every != 0) stored.v.resize(0);
    br.points.push_back(std::move(stored));
    log("{\"event\":\"point\",\"s\":" + format_real(p.s) + ",\"mu\":" + format_real(p.mu) + ",\"sup_norm\":" +
        format_real(p.sup_norm) + ",\"sigma1\":" + format_real(p.sigma1) + ",\"ds\":" + format_real(ds) + "}");
    if (stop) break;

    if (p.newton_iterations <= 3) ds = std::min(ds * 1.3, config.ds_max);
    if (p.newton_iterations > 8) ds = std::max(ds * 0.5, config.ds_min);
    if (p.mu < config.mu_floor) {
      add_event(EventKind::MuFloor, p.s, "mu below floor");
      break;
    }
    if (p.sup_norm > config.norm_cap) {
      add_event(EventKind::NormCap, p.s, "sup norm above cap");
      break;
    }
  }
  if (!br.points.empty() && !br.points.back().has_snapshot()) br.points.back().v = last.v;
  return br;
}

}  // namespace foldcont
