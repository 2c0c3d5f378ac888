// Acceptance run: one PASS/FAIL line per criterion, exit status 1 if any fails.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <string>
#include <vector>

#include "foldcont/errors.hpp"
#include "foldcont/io.hpp"
#include "foldcont/oracles.hpp"
#include "foldcont/shape.hpp"

using namespace foldcont;

namespace {

// Criterion 1
constexpr double kDiskMuTol = 0.02;
constexpr double kDiskSupTol = 0.03;
constexpr double kRefinementGain = 3.0;
// Criterion 2
constexpr double kIntervalFoldTol = 1e-3;
// Criterion 3
constexpr int kProfilePoints = 10;
constexpr double kProfileTol = 1e-2;
// Criterion 4
constexpr double kMuPrimeScaledMax = 1e-2;
constexpr double kSlopeLo = 1.7;
constexpr double kSlopeHi = 2.3;
constexpr double kRatioLawMax = 0.1;
constexpr double kTransversalityMin = 0.1;
// Criterion 5
constexpr double kMonotoneSlack = -1e-10;
constexpr double kQuadraticConstant = 10.0;
constexpr double kQuadraticFloor = 1e-6;
// Criterion 6
constexpr double kOrderMin = 0.9;
constexpr double kHadamardGapMax = 0.05;
constexpr double kHadamardSlopeMin = 0.9;
// Criterion 7
constexpr int kStarts = 500;
constexpr int kTinyInterior = 9;
constexpr int kMuValues = 20;
constexpr double kBranchMatchTol = 1e-6;
// Criterion 8
constexpr double kRevisitMu = 1e-8;
constexpr double kRevisitV = 1e-6;
// Criterion 9
constexpr int kSamples = 20;
constexpr double kAmplitude = 0.02;
constexpr int kJobs = 4;
constexpr double kGapFactor = 10.0;
constexpr double kTransversalMin = 1e-3;

const double kLn4 = 2.0 * std::log(2.0);

int failures = 0;

void report(int id, bool ok, const std::string& what, double seconds) {
  std::printf("%s criterion %d: %s [%.1f s]\n", ok ? "PASS" : "FAIL", id, what.c_str(), seconds);
  std::fflush(stdout);
  if (!ok) ++failures;
}

void criterion(int id, const std::function<bool(std::string&)>& body) {
  const auto t0 = std::chrono::steady_clock::now();
  std::string what;
  bool ok = false;
  try {
    ok = body(what);
  } catch (const std::exception& e) {
    what += std::string(" threw: ") + e.what();
  }
  report(id, ok, what, std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count());
}

std::string fmt(const char* f, double x) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, x);
  return buf;
}

Problem disk_problem(int nr) {
  return make_problem(ReferenceDomain::disk(nr, 2 * nr), Diffeomorphism::identity(2), Nonlinearity::exponential());
}

Problem interval_problem(int n) {
  return make_problem(ReferenceDomain::interval(n), Diffeomorphism::identity(1), Nonlinearity::exponential());
}

ContinuationConfig model_config(double mu_floor) {
  ContinuationConfig c;
  c.mu_floor = mu_floor;
  c.norm_cap = 10.0;
  return c;
}

struct Traced {
  Problem problem;
  Branch branch;
};

const Traced& disk64() {
  static const Traced t = [] {
    Problem p = disk_problem(64);
    Branch br = trace_continuum(p, model_config(1.0));
    return Traced{std::move(p), std::move(br)};
  }();
  return t;
}

const Traced& interval512() {
  static const Traced t = [] {
    Problem p = interval_problem(512);
    Branch br = trace_continuum(p, model_config(0.05));
    return Traced{std::move(p), std::move(br)};
  }();
  return t;
}

const BranchPoint& fold_point(const Branch& br) {
  for (const BranchPoint& q : br.points) {
    if (q.fold) return q;
  }
  throw Error("no refined fold point on the branch");
}

// Fold of u'' + mu e^u = 0 on (0, 1) from the shooting oracle.
double shooting_reference() {
  static const double mu = shooting_fold(Nonlinearity::exponential());
  return mu;
}

bool check_cr(const FoldRecord& f, std::string& what, const char* tag) {
  const CRDiagnostics& cr = f.cr;
  what += std::string(tag) + ": |mu'|=" + fmt("%.2e", cr.mu_prime_scaled) + " slope=" +
          fmt("%.3f", cr.xi_second_order_slope) + " ratio_err=" + fmt("%.3f", cr.ratio_law_error) + " morse " +
          std::to_string(f.morse_before) + "->" + std::to_string(f.morse_after) +
          " transv=" + fmt("%.3f", std::abs(f.transversality.normalized)) + "; ";
  return cr.populated && cr.mu_prime_scaled <= kMuPrimeScaledMax && cr.xi_second_order_slope >= kSlopeLo &&
         cr.xi_second_order_slope <= kSlopeHi && cr.ratio_law_error <= kRatioLawMax &&
         f.morse_after - f.morse_before == 1 && std::abs(f.transversality.normalized) >= kTransversalityMin;
}

bool check_minimal(const Problem& p, const Branch& br, std::string& what, const char* tag) {
  const double s_fold = br.folds.at(0).s_fold;
  int pre = 0, histories = 0;
  bool sigma_ok = true, monotone_ok = true, quadratic_ok = true;
  const BranchPoint* prev = nullptr;
  for (const BranchPoint& q : br.points) {
    if (q.s < s_fold && !q.fold) {
      ++pre;
      sigma_ok = sigma_ok && q.sigma1 > 0.0;
    }
    if (q.minimal) {
      if (prev && prev->has_snapshot() && q.has_snapshot()) {
        monotone_ok = monotone_ok && (q.v - prev->v).minCoeff() >= kMonotoneSlack;
      }
      prev = &q;
    }
    const std::vector<double>& h = q.newton_history;
    if (h.size() < 3 || !q.has_snapshot()) continue;
    ++histories;
    // Residuals below the round-off floor carry no convergence information.
    const double noise = residual_floor(*p.op, p.nl, {q.mu, q.v});
    for (std::size_t k = 1; k + 1 < h.size(); ++k) {
      if (h[k] >= kQuadraticFloor && h[k + 1] > noise) {
        quadratic_ok = quadratic_ok && h[k + 1] <= kQuadraticConstant * h[k] * h[k];
      }
    }
  }
  what += std::string(tag) + ": " + std::to_string(pre) + " pre-fold points sigma1>0 " + (sigma_ok ? "yes" : "no") +
          ", monotone " + (monotone_ok ? "yes" : "no") + ", quadratic over " + std::to_string(histories) +
          " histories " + (quadratic_ok ? "yes" : "no") + "; ";
  return pre > 0 && histories > 0 && sigma_ok && monotone_ok && quadratic_ok;
}

bool check_simple_curve(const Branch& br, double ds_max, std::string& what, const char* tag) {
  int revisits = 0;
  for (std::size_t i = 0; i < br.points.size(); ++i) {
    for (std::size_t j = i + 1; j < br.points.size(); ++j) {
      const BranchPoint& a = br.points[i];
      const BranchPoint& b = br.points[j];
      if (std::abs(a.s - b.s) <= 5.0 * ds_max || !a.has_snapshot() || !b.has_snapshot()) continue;
      if (std::abs(a.mu - b.mu) < kRevisitMu && (a.v - b.v).lpNorm<Eigen::Infinity>() < kRevisitV) ++revisits;
    }
  }
  bool s_increasing = true;
  for (std::size_t i = 1; i < br.points.size(); ++i) s_increasing = s_increasing && br.points[i].s > br.points[i - 1].s;
  const int degenerate = br.count(EventKind::DegeneratePoint);
  what += std::string(tag) + ": " + std::to_string(br.points.size()) + " points, revisits " + std::to_string(revisits) +
          ", degenerate " + std::to_string(degenerate) + ", terminal " +
          (br.terminal() ? to_string(br.terminal()->kind) : "none") + "; ";
  return revisits == 0 && s_increasing && degenerate == 0 && br.terminal() &&
         br.terminal()->kind == EventKind::MuFloor;
}

std::vector<double> hadamard_gaps(const std::vector<int>& rings) {
  std::vector<double> gaps;
  for (int nr : rings) {
    const Problem* p = nullptr;
    const Branch* br = nullptr;
    Problem local;
    Branch local_br;
    if (nr == 64) {
      p = &disk64().problem;
      br = &disk64().branch;
    } else {
      local = disk_problem(nr);
      ContinuationConfig cfg = model_config(1.9);
      cfg.stop_after_folds = 1;
      cfg.cr_check = false;
      local_br = trace_continuum(local, cfg);
      p = &local;
      br = &local_br;
    }
    const BranchPoint& q = fold_point(*br);
    const HadamardPairing hp = hadamard_pairing(*p->op, p->nl, {q.mu, q.v}, br->folds.at(0).eigenpair,
                                                collar_mode(p->op->mesh->domain, 0, false));
    gaps.push_back(hp.relative_gap);
  }
  return gaps;
}

}  // namespace

int main() {
  criterion(1, [](std::string& what) {
    const Branch& coarse = disk64().branch;
    const FoldRecord& f = coarse.folds.at(0);
    const double mu_gap = std::abs(f.mu_fold - 2.0);
    const double sup_gap = std::abs(f.sup_norm - kLn4);

    const Problem fine = disk_problem(128);
    ContinuationConfig cfg = model_config(1.9);
    cfg.stop_after_folds = 1;
    cfg.cr_check = false;
    const Branch fb = trace_continuum(fine, cfg);
    const FoldRecord& g = fb.folds.at(0);
    const double mu_gap2 = std::abs(g.mu_fold - 2.0);
    const double sup_gap2 = std::abs(g.sup_norm - kLn4);
    what = "64x128 folds=" + std::to_string(coarse.count(EventKind::Fold)) + " mu=" + fmt("%.6f", f.mu_fold) +
           " sup=" + fmt("%.6f", f.sup_norm) + "; 128x256 mu=" + fmt("%.7f", g.mu_fold) + " sup=" +
           fmt("%.7f", g.sup_norm) + "; gap ratios mu " + fmt("%.2f", mu_gap / mu_gap2) + " sup " +
           fmt("%.2f", sup_gap / sup_gap2);
    return coarse.count(EventKind::Fold) == 1 && mu_gap <= kDiskMuTol && sup_gap <= kDiskSupTol &&
           mu_gap >= kRefinementGain * mu_gap2 && sup_gap >= kRefinementGain * sup_gap2;
  });

  criterion(2, [](std::string& what) {
    const auto t0 = std::chrono::steady_clock::now();
    const Problem p = interval_problem(512);
    ContinuationConfig cfg = model_config(3.0);
    cfg.stop_after_folds = 1;
    const Branch br = trace_continuum(p, cfg);
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    const double ref = shooting_reference();
    const double mu = br.folds.at(0).mu_fold;
    what = "n=512 mu_fold=" + fmt("%.9f", mu) + " shooting=" + fmt("%.9f", ref) + " gap=" +
           fmt("%.2e", std::abs(mu - ref)) + " trace " + fmt("%.2f", secs) + " s";
    return br.folds.size() == 1 && std::abs(mu - ref) <= kIntervalFoldTol && secs <= 10.0;
  });

  criterion(3, [](std::string& what) {
    const Traced& t = disk64();
    const Mesh& mesh = *t.problem.op->mesh;
    std::vector<const BranchPoint*> stored;
    for (const BranchPoint& q : t.branch.points) {
      if (q.has_snapshot() && q.sup_norm > 0.0) stored.push_back(&q);
    }
    if (static_cast<int>(stored.size()) < kProfilePoints) {
      what = "only " + std::to_string(stored.size()) + " stored states";
      return false;
    }
    double worst = 0.0, worst_sup = 0.0;
    for (int k = 0; k < kProfilePoints; ++k) {
      const BranchPoint& q = *stored[k * (stored.size() - 1) / (kProfilePoints - 1)];
      const RadialFamilyPoint rf = radial_family(radial_b_from_sup(q.sup_norm));
      double err = 0.0;
      for (int i = 0; i < mesh.num_unknowns(); ++i) {
        err = std::max(err, std::abs(q.v[i] - rf.u(mesh.nodes[mesh.interior[i]].norm())));
      }
      if (err > worst) {
        worst = err;
        worst_sup = q.sup_norm;
      }
    }
    what = std::to_string(kProfilePoints) + " points, max ||v - u_b||_inf=" + fmt("%.3e", worst) + " (at sup " +
           fmt("%.3f", worst_sup) + ")";
    return worst <= kProfileTol;
  });

  criterion(4, [](std::string& what) {
    const bool a = check_cr(interval512().branch.folds.at(0), what, "interval");
    const bool b = check_cr(disk64().branch.folds.at(0), what, "disk");
    return a && b;
  });

  criterion(5, [](std::string& what) {
    const bool a = check_minimal(interval512().problem, interval512().branch, what, "interval");
    const bool b = check_minimal(disk64().problem, disk64().branch, what, "disk");
    return a && b;
  });

  criterion(6, [](std::string& what) {
    const std::vector<double> eps = {1e-2, 1e-3, 1e-4};
    double min_order = 1e9;
    {
      const MappedProblem mp = make_mapped_problem(ReferenceDomain::interval(1024), Diffeomorphism::identity(1),
                                                   Nonlinearity::exponential());
      const StateVector st{3.0, newton_correct(*mp.problem.op, mp.problem.nl, 3.0, Vector::Zero(mp.problem.size())).v};
      for (int m : {0, 1, 3}) {
        const auto rep = shape_derivative_report(mp, st, collar_mode(mp.problem.op->mesh->domain, m, false), eps);
        min_order = std::min(min_order, rep.observed_order);
      }
    }
    const double interval_order = min_order;
    min_order = 1e9;
    {
      const MappedProblem mp = make_mapped_problem(ReferenceDomain::disk(256, 512), Diffeomorphism::identity(2),
                                                   Nonlinearity::exponential());
      const double mu = 1.5;
      const StateVector st{mu, trace_minimal_branch(mp.problem, model_config(1.0), {0.5, 1.0, mu}).points.back().v};
      for (int m : {0, 2}) {
        const auto rep = shape_derivative_report(mp, st, collar_mode(mp.problem.op->mesh->domain, m, false), eps);
        min_order = std::min(min_order, rep.observed_order);
      }
    }
    const double disk_order = min_order;
    const std::vector<int> rings = {16, 32, 64};
    const std::vector<double> gaps = hadamard_gaps(rings);
    const double slope = loglog_slope({1.0 / 16, 1.0 / 32, 1.0 / 64}, gaps);
    what = "order interval:1024 " + fmt("%.3f", interval_order) + ", disk:256x512 " + fmt("%.3f", disk_order) +
           "; Hadamard gaps 16/32/64 rings " + fmt("%.2e", gaps[0]) + " " + fmt("%.2e", gaps[1]) + " " +
           fmt("%.2e", gaps[2]) + " slope " + fmt("%.2f", slope);
    return interval_order >= kOrderMin && disk_order >= kOrderMin && gaps[2] <= kHadamardGapMax &&
           slope >= kHadamardSlopeMin;
  });

  criterion(7, [](std::string& what) {
    const Problem p = interval_problem(kTinyInterior);
    ContinuationConfig cfg = model_config(0.05);
    cfg.cr_check = false;
    const Branch br = trace_continuum(p, cfg);
    const double mu_star = br.folds.at(0).mu_fold;
    MultistartOptions opt;
    opt.n_starts = kStarts;
    opt.seed = 2024;
    int mismatched = 0;
    double worst = 0.0;
    std::string counts;
    for (int k = 0; k < kMuValues; ++k) {
      const double mu = mu_star * (0.1 + 1.1 * k / (kMuValues - 1.0));
      if (std::abs(mu - mu_star) < 1e-3) continue;
      const auto sols = multistart_enumerate(p, mu, opt);
      const std::size_t expected = mu < mu_star ? 2 : 0;
      counts += std::to_string(sols.size());
      if (sols.size() != expected) {
        ++mismatched;
        continue;
      }
      if (expected == 0) continue;
      const auto ref = branch_solutions_at(p, br.points, mu);
      if (ref.size() != 2) {
        ++mismatched;
        continue;
      }
      for (int i = 0; i < 2; ++i) worst = std::max(worst, (sols[i] - ref[i]).lpNorm<Eigen::Infinity>());
    }
    what = "discrete fold " + fmt("%.6f", mu_star) + ", counts " + counts + ", max distance to branch " +
           fmt("%.2e", worst);
    return mismatched == 0 && worst <= kBranchMatchTol;
  });

  criterion(8, [](std::string& what) {
    const double ds_max = ContinuationConfig{}.ds_max;
    const bool a = check_simple_curve(interval512().branch, ds_max, what, "interval");
    const bool b = check_simple_curve(disk64().branch, ds_max, what, "disk");
    const Problem rect = make_problem(ReferenceDomain::rectangle(32, 32), Diffeomorphism::identity(2),
                                      Nonlinearity::exponential());
    const bool c = check_simple_curve(trace_continuum(rect, model_config(1.0)), ds_max, what, "square");
    return a && b && c;
  });

  criterion(9, [](std::string& what) {
    ExperimentOptions opt;
    opt.domain = ReferenceDomain::rectangle(32, 32);
    opt.n_samples = kSamples;
    opt.amplitude = kAmplitude;
    opt.seed = 7;
    opt.jobs = kJobs;
    const ContinuationConfig cfg = model_config(1.0);
    const ExperimentReport a = genericity_experiment(opt, cfg);
    const ExperimentReport b = genericity_experiment(opt, cfg);
    const bool identical = dump_json(to_json(a)) == dump_json(to_json(b));
    bool folds_ok = true;
    for (const SampleReport& s : a.samples) {
      for (const FoldSummary& f : s.folds) {
        folds_ok = folds_ok && f.spectral_gap >= kGapFactor * cfg.fold_tol && f.transversality >= kTransversalMin;
      }
    }
    const ExperimentSummary& m = a.summary;
    what = std::to_string(m.n_samples) + " samples, failed " + std::to_string(m.n_failed) + ", folds " +
           std::to_string(m.n_folds) + ", degenerate " + std::to_string(m.degenerate_halts) + ", min gap " +
           fmt("%.3f", m.min_spectral_gap) + ", min transversality " + fmt("%.3f", m.min_transversality) +
           ", rerun identical " + (identical ? "yes" : "no");
    return m.n_samples == kSamples && m.n_failed == 0 && m.degenerate_halts == 0 && m.n_folds >= kSamples &&
           folds_ok && identical;
  });

  std::printf("%s: %d of 9 criteria failed\n", failures ? "FAIL" : "PASS", failures);
  return failures ? 1 : 0;
}
