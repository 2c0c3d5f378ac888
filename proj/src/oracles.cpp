#include "foldcont/oracles.hpp"

#include <algorithm>
#include <array>
#include <atomic>
#include <cmath>
#include <limits>
#include <optional>
#include <thread>

#include "foldcont/errors.hpp"
#include "foldcont/format.hpp"
#include "foldcont/random.hpp"

namespace foldcont {

double RadialFamilyPoint::u(double r) const { return 2.0 * std::log((1.0 + b) / (1.0 + b * r * r)); }

double RadialFamilyPoint::u_rr(double r) const {
  const double q = 1.0 + b * r * r;
  return -4.0 * b * (1.0 - b * r * r) / (q * q);
}

RadialFamilyPoint radial_family(double b) {
  if (!(b > 0.0) || !std::isfinite(b)) throw DomainError("radial family needs b > 0, got " + format_real(b));
  return {b, 8.0 * b / ((1.0 + b) * (1.0 + b)), 2.0 * std::log1p(b)};
}

double radial_b_from_sup(double sup) {
  if (!(sup > 0.0)) throw DomainError("radial family needs a positive sup norm");
  return std::expm1(0.5 * sup);
}

double radial_residual(const DiscreteOperator& op, double b) {
  if (op.mesh->domain.kind != DomainKind::Disk) throw ConfigError("radial_residual: needs a disk operator");
  const RadialFamilyPoint rf = radial_family(b);
  const Mesh& mesh = *op.mesh;
  Vector v(op.size());
  for (int i = 0; i < op.size(); ++i) v[i] = rf.u(op.coeffs.mapped[mesh.interior[i]].norm());
  return residual(op, Nonlinearity::exponential(), {rf.mu, v}).lpNorm<Eigen::Infinity>();
}

namespace {

// Dormand-Prince 5(4) tableau.
constexpr double c2 = 1.0 / 5, c3 = 3.0 / 10, c4 = 4.0 / 5, c5 = 8.0 / 9;
constexpr double a21 = 1.0 / 5;
constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187, a53 = 64448.0 / 6561, a54 = -212.0 / 729;
constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247, a64 = 49.0 / 176,
                 a65 = -5103.0 / 18656;
constexpr double b1 = 35.0 / 384, b3 = 500.0 / 1113, b4 = 125.0 / 192, b5 = -2187.0 / 6784, b6 = 11.0 / 84;
constexpr double e1 = 71.0 / 57600, e3 = -71.0 / 16695, e4 = 71.0 / 1920, e5 = -17253.0 / 339200, e6 = 22.0 / 525,
                 e7 = -1.0 / 40;

using State = std::array<double, 2>;

State add(const State& y, double h, std::initializer_list<std::pair<double, const State*>> terms) {
  State out = y;
  for (const auto& [c, k] : terms) {
    out[0] += h * c * (*k)[0];
    out[1] += h * c * (*k)[1];
  }
  return out;
}

}  // namespace

ShootResult shoot_1d(const Nonlinearity& nl, double mu, double alpha, const ShootOptions& options) {
  auto rhs = [&](const State& y) -> State {
    if (!nl.in_domain(y[0])) throw BlowupError("shooting left the domain of f at v = " + format_real(y[0]));
    return {y[1], -mu * nl.f(y[0])};
  };
  ShootResult out;
  State y{0.0, alpha};
  double x = 0.0;
  double h = 1e-3;
  State k1 = rhs(y);
  if (options.keep_profile) {
    out.x.push_back(x);
    out.v.push_back(y[0]);
  }
  while (x < 1.0) {
    h = std::min(h, 1.0 - x);
    const State k2 = rhs(add(y, h, {{a21, &k1}}));
    const State k3 = rhs(add(y, h, {{a31, &k1}, {a32, &k2}}));
    const State k4 = rhs(add(y, h, {{a41, &k1}, {a42, &k2}, {a43, &k3}}));
    const State k5 = rhs(add(y, h, {{a51, &k1}, {a52, &k2}, {a53, &k3}, {a54, &k4}}));
    const State k6 = rhs(add(y, h, {{a61, &k1}, {a62, &k2}, {a63, &k3}, {a64, &k4}, {a65, &k5}}));
    const State y5 = add(y, h, {{b1, &k1}, {b3, &k3}, {b4, &k4}, {b5, &k5}, {b6, &k6}});
    const State k7 = rhs(y5);
    double err = 0.0;
    for (int i = 0; i < 2; ++i) {
      const double e = h * (e1 * k1[i] + e3 * k3[i] + e4 * k4[i] + e5 * k5[i] + e6 * k6[i] + e7 * k7[i]);
      const double sc = options.atol + options.rtol * std::max(std::abs(y[i]), std::abs(y5[i]));
      err = std::max(err, std::abs(e) / sc);
    }
    if (err <= 1.0) {
      x = (1.0 - x <= h) ? 1.0 : x + h;
      y = y5;
      k1 = k7;  // first-same-as-last
      ++out.steps;
      out.sup = std::max(out.sup, std::abs(y[0]));
      if (options.keep_profile) {
        out.x.push_back(x);
        out.v.push_back(y[0]);
      }
      if (std::abs(y[0]) > options.blowup_cap) throw BlowupError("shooting exceeded the blow-up cap");
    }
    const double factor = err == 0.0 ? 5.0 : std::clamp(0.9 * std::pow(err, -0.2), 0.2, 5.0);
    h *= factor;
    if (h < 1e-14) throw BlowupError("shooting step size underflow");
  }
  out.end_value = y[0];
  out.end_slope = y[1];
  return out;
}

std::vector<double> shooting_roots(const Nonlinearity& nl, double mu, double alpha_max, int n_scan,
                                   const ShootOptions& options) {
  if (!(alpha_max > 0.0) || n_scan < 2) throw ConfigError("shooting_roots: need alpha_max > 0 and n_scan >= 2");
  auto end = [&](double a) -> std::optional<double> {
    try {
      return shoot_1d(nl, mu, a, options).end_value;
    } catch (const BlowupError&) {
      return std::nullopt;
    }
  };
  std::vector<double> roots;
  double a_prev = 0.0;
  std::optional<double> g_prev = end(0.0);
  if (g_prev && *g_prev == 0.0) roots.push_back(0.0);
  for (int i = 1; i <= n_scan; ++i) {
    const double a = alpha_max * i / n_scan;
    const std::optional<double> g = end(a);
    if (g && *g == 0.0) {
      roots.push_back(a);
    } else if (g && g_prev && *g_prev != 0.0 && (*g > 0.0) != (*g_prev > 0.0)) {
      double lo = a_prev, hi = a, glo = *g_prev;
      for (int it = 0; it < 200 && hi - lo > 1e-14 * std::max(1.0, hi); ++it) {
        const double mid = 0.5 * (lo + hi);
        const std::optional<double> gm = end(mid);
        if (!gm) break;
        if ((*gm > 0.0) == (glo > 0.0)) {
          lo = mid;
          glo = *gm;
        } else {
          hi = mid;
        }
      }
      roots.push_back(0.5 * (lo + hi));
    }
    a_prev = a;
    g_prev = g;
  }
  return roots;
}

double shooting_fold(const Nonlinearity& nl, double mu_lo, double mu_hi, double tol, const ShootOptions& options) {
  // max over alpha of v(1; alpha) >= 0 iff a solution exists.
  auto best_end = [&](double mu) {
    const int n = 200;
    const double alpha_max = 40.0;
    double best = -std::numeric_limits<double>::infinity();
    int best_i = 0;
    for (int i = 0; i <= n; ++i) {
      try {
        const double g = shoot_1d(nl, mu, alpha_max * i / n, options).end_value;
        if (g > best) {
          best = g;
          best_i = i;
        }
      } catch (const BlowupError&) {
      }
    }
    // Golden-section refinement around the best grid point.
    const double phi = 0.5 * (std::sqrt(5.0) - 1.0);
    double a = alpha_max * std::max(0, best_i - 1) / n, b = alpha_max * std::min(n, best_i + 1) / n;
    auto g = [&](double al) { return shoot_1d(nl, mu, al, options).end_value; };
    double x1 = b - phi * (b - a), x2 = a + phi * (b - a);
    double g1 = g(x1), g2 = g(x2);
    for (int it = 0; it < 80 && b - a > 1e-12; ++it) {
      if (g1 < g2) {
        a = x1;
        x1 = x2;
        g1 = g2;
        x2 = a + phi * (b - a);
        g2 = g(x2);
      } else {
        b = x2;
        x2 = x1;
        g2 = g1;
        x1 = b - phi * (b - a);
        g1 = g(x1);
      }
    }
    return std::max({best, g1, g2});
  };
  if (best_end(mu_lo) < 0.0) throw BracketError("shooting_fold: no solution at the lower bound");
  if (best_end(mu_hi) >= 0.0) throw BracketError("shooting_fold: solutions exist at the upper bound");
  while (mu_hi - mu_lo > tol) {
    const double mid = 0.5 * (mu_lo + mu_hi);
    (best_end(mid) >= 0.0 ? mu_lo : mu_hi) = mid;
  }
  return 0.5 * (mu_lo + mu_hi);
}

std::vector<Vector> multistart_enumerate(const Problem& problem, double mu, const MultistartOptions& options) {
  if (options.n_starts < 1) throw ConfigError("multistart.n_starts: must be at least 1");
  const int n = problem.size();
  const DiscreteOperator& op = *problem.op;
  const Mesh& mesh = *op.mesh;
  const double floor = problem.nl.has_lower_limit() ? problem.nl.lower_limit() + 0.1 : -1.0;

  std::vector<std::optional<Vector>> found(static_cast<std::size_t>(options.n_starts));
  std::atomic<int> next{0};
  auto worker = [&] {
    for (int s = next++; s < options.n_starts; s = next++) {
      UniformStream rng(derive_seed(options.seed, static_cast<std::uint64_t>(s)));
      const double amp = rng.next(0.0, options.max_amplitude);
      Vector v0(n);
      if (s % 2 == 0) {
        // Smooth bump with mild noise.
        for (int i = 0; i < n; ++i) {
          const Point& x = mesh.nodes[mesh.interior[i]];
          double bump = std::sin(M_PI * x.x());
          if (mesh.domain.dimension() == 2) bump *= std::sin(M_PI * x.y() / mesh.domain.ly);
          v0[i] = amp * std::abs(bump) * (1.0 + 0.3 * rng.next(-1.0, 1.0));
        }
      } else {
        for (int i = 0; i < n; ++i) v0[i] = rng.next(floor, std::max(floor, amp));
      }
      try {
        NewtonOptions no;
        no.max_iter = 60;
        found[static_cast<std::size_t>(s)] = newton_correct(op, problem.nl, mu, v0, no).v;
      } catch (const Error&) {
      }
    }
  };
  const int jobs = std::clamp(options.jobs, 1, options.n_starts);
  std::vector<std::thread> pool;
  for (int j = 1; j < jobs; ++j) pool.emplace_back(worker);
  worker();
  for (std::thread& t : pool) t.join();

  std::vector<Vector> unique;
  for (const auto& f : found) {
    if (!f) continue;
    bool dup = false;
    for (const Vector& u : unique) dup = dup || (u - *f).lpNorm<Eigen::Infinity>() < options.dedup_tol;
    if (!dup) unique.push_back(*f);
  }
  std::sort(unique.begin(), unique.end(), [](const Vector& a, const Vector& b) {
    return a.lpNorm<Eigen::Infinity>() < b.lpNorm<Eigen::Infinity>();
  });
  return unique;
}

std::vector<Vector> branch_solutions_at(const Problem& problem, const std::vector<BranchPoint>& points, double mu,
                                        const NewtonOptions& newton) {
  std::vector<Vector> out;
  for (std::size_t i = 0; i + 1 < points.size(); ++i) {
    const BranchPoint& a = points[i];
    const BranchPoint& b = points[i + 1];
    const double lo = std::min(a.mu, b.mu), hi = std::max(a.mu, b.mu);
    if (mu < lo || mu > hi || hi == lo) continue;
    if (!a.has_snapshot() || !b.has_snapshot()) {
      throw InsufficientSamples("branch_solutions_at: segment without stored states");
    }
    const double t = (mu - a.mu) / (b.mu - a.mu);
    const Vector guess = (1.0 - t) * a.v + t * b.v;
    try {
      Vector v = newton_correct(*problem.op, problem.nl, mu, guess, newton).v;
      bool dup = false;
      for (const Vector& u : out) dup = dup || (u - v).lpNorm<Eigen::Infinity>() < 1e-8;
      if (!dup) out.push_back(std::move(v));
    } catch (const Error&) {
    }
  }
  std::sort(out.begin(), out.end(), [](const Vector& x, const Vector& y) {
    return x.lpNorm<Eigen::Infinity>() < y.lpNorm<Eigen::Infinity>();
  });
  return out;
}

}  // namespace foldcont
