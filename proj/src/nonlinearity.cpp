#include "foldcont/nonlinearity.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "foldcont/errors.hpp"
#include "foldcont/format.hpp"

namespace foldcont {
namespace {

// Coefficients of d/dx of sum_k c_k T_k(x) (c_0 carries full weight).
std::vector<double> chebyshev_derivative(const std::vector<double>& c) {
  const std::size_t n = c.size();
  if (n <= 1) return {0.0};
  std::vector<double> d(n, 0.0);
  for (std::size_t j = n - 1; j >= 1; --j) {
    d[j - 1] = (j + 1 < n ? d[j + 1] : 0.0) + 2.0 * static_cast<double>(j) * c[j];
  }
  d[0] *= 0.5;
  d.resize(n - 1);
  return d;
}

double clenshaw(const std::vector<double>& c, double x) {
  double b1 = 0.0;
  double b2 = 0.0;
  for (std::size_t k = c.size(); k-- > 1;) {
    const double b0 = 2.0 * x * b1 - b2 + c[k];
    b2 = b1;
    b1 = b0;
  }
  return x * b1 - b2 + (c.empty() ? 0.0 : c[0]);
}

}  // namespace

Nonlinearity Nonlinearity::exponential() {
  Nonlinearity nl;
  nl.kind_ = NonlinearityKind::Exponential;
  nl.description_ = "exp";
  return nl;
}

Nonlinearity Nonlinearity::power(double p) {
  if (!(p > 1.0) || !std::isfinite(p)) {
    throw DomainError("power nonlinearity needs a finite exponent p > 1, got " + format_real(p));
  }
  Nonlinearity nl;
  nl.kind_ = NonlinearityKind::Power;
  nl.exponent_ = p;
  nl.lower_limit_ = -1.0;
  nl.description_ = "power:" + format_real(p);
  return nl;
}

Nonlinearity Nonlinearity::custom(ChebyshevTable table, std::string description) {
  if (!(table.hi > table.lo) || table.coeffs.empty()) {
    throw DomainError("custom nonlinearity needs hi > lo and at least one coefficient");
  }
  Nonlinearity nl;
  nl.kind_ = NonlinearityKind::Custom;
  nl.lower_limit_ = table.lo;
  nl.d1_coeffs_ = chebyshev_derivative(table.coeffs);
  nl.d2_coeffs_ = chebyshev_derivative(nl.d1_coeffs_);
  nl.table_ = std::move(table);
  nl.description_ = std::move(description);
  return nl;
}

std::optional<double> Nonlinearity::upper_limit() const {
  if (kind_ == NonlinearityKind::Custom) return table_.hi;
  return std::nullopt;
}

bool Nonlinearity::in_domain(double t) const {
  if (!std::isfinite(t)) return false;
  if (lower_limit_ && !(t > *lower_limit_)) return false;
  if (kind_ == NonlinearityKind::Custom && t > table_.hi) return false;
  return true;
}

FDerivs Nonlinearity::eval(double t, int max_order) const {
  if (max_order < 0 || max_order > 2) throw DomainError("max_order must be 0, 1 or 2");
  if (!in_domain(t)) {
    throw DomainError("t = " + format_real(t) + " outside the domain of f (" + description_ + ")");
  }
  FDerivs out;
  switch (kind_) {
    case NonlinearityKind::Exponential: {
      const double e = std::exp(t);
      out.f = e;
      if (max_order >= 1) out.df = e;
      if (max_order >= 2) out.d2f = e;
      break;
    }
    case NonlinearityKind::Power: {
      const double p = exponent_;
      const double base = 1.0 + t;
      out.f = std::pow(base, p);
      if (max_order >= 1) out.df = p * std::pow(base, p - 1.0);
      if (max_order >= 2) out.d2f = p * (p - 1.0) * std::pow(base, p - 2.0);
      break;
    }
    case NonlinearityKind::Custom: {
      const double scale = 2.0 / (table_.hi - table_.lo);
      const double x = std::clamp((2.0 * t - table_.lo - table_.hi) / (table_.hi - table_.lo), -1.0, 1.0);
      out.f = clenshaw(table_.coeffs, x);
      if (max_order >= 1) out.df = scale * clenshaw(d1_coeffs_, x);
      if (max_order >= 2) out.d2f = scale * scale * clenshaw(d2_coeffs_, x);
      break;
    }
  }
  return out;
}

double Nonlinearity::primitive(double t) const {
  switch (kind_) {
    case NonlinearityKind::Exponential:
      return std::expm1(t);
    case NonlinearityKind::Power: {
      const double p = exponent_;
      return (std::pow(1.0 + t, p + 1.0) - 1.0) / (p + 1.0);
    }
    case NonlinearityKind::Custom: {
      if (!in_domain(0.0) || !in_domain(t)) {
        throw DomainError("primitive of custom f needs 0 and t inside the table");
      }
      // Composite Simpson; tables are smooth.
      const int n = 2000;
      const double h = t / n;
      double sum = f(0.0) + f(t);
      for (int i = 1; i < n; ++i) sum += (i % 2 ? 4.0 : 2.0) * f(i * h);
      return sum * h / 3.0;
    }
  }
  return 0.0;
}

std::string Nonlinearity::key() const {
  switch (kind_) {
    case NonlinearityKind::Exponential:
      return "exp";
    case NonlinearityKind::Power:
      return "power:" + format_real(exponent_);
    case NonlinearityKind::Custom:
      return "custom";
  }
  return {};
}

Nonlinearity parse_nonlinearity(std::string_view key) {
  if (key == "exp") return Nonlinearity::exponential();
  constexpr std::string_view prefix = "power:";
  if (key.substr(0, prefix.size()) == prefix) {
    const std::string rest(key.substr(prefix.size()));
    std::size_t used = 0;
    double p = 0.0;
    try {
      p = std::stod(rest, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used == 0 || used != rest.size()) {
      throw ConfigError("nonlinearity: cannot parse exponent in '" + std::string(key) + "'");
    }
    try {
      return Nonlinearity::power(p);
    } catch (const DomainError& e) {
      throw ConfigError(std::string("nonlinearity: ") + e.what());
    }
  }
  throw ConfigError("nonlinearity: expected 'exp' or 'power:<p>', got '" + std::string(key) + "'");
}

H1Result check_h1(const Nonlinearity& nl, std::span<const double> t_grid) {
  H1Result result;
  for (double t : t_grid) {
    if (!nl.in_domain(t)) {
      return {false, t, "outside the domain of f"};
    }
    const FDerivs d = nl.eval(t, 2);
    if (!(d.f > 0.0)) return {false, t, "f(t) <= 0"};
    if (!(d.df > 0.0)) return {false, t, "f'(t) <= 0"};
    if (!(d.d2f > 0.0)) return {false, t, "f''(t) <= 0"};
  }
  return result;
}

GrowthReport check_growth(const Nonlinearity& nl, int dimension, double theta,
                          double t_max, int n_samples, double beta) {
  if (dimension < 1) throw DomainError("dimension must be >= 1");
  if (!(theta >= 0.0)) throw DomainError("theta must be >= 0");
  if (dimension >= 3) {
    const double theta_max = 2.0 * dimension / (dimension - 2.0);
    if (!(theta < theta_max)) {
      throw DomainError("theta must lie in [0, " + format_real(theta_max) + ") for N = " +
                        std::to_string(dimension));
    }
    beta = (dimension + 2.0) / (dimension - 2.0);
  }
  if (!(t_max > 1.0)) throw DomainError("t_max must exceed 1");
  if (n_samples < 10) throw DomainError("n_samples must be >= 10");

  GrowthReport report;
  report.dimension = dimension;
  report.theta_used = theta;
  report.beta_used = beta;

  // Geometric grid on [1, t_max]; everything is evaluated in log space so
  // e^t at large t does not overflow the quotients.
  const double log_ratio = std::log(t_max);
  report.details.reserve(static_cast<std::size_t>(n_samples));
  for (int i = 0; i < n_samples; ++i) {
    const double t = std::exp(log_ratio * i / (n_samples - 1));
    if (!nl.in_domain(t)) throw DomainError("growth sample t = " + format_real(t) + " outside domain");
    const double f = nl.f(t);
    const double log_f = nl.kind() == NonlinearityKind::Exponential ? t : std::log(f);
    GrowthSample s;
    s.t = t;
    s.f_over_t = std::exp(log_f - std::log(t));
    s.f_over_t_beta = std::exp(log_f - beta * std::log(t));
    // (t f - theta F) / (t^2 f^{2/N}) = (t - theta F/f) * f^{1 - 2/N} / t^2
    const double big_f_over_f = nl.kind() == NonlinearityKind::Exponential
                                    ? -std::expm1(-t)
                                    : nl.primitive(t) / f;
    const double power = 1.0 - 2.0 / dimension;
    s.dln_quotient = (t - theta * big_f_over_f) * std::exp(power * log_f - 2.0 * std::log(t));
    report.details.push_back(s);
  }

  // Trends are judged on the upper half of the grid.
  const std::size_t half = report.details.size() / 2;
  auto upper = std::span<const GrowthSample>(report.details).subspan(half);
  bool increasing = true;
  bool decreasing_beta = true;
  for (std::size_t i = 1; i < upper.size(); ++i) {
    increasing = increasing && upper[i].f_over_t > upper[i - 1].f_over_t;
    decreasing_beta = decreasing_beta && upper[i].f_over_t_beta < upper[i - 1].f_over_t_beta;
  }
  const double growth = upper.back().f_over_t / upper.front().f_over_t;
  // A ratio that barely moves over the sampled range cannot be called, and
  // a falling ratio on a finite range does not disprove the limit either.
  report.superlinear_ok = increasing && growth > 1.1;
  report.subcritical_ok = decreasing_beta;
  report.inconclusive = !report.superlinear_ok;

  // Either the quotient is already non-positive, or it is positive and
  // decays like a power of t.
  const double last = upper.back().dln_quotient;
  bool dln_decreasing = true;
  bool positive = true;
  for (std::size_t i = 0; i < upper.size(); ++i) {
    positive = positive && upper[i].dln_quotient > 0.0;
    if (i > 0) dln_decreasing = dln_decreasing && upper[i].dln_quotient <= upper[i - 1].dln_quotient;
  }
  double decay = 0.0;
  if (positive) {
    decay = std::log(upper.back().dln_quotient / upper.front().dln_quotient) /
            std::log(upper.back().t / upper.front().t);
  }
  report.dln_ok = last <= 0.0 || (positive && dln_decreasing && decay < -0.05);
  return report;
}

}  // namespace foldcont
