#pragma once

#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace foldcont {

enum class NonlinearityKind { Exponential, Power, Custom };

/// f and its first two derivatives at one point. Orders above the
/// requested maximum are left at zero.
struct FDerivs {
  double f = 0.0;
  double df = 0.0;
  double d2f = 0.0;
};

/// Chebyshev expansion of f on [lo, hi]: f(t) = sum_k c_k T_k(x),
/// x = (2t - lo - hi) / (hi - lo).
struct ChebyshevTable {
  double lo = 0.0;
  double hi = 1.0;
  std::vector<double> coeffs;
};

/// A positive, increasing, convex nonlinearity f : (a, +inf) -> (0, +inf).
///
/// The lower limit a is either finite (power law, tabulated data) or
/// absent (exponential); absence is an explicit flag, not a large negative
/// number. Tabulated nonlinearities are additionally bounded above by the
/// end of their table.
class Nonlinearity {
 public:
  static Nonlinearity exponential();
  /// f(t) = (1 + t)^p on (-1, +inf), p > 1.
  static Nonlinearity power(double p);
  static Nonlinearity custom(ChebyshevTable table, std::string description);

  NonlinearityKind kind() const { return kind_; }
  double exponent() const { return exponent_; }
  bool has_lower_limit() const { return lower_limit_.has_value(); }
  /// Only meaningful when has_lower_limit().
  double lower_limit() const { return lower_limit_.value_or(0.0); }
  std::optional<double> upper_limit() const;
  const std::string& description() const { return description_; }

  bool in_domain(double t) const;

  /// Throws DomainError outside (a, +inf) (or outside the table).
  FDerivs eval(double t, int max_order = 2) const;
  double f(double t) const { return eval(t, 0).f; }

  /// F(t) = int_0^t f.
  double primitive(double t) const;

  /// Config key: "exp" or "power:<p>". Custom tables have no key.
  std::string key() const;

 private:
  NonlinearityKind kind_ = NonlinearityKind::Exponential;
  double exponent_ = 0.0;
  std::optional<double> lower_limit_;
  ChebyshevTable table_;
  std::vector<double> d1_coeffs_;
  std::vector<double> d2_coeffs_;
  std::string description_;
};

/// Parses "exp" | "power:<p>". Throws ConfigError.
Nonlinearity parse_nonlinearity(std::string_view key);

struct H1Result {
  bool ok = true;
  std::optional<double> first_violation;
  std::string reason;
};

/// Positivity, monotonicity and convexity of f at every grid sample.
/// Grid points outside the domain count as violations.
H1Result check_h1(const Nonlinearity& nl, std::span<const double> t_grid);

struct GrowthSample {
  double t = 0.0;
  double f_over_t = 0.0;
  double f_over_t_beta = 0.0;
  double dln_quotient = 0.0;  // (t f - theta F) / (t^2 f^{2/N})
};

struct GrowthReport {
  bool superlinear_ok = false;
  bool subcritical_ok = false;
  bool dln_ok = false;
  /// Set when a trend is too weak over the sampled range to call.
  bool inconclusive = false;
  int dimension = 2;
  double theta_used = 0.0;
  double beta_used = 0.0;
  std::vector<GrowthSample> details;
};

/// Samples the superlinearity, subcriticality and theta-quotient
/// conditions on a geometric grid in [1, t_max]. Trends only; limits are
/// never certified. `beta` is used for dimension <= 2 (any finite exponent
/// is admissible there); for dimension >= 3 it is (N+2)/(N-2).
/// Throws DomainError for an inadmissible theta.
GrowthReport check_growth(const Nonlinearity& nl, int dimension, double theta,
                          double t_max, int n_samples, double beta = 8.0);

}  // namespace foldcont
