#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <functional>
#include <memory>
#include <string>
#include <string_view>
#include <vector>

#include "foldcont/mesh.hpp"

namespace foldcont {

using Mat2 = Eigen::Matrix2d;

struct FieldValue {
  Point value = Point::Zero();
  Mat2 jacobian = Mat2::Zero();
};

/// Smooth vector field with an analytic Jacobian. In 1D only the first
/// component (and J(0,0)) is used.
struct VectorField {
  std::function<FieldValue(const Point&)> eval;
  std::string label;
};

/// Cutoff rising smoothly (C^4) from 0 at rho = 0.5 to 1 at rho = 1.
/// Returns (s, s').
std::pair<double, double> collar_cutoff(double rho);

/// Normal-type (e_rho) or tangential (e_theta) Fourier collar mode
/// cutoff(rho) * trig(m theta) around the domain centre. `sine` selects
/// sin(m theta). In 1D, `m` is the polynomial degree: cutoff(|xi|) xi^m.
VectorField collar_mode(const ReferenceDomain& domain, int m, bool sine, bool tangential = false);

/// Constant displacement on the whole domain (no collar).
VectorField constant_field(const Point& c);

/// x -> inner(x) + sum_i c_i psi_i(inner(x)); `inner` defaults to the
/// identity. Coefficients are fixed at construction.
class Diffeomorphism {
 public:
  Diffeomorphism() = default;
  explicit Diffeomorphism(int dimension) : dimension_(dimension) {}

  static Diffeomorphism identity(int dimension) { return Diffeomorphism(dimension); }

  /// Normal collar modes 0..n_modes-1 (cosine and sine where distinct) with
  /// the given coefficients, in that order. Fewer coefficients than modes
  /// leaves the rest at zero.
  static Diffeomorphism fourier(const ReferenceDomain& domain, int n_modes, std::vector<double> coeffs);
  /// Coefficients drawn uniformly in [-amplitude, amplitude] from `seed`.
  static Diffeomorphism random_fourier(const ReferenceDomain& domain, std::uint64_t seed,
                                       double amplitude, int n_modes);
  static int fourier_basis_size(const ReferenceDomain& domain, int n_modes);

  void add_term(double coeff, VectorField field);
  /// (id + eps * direction) o this.
  Diffeomorphism perturbed(const VectorField& direction, double eps) const;

  int dimension() const { return dimension_; }
  bool is_identity() const;
  double max_amplitude() const;
  const std::vector<double>& coefficients() const { return coeffs_; }

  FieldValue map(const Point& x) const;  // value = h(x), jacobian = Dh(x)

 private:
  int dimension_ = 2;
  std::vector<double> coeffs_;
  std::vector<VectorField> fields_;
  std::shared_ptr<const Diffeomorphism> inner_;
};

/// `none | fourier:<seed>:<amplitude>:<n_modes>`.
Diffeomorphism parse_diffeomorphism(std::string_view key, const ReferenceDomain& domain);

}  // namespace foldcont
