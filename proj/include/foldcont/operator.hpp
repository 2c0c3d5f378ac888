#pragma once

#include <Eigen/Sparse>
#include <memory>
#include <vector>

#include "foldcont/diffeomorphism.hpp"
#include "foldcont/mesh.hpp"

namespace foldcont {

using SparseMatrix = Eigen::SparseMatrix<double>;
using SparseRowMatrix = Eigen::SparseMatrix<double, Eigen::RowMajor>;

/// Per-node data of the pulled-back Laplacian: A = |det J| J^-1 J^-T and
/// rho = |det J|, with J = Dh at the node.
struct PullbackCoefficients {
  std::vector<Mat2> a;
  std::vector<double> rho;
  std::vector<Mat2> jacobian;
  std::vector<Point> mapped;  // h(x)

  /// Smallest and largest eigenvalue of A over all nodes.
  std::pair<double, double> ellipticity_bounds() const;
};

/// Throws DegenerateMapError when det J <= 0 at some node.
PullbackCoefficients pullback_fields(const Diffeomorphism& h, const Mesh& mesh);

/// Boundary data in the mapped (physical) frame.
struct PhysicalBoundaryNode {
  int node = 0;
  Point normal;       // outward unit normal of h(Omega_0)
  double arc = 0.0;   // boundary measure of h(Omega_0) attached to the node
};

/// Divergence-form discretization of rho^-1 div(A grad .) with Dirichlet
/// elimination.
///
/// Assembled from the discrete energy E(u) = 1/2 u^T K u (edge differences
/// for the diagonal metric, cell-centred products for the off-diagonal
/// part), so K is symmetric and the discrete Laplacian
/// Delta_h = -W^-1 K is self-adjoint in the w-weighted inner product.
/// `stiffness_full` keeps the boundary columns for fields that do not
/// vanish on the boundary.
struct DiscreteOperator {
  std::shared_ptr<const Mesh> mesh;
  PullbackCoefficients coeffs;
  SparseMatrix stiffness;             // unknowns x unknowns, symmetric
  SparseRowMatrix stiffness_full;     // unknowns x all nodes
  Vector weights;                     // w on unknowns: rho * reference cell measure
  std::vector<PhysicalBoundaryNode> boundary;

  int size() const { return static_cast<int>(weights.size()); }
  /// Delta_h in compressed row form.
  SparseRowMatrix laplacian() const;
  Vector apply_laplacian(const Vector& u) const;
  /// Delta_h applied to a field given on all nodes (boundary values used).
  Vector apply_laplacian_full(const Vector& u_all) const;

  double dot(const Vector& a, const Vector& b) const { return (a.array() * b.array() * weights.array()).sum(); }
  double norm(const Vector& a) const;
  double integral(const Vector& a) const { return a.dot(weights); }
};

DiscreteOperator assemble_elliptic(std::shared_ptr<const Mesh> mesh, PullbackCoefficients coeffs);
inline DiscreteOperator assemble_elliptic(const Mesh& mesh, PullbackCoefficients coeffs) {
  return assemble_elliptic(std::make_shared<const Mesh>(mesh), std::move(coeffs));
}

/// Shorthand: build the pullback fields for `h` and assemble.
DiscreteOperator assemble_mapped(std::shared_ptr<const Mesh> mesh, const Diffeomorphism& h);

/// Physical gradient J^-T grad_ref at every node.
std::vector<Point> physical_gradient(const DiscreteOperator& op, const Vector& field_all);

/// Physical outward normal derivative at every boundary node.
Vector normal_derivative(const DiscreteOperator& op, const Vector& field_all);

}  // namespace foldcont
