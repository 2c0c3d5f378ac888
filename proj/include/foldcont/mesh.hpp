#pragma once

#include <Eigen/Core>
#include <string>
#include <string_view>
#include <vector>

namespace foldcont {

using Vector = Eigen::VectorXd;
using Point = Eigen::Vector2d;

enum class DomainKind { Interval, Rectangle, Disk };

/// Reference domain and grid resolution.
///
/// Interval: (0, 1) with `n1` interior nodes.
/// Rectangle: (0, lx) x (0, ly) with `n1` x `n2` interior nodes.
/// Disk: unit disk on a polar grid with `n1` radial intervals and `n2`
/// angular nodes; the pole is a single shared node.
struct ReferenceDomain {
  DomainKind kind = DomainKind::Interval;
  int n1 = 0;
  int n2 = 0;
  double lx = 1.0;
  double ly = 1.0;

  static ReferenceDomain interval(int n);
  static ReferenceDomain rectangle(int nx, int ny, double lx = 1.0, double ly = 1.0);
  static ReferenceDomain disk(int nr, int ntheta);

  int dimension() const { return kind == DomainKind::Interval ? 1 : 2; }
  double area() const;
  /// Throws ConfigError on resolutions the stencils cannot support.
  void validate() const;
  std::string key() const;
};

/// `interval:<n> | rect:<nx>x<ny>:<lx>x<ly> | disk:<nr>x<ntheta>`.
ReferenceDomain parse_domain(std::string_view key);

/// One entry of a linear stencil over node ids.
struct StencilEntry {
  int node = 0;
  double coeff = 0.0;
};

struct BoundaryNode {
  int node = 0;
  Point normal;                        // outward unit normal, reference frame
  double arc_weight = 0.0;             // reference boundary measure
  std::vector<StencilEntry> d_normal;  // reference normal derivative
};

/// Structured grid over a reference domain. Node ids cover interior and
/// boundary nodes; unknowns are the interior nodes in increasing id order.
struct Mesh {
  ReferenceDomain domain;
  double h1 = 0.0;  // x (or r) spacing
  double h2 = 0.0;  // y (or theta) spacing
  std::vector<Point> nodes;
  std::vector<int> interior;
  std::vector<int> boundary;
  std::vector<int> unknown_of_node;  // -1 on the boundary
  std::vector<double> ref_weights;   // per node; sums to |Omega|
  std::vector<BoundaryNode> boundary_table;

  int num_nodes() const { return static_cast<int>(nodes.size()); }
  int num_unknowns() const { return static_cast<int>(interior.size()); }

  // Structured indexing.
  int node_1d(int i) const { return i; }
  int node_rect(int i, int j) const { return j * (domain.n1 + 2) + i; }
  /// ring 0 is the pole (angle ignored); ring n1 is the boundary circle.
  int node_polar(int ring, int k) const;
  double radius(int ring) const { return ring * h1; }
  double angle(int k) const { return k * h2; }

  /// Interior values -> all nodes, boundary filled with `boundary_value`.
  Vector extend(const Vector& interior_values, double boundary_value = 0.0) const;
  Vector restrict_to_interior(const Vector& all_values) const;
};

/// Throws ConfigError when the resolution is too small.
Mesh build_mesh(const ReferenceDomain& domain);

/// Reference-frame gradient at every node. Interior nodes use centered
/// differences; boundary nodes use the five-point ghost-centered normal
/// stencil (second order, ghost value from quartic extrapolation) and
/// centered tangential differences.
std::vector<Point> reference_gradient(const Mesh& mesh, const Vector& field_all);

/// Normal derivative along the reference outward normal at each entry of
/// `mesh.boundary_table`.
Vector normal_derivative(const Mesh& mesh, const Vector& field_all);

}  // namespace foldcont
