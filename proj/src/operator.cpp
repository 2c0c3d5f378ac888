#include "foldcont/operator.hpp"

#include <Eigen/Eigenvalues>
#include <cmath>
#include <limits>

#include "foldcont/errors.hpp"
#include "foldcont/format.hpp"

namespace foldcont {
namespace {

using Triplet = Eigen::Triplet<double>;

class StiffnessBuilder {
 public:
  explicit StiffnessBuilder(const Mesh& mesh) : mesh_(mesh) {}

  // 1/2 c (u_a - u_b)^2
  void edge(int a, int b, double c) {
    row(a, a, c);
    row(a, b, -c);
    row(b, b, c);
    row(b, a, -c);
  }

  // c * (g1 . u)(g2 . u) over four nodes
  void cross(const int (&nodes)[4], const double (&g1)[4], const double (&g2)[4], double c) {
    if (c == 0.0) return;
    for (int i = 0; i < 4; ++i) {
      for (int j = 0; j < 4; ++j) row(nodes[i], nodes[j], c * (g1[i] * g2[j] + g2[i] * g1[j]));
    }
  }

  std::vector<Triplet>& triplets() { return triplets_; }

 private:
  void row(int r, int col, double value) {
    const int u = mesh_.unknown_of_node[r];
    if (u >= 0) triplets_.emplace_back(u, col, value);
  }

  const Mesh& mesh_;
  std::vector<Triplet> triplets_;
};

Mat2 average(const std::vector<Mat2>& a, std::initializer_list<int> ids) {
  Mat2 s = Mat2::Zero();
  for (int i : ids) s += a[i];
  return s / static_cast<double>(ids.size());
}

}  // namespace

std::pair<double, double> PullbackCoefficients::ellipticity_bounds() const {
  double lo = std::numeric_limits<double>::infinity();
  double hi = 0.0;
  for (const Mat2& m : a) {
    Eigen::SelfAdjointEigenSolver<Mat2> es(m, Eigen::EigenvaluesOnly);
    lo = std::min(lo, es.eigenvalues()[0]);
    hi = std::max(hi, es.eigenvalues()[1]);
  }
  return {lo, hi};
}

PullbackCoefficients pullback_fields(const Diffeomorphism& h, const Mesh& mesh) {
  PullbackCoefficients pc;
  const std::size_t n = mesh.nodes.size();
  pc.a.resize(n);
  pc.rho.resize(n);
  pc.jacobian.resize(n);
  pc.mapped.resize(n);
  const bool one_d = mesh.domain.dimension() == 1;
  for (std::size_t i = 0; i < n; ++i) {
    const FieldValue m = h.map(mesh.nodes[i]);
    Mat2 j = m.jacobian;
    if (one_d) {
      j(0, 1) = j(1, 0) = 0.0;
      j(1, 1) = 1.0;
    }
    const double det = j.determinant();
    if (!(det > 0.0)) {
      throw DegenerateMapError("det J = " + format_real(det) + " at node " + std::to_string(i));
    }
    const Mat2 jinv = j.inverse();
    pc.jacobian[i] = j;
    pc.rho[i] = det;
    pc.a[i] = det * jinv * jinv.transpose();
    pc.mapped[i] = m.value;
  }
  return pc;
}

SparseRowMatrix DiscreteOperator::laplacian() const {
  SparseRowMatrix l = -(weights.cwiseInverse().asDiagonal() * stiffness);
  l.makeCompressed();
  return l;
}

Vector DiscreteOperator::apply_laplacian(const Vector& u) const {
  return -(stiffness * u).cwiseQuotient(weights);
}

Vector DiscreteOperator::apply_laplacian_full(const Vector& u_all) const {
  return -(stiffness_full * u_all).cwiseQuotient(weights);
}

double DiscreteOperator::norm(const Vector& a) const { return std::sqrt(dot(a, a)); }

DiscreteOperator assemble_elliptic(std::shared_ptr<const Mesh> mesh_ptr, PullbackCoefficients coeffs) {
  const Mesh& mesh = *mesh_ptr;
  if (coeffs.a.size() != mesh.nodes.size()) {
    throw DomainError("pullback coefficients do not match the mesh");
  }
  const auto& a = coeffs.a;
  StiffnessBuilder kb(mesh);
  const ReferenceDomain& dom = mesh.domain;
  const double h1 = mesh.h1;
  const double h2 = mesh.h2;

  switch (dom.kind) {
    case DomainKind::Interval: {
      for (int i = 0; i <= dom.n1; ++i) {
        const double g = 0.5 * (a[i](0, 0) + a[i + 1](0, 0));
        kb.edge(i, i + 1, g / h1);
      }
      break;
    }
    case DomainKind::Rectangle: {
      const int nx = dom.n1;
      const int ny = dom.n2;
      for (int j = 1; j <= ny; ++j) {
        for (int i = 0; i <= nx; ++i) {
          const int p = mesh.node_rect(i, j);
          const int q = mesh.node_rect(i + 1, j);
          kb.edge(p, q, average(a, {p, q})(0, 0) * h2 / h1);
        }
      }
      for (int j = 0; j <= ny; ++j) {
        for (int i = 1; i <= nx; ++i) {
          const int p = mesh.node_rect(i, j);
          const int q = mesh.node_rect(i, j + 1);
          kb.edge(p, q, average(a, {p, q})(1, 1) * h1 / h2);
        }
      }
      const double g1[4] = {-0.5 / h1, 0.5 / h1, -0.5 / h1, 0.5 / h1};
      const double g2[4] = {-0.5 / h2, -0.5 / h2, 0.5 / h2, 0.5 / h2};
      for (int j = 0; j <= ny; ++j) {
        for (int i = 0; i <= nx; ++i) {
          const int nodes[4] = {mesh.node_rect(i, j), mesh.node_rect(i + 1, j), mesh.node_rect(i, j + 1),
                                mesh.node_rect(i + 1, j + 1)};
          const double g12 = average(a, {nodes[0], nodes[1], nodes[2], nodes[3]})(0, 1);
          kb.cross(nodes, g1, g2, g12 * h1 * h2);
        }
      }
      break;
    }
    case DomainKind::Disk: {
      // Polar metric G = r DP^-1 A DP^-T:
      //   G_rr = r e_r.A e_r,  G_rt = e_r.A e_t,  G_tt = e_t.A e_t / r.
      const int nr = dom.n1;
      const int nt = dom.n2;
      for (int j = 0; j < nr; ++j) {
        const double re = (j + 0.5) * h1;
        for (int k = 0; k < nt; ++k) {
          const int p = mesh.node_polar(j, k);
          const int q = mesh.node_polar(j + 1, k);
          const Point er(std::cos(k * h2), std::sin(k * h2));
          const double grr = re * er.dot(average(a, {p, q}) * er);
          kb.edge(p, q, grr * h2 / h1);
        }
      }
      for (int j = 1; j < nr; ++j) {
        const double r = j * h1;
        for (int k = 0; k < nt; ++k) {
          const int p = mesh.node_polar(j, k);
          const int q = mesh.node_polar(j, k + 1);
          const double th = (k + 0.5) * h2;
          const Point et(-std::sin(th), std::cos(th));
          const double gtt = et.dot(average(a, {p, q}) * et) / r;
          kb.edge(p, q, gtt * h1 / h2);
        }
      }
      // Off-diagonal metric on the quadrilateral cells. The triangular cells
      // at the pole carry only the radial part; collar perturbations vanish
      // there.
      const double g1[4] = {-0.5 / h1, 0.5 / h1, -0.5 / h1, 0.5 / h1};
      const double g2[4] = {-0.5 / h2, -0.5 / h2, 0.5 / h2, 0.5 / h2};
      for (int j = 1; j < nr; ++j) {
        for (int k = 0; k < nt; ++k) {
          const int nodes[4] = {mesh.node_polar(j, k), mesh.node_polar(j + 1, k), mesh.node_polar(j, k + 1),
                                mesh.node_polar(j + 1, k + 1)};
          const double th = (k + 0.5) * h2;
          const Point er(std::cos(th), std::sin(th));
          const Point et(-std::sin(th), std::cos(th));
          const double grt = er.dot(average(a, {nodes[0], nodes[1], nodes[2], nodes[3]}) * et);
          kb.cross(nodes, g1, g2, grt * h1 * h2);
        }
      }
      break;
    }
  }

  DiscreteOperator op;
  op.mesh = mesh_ptr;
  const int n_unk = mesh.num_unknowns();
  op.stiffness_full.resize(n_unk, mesh.num_nodes());
  op.stiffness_full.setFromTriplets(kb.triplets().begin(), kb.triplets().end());
  op.stiffness_full.makeCompressed();

  std::vector<Triplet> inner;
  inner.reserve(op.stiffness_full.nonZeros());
  for (int r = 0; r < n_unk; ++r) {
    for (SparseRowMatrix::InnerIterator it(op.stiffness_full, r); it; ++it) {
      const int c = mesh.unknown_of_node[it.col()];
      if (c >= 0) inner.emplace_back(r, c, it.value());
    }
  }
  op.stiffness.resize(n_unk, n_unk);
  op.stiffness.setFromTriplets(inner.begin(), inner.end());
  op.stiffness.makeCompressed();

  op.weights.resize(n_unk);
  for (int u = 0; u < n_unk; ++u) {
    const int node = mesh.interior[u];
    op.weights[u] = coeffs.rho[node] * mesh.ref_weights[node];
  }

  op.boundary.reserve(mesh.boundary_table.size());
  for (const BoundaryNode& bn : mesh.boundary_table) {
    const Mat2& j = coeffs.jacobian[bn.node];
    Point n = j.inverse().transpose() * bn.normal;
    n /= n.norm();
    double arc = bn.arc_weight;
    if (dom.dimension() == 2) {
      const Point tangent(-bn.normal.y(), bn.normal.x());
      arc *= (j * tangent).norm();
    }
    op.boundary.push_back({bn.node, n, arc});
  }
  op.coeffs = std::move(coeffs);
  return op;
}

DiscreteOperator assemble_mapped(std::shared_ptr<const Mesh> mesh, const Diffeomorphism& h) {
  PullbackCoefficients pc = pullback_fields(h, *mesh);
  return assemble_elliptic(std::move(mesh), std::move(pc));
}

std::vector<Point> physical_gradient(const DiscreteOperator& op, const Vector& field_all) {
  std::vector<Point> g = reference_gradient(*op.mesh, field_all);
  for (std::size_t i = 0; i < g.size(); ++i) {
    g[i] = op.coeffs.jacobian[i].inverse().transpose() * g[i];
  }
  if (op.mesh->domain.dimension() == 1) {
    for (Point& p : g) p.y() = 0.0;
  }
  return g;
}

Vector normal_derivative(const DiscreteOperator& op, const Vector& field_all) {
  const std::vector<Point> g = physical_gradient(op, field_all);
  Vector out(op.boundary.size());
  for (std::size_t b = 0; b < op.boundary.size(); ++b) {
    out[static_cast<Eigen::Index>(b)] = op.boundary[b].normal.dot(g[op.boundary[b].node]);
  }
  return out;
}

}  // namespace foldcont
