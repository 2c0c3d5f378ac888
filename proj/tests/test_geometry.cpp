#include <gtest/gtest.h>

#include <Eigen/Dense>
#include <Eigen/SparseCholesky>
#include <cmath>
#include <functional>

#include "foldcont/diffeomorphism.hpp"
#include "foldcont/errors.hpp"
#include "foldcont/mesh.hpp"
#include "foldcont/operator.hpp"

using namespace foldcont;

namespace {

const double kPi = std::acos(-1.0);

// Inverse iteration for the smallest generalized eigenvalue of K u = lambda W u.
double smallest_eigenvalue(const DiscreteOperator& op) {
  Eigen::SimplicialLDLT<SparseMatrix> ldlt(op.stiffness);
  Vector u = Vector::Ones(op.size());
  double lambda = 0.0;
  for (int it = 0; it < 200; ++it) {
    Vector next = ldlt.solve(op.weights.cwiseProduct(u));
    next /= op.norm(next);
    const double est = next.dot(op.stiffness * next);
    const bool done = std::abs(est - lambda) < 1e-13 * est;
    lambda = est;
    u = next;
    if (done) break;
  }
  return lambda;
}

// First zero of J0 by bisection on its power series.
double bessel_j0_zero() {
  auto j0 = [](double x) {
    double term = 1.0, sum = 1.0;
    for (int k = 1; k < 60; ++k) {
      term *= -(x * x / 4.0) / (k * k);
      sum += term;
    }
    return sum;
  };
  double lo = 2.0, hi = 3.0;
  for (int i = 0; i < 80; ++i) {
    const double mid = 0.5 * (lo + hi);
    (j0(lo) * j0(mid) <= 0.0 ? hi : lo) = mid;
  }
  return 0.5 * (lo + hi);
}

Vector sample(const Mesh& mesh, const std::function<double(const Point&)>& fn) {
  Vector out(mesh.num_nodes());
  for (int i = 0; i < mesh.num_nodes(); ++i) out[i] = fn(mesh.nodes[i]);
  return out;
}

DiscreteOperator identity_operator(const ReferenceDomain& d) {
  return assemble_mapped(std::make_shared<const Mesh>(build_mesh(d)), Diffeomorphism::identity(d.dimension()));
}

}  // namespace

TEST(Mesh, WeightsSumToMeasure) {
  const Mesh iv = build_mesh(ReferenceDomain::interval(50));
  EXPECT_NEAR(Vector::Map(iv.ref_weights.data(), iv.num_nodes()).sum(), 1.0, 1e-14);
  const Mesh rc = build_mesh(ReferenceDomain::rectangle(20, 30, 1.0, 2.0));
  EXPECT_NEAR(Vector::Map(rc.ref_weights.data(), rc.num_nodes()).sum(), 2.0, 1e-13);
  const Mesh dk = build_mesh(ReferenceDomain::disk(32, 64));
  EXPECT_NEAR(Vector::Map(dk.ref_weights.data(), dk.num_nodes()).sum(), kPi, 1e-3);
}

TEST(Mesh, Counts) {
  const Mesh rc = build_mesh(ReferenceDomain::rectangle(4, 5));
  EXPECT_EQ(rc.num_unknowns(), 20);
  EXPECT_EQ(rc.num_nodes(), 6 * 7);
  const Mesh dk = build_mesh(ReferenceDomain::disk(8, 16));
  EXPECT_EQ(dk.num_unknowns(), 1 + 7 * 16);
  EXPECT_EQ(dk.boundary_table.size(), 16u);
  for (int u = 0; u < rc.num_unknowns(); ++u) EXPECT_EQ(rc.unknown_of_node[rc.interior[u]], u);
}

TEST(Mesh, RejectsTinyResolutions) {
  EXPECT_THROW(build_mesh(ReferenceDomain::interval(2)), ConfigError);
  EXPECT_THROW(build_mesh(ReferenceDomain::rectangle(2, 5)), ConfigError);
  EXPECT_THROW(build_mesh(ReferenceDomain::disk(3, 16)), ConfigError);
  EXPECT_THROW(parse_domain("disk:8"), ConfigError);
  EXPECT_THROW(parse_domain("square:8"), ConfigError);
}

TEST(Mesh, DomainKeysRoundTrip) {
  for (const char* key : {"interval:64", "rect:12x20:1x2", "disk:16x32"}) {
    EXPECT_EQ(parse_domain(key).key(), key);
  }
}

TEST(Mesh, ExtendRestrict) {
  const Mesh m = build_mesh(ReferenceDomain::disk(6, 12));
  const Vector u = Vector::LinSpaced(m.num_unknowns(), 1.0, 2.0);
  const Vector all = m.extend(u, 3.0);
  for (int b : m.boundary) EXPECT_EQ(all[b], 3.0);
  EXPECT_EQ((m.restrict_to_interior(all) - u).norm(), 0.0);
}

TEST(NormalDerivative, Polynomials) {
  const Mesh iv = build_mesh(ReferenceDomain::interval(20));
  Vector d = normal_derivative(iv, sample(iv, [](const Point& p) { return p.x() * (1 - p.x()); }));
  ASSERT_EQ(d.size(), 2);
  EXPECT_NEAR(d[0], -1.0, 1e-12);
  EXPECT_NEAR(d[1], -1.0, 1e-12);

  const Mesh dk = build_mesh(ReferenceDomain::disk(16, 32));
  d = normal_derivative(dk, sample(dk, [](const Point& p) { return 1.0 - p.squaredNorm(); }));
  for (int i = 0; i < d.size(); ++i) EXPECT_NEAR(d[i], -2.0, 1e-10);
  d = normal_derivative(dk, sample(dk, [](const Point&) { return 4.0; }));
  EXPECT_LT(d.lpNorm<Eigen::Infinity>(), 1e-10);

  const Mesh rc = build_mesh(ReferenceDomain::rectangle(10, 12, 1.0, 2.0));
  d = normal_derivative(rc, sample(rc, [](const Point& p) { return p.x() * p.x() + 3 * p.y() * p.y() - p.y(); }));
  for (std::size_t b = 0; b < rc.boundary_table.size(); ++b) {
    const BoundaryNode& bn = rc.boundary_table[b];
    const Point& x = rc.nodes[bn.node];
    EXPECT_NEAR(d[b], Point(2 * x.x(), 6 * x.y() - 1).dot(bn.normal), 1e-10);
  }
}

TEST(NormalDerivative, SecondOrderOnQuartics) {
  std::vector<double> errs;
  for (int n : {15, 31, 63}) {
    const Mesh m = build_mesh(ReferenceDomain::interval(n));
    const Vector d = normal_derivative(m, sample(m, [](const Point& p) { return std::pow(p.x(), 4) - p.x(); }));
    errs.push_back(std::abs(d[1] - 3.0) + std::abs(d[0] - 1.0));
  }
  EXPECT_GT(std::log2(errs[0] / errs[1]), 1.8);
  EXPECT_GT(std::log2(errs[1] / errs[2]), 1.8);
}

TEST(Diffeomorphism, CutoffIsSmooth) {
  EXPECT_EQ(collar_cutoff(0.3).first, 0.0);
  EXPECT_EQ(collar_cutoff(1.2).first, 1.0);
  EXPECT_NEAR(collar_cutoff(0.75).first, 0.5, 1e-14);
  for (double r = 0.51; r < 1.0; r += 0.05) {
    const double fd = (collar_cutoff(r + 1e-6).first - collar_cutoff(r - 1e-6).first) / 2e-6;
    EXPECT_NEAR(collar_cutoff(r).second, fd, 1e-7);
  }
}

TEST(Diffeomorphism, JacobianMatchesDifferences) {
  for (const ReferenceDomain& d : {ReferenceDomain::disk(8, 16), ReferenceDomain::rectangle(8, 8, 1.0, 2.0)}) {
    const Diffeomorphism base = Diffeomorphism::random_fourier(d, 7, 0.05, 4);
    const Diffeomorphism h = base.perturbed(collar_mode(d, 2, true, true), 0.03);
    const double e = 1e-6;
    for (const Point& x : {Point(0.3, 0.6), Point(0.65, 0.1), Point(-0.4, 0.5), Point(0.9, 1.7)}) {
      const FieldValue v = h.map(x);
      for (int c = 0; c < 2; ++c) {
        const Point dx = Point::Unit(c) * e;
        const Point col = (h.map(x + dx).value - h.map(x - dx).value) / (2 * e);
        EXPECT_NEAR((col - v.jacobian.col(c)).norm(), 0.0, 1e-7);
      }
    }
  }
  const ReferenceDomain iv = ReferenceDomain::interval(16);
  const Diffeomorphism h1 = Diffeomorphism::random_fourier(iv, 3, 0.05, 4);
  for (double x : {0.05, 0.2, 0.8, 0.97}) {
    const double fd = (h1.map(Point(x + 1e-6, 0)).value.x() - h1.map(Point(x - 1e-6, 0)).value.x()) / 2e-6;
    EXPECT_NEAR(h1.map(Point(x, 0)).jacobian(0, 0), fd, 1e-7);
  }
}

TEST(Diffeomorphism, SeedsAreReproducible) {
  const ReferenceDomain d = ReferenceDomain::disk(8, 16);
  const auto a = Diffeomorphism::random_fourier(d, 11, 0.1, 3).coefficients();
  const auto b = parse_diffeomorphism("fourier:11:0.1:3", d).coefficients();
  EXPECT_EQ(a, b);
  EXPECT_EQ(a.size(), 5u);
  EXPECT_NE(a, Diffeomorphism::random_fourier(d, 12, 0.1, 3).coefficients());
  EXPECT_TRUE(parse_diffeomorphism("none", d).is_identity());
  EXPECT_THROW(parse_diffeomorphism("fourier:1:0.1", d), ConfigError);
  EXPECT_THROW(parse_diffeomorphism("fourier:1:-0.1:2", d), ConfigError);
}

TEST(Pullback, IdentityAndDilation) {
  const Mesh m = build_mesh(ReferenceDomain::disk(8, 16));
  const PullbackCoefficients id = pullback_fields(Diffeomorphism::identity(2), m);
  for (std::size_t i = 0; i < m.nodes.size(); ++i) {
    EXPECT_NEAR((id.a[i] - Mat2::Identity()).norm(), 0.0, 1e-15);
    EXPECT_EQ(id.rho[i], 1.0);
  }
  // h(x) = 2x: A = det J J^-1 J^-T = I in 2D, rho = 4.
  Diffeomorphism dil(2);
  dil.add_term(1.0, {[](const Point& x) { return FieldValue{x, Mat2::Identity()}; }, "dilation"});
  const PullbackCoefficients pc = pullback_fields(dil, m);
  for (std::size_t i = 0; i < m.nodes.size(); ++i) {
    EXPECT_NEAR((pc.a[i] - Mat2::Identity()).norm(), 0.0, 1e-14);
    EXPECT_NEAR(pc.rho[i], 4.0, 1e-14);
  }
  const auto [lo, hi] = pc.ellipticity_bounds();
  EXPECT_NEAR(lo, 1.0, 1e-14);
  EXPECT_NEAR(hi, 1.0, 1e-14);
  // The dilated disk has eigenvalues scaled by 1/4.
  const auto mesh = std::make_shared<const Mesh>(m);
  EXPECT_NEAR(smallest_eigenvalue(assemble_mapped(mesh, dil)),
              smallest_eigenvalue(assemble_mapped(mesh, Diffeomorphism::identity(2))) / 4.0, 1e-10);
}

TEST(Pullback, DegenerateMapThrows) {
  const Mesh m = build_mesh(ReferenceDomain::disk(8, 16));
  Diffeomorphism fold(2);
  fold.add_term(-2.0, {[](const Point& x) { return FieldValue{Point(x.x(), 0.0), Mat2(Eigen::Vector2d(1.0, 0.0).asDiagonal())}; }, "flip"});
  EXPECT_THROW(pullback_fields(fold, m), DegenerateMapError);
}

TEST(Pullback, EllipticityBounds) {
  const ReferenceDomain d = ReferenceDomain::disk(16, 32);
  const Mesh m = build_mesh(d);
  const auto [lo, hi] = pullback_fields(Diffeomorphism::random_fourier(d, 5, 0.05, 4), m).ellipticity_bounds();
  EXPECT_GT(lo, 0.5);
  EXPECT_LT(hi, 2.0);
  EXPECT_LT(lo, 1.0);
  EXPECT_GT(hi, 1.0);
}

TEST(Operator, IntervalSpectrumClosedForm) {
  const int n = 50;
  const DiscreteOperator op = identity_operator(ReferenceDomain::interval(n));
  const double dx = 1.0 / (n + 1);
  const Eigen::MatrixXd k(op.stiffness);
  const Eigen::MatrixXd w = op.weights.asDiagonal();
  Eigen::GeneralizedSelfAdjointEigenSolver<Eigen::MatrixXd> es(k, w);
  for (int j = 1; j <= 5; ++j) {
    const double exact = 2.0 / (dx * dx) * (1.0 - std::cos(j * kPi * dx));
    EXPECT_NEAR(es.eigenvalues()[j - 1], exact, 1e-9 * exact);
  }
}

TEST(Operator, WeightedSymmetry) {
  const ReferenceDomain d = ReferenceDomain::rectangle(12, 9, 1.0, 1.5);
  const DiscreteOperator op =
      assemble_mapped(std::make_shared<const Mesh>(build_mesh(d)), Diffeomorphism::random_fourier(d, 2, 0.06, 3));
  const SparseMatrix kt = op.stiffness.transpose();
  EXPECT_LT((op.stiffness - kt).norm(), 1e-12 * op.stiffness.norm());
  const Vector u = Vector::LinSpaced(op.size(), -1.0, 2.0).array().sin();
  const Vector v = Vector::LinSpaced(op.size(), 0.0, 5.0).array().cos();
  EXPECT_NEAR(op.dot(op.apply_laplacian(u), v), op.dot(u, op.apply_laplacian(v)), 1e-10);
  EXPECT_GT(u.dot(op.stiffness * u), 0.0);
}

TEST(Operator, RectangleFundamentalMode) {
  const double lambda = smallest_eigenvalue(identity_operator(ReferenceDomain::rectangle(31, 31)));
  EXPECT_NEAR(lambda, 2 * kPi * kPi, 0.01 * 2 * kPi * kPi);
}

TEST(Operator, DiskFundamentalMode) {
  const double j = bessel_j0_zero();
  EXPECT_NEAR(j, 2.404825557695773, 1e-12);
  const double lambda = smallest_eigenvalue(identity_operator(ReferenceDomain::disk(64, 128)));
  EXPECT_NEAR(lambda, j * j, 0.01 * j * j);
}

// Delta_h (u o h) approximates (Delta u) o h on the mapped domain.
TEST(Operator, PullbackConsistency) {
  auto u = [](const Point& y) { return std::sin(1.3 * y.x()) * std::exp(0.7 * y.y()); };
  auto lap = [&](const Point& y) { return (0.49 - 1.69) * u(y); };
  for (const char* key : {"rect:15x15:1x1", "disk:8x16"}) {
    std::vector<double> errs;
    ReferenceDomain d = parse_domain(key);
    for (int level = 0; level < 4; ++level) {
      const Diffeomorphism h = Diffeomorphism::random_fourier(d, 9, 0.03, 3);
      const auto mesh = std::make_shared<const Mesh>(build_mesh(d));
      const DiscreteOperator op = assemble_mapped(mesh, h);
      Vector all(mesh->num_nodes()), exact(op.size());
      for (int i = 0; i < mesh->num_nodes(); ++i) all[i] = u(op.coeffs.mapped[i]);
      for (int k = 0; k < op.size(); ++k) exact[k] = lap(op.coeffs.mapped[mesh->interior[k]]);
      errs.push_back(op.norm(op.apply_laplacian_full(all) - exact));
      if (d.kind == DomainKind::Rectangle) {
        d.n1 = d.n2 = 2 * d.n1 + 1;
      } else {
        d.n1 *= 2;
        d.n2 *= 2;
      }
    }
    const double slope = std::log2(errs[2] / errs[3]);
    EXPECT_GE(slope, 1.8) << key << " errors " << errs[0] << " " << errs[1] << " " << errs[2] << " " << errs[3];
  }
}
