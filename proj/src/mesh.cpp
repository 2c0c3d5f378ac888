#include "foldcont/mesh.hpp"

#include <charconv>
#include <cmath>
#include <numbers>

#include "foldcont/errors.hpp"
#include "foldcont/format.hpp"

namespace foldcont {
namespace {

constexpr double kPi = std::numbers::pi;

// d/d(rho) at rho = 0 from samples u_m = u(m h), m = 0..4, via a centered
// difference whose ghost value comes from quartic extrapolation.
constexpr double kGhost[5] = {-5.0, 11.0, -10.0, 5.0, -1.0};

int parse_int(std::string_view s, std::string_view what) {
  int value = 0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), value);
  if (ec != std::errc{} || ptr != s.data() + s.size()) {
    throw ConfigError("domain: cannot parse " + std::string(what) + " from '" + std::string(s) + "'");
  }
  return value;
}

double parse_double(std::string_view s, std::string_view what) {
  std::string tmp(s);
  std::size_t used = 0;
  double value = 0.0;
  try {
    value = std::stod(tmp, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used == 0 || used != tmp.size()) {
    throw ConfigError("domain: cannot parse " + std::string(what) + " from '" + tmp + "'");
  }
  return value;
}

std::pair<std::string_view, std::string_view> split2(std::string_view s, char sep, std::string_view what) {
  const auto pos = s.find(sep);
  if (pos == std::string_view::npos) {
    throw ConfigError("domain: expected '" + std::string(1, sep) + "' in " + std::string(what));
  }
  return {s.substr(0, pos), s.substr(pos + 1)};
}

}  // namespace

ReferenceDomain ReferenceDomain::interval(int n) {
  ReferenceDomain d;
  d.kind = DomainKind::Interval;
  d.n1 = n;
  return d;
}

ReferenceDomain ReferenceDomain::rectangle(int nx, int ny, double lx, double ly) {
  ReferenceDomain d;
  d.kind = DomainKind::Rectangle;
  d.n1 = nx;
  d.n2 = ny;
  d.lx = lx;
  d.ly = ly;
  return d;
}

ReferenceDomain ReferenceDomain::disk(int nr, int ntheta) {
  ReferenceDomain d;
  d.kind = DomainKind::Disk;
  d.n1 = nr;
  d.n2 = ntheta;
  return d;
}

double ReferenceDomain::area() const {
  switch (kind) {
    case DomainKind::Interval:
      return 1.0;
    case DomainKind::Rectangle:
      return lx * ly;
    case DomainKind::Disk:
      return kPi;
  }
  return 0.0;
}

void ReferenceDomain::validate() const {
  switch (kind) {
    case DomainKind::Interval:
      if (n1 < 3) throw ConfigError("domain: interval needs at least 3 interior nodes");
      break;
    case DomainKind::Rectangle:
      if (n1 < 3 || n2 < 3) throw ConfigError("domain: rectangle needs at least 3 interior nodes per axis");
      if (!(lx > 0.0) || !(ly > 0.0)) throw ConfigError("domain: rectangle side lengths must be positive");
      break;
    case DomainKind::Disk:
      // The boundary normal stencil reaches four rings inward.
      if (n1 < 4) throw ConfigError("domain: disk needs at least 4 radial intervals");
      if (n2 < 4) throw ConfigError("domain: disk needs at least 4 angular nodes");
      break;
  }
}

std::string ReferenceDomain::key() const {
  switch (kind) {
    case DomainKind::Interval:
      return "interval:" + std::to_string(n1);
    case DomainKind::Rectangle:
      return "rect:" + std::to_string(n1) + "x" + std::to_string(n2) + ":" + format_real(lx) + "x" +
             format_real(ly);
    case DomainKind::Disk:
      return "disk:" + std::to_string(n1) + "x" + std::to_string(n2);
  }
  return {};
}

ReferenceDomain parse_domain(std::string_view key) {
  const auto [kind, rest] = split2(key, ':', key);
  ReferenceDomain d;
  if (kind == "interval") {
    d = ReferenceDomain::interval(parse_int(rest, "node count"));
  } else if (kind == "rect") {
    const auto [res, lengths] = split2(rest, ':', key);
    const auto [nx, ny] = split2(res, 'x', key);
    const auto [lx, ly] = split2(lengths, 'x', key);
    d = ReferenceDomain::rectangle(parse_int(nx, "nx"), parse_int(ny, "ny"), parse_double(lx, "lx"),
                                   parse_double(ly, "ly"));
  } else if (kind == "disk") {
    const auto [nr, nt] = split2(rest, 'x', key);
    d = ReferenceDomain::disk(parse_int(nr, "nr"), parse_int(nt, "ntheta"));
  } else {
    throw ConfigError("domain: unknown kind '" + std::string(kind) + "'");
  }
  d.validate();
  return d;
}

int Mesh::node_polar(int ring, int k) const {
  if (ring == 0) return 0;
  const int nt = domain.n2;
  k %= nt;
  if (k < 0) k += nt;
  return 1 + (ring - 1) * nt + k;
}

Vector Mesh::extend(const Vector& interior_values, double boundary_value) const {
  Vector all = Vector::Constant(num_nodes(), boundary_value);
  for (int u = 0; u < num_unknowns(); ++u) all[interior[u]] = interior_values[u];
  return all;
}

Vector Mesh::restrict_to_interior(const Vector& all_values) const {
  Vector out(num_unknowns());
  for (int u = 0; u < num_unknowns(); ++u) out[u] = all_values[interior[u]];
  return out;
}

Mesh build_mesh(const ReferenceDomain& domain) {
  domain.validate();
  Mesh mesh;
  mesh.domain = domain;

  auto ghost_stencil = [](auto node_at, double h, double sign) {
    std::vector<StencilEntry> st;
    for (int m = 0; m < 5; ++m) st.push_back({node_at(m), sign * kGhost[m] / (2.0 * h)});
    return st;
  };

  switch (domain.kind) {
    case DomainKind::Interval: {
      const int n = domain.n1;
      mesh.h1 = 1.0 / (n + 1);
      for (int i = 0; i <= n + 1; ++i) {
        mesh.nodes.emplace_back(i * mesh.h1, 0.0);
        const bool bnd = i == 0 || i == n + 1;
        mesh.ref_weights.push_back(bnd ? 0.5 * mesh.h1 : mesh.h1);
        (bnd ? mesh.boundary : mesh.interior).push_back(i);
      }
      // Outward derivative = -(d/d rho) where rho points inward.
      mesh.boundary_table.push_back({0, Point(-1.0, 0.0), 1.0,
                                     ghost_stencil([](int m) { return m; }, mesh.h1, -1.0)});
      mesh.boundary_table.push_back({n + 1, Point(1.0, 0.0), 1.0,
                                     ghost_stencil([n](int m) { return n + 1 - m; }, mesh.h1, -1.0)});
      break;
    }
    case DomainKind::Rectangle: {
      const int nx = domain.n1;
      const int ny = domain.n2;
      mesh.h1 = domain.lx / (nx + 1);
      mesh.h2 = domain.ly / (ny + 1);
      for (int j = 0; j <= ny + 1; ++j) {
        for (int i = 0; i <= nx + 1; ++i) {
          const int id = mesh.node_rect(i, j);
          mesh.nodes.emplace_back(i * mesh.h1, j * mesh.h2);
          const bool bx = i == 0 || i == nx + 1;
          const bool by = j == 0 || j == ny + 1;
          mesh.ref_weights.push_back((bx ? 0.5 : 1.0) * mesh.h1 * (by ? 0.5 : 1.0) * mesh.h2);
          if (!bx && !by) {
            mesh.interior.push_back(id);
            continue;
          }
          mesh.boundary.push_back(id);
          BoundaryNode bn;
          bn.node = id;
          Point nrm(0.0, 0.0);
          double arc = 0.0;
          auto add = [&](const std::vector<StencilEntry>& st, double factor) {
            for (const auto& e : st) bn.d_normal.push_back({e.node, factor * e.coeff});
          };
          std::vector<StencilEntry> sx;
          std::vector<StencilEntry> sy;
          if (bx) {
            const int dir = i == 0 ? 1 : -1;
            nrm.x() = -dir;
            sx = ghost_stencil([&](int m) { return mesh.node_rect(i + dir * m, j); }, mesh.h1, -1.0);
            arc += by ? 0.5 * mesh.h2 : mesh.h2;
          }
          if (by) {
            const int dir = j == 0 ? 1 : -1;
            nrm.y() = -dir;
            sy = ghost_stencil([&](int m) { return mesh.node_rect(i, j + dir * m); }, mesh.h2, -1.0);
            arc += bx ? 0.5 * mesh.h1 : mesh.h1;
          }
          const double len = nrm.norm();
          nrm /= len;
          // Each one-sided stencil gives the derivative along its own axis normal.
          add(sx, std::abs(nrm.x()));
          add(sy, std::abs(nrm.y()));
          bn.normal = nrm;
          bn.arc_weight = arc;
          mesh.boundary_table.push_back(std::move(bn));
        }
      }
      break;
    }
    case DomainKind::Disk: {
      const int nr = domain.n1;
      const int nt = domain.n2;
      mesh.h1 = 1.0 / nr;
      mesh.h2 = 2.0 * kPi / nt;
      const double dr = mesh.h1;
      mesh.nodes.emplace_back(0.0, 0.0);
      mesh.ref_weights.push_back(kPi * dr * dr / 4.0);
      mesh.interior.push_back(0);
      for (int j = 1; j <= nr; ++j) {
        const double r = j * dr;
        for (int k = 0; k < nt; ++k) {
          const double th = k * mesh.h2;
          const int id = mesh.node_polar(j, k);
          mesh.nodes.emplace_back(r * std::cos(th), r * std::sin(th));
          if (j < nr) {
            mesh.ref_weights.push_back(r * dr * mesh.h2);
            mesh.interior.push_back(id);
          } else {
            const double inner = 1.0 - 0.5 * dr;
            mesh.ref_weights.push_back(kPi * (1.0 - inner * inner) / nt);
            mesh.boundary.push_back(id);
            mesh.boundary_table.push_back(
                {id, Point(std::cos(th), std::sin(th)), mesh.h2,
                 ghost_stencil([&, k](int m) { return mesh.node_polar(nr - m, k); }, dr, -1.0)});
          }
        }
      }
      break;
    }
  }

  mesh.unknown_of_node.assign(mesh.nodes.size(), -1);
  for (int u = 0; u < static_cast<int>(mesh.interior.size()); ++u) mesh.unknown_of_node[mesh.interior[u]] = u;
  return mesh;
}

std::vector<Point> reference_gradient(const Mesh& mesh, const Vector& v) {
  std::vector<Point> grad(mesh.nodes.size(), Point::Zero());
  auto ghost = [&](auto node_at, double h) {
    double d = 0.0;
    for (int m = 0; m < 5; ++m) d += kGhost[m] * v[node_at(m)];
    return d / (2.0 * h);
  };
  const ReferenceDomain& dom = mesh.domain;
  switch (dom.kind) {
    case DomainKind::Interval: {
      const int n = dom.n1;
      const double h = mesh.h1;
      for (int i = 1; i <= n; ++i) grad[i].x() = (v[i + 1] - v[i - 1]) / (2.0 * h);
      grad[0].x() = ghost([](int m) { return m; }, h);
      grad[n + 1].x() = -ghost([n](int m) { return n + 1 - m; }, h);
      break;
    }
    case DomainKind::Rectangle: {
      const int nx = dom.n1;
      const int ny = dom.n2;
      for (int j = 0; j <= ny + 1; ++j) {
        for (int i = 0; i <= nx + 1; ++i) {
          Point g;
          if (i == 0) {
            g.x() = ghost([&](int m) { return mesh.node_rect(m, j); }, mesh.h1);
          } else if (i == nx + 1) {
            g.x() = -ghost([&](int m) { return mesh.node_rect(nx + 1 - m, j); }, mesh.h1);
          } else {
            g.x() = (v[mesh.node_rect(i + 1, j)] - v[mesh.node_rect(i - 1, j)]) / (2.0 * mesh.h1);
          }
          if (j == 0) {
            g.y() = ghost([&](int m) { return mesh.node_rect(i, m); }, mesh.h2);
          } else if (j == ny + 1) {
            g.y() = -ghost([&](int m) { return mesh.node_rect(i, ny + 1 - m); }, mesh.h2);
          } else {
            g.y() = (v[mesh.node_rect(i, j + 1)] - v[mesh.node_rect(i, j - 1)]) / (2.0 * mesh.h2);
          }
          grad[mesh.node_rect(i, j)] = g;
        }
      }
      break;
    }
    case DomainKind::Disk: {
      const int nr = dom.n1;
      const int nt = dom.n2;
      const double dr = mesh.h1;
      const double dth = mesh.h2;
      // Pole: first Fourier mode of ring 1.
      double gx = 0.0;
      double gy = 0.0;
      for (int k = 0; k < nt; ++k) {
        gx += v[mesh.node_polar(1, k)] * std::cos(k * dth);
        gy += v[mesh.node_polar(1, k)] * std::sin(k * dth);
      }
      grad[0] = Point(gx, gy) * (2.0 / (nt * dr));
      for (int j = 1; j <= nr; ++j) {
        const double r = j * dr;
        for (int k = 0; k < nt; ++k) {
          double d_r = 0.0;
          if (j < nr) {
            d_r = (v[mesh.node_polar(j + 1, k)] - v[mesh.node_polar(j - 1, k)]) / (2.0 * dr);
          } else {
            d_r = -ghost([&](int m) { return mesh.node_polar(nr - m, k); }, dr);
          }
          const double d_t =
              (v[mesh.node_polar(j, k + 1)] - v[mesh.node_polar(j, k - 1)]) / (2.0 * dth) / r;
          const double c = std::cos(k * dth);
          const double s = std::sin(k * dth);
          grad[mesh.node_polar(j, k)] = Point(c * d_r - s * d_t, s * d_r + c * d_t);
        }
      }
      break;
    }
  }
  return grad;
}

Vector normal_derivative(const Mesh& mesh, const Vector& field_all) {
  Vector out(mesh.boundary_table.size());
  for (std::size_t b = 0; b < mesh.boundary_table.size(); ++b) {
    double d = 0.0;
    for (const auto& e : mesh.boundary_table[b].d_normal) d += e.coeff * field_all[e.node];
    out[static_cast<Eigen::Index>(b)] = d;
  }
  return out;
}

}  // namespace foldcont
