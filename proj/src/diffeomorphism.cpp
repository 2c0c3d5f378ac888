#include "foldcont/diffeomorphism.hpp"

#include <algorithm>
#include <cmath>

#include "foldcont/errors.hpp"
#include "foldcont/random.hpp"

namespace foldcont {

std::pair<double, double> collar_cutoff(double rho) {
  const double t = (rho - 0.5) / 0.5;
  if (t <= 0.0) return {0.0, 0.0};
  if (t >= 1.0) return {1.0, 0.0};
  // Degree-9 smoothstep: s' = 630 t^4 (1 - t)^4, so s is C^4 at both ends.
  const double t2 = t * t;
  const double s = t2 * t2 * t * (126.0 - 420.0 * t + 540.0 * t2 - 315.0 * t2 * t + 70.0 * t2 * t2);
  const double u = t * (1.0 - t);
  const double ds = 630.0 * u * u * u * u * 2.0;
  return {s, ds};
}

VectorField collar_mode(const ReferenceDomain& domain, int m, bool sine, bool tangential) {
  if (domain.kind == DomainKind::Interval) {
    return {[m](const Point& x) {
              FieldValue out;
              const double xi = 2.0 * x.x() - 1.0;
              const auto [s, ds] = collar_cutoff(std::abs(xi));
              const double sgn = xi < 0.0 ? -1.0 : 1.0;
              const double pw = std::pow(xi, m);
              const double dpw = m == 0 ? 0.0 : m * std::pow(xi, m - 1);
              out.value.x() = s * pw;
              out.jacobian(0, 0) = 2.0 * (ds * sgn * pw + s * dpw);
              return out;
            },
            "collar1d:" + std::to_string(m)};
  }
  Point centre(0.0, 0.0);
  Point scale(1.0, 1.0);
  if (domain.kind == DomainKind::Rectangle) {
    centre = Point(0.5 * domain.lx, 0.5 * domain.ly);
    scale = Point(0.5 * domain.lx, 0.5 * domain.ly);
  }
  const double md = m;
  return {[=](const Point& x) {
            FieldValue out;
            const Point xi((x.x() - centre.x()) / scale.x(), (x.y() - centre.y()) / scale.y());
            const double rho = xi.norm();
            const auto [s, ds] = collar_cutoff(rho);
            if (s == 0.0 && ds == 0.0) return out;
            const double th = std::atan2(xi.y(), xi.x());
            const double trig = sine ? std::sin(md * th) : std::cos(md * th);
            const double dtrig = sine ? md * std::cos(md * th) : -md * std::sin(md * th);
            // F = a e_rho + b e_theta in xi coordinates.
            double a = 0.0, a_r = 0.0, a_t = 0.0, b = 0.0, b_r = 0.0, b_t = 0.0;
            if (tangential) {
              b = s * trig;
              b_r = ds * trig;
              b_t = s * dtrig;
            } else {
              a = s * trig;
              a_r = ds * trig;
              a_t = s * dtrig;
            }
            Mat2 polar;
            polar << a_r, (a_t - b) / rho, b_r, (a + b_t) / rho;
            Mat2 rot;
            rot << std::cos(th), -std::sin(th), std::sin(th), std::cos(th);
            const Mat2 dxi = rot * polar * rot.transpose();
            out.value = rot * Point(a, b);
            out.jacobian = dxi * Point(1.0 / scale.x(), 1.0 / scale.y()).asDiagonal();
            return out;
          },
          std::string(tangential ? "tangential:" : "normal:") + (sine ? "sin" : "cos") + std::to_string(m)};
}

VectorField constant_field(const Point& c) {
  return {[c](const Point&) {
            FieldValue out;
            out.value = c;
            return out;
          },
          "constant"};
}

int Diffeomorphism::fourier_basis_size(const ReferenceDomain& domain, int n_modes) {
  if (n_modes <= 0) return 0;
  return domain.kind == DomainKind::Interval ? n_modes : 2 * n_modes - 1;
}

Diffeomorphism Diffeomorphism::fourier(const ReferenceDomain& domain, int n_modes, std::vector<double> coeffs) {
  Diffeomorphism h(domain.dimension());
  std::size_t idx = 0;
  auto next = [&]() { return idx < coeffs.size() ? coeffs[idx++] : (++idx, 0.0); };
  for (int m = 0; m < n_modes; ++m) {
    h.add_term(next(), collar_mode(domain, m, false));
    if (domain.kind != DomainKind::Interval && m > 0) h.add_term(next(), collar_mode(domain, m, true));
  }
  return h;
}

Diffeomorphism Diffeomorphism::random_fourier(const ReferenceDomain& domain, std::uint64_t seed,
                                              double amplitude, int n_modes) {
  UniformStream rng(derive_seed(seed, 0));
  std::vector<double> coeffs(static_cast<std::size_t>(fourier_basis_size(domain, n_modes)));
  for (double& c : coeffs) c = rng.next(-amplitude, amplitude);
  return fourier(domain, n_modes, std::move(coeffs));
}

void Diffeomorphism::add_term(double coeff, VectorField field) {
  coeffs_.push_back(coeff);
  fields_.push_back(std::move(field));
}

Diffeomorphism Diffeomorphism::perturbed(const VectorField& direction, double eps) const {
  Diffeomorphism h(dimension_);
  h.inner_ = std::make_shared<const Diffeomorphism>(*this);
  h.add_term(eps, direction);
  return h;
}

bool Diffeomorphism::is_identity() const {
  const bool outer = std::all_of(coeffs_.begin(), coeffs_.end(), [](double c) { return c == 0.0; });
  return outer && (!inner_ || inner_->is_identity());
}

double Diffeomorphism::max_amplitude() const {
  double m = inner_ ? inner_->max_amplitude() : 0.0;
  for (double c : coeffs_) m = std::max(m, std::abs(c));
  return m;
}

FieldValue Diffeomorphism::map(const Point& x) const {
  FieldValue y;
  if (inner_) {
    y = inner_->map(x);
  } else {
    y.value = x;
    y.jacobian = Mat2::Identity();
  }
  Point disp = Point::Zero();
  Mat2 ddisp = Mat2::Zero();
  for (std::size_t i = 0; i < fields_.size(); ++i) {
    if (coeffs_[i] == 0.0) continue;
    const FieldValue f = fields_[i].eval(y.value);
    disp += coeffs_[i] * f.value;
    ddisp += coeffs_[i] * f.jacobian;
  }
  if (dimension_ == 1) {
    disp.y() = 0.0;
    ddisp(0, 1) = ddisp(1, 0) = ddisp(1, 1) = 0.0;
  }
  FieldValue out;
  out.value = y.value + disp;
  out.jacobian = (Mat2::Identity() + ddisp) * y.jacobian;
  return out;
}

Diffeomorphism parse_diffeomorphism(std::string_view key, const ReferenceDomain& domain) {
  if (key == "none") return Diffeomorphism::identity(domain.dimension());
  constexpr std::string_view prefix = "fourier:";
  if (key.substr(0, prefix.size()) != prefix) {
    throw ConfigError("diffeo: expected 'none' or 'fourier:<seed>:<amplitude>:<n_modes>', got '" +
                      std::string(key) + "'");
  }
  std::string rest(key.substr(prefix.size()));
  std::vector<std::string> parts;
  std::size_t start = 0;
  for (std::size_t pos; (pos = rest.find(':', start)) != std::string::npos; start = pos + 1) {
    parts.push_back(rest.substr(start, pos - start));
  }
  parts.push_back(rest.substr(start));
  if (parts.size() != 3) throw ConfigError("diffeo: fourier needs <seed>:<amplitude>:<n_modes>");
  try {
    std::size_t used = 0;
    const unsigned long long seed = std::stoull(parts[0], &used);
    if (used != parts[0].size()) throw std::invalid_argument("seed");
    const double amplitude = std::stod(parts[1], &used);
    if (used != parts[1].size() || !(amplitude >= 0.0)) throw std::invalid_argument("amplitude");
    const int n_modes = std::stoi(parts[2], &used);
    if (used != parts[2].size() || n_modes < 1) throw std::invalid_argument("n_modes");
    return Diffeomorphism::random_fourier(domain, seed, amplitude, n_modes);
  } catch (const std::invalid_argument& e) {
    throw ConfigError(std::string("diffeo: invalid fourier ") + e.what() + " in '" + std::string(key) + "'");
  } catch (const std::out_of_range&) {
    throw ConfigError("diffeo: value out of range in '" + std::string(key) + "'");
  }
}

}  // namespace foldcont
