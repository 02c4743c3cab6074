#ifndef CURVOPT_FIELDS_HPP
#define CURVOPT_FIELDS_HPP

#include <cmath>
#include <functional>
#include <numbers>
#include <stdexcept>
#include <string>
#include <vector>

#include "curvopt/mesh.hpp"

namespace curvopt {

/// Analytic scalar field with an optional gradient (needed by the
/// convergence studies). Fields are referred to by name in configs.
struct AnalyticField {
  std::string name;
  std::function<double(double, double)> value;
  std::function<Vec2(double, double)> grad;

  bool has_grad() const { return static_cast<bool>(grad); }
  double operator()(double x, double y) const { return value(x, y); }
};

namespace fields {

inline AnalyticField zero() {
  return {"zero", [](double, double) { return 0.0; }, [](double, double) { return Vec2{0, 0}; }};
}

inline AnalyticField constant(double c) {
  return {"constant:" + std::to_string(c), [c](double, double) { return c; },
          [](double, double) { return Vec2{0, 0}; }};
}

/// amp * sin(2 pi x) sin(2 pi y) - "sine on a square" target surface.
inline AnalyticField sine_square(double amp = 1.0) {
  using std::numbers::pi;
  return {amp == 1.0 ? "sine_square" : "sine_square:" + std::to_string(amp),
          [amp](double x, double y) { return amp * std::sin(2 * pi * x) * std::sin(2 * pi * y); },
          [amp](double x, double y) {
            return Vec2{amp * 2 * pi * std::cos(2 * pi * x) * std::sin(2 * pi * y),
                        amp * 2 * pi * std::sin(2 * pi * x) * std::cos(2 * pi * y)};
          }};
}

/// 0.1 exp(-((x-0.5)^2 + (y-0.5)^2)/0.1) - Gaussian bump target.
inline AnalyticField gaussian_bump() {
  return {"gaussian_bump",
          [](double x, double y) {
            const double dx = x - 0.5, dy = y - 0.5;
            return 0.1 * std::exp(-(dx * dx + dy * dy) / 0.1);
          },
          [](double x, double y) {
            const double dx = x - 0.5, dy = y - 0.5;
            const double v = 0.1 * std::exp(-(dx * dx + dy * dy) / 0.1);
            return Vec2{-20.0 * dx * v, -20.0 * dy * v};
          }};
}

/// 0.1 cos(2 pi x) cos(2 pi y) - clover-domain target.
inline AnalyticField cosine_field() {
  using std::numbers::pi;
  return {"cosine_field",
          [](double x, double y) { return 0.1 * std::cos(2 * pi * x) * std::cos(2 * pi * y); },
          [](double x, double y) {
            return Vec2{-0.2 * pi * std::sin(2 * pi * x) * std::cos(2 * pi * y),
                        -0.2 * pi * std::cos(2 * pi * x) * std::sin(2 * pi * y)};
          }};
}

/// -0.1 sin(pi x) cos(2 pi y) - mismatched boundary datum.
inline AnalyticField sine_cos_boundary() {
  using std::numbers::pi;
  return {"sine_cos_boundary",
          [](double x, double y) { return -0.1 * std::sin(pi * x) * std::cos(2 * pi * y); },
          [](double x, double y) {
            return Vec2{-0.1 * pi * std::cos(pi * x) * std::cos(2 * pi * y),
                        0.2 * pi * std::sin(pi * x) * std::sin(2 * pi * y)};
          }};
}

/// sin(pi x) sin(pi y) - the classical Poisson eigenfunction.
inline AnalyticField sine_pi() {
  using std::numbers::pi;
  return {"sine_pi", [](double x, double y) { return std::sin(pi * x) * std::sin(pi * y); },
          [](double x, double y) {
            return Vec2{pi * std::cos(pi * x) * std::sin(pi * y),
                        pi * std::sin(pi * x) * std::cos(pi * y)};
          }};
}

/// -2 pi^2 sin(pi x) sin(pi y); as tracking target it reduces the adjoint
/// equation at y = 0 to the Poisson problem solved by sine_pi.
inline AnalyticField poisson_sine_load() {
  using std::numbers::pi;
  return {"poisson_sine_load",
          [](double x, double y) { return -2 * pi * pi * std::sin(pi * x) * std::sin(pi * y); },
          [](double x, double y) {
            return Vec2{-2 * pi * pi * pi * std::cos(pi * x) * std::sin(pi * y),
                        -2 * pi * pi * pi * std::sin(pi * x) * std::cos(pi * y)};
          }};
}

inline AnalyticField linear_xy() {
  return {"linear_xy", [](double x, double y) { return x + y; },
          [](double, double) { return Vec2{1.0, 1.0}; }};
}

/// Spherical cap of radius R over (0.5, 0.5): y = sqrt(R^2 - |x-c|^2).
/// Its graph has constant mean curvature, -div(grad y / Q(y)) = 2/R.
inline AnalyticField cap_trace(double R = 2.0) {
  return {R == 2.0 ? "cap_trace" : "cap_trace:" + std::to_string(R),
          [R](double x, double y) {
            const double dx = x - 0.5, dy = y - 0.5;
            return std::sqrt(R * R - dx * dx - dy * dy);
          },
          [R](double x, double y) {
            const double dx = x - 0.5, dy = y - 0.5;
            const double v = std::sqrt(R * R - dx * dx - dy * dy);
            return Vec2{-dx / v, -dy / v};
          }};
}

}  // namespace fields

/// Looks a field up by name. "constant:<c>" and "cap_trace:<R>" carry a
/// numeric parameter after the colon.
inline AnalyticField make_field(const std::string& name) {
  if (name == "zero") return fields::zero();
  if (name == "sine_square") return fields::sine_square();
  if (name == "gaussian_bump") return fields::gaussian_bump();
  if (name == "cosine_field") return fields::cosine_field();
  if (name == "sine_cos_boundary") return fields::sine_cos_boundary();
  if (name == "sine_pi") return fields::sine_pi();
  if (name == "poisson_sine_load") return fields::poisson_sine_load();
  if (name == "linear_xy") return fields::linear_xy();
  if (name == "cap_trace") return fields::cap_trace();
  const auto colon = name.find(':');
  if (colon != std::string::npos) {
    const std::string base = name.substr(0, colon);
    try {
      const double param = std::stod(name.substr(colon + 1));
      if (base == "constant") return fields::constant(param);
      if (base == "cap_trace") return fields::cap_trace(param);
      if (base == "sine_square") return fields::sine_square(param);
    } catch (const std::exception&) {
      throw std::invalid_argument("make_field: bad parameter in '" + name + "'");
    }
  }
  throw std::invalid_argument("make_field: unknown field '" + name + "'");
}

inline std::vector<std::string> field_catalog() {
  return {"zero",    "constant:<c>",      "sine_square", "gaussian_bump", "cosine_field",
          "sine_cos_boundary", "sine_pi", "poisson_sine_load", "linear_xy", "cap_trace"};
}

}  // namespace curvopt

#endif  // CURVOPT_FIELDS_HPP
