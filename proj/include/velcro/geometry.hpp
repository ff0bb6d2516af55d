#pragma once

// Attached-surface curves parametrized by arc length.
//
// Every curve starts at the world origin. The tangent angle at arc length ell
// points toward the still-attached part of the strap, so peeling advances the
// hinge in the direction of increasing ell.

#include <Eigen/Core>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <random>
#include <stdexcept>
#include <string>
#include <string_view>
#include <type_traits>
#include <variant>

#include "velcro/angles.hpp"

namespace velcro {

using Point2 = Eigen::Vector2d;

class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

struct FlatSurface {
  double tilt = 0.0;
};

struct ArcSurface {
  double radius = 25.0;
  double tilt = 0.0;
  int turn_sign = -1;
};

/// Flat, then a rounded 90 degree turn, then flat again.
struct CornerSurface {
  double corner_radius = 10.0;
  double flat_after_ratio = 0.5;
  double tilt = 0.0;
  int turn_sign = -1;
};

enum class ShapeKind { Flat, Arc, Corner };

inline std::string_view to_string(ShapeKind k) {
  switch (k) {
    case ShapeKind::Flat: return "flat";
    case ShapeKind::Arc: return "arc";
    case ShapeKind::Corner: return "corner";
  }
  return "?";
}

inline ShapeKind parse_shape(std::string_view name) {
  if (name == "flat" || name == "Flat") return ShapeKind::Flat;
  if (name == "arc" || name == "Arc") return ShapeKind::Arc;
  if (name == "corner" || name == "Corner") return ShapeKind::Corner;
  throw ConfigError("unknown shape kind: " + std::string(name));
}

class SurfaceCurve {
 public:
  using Variant = std::variant<FlatSurface, ArcSurface, CornerSurface>;

  SurfaceCurve(Variant shape, double attached_length)
      : shape_(shape), attached_length_(attached_length) {
    if (!(attached_length > 0.0)) throw ConfigError("attached_length must be positive");
    if (const auto* a = std::get_if<ArcSurface>(&shape_)) {
      if (!(a->radius > 0.0)) throw ConfigError("arc radius must be positive");
      check_turn_sign(a->turn_sign);
    }
    if (const auto* c = std::get_if<CornerSurface>(&shape_)) {
      if (!(c->corner_radius > 0.0)) throw ConfigError("corner radius must be positive");
      if (!(c->flat_after_ratio >= 0.0 && c->flat_after_ratio <= 1.0))
        throw ConfigError("flat_after_ratio must lie in [0, 1]");
      if (!(quarter_arc_length() < attached_length_))
        throw ConfigError("corner arc longer than the attached strap");
      check_turn_sign(c->turn_sign);
    }
  }

  const Variant& shape() const { return shape_; }
  double attached_length() const { return attached_length_; }

  ShapeKind kind() const {
    return std::visit(
        [](const auto& s) {
          using T = std::decay_t<decltype(s)>;
          if constexpr (std::is_same_v<T, FlatSurface>) return ShapeKind::Flat;
          else if constexpr (std::is_same_v<T, ArcSurface>) return ShapeKind::Arc;
          else return ShapeKind::Corner;
        },
        shape_);
  }

  double tilt() const {
    return std::visit([](const auto& s) { return s.tilt; }, shape_);
  }

  /// Length of the leading straight run before the corner arc (0 for arcs,
  /// the full length for flats).
  double lead_length() const {
    if (const auto* c = std::get_if<CornerSurface>(&shape_)) {
      const double free = attached_length_ - quarter_arc_length();
      return free - c->flat_after_ratio * free;
    }
    if (std::holds_alternative<ArcSurface>(shape_)) return 0.0;
    return attached_length_;
  }

  /// Arc length covered by the curved section.
  double curved_length() const {
    if (std::holds_alternative<CornerSurface>(shape_)) return quarter_arc_length();
    if (std::holds_alternative<ArcSurface>(shape_)) return attached_length_;
    return 0.0;
  }

  Point2 point_at(double ell) const {
    check_range(ell);
    const double t0 = tilt();
    const double lead = lead_length();
    const Point2 dir0(std::cos(t0), std::sin(t0));
    if (ell <= lead) return ell * dir0;

    const double radius = turn_radius();
    const int sign = turn_sign();
    const Point2 corner_start = lead * dir0;
    const double n0 = t0 + sign * kHalfPi;
    const Point2 center = corner_start + radius * Point2(std::cos(n0), std::sin(n0));

    const double s = std::min(ell, lead + curved_length()) - lead;
    const double theta = t0 + sign * s / radius;
    const double back = theta - sign * kHalfPi;
    Point2 p = center + radius * Point2(std::cos(back), std::sin(back));
    const double tail = ell - lead - curved_length();
    if (tail > 0.0) p += tail * Point2(std::cos(theta), std::sin(theta));
    return p;
  }

  double tangent_at(double ell) const {
    check_range(ell);
    const double lead = lead_length();
    if (ell <= lead) return tilt();
    const double s = std::min(ell - lead, curved_length());
    return tilt() + turn_sign() * s / turn_radius();
  }

 private:
  static void check_turn_sign(int s) {
    if (s != 1 && s != -1) throw ConfigError("turn_sign must be +1 or -1");
  }

  double quarter_arc_length() const {
    return kHalfPi * std::get<CornerSurface>(shape_).corner_radius;
  }

  double turn_radius() const {
    if (const auto* a = std::get_if<ArcSurface>(&shape_)) return a->radius;
    return std::get<CornerSurface>(shape_).corner_radius;
  }

  int turn_sign() const {
    if (const auto* a = std::get_if<ArcSurface>(&shape_)) return a->turn_sign;
    if (const auto* c = std::get_if<CornerSurface>(&shape_)) return c->turn_sign;
    return 0;
  }

  void check_range(double ell) const {
    if (!(ell >= 0.0 && ell <= attached_length_))
      throw std::domain_error("arc length outside the attached region: " + std::to_string(ell));
  }

  Variant shape_;
  double attached_length_;
};

inline Point2 point_at(const SurfaceCurve& curve, double ell) { return curve.point_at(ell); }
inline double tangent_at(const SurfaceCurve& curve, double ell) { return curve.tangent_at(ell); }

/// Ranges used when drawing random experiment surfaces. Angles in radians.
struct CurveSampling {
  double tilt_min = deg_to_rad(-60.0);
  double tilt_max = deg_to_rad(60.0);
  double arc_radius_min = 20.0;
  double arc_radius_max = 40.0;
  double corner_radius_min = 4.0;
  double corner_radius_max = 15.0;
  double flat_after_min = 0.3;
  double flat_after_max = 0.7;
  int turn_sign = -1;
  double attached_length = 50.0;
};

inline SurfaceCurve sample_curve(ShapeKind shape, std::uint64_t seed,
                                 const CurveSampling& cfg = {}) {
  std::mt19937_64 rng(seed);
  auto uniform = [&rng](double lo, double hi) {
    return std::uniform_real_distribution<double>(lo, hi)(rng);
  };
  const double tilt = uniform(cfg.tilt_min, cfg.tilt_max);
  switch (shape) {
    case ShapeKind::Flat:
      return SurfaceCurve(FlatSurface{tilt}, cfg.attached_length);
    case ShapeKind::Arc: {
      const double radius = uniform(cfg.arc_radius_min, cfg.arc_radius_max);
      return SurfaceCurve(ArcSurface{radius, tilt, cfg.turn_sign}, cfg.attached_length);
    }
    case ShapeKind::Corner: {
      const double radius = uniform(cfg.corner_radius_min, cfg.corner_radius_max);
      const double ratio = uniform(cfg.flat_after_min, cfg.flat_after_max);
      return SurfaceCurve(CornerSurface{radius, ratio, tilt, cfg.turn_sign},
                          cfg.attached_length);
    }
  }
  throw ConfigError("unknown shape kind");
}

}  // namespace velcro
