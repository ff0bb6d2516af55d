#include <gtest/gtest.h>

#include <cmath>
#include <vector>

#include "oracles.hpp"
#include "velcro/geometry.hpp"

using namespace velcro;

namespace {

std::vector<SurfaceCurve> assorted_curves() {
  std::vector<SurfaceCurve> out{
      SurfaceCurve(FlatSurface{0.0}, 50.0),
      SurfaceCurve(FlatSurface{deg_to_rad(-40.0)}, 50.0),
      SurfaceCurve(ArcSurface{25.0, 0.0, -1}, 50.0),
      SurfaceCurve(ArcSurface{20.0, deg_to_rad(30.0), 1}, 50.0),
      SurfaceCurve(CornerSurface{10.0, 0.5, 0.0, -1}, 50.0),
      SurfaceCurve(CornerSurface{4.0, 0.3, deg_to_rad(-55.0), 1}, 50.0),
  };
  for (ShapeKind k : {ShapeKind::Flat, ShapeKind::Arc, ShapeKind::Corner})
    for (std::uint64_t s = 1; s <= 5; ++s) out.push_back(sample_curve(k, s * 7919));
  return out;
}

}  // namespace

TEST(Geometry, FlatPoints) {
  const SurfaceCurve flat(FlatSurface{0.0}, 50.0);
  EXPECT_NEAR(flat.point_at(10.0).x(), 10.0, 1e-12);
  EXPECT_NEAR(flat.point_at(10.0).y(), 0.0, 1e-12);

  const SurfaceCurve tilted(FlatSurface{kPi / 3.0}, 50.0);
  EXPECT_NEAR(tilted.point_at(2.0).x(), 1.0, 1e-12);
  EXPECT_NEAR(tilted.point_at(2.0).y(), 1.7320508, 1e-7);
}

TEST(Geometry, ArcQuarterMatchesIntegratedTangent) {
  const SurfaceCurve arc(ArcSurface{25.0, 0.0, -1}, 50.0);
  const double ell = 25.0 * kHalfPi;
  const Point2 p = arc.point_at(ell);
  EXPECT_NEAR(p.x(), 25.0, 1e-9);
  EXPECT_NEAR(p.y(), -25.0, 1e-9);

  const Point2 q = oracle::integrate_tangent([](double s) { return -s / 25.0; }, ell);
  EXPECT_NEAR(q.x(), 25.0, 1e-9);
  EXPECT_NEAR(q.y(), -25.0, 1e-9);
}

TEST(Geometry, TangentExamples) {
  EXPECT_DOUBLE_EQ(SurfaceCurve(FlatSurface{0.5}, 50.0).tangent_at(30.0), 0.5);

  const SurfaceCurve arc(ArcSurface{25.0, 0.0, -1}, 50.0);
  EXPECT_NEAR(arc.tangent_at(25.0 * kPi / 4.0), -kPi / 4.0, 1e-12);

  const SurfaceCurve corner(CornerSurface{10.0, 0.5, 0.0, -1}, 50.0);
  EXPECT_NEAR(corner.tangent_at(49.0), -kHalfPi, 1e-12);
}

TEST(Geometry, TangentMatchesFiniteDifference) {
  const double h = 1e-5;
  for (const auto& c : assorted_curves()) {
    const double lead = c.lead_length();
    const double arc_end = lead + c.curved_length();
    for (double ell = h; ell <= c.attached_length() - h; ell += 0.37) {
      if (std::abs(ell - lead) < 2 * h || std::abs(ell - arc_end) < 2 * h) continue;
      const Point2 d = (c.point_at(ell + h) - c.point_at(ell - h)) / (2 * h);
      EXPECT_NEAR(d.norm(), 1.0, 1e-6);
      EXPECT_NEAR(angle_diff(std::atan2(d.y(), d.x()), c.tangent_at(ell)), 0.0, 1e-4)
          << "ell=" << ell;
    }
  }
}

TEST(Geometry, PointMatchesIntegratedTangent) {
  for (const auto& c : assorted_curves()) {
    for (double ell : {0.0, 3.3, 12.5, 27.0, 41.9, 50.0}) {
      const Point2 p = c.point_at(ell);
      const Point2 q = oracle::integrate_tangent([&c](double s) { return c.tangent_at(s); }, ell);
      // Simpson loses order across the corner kinks in curvature.
      EXPECT_NEAR((p - q).norm(), 0.0, 1e-6) << "ell=" << ell;
    }
  }
}

TEST(Geometry, ContinuityAcrossJunctions) {
  for (const auto& c : assorted_curves()) {
    for (double j : {c.lead_length(), c.lead_length() + c.curved_length()}) {
      if (j <= 1e-9 || j >= c.attached_length() - 1e-9) continue;
      EXPECT_LT((c.point_at(j + 1e-9) - c.point_at(j - 1e-9)).norm(), 1e-8);
      EXPECT_LT(std::abs(c.tangent_at(j + 1e-9) - c.tangent_at(j - 1e-9)), 1e-8);
    }
  }
}

TEST(Geometry, CornerTotalTurn) {
  for (int sign : {-1, 1}) {
    const SurfaceCurve c(CornerSurface{7.0, 0.4, 0.3, sign}, 50.0);
    EXPECT_EQ(c.tangent_at(50.0) - c.tangent_at(0.0), sign * kHalfPi);
  }
}

TEST(Geometry, CornerPartition) {
  const SurfaceCurve c(CornerSurface{10.0, 0.5, 0.0, -1}, 50.0);
  const double free = 50.0 - kHalfPi * 10.0;
  EXPECT_NEAR(c.lead_length(), 0.5 * free, 1e-12);
  EXPECT_NEAR(c.curved_length(), kHalfPi * 10.0, 1e-12);
}

TEST(Geometry, StartsAtOrigin) {
  for (const auto& c : assorted_curves()) EXPECT_EQ(c.point_at(0.0), Point2::Zero());
}

TEST(Geometry, OutOfRangeIsDomainError) {
  const SurfaceCurve c(FlatSurface{0.0}, 50.0);
  EXPECT_THROW(c.point_at(-0.1), std::domain_error);
  EXPECT_THROW(c.point_at(50.1), std::domain_error);
  EXPECT_THROW(c.tangent_at(51.0), std::domain_error);
}

TEST(Geometry, InvalidCurvesRejected) {
  EXPECT_THROW(SurfaceCurve(FlatSurface{0.0}, 0.0), ConfigError);
  EXPECT_THROW(SurfaceCurve(ArcSurface{-1.0, 0.0, -1}, 50.0), ConfigError);
  EXPECT_THROW(SurfaceCurve(ArcSurface{10.0, 0.0, 0}, 50.0), ConfigError);
  EXPECT_THROW(SurfaceCurve(CornerSurface{0.0, 0.5, 0.0, -1}, 50.0), ConfigError);
  EXPECT_THROW(SurfaceCurve(CornerSurface{40.0, 0.5, 0.0, -1}, 50.0), ConfigError);
  EXPECT_THROW(parse_shape("blob"), ConfigError);
}

TEST(Geometry, SamplingDeterministic) {
  for (ShapeKind k : {ShapeKind::Flat, ShapeKind::Arc, ShapeKind::Corner}) {
    const SurfaceCurve a = sample_curve(k, 42);
    const SurfaceCurve b = sample_curve(k, 42);
    EXPECT_EQ(a.kind(), k);
    EXPECT_EQ(a.tilt(), b.tilt());
    EXPECT_EQ(a.point_at(33.0), b.point_at(33.0));
  }
}

TEST(Geometry, SamplingRanges) {
  for (std::uint64_t seed = 0; seed < 500; ++seed) {
    const SurfaceCurve f = sample_curve(ShapeKind::Flat, seed);
    EXPECT_GE(f.tilt(), deg_to_rad(-60.0));
    EXPECT_LE(f.tilt(), deg_to_rad(60.0));
    EXPECT_EQ(f.attached_length(), 50.0);

    const auto arc = std::get<ArcSurface>(sample_curve(ShapeKind::Arc, seed).shape());
    EXPECT_GE(arc.radius, 20.0);
    EXPECT_LE(arc.radius, 40.0);
    EXPECT_EQ(arc.turn_sign, -1);

    const auto corner = std::get<CornerSurface>(sample_curve(ShapeKind::Corner, seed).shape());
    EXPECT_GE(corner.corner_radius, 4.0);
    EXPECT_LE(corner.corner_radius, 15.0);
    EXPECT_GE(corner.flat_after_ratio, 0.3);
    EXPECT_LE(corner.flat_after_ratio, 0.7);
  }
}
