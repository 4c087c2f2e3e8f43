#pragma once

// Unit-sphere geometry: coordinates, great-circle arcs, convex hulls and
// point-in-polygon. Everything is computed on unit vectors; longitude
// wraparound only matters when converting from degrees.

#include <optional>
#include <span>
#include <utility>
#include <vector>

#include "geoexpose/error.hpp"

namespace geoexpose {

inline constexpr double kUnitNormTolerance = 1e-9;
/// Angular slack (radians) granted to points on a hull or polygon boundary.
inline constexpr double kContainmentTolerance = 1e-7;
/// Points closer than this (radians) are treated as one point.
inline constexpr double kDedupTolerance = 1e-9;
inline constexpr double kDefaultBoundaryStepDeg = 0.05;

/// Latitude/longitude in degrees. Latitude must be in [-90, 90]; longitude is
/// normalized into (-180, 180].
class GeoPoint {
 public:
  constexpr GeoPoint() = default;
  /// Throws GeometryError on non-finite input or latitude out of range.
  GeoPoint(double lat_deg, double lon_deg);

  double lat() const noexcept { return lat_; }
  double lon() const noexcept { return lon_; }

  friend bool operator==(const GeoPoint&, const GeoPoint&) = default;

 private:
  double lat_ = 0.0;
  double lon_ = 0.0;
};

struct Vec3 {
  double x = 0.0;
  double y = 0.0;
  double z = 0.0;

  friend Vec3 operator+(Vec3 a, Vec3 b) noexcept { return {a.x + b.x, a.y + b.y, a.z + b.z}; }
  friend Vec3 operator-(Vec3 a, Vec3 b) noexcept { return {a.x - b.x, a.y - b.y, a.z - b.z}; }
  friend Vec3 operator*(double s, Vec3 a) noexcept { return {s * a.x, s * a.y, s * a.z}; }
  friend Vec3 operator-(Vec3 a) noexcept { return {-a.x, -a.y, -a.z}; }
  friend bool operator==(const Vec3&, const Vec3&) = default;
};

inline double dot(Vec3 a, Vec3 b) noexcept { return a.x * b.x + a.y * b.y + a.z * b.z; }
inline Vec3 cross(Vec3 a, Vec3 b) noexcept {
  return {a.y * b.z - a.z * b.y, a.z * b.x - a.x * b.z, a.x * b.y - a.y * b.x};
}
double norm(Vec3 v) noexcept;

/// A point on the unit sphere. Construction normalizes.
class UnitVec3 {
 public:
  constexpr UnitVec3() = default;
  /// Throws GeometryError for a (near) zero or non-finite vector.
  static UnitVec3 normalize(Vec3 v);
  /// Same, returning nullopt instead of throwing.
  static std::optional<UnitVec3> try_normalize(Vec3 v) noexcept;

  double x() const noexcept { return v_.x; }
  double y() const noexcept { return v_.y; }
  double z() const noexcept { return v_.z; }
  const Vec3& vec() const noexcept { return v_; }
  operator const Vec3&() const noexcept { return v_; }

  friend bool operator==(const UnitVec3&, const UnitVec3&) = default;

 private:
  explicit constexpr UnitVec3(Vec3 v) : v_(v) {}
  Vec3 v_{1.0, 0.0, 0.0};
};

UnitVec3 geo_to_unit(const GeoPoint& p) noexcept;
GeoPoint unit_to_geo(const UnitVec3& u) noexcept;

/// Central angle in radians, accurate for tiny and near-antipodal angles.
double angle_between(const UnitVec3& a, const UnitVec3& b) noexcept;
/// Point at fraction t along the minor great-circle arc a→b.
UnitVec3 slerp(const UnitVec3& a, const UnitVec3& b, double t) noexcept;

/// Finds a direction c such that dot(c, p) >= min_dot for every p, i.e. an
/// open hemisphere holding all points with some margin. Starts from the
/// normalized vector mean; when that fails, solves the equivalent half-plane
/// intersection in the tangent plane.
std::optional<UnitVec3> find_hemisphere_center(std::span<const UnitVec3> points,
                                               double min_dot = 1e-9);

/// No open hemisphere contains the hull input. `witness()` is a pair of
/// nearly antipodal input points.
class HemisphereViolation : public GeometryError {
 public:
  HemisphereViolation(GeoPoint a, GeoPoint b);
  std::pair<GeoPoint, GeoPoint> witness() const noexcept { return {a_, b_}; }

 private:
  GeoPoint a_, b_;
};

enum class HullKind { point, arc, polygon };

/// Convex hull of a point set confined to an open hemisphere.
///
/// Polygon vertices run counterclockwise seen from outside the sphere, so the
/// interior is on the left of every edge. Arc hulls store their two
/// endpoints; point hulls a single vertex.
class SphericalHull {
 public:
  HullKind kind() const noexcept { return kind_; }
  const std::vector<UnitVec3>& vertices() const noexcept { return vertices_; }
  const UnitVec3& centroid() const noexcept { return centroid_; }
  /// Largest angle from the centroid to a vertex, in radians.
  double radius() const noexcept { return radius_; }

  bool contains(const UnitVec3& p, double tolerance = kContainmentTolerance) const noexcept;
  bool contains(const GeoPoint& p) const noexcept { return contains(geo_to_unit(p)); }

 private:
  friend SphericalHull spherical_convex_hull(std::span<const UnitVec3> points);

  HullKind kind_ = HullKind::point;
  std::vector<UnitVec3> vertices_;
  std::vector<Vec3> edge_normals_;  // unit normals; interior has dot >= 0
  UnitVec3 centroid_;
  double radius_ = 0.0;
};

/// Throws EmptyInput or HemisphereViolation.
SphericalHull spherical_convex_hull(std::span<const UnitVec3> points);
SphericalHull spherical_convex_hull(std::span<const GeoPoint> points);

inline bool hull_contains(const SphericalHull& h, const GeoPoint& p) noexcept {
  return h.contains(p);
}

/// Points along every hull edge spaced at most `step_deg` apart, including
/// all vertices. Throws GeometryError when step_deg <= 0.
std::vector<UnitVec3> hull_boundary_points(const SphericalHull& h,
                                           double step_deg = kDefaultBoundaryStepDeg);
std::vector<GeoPoint> hull_boundary_samples(const SphericalHull& h,
                                            double step_deg = kDefaultBoundaryStepDeg);

/// A polygon with holes: rings[0] is the outer ring. Rings are implicitly
/// closed; the closing vertex is not repeated.
struct GeoPolygon {
  std::vector<std::vector<GeoPoint>> rings;
};

/// Throws ValidationError unless every ring has at least three distinct points.
void validate_polygon(const GeoPolygon& poly);

/// A GeoPolygon with precomputed gnomonic coordinates, for repeated queries.
///
/// Edges are great-circle arcs. The polygon must fit in an open hemisphere;
/// inside that hemisphere the gnomonic projection maps those arcs to straight
/// segments, so an even-odd test in the plane is exact.
class PreparedPolygon {
 public:
  /// Throws ValidationError for invalid rings or a polygon wider than a hemisphere.
  explicit PreparedPolygon(const GeoPolygon& poly);

  /// Points on a ring edge (within tolerance) count as inside.
  bool contains(const UnitVec3& p) const noexcept;
  bool contains(const GeoPoint& p) const noexcept { return contains(geo_to_unit(p)); }

  const UnitVec3& cap_center() const noexcept { return center_; }
  /// Angular radius of a cap around cap_center() holding every vertex.
  double cap_radius() const noexcept { return radius_; }

 private:
  struct Pt {
    double u, v;
  };
  std::vector<std::vector<Pt>> rings_;
  UnitVec3 center_;
  Vec3 e1_, e2_;
  double radius_ = 0.0;
  double umin_ = 0, umax_ = 0, vmin_ = 0, vmax_ = 0;
};

bool polygon_contains(const GeoPolygon& poly, const GeoPoint& p);

}  // namespace geoexpose
