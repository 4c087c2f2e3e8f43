#include "geoexpose/sphere.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>

namespace geoexpose {

namespace {

constexpr double kDegToRad = std::numbers::pi / 180.0;
constexpr double kRadToDeg = 180.0 / std::numbers::pi;

// Minimum dot product with the projection center for polygon vertices. Keeps
// gnomonic coordinates bounded (about 89.9 degrees from the center).
constexpr double kPolygonHorizonDot = 1e-3;

void tangent_basis(const Vec3& c, Vec3& e1, Vec3& e2) {
  Vec3 ref = std::fabs(c.z) < 0.9 ? Vec3{0.0, 0.0, 1.0} : Vec3{1.0, 0.0, 0.0};
  e1 = UnitVec3::normalize(cross(ref, c)).vec();
  e2 = cross(c, e1);  // (e1, e2, c) is right-handed
}

std::string describe(const GeoPoint& p) {
  std::ostringstream os;
  os << "(" << p.lat() << ", " << p.lon() << ")";
  return os.str();
}

double cross2(double ax, double ay, double bx, double by) { return ax * by - ay * bx; }

}  // namespace

GeoPoint::GeoPoint(double lat_deg, double lon_deg) {
  if (!std::isfinite(lat_deg) || !std::isfinite(lon_deg)) {
    throw GeometryError("non-finite coordinate");
  }
  if (lat_deg < -90.0 || lat_deg > 90.0) {
    throw GeometryError("latitude " + std::to_string(lat_deg) + " outside [-90, 90]");
  }
  double lon = std::fmod(lon_deg, 360.0);
  if (lon <= -180.0) lon += 360.0;
  if (lon > 180.0) lon -= 360.0;
  lat_ = lat_deg;
  lon_ = lon;
}

double norm(Vec3 v) noexcept { return std::sqrt(dot(v, v)); }

std::optional<UnitVec3> UnitVec3::try_normalize(Vec3 v) noexcept {
  double n = norm(v);
  if (!std::isfinite(n) || n < 1e-300) return std::nullopt;
  return UnitVec3(Vec3{v.x / n, v.y / n, v.z / n});
}

UnitVec3 UnitVec3::normalize(Vec3 v) {
  auto u = try_normalize(v);
  if (!u) throw GeometryError("cannot normalize a zero or non-finite vector");
  return *u;
}

UnitVec3 geo_to_unit(const GeoPoint& p) noexcept {
  double lat = p.lat() * kDegToRad;
  double lon = p.lon() * kDegToRad;
  double c = std::cos(lat);
  return *UnitVec3::try_normalize({c * std::cos(lon), c * std::sin(lon), std::sin(lat)});
}

GeoPoint unit_to_geo(const UnitVec3& u) noexcept {
  double lat = std::atan2(u.z(), std::hypot(u.x(), u.y())) * kRadToDeg;
  double lon = std::atan2(u.y(), u.x()) * kRadToDeg;
  return GeoPoint(std::clamp(lat, -90.0, 90.0), lon);
}

double angle_between(const UnitVec3& a, const UnitVec3& b) noexcept {
  return std::atan2(norm(cross(a, b)), dot(a, b));
}

UnitVec3 slerp(const UnitVec3& a, const UnitVec3& b, double t) noexcept {
  double theta = angle_between(a, b);
  if (theta < 1e-12) return a;
  double s = std::sin(theta);
  double wa = std::sin((1.0 - t) * theta) / s;
  double wb = std::sin(t * theta) / s;
  return UnitVec3::try_normalize(wa * a.vec() + wb * b.vec()).value_or(a);
}

std::optional<UnitVec3> find_hemisphere_center(std::span<const UnitVec3> points,
                                               double min_dot) {
  if (points.empty()) return std::nullopt;
  Vec3 sum;
  for (const auto& p : points) sum = sum + p.vec();
  const UnitVec3 base = UnitVec3::try_normalize(sum).value_or(points.front());

  auto margin = [&](const UnitVec3& c) {
    double m = 2.0;
    for (const auto& p : points) m = std::min(m, dot(c, p));
    return m;
  };
  if (margin(base) >= min_dot) return base;

  // Directions c = base + u*e1 + v*e2 with dot(c, p) > 0 for every p form a
  // convex region of the (u, v) plane: intersect the half-planes by clipping
  // a large square, then average the surviving corners back on the sphere.
  Vec3 e1, e2;
  tangent_basis(base, e1, e2);
  constexpr double kExtent = 1e4;
  struct Pt {
    double u, v;
  };
  std::vector<Pt> region = {{-kExtent, -kExtent}, {kExtent, -kExtent}, {kExtent, kExtent},
                            {-kExtent, kExtent}};
  std::vector<Pt> next;
  for (const auto& p : points) {
    const double a = dot(p, e1), b = dot(p, e2), d = dot(p, base.vec());
    auto value = [&](const Pt& q) { return a * q.u + b * q.v + d; };
    next.clear();
    for (std::size_t i = 0; i < region.size(); ++i) {
      const Pt& cur = region[i];
      const Pt& nxt = region[(i + 1) % region.size()];
      double fc = value(cur), fn = value(nxt);
      if (fc > 0.0) next.push_back(cur);
      if ((fc > 0.0) != (fn > 0.0)) {
        double t = fc / (fc - fn);
        next.push_back({cur.u + t * (nxt.u - cur.u), cur.v + t * (nxt.v - cur.v)});
      }
    }
    region.swap(next);
    if (region.size() < 3) return std::nullopt;
  }

  Vec3 acc;
  for (const auto& q : region) {
    acc = acc + UnitVec3::normalize(base.vec() + q.u * e1 + q.v * e2).vec();
  }
  auto c = UnitVec3::try_normalize(acc);
  if (!c || margin(*c) < min_dot) return std::nullopt;
  return c;
}

HemisphereViolation::HemisphereViolation(GeoPoint a, GeoPoint b)
    : GeometryError("points do not fit in an open hemisphere; near-antipodal pair " +
                    describe(a) + " and " + describe(b)),
      a_(a),
      b_(b) {}

bool SphericalHull::contains(const UnitVec3& p, double tolerance) const noexcept {
  switch (kind_) {
    case HullKind::point:
      return angle_between(vertices_[0], p) <= tolerance;
    case HullKind::arc: {
      const Vec3& n = edge_normals_[0];
      if (dot(p, centroid_) <= 0.0) return false;
      if (std::fabs(dot(n, p)) > tolerance) return false;
      return dot(cross(vertices_[0], p), n) >= -tolerance &&
             dot(cross(p, vertices_[1]), n) >= -tolerance;
    }
    case HullKind::polygon:
      if (dot(p, centroid_) <= 0.0) return false;
      for (const auto& n : edge_normals_) {
        if (dot(n, p) < -tolerance) return false;
      }
      return true;
  }
  return false;
}

SphericalHull spherical_convex_hull(std::span<const UnitVec3> input) {
  if (input.empty()) throw EmptyInput();

  std::vector<UnitVec3> pts(input.begin(), input.end());
  std::sort(pts.begin(), pts.end(), [](const UnitVec3& a, const UnitVec3& b) {
    if (a.x() != b.x()) return a.x() < b.x();
    if (a.y() != b.y()) return a.y() < b.y();
    return a.z() < b.z();
  });
  std::vector<UnitVec3> unique;
  unique.reserve(pts.size());
  for (const auto& p : pts) {
    if (unique.empty() || angle_between(unique.back(), p) > kDedupTolerance) unique.push_back(p);
  }

  SphericalHull hull;
  if (unique.size() == 1) {
    hull.kind_ = HullKind::point;
    hull.vertices_ = unique;
    hull.centroid_ = unique[0];
    return hull;
  }

  auto center = find_hemisphere_center(unique, 1e-9);
  if (!center) {
    Vec3 sum;
    for (const auto& p : unique) sum = sum + p.vec();
    UnitVec3 c = UnitVec3::try_normalize(sum).value_or(unique[0]);
    auto argmin = [&](const UnitVec3& ref) {
      return *std::min_element(unique.begin(), unique.end(),
                               [&](const UnitVec3& a, const UnitVec3& b) {
                                 return dot(ref, a) < dot(ref, b);
                               });
    };
    UnitVec3 a = argmin(c);
    UnitVec3 b = argmin(a);
    throw HemisphereViolation(unit_to_geo(a), unit_to_geo(b));
  }

  Vec3 e1, e2;
  tangent_basis(*center, e1, e2);
  struct Projected {
    double u, v;
    std::size_t idx;
  };
  std::vector<Projected> proj;
  proj.reserve(unique.size());
  for (std::size_t i = 0; i < unique.size(); ++i) {
    double d = dot(unique[i], *center);
    proj.push_back({dot(unique[i], e1) / d, dot(unique[i], e2) / d, i});
  }
  std::sort(proj.begin(), proj.end(), [](const Projected& a, const Projected& b) {
    return a.u != b.u ? a.u < b.u : a.v < b.v;
  });

  // Andrew's monotone chain; collinear points are dropped.
  std::vector<Projected> chain(2 * proj.size());
  std::size_t k = 0;
  auto turn = [](const Projected& o, const Projected& a, const Projected& b) {
    return cross2(a.u - o.u, a.v - o.v, b.u - o.u, b.v - o.v);
  };
  for (const auto& p : proj) {
    while (k >= 2 && turn(chain[k - 2], chain[k - 1], p) <= 0.0) --k;
    chain[k++] = p;
  }
  for (std::size_t i = proj.size() - 1, lower = k + 1; i-- > 0;) {
    while (k >= lower && turn(chain[k - 2], chain[k - 1], proj[i]) <= 0.0) --k;
    chain[k++] = proj[i];
  }
  chain.resize(k - 1);

  std::vector<UnitVec3> ring;
  ring.reserve(chain.size());
  for (const auto& c : chain) ring.push_back(unique[c.idx]);

  hull.centroid_ = *center;

  // Collinear input (all on one great circle) degenerates to an arc between
  // the two extreme points.
  auto farthest = [&](const UnitVec3& from) {
    return *std::max_element(ring.begin(), ring.end(), [&](const UnitVec3& a, const UnitVec3& b) {
      return angle_between(from, a) < angle_between(from, b);
    });
  };
  UnitVec3 end_b = farthest(ring[0]);
  UnitVec3 end_a = farthest(end_b);
  Vec3 arc_normal = UnitVec3::normalize(cross(end_a, end_b)).vec();
  bool collinear = ring.size() <= 2 || std::all_of(ring.begin(), ring.end(), [&](const UnitVec3& v) {
                     return std::fabs(dot(arc_normal, v)) <= kDedupTolerance;
                   });

  if (collinear) {
    hull.kind_ = HullKind::arc;
    hull.vertices_ = {end_a, end_b};
    hull.edge_normals_ = {arc_normal};
  } else {
    hull.kind_ = HullKind::polygon;
    hull.vertices_ = std::move(ring);
    const auto& vs = hull.vertices_;
    hull.edge_normals_.reserve(vs.size());
    for (std::size_t i = 0; i < vs.size(); ++i) {
      hull.edge_normals_.push_back(
          UnitVec3::normalize(cross(vs[i], vs[(i + 1) % vs.size()])).vec());
    }
  }
  for (const auto& v : hull.vertices_) {
    hull.radius_ = std::max(hull.radius_, angle_between(hull.centroid_, v));
  }
  return hull;
}

SphericalHull spherical_convex_hull(std::span<const GeoPoint> points) {
  std::vector<UnitVec3> units;
  units.reserve(points.size());
  for (const auto& p : points) units.push_back(geo_to_unit(p));
  return spherical_convex_hull(std::span<const UnitVec3>(units));
}

std::vector<UnitVec3> hull_boundary_points(const SphericalHull& h, double step_deg) {
  if (!(step_deg > 0.0)) throw GeometryError("boundary sampling step must be positive");
  const double step = step_deg * kDegToRad;
  const auto& vs = h.vertices();
  std::vector<UnitVec3> out;
  if (h.kind() == HullKind::point) return {vs[0]};

  auto sample_edge = [&](const UnitVec3& a, const UnitVec3& b) {
    double theta = angle_between(a, b);
    auto segments = static_cast<std::size_t>(std::max(1.0, std::ceil(theta / step - 1e-9)));
    for (std::size_t j = 0; j < segments; ++j) {
      out.push_back(slerp(a, b, static_cast<double>(j) / static_cast<double>(segments)));
    }
  };
  if (h.kind() == HullKind::arc) {
    sample_edge(vs[0], vs[1]);
    out.push_back(vs[1]);
  } else {
    for (std::size_t i = 0; i < vs.size(); ++i) sample_edge(vs[i], vs[(i + 1) % vs.size()]);
  }
  return out;
}

std::vector<GeoPoint> hull_boundary_samples(const SphericalHull& h, double step_deg) {
  auto units = hull_boundary_points(h, step_deg);
  std::vector<GeoPoint> out;
  out.reserve(units.size());
  for (const auto& u : units) out.push_back(unit_to_geo(u));
  return out;
}

void validate_polygon(const GeoPolygon& poly) {
  if (poly.rings.empty()) throw ValidationError("polygon has no rings");
  for (std::size_t r = 0; r < poly.rings.size(); ++r) {
    std::vector<GeoPoint> distinct;
    for (const auto& p : poly.rings[r]) {
      if (std::find(distinct.begin(), distinct.end(), p) == distinct.end()) distinct.push_back(p);
      if (distinct.size() >= 3) break;
    }
    if (distinct.size() < 3) {
      throw ValidationError("polygon ring " + std::to_string(r) +
                            " has fewer than 3 distinct points");
    }
  }
}

PreparedPolygon::PreparedPolygon(const GeoPolygon& poly) {
  validate_polygon(poly);
  std::vector<UnitVec3> all;
  for (const auto& ring : poly.rings) {
    for (const auto& p : ring) all.push_back(geo_to_unit(p));
  }
  auto c = find_hemisphere_center(all, kPolygonHorizonDot);
  if (!c) throw ValidationError("polygon does not fit within a hemisphere");
  center_ = *c;
  tangent_basis(center_, e1_, e2_);

  umin_ = vmin_ = std::numeric_limits<double>::infinity();
  umax_ = vmax_ = -std::numeric_limits<double>::infinity();
  std::size_t i = 0;
  for (const auto& ring : poly.rings) {
    std::vector<Pt> pts;
    pts.reserve(ring.size());
    for (std::size_t j = 0; j < ring.size(); ++j, ++i) {
      const UnitVec3& v = all[i];
      double d = dot(v, center_);
      Pt pt{dot(v, e1_) / d, dot(v, e2_) / d};
      umin_ = std::min(umin_, pt.u);
      umax_ = std::max(umax_, pt.u);
      vmin_ = std::min(vmin_, pt.v);
      vmax_ = std::max(vmax_, pt.v);
      pts.push_back(pt);
      radius_ = std::max(radius_, angle_between(center_, v));
    }
    rings_.push_back(std::move(pts));
  }
}

bool PreparedPolygon::contains(const UnitVec3& p) const noexcept {
  // Gnomonic distances are never shorter than the angles they represent, so a
  // planar slack of kContainmentTolerance stays within the angular tolerance.
  constexpr double eps = kContainmentTolerance;
  double d = dot(p, center_);
  if (d <= 0.0) return false;
  if (angle_between(p, center_) > radius_ + eps) return false;
  double u = dot(p, e1_) / d;
  double v = dot(p, e2_) / d;
  if (u < umin_ - eps || u > umax_ + eps || v < vmin_ - eps || v > vmax_ + eps) return false;

  bool inside = false;
  for (const auto& ring : rings_) {
    const std::size_t n = ring.size();
    for (std::size_t i = 0, j = n - 1; i < n; j = i++) {
      const Pt& a = ring[j];
      const Pt& b = ring[i];
      if (u >= std::min(a.u, b.u) - eps && u <= std::max(a.u, b.u) + eps &&
          v >= std::min(a.v, b.v) - eps && v <= std::max(a.v, b.v) + eps) {
        double du = b.u - a.u, dv = b.v - a.v;
        double len2 = du * du + dv * dv;
        double t = len2 > 0.0 ? std::clamp(((u - a.u) * du + (v - a.v) * dv) / len2, 0.0, 1.0) : 0.0;
        double dx = u - (a.u + t * du), dy = v - (a.v + t * dv);
        if (dx * dx + dy * dy <= eps * eps) return true;
      }
      if ((a.v > v) != (b.v > v)) {
        double x = a.u + (v - a.v) * (b.u - a.u) / (b.v - a.v);
        if (u < x) inside = !inside;
      }
    }
  }
  return inside;
}

bool polygon_contains(const GeoPolygon& poly, const GeoPoint& p) {
  return PreparedPolygon(poly).contains(p);
}

}  // namespace geoexpose
